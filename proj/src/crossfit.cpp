#include "hetdecomp/crossfit.hpp"

#include <algorithm>
#include <numeric>

#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"

namespace hetdecomp {

FoldPlan make_folds(Eigen::Index n, int num_folds, std::uint64_t seed,
                    const std::vector<int>* stratify_labels) {
  if (num_folds < 2) throw Error("make_folds: need K >= 2");
  if (static_cast<Eigen::Index>(num_folds) > n) {
    throw Error("make_folds: K = " + std::to_string(num_folds) +
                " exceeds n = " + std::to_string(n));
  }
  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.fold_of.assign(static_cast<std::size_t>(n), 0);

  const std::vector<int>* labels = stratify_labels;
  if (labels != nullptr) {
    const int num_classes =
        *std::max_element(labels->begin(), labels->end()) + 1;
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(num_classes), 0);
    for (int lab : *labels) counts[static_cast<std::size_t>(lab)]++;
    const bool feasible =
        std::all_of(counts.begin(), counts.end(), [&](Eigen::Index c) {
          return c >= static_cast<Eigen::Index>(num_folds);
        });
    if (!feasible) {
      plan.warnings.push_back(
          "stratification infeasible (a treatment level has fewer "
          "observations than folds); falling back to unstratified folds");
      labels = nullptr;
    }
  }

  auto rng = make_rng(seed, Stream::folds);
  // A single global round-robin over shuffled indices keeps overall fold
  // sizes within 1 of each other; walking label groups in turn additionally
  // balances every class across folds.
  int next_fold = 0;
  auto deal = [&](std::vector<Eigen::Index>& members) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) {
      plan.fold_of[static_cast<std::size_t>(idx)] = next_fold;
      next_fold = (next_fold + 1) % num_folds;
    }
  };
  if (labels == nullptr) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    deal(all);
  } else {
    const int num_classes =
        *std::max_element(labels->begin(), labels->end()) + 1;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((*labels)[static_cast<std::size_t>(i)] == c) members.push_back(i);
      }
      deal(members);
    }
  }
  return plan;
}

namespace {

void floor_and_renormalize(Eigen::MatrixXd& e, double floor,
                           long* clip_count) {
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index t = 0; t < e.cols(); ++t) {
      if (e(i, t) < floor) {
        e(i, t) = floor;
        ++*clip_count;
      }
    }
    e.row(i) /= e.row(i).sum();
  }
}

Eigen::VectorXd take(const Eigen::VectorXd& v,
                     const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  }
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

}  // namespace

CrossFittedNuisances cross_fit(const ObservationTable& table,
                               const FoldPlan& plan,
                               const NuisanceConfig& config) {
  const Eigen::Index n = table.n();
  if (static_cast<Eigen::Index>(plan.fold_of.size()) != n) {
    throw Error("cross_fit: fold plan size mismatch");
  }
  const int levels = table.num_levels();

  CrossFittedNuisances out;
  out.mu_hat.resize(n, levels);
  out.e_hat.resize(n, levels);

  for (int f = 0; f < plan.num_folds; ++f) {
    std::vector<Eigen::Index> train, predict;
    for (Eigen::Index i = 0; i < n; ++i) {
      (plan.fold_of[static_cast<std::size_t>(i)] == f ? predict : train)
          .push_back(i);
    }
    if (predict.empty()) continue;

    std::vector<Eigen::Index> level_count(static_cast<std::size_t>(levels), 0);
    for (auto idx : train) {
      level_count[static_cast<std::size_t>(
          table.t()[static_cast<std::size_t>(idx)])]++;
    }
    for (int t = 0; t < levels; ++t) {
      if (level_count[static_cast<std::size_t>(t)] < 2) {
        throw Error("cross_fit: complement of fold " + std::to_string(f) +
                    " has fewer than 2 observations of treatment " +
                    std::to_string(t));
      }
    }

    const Eigen::MatrixXd x_train = take_rows(table.x(), train);
    const Eigen::MatrixXd x_pred = take_rows(table.x(), predict);

    std::vector<int> t_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      t_train[i] = table.t()[static_cast<std::size_t>(train[i])];
    }
    const Eigen::MatrixXd e_pred =
        config.propensity(x_train, t_train, levels)(x_pred);
    if (e_pred.rows() != x_pred.rows() || e_pred.cols() != levels) {
      throw Error("cross_fit: propensity model returned wrong shape");
    }
    for (std::size_t i = 0; i < predict.size(); ++i) {
      out.e_hat.row(predict[i]) = e_pred.row(static_cast<Eigen::Index>(i));
    }

    for (int t = 0; t < levels; ++t) {
      std::vector<Eigen::Index> members;
      for (auto idx : train) {
        if (table.t()[static_cast<std::size_t>(idx)] == t) members.push_back(idx);
      }
      const Eigen::VectorXd mu_pred =
          config.outcome(take_rows(table.x(), members),
                         take(table.y(), members))(x_pred);
      for (std::size_t i = 0; i < predict.size(); ++i) {
        out.mu_hat(predict[i], t) = mu_pred[static_cast<Eigen::Index>(i)];
      }
    }
  }

  floor_and_renormalize(out.e_hat, config.propensity_floor, &out.clip_count);
  out.pi_hat = table.treatment_shares();
  return out;
}

CrossFittedNuisances full_sample_nuisances(const ObservationTable& table,
                                           const NuisanceConfig& config) {
  const Eigen::Index n = table.n();
  const int levels = table.num_levels();
  CrossFittedNuisances out;
  out.mu_hat.resize(n, levels);

  out.e_hat = config.propensity(table.x(), table.t(), levels)(table.x());
  if (out.e_hat.rows() != n || out.e_hat.cols() != levels) {
    throw Error("full_sample_nuisances: propensity model returned wrong shape");
  }
  for (int t = 0; t < levels; ++t) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (table.t()[static_cast<std::size_t>(i)] == t) members.push_back(i);
    }
    if (members.size() < 2) {
      throw Error("full_sample_nuisances: fewer than 2 observations of "
                  "treatment " +
                  std::to_string(t));
    }
    out.mu_hat.col(t) = config.outcome(take_rows(table.x(), members),
                                       take(table.y(), members))(table.x());
  }
  floor_and_renormalize(out.e_hat, config.propensity_floor, &out.clip_count);
  out.pi_hat = table.treatment_shares();
  return out;
}

CrossFittedNuisances nuisances_from_matrices(const ObservationTable& table,
                                             Eigen::MatrixXd mu,
                                             Eigen::MatrixXd e,
                                             double propensity_floor) {
  const Eigen::Index n = table.n();
  const int levels = table.num_levels();
  if (mu.rows() != n || mu.cols() != levels || e.rows() != n ||
      e.cols() != levels) {
    throw Error("nuisances_from_matrices: matrices must be n x (J+1)");
  }
  CrossFittedNuisances out;
  out.mu_hat = std::move(mu);
  out.e_hat = std::move(e);
  floor_and_renormalize(out.e_hat, propensity_floor, &out.clip_count);
  out.pi_hat = table.treatment_shares();
  return out;
}

}  // namespace hetdecomp
