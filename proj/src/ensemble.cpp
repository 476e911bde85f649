#include "hetdecomp/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"

namespace hetdecomp {

namespace {

// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const Eigen::Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    cumsum += u[static_cast<std::size_t>(k)];
    const double candidate =
        (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - candidate > 0.0) {
      theta = candidate;
      support = static_cast<int>(k + 1);
    }
  }
  (void)support;
  for (Eigen::Index j = 0; j < m; ++j) v[j] = std::max(v[j] - theta, 0.0);
  return v;
}

Eigen::VectorXd projected_gradient(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::Index m, double step) {
  // Uniform start: permutation-symmetric inputs keep symmetric weights,
  // which is the documented tie-break for identical members.
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  double f_curr = objective(w);
  for (int iter = 0; iter < 5000; ++iter) {
    Eigen::VectorXd candidate = project_simplex(w - step * gradient(w));
    double f_cand = objective(candidate);
    double local_step = step;
    while (f_cand > f_curr && local_step > 1e-14) {
      local_step *= 0.5;
      candidate = project_simplex(w - local_step * gradient(w));
      f_cand = objective(candidate);
    }
    const double change = (candidate - w).cwiseAbs().maxCoeff();
    w = std::move(candidate);
    f_curr = f_cand;
    if (change < 1e-12) break;
  }
  return w;
}

std::vector<int> stratified_assignment(Eigen::Index n, int folds,
                                       std::uint64_t seed,
                                       const std::vector<int>* labels,
                                       int num_classes) {
  std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
  auto rng = make_rng(seed, Stream::ensemble);
  int next_fold = 0;
  auto deal = [&](std::vector<Eigen::Index>& members) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) {
      fold_of[static_cast<std::size_t>(idx)] = next_fold;
      next_fold = (next_fold + 1) % folds;
    }
  };
  if (labels == nullptr) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    deal(all);
  } else {
    for (int c = 0; c < num_classes; ++c) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((*labels)[static_cast<std::size_t>(i)] == c) members.push_back(i);
      }
      deal(members);
    }
  }
  return fold_of;
}

bool all_columns_identical(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if ((m.col(j) - m.col(0)).cwiseAbs().maxCoeff() > 0.0) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd simplex_least_squares(const Eigen::MatrixXd& member_preds,
                                      const Eigen::VectorXd& y) {
  const Eigen::Index m = member_preds.cols();
  if (m == 0) throw Error("simplex_least_squares: no members");
  if (m == 1) return Eigen::VectorXd::Ones(1);
  if (all_columns_identical(member_preds)) {
    return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  }
  const auto n = static_cast<double>(member_preds.rows());
  const Eigen::MatrixXd gram = member_preds.transpose() * member_preds / n;
  const Eigen::VectorXd cross = member_preds.transpose() * y / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double step = 1.0 / std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  auto objective = [&](const Eigen::VectorXd& w) {
    return 0.5 * w.dot(gram * w) - cross.dot(w);
  };
  auto gradient = [&](const Eigen::VectorXd& w) {
    return (gram * w - cross).eval();
  };
  return projected_gradient(objective, gradient, m, step);
}

Eigen::VectorXd simplex_log_likelihood(const Eigen::MatrixXd& member_probs) {
  const Eigen::Index m = member_probs.cols();
  if (m == 0) throw Error("simplex_log_likelihood: no members");
  if (m == 1) return Eigen::VectorXd::Ones(1);
  if (all_columns_identical(member_probs)) {
    return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  }
  const auto n = static_cast<double>(member_probs.rows());
  auto objective = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd mix =
        (member_probs * w).cwiseMax(1e-300);
    return -mix.array().log().sum() / n;
  };
  auto gradient = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd mix = (member_probs * w).cwiseMax(1e-300);
    return (-(member_probs.array().colwise() / mix.array()).colwise().sum() /
            n)
        .transpose()
        .matrix()
        .eval();
  };
  return projected_gradient(objective, gradient, m, 0.5);
}

Eigen::VectorXd RegressionEnsembleFit::predict(
    const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (weights[static_cast<Eigen::Index>(k)] == 0.0) continue;
    out += weights[static_cast<Eigen::Index>(k)] * models[k](x);
  }
  return out;
}

Eigen::MatrixXd PropensityEnsembleFit::predict_proba(
    const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out;
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (weights[static_cast<Eigen::Index>(k)] == 0.0) continue;
    Eigen::MatrixXd probs = models[k](x);
    if (out.size() == 0) {
      out = weights[static_cast<Eigen::Index>(k)] * probs;
    } else {
      out += weights[static_cast<Eigen::Index>(k)] * probs;
    }
  }
  return out;
}

RegressionEnsembleFit fit_regression_ensemble(
    const std::vector<NamedRegressionLearner>& members,
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int folds,
    std::uint64_t seed) {
  if (members.empty()) throw Error("fit_regression_ensemble: no members");
  if (folds < 2) throw Error("fit_regression_ensemble: need >= 2 folds");
  const Eigen::Index n = x.rows();
  const auto m = static_cast<Eigen::Index>(members.size());

  Eigen::MatrixXd oof(n, m);
  const std::vector<int> fold_of =
      stratified_assignment(n, folds, seed, nullptr, 0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      y_train[static_cast<Eigen::Index>(i)] = y[train[i]];
    }
    Eigen::MatrixXd x_test(static_cast<Eigen::Index>(test.size()), x.cols());
    for (std::size_t i = 0; i < test.size(); ++i) {
      x_test.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::VectorXd pred =
          members[static_cast<std::size_t>(k)].learner(x_train, y_train)(
              x_test);
      for (std::size_t i = 0; i < test.size(); ++i) {
        oof(test[i], k) = pred[static_cast<Eigen::Index>(i)];
      }
    }
  }

  RegressionEnsembleFit fit;
  for (const auto& member : members) fit.member_names.push_back(member.name);
  fit.weights = simplex_least_squares(oof, y);
  for (const auto& member : members) {
    fit.models.push_back(member.learner(x, y));
  }
  return fit;
}

PropensityEnsembleFit fit_propensity_ensemble(
    const std::vector<NamedPropensityLearner>& members,
    const Eigen::MatrixXd& x, const std::vector<int>& labels, int num_classes,
    int folds, std::uint64_t seed) {
  if (members.empty()) throw Error("fit_propensity_ensemble: no members");
  if (folds < 2) throw Error("fit_propensity_ensemble: need >= 2 folds");
  const Eigen::Index n = x.rows();
  const auto m = static_cast<Eigen::Index>(members.size());

  // Out-of-fold probability of each row's observed class, per member.
  Eigen::MatrixXd oof(n, m);
  const std::vector<int> fold_of =
      stratified_assignment(n, folds, seed, &labels, num_classes);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), x.cols());
    std::vector<int> lab_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      lab_train[i] = labels[static_cast<std::size_t>(train[i])];
    }
    Eigen::MatrixXd x_test(static_cast<Eigen::Index>(test.size()), x.cols());
    for (std::size_t i = 0; i < test.size(); ++i) {
      x_test.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::MatrixXd probs =
          members[static_cast<std::size_t>(k)].learner(x_train, lab_train,
                                                       num_classes)(x_test);
      for (std::size_t i = 0; i < test.size(); ++i) {
        oof(test[i], k) =
            probs(static_cast<Eigen::Index>(i),
                  labels[static_cast<std::size_t>(test[i])]);
      }
    }
  }

  PropensityEnsembleFit fit;
  for (const auto& member : members) fit.member_names.push_back(member.name);
  fit.weights = simplex_log_likelihood(oof);
  for (const auto& member : members) {
    fit.models.push_back(member.learner(x, labels, num_classes));
  }
  return fit;
}

RegressionLearner regression_ensemble_learner(
    std::vector<NamedRegressionLearner> members, int folds,
    std::uint64_t seed) {
  return [members = std::move(members), folds, seed](
             const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    auto fit = std::make_shared<RegressionEnsembleFit>(
        fit_regression_ensemble(members, x, y, folds, seed));
    return RegressionModel(
        [fit](const Eigen::MatrixXd& xq) { return fit->predict(xq); });
  };
}

PropensityLearner propensity_ensemble_learner(
    std::vector<NamedPropensityLearner> members, int folds,
    std::uint64_t seed) {
  return [members = std::move(members), folds, seed](
             const Eigen::MatrixXd& x, const std::vector<int>& labels,
             int num_classes) {
    auto fit = std::make_shared<PropensityEnsembleFit>(fit_propensity_ensemble(
        members, x, labels, num_classes, folds, seed));
    return PropensityModel(
        [fit](const Eigen::MatrixXd& xq) { return fit->predict_proba(xq); });
  };
}

}  // namespace hetdecomp
