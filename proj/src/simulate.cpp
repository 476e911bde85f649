#include "hetdecomp/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "hetdecomp/blp.hpp"
#include "hetdecomp/crossfit.hpp"
#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"
#include "hetdecomp/scores.hpp"
#include "hetdecomp/stats.hpp"

namespace hetdecomp {

const char* nuisance_mode_name(NuisanceMode mode) {
  switch (mode) {
    case NuisanceMode::oracle: return "oracle";
    case NuisanceMode::parametric: return "parametric";
    default: return "dml";
  }
}

NuisanceMode parse_nuisance_mode(const std::string& name) {
  if (name == "oracle") return NuisanceMode::oracle;
  if (name == "parametric") return NuisanceMode::parametric;
  if (name == "dml") return NuisanceMode::dml;
  throw Error("unknown nuisance mode '" + name +
              "' (valid modes: oracle, parametric, dml)");
}

void McDesign::validate() const {
  if (n < 10) throw Error("mc design: n too small");
  if (p < 1) throw Error("mc design: p must be >= 1");
  if (J < 1) throw Error("mc design: J must be >= 1");
  if (static_cast<int>(logit_coef.size()) != J) {
    throw Error("mc design: logit_coef must have J entries");
  }
  if (reps < 1) throw Error("mc design: reps must be >= 1");
  if (crossfit_folds < 2) throw Error("mc design: crossfit folds must be >= 2");
  if (!(level > 0.0 && level < 1.0)) throw Error("mc design: level in (0,1)");
}

Eigen::VectorXd mc_propensities(const McDesign& design, double x1) {
  Eigen::VectorXd e(design.J + 1);
  double denom = 1.0;
  for (int t = 1; t <= design.J; ++t) {
    e[t] = std::exp(x1 * design.logit_coef[static_cast<std::size_t>(t - 1)]);
    denom += e[t];
  }
  e[0] = 1.0 / denom;
  for (int t = 1; t <= design.J; ++t) e[t] /= denom;
  return e;
}

Eigen::VectorXd mc_outcome_means(const McDesign& design) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(design.J + 1);
  if (design.J >= 1) mu[1] = design.tau;
  return mu;
}

ObservationTable generate_dataset(const McDesign& design,
                                  std::uint64_t rep_seed) {
  auto rng = make_rng(rep_seed, Stream::simulation);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n = design.n;
  Eigen::MatrixXd x(n, design.p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < design.p; ++j) x(i, j) = uniform(rng);
  }
  std::vector<int> t(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd e = mc_propensities(design, x(i, 0));
    const double draw = u01(rng);
    double cum = 0.0;
    int level = design.J;  // falls through on rounding
    for (int c = 0; c <= design.J; ++c) {
      cum += e[c];
      if (draw < cum) {
        level = c;
        break;
      }
    }
    t[static_cast<std::size_t>(i)] = level;
    const double u = normal(rng);
    y[i] = u + (level == 1 ? design.tau : 0.0);
  }
  return ObservationTable(std::move(y), std::move(t), std::move(x), {0});
}

TrueBlpParams true_blp_params(const McDesign& design, double tol) {
  design.validate();
  TrueBlpParams truth;
  const double half = 0.5;  // U[-1,1] density

  truth.pi.resize(design.J + 1);
  for (int t = 0; t <= design.J; ++t) {
    truth.pi[t] = stats::adaptive_simpson(
        [&](double x) { return half * mc_propensities(design, x)[t]; }, -1.0,
        1.0, tol);
  }
  const double pi1 = design.J >= 1 ? truth.pi[1] : 0.0;
  const double treated = 1.0 - truth.pi[0];

  // Conditional curves; tau attaches to treatment 1 only.
  auto nate_curve = [&](double x) {
    const Eigen::VectorXd e = mc_propensities(design, x);
    return design.tau * e[1] / (1.0 - e[0]);
  };
  auto rate_curve = [&](double) { return design.tau * pi1 / treated; };

  auto blp_of = [&](const std::function<double(double)>& g,
                    double* alpha, double* beta) {
    *alpha = stats::adaptive_simpson(
        [&](double x) { return half * g(x); }, -1.0, 1.0, tol);
    // V[X1] = 1/3 under U[-1,1], E[X1] = 0.
    *beta = 3.0 * stats::adaptive_simpson(
                      [&](double x) { return half * x * g(x); }, -1.0, 1.0,
                      tol);
  };
  double a_n, b_n, a_r, b_r;
  blp_of(nate_curve, &a_n, &b_n);
  blp_of(rate_curve, &a_r, &b_r);
  truth.alpha = {a_n, a_r, a_n - a_r};
  truth.beta = {b_n, b_r, b_n - b_r};
  return truth;
}

namespace {

struct RepOutcome {
  bool ok = false;
  std::string error;
  // [parameter][coefficient]
  std::array<std::array<bool, 2>, 3> covered{};
  std::array<std::array<double, 2>, 3> width{};
  bool rate_slope_rejected = false;
};

CrossFittedNuisances estimate_nuisances(const McDesign& design,
                                        const ObservationTable& table,
                                        std::uint64_t rep_seed) {
  const int levels = table.num_levels();
  switch (design.mode) {
    case NuisanceMode::oracle: {
      const Eigen::Index n = table.n();
      Eigen::MatrixXd mu(n, levels);
      Eigen::MatrixXd e(n, levels);
      const Eigen::VectorXd mu_true = mc_outcome_means(design);
      for (Eigen::Index i = 0; i < n; ++i) {
        mu.row(i) = mu_true.transpose();
        e.row(i) = mc_propensities(design, table.x()(i, 0)).transpose();
      }
      return nuisances_from_matrices(table, std::move(mu), std::move(e));
    }
    case NuisanceMode::parametric: {
      // Correctly specified finite-dimensional models need no cross-fitting:
      // multinomial logit on x_1, per-treatment outcome means.
      NuisanceConfig config;
      config.outcome = mean_learner();
      config.propensity = [](const Eigen::MatrixXd& x,
                             const std::vector<int>& labels, int num_classes) {
        const MultinomialLogitFit fit = fit_multinomial_logit(
            x.col(0), labels, num_classes, 0.0, Penalty::none);
        return PropensityModel([fit](const Eigen::MatrixXd& xq) {
          return fit.predict_proba(xq.col(0));
        });
      };
      return full_sample_nuisances(table, config);
    }
    case NuisanceMode::dml: {
      const FoldPlan plan =
          make_folds(table.n(), design.crossfit_folds,
                     mix_seed(rep_seed, 101), &table.t());
      NuisanceConfig config;
      config.outcome =
          lasso_cv_learner(design.cv_folds, mix_seed(rep_seed, 102),
                           design.lambda_grid_size, design.lambda_min_ratio);
      config.propensity =
          logit_l1_cv_learner(design.cv_folds, mix_seed(rep_seed, 103),
                              design.lambda_grid_size,
                              design.lambda_min_ratio);
      return cross_fit(table, plan, config);
    }
  }
  throw Error("estimate_nuisances: unreachable");
}

RepOutcome run_one_rep(const McDesign& design, const TrueBlpParams& truth,
                       int rep) {
  RepOutcome outcome;
  try {
    const std::uint64_t rep_seed = mix_seed(design.seed, 7777u + static_cast<std::uint64_t>(rep));
    const ObservationTable table = generate_dataset(design, rep_seed);
    const CrossFittedNuisances nuis = estimate_nuisances(design, table, rep_seed);
    const ScoreSet scores = compute_scores(table, nuis);

    BasisSpec spec;
    spec.kind = BasisSpec::Kind::polynomial;
    spec.z_index = 0;
    spec.degree = 1;
    const Basis basis = Basis::build(table, spec);

    for (std::size_t p = 0; p < kParameters.size(); ++p) {
      const BlpFit fit =
          fit_parameter_blp(kParameters[p], scores, table, basis);
      for (int coef = 0; coef < 2; ++coef) {
        const Interval ci = coefficient_interval(fit, coef, design.level);
        const double target = coef == 0 ? truth.alpha[p] : truth.beta[p];
        outcome.covered[p][static_cast<std::size_t>(coef)] =
            ci.lo <= target && target <= ci.hi;
        outcome.width[p][static_cast<std::size_t>(coef)] = ci.hi - ci.lo;
      }
      if (kParameters[p] == Parameter::rate) {
        Eigen::MatrixXd contrast = Eigen::MatrixXd::Zero(1, 2);
        contrast(0, 1) = 1.0;
        const WaldResult wald =
            wald_test(fit, contrast, Eigen::VectorXd::Zero(1));
        outcome.rate_slope_rejected = wald.p_value < 0.05;
      }
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

McResult run_study(const McDesign& design) {
  design.validate();
  const auto start = std::chrono::steady_clock::now();
  const TrueBlpParams truth = true_blp_params(design);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(design.reps));
  int num_threads = design.threads > 0
                        ? design.threads
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (num_threads < 1) num_threads = 1;
  num_threads = std::min(num_threads, design.reps);

  std::atomic<int> next_rep{0};
  auto worker = [&] {
    for (;;) {
      const int rep = next_rep.fetch_add(1);
      if (rep >= design.reps) return;
      outcomes[static_cast<std::size_t>(rep)] = run_one_rep(design, truth, rep);
    }
  };
  if (num_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(num_threads));
    for (int i = 0; i < num_threads; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  McResult result;
  result.reps_requested = design.reps;
  std::array<std::array<long, 2>, 3> hits{};
  std::array<std::array<double, 2>, 3> widths{};
  long rejections = 0;
  for (const RepOutcome& outcome : outcomes) {
    if (!outcome.ok) {
      ++result.reps_failed;
      if (result.failure_messages.size() < 10) {
        result.failure_messages.push_back(outcome.error);
      }
      continue;
    }
    ++result.reps_done;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t c = 0; c < 2; ++c) {
        hits[p][c] += outcome.covered[p][c] ? 1 : 0;
        widths[p][c] += outcome.width[p][c];
      }
    }
    rejections += outcome.rate_slope_rejected ? 1 : 0;
  }
  if (result.reps_done == 0) {
    throw Error("run_study: every repetition failed" +
                (result.failure_messages.empty()
                     ? std::string()
                     : "; first error: " + result.failure_messages.front()));
  }
  const auto done = static_cast<double>(result.reps_done);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t c = 0; c < 2; ++c) {
      result.coverage[p][c] = static_cast<double>(hits[p][c]) / done;
      result.mean_ci_width[p][c] = widths[p][c] / done;
    }
  }
  result.rate_slope_rejection_rate = static_cast<double>(rejections) / done;
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace hetdecomp
