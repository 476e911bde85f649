#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hetdecomp/table.hpp"

namespace hetdecomp {

enum class NuisanceMode { oracle, parametric, dml };

const char* nuisance_mode_name(NuisanceMode mode);
NuisanceMode parse_nuisance_mode(const std::string& name);

// Simulation design: X uniform on [-1,1]^p; effective treatment drawn from a
// multinomial logit in x_1 with slope logit_coef[t-1] for t = 1..J (class 0
// reference); potential outcomes Y(t) = u + tau 1[t = 1], u standard normal.
struct McDesign {
  Eigen::Index n = 1000;
  int p = 10;
  int J = 2;
  double tau = 10.0;
  std::vector<double> logit_coef = {1.0, 0.0};  // beta_t for t = 1..J
  int reps = 1000;
  int crossfit_folds = 2;
  int cv_folds = 5;
  NuisanceMode mode = NuisanceMode::parametric;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  double level = 0.95;
  int lambda_grid_size = 30;
  double lambda_min_ratio = 1e-3;

  void validate() const;
};

// Conditional treatment probabilities e_t(x1), t = 0..J.
Eigen::VectorXd mc_propensities(const McDesign& design, double x1);
// mu_t = tau * 1[t = 1], constant in x.
Eigen::VectorXd mc_outcome_means(const McDesign& design);

ObservationTable generate_dataset(const McDesign& design,
                                  std::uint64_t rep_seed);

// Population BLP coefficients of the decomposition curves on (1, x1),
// computed by adaptive quadrature against the U[-1,1] density:
//   alpha = E[g(X1)], beta = 3 E[X1 g(X1)].
struct TrueBlpParams {
  std::array<double, 3> alpha{};  // nATE, rATE, Delta order of kParameters
  std::array<double, 3> beta{};
  Eigen::VectorXd pi;             // population treatment shares
};
TrueBlpParams true_blp_params(const McDesign& design, double tol = 1e-9);

struct McResult {
  // [parameter][coefficient]; coefficient 0 = alpha, 1 = beta.
  std::array<std::array<double, 2>, 3> coverage{};
  std::array<std::array<double, 2>, 3> mean_ci_width{};
  int reps_requested = 0;
  int reps_done = 0;
  int reps_failed = 0;
  std::vector<std::string> failure_messages;  // capped
  // Wald test of a zero rATE slope at the 5% level (true under the design).
  double rate_slope_rejection_rate = 0.0;
  double runtime_seconds = 0.0;  // informational; not part of reports
};

// Per rep: simulate, estimate nuisances in the requested mode, build scores,
// regress each pseudo-outcome on (1, x1), and record whether the confidence
// intervals cover the population values. Reps run concurrently with
// rep-derived seeds; results are aggregated in rep order, so the outcome is
// independent of the thread count. Failed reps are counted, never silently
// dropped.
McResult run_study(const McDesign& design);

}  // namespace hetdecomp
