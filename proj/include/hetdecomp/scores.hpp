#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "hetdecomp/crossfit.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// Decomposition parameters, in the reporting order used throughout.
enum class Parameter { nate = 0, rate = 1, delta = 2 };
constexpr std::array<Parameter, 3> kParameters = {
    Parameter::nate, Parameter::rate, Parameter::delta};
const char* parameter_name(Parameter p);

// AIPW score per treatment level:
//   psi_i[t] = mu_t(X_i) + D_ti (Y_i - mu_t(X_i)) / e_t(X_i).
Eigen::MatrixXd score_apo(const ObservationTable& table,
                          const CrossFittedNuisances& nuis);

// Aggregate score of the binary indicator group:
//   Psi_i = mbar_i + D_i (Y_i - mbar_i) / ebar_i,
// with mbar_i = sum_{t!=0} mu_t e_t / ebar_i and ebar_i = sum_{t!=0} e_t.
Eigen::VectorXd score_aggregate(const ObservationTable& table,
                                const CrossFittedNuisances& nuis);

struct PseudoOutcomes {
  Eigen::VectorXd nate;   // Psi - psi[0]
  Eigen::VectorXd rate;   // sum_{t!=0} pi_t psi[t] / (1 - pi_0) - psi[0]
  Eigen::VectorXd delta;  // Psi - sum_{t!=0} pi_t psi[t] / (1 - pi_0)

  const Eigen::VectorXd& of(Parameter p) const {
    switch (p) {
      case Parameter::nate: return nate;
      case Parameter::rate: return rate;
      default: return delta;
    }
  }
};

// The three pseudo-outcomes share the pi-weighted mixture term, so
// nate - rate - delta vanishes row by row up to rounding.
PseudoOutcomes pseudo_outcomes(const Eigen::MatrixXd& psi_t,
                               const Eigen::VectorXd& psi_agg,
                               const Eigen::VectorXd& pi_hat);

struct ScoreSet {
  Eigen::MatrixXd psi_t;
  Eigen::VectorXd psi_agg;
  PseudoOutcomes pseudo;
  Eigen::VectorXd pi_hat;
};

ScoreSet compute_scores(const ObservationTable& table,
                        const CrossFittedNuisances& nuis);

// Numerical Neyman-orthogonality check on an enumerated population with
// oracle nuisances: the Gateaux derivative of each population-mean score in
// the direction (mu_tilde - mu, e_tilde - e), with pi held at the population
// shares, estimated by central differences over the given step ladder and
// extrapolated to step 0 (Richardson / Neville in h^2).
struct NuisancePerturbation {
  Eigen::MatrixXd mu_tilde;  // n x (J+1)
  Eigen::MatrixXd e_tilde;   // n x (J+1), rows on the simplex
};

struct OrthogonalityResult {
  std::vector<double> steps;
  // derivative[s][p]: central difference at steps[s] for kParameters[p]
  std::vector<std::array<double, 3>> derivative;
  std::array<double, 3> extrapolated;
};

OrthogonalityResult orthogonality_check(const ObservationTable& population,
                                        const Eigen::MatrixXd& mu,
                                        const Eigen::MatrixXd& e,
                                        const NuisancePerturbation& direction,
                                        const std::vector<double>& steps = {
                                            1e-2, 1e-3, 1e-4});

}  // namespace hetdecomp
