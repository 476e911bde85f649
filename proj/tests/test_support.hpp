#pragma once

// Shared fixtures: the enumerated two-group / three-treatment population with
// deterministic potential outcomes used as an exact oracle throughout the
// tests, plus small helpers.

#include <Eigen/Dense>
#include <vector>

#include "hetdecomp/crossfit.hpp"
#include "hetdecomp/table.hpp"

namespace test_support {

// Deterministic potential outcomes y(t) per group x in {0, 1}:
//   y(0) = 0, y(1) = -1, y(2) = +1 for both groups.
// Assignment probabilities:
//   x = 0: (1/2, 1/8, 3/8),  x = 1: (1/2, 3/8, 1/8),  P(x) uniform.
// Exact facts: nATE(0) = +1/2, nATE(1) = -1/2, rATE = 0 in both groups,
// Delta(0) = +1/2, Delta(1) = -1/2, APOs (0, -1, +1).
struct ToyPopulation {
  hetdecomp::ObservationTable table;  // weighted (enumerated) view
  Eigen::MatrixXd mu;                 // oracle outcome means per level
  Eigen::MatrixXd e;                  // oracle propensities per level
};

inline ToyPopulation make_toy_population() {
  const double outcomes[3] = {0.0, -1.0, 1.0};
  const double probs[2][3] = {{0.5, 1.0 / 8.0, 3.0 / 8.0},
                              {0.5, 3.0 / 8.0, 1.0 / 8.0}};
  const Eigen::Index n = 6;
  Eigen::VectorXd y(n);
  std::vector<int> t;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd mu(n, 3);
  Eigen::MatrixXd e(n, 3);
  Eigen::Index row = 0;
  for (int group = 0; group <= 1; ++group) {
    for (int level = 0; level <= 2; ++level) {
      y[row] = outcomes[level];
      t.push_back(level);
      x(row, 0) = group;
      w[row] = 0.5 * probs[group][level];
      for (int s = 0; s <= 2; ++s) {
        mu(row, s) = outcomes[s];
        e(row, s) = probs[group][s];
      }
      ++row;
    }
  }
  hetdecomp::ObservationTable base(std::move(y), std::move(t), std::move(x),
                                   {0});
  return ToyPopulation{base.enumerate_population(w), std::move(mu),
                       std::move(e)};
}

inline hetdecomp::CrossFittedNuisances toy_oracle_nuisances(
    const ToyPopulation& toy) {
  // Direct struct fill keeps the oracle values bit-exact (no floor pass).
  hetdecomp::CrossFittedNuisances nuis;
  nuis.mu_hat = toy.mu;
  nuis.e_hat = toy.e;
  nuis.pi_hat = toy.table.treatment_shares();
  return nuis;
}

}  // namespace test_support
