#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hetdecomp/learners.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// K-fold plan: fold_of[i] in 0..num_folds-1, fold sizes differ by at most 1.
struct FoldPlan {
  std::vector<int> fold_of;
  int num_folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Uniform random partition, reproducible from seed. With stratify_labels the
// shuffle happens within label groups so each fold's class shares match the
// sample's within rounding; classes with fewer members than folds trigger an
// unstratified fallback with a warning.
FoldPlan make_folds(Eigen::Index n, int num_folds, std::uint64_t seed,
                    const std::vector<int>* stratify_labels = nullptr);

// Out-of-fold nuisance predictions. Row i is always predicted by models
// trained on the complement of i's fold. e_hat rows are floored at
// `propensity_floor` and renormalized; clip_count records how many entries
// the floor touched. pi_hat holds the (weighted) sample treatment shares.
struct CrossFittedNuisances {
  Eigen::MatrixXd mu_hat;  // n x (J+1)
  Eigen::MatrixXd e_hat;   // n x (J+1), rows strictly positive, sum to 1
  Eigen::VectorXd pi_hat;  // J+1
  long clip_count = 0;
};

struct NuisanceConfig {
  RegressionLearner outcome;
  PropensityLearner propensity;
  double propensity_floor = 1e-6;
};

// For each fold f and treatment t, fits the outcome model on the t-subsample
// of the complement and the propensity model on the whole complement, then
// predicts on fold f. Every complement must contain >= 2 observations of
// every treatment level.
CrossFittedNuisances cross_fit(const ObservationTable& table,
                               const FoldPlan& plan,
                               const NuisanceConfig& config);

// Nuisances fitted on the full sample and predicted in-sample. Appropriate
// for finite-dimensional parametric models, where cross-fitting is not
// required.
CrossFittedNuisances full_sample_nuisances(const ObservationTable& table,
                                           const NuisanceConfig& config);

// Oracle pass-through: closed-form nuisances supplied as matrices; the floor
// and pi_hat handling match cross_fit.
CrossFittedNuisances nuisances_from_matrices(const ObservationTable& table,
                                             Eigen::MatrixXd mu,
                                             Eigen::MatrixXd e,
                                             double propensity_floor = 1e-6);

}  // namespace hetdecomp
