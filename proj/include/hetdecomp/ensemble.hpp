#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hetdecomp/learners.hpp"

namespace hetdecomp {

// Cross-validated stacking: member weights live on the probability simplex
// and are chosen on out-of-fold member predictions -- least squares for
// regression members, log-likelihood for probability members.

struct EnsembleFit {
  std::vector<std::string> member_names;
  Eigen::VectorXd weights;  // >= 0, sums to 1
};

struct RegressionEnsembleFit : EnsembleFit {
  std::vector<RegressionModel> models;  // members refit on all data
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct PropensityEnsembleFit : EnsembleFit {
  std::vector<PropensityModel> models;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
};

// min_w ||y - P w||^2 over the simplex (projected gradient from the uniform
// start; identical members therefore keep uniform weights).
Eigen::VectorXd simplex_least_squares(const Eigen::MatrixXd& member_preds,
                                      const Eigen::VectorXd& y);

// max_w sum_i log(sum_m w_m p_im) with p_im the member-m probability of the
// observed class of row i.
Eigen::VectorXd simplex_log_likelihood(const Eigen::MatrixXd& member_probs);

RegressionEnsembleFit fit_regression_ensemble(
    const std::vector<NamedRegressionLearner>& members,
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int folds,
    std::uint64_t seed);

PropensityEnsembleFit fit_propensity_ensemble(
    const std::vector<NamedPropensityLearner>& members,
    const Eigen::MatrixXd& x, const std::vector<int>& labels, int num_classes,
    int folds, std::uint64_t seed);

RegressionLearner regression_ensemble_learner(
    std::vector<NamedRegressionLearner> members, int folds,
    std::uint64_t seed);
PropensityLearner propensity_ensemble_learner(
    std::vector<NamedPropensityLearner> members, int folds,
    std::uint64_t seed);

}  // namespace hetdecomp
