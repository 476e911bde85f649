#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hetdecomp {

// Regularized nuisance learners. Penalized fits standardize columns to
// mean 0 / unit variance internally (1/n convention) and report
// coefficients on the original scale. All fits are deterministic functions
// of their inputs.

enum class Penalty { none, ridge, lasso };

struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;  // original scale; exactly sparse for lasso
  Penalty penalty = Penalty::none;
  double lambda = 0.0;

  double predict_one(const Eigen::RowVectorXd& x) const {
    return intercept + x * coef;
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    return (x * coef).array() + intercept;
  }
};

struct LassoOptions {
  double tol = 1e-7;       // max coefficient change per sweep
  int max_sweeps = 10000;
};

// Sample mean (intercept-only model).
LinearFit fit_mean(const Eigen::VectorXd& y);

// Ordinary least squares; errors on rank deficiency.
LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// minimizes ||y - a - X b||^2 + lambda ||b||^2 on standardized columns,
// intercept unpenalized, closed-form solve. lambda = 0 requires full rank.
LinearFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda);

// minimizes (2n)^-1 ||y - a - X b||^2 + lambda ||b||_1 on standardized
// columns by cyclic coordinate descent with soft-thresholding.
// `warm`, when given, seeds the standardized coefficients (lambda paths).
LinearFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda, const LassoOptions& options = {},
                    const Eigen::VectorXd* warm = nullptr);

// Largest lambda with an all-zero lasso solution: max_j |n^-1 x_j'(y - ybar)|
// on standardized columns.
double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct MultinomialLogitOptions {
  double tol = 1e-8;       // objective relative-change tolerance
  double param_tol = 1e-7; // max parameter change tolerance
  int max_iter = 20000;
  bool track_objective = false;
};

struct MultinomialLogitFit {
  // (J+1) x (p+1): column 0 intercept, class 0 is the reference (row zero).
  Eigen::MatrixXd coef;
  Penalty penalty = Penalty::none;  // ridge == l2, lasso == l1
  double lambda = 0.0;
  std::vector<double> objective_trace;  // filled when track_objective

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
};

// Penalized multinomial deviance, class 0 as reference, intercepts
// unpenalized. l1 uses monotone accelerated proximal gradient, l2 and
// lambda = 0 use damped Newton. Labels must cover 0..num_classes-1.
MultinomialLogitFit fit_multinomial_logit(
    const Eigen::MatrixXd& x, const std::vector<int>& labels, int num_classes,
    double lambda, Penalty penalty, const MultinomialLogitOptions& options = {},
    const Eigen::MatrixXd* warm = nullptr);

double logit_lambda_max(const Eigen::MatrixXd& x,
                        const std::vector<int>& labels, int num_classes);

// Log-spaced grid from lambda_max down to lambda_max * min_ratio.
std::vector<double> lambda_grid(double lambda_max, int size, double min_ratio);

struct CvResult {
  double best_lambda = 0.0;
  std::vector<double> lambdas;    // descending
  std::vector<double> cv_error;   // out-of-fold MSE / mean deviance
};

// K-fold CV over a descending lambda grid; picks the minimizer, breaking
// ties toward the larger lambda.
CvResult cross_validate_linear(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y,
                               std::vector<double> grid, int folds,
                               Penalty penalty, std::uint64_t seed,
                               const LassoOptions& options = {});

// Folds are stratified by label; a training fold missing a class is an error.
CvResult cross_validate_logit(const Eigen::MatrixXd& x,
                              const std::vector<int>& labels, int num_classes,
                              std::vector<double> grid, int folds,
                              Penalty penalty, std::uint64_t seed,
                              const MultinomialLogitOptions& options = {});

// Learner plumbing shared by cross-fitting and the ensemble: a learner maps
// training data to a prediction function.
using RegressionModel = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using RegressionLearner = std::function<RegressionModel(
    const Eigen::MatrixXd&, const Eigen::VectorXd&)>;
// Propensity models return an n x num_classes probability matrix.
using PropensityModel = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
using PropensityLearner = std::function<PropensityModel(
    const Eigen::MatrixXd&, const std::vector<int>&, int)>;

struct NamedRegressionLearner {
  std::string name;
  RegressionLearner learner;
};
struct NamedPropensityLearner {
  std::string name;
  PropensityLearner learner;
};

// Ready-made learners. The *_cv variants select lambda by K-fold CV on the
// training data with a fresh grid per fit.
RegressionLearner mean_learner();
RegressionLearner ols_learner();
RegressionLearner ridge_learner(double lambda);
RegressionLearner ridge_cv_learner(int cv_folds, std::uint64_t seed,
                                   int grid_size = 30,
                                   double min_ratio = 1e-3);
RegressionLearner lasso_cv_learner(int cv_folds, std::uint64_t seed,
                                   int grid_size = 30,
                                   double min_ratio = 1e-3);
PropensityLearner multinomial_logit_learner(double lambda, Penalty penalty);
PropensityLearner logit_l1_cv_learner(int cv_folds, std::uint64_t seed,
                                      int grid_size = 30,
                                      double min_ratio = 1e-3);
// Class-frequency model (intercept-only logit).
PropensityLearner class_share_learner();

}  // namespace hetdecomp
