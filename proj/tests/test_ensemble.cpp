#include <doctest.h>

#include <cmath>
#include <random>

#include "hetdecomp/ensemble.hpp"
#include "hetdecomp/rng.hpp"

using namespace hetdecomp;

TEST_CASE("simplex weights stay on the simplex") {
  auto rng = make_rng(31, Stream::simulation);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd preds(50, 3);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) preds(i, j) = normal(rng);
    y[i] = normal(rng);
  }
  const Eigen::VectorXd w = simplex_least_squares(preds, y);
  CHECK(w.minCoeff() >= 0.0);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single member gets weight one") {
  Eigen::MatrixXd preds(10, 1);
  preds.setOnes();
  const Eigen::VectorXd w =
      simplex_least_squares(preds, Eigen::VectorXd::Zero(10));
  CHECK(w.size() == 1);
  CHECK(w[0] == doctest::Approx(1.0));
}

TEST_CASE("identical members tie-break to uniform weights") {
  auto rng = make_rng(32, Stream::simulation);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd preds(40, 3);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double v = normal(rng);
    preds.row(i).setConstant(v);
    y[i] = normal(rng);
  }
  const Eigen::VectorXd w = simplex_least_squares(preds, y);
  for (int j = 0; j < 3; ++j) {
    CHECK(w[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("oracle member dominates noise members") {
  auto rng = make_rng(33, Stream::simulation);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.3);
  const Eigen::Index n = 2000;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = uniform(rng);
    y[i] = std::sin(3.0 * x(i, 0)) + noise(rng);
  }
  std::vector<NamedRegressionLearner> members;
  members.push_back({"truth", [](const Eigen::MatrixXd&,
                                 const Eigen::VectorXd&) {
                       return RegressionModel([](const Eigen::MatrixXd& xq) {
                         return (3.0 * xq.col(0).array()).sin().matrix().eval();
                       });
                     }});
  members.push_back({"constant_wrong", [](const Eigen::MatrixXd&,
                                          const Eigen::VectorXd&) {
                       return RegressionModel([](const Eigen::MatrixXd& xq) {
                         return Eigen::VectorXd::Constant(xq.rows(), 5.0)
                             .eval();
                       });
                     }});
  members.push_back({"mean", mean_learner()});
  const RegressionEnsembleFit fit =
      fit_regression_ensemble(members, x, y, 2, 7);
  CHECK(fit.weights[0] > 0.9);
  CHECK(fit.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
  // Ensemble prediction tracks the truth closely.
  const Eigen::VectorXd pred = fit.predict(x);
  const Eigen::VectorXd truth = (3.0 * x.col(0).array()).sin();
  CHECK((pred - truth).cwiseAbs().maxCoeff() < 0.5);
}

TEST_CASE("propensity ensemble mixes probability members") {
  auto rng = make_rng(34, Stream::simulation);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::Index n = 1500;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = uniform(rng);
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * x(i, 0)));
    labels[static_cast<std::size_t>(i)] = u01(rng) < p1 ? 1 : 0;
  }
  std::vector<NamedPropensityLearner> members;
  members.push_back({"logit", multinomial_logit_learner(0.0, Penalty::none)});
  members.push_back({"shares", class_share_learner()});
  const PropensityEnsembleFit fit =
      fit_propensity_ensemble(members, x, labels, 2, 2, 5);
  // The informative logit should carry nearly all the weight.
  CHECK(fit.weights[0] > 0.8);
  const Eigen::MatrixXd probs = fit.predict_proba(x.topRows(5));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}
