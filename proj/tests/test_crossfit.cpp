#include <doctest.h>

#include <random>
#include <set>

#include "hetdecomp/crossfit.hpp"
#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"
#include "hetdecomp/simulate.hpp"

using namespace hetdecomp;

namespace {

std::vector<Eigen::Index> fold_sizes(const FoldPlan& plan) {
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(plan.num_folds), 0);
  for (int f : plan.fold_of) sizes[static_cast<std::size_t>(f)]++;
  return sizes;
}

}  // namespace

TEST_CASE("make_folds partitions evenly") {
  const FoldPlan plan = make_folds(10, 5, 42);
  const auto sizes = fold_sizes(plan);
  for (auto s : sizes) CHECK(s == 2);

  const FoldPlan uneven = make_folds(11, 3, 42);
  const auto sizes2 = fold_sizes(uneven);
  CHECK(*std::max_element(sizes2.begin(), sizes2.end()) -
            *std::min_element(sizes2.begin(), sizes2.end()) <=
        1);
}

TEST_CASE("make_folds is reproducible from the seed") {
  const FoldPlan a = make_folds(100, 4, 7);
  const FoldPlan b = make_folds(100, 4, 7);
  const FoldPlan c = make_folds(100, 4, 8);
  CHECK(a.fold_of == b.fold_of);
  CHECK(a.fold_of != c.fold_of);
}

TEST_CASE("stratified folds balance every class exactly when divisible") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(0);
  for (int i = 0; i < 25; ++i) labels.push_back(1);
  for (int i = 0; i < 25; ++i) labels.push_back(2);
  const FoldPlan plan = make_folds(100, 5, 3, &labels);
  // Class counts (50, 25, 25) and K = 5 give exactly (10, 5, 5) per fold.
  std::vector<std::vector<int>> counts(5, std::vector<int>(3, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    counts[static_cast<std::size_t>(plan.fold_of[i])]
          [static_cast<std::size_t>(labels[i])]++;
  }
  for (int f = 0; f < 5; ++f) {
    CHECK(counts[static_cast<std::size_t>(f)][0] == 10);
    CHECK(counts[static_cast<std::size_t>(f)][1] == 5);
    CHECK(counts[static_cast<std::size_t>(f)][2] == 5);
  }
  CHECK(plan.warnings.empty());
}

TEST_CASE("stratification falls back with a warning when infeasible") {
  std::vector<int> labels = {0, 0, 0, 0, 1};  // class 1 has one member
  const FoldPlan plan = make_folds(5, 2, 1, &labels);
  REQUIRE(plan.warnings.size() == 1);
  CHECK(plan.warnings[0].find("unstratified") != std::string::npos);
}

TEST_CASE("make_folds rejects K > n and K < 2") {
  CHECK_THROWS_AS(make_folds(3, 4, 1), Error);
  CHECK_THROWS_AS(make_folds(3, 1, 1), Error);
}

TEST_CASE("cross_fit predicts constants for constant outcomes") {
  const Eigen::Index n = 40;
  Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 3.25);
  Eigen::MatrixXd x(n, 2);
  auto rng = make_rng(5, Stream::simulation);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> t(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    t[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
  }
  ObservationTable table(y, t, x, {0});
  const FoldPlan plan = make_folds(n, 2, 9, &table.t());
  NuisanceConfig config;
  config.outcome = mean_learner();
  config.propensity = class_share_learner();
  const CrossFittedNuisances nuis = cross_fit(table, plan, config);
  CHECK((nuis.mu_hat.array() - 3.25).abs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-14));
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(nuis.e_hat.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nuis.e_hat.row(i).minCoeff() > 0.0);
  }
  CHECK(nuis.pi_hat.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cross_fit honors fold boundaries (no leakage)") {
  McDesign design;
  design.n = 120;
  design.p = 2;
  const ObservationTable table = generate_dataset(design, 77);
  const FoldPlan plan = make_folds(table.n(), 3, 11, &table.t());
  NuisanceConfig config;
  config.outcome = ols_learner();
  config.propensity = class_share_learner();
  const CrossFittedNuisances base = cross_fit(table, plan, config);

  // Perturb y on fold f: predictions for fold f come from models trained on
  // its complement and must not move; some row outside fold f must move.
  const int f = 0;
  Eigen::VectorXd y2 = table.y();
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    if (plan.fold_of[static_cast<std::size_t>(i)] == f) y2[i] += 100.0;
  }
  ObservationTable perturbed(y2, table.t(), table.x(), table.z_cols());
  const CrossFittedNuisances moved = cross_fit(perturbed, plan, config);
  double max_inside = 0.0;
  double max_outside = 0.0;
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    const double delta =
        (moved.mu_hat.row(i) - base.mu_hat.row(i)).cwiseAbs().maxCoeff();
    if (plan.fold_of[static_cast<std::size_t>(i)] == f) {
      max_inside = std::max(max_inside, delta);
    } else {
      max_outside = std::max(max_outside, delta);
    }
  }
  CHECK(max_inside == 0.0);
  CHECK(max_outside > 1.0);
}

TEST_CASE("cross_fit errors when a complement misses a treatment") {
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 4, 5, 6;
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  // Both level-1 rows sit in fold 0, so fold 0's complement has none.
  ObservationTable table(y, {0, 0, 1, 1, 0, 0}, x, {0});
  FoldPlan plan;
  plan.num_folds = 2;
  plan.fold_of = {0, 1, 0, 0, 1, 1};
  NuisanceConfig config;
  config.outcome = mean_learner();
  config.propensity = class_share_learner();
  CHECK_THROWS_WITH_AS(cross_fit(table, plan, config),
                       doctest::Contains("fold 0"), Error);
}

TEST_CASE("propensity estimation error shrinks with n on the mc design") {
  auto mse_at = [](Eigen::Index n) {
    McDesign design;
    design.n = n;
    design.p = 3;
    const ObservationTable table = generate_dataset(design, 1234);
    const FoldPlan plan = make_folds(n, 2, 5, &table.t());
    NuisanceConfig config;
    config.outcome = mean_learner();
    // Unpenalized logit on all columns; only x1 matters in truth.
    config.propensity = multinomial_logit_learner(0.0, Penalty::none);
    const CrossFittedNuisances nuis = cross_fit(table, plan, config);
    double mse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd truth = mc_propensities(design, table.x()(i, 0));
      mse += (nuis.e_hat.row(i).transpose() - truth).squaredNorm();
    }
    return mse / static_cast<double>(n);
  };
  const double mse_small = mse_at(1000);
  const double mse_large = mse_at(5000);
  CHECK(mse_large < mse_small);
}

TEST_CASE("oracle matrices pass through with floor accounting") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  Eigen::MatrixXd x(4, 1);
  x << 0, 0, 1, 1;
  ObservationTable table(y, {0, 1, 0, 1}, x, {0});
  Eigen::MatrixXd mu(4, 2);
  mu << 1, 2, 1, 2, 3, 4, 3, 4;
  Eigen::MatrixXd e(4, 2);
  e << 0.5, 0.5, 0.5, 0.5, 1.0, 0.0, 1.0, 0.0;  // zeros hit the floor
  const CrossFittedNuisances nuis = nuisances_from_matrices(table, mu, e);
  CHECK(nuis.mu_hat == mu);
  CHECK(nuis.clip_count == 2);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(nuis.e_hat.row(i).minCoeff() > 0.0);
    CHECK(nuis.e_hat.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(nuis.pi_hat[0] == doctest::Approx(0.5).epsilon(1e-15));
}
