#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"
#include "hetdecomp/scores.hpp"
#include "hetdecomp/simulate.hpp"
#include "test_support.hpp"

using namespace hetdecomp;
using test_support::make_toy_population;
using test_support::toy_oracle_nuisances;

namespace {

// Weighted mean of v over the rows of one x-group.
double group_mean(const ObservationTable& table, const Eigen::VectorXd& v,
                  double group) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    if (table.x()(i, 0) == group) {
      num += table.weights()[i] * v[i];
      den += table.weights()[i];
    }
  }
  return num / den;
}

double max_rel_additivity_gap(const ScoreSet& scores) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < scores.pseudo.nate.size(); ++i) {
    const double gap = std::fabs(scores.pseudo.nate[i] - scores.pseudo.rate[i] -
                                 scores.pseudo.delta[i]);
    const double scale = std::max(
        {1.0, std::fabs(scores.pseudo.nate[i]), std::fabs(scores.pseudo.rate[i]),
         std::fabs(scores.pseudo.delta[i])});
    worst = std::max(worst, gap / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("toy population: mean AIPW score recovers potential outcomes") {
  const auto toy = make_toy_population();
  const CrossFittedNuisances nuis = toy_oracle_nuisances(toy);
  const Eigen::MatrixXd psi = score_apo(toy.table, nuis);
  CHECK(toy.table.weighted_mean(psi.col(0)) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(toy.table.weighted_mean(psi.col(1)) ==
        doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(toy.table.weighted_mean(psi.col(2)) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("toy population: aggregate score reproduces the group CATEs") {
  const auto toy = make_toy_population();
  const CrossFittedNuisances nuis = toy_oracle_nuisances(toy);
  const ScoreSet scores = compute_scores(toy.table, nuis);
  const Eigen::VectorXd cate = scores.psi_agg - scores.psi_t.col(0);
  CHECK(group_mean(toy.table, cate, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(group_mean(toy.table, cate, 1.0) ==
        doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("toy population: conditional decomposition values") {
  const auto toy = make_toy_population();
  const ScoreSet scores =
      compute_scores(toy.table, toy_oracle_nuisances(toy));
  // rATE(x) = 0 in both groups, Delta(0) = +1/2, Delta(1) = -1/2.
  CHECK(group_mean(toy.table, scores.pseudo.rate, 0.0) ==
        doctest::Approx(0.0).epsilon(1e-13));
  CHECK(group_mean(toy.table, scores.pseudo.rate, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-13));
  CHECK(group_mean(toy.table, scores.pseudo.delta, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(group_mean(toy.table, scores.pseudo.delta, 1.0) ==
        doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(group_mean(toy.table, scores.pseudo.nate, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(group_mean(toy.table, scores.pseudo.nate, 1.0) ==
        doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("perfect outcome fit reduces the apo score to its branches") {
  const auto toy = make_toy_population();
  CrossFittedNuisances nuis = toy_oracle_nuisances(toy);
  // mu identical to realized y for observed cells already holds in the toy
  // (deterministic outcomes), so residuals vanish where D_t = 1.
  const Eigen::MatrixXd psi = score_apo(toy.table, nuis);
  for (Eigen::Index i = 0; i < toy.table.n(); ++i) {
    const int t = toy.table.t()[static_cast<std::size_t>(i)];
    for (int s = 0; s < 3; ++s) {
      if (s == t) {
        CHECK(psi(i, s) == doctest::Approx(toy.table.y()[i]).epsilon(1e-15));
      } else {
        CHECK(psi(i, s) == doctest::Approx(nuis.mu_hat(i, s)).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("single-treatment collapse: aggregate equals treated apo score") {
  Eigen::VectorXd y(6);
  y << 0.0, 1.5, -2.0, 0.5, 3.0, 1.0;
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 0, 1, 0, 1;
  ObservationTable table(y, {0, 1, 0, 1, 1, 0}, x, {0});
  CrossFittedNuisances nuis;
  nuis.mu_hat.resize(6, 2);
  nuis.e_hat.resize(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i) {
    nuis.mu_hat(i, 0) = 0.2 + 0.1 * x(i, 0);
    nuis.mu_hat(i, 1) = 1.1 - 0.4 * x(i, 0);
    const double e1 = 0.3 + 0.4 * x(i, 0);
    nuis.e_hat(i, 0) = 1.0 - e1;
    nuis.e_hat(i, 1) = e1;
  }
  nuis.pi_hat = table.treatment_shares();
  const ScoreSet scores = compute_scores(table, nuis);
  CHECK((scores.psi_agg - scores.psi_t.col(1)).cwiseAbs().maxCoeff() <= 1e-14);
  // With J = 1 the rATE mixture is psi[1] itself.
  CHECK((scores.pseudo.rate - scores.pseudo.nate).cwiseAbs().maxCoeff() <=
        1e-14);
}

TEST_CASE("pseudo-outcome additivity holds row by row") {
  SUBCASE("toy population") {
    const auto toy = make_toy_population();
    const ScoreSet scores =
        compute_scores(toy.table, toy_oracle_nuisances(toy));
    CHECK(max_rel_additivity_gap(scores) <= 1e-12);
  }
  SUBCASE("simulated data with estimated nuisances") {
    McDesign design;
    design.n = 400;
    design.p = 3;
    const ObservationTable table = generate_dataset(design, 99);
    const FoldPlan plan = make_folds(table.n(), 2, 3, &table.t());
    NuisanceConfig config;
    config.outcome = ols_learner();
    config.propensity = multinomial_logit_learner(0.01, Penalty::ridge);
    const ScoreSet scores =
        compute_scores(table, cross_fit(table, plan, config));
    CHECK(max_rel_additivity_gap(scores) <= 1e-12);
  }
}

TEST_CASE("completely randomized treatments zero the delta pseudo-outcome") {
  // Replace the toy assignment with e_t(x) = pi_t for all x; then
  // nATE(x) = rATE(x) and the population-mean Delta must vanish.
  const auto toy = make_toy_population();
  Eigen::VectorXd w(6);
  const double pi[3] = {0.5, 0.25, 0.25};
  Eigen::Index row = 0;
  for (int group = 0; group <= 1; ++group) {
    for (int level = 0; level <= 2; ++level) {
      w[row++] = 0.5 * pi[level];
    }
  }
  const ObservationTable randomized = toy.table.enumerate_population(w);
  CrossFittedNuisances nuis;
  nuis.mu_hat = toy.mu;
  nuis.e_hat.resize(6, 3);
  for (Eigen::Index i = 0; i < 6; ++i) {
    nuis.e_hat(i, 0) = pi[0];
    nuis.e_hat(i, 1) = pi[1];
    nuis.e_hat(i, 2) = pi[2];
  }
  nuis.pi_hat = randomized.treatment_shares();
  const ScoreSet scores = compute_scores(randomized, nuis);
  CHECK(randomized.weighted_mean(scores.pseudo.delta) ==
        doctest::Approx(0.0).epsilon(1e-13));
  // And per group as well (Delta(x) = 0 pointwise).
  CHECK(group_mean(randomized, scores.pseudo.delta, 0.0) ==
        doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("double robustness on the enumerated population") {
  const auto toy = make_toy_population();
  SUBCASE("correct mu, distorted e") {
    CrossFittedNuisances nuis = toy_oracle_nuisances(toy);
    // Bounded multiplicative distortion, renormalized to the simplex.
    for (Eigen::Index i = 0; i < 6; ++i) {
      nuis.e_hat(i, 0) *= 1.6;
      nuis.e_hat(i, 2) *= 0.7;
      nuis.e_hat.row(i) /= nuis.e_hat.row(i).sum();
    }
    const Eigen::MatrixXd psi = score_apo(toy.table, nuis);
    CHECK(std::fabs(toy.table.weighted_mean(psi.col(1)) - (-1.0)) <= 1e-12);
    CHECK(std::fabs(toy.table.weighted_mean(psi.col(2)) - 1.0) <= 1e-12);
  }
  SUBCASE("correct e, distorted mu") {
    CrossFittedNuisances nuis = toy_oracle_nuisances(toy);
    nuis.mu_hat.array() += 0.8;  // bounded offset
    nuis.mu_hat.col(2).array() -= 1.3;
    const Eigen::MatrixXd psi = score_apo(toy.table, nuis);
    CHECK(std::fabs(toy.table.weighted_mean(psi.col(0)) - 0.0) <= 1e-12);
    CHECK(std::fabs(toy.table.weighted_mean(psi.col(1)) - (-1.0)) <= 1e-12);
    CHECK(std::fabs(toy.table.weighted_mean(psi.col(2)) - 1.0) <= 1e-12);
  }
}

TEST_CASE("scores are permutation equivariant") {
  const auto toy = make_toy_population();
  const ScoreSet scores = compute_scores(toy.table, toy_oracle_nuisances(toy));

  std::vector<Eigen::Index> perm = {3, 0, 5, 1, 4, 2};
  Eigen::VectorXd y(6), w(6);
  Eigen::MatrixXd x(6, 1), mu(6, 3), e(6, 3);
  std::vector<int> t(6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const Eigen::Index src = perm[static_cast<std::size_t>(i)];
    y[i] = toy.table.y()[src];
    w[i] = toy.table.weights()[src];
    x(i, 0) = toy.table.x()(src, 0);
    t[static_cast<std::size_t>(i)] =
        toy.table.t()[static_cast<std::size_t>(src)];
    mu.row(i) = toy.mu.row(src);
    e.row(i) = toy.e.row(src);
  }
  ObservationTable base(y, t, x, {0});
  const ObservationTable shuffled = base.enumerate_population(w);
  CrossFittedNuisances nuis;
  nuis.mu_hat = mu;
  nuis.e_hat = e;
  nuis.pi_hat = shuffled.treatment_shares();
  const ScoreSet shuffled_scores = compute_scores(shuffled, nuis);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const Eigen::Index src = perm[static_cast<std::size_t>(i)];
    CHECK(shuffled_scores.pseudo.nate[i] ==
          doctest::Approx(scores.pseudo.nate[src]).epsilon(1e-15));
    CHECK(shuffled_scores.pseudo.delta[i] ==
          doctest::Approx(scores.pseudo.delta[src]).epsilon(1e-15));
  }
}

TEST_CASE("pseudo_outcomes rejects a population with no treated mass") {
  Eigen::MatrixXd psi_t(2, 2);
  psi_t.setZero();
  Eigen::VectorXd psi_agg(2);
  psi_agg.setZero();
  Eigen::VectorXd pi(2);
  pi << 1.0, 0.0;
  CHECK_THROWS_WITH_AS(pseudo_outcomes(psi_t, psi_agg, pi),
                       doctest::Contains("treated"), Error);
}

TEST_CASE("neyman orthogonality in the mu direction") {
  const auto toy = make_toy_population();
  NuisancePerturbation direction;
  // A deliberately uneven but bounded direction.
  direction.mu_tilde = toy.mu;
  for (Eigen::Index i = 0; i < 6; ++i) {
    direction.mu_tilde(i, 0) += 0.4 + 0.2 * toy.table.x()(i, 0);
    direction.mu_tilde(i, 1) -= 0.3;
    direction.mu_tilde(i, 2) += 0.25 * (i % 2 == 0 ? 1.0 : -1.0);
  }
  direction.e_tilde = toy.e;  // e unchanged
  const OrthogonalityResult result =
      orthogonality_check(toy.table, toy.mu, toy.e, direction);
  for (int p = 0; p < 3; ++p) {
    CHECK(std::fabs(result.extrapolated[static_cast<std::size_t>(p)]) <= 1e-8);
  }
}

TEST_CASE("neyman orthogonality in the e direction") {
  const auto toy = make_toy_population();
  NuisancePerturbation direction;
  direction.mu_tilde = toy.mu;
  direction.e_tilde = toy.e;
  for (Eigen::Index i = 0; i < 6; ++i) {
    // Tilt and renormalize; stays on the simplex so every path point does.
    direction.e_tilde(i, 0) *= 1.35;
    direction.e_tilde(i, 1) *= 0.8;
    direction.e_tilde(i, 2) *= 1.1;
    direction.e_tilde.row(i) /= direction.e_tilde.row(i).sum();
  }
  const OrthogonalityResult result =
      orthogonality_check(toy.table, toy.mu, toy.e, direction);
  for (int p = 0; p < 3; ++p) {
    CHECK(std::fabs(result.extrapolated[static_cast<std::size_t>(p)]) <= 1e-8);
  }
}

TEST_CASE("zero perturbation has exactly zero derivative") {
  const auto toy = make_toy_population();
  NuisancePerturbation direction;
  direction.mu_tilde = toy.mu;
  direction.e_tilde = toy.e;
  const OrthogonalityResult result =
      orthogonality_check(toy.table, toy.mu, toy.e, direction);
  for (const auto& row : result.derivative) {
    for (double d : row) CHECK(d == 0.0);
  }
}

TEST_CASE("orthogonality check rejects paths leaving the simplex") {
  const auto toy = make_toy_population();
  NuisancePerturbation direction;
  direction.mu_tilde = toy.mu;
  direction.e_tilde = toy.e;
  direction.e_tilde(0, 0) = 200.0;  // blows past positivity at h = 1e-2
  direction.e_tilde(0, 1) = -199.0 + toy.e(0, 0) + toy.e(0, 1);
  CHECK_THROWS_AS(
      orthogonality_check(toy.table, toy.mu, toy.e, direction, {1e-1}), Error);
}
