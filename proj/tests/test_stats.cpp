#include <doctest.h>

#include <cmath>

#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"
#include "hetdecomp/stats.hpp"

using namespace hetdecomp;

TEST_CASE("normal quantile and cdf") {
  CHECK(stats::normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(stats::normal_quantile(0.025) ==
        doctest::Approx(-1.959963984540054).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.3, 0.7, 0.9, 0.999}) {
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) ==
          doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(stats::normal_quantile(0.0), Error);
  CHECK_THROWS_AS(stats::normal_quantile(1.0), Error);
}

TEST_CASE("chi squared survival function") {
  // Reference values from the usual tables.
  CHECK(stats::chi_squared_sf(3.841458820694124, 1) ==
        doctest::Approx(0.05).epsilon(1e-10));
  CHECK(stats::chi_squared_sf(5.991464547107979, 2) ==
        doctest::Approx(0.05).epsilon(1e-10));
  CHECK(stats::chi_squared_sf(0.0, 3) == doctest::Approx(1.0));
  CHECK(stats::chi_squared_sf(-1.0, 3) == doctest::Approx(1.0));
  // chi2(2) is exponential with rate 1/2.
  CHECK(stats::chi_squared_sf(4.0, 2) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("sample quantile interpolates order statistics") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(stats::sample_quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(stats::sample_quantile(v, 1.0) == doctest::Approx(4.0));
  CHECK(stats::sample_quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(stats::sample_quantile(v, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(stats::sample_quantile({}, 0.5), Error);
}

TEST_CASE("adaptive simpson quadrature") {
  const double third = stats::adaptive_simpson(
      [](double x) { return x * x; }, 0.0, 1.0, 1e-12);
  CHECK(third == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const double sine = stats::adaptive_simpson(
      [](double x) { return std::sin(x); }, 0.0, M_PI, 1e-11);
  CHECK(sine == doctest::Approx(2.0).epsilon(1e-10));
  // Peaked integrand exercises the adaptive refinement.
  const double peaked = stats::adaptive_simpson(
      [](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0, 1e-9);
  CHECK(peaked ==
        doctest::Approx(2.0 / 1e-2 * std::atan(1.0 / 1e-2)).epsilon(1e-8));
}

TEST_CASE("seed substreams decorrelate") {
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 1) != mix_seed(2, 1));
  auto a = make_rng(7, Stream::folds);
  auto b = make_rng(7, Stream::folds);
  auto c = make_rng(7, Stream::simulation);
  CHECK(a() == b());
  CHECK(a() != c());
}
