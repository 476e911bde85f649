#include "hetdecomp/scores.hpp"

#include <cmath>

#include "hetdecomp/error.hpp"

namespace hetdecomp {

const char* parameter_name(Parameter p) {
  switch (p) {
    case Parameter::nate: return "nATE";
    case Parameter::rate: return "rATE";
    default: return "Delta";
  }
}

Eigen::MatrixXd score_apo(const ObservationTable& table,
                          const CrossFittedNuisances& nuis) {
  const Eigen::Index n = table.n();
  const int levels = table.num_levels();
  if (nuis.mu_hat.rows() != n || nuis.e_hat.rows() != n ||
      nuis.mu_hat.cols() != levels || nuis.e_hat.cols() != levels) {
    throw Error("score_apo: nuisance shape mismatch");
  }
  if ((nuis.e_hat.array() <= 0.0).any()) {
    throw Error("score_apo: propensities must be strictly positive");
  }
  Eigen::MatrixXd psi = nuis.mu_hat;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = table.t()[static_cast<std::size_t>(i)];
    psi(i, t) += (table.y()[i] - nuis.mu_hat(i, t)) / nuis.e_hat(i, t);
  }
  return psi;
}

Eigen::VectorXd score_aggregate(const ObservationTable& table,
                                const CrossFittedNuisances& nuis) {
  const Eigen::Index n = table.n();
  const int levels = table.num_levels();
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double ebar = 0.0;
    double weighted_mu = 0.0;
    for (int t = 1; t < levels; ++t) {
      ebar += nuis.e_hat(i, t);
      weighted_mu += nuis.mu_hat(i, t) * nuis.e_hat(i, t);
    }
    if (!(ebar > 0.0)) {
      throw Error("score_aggregate: treated propensity mass is zero in row " +
                  std::to_string(i));
    }
    const double mbar = weighted_mu / ebar;
    psi[i] = mbar;
    if (table.d()[static_cast<std::size_t>(i)] == 1) {
      psi[i] += (table.y()[i] - mbar) / ebar;
    }
  }
  return psi;
}

PseudoOutcomes pseudo_outcomes(const Eigen::MatrixXd& psi_t,
                               const Eigen::VectorXd& psi_agg,
                               const Eigen::VectorXd& pi_hat) {
  const Eigen::Index n = psi_t.rows();
  const Eigen::Index levels = psi_t.cols();
  if (pi_hat.size() != levels) throw Error("pseudo_outcomes: pi length");
  for (Eigen::Index t = 0; t < levels; ++t) {
    if (pi_hat[t] < 0.0) throw Error("pseudo_outcomes: negative pi entry");
  }
  const double treated_mass = 1.0 - pi_hat[0];
  if (!(treated_mass > 0.0)) {
    throw Error("pseudo_outcomes: no treated units (pi_0 = 1)");
  }

  // The pi-weighted mixture of treated-level scores is shared between the
  // rATE and Delta pseudo-outcomes; constructing both from the same vector
  // is what makes the additivity identity hold to rounding.
  Eigen::VectorXd mixture = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 1; t < levels; ++t) {
    mixture += (pi_hat[t] / treated_mass) * psi_t.col(t);
  }

  PseudoOutcomes out;
  out.nate = psi_agg - psi_t.col(0);
  out.rate = mixture - psi_t.col(0);
  out.delta = psi_agg - mixture;
  return out;
}

ScoreSet compute_scores(const ObservationTable& table,
                        const CrossFittedNuisances& nuis) {
  ScoreSet scores;
  scores.psi_t = score_apo(table, nuis);
  scores.psi_agg = score_aggregate(table, nuis);
  scores.pi_hat = nuis.pi_hat;
  scores.pseudo = pseudo_outcomes(scores.psi_t, scores.psi_agg, scores.pi_hat);
  return scores;
}

namespace {

// Population-mean pseudo-outcomes at eta_r = eta + r (eta_tilde - eta) with
// pi fixed at the population shares.
std::array<double, 3> mean_scores_at(const ObservationTable& population,
                                     const Eigen::MatrixXd& mu,
                                     const Eigen::MatrixXd& e,
                                     const NuisancePerturbation& direction,
                                     const Eigen::VectorXd& pi, double r) {
  CrossFittedNuisances nuis;
  nuis.mu_hat = mu + r * (direction.mu_tilde - mu);
  nuis.e_hat = e + r * (direction.e_tilde - e);
  if ((nuis.e_hat.array() <= 0.0).any()) {
    throw Error("orthogonality_check: perturbed propensities nonpositive");
  }
  nuis.pi_hat = pi;
  const ScoreSet scores = compute_scores(population, nuis);
  return {population.weighted_mean(scores.pseudo.nate),
          population.weighted_mean(scores.pseudo.rate),
          population.weighted_mean(scores.pseudo.delta)};
}

}  // namespace

OrthogonalityResult orthogonality_check(const ObservationTable& population,
                                        const Eigen::MatrixXd& mu,
                                        const Eigen::MatrixXd& e,
                                        const NuisancePerturbation& direction,
                                        const std::vector<double>& steps) {
  if (steps.empty()) throw Error("orthogonality_check: empty step ladder");
  const Eigen::VectorXd pi = population.treatment_shares();

  OrthogonalityResult result;
  result.steps = steps;
  for (double h : steps) {
    if (!(h > 0.0)) throw Error("orthogonality_check: steps must be positive");
    const auto up = mean_scores_at(population, mu, e, direction, pi, h);
    const auto down = mean_scores_at(population, mu, e, direction, pi, -h);
    std::array<double, 3> der;
    for (int p = 0; p < 3; ++p) {
      der[static_cast<std::size_t>(p)] =
          (up[static_cast<std::size_t>(p)] - down[static_cast<std::size_t>(p)]) /
          (2.0 * h);
    }
    result.derivative.push_back(der);
  }

  // Neville extrapolation in h^2: central differences have even error series.
  for (int p = 0; p < 3; ++p) {
    const std::size_t m = steps.size();
    std::vector<double> tab(m);
    for (std::size_t i = 0; i < m; ++i) {
      tab[i] = result.derivative[i][static_cast<std::size_t>(p)];
    }
    std::vector<double> h2(m);
    for (std::size_t i = 0; i < m; ++i) h2[i] = steps[i] * steps[i];
    for (std::size_t level = 1; level < m; ++level) {
      for (std::size_t i = m - 1; i >= level; --i) {
        tab[i] = (h2[i - level] * tab[i] - h2[i] * tab[i - 1]) /
                 (h2[i - level] - h2[i]);
        if (i == level) break;
      }
    }
    result.extrapolated[static_cast<std::size_t>(p)] = tab[m - 1];
  }
  return result;
}

}  // namespace hetdecomp
