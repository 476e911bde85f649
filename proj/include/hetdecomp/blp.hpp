#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "hetdecomp/scores.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// Basis over a single heterogeneity column: intercept only, exclusive group
// dummies (one column per distinct value, no intercept), raw polynomial, or
// a clamped B-spline (Cox-de Boor) with boundary knots at the data range and
// interior knots either explicit or quantile-placed.
struct BasisSpec {
  enum class Kind { intercept, group_dummies, polynomial, bspline };
  Kind kind = Kind::intercept;
  int z_index = 0;  // which heterogeneity column of the table
  int degree = 1;                      // polynomial
  int order = 4;                       // bspline order (= degree + 1)
  int num_interior_knots = 0;          // quantile-placed when knots empty
  std::vector<double> interior_knots;  // explicit interior knots

  std::string describe() const;
  bool operator==(const BasisSpec& other) const;
};

// Data-bound basis: the design matrix plus everything needed to evaluate
// b(z0) at new points (group values, knot vector, boundary).
class Basis {
 public:
  static Basis build(const ObservationTable& table, const BasisSpec& spec);

  const BasisSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& design() const { return design_; }
  Eigen::Index k() const { return design_.cols(); }
  Eigen::RowVectorXd eval(double z0) const;

 private:
  BasisSpec spec_;
  Eigen::MatrixXd design_;
  std::vector<double> group_values_;  // group_dummies
  std::vector<double> knots_;         // clamped knot vector (bspline)
};

struct BlpFit {
  Parameter parameter = Parameter::nate;
  BasisSpec spec;
  Eigen::VectorXd beta;
  Eigen::MatrixXd Q;      // E_n[b b']
  Eigen::MatrixXd Sigma;  // score covariance, parameter-specific
  Eigen::MatrixXd Omega;  // Q^-1 Sigma Q^-1
  Eigen::VectorXd residuals;
  Eigen::Index n = 0;
};

// Weighted least squares of the pseudo-outcome on the basis columns.
// Q must have relative minimum eigenvalue > 1e-10; the error names the
// columns loading on the offending direction.
struct BlpPointEstimate {
  Eigen::VectorXd beta;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Q_inv;
  Eigen::VectorXd residuals;
};
BlpPointEstimate fit_blp(const Eigen::VectorXd& pseudo, const Basis& basis,
                         const Eigen::VectorXd& weights);

// Point estimate plus the parameter-specific sandwich:
//   nATE:  Sigma = E_n[b b' e^2]
//   rATE:  Sigma = E_n[(b e + a - abar)(...)'],
//          a_i = sum_{t!=0} E_n[b (psi_t - psi_0)] (D_ti (1-pi_0) + D_0i pi_t)
//                / (1-pi_0)^2
//   Delta: Sigma = E_n[(b e - a + abar)(...)']
BlpFit fit_parameter_blp(Parameter parameter, const ScoreSet& scores,
                         const ObservationTable& table, const Basis& basis);

struct Interval {
  double estimate = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// b(z0)' beta +- q_{1-alpha/2} sqrt(b(z0)' Omega b(z0) / n), normal quantile.
Interval confidence_interval(const BlpFit& fit, const Basis& basis, double z0,
                             double level);
// Same interval for a single coefficient.
Interval coefficient_interval(const BlpFit& fit, Eigen::Index j, double level);

struct WaldResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// W = n (R beta - r)' (R Omega R')^-1 (R beta - r), chi-squared with
// rank(R) degrees of freedom.
WaldResult wald_test(const BlpFit& fit, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r);

// Contrasts testing a flat decomposition curve: for exclusive dummies and
// B-splines (partition of unity) all coefficients equal; for polynomial all
// non-constant coefficients zero. Returns a 0 x k matrix for intercept-only.
Eigen::MatrixXd homogeneity_contrasts(const Basis& basis);

// Leave-one-out CV over candidate bases via the hat-matrix shortcut
// (e_i / (1 - h_ii)) for each of the three pseudo-outcomes; candidates with
// a leverage of 1 or a singular Q are disqualified. The applied spec is the
// per-parameter winner with the most columns, so the fitted rATE and Delta
// curves sum to the fitted nATE curve.
struct LoocvCandidate {
  BasisSpec spec;
  Eigen::Index k = 0;
  bool feasible = false;
  std::string disqualified_reason;
  std::array<double, 3> mse{};  // per parameter
};
struct LoocvSelection {
  std::vector<LoocvCandidate> candidates;
  std::array<int, 3> winner{};  // candidate index per parameter
  int common = -1;              // applied spec: winner with largest k
};
LoocvSelection loocv_select_basis(const PseudoOutcomes& pseudo,
                                  const ObservationTable& table,
                                  const std::vector<BasisSpec>& candidates);

// Default LOOCV grid: B-spline orders {2,3,4} x interior-knot counts
// {0,1,2,3} at quantile-placed knots.
std::vector<BasisSpec> default_basis_grid(int z_index);

}  // namespace hetdecomp
