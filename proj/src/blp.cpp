#include "hetdecomp/blp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hetdecomp/error.hpp"
#include "hetdecomp/stats.hpp"

namespace hetdecomp {

std::string BasisSpec::describe() const {
  switch (kind) {
    case Kind::intercept:
      return "intercept";
    case Kind::group_dummies:
      return "group_dummies(z" + std::to_string(z_index) + ")";
    case Kind::polynomial:
      return "polynomial(z" + std::to_string(z_index) +
             ", degree=" + std::to_string(degree) + ")";
    case Kind::bspline: {
      std::string s = "bspline(z" + std::to_string(z_index) +
                      ", order=" + std::to_string(order) + ", knots=";
      if (interior_knots.empty()) {
        s += std::to_string(num_interior_knots) + " at quantiles";
      } else {
        s += "{";
        for (std::size_t i = 0; i < interior_knots.size(); ++i) {
          if (i) s += ",";
          s += std::to_string(interior_knots[i]);
        }
        s += "}";
      }
      return s + ")";
    }
  }
  return "?";
}

bool BasisSpec::operator==(const BasisSpec& other) const {
  return kind == other.kind && z_index == other.z_index &&
         degree == other.degree && order == other.order &&
         num_interior_knots == other.num_interior_knots &&
         interior_knots == other.interior_knots;
}

namespace {

// B-spline basis values at x for a clamped knot vector; returns the full
// row of length (#knots - order). Cox-de Boor triangular scheme.
Eigen::RowVectorXd bspline_row(const std::vector<double>& knots, int order,
                               double x) {
  const int num_basis = static_cast<int>(knots.size()) - order;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(num_basis);
  const double lo = knots.front();
  const double hi = knots.back();
  x = std::min(std::max(x, lo), hi);

  // Knot span: largest s with knots[s] <= x < knots[s+1]; x == hi maps to
  // the last nonempty span.
  int span = order - 1;
  if (x >= hi) {
    span = num_basis - 1;
  } else {
    while (span + 1 < num_basis && knots[static_cast<std::size_t>(span + 1)] <= x) {
      ++span;
    }
  }

  std::vector<double> values(static_cast<std::size_t>(order), 0.0);
  std::vector<double> left(static_cast<std::size_t>(order), 0.0);
  std::vector<double> right(static_cast<std::size_t>(order), 0.0);
  values[0] = 1.0;
  for (int j = 1; j < order; ++j) {
    left[static_cast<std::size_t>(j)] =
        x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] =
        knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] +
                           left[static_cast<std::size_t>(j - r)];
      const double temp = denom != 0.0 ? values[static_cast<std::size_t>(r)] / denom : 0.0;
      values[static_cast<std::size_t>(r)] =
          saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }
  for (int j = 0; j < order; ++j) {
    const int idx = span - order + 1 + j;
    if (idx >= 0 && idx < num_basis) {
      row[idx] = values[static_cast<std::size_t>(j)];
    }
  }
  return row;
}

}  // namespace

Basis Basis::build(const ObservationTable& table, const BasisSpec& spec) {
  Basis basis;
  basis.spec_ = spec;
  const Eigen::Index n = table.n();

  if (spec.kind == BasisSpec::Kind::intercept) {
    basis.design_ = Eigen::MatrixXd::Ones(n, 1);
    return basis;
  }

  const Eigen::VectorXd z = table.z_column(spec.z_index);
  switch (spec.kind) {
    case BasisSpec::Kind::group_dummies: {
      std::set<double> distinct(z.data(), z.data() + z.size());
      basis.group_values_.assign(distinct.begin(), distinct.end());
      const auto g = static_cast<Eigen::Index>(basis.group_values_.size());
      basis.design_ = Eigen::MatrixXd::Zero(n, g);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto it = std::lower_bound(basis.group_values_.begin(),
                                         basis.group_values_.end(), z[i]);
        basis.design_(i, it - basis.group_values_.begin()) = 1.0;
      }
      break;
    }
    case BasisSpec::Kind::polynomial: {
      if (spec.degree < 0) throw Error("basis: polynomial degree < 0");
      basis.design_.resize(n, spec.degree + 1);
      basis.design_.col(0).setOnes();
      for (int d = 1; d <= spec.degree; ++d) {
        basis.design_.col(d) =
            basis.design_.col(d - 1).cwiseProduct(z);
      }
      break;
    }
    case BasisSpec::Kind::bspline: {
      if (spec.order < 1) throw Error("basis: bspline order must be >= 1");
      const double lo = z.minCoeff();
      const double hi = z.maxCoeff();
      if (!(hi > lo)) {
        throw Error("basis: bspline needs a non-degenerate data range");
      }
      std::vector<double> interior = spec.interior_knots;
      if (interior.empty() && spec.num_interior_knots > 0) {
        std::vector<double> zv(z.data(), z.data() + z.size());
        for (int j = 1; j <= spec.num_interior_knots; ++j) {
          interior.push_back(stats::sample_quantile(
              zv, static_cast<double>(j) /
                      (static_cast<double>(spec.num_interior_knots) + 1.0)));
        }
      }
      std::sort(interior.begin(), interior.end());
      for (double knot : interior) {
        if (!(knot > lo && knot < hi)) {
          throw Error("basis: interior knot " + std::to_string(knot) +
                      " outside the open data range");
        }
      }
      basis.knots_.assign(static_cast<std::size_t>(spec.order), lo);
      basis.knots_.insert(basis.knots_.end(), interior.begin(), interior.end());
      basis.knots_.insert(basis.knots_.end(),
                          static_cast<std::size_t>(spec.order), hi);
      const auto k = static_cast<Eigen::Index>(interior.size()) + spec.order;
      basis.design_.resize(n, k);
      for (Eigen::Index i = 0; i < n; ++i) {
        basis.design_.row(i) = bspline_row(basis.knots_, spec.order, z[i]);
      }
      break;
    }
    default:
      throw Error("basis: unknown kind");
  }
  return basis;
}

Eigen::RowVectorXd Basis::eval(double z0) const {
  switch (spec_.kind) {
    case BasisSpec::Kind::intercept:
      return Eigen::RowVectorXd::Ones(1);
    case BasisSpec::Kind::group_dummies: {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(
          static_cast<Eigen::Index>(group_values_.size()));
      for (std::size_t g = 0; g < group_values_.size(); ++g) {
        if (group_values_[g] == z0) {
          row[static_cast<Eigen::Index>(g)] = 1.0;
          return row;
        }
      }
      throw Error("basis: evaluation point " + std::to_string(z0) +
                  " is not one of the dummy groups");
    }
    case BasisSpec::Kind::polynomial: {
      Eigen::RowVectorXd row(spec_.degree + 1);
      row[0] = 1.0;
      for (int d = 1; d <= spec_.degree; ++d) row[d] = row[d - 1] * z0;
      return row;
    }
    case BasisSpec::Kind::bspline:
      return bspline_row(knots_, spec_.order, z0);
  }
  throw Error("basis: unknown kind");
}

namespace {

// Inverse through a symmetric eigendecomposition with a relative eigenvalue
// floor; never a pseudo-inverse (silent rank reduction would corrupt the
// interval semantics downstream).
Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double max_eig = values.maxCoeff();
  const double floor = 1e-10 * std::max(max_eig, 0.0);
  if (!(values.minCoeff() > floor)) {
    Eigen::Index which = 0;
    values.minCoeff(&which);
    const Eigen::VectorXd direction = eig.eigenvectors().col(which);
    std::string cols;
    const double top = direction.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < direction.size(); ++j) {
      if (std::fabs(direction[j]) > 0.1 * top) {
        if (!cols.empty()) cols += ", ";
        cols += std::to_string(j);
      }
    }
    throw Error(
        "fit_blp: basis Gram matrix is numerically singular (columns " + cols +
        " are collinear)");
  }
  return eig.eigenvectors() * values.cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

BlpPointEstimate fit_blp(const Eigen::VectorXd& pseudo, const Basis& basis,
                         const Eigen::VectorXd& weights) {
  const Eigen::MatrixXd& b = basis.design();
  const Eigen::Index n = b.rows();
  if (pseudo.size() != n || weights.size() != n) {
    throw Error("fit_blp: dimension mismatch");
  }
  if (basis.k() > n) throw Error("fit_blp: more basis columns than rows");

  BlpPointEstimate est;
  est.Q = b.transpose() * weights.asDiagonal() * b;
  est.Q_inv = checked_inverse(est.Q);
  est.beta = est.Q_inv * (b.transpose() * weights.cwiseProduct(pseudo));
  est.residuals = pseudo - b * est.beta;
  return est;
}

BlpFit fit_parameter_blp(Parameter parameter, const ScoreSet& scores,
                         const ObservationTable& table, const Basis& basis) {
  const Eigen::VectorXd& pseudo = scores.pseudo.of(parameter);
  const Eigen::VectorXd& w = table.weights();
  const Eigen::MatrixXd& b = basis.design();
  const Eigen::Index n = table.n();
  const Eigen::Index k = basis.k();

  BlpPointEstimate est = fit_blp(pseudo, basis, w);

  BlpFit fit;
  fit.parameter = parameter;
  fit.spec = basis.spec();
  fit.beta = est.beta;
  fit.Q = est.Q;
  fit.residuals = est.residuals;
  fit.n = n;

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(k, k);
  if (parameter == Parameter::nate) {
    // No estimated unconditional weights enter the nATE score.
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd bi = b.row(i).transpose();
      sigma.noalias() +=
          w[i] * est.residuals[i] * est.residuals[i] * bi * bi.transpose();
    }
  } else {
    const Eigen::VectorXd& pi = scores.pi_hat;
    const int levels = table.num_levels();
    const double treated_mass = 1.0 - pi[0];
    if (!(treated_mass > 0.0)) throw Error("variance: pi_0 = 1");
    const double denom = treated_mass * treated_mass;

    // gamma_t = E_n[b (psi_t - psi_0)]
    Eigen::MatrixXd gamma(k, levels - 1);
    for (int t = 1; t < levels; ++t) {
      const Eigen::VectorXd contrast =
          scores.psi_t.col(t) - scores.psi_t.col(0);
      gamma.col(t - 1) =
          b.transpose() * w.cwiseProduct(contrast);
    }

    Eigen::MatrixXd a_i(n, levels - 1);  // scalar factors per treatment
    for (Eigen::Index i = 0; i < n; ++i) {
      const int ti = table.t()[static_cast<std::size_t>(i)];
      for (int t = 1; t < levels; ++t) {
        const double d_t = ti == t ? 1.0 : 0.0;
        const double d_0 = ti == 0 ? 1.0 : 0.0;
        a_i(i, t - 1) = (d_t * treated_mass + d_0 * pi[t]) / denom;
      }
    }
    Eigen::MatrixXd correction = a_i * gamma.transpose();  // n x k
    Eigen::RowVectorXd abar = w.transpose() * correction;
    const double sign = parameter == Parameter::rate ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd u =
          b.row(i).transpose() * est.residuals[i] +
          sign * (correction.row(i) - abar).transpose();
      sigma.noalias() += w[i] * u * u.transpose();
    }
  }
  fit.Sigma = 0.5 * (sigma + sigma.transpose());
  Eigen::MatrixXd omega = est.Q_inv * fit.Sigma * est.Q_inv;
  fit.Omega = 0.5 * (omega + omega.transpose());
  return fit;
}

Interval confidence_interval(const BlpFit& fit, const Basis& basis, double z0,
                             double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error("confidence_interval: level must lie in (0, 1)");
  }
  const Eigen::RowVectorXd b0 = basis.eval(z0);
  Interval ci;
  ci.estimate = b0 * fit.beta;
  ci.std_error =
      std::sqrt((b0 * fit.Omega * b0.transpose())(0, 0) /
                static_cast<double>(fit.n));
  const double q = stats::normal_quantile(0.5 + level / 2.0);
  ci.lo = ci.estimate - q * ci.std_error;
  ci.hi = ci.estimate + q * ci.std_error;
  return ci;
}

Interval coefficient_interval(const BlpFit& fit, Eigen::Index j,
                              double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error("coefficient_interval: level must lie in (0, 1)");
  }
  if (j < 0 || j >= fit.beta.size()) {
    throw Error("coefficient_interval: index out of range");
  }
  Interval ci;
  ci.estimate = fit.beta[j];
  ci.std_error = std::sqrt(fit.Omega(j, j) / static_cast<double>(fit.n));
  const double q = stats::normal_quantile(0.5 + level / 2.0);
  ci.lo = ci.estimate - q * ci.std_error;
  ci.hi = ci.estimate + q * ci.std_error;
  return ci;
}

WaldResult wald_test(const BlpFit& fit, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r) {
  if (R.cols() != fit.beta.size() || R.rows() != r.size()) {
    throw Error("wald_test: contrast dimensions mismatch");
  }
  if (R.rows() == 0) throw Error("wald_test: empty contrast");
  Eigen::FullPivLU<Eigen::MatrixXd> lu_r(R);
  if (lu_r.rank() < R.rows()) {
    throw Error("wald_test: contrast matrix is not full row rank");
  }
  const Eigen::VectorXd diff = R * fit.beta - r;
  const Eigen::MatrixXd v = R * fit.Omega * R.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
  if (!lu.isInvertible()) {
    throw Error("wald_test: R Omega R' is singular");
  }
  WaldResult result;
  result.statistic =
      static_cast<double>(fit.n) * diff.dot(lu.solve(diff));
  result.df = static_cast<int>(R.rows());
  result.p_value = stats::chi_squared_sf(result.statistic, result.df);
  return result;
}

Eigen::MatrixXd homogeneity_contrasts(const Basis& basis) {
  const Eigen::Index k = basis.k();
  const auto kind = basis.spec().kind;
  if (kind == BasisSpec::Kind::intercept || k <= 1) {
    return Eigen::MatrixXd::Zero(0, k);
  }
  Eigen::MatrixXd contrasts = Eigen::MatrixXd::Zero(k - 1, k);
  if (kind == BasisSpec::Kind::polynomial) {
    // Flat curve <=> all non-constant coefficients are zero.
    for (Eigen::Index j = 1; j < k; ++j) contrasts(j - 1, j) = 1.0;
  } else {
    // Exclusive dummies and B-splines sum to one; flat <=> equal coefficients.
    for (Eigen::Index j = 1; j < k; ++j) {
      contrasts(j - 1, 0) = 1.0;
      contrasts(j - 1, j) = -1.0;
    }
  }
  return contrasts;
}

LoocvSelection loocv_select_basis(const PseudoOutcomes& pseudo,
                                  const ObservationTable& table,
                                  const std::vector<BasisSpec>& candidates) {
  if (candidates.empty()) throw Error("loocv_select_basis: no candidates");
  const Eigen::VectorXd& w = table.weights();
  const Eigen::Index n = table.n();

  LoocvSelection selection;
  for (const BasisSpec& spec : candidates) {
    LoocvCandidate cand;
    cand.spec = spec;
    try {
      const Basis basis = Basis::build(table, spec);
      cand.k = basis.k();
      const Eigen::MatrixXd& b = basis.design();
      Eigen::MatrixXd q = b.transpose() * w.asDiagonal() * b;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
      if (!(eig.eigenvalues().minCoeff() >
            1e-10 * std::max(eig.eigenvalues().maxCoeff(), 0.0))) {
        cand.disqualified_reason = "singular design";
        selection.candidates.push_back(std::move(cand));
        continue;
      }
      const Eigen::MatrixXd q_inv = eig.eigenvectors() *
                                    eig.eigenvalues().cwiseInverse().asDiagonal() *
                                    eig.eigenvectors().transpose();
      Eigen::VectorXd leverage(n);
      bool leverage_ok = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        leverage[i] = w[i] * (b.row(i) * q_inv * b.row(i).transpose())(0, 0);
        if (leverage[i] >= 1.0 - 1e-8) leverage_ok = false;
      }
      if (!leverage_ok) {
        cand.disqualified_reason = "leverage of 1 (saturated fit)";
        selection.candidates.push_back(std::move(cand));
        continue;
      }
      for (int p = 0; p < 3; ++p) {
        const Eigen::VectorXd& outcome = pseudo.of(kParameters[
            static_cast<std::size_t>(p)]);
        const Eigen::VectorXd beta =
            q_inv * (b.transpose() * w.cwiseProduct(outcome));
        const Eigen::VectorXd resid = outcome - b * beta;
        double mse = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double loo = resid[i] / (1.0 - leverage[i]);
          mse += w[i] * loo * loo;
        }
        cand.mse[static_cast<std::size_t>(p)] = mse;
      }
      cand.feasible = true;
    } catch (const Error& e) {
      cand.disqualified_reason = e.what();
    }
    selection.candidates.push_back(std::move(cand));
  }

  bool any_feasible = false;
  for (const auto& cand : selection.candidates) any_feasible |= cand.feasible;
  if (!any_feasible) {
    throw Error("loocv_select_basis: every candidate was disqualified");
  }

  for (int p = 0; p < 3; ++p) {
    int best = -1;
    for (std::size_t c = 0; c < selection.candidates.size(); ++c) {
      if (!selection.candidates[c].feasible) continue;
      if (best < 0 ||
          selection.candidates[c].mse[static_cast<std::size_t>(p)] <
              selection.candidates[static_cast<std::size_t>(best)]
                  .mse[static_cast<std::size_t>(p)]) {
        best = static_cast<int>(c);
      }
    }
    selection.winner[static_cast<std::size_t>(p)] = best;
  }
  // Most flexible (largest k) of the per-parameter winners, applied to all
  // three parameters so the fitted curves add up.
  selection.common = selection.winner[0];
  for (int p = 1; p < 3; ++p) {
    const int cand = selection.winner[static_cast<std::size_t>(p)];
    if (selection.candidates[static_cast<std::size_t>(cand)].k >
        selection.candidates[static_cast<std::size_t>(selection.common)].k) {
      selection.common = cand;
    }
  }
  return selection;
}

std::vector<BasisSpec> default_basis_grid(int z_index) {
  std::vector<BasisSpec> grid;
  for (int order : {2, 3, 4}) {
    for (int knots : {0, 1, 2, 3}) {
      BasisSpec spec;
      spec.kind = BasisSpec::Kind::bspline;
      spec.z_index = z_index;
      spec.order = order;
      spec.num_interior_knots = knots;
      grid.push_back(spec);
    }
  }
  return grid;
}

}  // namespace hetdecomp
