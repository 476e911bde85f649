#include "hetdecomp/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"

namespace hetdecomp {

namespace {

// Column standardization with the 1/n variance convention, so that
// standardized columns satisfy n^-1 ||x_j||^2 = 1. Constant columns are
// flagged and excluded from penalized updates (their coefficient is 0).
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;          // 1 for constant columns
  std::vector<bool> is_constant;

  static Standardizer compute(const Eigen::MatrixXd& x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    s.is_constant.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
      const double sd = std::sqrt(var);
      const bool constant = !(sd > 0.0);
      s.is_constant[static_cast<std::size_t>(j)] = constant;
      s.scale[j] = constant ? 1.0 : sd;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.col(j) = (x.col(j).array() - mean[j]) / scale[j];
    }
    return out;
  }
};

LinearFit unstandardize(const Standardizer& std_ctx,
                        const Eigen::VectorXd& beta_std, double y_mean,
                        Penalty penalty, double lambda) {
  LinearFit fit;
  fit.penalty = penalty;
  fit.lambda = lambda;
  fit.coef.resize(beta_std.size());
  double shift = 0.0;
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    fit.coef[j] = beta_std[j] / std_ctx.scale[j];
    shift += fit.coef[j] * std_ctx.mean[j];
  }
  fit.intercept = y_mean - shift;
  return fit;
}

}  // namespace

LinearFit fit_mean(const Eigen::VectorXd& y) {
  if (y.size() == 0) throw Error("fit_mean: empty outcome");
  LinearFit fit;
  fit.intercept = y.mean();
  fit.coef = Eigen::VectorXd::Zero(0);
  return fit;
}

LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error("fit_ols: dimension mismatch");
  if (x.cols() == 0) return fit_mean(y);
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw Error("fit_ols: design is rank deficient");
  }
  Eigen::VectorXd sol = qr.solve(y);
  LinearFit fit;
  fit.intercept = sol[0];
  fit.coef = sol.tail(x.cols());
  return fit;
}

LinearFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda) {
  if (x.rows() != y.size()) throw Error("fit_ridge: dimension mismatch");
  if (x.rows() < 2) throw Error("fit_ridge: need at least 2 observations");
  if (lambda < 0.0) throw Error("fit_ridge: lambda must be nonnegative");
  if (x.cols() == 0) return fit_mean(y);

  const Standardizer std_ctx = Standardizer::compute(x);
  const Eigen::MatrixXd xs = std_ctx.apply(x);
  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xs.transpose() * xs;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double max_eig = eig.eigenvalues().maxCoeff();
  if (lambda == 0.0 &&
      eig.eigenvalues().minCoeff() <= 1e-12 * std::max(max_eig, 1.0)) {
    throw Error(
        "fit_ridge: X'X is rank deficient at lambda = 0; pass lambda > 0");
  }
  gram.diagonal().array() += lambda;
  Eigen::VectorXd beta_std = gram.ldlt().solve(xs.transpose() * yc);
  // Constant columns carry no signal; keep them at exactly zero.
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    if (std_ctx.is_constant[static_cast<std::size_t>(j)]) beta_std[j] = 0.0;
  }
  return unstandardize(std_ctx, beta_std, y_mean, Penalty::ridge, lambda);
}

double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() == 0) return 0.0;
  const Standardizer std_ctx = Standardizer::compute(x);
  const Eigen::MatrixXd xs = std_ctx.apply(x);
  const Eigen::VectorXd yc = y.array() - y.mean();
  const auto n = static_cast<double>(x.rows());
  return (xs.transpose() * yc).cwiseAbs().maxCoeff() / n;
}

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

LinearFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda, const LassoOptions& options,
                    const Eigen::VectorXd* warm) {
  if (x.rows() != y.size()) throw Error("fit_lasso: dimension mismatch");
  if (lambda < 0.0) throw Error("fit_lasso: lambda must be nonnegative");
  if (x.cols() == 0) return fit_mean(y);

  const auto n = static_cast<double>(x.rows());
  const Standardizer std_ctx = Standardizer::compute(x);
  const Eigen::MatrixXd xs = std_ctx.apply(x);
  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::Index p = x.cols();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm != nullptr && warm->size() == p) beta = *warm;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std_ctx.is_constant[static_cast<std::size_t>(j)]) beta[j] = 0.0;
  }
  Eigen::VectorXd residual = yc - xs * beta;

  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std_ctx.is_constant[static_cast<std::size_t>(j)]) continue;
      const double old = beta[j];
      // n^-1 x_j' x_j = 1 on the standardized scale.
      const double z = xs.col(j).dot(residual) / n + old;
      const double updated = soft_threshold(z, lambda);
      if (updated != old) {
        residual += xs.col(j) * (old - updated);
        beta[j] = updated;
        max_change = std::max(max_change, std::fabs(updated - old));
      }
    }
    if (max_change <= options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    double worst_kkt = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std_ctx.is_constant[static_cast<std::size_t>(j)]) continue;
      const double g = xs.col(j).dot(residual) / n;
      const double violation =
          beta[j] != 0.0 ? std::fabs(g - (beta[j] > 0 ? lambda : -lambda))
                         : std::max(0.0, std::fabs(g) - lambda);
      worst_kkt = std::max(worst_kkt, violation);
    }
    throw Error("fit_lasso: no convergence in " +
                std::to_string(options.max_sweeps) +
                " sweeps (KKT residual " + std::to_string(worst_kkt) + ")");
  }
  return unstandardize(std_ctx, beta, y_mean, Penalty::lasso, lambda);
}

// ---------------------------------------------------------------------------
// Multinomial logit
// ---------------------------------------------------------------------------

Eigen::MatrixXd MultinomialLogitFit::predict_proba(
    const Eigen::MatrixXd& x) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index num_classes = coef.rows();
  if (coef.cols() != x.cols() + 1) {
    throw Error("multinomial predict: feature count mismatch");
  }
  Eigen::MatrixXd eta(n, num_classes);
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    eta.col(c) =
        (x * coef.row(c).tail(x.cols()).transpose()).array() + coef(c, 0);
  }
  Eigen::MatrixXd probs(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = eta.row(i).maxCoeff();
    Eigen::ArrayXd e = (eta.row(i).array() - m).exp();
    probs.row(i) = (e / e.sum()).matrix();
  }
  return probs;
}

namespace {

// Internal parametrization: theta is (C-1) x (q+1) for classes 1..C-1 on the
// standardized feature scale; class 0 has linear predictor 0.
struct LogitWork {
  Eigen::MatrixXd design;           // n x (q+1): leading ones column
  std::vector<int> labels;
  int num_classes;
  double lambda;
  Penalty penalty;

  Eigen::Index n() const { return design.rows(); }
  Eigen::Index q1() const { return design.cols(); }

  Eigen::MatrixXd probs(const Eigen::MatrixXd& theta) const {
    const Eigen::Index nn = n();
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(nn, num_classes);
    eta.rightCols(num_classes - 1) = design * theta.transpose();
    Eigen::MatrixXd p(nn, num_classes);
    for (Eigen::Index i = 0; i < nn; ++i) {
      const double m = eta.row(i).maxCoeff();
      Eigen::ArrayXd e = (eta.row(i).array() - m).exp();
      p.row(i) = (e / e.sum()).matrix();
    }
    return p;
  }

  // Mean negative log-likelihood (deviance / 2n up to scale).
  double nll(const Eigen::MatrixXd& theta) const {
    const Eigen::Index nn = n();
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(nn, num_classes);
    eta.rightCols(num_classes - 1) = design * theta.transpose();
    double total = 0.0;
    for (Eigen::Index i = 0; i < nn; ++i) {
      const double m = eta.row(i).maxCoeff();
      const double lse = m + std::log((eta.row(i).array() - m).exp().sum());
      total += lse - eta(i, labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(nn);
  }

  double penalty_value(const Eigen::MatrixXd& theta) const {
    if (lambda == 0.0 || penalty == Penalty::none) return 0.0;
    const auto slopes = theta.rightCols(theta.cols() - 1);
    if (penalty == Penalty::lasso) return lambda * slopes.cwiseAbs().sum();
    return lambda * slopes.squaredNorm();
  }

  double objective(const Eigen::MatrixXd& theta) const {
    return nll(theta) + penalty_value(theta);
  }

  // Gradient of the smooth part (nll, plus l2 term if ridge).
  Eigen::MatrixXd smooth_gradient(const Eigen::MatrixXd& theta) const {
    const Eigen::MatrixXd p = probs(theta);
    Eigen::MatrixXd resid = p.rightCols(num_classes - 1);
    for (Eigen::Index i = 0; i < n(); ++i) {
      const int lab = labels[static_cast<std::size_t>(i)];
      if (lab > 0) resid(i, lab - 1) -= 1.0;
    }
    Eigen::MatrixXd grad =
        (resid.transpose() * design) / static_cast<double>(n());
    if (penalty == Penalty::ridge && lambda > 0.0) {
      grad.rightCols(grad.cols() - 1) +=
          2.0 * lambda * theta.rightCols(theta.cols() - 1);
    }
    return grad;
  }
};

Eigen::MatrixXd soft_threshold_slopes(const Eigen::MatrixXd& theta,
                                      double gamma) {
  Eigen::MatrixXd out = theta;
  for (Eigen::Index c = 0; c < out.rows(); ++c) {
    for (Eigen::Index j = 1; j < out.cols(); ++j) {
      out(c, j) = soft_threshold(out(c, j), gamma);
    }
  }
  return out;
}

// Monotone FISTA for the l1 (and large l2) problems: accelerated proximal
// gradient with a function-value restart so the objective never increases.
Eigen::MatrixXd solve_logit_proximal(const LogitWork& work,
                                     Eigen::MatrixXd theta,
                                     const MultinomialLogitOptions& options,
                                     std::vector<double>* trace) {
  // Softmax Hessian is bounded by (1/2) Gram in the block sense.
  Eigen::MatrixXd gram =
      work.design.transpose() * work.design / static_cast<double>(work.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  double lipschitz = 0.5 * eig.eigenvalues().maxCoeff();
  if (work.penalty == Penalty::ridge) lipschitz += 2.0 * work.lambda;
  const double step = 1.0 / std::max(lipschitz, 1e-12);

  auto prox = [&](const Eigen::MatrixXd& v) {
    if (work.penalty == Penalty::lasso && work.lambda > 0.0) {
      return soft_threshold_slopes(v, step * work.lambda);
    }
    return v;
  };

  Eigen::MatrixXd momentum = theta;
  double t_accel = 1.0;
  double f_curr = work.objective(theta);
  if (trace) trace->push_back(f_curr);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    Eigen::MatrixXd candidate =
        prox(momentum - step * work.smooth_gradient(momentum));
    double f_candidate = work.objective(candidate);
    if (f_candidate > f_curr) {
      // Restart: plain proximal step from the current iterate is monotone.
      candidate = prox(theta - step * work.smooth_gradient(theta));
      f_candidate = work.objective(candidate);
      t_accel = 1.0;
    }
    const double t_next =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_accel * t_accel));
    momentum = candidate + ((t_accel - 1.0) / t_next) * (candidate - theta);
    t_accel = t_next;

    const double change = (candidate - theta).cwiseAbs().maxCoeff();
    const double f_change = f_curr - f_candidate;
    theta = std::move(candidate);
    f_curr = f_candidate;
    if (trace) trace->push_back(f_curr);
    if (change <= options.param_tol &&
        f_change <= options.tol * (std::fabs(f_curr) + 1.0)) {
      return theta;
    }
  }
  const Eigen::MatrixXd residual =
      (theta - prox(theta - step * work.smooth_gradient(theta))) / step;
  throw Error("fit_multinomial_logit: no convergence in " +
              std::to_string(options.max_iter) + " iterations (prox residual " +
              std::to_string(residual.cwiseAbs().maxCoeff()) + ")");
}

// Damped Newton for the smooth problems (l2 penalty or unpenalized).
Eigen::MatrixXd solve_logit_newton(const LogitWork& work, Eigen::MatrixXd theta,
                                   const MultinomialLogitOptions& options,
                                   std::vector<double>* trace) {
  const Eigen::Index q1 = work.q1();
  const Eigen::Index blocks = work.num_classes - 1;
  const Eigen::Index dim = blocks * q1;
  double f_curr = work.objective(theta);
  if (trace) trace->push_back(f_curr);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::MatrixXd grad = work.smooth_gradient(theta);
    const double grad_norm = grad.cwiseAbs().maxCoeff();

    const Eigen::MatrixXd p = work.probs(theta);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < work.n(); ++i) {
      for (Eigen::Index c = 0; c < blocks; ++c) {
        const double pc = p(i, c + 1);
        for (Eigen::Index c2 = c; c2 < blocks; ++c2) {
          const double w =
              (c == c2 ? pc * (1.0 - pc) : -pc * p(i, c2 + 1)) /
              static_cast<double>(work.n());
          if (w == 0.0) continue;
          for (Eigen::Index a = 0; a < q1; ++a) {
            const double da = work.design(i, a);
            for (Eigen::Index b = 0; b < q1; ++b) {
              hess(c * q1 + a, c2 * q1 + b) += w * da * work.design(i, b);
            }
          }
        }
      }
    }
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < r; ++c) hess(r, c) = hess(c, r);
    }
    if (work.penalty == Penalty::ridge && work.lambda > 0.0) {
      for (Eigen::Index c = 0; c < blocks; ++c) {
        for (Eigen::Index j = 1; j < q1; ++j) {
          hess(c * q1 + j, c * q1 + j) += 2.0 * work.lambda;
        }
      }
    }

    Eigen::VectorXd gvec(dim);
    for (Eigen::Index c = 0; c < blocks; ++c) {
      gvec.segment(c * q1, q1) = grad.row(c).transpose();
    }

    Eigen::VectorXd direction;
    double damping = 1e-10;
    for (;;) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      direction = ldlt.solve(-gvec);
      if (ldlt.info() == Eigen::Success && direction.allFinite()) break;
      damping *= 100.0;
      if (damping > 1e6) throw Error("fit_multinomial_logit: Newton solve failed");
    }

    double step_size = 1.0;
    Eigen::MatrixXd candidate;
    double f_candidate = f_curr;
    for (int halvings = 0; halvings < 60; ++halvings) {
      candidate = theta;
      for (Eigen::Index c = 0; c < blocks; ++c) {
        candidate.row(c) +=
            step_size * direction.segment(c * q1, q1).transpose();
      }
      f_candidate = work.objective(candidate);
      if (f_candidate <= f_curr) break;
      step_size *= 0.5;
    }
    if (f_candidate > f_curr) {
      // At a numerical stationary point; stop rather than oscillate.
      return theta;
    }
    const double change = step_size * direction.cwiseAbs().maxCoeff();
    theta = std::move(candidate);
    const double f_change = f_curr - f_candidate;
    f_curr = f_candidate;
    if (trace) trace->push_back(f_curr);

    if (work.lambda == 0.0 && theta.cwiseAbs().maxCoeff() > 30.0) {
      throw Error(
          "fit_multinomial_logit: coefficients diverging (separated classes?); "
          "pass lambda > 0");
    }
    if (change <= options.param_tol &&
        f_change <= options.tol * (std::fabs(f_curr) + 1.0) &&
        grad_norm <= 1e-6) {
      return theta;
    }
  }
  throw Error("fit_multinomial_logit: Newton did not converge in " +
              std::to_string(options.max_iter) + " iterations");
}

}  // namespace

MultinomialLogitFit fit_multinomial_logit(
    const Eigen::MatrixXd& x, const std::vector<int>& labels, int num_classes,
    double lambda, Penalty penalty, const MultinomialLogitOptions& options,
    const Eigen::MatrixXd* warm) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error("fit_multinomial_logit: label length mismatch");
  }
  if (num_classes < 2) throw Error("fit_multinomial_logit: need >= 2 classes");
  if (lambda < 0.0) throw Error("fit_multinomial_logit: negative lambda");
  std::vector<Eigen::Index> class_counts(static_cast<std::size_t>(num_classes),
                                         0);
  for (int lab : labels) {
    if (lab < 0 || lab >= num_classes) {
      throw Error("fit_multinomial_logit: label outside 0.." +
                  std::to_string(num_classes - 1));
    }
    class_counts[static_cast<std::size_t>(lab)]++;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (class_counts[static_cast<std::size_t>(c)] == 0) {
      throw Error("fit_multinomial_logit: class " + std::to_string(c) +
                  " has no observations");
    }
  }

  // Drop constant columns from the optimization; their slopes are zero.
  const Standardizer std_ctx = Standardizer::compute(x);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (!std_ctx.is_constant[static_cast<std::size_t>(j)]) active.push_back(j);
  }
  const Eigen::Index q = static_cast<Eigen::Index>(active.size());
  LogitWork work;
  work.design.resize(n, q + 1);
  work.design.col(0).setOnes();
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::Index j = active[static_cast<std::size_t>(k)];
    work.design.col(k + 1) =
        (x.col(j).array() - std_ctx.mean[j]) / std_ctx.scale[j];
  }
  work.labels = labels;
  work.num_classes = num_classes;
  work.lambda = lambda;
  work.penalty = penalty;

  // Start from intercepts matching class shares (exact solution when q = 0).
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(num_classes - 1, q + 1);
  const double log_share0 =
      std::log(static_cast<double>(class_counts[0]) / static_cast<double>(n));
  for (int c = 1; c < num_classes; ++c) {
    theta(c - 1, 0) =
        std::log(static_cast<double>(class_counts[static_cast<std::size_t>(c)]) /
                 static_cast<double>(n)) -
        log_share0;
  }
  if (warm != nullptr && warm->rows() == num_classes - 1 &&
      warm->cols() == q + 1) {
    theta = *warm;
  }

  std::vector<double> trace;
  std::vector<double>* trace_ptr = options.track_objective ? &trace : nullptr;
  const bool smooth = penalty != Penalty::lasso || lambda == 0.0;
  if (q == 0) {
    // Intercept-only: the share-based start is already the MLE.
  } else if (smooth) {
    theta = solve_logit_newton(work, std::move(theta), options, trace_ptr);
  } else {
    theta = solve_logit_proximal(work, std::move(theta), options, trace_ptr);
  }

  MultinomialLogitFit fit;
  fit.penalty = penalty;
  fit.lambda = lambda;
  fit.objective_trace = std::move(trace);
  fit.coef = Eigen::MatrixXd::Zero(num_classes, x.cols() + 1);
  for (int c = 1; c < num_classes; ++c) {
    double intercept = theta(c - 1, 0);
    for (Eigen::Index k = 0; k < q; ++k) {
      const Eigen::Index j = active[static_cast<std::size_t>(k)];
      const double slope = theta(c - 1, k + 1) / std_ctx.scale[j];
      fit.coef(c, j + 1) = slope;
      intercept -= slope * std_ctx.mean[j];
    }
    fit.coef(c, 0) = intercept;
  }
  return fit;
}

double logit_lambda_max(const Eigen::MatrixXd& x,
                        const std::vector<int>& labels, int num_classes) {
  if (x.cols() == 0) return 0.0;
  const Eigen::Index n = x.rows();
  const Standardizer std_ctx = Standardizer::compute(x);
  const Eigen::MatrixXd xs = std_ctx.apply(x);
  Eigen::VectorXd shares = Eigen::VectorXd::Zero(num_classes);
  for (int lab : labels) shares[lab] += 1.0 / static_cast<double>(n);
  double lam = 0.0;
  // Gradient of the slopes at the intercept-only solution.
  for (int c = 1; c < num_classes; ++c) {
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == c) indicator[i] = 1.0;
    }
    Eigen::VectorXd resid = Eigen::VectorXd::Constant(n, shares[c]) - indicator;
    lam = std::max(
        lam, (xs.transpose() * resid).cwiseAbs().maxCoeff() /
                 static_cast<double>(n));
  }
  return lam;
}

std::vector<double> lambda_grid(double lambda_max, int size,
                                double min_ratio) {
  if (size < 1) throw Error("lambda_grid: size must be positive");
  if (lambda_max <= 0.0) return {0.0};
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(size));
  if (size == 1) return {lambda_max};
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < size; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(size - 1);
    grid.push_back(std::exp(log_max + frac * (log_min - log_max)));
  }
  return grid;
}

namespace {

// Round-robin fold assignment of shuffled indices; when `labels` is given the
// shuffle happens within label groups so folds are stratified.
std::vector<int> assign_folds(Eigen::Index n, int folds, std::uint64_t seed,
                              const std::vector<int>* labels,
                              int num_classes) {
  std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
  auto rng = make_rng(seed, Stream::cv);
  int next_fold = 0;
  if (labels == nullptr) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (auto idx : order) {
      fold_of[static_cast<std::size_t>(idx)] = next_fold;
      next_fold = (next_fold + 1) % folds;
    }
    return fold_of;
  }
  for (int c = 0; c < num_classes; ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((*labels)[static_cast<std::size_t>(i)] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) {
      fold_of[static_cast<std::size_t>(idx)] = next_fold;
      next_fold = (next_fold + 1) % folds;
    }
  }
  return fold_of;
}

std::vector<double> sorted_descending(std::vector<double> grid) {
  if (grid.empty()) throw Error("cross_validate: empty lambda grid");
  std::sort(grid.begin(), grid.end(), std::greater<double>());
  return grid;
}

// First strict minimum scanning from the largest lambda implements the
// "ties toward larger lambda" rule.
std::size_t pick_best(const std::vector<double>& errors) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] < errors[best]) best = i;
  }
  return best;
}

}  // namespace

CvResult cross_validate_linear(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y,
                               std::vector<double> grid, int folds,
                               Penalty penalty, std::uint64_t seed,
                               const LassoOptions& options) {
  if (folds < 2) throw Error("cross_validate_linear: need K >= 2");
  const Eigen::Index n = x.rows();
  if (n < folds) throw Error("cross_validate_linear: K exceeds sample size");
  CvResult result;
  result.lambdas = sorted_descending(std::move(grid));
  result.cv_error.assign(result.lambdas.size(), 0.0);

  const std::vector<int> fold_of = assign_folds(n, folds, seed, nullptr, 0);
  Eigen::VectorXd sq_err = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(result.lambdas.size()));
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      y_train[static_cast<Eigen::Index>(i)] = y[train[i]];
    }
    Eigen::MatrixXd x_test(static_cast<Eigen::Index>(test.size()), x.cols());
    Eigen::VectorXd y_test(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      x_test.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
      y_test[static_cast<Eigen::Index>(i)] = y[test[i]];
    }
    Eigen::VectorXd warm;
    for (std::size_t g = 0; g < result.lambdas.size(); ++g) {
      LinearFit fit;
      if (penalty == Penalty::lasso) {
        fit = fit_lasso(x_train, y_train, result.lambdas[g], options,
                        warm.size() ? &warm : nullptr);
        // Warm-start the next (smaller) lambda on the standardized scale.
        const Standardizer sc = Standardizer::compute(x_train);
        warm = fit.coef.cwiseProduct(sc.scale);
      } else {
        fit = fit_ridge(x_train, y_train, result.lambdas[g]);
      }
      sq_err[static_cast<Eigen::Index>(g)] +=
          (y_test - fit.predict(x_test)).squaredNorm();
    }
  }
  for (std::size_t g = 0; g < result.lambdas.size(); ++g) {
    result.cv_error[g] =
        sq_err[static_cast<Eigen::Index>(g)] / static_cast<double>(n);
  }
  result.best_lambda = result.lambdas[pick_best(result.cv_error)];
  return result;
}

CvResult cross_validate_logit(const Eigen::MatrixXd& x,
                              const std::vector<int>& labels, int num_classes,
                              std::vector<double> grid, int folds,
                              Penalty penalty, std::uint64_t seed,
                              const MultinomialLogitOptions& options) {
  if (folds < 2) throw Error("cross_validate_logit: need K >= 2");
  const Eigen::Index n = x.rows();
  if (n < folds) throw Error("cross_validate_logit: K exceeds sample size");
  CvResult result;
  result.lambdas = sorted_descending(std::move(grid));
  result.cv_error.assign(result.lambdas.size(), 0.0);

  const std::vector<int> fold_of =
      assign_folds(n, folds, seed, &labels, num_classes);
  Eigen::VectorXd deviance = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(result.lambdas.size()));
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), x.cols());
    std::vector<int> lab_train(train.size());
    std::vector<Eigen::Index> class_count(
        static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      lab_train[i] = labels[static_cast<std::size_t>(train[i])];
      class_count[static_cast<std::size_t>(lab_train[i])]++;
    }
    for (int c = 0; c < num_classes; ++c) {
      if (class_count[static_cast<std::size_t>(c)] == 0) {
        throw Error("cross_validate_logit: class " + std::to_string(c) +
                    " missing from training fold " + std::to_string(f) +
                    "; too few observations of this class for " +
                    std::to_string(folds) + "-fold CV");
      }
    }
    Eigen::MatrixXd x_test(static_cast<Eigen::Index>(test.size()), x.cols());
    std::vector<int> lab_test(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      x_test.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
      lab_test[i] = labels[static_cast<std::size_t>(test[i])];
    }
    for (std::size_t g = 0; g < result.lambdas.size(); ++g) {
      MultinomialLogitFit fit =
          fit_multinomial_logit(x_train, lab_train, num_classes,
                                result.lambdas[g], penalty, options);
      const Eigen::MatrixXd probs = fit.predict_proba(x_test);
      double dev = 0.0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const double p = std::max(probs(static_cast<Eigen::Index>(i),
                                        lab_test[i]),
                                  1e-300);
        dev += -2.0 * std::log(p);
      }
      deviance[static_cast<Eigen::Index>(g)] += dev;
    }
  }
  for (std::size_t g = 0; g < result.lambdas.size(); ++g) {
    result.cv_error[g] =
        deviance[static_cast<Eigen::Index>(g)] / static_cast<double>(n);
  }
  result.best_lambda = result.lambdas[pick_best(result.cv_error)];
  return result;
}

// ---------------------------------------------------------------------------
// Learner factories
// ---------------------------------------------------------------------------

RegressionLearner mean_learner() {
  return [](const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
    const LinearFit fit = fit_mean(y);
    return RegressionModel([fit](const Eigen::MatrixXd& xq) {
      return Eigen::VectorXd::Constant(xq.rows(), fit.intercept).eval();
    });
  };
}

RegressionLearner ols_learner() {
  return [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const LinearFit fit = fit_ols(x, y);
    return RegressionModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict(xq); });
  };
}

RegressionLearner ridge_learner(double lambda) {
  return [lambda](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const LinearFit fit = fit_ridge(x, y, lambda);
    return RegressionModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict(xq); });
  };
}

RegressionLearner ridge_cv_learner(int cv_folds, std::uint64_t seed,
                                   int grid_size, double min_ratio) {
  return [=](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    // Ridge reuses the lasso lambda scale blown up to cover heavy shrinkage.
    const double lam_max =
        std::max(lasso_lambda_max(x, y) * static_cast<double>(x.rows()), 1e-8);
    const CvResult cv = cross_validate_linear(
        x, y, lambda_grid(lam_max, grid_size, min_ratio), cv_folds,
        Penalty::ridge, seed);
    const LinearFit fit = fit_ridge(x, y, cv.best_lambda);
    return RegressionModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict(xq); });
  };
}

RegressionLearner lasso_cv_learner(int cv_folds, std::uint64_t seed,
                                   int grid_size, double min_ratio) {
  return [=](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const double lam_max = lasso_lambda_max(x, y);
    if (lam_max <= 0.0) {
      const LinearFit fit = fit_mean(y);
      return RegressionModel([fit](const Eigen::MatrixXd& xq) {
        return Eigen::VectorXd::Constant(xq.rows(), fit.intercept).eval();
      });
    }
    const CvResult cv = cross_validate_linear(
        x, y, lambda_grid(lam_max, grid_size, min_ratio), cv_folds,
        Penalty::lasso, seed);
    const LinearFit fit = fit_lasso(x, y, cv.best_lambda);
    return RegressionModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict(xq); });
  };
}

PropensityLearner multinomial_logit_learner(double lambda, Penalty penalty) {
  return [lambda, penalty](const Eigen::MatrixXd& x,
                           const std::vector<int>& labels, int num_classes) {
    const MultinomialLogitFit fit =
        fit_multinomial_logit(x, labels, num_classes, lambda, penalty);
    return PropensityModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict_proba(xq); });
  };
}

PropensityLearner logit_l1_cv_learner(int cv_folds, std::uint64_t seed,
                                      int grid_size, double min_ratio) {
  return [=](const Eigen::MatrixXd& x, const std::vector<int>& labels,
             int num_classes) {
    const double lam_max = logit_lambda_max(x, labels, num_classes);
    double best = 0.0;
    if (lam_max > 0.0) {
      const CvResult cv = cross_validate_logit(
          x, labels, num_classes, lambda_grid(lam_max, grid_size, min_ratio),
          cv_folds, Penalty::lasso, seed);
      best = cv.best_lambda;
    }
    const MultinomialLogitFit fit =
        fit_multinomial_logit(x, labels, num_classes, best, Penalty::lasso);
    return PropensityModel(
        [fit](const Eigen::MatrixXd& xq) { return fit.predict_proba(xq); });
  };
}

PropensityLearner class_share_learner() {
  return [](const Eigen::MatrixXd& x, const std::vector<int>& labels,
            int num_classes) {
    Eigen::VectorXd shares = Eigen::VectorXd::Zero(num_classes);
    for (int lab : labels) shares[lab] += 1.0;
    shares /= static_cast<double>(labels.size());
    (void)x;
    return PropensityModel([shares](const Eigen::MatrixXd& xq) {
      Eigen::MatrixXd probs(xq.rows(), shares.size());
      probs.rowwise() = shares.transpose();
      return probs;
    });
  };
}

}  // namespace hetdecomp
