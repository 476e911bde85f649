#include "hetdecomp/diagnostics.hpp"

#include <cmath>

#include "hetdecomp/error.hpp"
#include "hetdecomp/stats.hpp"

namespace hetdecomp {

OverlapReport overlap_report(const CrossFittedNuisances& nuis,
                             double flag_threshold) {
  OverlapReport report;
  report.clip_count = nuis.clip_count;
  report.flag_threshold = flag_threshold;
  const Eigen::Index levels = nuis.e_hat.cols();
  for (Eigen::Index t = 0; t < levels; ++t) {
    const double pi_t = nuis.pi_hat[t];
    std::vector<double> rescaled;
    rescaled.reserve(static_cast<std::size_t>(nuis.e_hat.rows()));
    for (Eigen::Index i = 0; i < nuis.e_hat.rows(); ++i) {
      rescaled.push_back(pi_t > 0.0 ? nuis.e_hat(i, t) / pi_t : 0.0);
    }
    OverlapReport::PerTreatment row;
    row.treatment = static_cast<int>(t);
    row.min = stats::sample_quantile(rescaled, 0.0);
    row.q01 = stats::sample_quantile(rescaled, 0.01);
    row.q05 = stats::sample_quantile(rescaled, 0.05);
    row.q25 = stats::sample_quantile(rescaled, 0.25);
    row.q50 = stats::sample_quantile(rescaled, 0.50);
    row.flagged = row.q01 < flag_threshold;
    if (row.flagged) {
      report.flags.push_back(
          "treatment " + std::to_string(t) +
          ": 1% quantile of e_t(x)/pi_t below threshold");
    }
    report.treatments.push_back(row);
  }
  if (report.clip_count > 0) {
    report.flags.push_back("propensity floor applied to " +
                           std::to_string(report.clip_count) + " entries");
  }
  return report;
}

ApoTable apo_table(const ScoreSet& scores, const ObservationTable& table) {
  ApoTable out;
  const Eigen::Index n = table.n();
  const Eigen::VectorXd& w = table.weights();
  const Eigen::Index levels = scores.psi_t.cols();

  auto weighted_se = [&](const Eigen::VectorXd& v, double mean) {
    // Population-style second moment; /n turns it into the mean's SE.
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      var += w[i] * (v[i] - mean) * (v[i] - mean);
    }
    return std::sqrt(var / static_cast<double>(n));
  };

  const Eigen::VectorXd psi0 = scores.psi_t.col(0);
  const double mean0 = table.weighted_mean(psi0);
  for (Eigen::Index t = 0; t < levels; ++t) {
    ApoTable::Row row;
    row.treatment = static_cast<int>(t);
    const Eigen::VectorXd psi = scores.psi_t.col(t);
    row.mean = table.weighted_mean(psi);
    row.std_error = weighted_se(psi, row.mean);
    if (t > 0) {
      const Eigen::VectorXd diff = psi - psi0;
      row.diff_vs_control = row.mean - mean0;
      row.diff_std_error = weighted_se(diff, row.diff_vs_control);
      row.diff_t_stat = row.diff_std_error > 0.0
                            ? row.diff_vs_control / row.diff_std_error
                            : 0.0;
    }
    out.rows.push_back(row);
  }
  return out;
}

IdentityAudit identity_audit(const BlpFit& nate, const BlpFit& rate,
                             const BlpFit& delta, double tolerance) {
  if (!(nate.spec == rate.spec) || !(nate.spec == delta.spec)) {
    throw Error("identity_audit: fits use different bases (" +
                nate.spec.describe() + " vs " + rate.spec.describe() + " vs " +
                delta.spec.describe() + ")");
  }
  if (nate.beta.size() != rate.beta.size() ||
      nate.beta.size() != delta.beta.size()) {
    throw Error("identity_audit: coefficient lengths differ");
  }
  IdentityAudit audit;
  audit.tolerance = tolerance;
  const double scale = std::max(nate.beta.cwiseAbs().maxCoeff(), 1.0);
  audit.max_relative_deviation =
      (nate.beta - rate.beta - delta.beta).cwiseAbs().maxCoeff() / scale;
  audit.pass = audit.max_relative_deviation <= tolerance;
  return audit;
}

}  // namespace hetdecomp
