#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hetdecomp/blp.hpp"
#include "hetdecomp/crossfit.hpp"
#include "hetdecomp/scores.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// Distribution of the re-scaled propensities e_t(X_i) / pi_t per treatment.
// Values well below 1 at the low quantiles signal overlap problems for that
// treatment relative to its share.
struct OverlapReport {
  struct PerTreatment {
    int treatment = 0;
    double min = 0.0;
    double q01 = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    bool flagged = false;
  };
  std::vector<PerTreatment> treatments;
  long clip_count = 0;
  double flag_threshold = 0.05;
  std::vector<std::string> flags;
};

OverlapReport overlap_report(const CrossFittedNuisances& nuis,
                             double flag_threshold = 0.05);

// Average potential outcomes from the AIPW scores: mean and SE per
// treatment level plus differences against control.
struct ApoTable {
  struct Row {
    int treatment = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double diff_vs_control = 0.0;   // 0 for t = 0
    double diff_std_error = 0.0;
    double diff_t_stat = 0.0;
  };
  std::vector<Row> rows;
};

ApoTable apo_table(const ScoreSet& scores, const ObservationTable& table);

// Max absolute deviation of beta(nATE) - beta(rATE) - beta(Delta), relative
// to the nATE coefficient scale. The three fits must share one basis.
struct IdentityAudit {
  double max_relative_deviation = 0.0;
  bool pass = false;
  double tolerance = 1e-10;
};

IdentityAudit identity_audit(const BlpFit& nate, const BlpFit& rate,
                             const BlpFit& delta, double tolerance = 1e-10);

}  // namespace hetdecomp
