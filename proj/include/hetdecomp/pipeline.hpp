#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hetdecomp/blp.hpp"
#include "hetdecomp/config.hpp"
#include "hetdecomp/diagnostics.hpp"
#include "hetdecomp/scores.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// End-to-end estimation driven by a RunConfig. The CLI is a thin shell over
// this; tests call it directly with the same configs.
struct FitOutput {
  std::shared_ptr<ObservationTable> table;
  ScoreSet scores;
  Basis basis;
  std::array<BlpFit, 3> fits;           // nATE, rATE, Delta
  std::array<BlpFit, 3> unconditional;  // intercept-only fits
  std::array<std::optional<WaldResult>, 3> homogeneity;  // flat-curve test
  std::optional<LoocvSelection> loocv;
  OverlapReport overlap;
  ApoTable apo;
  IdentityAudit audit;
  double level = 0.95;
  std::vector<std::string> warnings;
};

FitOutput run_fit_pipeline(const RunConfig& config);

// Curve evaluation points for plot-ready exports: the group values for
// dummies, a uniform grid over the data range otherwise.
std::vector<double> curve_grid(const ObservationTable& table,
                               const Basis& basis, int points = 101);

}  // namespace hetdecomp
