#pragma once

#include <string>

#include "hetdecomp/pipeline.hpp"
#include "hetdecomp/simulate.hpp"

namespace hetdecomp {

enum class ReportFormat { json, csv, text };
ReportFormat parse_report_format(const std::string& name);
const char* report_format_extension(ReportFormat format);

// All renderers are pure functions of their inputs and emit byte-identical
// output for identical inputs.
std::string render_decomposition_report(const FitOutput& output,
                                        ReportFormat format);
std::string render_diagnostics_report(const FitOutput& output,
                                      ReportFormat format);
std::string render_coverage_report(const McDesign& design,
                                   const McResult& result,
                                   const TrueBlpParams& truth,
                                   ReportFormat format);

// Plot-ready CSV of the fitted decomposition curves with pointwise CIs.
std::string render_curve_csv(const FitOutput& output);
// Per-observation pseudo-outcomes (one column per parameter).
std::string render_pseudo_outcome_csv(const ScoreSet& scores);

}  // namespace hetdecomp
