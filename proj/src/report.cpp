#include "hetdecomp/report.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "hetdecomp/csv.hpp"
#include "hetdecomp/error.hpp"

namespace hetdecomp {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

json interval_json(const Interval& ci) {
  return json{{"estimate", ci.estimate},
              {"std_error", ci.std_error},
              {"ci_lo", ci.lo},
              {"ci_hi", ci.hi}};
}

json wald_json(const WaldResult& wald) {
  return json{{"statistic", wald.statistic},
              {"df", wald.df},
              {"p_value", wald.p_value}};
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "text") return ReportFormat::text;
  throw Error("unknown format '" + name + "' (valid: json, csv, text)");
}

const char* report_format_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    default: return "txt";
  }
}

std::string render_decomposition_report(const FitOutput& output,
                                        ReportFormat format) {
  const std::vector<double> grid = curve_grid(*output.table, output.basis, 11);

  if (format == ReportFormat::json) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["n"] = static_cast<long>(output.table->n());
    doc["num_treatments"] = output.table->num_treatments();
    doc["basis"] = output.basis.spec().describe();
    doc["level"] = output.level;
    if (output.loocv) {
      json loocv;
      for (const auto& cand : output.loocv->candidates) {
        loocv.push_back(json{{"spec", cand.spec.describe()},
                             {"k", static_cast<long>(cand.k)},
                             {"feasible", cand.feasible},
                             {"mse_nate", cand.mse[0]},
                             {"mse_rate", cand.mse[1]},
                             {"mse_delta", cand.mse[2]}});
      }
      doc["loocv_candidates"] = loocv;
    }
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
      const BlpFit& fit = output.fits[p];
      json entry;
      entry["unconditional"] =
          interval_json(coefficient_interval(output.unconditional[p], 0,
                                             output.level));
      json coefs;
      for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        coefs.push_back(
            interval_json(coefficient_interval(fit, j, output.level)));
      }
      entry["coefficients"] = coefs;
      if (output.homogeneity[p]) {
        entry["homogeneity_wald"] = wald_json(*output.homogeneity[p]);
      }
      json curve;
      for (double z0 : grid) {
        const Interval ci =
            confidence_interval(fit, output.basis, z0, output.level);
        curve.push_back(json{{"z", z0},
                             {"estimate", ci.estimate},
                             {"ci_lo", ci.lo},
                             {"ci_hi", ci.hi}});
      }
      entry["curve"] = curve;
      doc[parameter_name(kParameters[p])] = entry;
    }
    doc["identity_audit"] =
        json{{"max_relative_deviation", output.audit.max_relative_deviation},
             {"pass", output.audit.pass}};
    if (!output.warnings.empty()) doc["warnings"] = output.warnings;
    return doc.dump(2) + "\n";
  }

  if (format == ReportFormat::csv) {
    csv::Document doc;
    doc.header = {"parameter", "term",     "estimate", "std_error",
                  "ci_lo",     "ci_hi",    "statistic", "p_value"};
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
      const char* name = parameter_name(kParameters[p]);
      const Interval unc =
          coefficient_interval(output.unconditional[p], 0, output.level);
      doc.rows.push_back({name, "unconditional", csv::format_double(unc.estimate),
                          csv::format_double(unc.std_error),
                          csv::format_double(unc.lo), csv::format_double(unc.hi),
                          "", ""});
      const BlpFit& fit = output.fits[p];
      for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        const Interval ci = coefficient_interval(fit, j, output.level);
        doc.rows.push_back({name, "beta" + std::to_string(j),
                            csv::format_double(ci.estimate),
                            csv::format_double(ci.std_error),
                            csv::format_double(ci.lo),
                            csv::format_double(ci.hi), "", ""});
      }
      if (output.homogeneity[p]) {
        doc.rows.push_back({name, "homogeneity_wald", "", "", "", "",
                            csv::format_double(output.homogeneity[p]->statistic),
                            csv::format_double(output.homogeneity[p]->p_value)});
      }
    }
    return csv::to_string(doc);
  }

  std::ostringstream out;
  out << "Decomposition of treatment effect heterogeneity\n";
  out << "  observations: " << output.table->n()
      << ", treatment levels: " << output.table->num_levels() << "\n";
  out << "  basis: " << output.basis.spec().describe() << "\n";
  out << "  confidence level: " << fixed(output.level, 2) << "\n\n";
  out << "Unconditional estimates\n";
  for (std::size_t p = 0; p < kParameters.size(); ++p) {
    const Interval ci =
        coefficient_interval(output.unconditional[p], 0, output.level);
    out << "  " << parameter_name(kParameters[p]) << ": " << fixed(ci.estimate)
        << "  (se " << fixed(ci.std_error) << ", ci [" << fixed(ci.lo) << ", "
        << fixed(ci.hi) << "])\n";
  }
  for (std::size_t p = 0; p < kParameters.size(); ++p) {
    const BlpFit& fit = output.fits[p];
    out << "\n" << parameter_name(kParameters[p]) << " coefficients\n";
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
      const Interval ci = coefficient_interval(fit, j, output.level);
      out << "  beta" << j << ": " << fixed(ci.estimate) << "  (se "
          << fixed(ci.std_error) << ", ci [" << fixed(ci.lo) << ", "
          << fixed(ci.hi) << "])\n";
    }
    if (output.homogeneity[p]) {
      out << "  flat-curve Wald: stat " << fixed(output.homogeneity[p]->statistic)
          << ", df " << output.homogeneity[p]->df << ", p "
          << fixed(output.homogeneity[p]->p_value) << "\n";
    }
  }
  out << "\nidentity audit (nATE - rATE - Delta): max relative deviation "
      << csv::format_double(output.audit.max_relative_deviation)
      << (output.audit.pass ? " [ok]" : " [FAIL]") << "\n";
  for (const auto& warning : output.warnings) {
    out << "warning: " << warning << "\n";
  }
  return out.str();
}

std::string render_diagnostics_report(const FitOutput& output,
                                      ReportFormat format) {
  const OverlapReport& overlap = output.overlap;
  const ApoTable& apo = output.apo;

  if (format == ReportFormat::json) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    json rescaled;
    for (const auto& row : overlap.treatments) {
      rescaled.push_back(json{{"treatment", row.treatment},
                              {"min", row.min},
                              {"q01", row.q01},
                              {"q05", row.q05},
                              {"q25", row.q25},
                              {"q50", row.q50},
                              {"flagged", row.flagged}});
    }
    doc["rescaled_propensities"] = rescaled;
    doc["clip_count"] = overlap.clip_count;
    doc["flag_threshold"] = overlap.flag_threshold;
    doc["flags"] = overlap.flags;
    json apo_rows;
    for (const auto& row : apo.rows) {
      apo_rows.push_back(json{{"treatment", row.treatment},
                              {"mean", row.mean},
                              {"std_error", row.std_error},
                              {"diff_vs_control", row.diff_vs_control},
                              {"diff_std_error", row.diff_std_error},
                              {"diff_t_stat", row.diff_t_stat}});
    }
    doc["average_potential_outcomes"] = apo_rows;
    doc["identity_audit"] =
        json{{"max_relative_deviation", output.audit.max_relative_deviation},
             {"pass", output.audit.pass}};
    return doc.dump(2) + "\n";
  }

  if (format == ReportFormat::csv) {
    csv::Document doc;
    doc.header = {"section", "treatment", "min",  "q01",  "q05",
                  "q25",     "q50",       "mean", "se",   "flagged"};
    for (const auto& row : overlap.treatments) {
      doc.rows.push_back({"rescaled_propensity", std::to_string(row.treatment),
                          csv::format_double(row.min),
                          csv::format_double(row.q01),
                          csv::format_double(row.q05),
                          csv::format_double(row.q25),
                          csv::format_double(row.q50), "", "",
                          row.flagged ? "1" : "0"});
    }
    for (const auto& row : apo.rows) {
      doc.rows.push_back({"apo", std::to_string(row.treatment), "", "", "", "",
                          "", csv::format_double(row.mean),
                          csv::format_double(row.std_error), ""});
    }
    return csv::to_string(doc);
  }

  std::ostringstream out;
  out << "Overlap diagnostics (e_t(x) / pi_t quantiles)\n";
  out << "  t      min      q01      q05      q25      q50  flag\n";
  for (const auto& row : overlap.treatments) {
    out << "  " << row.treatment << "  " << fixed(row.min, 5) << "  "
        << fixed(row.q01, 5) << "  " << fixed(row.q05, 5) << "  "
        << fixed(row.q25, 5) << "  " << fixed(row.q50, 5) << "  "
        << (row.flagged ? "YES" : "-") << "\n";
  }
  out << "  propensity floor applied to " << overlap.clip_count
      << " entries\n";
  for (const auto& flag : overlap.flags) out << "  flag: " << flag << "\n";
  out << "\nAverage potential outcomes\n";
  out << "  t       mean        se    diff vs control (se, t)\n";
  for (const auto& row : apo.rows) {
    out << "  " << row.treatment << "  " << fixed(row.mean) << "  "
        << fixed(row.std_error);
    if (row.treatment > 0) {
      out << "    " << fixed(row.diff_vs_control) << " ("
          << fixed(row.diff_std_error) << ", " << fixed(row.diff_t_stat, 2)
          << ")";
    }
    out << "\n";
  }
  return out.str();
}

std::string render_coverage_report(const McDesign& design,
                                   const McResult& result,
                                   const TrueBlpParams& truth,
                                   ReportFormat format) {
  static const char* kCoefNames[2] = {"alpha", "beta"};

  if (format == ReportFormat::json) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["design"] = json{{"n", static_cast<long>(design.n)},
                         {"p", design.p},
                         {"J", design.J},
                         {"tau", design.tau},
                         {"mode", nuisance_mode_name(design.mode)},
                         {"reps", design.reps},
                         {"seed", design.seed},
                         {"level", design.level}};
    json truth_json;
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
      truth_json[parameter_name(kParameters[p])] =
          json{{"alpha", truth.alpha[p]}, {"beta", truth.beta[p]}};
    }
    doc["true_parameters"] = truth_json;
    json coverage;
    for (int c = 0; c < 2; ++c) {
      json row;
      for (std::size_t p = 0; p < kParameters.size(); ++p) {
        row[parameter_name(kParameters[p])] =
            result.coverage[p][static_cast<std::size_t>(c)];
      }
      coverage[kCoefNames[c]] = row;
    }
    doc["coverage"] = coverage;
    json width;
    for (int c = 0; c < 2; ++c) {
      json row;
      for (std::size_t p = 0; p < kParameters.size(); ++p) {
        row[parameter_name(kParameters[p])] =
            result.mean_ci_width[p][static_cast<std::size_t>(c)];
      }
      width[kCoefNames[c]] = row;
    }
    doc["mean_ci_width"] = width;
    doc["rate_slope_rejection_rate"] = result.rate_slope_rejection_rate;
    doc["reps_done"] = result.reps_done;
    doc["reps_failed"] = result.reps_failed;
    return doc.dump(2) + "\n";
  }

  if (format == ReportFormat::csv) {
    csv::Document doc;
    doc.header = {"coefficient", "rATE", "nATE", "Delta"};
    for (int c = 0; c < 2; ++c) {
      // Tables 2-3 layout: columns rATE, nATE, Delta.
      doc.rows.push_back(
          {kCoefNames[c],
           csv::format_double(result.coverage[1][static_cast<std::size_t>(c)]),
           csv::format_double(result.coverage[0][static_cast<std::size_t>(c)]),
           csv::format_double(result.coverage[2][static_cast<std::size_t>(c)])});
    }
    doc.rows.push_back({"reps_done", std::to_string(result.reps_done), "", ""});
    doc.rows.push_back(
        {"reps_failed", std::to_string(result.reps_failed), "", ""});
    return csv::to_string(doc);
  }

  std::ostringstream out;
  out << "Coverage of " << fixed(design.level, 2)
      << " confidence intervals (" << nuisance_mode_name(design.mode)
      << " nuisances, n = " << design.n << ", p = " << design.p
      << ", reps = " << result.reps_done << ")\n";
  out << "            rATE     nATE    Delta\n";
  for (int c = 0; c < 2; ++c) {
    out << "  " << kCoefNames[c] << (c == 0 ? "   " : "    ");
    out << fixed(result.coverage[1][static_cast<std::size_t>(c)], 4) << "   "
        << fixed(result.coverage[0][static_cast<std::size_t>(c)], 4) << "   "
        << fixed(result.coverage[2][static_cast<std::size_t>(c)], 4) << "\n";
  }
  out << "  rATE-slope rejection rate at 5%: "
      << fixed(result.rate_slope_rejection_rate, 4) << "\n";
  if (result.reps_failed > 0) {
    out << "  failed reps: " << result.reps_failed << "\n";
  }
  return out.str();
}

std::string render_curve_csv(const FitOutput& output) {
  csv::Document doc;
  doc.header = {"z"};
  for (std::size_t p = 0; p < kParameters.size(); ++p) {
    const std::string name = parameter_name(kParameters[p]);
    doc.header.push_back(name);
    doc.header.push_back(name + "_lo");
    doc.header.push_back(name + "_hi");
  }
  for (double z0 : curve_grid(*output.table, output.basis)) {
    std::vector<std::string> row{csv::format_double(z0)};
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
      const Interval ci =
          confidence_interval(output.fits[p], output.basis, z0, output.level);
      row.push_back(csv::format_double(ci.estimate));
      row.push_back(csv::format_double(ci.lo));
      row.push_back(csv::format_double(ci.hi));
    }
    doc.rows.push_back(std::move(row));
  }
  return csv::to_string(doc);
}

std::string render_pseudo_outcome_csv(const ScoreSet& scores) {
  csv::Document doc;
  doc.header = {"nATE", "rATE", "Delta"};
  for (Eigen::Index i = 0; i < scores.pseudo.nate.size(); ++i) {
    doc.rows.push_back({csv::format_double(scores.pseudo.nate[i]),
                        csv::format_double(scores.pseudo.rate[i]),
                        csv::format_double(scores.pseudo.delta[i])});
  }
  return csv::to_string(doc);
}

}  // namespace hetdecomp
