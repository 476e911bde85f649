#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hetdecomp/simulate.hpp"
#include "hetdecomp/table.hpp"

namespace hetdecomp {

// Plain key = value configuration file; '#' starts a comment. Every key must
// be consumed by the reader that parses it -- unknown keys are rejected, so
// typos fail loudly before any compute happens.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key);
  std::string get_string_or(const std::string& key, const std::string& fallback);
  double get_double_or(const std::string& key, double fallback);
  int get_int_or(const std::string& key, int fallback);
  std::uint64_t get_seed_or(const std::string& key, std::uint64_t fallback);
  bool get_bool_or(const std::string& key, bool fallback);
  std::vector<std::string> get_list_or(const std::string& key,
                                       std::vector<std::string> fallback);

  // Throws listing any keys never consumed.
  void reject_unknown() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

enum class OutcomeLearnerKind { mean, ols, ridge, lasso, ensemble };
enum class PropensityLearnerKind { logit, logit_l1, logit_l2, shares };

struct LearnerConfig {
  OutcomeLearnerKind outcome = OutcomeLearnerKind::lasso;
  PropensityLearnerKind propensity = PropensityLearnerKind::logit_l1;
  double fixed_lambda = -1.0;  // < 0: select by CV
  int cv_folds = 5;
  int lambda_grid_size = 30;
  double lambda_min_ratio = 1e-3;
};

struct BasisConfig {
  bool loocv = false;  // select from the default grid
  std::string spec_text = "loocv";
  // Parsed fixed spec (used when !loocv); z column resolved downstream.
  std::string kind = "intercept";
  int degree = 1;
  int order = 4;
  int num_knots = 0;
};

struct RunConfig {
  std::string data_path;
  ColumnSpec columns;
  std::string weight_column;  // empty: unweighted
  std::string nuisance = "dml";
  std::vector<std::string> oracle_mu_columns;
  std::vector<std::string> oracle_e_columns;
  LearnerConfig learners;
  int crossfit_folds = 2;
  bool stratify_folds = true;
  double propensity_floor = 1e-6;
  BasisConfig basis;
  std::string basis_z;  // heterogeneity column name; empty: first
  double level = 0.95;
  double overlap_threshold = 0.05;
  std::uint64_t seed = 1;
  bool dump_pseudo = false;
};

RunConfig parse_run_config(Config& config);

struct StudyConfig {
  McDesign design;
};

StudyConfig parse_study_config(Config& config);

}  // namespace hetdecomp
