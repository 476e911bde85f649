#include "hetdecomp/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hetdecomp/error.hpp"

namespace hetdecomp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config config;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config: line " + std::to_string(line_no) +
                  " is not of the form key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error("config: empty key on line " + std::to_string(line_no));
    }
    if (config.values_.count(key)) {
      throw Error("config: duplicate key '" + key + "'");
    }
    config.values_[key] = value;
  }
  return config;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

bool Config::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error("config: missing required key '" + key + "'");
  }
  consumed_.insert(key);
  return it->second;
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  return it->second;
}

double Config::get_double_or(const std::string& key, double fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end != it->second.c_str() + it->second.size() || it->second.empty()) {
    throw Error("config: key '" + key + "' is not a number: " + it->second);
  }
  return v;
}

int Config::get_int_or(const std::string& key, int fallback) {
  const double v = get_double_or(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw Error("config: key '" + key + "' must be an integer");
  }
  return i;
}

std::uint64_t Config::get_seed_or(const std::string& key,
                                  std::uint64_t fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end != it->second.c_str() + it->second.size() || it->second.empty()) {
    throw Error("config: key '" + key + "' is not a seed: " + it->second);
  }
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool_or(const std::string& key, bool fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: key '" + key + "' must be true or false");
}

std::vector<std::string> Config::get_list_or(
    const std::string& key, std::vector<std::string> fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  return split_list(it->second);
}

void Config::reject_unknown() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    (void)value;
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw Error("config: unknown keys: " + unknown);
  }
}

namespace {

OutcomeLearnerKind parse_outcome_learner(const std::string& name) {
  if (name == "mean") return OutcomeLearnerKind::mean;
  if (name == "ols") return OutcomeLearnerKind::ols;
  if (name == "ridge") return OutcomeLearnerKind::ridge;
  if (name == "lasso") return OutcomeLearnerKind::lasso;
  if (name == "ensemble") return OutcomeLearnerKind::ensemble;
  throw Error("config: unknown outcome_learner '" + name +
              "' (valid: mean, ols, ridge, lasso, ensemble)");
}

PropensityLearnerKind parse_propensity_learner(const std::string& name) {
  if (name == "logit") return PropensityLearnerKind::logit;
  if (name == "logit_l1") return PropensityLearnerKind::logit_l1;
  if (name == "logit_l2") return PropensityLearnerKind::logit_l2;
  if (name == "shares") return PropensityLearnerKind::shares;
  throw Error("config: unknown propensity_learner '" + name +
              "' (valid: logit, logit_l1, logit_l2, shares)");
}

BasisConfig parse_basis(const std::string& text) {
  BasisConfig basis;
  basis.spec_text = text;
  if (text == "loocv") {
    basis.loocv = true;
    return basis;
  }
  std::vector<std::string> parts;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ':')) parts.push_back(item);
  if (parts.empty()) throw Error("config: empty basis");
  basis.kind = parts[0];
  if (basis.kind == "intercept" || basis.kind == "dummies") {
    if (parts.size() != 1) throw Error("config: basis '" + text + "' malformed");
  } else if (basis.kind == "poly") {
    if (parts.size() != 2) {
      throw Error("config: basis poly expects poly:<degree>");
    }
    basis.degree = std::atoi(parts[1].c_str());
  } else if (basis.kind == "bspline") {
    if (parts.size() != 3) {
      throw Error("config: basis bspline expects bspline:<order>:<knots>");
    }
    basis.order = std::atoi(parts[1].c_str());
    basis.num_knots = std::atoi(parts[2].c_str());
  } else {
    throw Error("config: unknown basis '" + text +
                "' (valid: intercept, dummies, poly:<d>, bspline:<o>:<k>, "
                "loocv)");
  }
  return basis;
}

}  // namespace

RunConfig parse_run_config(Config& config) {
  RunConfig run;
  run.data_path = config.get_string("data");
  run.columns.outcome_column = config.get_string("outcome_column");
  run.columns.treatment_column = config.get_string("treatment_column");
  run.columns.control_label = config.get_string("control_label");
  run.columns.confounder_columns =
      config.get_list_or("confounder_columns", {});
  if (run.columns.confounder_columns.empty()) {
    throw Error("config: confounder_columns must list at least one column");
  }
  run.columns.heterogeneity_columns =
      config.get_list_or("heterogeneity_columns", {});
  run.weight_column = config.get_string_or("weight_column", "");

  run.nuisance = config.get_string_or("nuisance", "dml");
  if (run.nuisance != "dml" && run.nuisance != "parametric" &&
      run.nuisance != "oracle") {
    throw Error("config: nuisance must be dml, parametric, or oracle");
  }
  run.oracle_mu_columns = config.get_list_or("oracle_mu_columns", {});
  run.oracle_e_columns = config.get_list_or("oracle_e_columns", {});
  if (run.nuisance == "oracle" &&
      (run.oracle_mu_columns.empty() || run.oracle_e_columns.empty())) {
    throw Error(
        "config: nuisance = oracle needs oracle_mu_columns and "
        "oracle_e_columns");
  }

  run.learners.outcome = parse_outcome_learner(
      config.get_string_or("outcome_learner", "lasso"));
  run.learners.propensity = parse_propensity_learner(
      config.get_string_or("propensity_learner", "logit_l1"));
  run.learners.fixed_lambda = config.get_double_or("lambda", -1.0);
  run.learners.cv_folds = config.get_int_or("cv_folds", 5);
  run.learners.lambda_grid_size = config.get_int_or("lambda_grid_size", 30);
  run.learners.lambda_min_ratio =
      config.get_double_or("lambda_min_ratio", 1e-3);

  run.crossfit_folds = config.get_int_or("crossfit_folds", 2);
  run.stratify_folds = config.get_bool_or("stratify_folds", true);
  run.propensity_floor = config.get_double_or("propensity_floor", 1e-6);
  run.basis = parse_basis(config.get_string_or("basis", "loocv"));
  run.basis_z = config.get_string_or("basis_z", "");
  run.level = config.get_double_or("level", 0.95);
  run.overlap_threshold = config.get_double_or("overlap_threshold", 0.05);
  run.seed = config.get_seed_or("seed", 1);
  run.dump_pseudo = config.get_bool_or("dump_pseudo", false);

  config.reject_unknown();
  return run;
}

StudyConfig parse_study_config(Config& config) {
  StudyConfig study;
  McDesign& design = study.design;
  design.n = config.get_int_or("n", 1000);
  design.p = config.get_int_or("p", 10);
  design.J = config.get_int_or("J", 2);
  design.tau = config.get_double_or("tau", 10.0);
  design.reps = config.get_int_or("reps", 1000);
  design.crossfit_folds = config.get_int_or("crossfit_folds", 2);
  design.cv_folds = config.get_int_or("cv_folds", 5);
  design.mode = parse_nuisance_mode(config.get_string_or("mode", "parametric"));
  design.seed = config.get_seed_or("seed", 1);
  design.threads = config.get_int_or("threads", 0);
  design.level = config.get_double_or("level", 0.95);
  design.lambda_grid_size = config.get_int_or("lambda_grid_size", 30);
  design.lambda_min_ratio = config.get_double_or("lambda_min_ratio", 1e-3);
  const std::vector<std::string> coef_text =
      config.get_list_or("logit_coef", {});
  if (!coef_text.empty()) {
    design.logit_coef.clear();
    for (const auto& c : coef_text) {
      design.logit_coef.push_back(std::strtod(c.c_str(), nullptr));
    }
  } else {
    design.logit_coef.assign(static_cast<std::size_t>(design.J), 0.0);
    if (design.J >= 1) design.logit_coef[0] = 1.0;
  }
  config.reject_unknown();
  design.validate();
  return study;
}

}  // namespace hetdecomp
