#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace hetdecomp {

// Column mapping used when loading a CSV into an ObservationTable.
// heterogeneity_columns must be a subset of confounder_columns.
struct ColumnSpec {
  std::string outcome_column;
  std::string treatment_column;
  std::string control_label;
  std::vector<std::string> confounder_columns;
  std::vector<std::string> heterogeneity_columns;
};

// Immutable observational dataset: outcome y, effective treatment codes
// t in {0..J}, derived binary indicator d = 1[t != 0], confounder matrix x,
// and the selection of heterogeneity columns z_cols (indices into x).
//
// An optional probability weight per row turns the table into an enumerated
// finite population: all downstream moments become exact weighted sums,
// which is what the oracle-style tests rely on.
class ObservationTable {
 public:
  ObservationTable(Eigen::VectorXd y, std::vector<int> t, Eigen::MatrixXd x,
                   std::vector<int> z_cols,
                   std::vector<std::string> treatment_labels = {},
                   std::vector<std::string> column_names = {});

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index num_confounders() const { return x_.cols(); }
  // Number of non-control treatment levels (levels are 0..J).
  int num_treatments() const { return num_treatments_; }
  int num_levels() const { return num_treatments_ + 1; }

  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& t() const { return t_; }
  const std::vector<int>& d() const { return d_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<int>& z_cols() const { return z_cols_; }
  Eigen::MatrixXd z() const;  // n x |z_cols| view copy
  Eigen::VectorXd z_column(int which) const;

  const std::vector<std::string>& treatment_labels() const {
    return treatment_labels_;
  }
  const std::vector<std::string>& column_names() const {
    return column_names_;
  }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Enumerated-population view: same data, rows weighted by the given
  // probabilities (nonnegative, positive total; renormalized to sum 1).
  ObservationTable enumerate_population(const Eigen::VectorXd& weights) const;

  bool is_weighted() const { return weighted_; }
  // Always sums to 1; uniform when no weights were supplied.
  const Eigen::VectorXd& weights() const { return weights_; }
  double weighted_mean(const Eigen::VectorXd& values) const;

  // Unconditional treatment shares pi_t (weighted when enumerated).
  Eigen::VectorXd treatment_shares() const;

 private:
  Eigen::VectorXd y_;
  std::vector<int> t_;
  std::vector<int> d_;
  Eigen::MatrixXd x_;
  std::vector<int> z_cols_;
  int num_treatments_ = 0;
  std::vector<std::string> treatment_labels_;
  std::vector<std::string> column_names_;
  std::vector<std::string> warnings_;
  Eigen::VectorXd weights_;
  bool weighted_ = false;
};

// Loads a CSV with header row, maps treatment labels to codes 0..J with
// spec.control_label -> 0 (remaining labels ordered numerically when all
// parse as numbers, lexicographically otherwise), derives d, validates.
// Rows with missing (empty) values in used columns are a hard error.
ObservationTable load_table(const std::string& path, const ColumnSpec& spec);

// Writes y, treatment label, and confounders so that reloading with the same
// spec reproduces y, t, x bit-exactly.
void write_table(const std::string& path, const ObservationTable& table,
                 const ColumnSpec& spec);

}  // namespace hetdecomp
