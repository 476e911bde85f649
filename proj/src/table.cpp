#include "hetdecomp/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "hetdecomp/csv.hpp"
#include "hetdecomp/error.hpp"

namespace hetdecomp {

namespace {

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return false;
  *out = v;
  return true;
}

}  // namespace

ObservationTable::ObservationTable(Eigen::VectorXd y, std::vector<int> t,
                                   Eigen::MatrixXd x, std::vector<int> z_cols,
                                   std::vector<std::string> treatment_labels,
                                   std::vector<std::string> column_names)
    : y_(std::move(y)),
      t_(std::move(t)),
      x_(std::move(x)),
      z_cols_(std::move(z_cols)),
      treatment_labels_(std::move(treatment_labels)),
      column_names_(std::move(column_names)) {
  const Eigen::Index n = y_.size();
  if (n == 0) throw Error("table: empty table");
  if (static_cast<Eigen::Index>(t_.size()) != n || x_.rows() != n) {
    throw Error("table: y, t, x row counts disagree");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) {
      throw Error("table: non-finite outcome in row " + std::to_string(i));
    }
  }
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      if (!std::isfinite(x_(i, j))) {
        throw Error("table: non-finite confounder in row " +
                    std::to_string(i) + ", column " + std::to_string(j));
      }
    }
  }
  std::set<int> seen_z;
  for (int c : z_cols_) {
    if (c < 0 || c >= x_.cols()) {
      throw Error("table: heterogeneity column index " + std::to_string(c) +
                  " outside confounder matrix");
    }
    if (!seen_z.insert(c).second) {
      throw Error("table: duplicate heterogeneity column " +
                  std::to_string(c));
    }
  }

  int max_level = 0;
  for (int ti : t_) {
    if (ti < 0) throw Error("table: negative treatment code");
    max_level = std::max(max_level, ti);
  }
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(max_level) + 1, 0);
  for (int ti : t_) counts[static_cast<std::size_t>(ti)]++;
  if (counts[0] == 0) {
    throw Error("table: no control observations (t = 0)");
  }
  const bool has_gap =
      std::any_of(counts.begin(), counts.end(), [](Eigen::Index c) {
        return c == 0;
      });
  if (has_gap) {
    // Re-derive contiguous codes from the observed levels.
    std::vector<int> remap(counts.size(), -1);
    int next = 0;
    for (std::size_t lvl = 0; lvl < counts.size(); ++lvl) {
      if (counts[lvl] > 0) remap[lvl] = next++;
    }
    for (auto& ti : t_) ti = remap[static_cast<std::size_t>(ti)];
    std::vector<std::string> kept_labels;
    for (std::size_t lvl = 0; lvl < counts.size(); ++lvl) {
      if (counts[lvl] > 0 && lvl < treatment_labels_.size()) {
        kept_labels.push_back(treatment_labels_[lvl]);
      }
    }
    if (!treatment_labels_.empty()) treatment_labels_ = std::move(kept_labels);
    max_level = next - 1;
    warnings_.push_back(
        "treatment levels with zero observations removed; codes re-derived "
        "to 0.." +
        std::to_string(max_level));
  }
  num_treatments_ = max_level;
  if (num_treatments_ < 1) {
    throw Error("table: need at least one non-control treatment level");
  }

  d_.resize(t_.size());
  for (std::size_t i = 0; i < t_.size(); ++i) d_[i] = t_[i] != 0 ? 1 : 0;

  weights_ = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

Eigen::MatrixXd ObservationTable::z() const {
  Eigen::MatrixXd out(n(), static_cast<Eigen::Index>(z_cols_.size()));
  for (std::size_t j = 0; j < z_cols_.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x_.col(z_cols_[j]);
  }
  return out;
}

Eigen::VectorXd ObservationTable::z_column(int which) const {
  if (which < 0 || which >= static_cast<int>(z_cols_.size())) {
    throw Error("table: heterogeneity column " + std::to_string(which) +
                " not selected");
  }
  return x_.col(z_cols_[static_cast<std::size_t>(which)]);
}

ObservationTable ObservationTable::enumerate_population(
    const Eigen::VectorXd& weights) const {
  if (weights.size() != n()) {
    throw Error("enumerate_population: weight length mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) {
      throw Error("enumerate_population: negative weight in row " +
                  std::to_string(i));
    }
    total += weights[i];
  }
  if (total <= 0.0) throw Error("enumerate_population: zero total weight");
  ObservationTable view = *this;
  view.weights_ = weights / total;
  view.weighted_ = true;
  return view;
}

double ObservationTable::weighted_mean(const Eigen::VectorXd& values) const {
  if (values.size() != n()) throw Error("weighted_mean: length mismatch");
  return weights_.dot(values);
}

Eigen::VectorXd ObservationTable::treatment_shares() const {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(num_levels());
  for (Eigen::Index i = 0; i < n(); ++i) {
    pi[t_[static_cast<std::size_t>(i)]] += weights_[i];
  }
  return pi;
}

namespace {

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<int>(j);
  }
  return -1;
}

}  // namespace

ObservationTable load_table(const std::string& path, const ColumnSpec& spec) {
  const csv::Document doc = csv::read_file(path);
  if (doc.rows.empty()) throw Error("load_table: no data rows in " + path);

  const int y_col = find_column(doc.header, spec.outcome_column);
  if (y_col < 0) {
    throw Error("load_table: missing outcome column '" + spec.outcome_column +
                "'");
  }
  const int t_col = find_column(doc.header, spec.treatment_column);
  if (t_col < 0) {
    throw Error("load_table: missing treatment column '" +
                spec.treatment_column + "'");
  }
  std::vector<int> x_cols;
  for (const auto& name : spec.confounder_columns) {
    int c = find_column(doc.header, name);
    if (c < 0) throw Error("load_table: missing confounder column '" + name + "'");
    x_cols.push_back(c);
  }
  if (x_cols.empty()) throw Error("load_table: no confounder columns given");
  std::vector<int> z_cols;
  for (const auto& name : spec.heterogeneity_columns) {
    auto it = std::find(spec.confounder_columns.begin(),
                        spec.confounder_columns.end(), name);
    if (it == spec.confounder_columns.end()) {
      throw Error("load_table: heterogeneity column '" + name +
                  "' is not among the confounder columns");
    }
    z_cols.push_back(
        static_cast<int>(it - spec.confounder_columns.begin()));
  }

  // Treatment label -> code. Control first, remaining labels in numeric
  // order when all are numeric, lexicographic otherwise (permutation
  // invariant either way).
  std::set<std::string> labels_seen;
  for (const auto& row : doc.rows) {
    labels_seen.insert(row[static_cast<std::size_t>(t_col)]);
  }
  if (labels_seen.find(spec.control_label) == labels_seen.end()) {
    throw Error("load_table: control label '" + spec.control_label +
                "' does not occur in column '" + spec.treatment_column + "'");
  }
  std::vector<std::string> other_labels;
  for (const auto& lab : labels_seen) {
    if (lab != spec.control_label) other_labels.push_back(lab);
  }
  bool all_numeric = true;
  for (const auto& lab : other_labels) {
    double tmp;
    if (!parse_number(lab, &tmp)) {
      all_numeric = false;
      break;
    }
  }
  if (all_numeric) {
    std::sort(other_labels.begin(), other_labels.end(),
              [](const std::string& a, const std::string& b) {
                return std::strtod(a.c_str(), nullptr) <
                       std::strtod(b.c_str(), nullptr);
              });
  } else {
    std::sort(other_labels.begin(), other_labels.end());
  }
  std::map<std::string, int> code_of;
  std::vector<std::string> treatment_labels;
  code_of[spec.control_label] = 0;
  treatment_labels.push_back(spec.control_label);
  for (const auto& lab : other_labels) {
    code_of[lab] = static_cast<int>(treatment_labels.size());
    treatment_labels.push_back(lab);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(doc.rows.size());
  Eigen::VectorXd y(n);
  std::vector<int> t(static_cast<std::size_t>(n));
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = doc.rows[static_cast<std::size_t>(i)];
    if (!parse_number(row[static_cast<std::size_t>(y_col)], &y[i])) {
      throw Error("load_table: non-numeric or missing outcome '" +
                  row[static_cast<std::size_t>(y_col)] + "' in row " +
                  std::to_string(i + 1));
    }
    const auto& lab = row[static_cast<std::size_t>(t_col)];
    auto it = code_of.find(lab);
    if (it == code_of.end()) {
      throw Error("load_table: unmapped treatment label '" + lab + "'");
    }
    t[static_cast<std::size_t>(i)] = it->second;
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      const auto& cell = row[static_cast<std::size_t>(x_cols[j])];
      if (!parse_number(cell, &x(i, static_cast<Eigen::Index>(j)))) {
        throw Error("load_table: non-numeric or missing value '" + cell +
                    "' in column '" + spec.confounder_columns[j] +
                    "', row " + std::to_string(i + 1));
      }
    }
  }

  return ObservationTable(std::move(y), std::move(t), std::move(x),
                          std::move(z_cols), std::move(treatment_labels),
                          spec.confounder_columns);
}

void write_table(const std::string& path, const ObservationTable& table,
                 const ColumnSpec& spec) {
  csv::Document doc;
  doc.header.push_back(spec.outcome_column);
  doc.header.push_back(spec.treatment_column);
  for (const auto& name : spec.confounder_columns) doc.header.push_back(name);
  const auto& labels = table.treatment_labels();
  for (Eigen::Index i = 0; i < table.n(); ++i) {
    std::vector<std::string> row;
    row.push_back(csv::format_double(table.y()[i]));
    const int code = table.t()[static_cast<std::size_t>(i)];
    row.push_back(static_cast<std::size_t>(code) < labels.size()
                      ? labels[static_cast<std::size_t>(code)]
                      : std::to_string(code));
    for (Eigen::Index j = 0; j < table.x().cols(); ++j) {
      row.push_back(csv::format_double(table.x()(i, j)));
    }
    doc.rows.push_back(std::move(row));
  }
  csv::write_file(path, doc);
}

}  // namespace hetdecomp
