#include "hetdecomp/pipeline.hpp"

#include <algorithm>
#include <set>

#include "hetdecomp/csv.hpp"
#include "hetdecomp/ensemble.hpp"
#include "hetdecomp/error.hpp"
#include "hetdecomp/rng.hpp"

namespace hetdecomp {

namespace {

Eigen::VectorXd read_numeric_column(const csv::Document& doc,
                                    const std::string& name) {
  int col = -1;
  for (std::size_t j = 0; j < doc.header.size(); ++j) {
    if (doc.header[j] == name) col = static_cast<int>(j);
  }
  if (col < 0) throw Error("pipeline: missing column '" + name + "'");
  Eigen::VectorXd out(static_cast<Eigen::Index>(doc.rows.size()));
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    char* end = nullptr;
    const std::string& cell = doc.rows[i][static_cast<std::size_t>(col)];
    out[static_cast<Eigen::Index>(i)] = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
      throw Error("pipeline: non-numeric value '" + cell + "' in column '" +
                  name + "'");
    }
  }
  return out;
}

RegressionLearner make_outcome_learner(const RunConfig& config) {
  const LearnerConfig& lc = config.learners;
  switch (lc.outcome) {
    case OutcomeLearnerKind::mean:
      return mean_learner();
    case OutcomeLearnerKind::ols:
      return ols_learner();
    case OutcomeLearnerKind::ridge:
      if (lc.fixed_lambda >= 0.0) return ridge_learner(lc.fixed_lambda);
      return ridge_cv_learner(lc.cv_folds, mix_seed(config.seed, 11),
                              lc.lambda_grid_size, lc.lambda_min_ratio);
    case OutcomeLearnerKind::lasso:
      if (lc.fixed_lambda >= 0.0) {
        const double lambda = lc.fixed_lambda;
        return [lambda](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
          const LinearFit fit = fit_lasso(x, y, lambda);
          return RegressionModel(
              [fit](const Eigen::MatrixXd& xq) { return fit.predict(xq); });
        };
      }
      return lasso_cv_learner(lc.cv_folds, mix_seed(config.seed, 12),
                              lc.lambda_grid_size, lc.lambda_min_ratio);
    case OutcomeLearnerKind::ensemble: {
      std::vector<NamedRegressionLearner> members;
      members.push_back({"mean", mean_learner()});
      members.push_back(
          {"ridge_cv", ridge_cv_learner(lc.cv_folds, mix_seed(config.seed, 13),
                                        lc.lambda_grid_size,
                                        lc.lambda_min_ratio)});
      members.push_back(
          {"lasso_cv", lasso_cv_learner(lc.cv_folds, mix_seed(config.seed, 14),
                                        lc.lambda_grid_size,
                                        lc.lambda_min_ratio)});
      return regression_ensemble_learner(std::move(members), 2,
                                         mix_seed(config.seed, 15));
    }
  }
  throw Error("pipeline: unreachable outcome learner");
}

PropensityLearner make_propensity_learner(const RunConfig& config) {
  const LearnerConfig& lc = config.learners;
  switch (lc.propensity) {
    case PropensityLearnerKind::logit:
      return multinomial_logit_learner(0.0, Penalty::none);
    case PropensityLearnerKind::logit_l1:
      if (lc.fixed_lambda >= 0.0) {
        return multinomial_logit_learner(lc.fixed_lambda, Penalty::lasso);
      }
      return logit_l1_cv_learner(lc.cv_folds, mix_seed(config.seed, 21),
                                 lc.lambda_grid_size, lc.lambda_min_ratio);
    case PropensityLearnerKind::logit_l2:
      return multinomial_logit_learner(
          lc.fixed_lambda >= 0.0 ? lc.fixed_lambda : 1e-3, Penalty::ridge);
    case PropensityLearnerKind::shares:
      return class_share_learner();
  }
  throw Error("pipeline: unreachable propensity learner");
}

int resolve_basis_z(const RunConfig& config, const ObservationTable& table) {
  if (config.columns.heterogeneity_columns.empty()) {
    throw Error("pipeline: heterogeneity_columns is empty; nothing to fit "
                "the decomposition curves on");
  }
  if (config.basis_z.empty()) return 0;
  const auto& names = config.columns.heterogeneity_columns;
  const auto it = std::find(names.begin(), names.end(), config.basis_z);
  if (it == names.end()) {
    throw Error("pipeline: basis_z '" + config.basis_z +
                "' is not a heterogeneity column");
  }
  return static_cast<int>(it - names.begin());
}

BasisSpec fixed_basis_spec(const BasisConfig& basis, int z_index) {
  BasisSpec spec;
  spec.z_index = z_index;
  if (basis.kind == "intercept") {
    spec.kind = BasisSpec::Kind::intercept;
  } else if (basis.kind == "dummies") {
    spec.kind = BasisSpec::Kind::group_dummies;
  } else if (basis.kind == "poly") {
    spec.kind = BasisSpec::Kind::polynomial;
    spec.degree = basis.degree;
  } else if (basis.kind == "bspline") {
    spec.kind = BasisSpec::Kind::bspline;
    spec.order = basis.order;
    spec.num_interior_knots = basis.num_knots;
  } else {
    throw Error("pipeline: unknown basis kind '" + basis.kind + "'");
  }
  return spec;
}

}  // namespace

std::vector<double> curve_grid(const ObservationTable& table,
                               const Basis& basis, int points) {
  const Eigen::VectorXd z = table.z_column(basis.spec().z_index);
  if (basis.spec().kind == BasisSpec::Kind::group_dummies) {
    std::set<double> distinct(z.data(), z.data() + z.size());
    return {distinct.begin(), distinct.end()};
  }
  std::vector<double> grid;
  const double lo = z.minCoeff();
  const double hi = z.maxCoeff();
  for (int i = 0; i < points; ++i) {
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) /
                            static_cast<double>(points - 1));
  }
  return grid;
}

FitOutput run_fit_pipeline(const RunConfig& config) {
  auto table_ptr = std::make_shared<ObservationTable>(
      load_table(config.data_path, config.columns));
  if (!config.weight_column.empty()) {
    const csv::Document doc = csv::read_file(config.data_path);
    *table_ptr = table_ptr->enumerate_population(
        read_numeric_column(doc, config.weight_column));
  }
  const ObservationTable& table = *table_ptr;

  FitOutput output;
  output.table = table_ptr;
  output.level = config.level;
  for (const auto& warning : table.warnings()) {
    output.warnings.push_back(warning);
  }

  CrossFittedNuisances nuisances;
  if (config.nuisance == "oracle") {
    const csv::Document doc = csv::read_file(config.data_path);
    const int levels = table.num_levels();
    if (static_cast<int>(config.oracle_mu_columns.size()) != levels ||
        static_cast<int>(config.oracle_e_columns.size()) != levels) {
      throw Error("pipeline: oracle nuisances need one mu and one e column "
                  "per treatment level (" +
                  std::to_string(levels) + ")");
    }
    Eigen::MatrixXd mu(table.n(), levels);
    Eigen::MatrixXd e(table.n(), levels);
    for (int t = 0; t < levels; ++t) {
      mu.col(t) = read_numeric_column(
          doc, config.oracle_mu_columns[static_cast<std::size_t>(t)]);
      e.col(t) = read_numeric_column(
          doc, config.oracle_e_columns[static_cast<std::size_t>(t)]);
    }
    nuisances = nuisances_from_matrices(table, std::move(mu), std::move(e),
                                        config.propensity_floor);
  } else if (config.nuisance == "parametric") {
    NuisanceConfig nc;
    nc.outcome = config.learners.outcome == OutcomeLearnerKind::mean
                     ? mean_learner()
                     : ols_learner();
    nc.propensity = multinomial_logit_learner(0.0, Penalty::none);
    nc.propensity_floor = config.propensity_floor;
    nuisances = full_sample_nuisances(table, nc);
  } else {
    NuisanceConfig nc;
    nc.outcome = make_outcome_learner(config);
    nc.propensity = make_propensity_learner(config);
    nc.propensity_floor = config.propensity_floor;
    const FoldPlan plan = make_folds(
        table.n(), config.crossfit_folds, mix_seed(config.seed, 1),
        config.stratify_folds ? &table.t() : nullptr);
    for (const auto& warning : plan.warnings) output.warnings.push_back(warning);
    nuisances = cross_fit(table, plan, nc);
  }

  output.scores = compute_scores(table, nuisances);

  const int z_index = resolve_basis_z(config, table);
  if (config.basis.loocv) {
    output.loocv = loocv_select_basis(output.scores.pseudo, table,
                                      default_basis_grid(z_index));
    const BasisSpec chosen =
        output.loocv->candidates[static_cast<std::size_t>(output.loocv->common)]
            .spec;
    output.basis = Basis::build(table, chosen);
  } else {
    output.basis =
        Basis::build(table, fixed_basis_spec(config.basis, z_index));
  }

  const Basis intercept_basis = Basis::build(table, BasisSpec{});
  for (std::size_t p = 0; p < kParameters.size(); ++p) {
    output.fits[p] =
        fit_parameter_blp(kParameters[p], output.scores, table, output.basis);
    output.unconditional[p] = fit_parameter_blp(kParameters[p], output.scores,
                                                table, intercept_basis);
    const Eigen::MatrixXd contrasts = homogeneity_contrasts(output.basis);
    if (contrasts.rows() > 0) {
      output.homogeneity[p] =
          wald_test(output.fits[p], contrasts,
                    Eigen::VectorXd::Zero(contrasts.rows()));
    }
  }

  output.overlap = overlap_report(nuisances, config.overlap_threshold);
  output.apo = apo_table(output.scores, table);
  output.audit =
      identity_audit(output.fits[0], output.fits[1], output.fits[2]);
  return output;
}

}  // namespace hetdecomp
