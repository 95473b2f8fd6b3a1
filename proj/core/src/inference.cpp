#include "powersim/inference.hpp"

#include <cmath>

#include "powersim/csv.hpp"
#include "powersim/dist.hpp"
#include "powersim/errors.hpp"

namespace powersim {

InferenceModel InferenceModel::glm(Family family, Formula formula) {
  InferenceModel m;
  m.kind_ = Kind::glm;
  m.name_ = "glm";
  m.family_ = family;
  m.formula_ = std::move(formula);
  return m;
}

InferenceModel InferenceModel::glm(Family family,
                                   const std::string& formula_text) {
  return glm(family, parse_formula(formula_text));
}

InferenceModel InferenceModel::ftest() {
  InferenceModel m;
  m.kind_ = Kind::ftest;
  m.name_ = "F-test";
  return m;
}

InferenceModel InferenceModel::plugin(std::string name, Plugin fn) {
  if (!fn) throw Error("inference: null plugin callback");
  InferenceModel m;
  m.kind_ = Kind::plugin;
  m.name_ = std::move(name);
  m.plugin_ = std::move(fn);
  return m;
}

CritResult overall_ftest(const DataTable& x, const std::vector<double>& y) {
  const DesignMatrix design = build_full_design(x);
  const GlmFit fit = fit_glm_design(design, y, Family::gaussian);

  const Eigen::Index n = design.x.rows();
  const Eigen::Index k = design.x.cols();  // includes the intercept
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(y.size());
  double tss = 0.0;
  for (double v : y) tss += (v - ybar) * (v - ybar);
  const double rss = fit.deviance;

  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(n - k);
  const double fstat = ((tss - rss) / df1) / (rss / df2);

  dist::TailParams params;
  params.df1 = df1;
  params.df2 = df2;
  const double pval = dist::tail_probability(dist::TailDist::fisher_f, params,
                                             std::max(fstat, 0.0),
                                             /*upper=*/true);
  return {{"pval", {{"F-test", pval}}}};
}

CritResult glm_criteria(const GlmFit& fit) {
  if (!fit.converged) throw Error("glm_criteria: fit did not converge");

  CritValues pval, main_pval, int_pval;
  auto keep_min = [](CritValues& values, const std::string& key, double p) {
    auto [it, inserted] = values.emplace(key, p);
    if (!inserted && p < it->second) it->second = p;
  };

  for (std::size_t j = 0; j < fit.columns.size(); ++j) {
    const DesignColumn& col = fit.columns[j];
    for (const auto& predictor : col.predictors) {
      keep_min(pval, predictor, fit.p_values[j]);
      if (col.interaction)
        keep_min(int_pval, predictor, fit.p_values[j]);
      else
        keep_min(main_pval, predictor, fit.p_values[j]);
    }
  }
  return {{"pval", std::move(pval)},
          {"main_pval", std::move(main_pval)},
          {"int_pval", std::move(int_pval)}};
}

void validate_crit_result(const CritResult& result) {
  if (result.empty()) throw Error("inference: result has no criteria");
  for (const auto& [criterion, values] : result) {
    if (criterion.empty()) throw Error("inference: empty criterion name");
    const bool probability_like =
        criterion.find("pval") != std::string::npos ||
        criterion.find("pip") != std::string::npos || criterion == "beta" ||
        criterion == "linear_beta";
    for (const auto& [effect, value] : values) {
      if (effect.empty())
        throw Error("inference: empty effect label under criterion '" +
                    criterion + "'");
      if (!std::isfinite(value))
        throw Error("inference: non-finite value for '" + criterion + "/" +
                    effect + "'");
      if (probability_like && (value < 0.0 || value > 1.0))
        throw Error("inference: criterion '" + criterion + "' value " +
                    format_double(value) + " for '" + effect +
                    "' is outside [0,1]");
    }
  }
}

CritResult run_inference(const InferenceModel& model, const DataTable& x,
                         const std::vector<double>& y) {
  switch (model.kind_) {
    case InferenceModel::Kind::glm:
      return glm_criteria(fit_glm(x, y, model.family_, model.formula_));
    case InferenceModel::Kind::ftest:
      return overall_ftest(x, y);
    case InferenceModel::Kind::plugin: {
      CritResult result = model.plugin_(x, y);
      validate_crit_result(result);
      return result;
    }
  }
  throw Error("inference: invalid model");
}

}  // namespace powersim
