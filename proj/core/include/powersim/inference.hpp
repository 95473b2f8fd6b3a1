#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "powersim/glm.hpp"

namespace powersim {

// Named significance-criterion values: criterion name -> effect label ->
// value. Probability-like criteria (pval/pip/beta kinds) must lie in [0,1].
using CritValues = std::map<std::string, double>;
using CritResult = std::map<std::string, CritValues>;

// An inference model fitted once per simulated dataset. Built-ins: a GLM
// with a formula (criteria pval/main_pval/int_pval) and the overall F-test
// (criterion pval). Plugins receive (X, y) and return a CritResult.
class InferenceModel {
 public:
  using Plugin =
      std::function<CritResult(const DataTable&, const std::vector<double>&)>;

  static InferenceModel glm(Family family, Formula formula);
  static InferenceModel glm(Family family, const std::string& formula_text);
  static InferenceModel ftest();
  static InferenceModel plugin(std::string name, Plugin fn);

  const std::string& name() const { return name_; }

 private:
  enum class Kind { glm, ftest, plugin };

  Kind kind_ = Kind::ftest;
  std::string name_;
  Family family_ = Family::gaussian;
  Formula formula_;
  Plugin plugin_;

  friend CritResult run_inference(const InferenceModel& model,
                                  const DataTable& x,
                                  const std::vector<double>& y);
};

// Overall F-test of the regression of y on every column of x: criterion
// "pval", single effect "F-test".
CritResult overall_ftest(const DataTable& x, const std::vector<double>& y);

// Table-1 GLM criteria from a converged fit: per original predictor, the
// smallest p-value over coefficients involving it ("pval"), over main
// effects only ("main_pval"), and over interactions only ("int_pval").
CritResult glm_criteria(const GlmFit& fit);

// Dispatches to the model variant; plugin output is validated (labels
// nonempty, values finite, probability-like criteria within [0,1]).
CritResult run_inference(const InferenceModel& model, const DataTable& x,
                         const std::vector<double>& y);

// Validation used for plugin results; throws on violations.
void validate_crit_result(const CritResult& result);

}  // namespace powersim
