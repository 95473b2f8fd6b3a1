#pragma once

#include <Eigen/Dense>
#include <vector>

#include "powersim/formula.hpp"
#include "powersim/models.hpp"
#include "powersim/table.hpp"

namespace powersim {

// Fitted generalized linear model. Gaussian fits carry t-test p-values on
// n-k degrees of freedom; binomial/poisson fits carry Wald z-tests.
struct GlmFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  std::vector<double> p_values;  // two-sided, per coefficient
  std::vector<DesignColumn> columns;
  Family family = Family::gaussian;
  double residual_df = 0.0;
  double deviance = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Fits y ~ formula over the table. Gaussian solves least squares;
// binomial/poisson run IRLS to a relative deviance change below 1e-8
// (at most 25 iterations). Throws on rank-deficient designs, on
// divergence, and on apparent perfect separation.
GlmFit fit_glm(const DataTable& data, const std::vector<double>& y,
               Family family, const Formula& formula);

// Same fit on an already-expanded design; exposed so the least-squares /
// IRLS equivalence is testable directly.
GlmFit fit_glm_design(const DesignMatrix& design, const std::vector<double>& y,
                      Family family);

}  // namespace powersim
