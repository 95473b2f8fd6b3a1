#include "powersim/glm.hpp"

#include <cmath>
#include <limits>

#include "powersim/dist.hpp"
#include "powersim/errors.hpp"
#include "powersim/snr.hpp"

namespace powersim {

namespace {

constexpr int kMaxIterations = 25;
constexpr double kDevianceTol = 1e-8;
constexpr double kProbEps = 1e-10;

double gaussian_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  return (y - mu).squaredNorm();
}

}  // namespace

GlmFit fit_glm_design(const DesignMatrix& design, const std::vector<double>& y,
                      Family family) {
  const Eigen::Index n = design.x.rows();
  const Eigen::Index k = design.x.cols();
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw Error("glm: outcome length does not match the design");
  if (n <= k)
    throw Error("glm: need more observations than coefficients (n=" +
                std::to_string(n) + ", k=" + std::to_string(k) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw Error("glm: rank-deficient design matrix");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  GlmFit fit;
  fit.columns = design.columns;
  fit.family = family;
  fit.residual_df = static_cast<double>(n - k);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta(n), mu(n), w(n), z(n);

  // Working response initialization in the usual GLM way.
  switch (family) {
    case Family::gaussian:
      mu = yv;
      eta = mu;
      break;
    case Family::binomial:
      mu = ((yv.array() + 0.5) / 2.0).matrix();
      eta = (mu.array() / (1.0 - mu.array())).log().matrix();
      break;
    case Family::poisson:
      mu = (yv.array() + 0.1).matrix();
      eta = mu.array().log().matrix();
      break;
  }

  Eigen::MatrixXd xtwx(k, k);
  double old_dev = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    fit.iterations = iter;
    switch (family) {
      case Family::gaussian:
        w.setOnes();
        z = yv;
        break;
      case Family::binomial:
        w = (mu.array() * (1.0 - mu.array())).matrix();
        z = (eta.array() + (yv - mu).array() / w.array()).matrix();
        break;
      case Family::poisson:
        w = mu;
        z = (eta.array() + (yv - mu).array() / mu.array()).matrix();
        break;
    }

    const Eigen::MatrixXd xw = design.x.array().colwise() * w.array();
    xtwx = design.x.transpose() * xw;
    beta = xtwx.ldlt().solve(design.x.transpose() * (w.asDiagonal() * z));
    if (!beta.allFinite()) throw Error("glm: IRLS diverged");

    eta = design.x * beta;
    double dev = 0.0;
    switch (family) {
      case Family::gaussian:
        mu = eta;
        dev = gaussian_deviance(yv, mu);
        break;
      case Family::binomial: {
        mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
        mu = mu.array().min(1.0 - kProbEps).max(kProbEps).matrix();
        std::vector<double> muv(mu.data(), mu.data() + n);
        dev = bernoulli_deviance(y, muv);
        break;
      }
      case Family::poisson: {
        mu = eta.array().exp().matrix();
        mu = mu.array().max(kProbEps).matrix();
        std::vector<double> muv(mu.data(), mu.data() + n);
        dev = poisson_deviance(y, muv);
        break;
      }
    }
    if (!std::isfinite(dev)) throw Error("glm: IRLS diverged");

    fit.deviance = dev;
    if (std::fabs(dev - old_dev) / (std::fabs(dev) + 0.1) < kDevianceTol) {
      fit.converged = true;
      break;
    }
    old_dev = dev;
  }

  // A binary outcome fitted to (numerically) zero deviance means the data
  // is perfectly predicted; Wald statistics are meaningless there.
  if (family == Family::binomial && fit.deviance < 1e-6)
    throw Error("glm: apparent perfect separation");

  fit.coefficients = beta;

  if (family == Family::gaussian) {
    const double sigma2 = fit.deviance / fit.residual_df;
    fit.covariance = sigma2 * xtwx.ldlt().solve(
                                  Eigen::MatrixXd::Identity(k, k));
  } else {
    fit.covariance = xtwx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  }
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());

  fit.p_values.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double se = std::sqrt(std::max(fit.covariance(j, j), 0.0));
    if (se <= 0.0) {
      fit.p_values[j] = 1.0;
      continue;
    }
    const double stat = std::fabs(beta(j) / se);
    if (family == Family::gaussian) {
      dist::TailParams params;
      params.df1 = fit.residual_df;
      fit.p_values[j] =
          2.0 * dist::tail_probability(dist::TailDist::student_t, params, stat,
                                       /*upper=*/true);
    } else {
      fit.p_values[j] = 2.0 * dist::std_normal_cdf(-stat);
    }
    fit.p_values[j] = std::min(fit.p_values[j], 1.0);
  }
  return fit;
}

GlmFit fit_glm(const DataTable& data, const std::vector<double>& y,
               Family family, const Formula& formula) {
  return fit_glm_design(build_design(formula, data), y, family);
}

}  // namespace powersim
