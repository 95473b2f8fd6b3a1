#include "powersim/dist.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/non_central_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "powersim/errors.hpp"

namespace powersim::dist {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw Error(msg);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

double std_normal_cdf(double z) {
  require(finite(z), "std_normal_cdf: z must be finite");
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double inv_std_normal(double u) {
  require(u > 0.0 && u < 1.0, "inv_std_normal: u must lie in (0,1)");
  boost::math::normal_distribution<double> d(0.0, 1.0);
  return boost::math::quantile(d, u);
}

double t_cdf(double x, double df) {
  require(df > 0.0 && finite(df), "t_cdf: df must be positive");
  require(finite(x), "t_cdf: x must be finite");
  boost::math::students_t_distribution<double> d(df);
  return boost::math::cdf(d, x);
}

double f_cdf(double x, double df1, double df2) {
  require(df1 > 0.0 && df2 > 0.0 && finite(df1) && finite(df2),
          "f_cdf: degrees of freedom must be positive");
  require(x >= 0.0, "f_cdf: x must be >= 0");
  boost::math::fisher_f_distribution<double> d(df1, df2);
  return boost::math::cdf(d, x);
}

double chi2_cdf(double x, double df) {
  require(df > 0.0 && finite(df), "chi2_cdf: df must be positive");
  require(x >= 0.0, "chi2_cdf: x must be >= 0");
  boost::math::chi_squared_distribution<double> d(df);
  return boost::math::cdf(d, x);
}

double noncentral_f_cdf(double x, double df1, double df2, double ncp) {
  require(df1 > 0.0 && df2 > 0.0 && finite(df1) && finite(df2),
          "noncentral_f_cdf: degrees of freedom must be positive");
  require(ncp >= 0.0 && finite(ncp), "noncentral_f_cdf: ncp must be >= 0");
  require(x >= 0.0, "noncentral_f_cdf: x must be >= 0");
  if (ncp == 0.0) return f_cdf(x, df1, df2);
  boost::math::non_central_f_distribution<double> d(df1, df2, ncp);
  return boost::math::cdf(d, x);
}

double tail_probability(TailDist kind, const TailParams& params, double x,
                        bool upper) {
  double lower = 0.0;
  switch (kind) {
    case TailDist::student_t:
      lower = t_cdf(x, params.df1);
      break;
    case TailDist::fisher_f:
      lower = f_cdf(x, params.df1, params.df2);
      break;
    case TailDist::noncentral_f:
      lower = noncentral_f_cdf(x, params.df1, params.df2, params.ncp);
      break;
    case TailDist::chi_squared:
      lower = chi2_cdf(x, params.df1);
      break;
  }
  if (!upper) return lower;
  // Recompute upper tails directly where the complement would lose digits.
  switch (kind) {
    case TailDist::student_t: {
      boost::math::students_t_distribution<double> d(params.df1);
      return boost::math::cdf(boost::math::complement(d, x));
    }
    case TailDist::fisher_f: {
      boost::math::fisher_f_distribution<double> d(params.df1, params.df2);
      return boost::math::cdf(boost::math::complement(d, x));
    }
    case TailDist::noncentral_f: {
      if (params.ncp == 0.0)
        return tail_probability(TailDist::fisher_f, params, x, true);
      boost::math::non_central_f_distribution<double> d(params.df1, params.df2,
                                                        params.ncp);
      return boost::math::cdf(boost::math::complement(d, x));
    }
    case TailDist::chi_squared: {
      boost::math::chi_squared_distribution<double> d(params.df1);
      return boost::math::cdf(boost::math::complement(d, x));
    }
  }
  return 1.0 - lower;
}

double gamma_quantile(double shape, double u) {
  require(shape > 0.0 && finite(shape), "gamma_quantile: shape must be > 0");
  require(u > 0.0 && u < 1.0, "gamma_quantile: u must lie in (0,1)");
  boost::math::gamma_distribution<double> d(shape, 1.0);
  return boost::math::quantile(d, u);
}

double f_quantile(double p, double df1, double df2) {
  require(df1 > 0.0 && df2 > 0.0, "f_quantile: degrees of freedom must be positive");
  require(p > 0.0 && p < 1.0, "f_quantile: p must lie in (0,1)");
  boost::math::fisher_f_distribution<double> d(df1, df2);
  return boost::math::quantile(d, p);
}

}  // namespace powersim::dist
