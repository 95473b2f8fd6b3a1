#pragma once

namespace powersim::dist {

// Standard normal CDF and its inverse. The pair is mutually inverse to
// better than 1e-10 absolute error over u in [1e-12, 1 - 1e-12].
double std_normal_cdf(double z);
double inv_std_normal(double u);  // throws on u outside (0,1)

// CDFs used by Wald/t/F tests. Parameters are validated; df must be
// positive, x must be >= 0 for the F and chi-squared families.
double t_cdf(double x, double df);
double f_cdf(double x, double df1, double df2);
double chi2_cdf(double x, double df);
double noncentral_f_cdf(double x, double df1, double df2, double ncp);

enum class TailDist { student_t, fisher_f, noncentral_f, chi_squared };

struct TailParams {
  double df1 = 0.0;  // the only df for t / chi-squared
  double df2 = 0.0;
  double ncp = 0.0;  // noncentral F only
};

// Upper or lower tail probability of the requested distribution at x.
double tail_probability(TailDist kind, const TailParams& params, double x,
                        bool upper);

// Quantile of Gamma(shape, 1); used by marginal quantile transforms.
double gamma_quantile(double shape, double u);

// Quantile of the central F distribution (numerically inverted CDF).
double f_quantile(double p, double df1, double df2);

}  // namespace powersim::dist
