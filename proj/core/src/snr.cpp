#include "powersim/snr.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"
#include "powersim/marginals.hpp"

namespace powersim {

namespace {

double sample_variance(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw Error("snr: need at least 2 samples");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

double stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  return std::sqrt(sample_variance(values));
}

double xlogy_ratio(double x, double num, double den) {
  // x * log(num/den) with the 0*log(0) == 0 convention.
  if (x == 0.0) return 0.0;
  return x * std::log(num / den);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct DiscreteDraws {
  std::vector<double> w;
  std::vector<double> h;
};

DiscreteDraws draw_discrete(const std::vector<double>& f, Family family,
                            RandomStream& rng) {
  DiscreteDraws d;
  d.w.resize(f.size());
  d.h.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (family == Family::binomial) {
      d.h[i] = logistic(f[i]);
      d.w[i] = rng.uniform() < d.h[i] ? 1.0 : 0.0;
    } else {
      const double lambda = std::exp(f[i]);
      if (lambda > 1e8)
        throw Error("snr: poisson mean " + format_double(lambda) +
                    " exceeds the cap 1e8");
      d.h[i] = lambda;
      d.w[i] = lambda <= 0.0
                   ? 0.0
                   : quantile(MarginalSpec::poisson(lambda), rng.uniform());
    }
  }
  return d;
}

}  // namespace

double bernoulli_deviance(const std::vector<double>& w,
                          const std::vector<double>& h) {
  if (w.size() != h.size()) throw Error("deviance: length mismatch");
  double dev = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    dev += xlogy_ratio(w[i], w[i], h[i]) +
           xlogy_ratio(1.0 - w[i], 1.0 - w[i], 1.0 - h[i]);
  return 2.0 * dev;
}

double poisson_deviance(const std::vector<double>& w,
                        const std::vector<double>& h) {
  if (w.size() != h.size()) throw Error("deviance: length mismatch");
  double dev = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    dev += xlogy_ratio(w[i], w[i], h[i]) - (w[i] - h[i]);
  return 2.0 * dev;
}

double discrete_snr(const std::vector<double>& w, const std::vector<double>& h,
                    std::size_t p, Family family) {
  if (w.empty()) throw Error("snr: empty sample");
  double wbar = 0.0;
  for (double v : w) wbar += v;
  wbar /= static_cast<double>(w.size());
  const std::vector<double> null_mean(w.size(), wbar);

  double dev_null = 0.0;
  double dev_model = 0.0;
  if (family == Family::binomial) {
    dev_null = bernoulli_deviance(w, null_mean);
    dev_model = bernoulli_deviance(w, h);
  } else if (family == Family::poisson) {
    dev_null = poisson_deviance(w, null_mean);
    dev_model = poisson_deviance(w, h);
  } else {
    throw Error("discrete_snr: family must be binomial or poisson");
  }
  const double pp = static_cast<double>(p);
  return (dev_null - dev_model + 1.0 - pp) / (dev_model + pp);
}

SnrEstimate estimate_snr(const PredictorModel& xmod, const OutcomeModel& ymod,
                         std::size_t m, std::size_t r, RandomStream& rng) {
  if (m < 2) throw Error("estimate_snr: m must be >= 2");
  if (r < 1) throw Error("estimate_snr: R must be >= 1");

  const DataTable x = sample_predictors(xmod, m, rng);
  const std::vector<double> f = ymod.mean_values(x);

  SnrEstimate est;
  est.m = m;
  est.r = r;

  if (ymod.family == Family::gaussian) {
    const double sigma2 = ymod.sigma * ymod.sigma;
    est.snr = sample_variance(f) / sigma2;
    std::vector<double> boot(r);
    std::vector<double> resampled(m);
    for (std::size_t rep = 0; rep < r; ++rep) {
      for (std::size_t i = 0; i < m; ++i) resampled[i] = f[rng.uniform_index(m)];
      boot[rep] = sample_variance(resampled) / sigma2;
    }
    est.se = stddev(boot);
    return est;
  }

  const std::size_t p = ymod.mean.parameter_count(x.ncol());
  const DiscreteDraws d = draw_discrete(f, ymod.family, rng);
  est.snr = discrete_snr(d.w, d.h, p, ymod.family);
  std::vector<double> boot(r);
  DiscreteDraws res;
  res.w.resize(m);
  res.h.resize(m);
  for (std::size_t rep = 0; rep < r; ++rep) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = rng.uniform_index(m);
      res.w[i] = d.w[k];
      res.h[i] = d.h[k];
    }
    boot[rep] = discrete_snr(res.w, res.h, p, ymod.family);
  }
  est.se = stddev(boot);
  return est;
}

namespace {

double estimate_signal_variance(const OutcomeModel& ymod,
                                const PredictorModel& xmod, std::size_t m,
                                RandomStream& rng) {
  if (m < 2) throw Error("scale: m must be >= 2");
  const DataTable x = sample_predictors(xmod, m, rng);
  const double var_f = sample_variance(ymod.mean_values(x));
  if (!(var_f > 0.0))
    throw Error("scale: the mean function is constant over the predictors");
  return var_f;
}

}  // namespace

OutcomeModel scale_sigma(double target, const OutcomeModel& ymod,
                         const PredictorModel& xmod, std::size_t m,
                         RandomStream& rng) {
  if (!(target > 0.0)) throw Error("scale_sigma: target SNR must be > 0");
  if (ymod.family != Family::gaussian)
    throw Error("scale_sigma: only the gaussian family has a noise variance");
  const double var_f = estimate_signal_variance(ymod, xmod, m, rng);
  OutcomeModel scaled = ymod;
  scaled.sigma = std::sqrt(var_f / target);
  return scaled;
}

OutcomeModel scale_f(double target, const OutcomeModel& ymod,
                     const PredictorModel& xmod, std::size_t m,
                     RandomStream& rng) {
  if (!(target > 0.0)) throw Error("scale_f: target SNR must be > 0");

  if (ymod.family == Family::gaussian) {
    const double var_f = estimate_signal_variance(ymod, xmod, m, rng);
    const double s = target * ymod.sigma * ymod.sigma / var_f;
    OutcomeModel scaled = ymod;
    scaled.scale *= std::sqrt(s);
    return scaled;
  }

  // Discrete families: monotone bisection on a multiplier for the mean,
  // using common random numbers so the objective is stable across steps.
  if (m < 2) throw Error("scale_f: m must be >= 2");
  const DataTable x = sample_predictors(xmod, m, rng);
  const std::vector<double> base = ymod.mean_values(x);
  std::vector<double> uniforms(m);
  for (auto& u : uniforms) u = rng.uniform();
  const std::size_t p = ymod.mean.parameter_count(x.ncol());

  auto snr_at = [&](double c) -> std::optional<double> {
    std::vector<double> w(m), h(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double eta = c * base[i];
      if (ymod.family == Family::binomial) {
        h[i] = logistic(eta);
        w[i] = uniforms[i] < h[i] ? 1.0 : 0.0;
      } else {
        const double lambda = std::exp(eta);
        if (lambda > 1e8) return std::nullopt;  // beyond the sampling cap
        h[i] = lambda;
        w[i] = lambda <= 0.0
                   ? 0.0
                   : quantile(MarginalSpec::poisson(lambda), uniforms[i]);
      }
    }
    return discrete_snr(w, h, p, ymod.family);
  };

  double lo = 1e-4;
  double hi = 1e4;
  const std::optional<double> at_lo = snr_at(lo);
  std::optional<double> at_hi = snr_at(hi);
  const double snr_lo = at_lo.value_or(
      std::numeric_limits<double>::infinity());
  const double snr_hi =
      at_hi ? *at_hi : std::numeric_limits<double>::infinity();
  if (target < snr_lo || target > snr_hi)
    throw Error("scale_f: target SNR " + format_double(target) +
                " is unreachable; achieved range [" + format_double(snr_lo) +
                ", " + format_double(snr_hi) + "]");

  double c = std::sqrt(lo * hi);
  for (int iter = 0; iter < 60; ++iter) {
    c = std::sqrt(lo * hi);  // bisect in log scale
    const std::optional<double> value = snr_at(c);
    const double snr = value ? *value : std::numeric_limits<double>::infinity();
    if (std::fabs(snr - target) <= 0.02 * target) break;
    if (snr < target)
      lo = c;
    else
      hi = c;
  }

  OutcomeModel scaled = ymod;
  scaled.scale *= c;
  return scaled;
}

}  // namespace powersim
