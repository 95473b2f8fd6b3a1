#pragma once

#include <cstddef>
#include <vector>

#include "powersim/models.hpp"
#include "powersim/rng.hpp"

namespace powersim {

// Signal-to-noise estimate with its bootstrap standard error.
struct SnrEstimate {
  double snr = 0.0;
  double se = 0.0;
  std::size_t m = 0;  // predictor draws used
  std::size_t r = 0;  // bootstrap replicates
};

// Deviance of observed w against predicted means h, with 0*log(0) == 0.
double bernoulli_deviance(const std::vector<double>& w,
                          const std::vector<double>& h);
double poisson_deviance(const std::vector<double>& w,
                        const std::vector<double>& h);

// Deviance-based SNR for binary/count outcomes given the generative
// parameter count p:
//   (Dev(w, wbar*1) - Dev(w, h) + 1 - p) / (Dev(w, h) + p)
double discrete_snr(const std::vector<double>& w, const std::vector<double>& h,
                    std::size_t p, Family family);

// Estimates the SNR of the data-generating process from m fresh predictor
// draws; gaussian uses Var(f(X))/sigma^2, binomial/poisson the deviance
// estimator. se is the standard deviation over R bootstrap resamples.
SnrEstimate estimate_snr(const PredictorModel& xmod, const OutcomeModel& ymod,
                         std::size_t m, std::size_t r, RandomStream& rng);

// Returns a copy of the outcome model with sigma set to sqrt(var_f/target)
// so the SNR becomes `target`. Gaussian family only; f must be non-constant.
OutcomeModel scale_sigma(double target, const OutcomeModel& ymod,
                         const PredictorModel& xmod, std::size_t m,
                         RandomStream& rng);

// Returns a copy with the mean function rescaled to reach the target SNR:
// exact multiplier sqrt(target*sigma^2/var_f) for gaussian, monotone
// bisection on the multiplier for binomial/poisson (within 2% relative or
// 60 iterations). The multiplier is recorded on the returned model.
OutcomeModel scale_f(double target, const OutcomeModel& ymod,
                     const PredictorModel& xmod, std::size_t m,
                     RandomStream& rng);

}  // namespace powersim
