#pragma once

#include <string>
#include <vector>

#include "powersim/table.hpp"

namespace powersim {

// Univariate marginal distribution, identified by its quantile function.
// Construct through the factories (they validate) or parse_marginal.
struct MarginalSpec {
  enum class Kind {
    normal,      // mean, sd
    uniform,     // min, max
    binomial,    // size, prob
    poisson,     // lambda
    multinomial, // probs (category codes 1..K)
    lognormal,   // meanlog, sdlog
    gamma,       // shape, rate
    empirical    // sorted sample values
  };

  Kind kind = Kind::normal;
  double a = 0.0;  // mean | min | size | lambda | meanlog | shape
  double b = 1.0;  // sd | max | prob | sdlog | rate
  std::vector<double> probs;   // multinomial simplex
  std::vector<double> sample;  // empirical, ascending
  DType dtype = DType::numeric;

  static MarginalSpec normal(double mean, double sd);
  static MarginalSpec uniform(double min, double max);
  static MarginalSpec binomial(double size, double prob);
  static MarginalSpec poisson(double lambda);
  static MarginalSpec multinomial(std::vector<double> probs);
  static MarginalSpec lognormal(double meanlog, double sdlog);
  static MarginalSpec gamma(double shape, double rate);
  static MarginalSpec empirical(std::vector<double> values);  // sorts a copy

  std::string describe() const;
};

// Pseudo-inverse CDF at u in (0,1): the smallest t with F(t) >= u.
// Multinomial returns a category code in 1..K; empirical returns a member
// of the sample.
double quantile(const MarginalSpec& spec, double u);

// Parses spec strings of the form "qnorm(mean = 0, sd = 1)"; vector-valued
// arguments use "c(0.6, 0.2, 0.2)". All arguments are required by name.
MarginalSpec parse_marginal(const std::string& text);

}  // namespace powersim
