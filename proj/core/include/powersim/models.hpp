#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "powersim/correlation.hpp"
#include "powersim/expr.hpp"
#include "powersim/marginals.hpp"
#include "powersim/rng.hpp"
#include "powersim/table.hpp"

namespace powersim {

enum class Family { gaussian, binomial, poisson };

std::string family_name(Family family);
Family parse_family(const std::string& name);

// Mean function of an outcome model: either a parsed expression over the
// predictor columns or a host callback mapping the full predictor table to
// a vector of mean values.
class MeanFunction {
 public:
  using Callback = std::function<std::vector<double>(const DataTable&)>;

  static MeanFunction expression(Expr expr);
  static MeanFunction from_string(const std::string& text);
  static MeanFunction callback(Callback fn, std::string label = "<callback>");

  std::vector<double> operator()(const DataTable& predictors) const;

  // Parameter count of the generative mean, used by the discrete-family SNR
  // estimator: additive-term count for expressions, ncol+1 for callbacks.
  std::size_t parameter_count(std::size_t ncol) const;

  bool is_expression() const { return expr_.valid(); }
  const Expr& expr() const { return expr_; }
  const std::string& label() const { return label_; }

 private:
  Expr expr_;
  Callback fn_;
  std::string label_;
};

// Hypothesized outcome-generating model: mean function, family, and (for
// the gaussian family) the noise standard deviation. `scale` is a recorded
// multiplier on the mean, written by scale_f.
struct OutcomeModel {
  MeanFunction mean;
  Family family = Family::gaussian;
  double sigma = 1.0;
  double scale = 1.0;

  static OutcomeModel gaussian(MeanFunction mean, double sigma);
  static OutcomeModel binomial(MeanFunction mean);
  static OutcomeModel poisson(MeanFunction mean);

  // Mean values over a predictor table with `scale` applied; rejects
  // non-finite values.
  std::vector<double> mean_values(const DataTable& predictors) const;

  std::string label() const;
};

// Generative model for rows of correlated predictors. Immutable after
// construction; sampling draws only from the caller's random stream.
class PredictorModel {
 public:
  // Rows drawn with replacement from existing data; optional row weights
  // must be nonnegative and sum to 1 within 1e-9.
  static PredictorModel resampling(DataTable data,
                                   std::vector<double> weights = {});

  // Gaussian copula with a C-vine-sampled correlation matrix and explicit
  // marginals, one per vine column (aligned with spec.names).
  static PredictorModel cvine(VineSpec spec,
                              std::vector<MarginalSpec> marginals);

  // Gaussian copula with empirical marginals from `data` and correlation
  // matrices drawn uniformly from the given set (e.g. bootstrap draws).
  static PredictorModel estimation(DataTable data,
                                   std::vector<CorrelationMatrix> draws);

  // Convenience: run the latent-correlation estimator on `data` first.
  static PredictorModel estimation_from_data(const DataTable& data,
                                             std::size_t bootstrap_reps,
                                             RandomStream& rng);

  const std::vector<std::string>& column_names() const { return names_; }
  std::string method_name() const;

 private:
  struct Resampling {
    DataTable data;
    std::vector<double> cumulative;  // empty = uniform
  };
  struct CVine {
    VineSpec spec;
    std::vector<MarginalSpec> marginals;
  };
  struct Estimation {
    DataTable data;
    std::vector<CorrelationMatrix> draws;
    std::vector<MarginalSpec> marginals;
  };

  std::variant<Resampling, CVine, Estimation> impl_;
  std::vector<std::string> names_;

  friend DataTable sample_predictors(const PredictorModel& model,
                                     std::size_t n, RandomStream& rng);
};

// Samples n rows of predictors. Copula methods draw one correlation matrix
// per call, then map latent normals through the marginal quantiles.
DataTable sample_predictors(const PredictorModel& model, std::size_t n,
                            RandomStream& rng);

// Samples outcomes given predictors: gaussian adds N(0, sigma^2) noise,
// binomial draws through the logit link, poisson through the log link.
std::vector<double> sample_outcome(const OutcomeModel& model,
                                   const DataTable& predictors,
                                   RandomStream& rng);

}  // namespace powersim
