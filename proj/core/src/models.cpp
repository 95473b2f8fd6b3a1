#include "powersim/models.hpp"

#include <algorithm>
#include <cmath>

#include "powersim/csv.hpp"
#include "powersim/dist.hpp"
#include "powersim/errors.hpp"

namespace powersim {

namespace {

// Generated Poisson means beyond this are treated as an iteration error.
constexpr double kPoissonMeanCap = 1e8;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::gaussian:
      return "gaussian";
    case Family::binomial:
      return "binomial";
    case Family::poisson:
      return "poisson";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "binomial") return Family::binomial;
  if (name == "poisson") return Family::poisson;
  throw Error("unknown family '" + name + "'");
}

// ---- MeanFunction ----------------------------------------------------------

MeanFunction MeanFunction::expression(Expr expr) {
  if (!expr.valid()) throw Error("mean function: empty expression");
  MeanFunction f;
  f.expr_ = expr;
  f.label_ = expr.to_string();
  return f;
}

MeanFunction MeanFunction::from_string(const std::string& text) {
  MeanFunction f;
  f.expr_ = parse_expression(text);
  f.label_ = text;
  return f;
}

MeanFunction MeanFunction::callback(Callback fn, std::string label) {
  if (!fn) throw Error("mean function: null callback");
  MeanFunction f;
  f.fn_ = std::move(fn);
  f.label_ = std::move(label);
  return f;
}

std::vector<double> MeanFunction::operator()(const DataTable& predictors) const {
  if (expr_.valid()) return expr_.evaluate_batch(predictors);
  std::vector<double> out = fn_(predictors);
  if (out.size() != predictors.nrow())
    throw Error("mean callback returned " + std::to_string(out.size()) +
                " values for " + std::to_string(predictors.nrow()) + " rows");
  return out;
}

std::size_t MeanFunction::parameter_count(std::size_t ncol) const {
  if (expr_.valid()) return expr_.term_count();
  return ncol + 1;
}

// ---- OutcomeModel ----------------------------------------------------------

OutcomeModel OutcomeModel::gaussian(MeanFunction mean, double sigma) {
  if (!(sigma > 0.0)) throw Error("outcome: gaussian sigma must be > 0");
  OutcomeModel m;
  m.mean = std::move(mean);
  m.family = Family::gaussian;
  m.sigma = sigma;
  return m;
}

OutcomeModel OutcomeModel::binomial(MeanFunction mean) {
  OutcomeModel m;
  m.mean = std::move(mean);
  m.family = Family::binomial;
  m.sigma = 0.0;
  return m;
}

OutcomeModel OutcomeModel::poisson(MeanFunction mean) {
  OutcomeModel m;
  m.mean = std::move(mean);
  m.family = Family::poisson;
  m.sigma = 0.0;
  return m;
}

std::vector<double> OutcomeModel::mean_values(const DataTable& predictors) const {
  std::vector<double> values = mean(predictors);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (scale != 1.0) values[i] *= scale;
    if (!std::isfinite(values[i]))
      throw Error("mean evaluation produced a non-finite value at row " +
                  std::to_string(i));
  }
  return values;
}

std::string OutcomeModel::label() const {
  if (scale == 1.0) return mean.label();
  return format_double(scale) + " * (" + mean.label() + ")";
}

// ---- PredictorModel --------------------------------------------------------

PredictorModel PredictorModel::resampling(DataTable data,
                                          std::vector<double> weights) {
  if (data.nrow() == 0 || data.ncol() == 0)
    throw Error("resampling: data must be nonempty");
  Resampling r;
  if (!weights.empty()) {
    if (weights.size() != data.nrow())
      throw Error("resampling: weights length must equal the row count");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw Error("resampling: weights must be nonnegative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw Error("resampling: weights must sum to 1");
    r.cumulative.resize(weights.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      r.cumulative[i] = cum;
    }
    r.cumulative.back() = 1.0;
  }
  r.data = std::move(data);

  PredictorModel model;
  model.names_ = r.data.names();
  model.impl_ = std::move(r);
  return model;
}

PredictorModel PredictorModel::cvine(VineSpec spec,
                                     std::vector<MarginalSpec> marginals) {
  spec.validate();
  if (spec.names.empty())
    throw Error("cvine: the vine spec must carry column names");
  if (marginals.size() != spec.names.size())
    throw Error("cvine: need one marginal per vine column");

  PredictorModel model;
  model.names_ = spec.names;
  model.impl_ = CVine{std::move(spec), std::move(marginals)};
  return model;
}

PredictorModel PredictorModel::estimation(DataTable data,
                                          std::vector<CorrelationMatrix> draws) {
  if (draws.empty())
    throw Error("estimation: need at least one correlation draw");
  for (const auto& c : draws)
    if (c.dim() != data.ncol())
      throw Error("estimation: correlation dimension must match the data");
  Estimation e;
  e.marginals.reserve(data.ncol());
  for (std::size_t j = 0; j < data.ncol(); ++j) {
    MarginalSpec m = MarginalSpec::empirical(data.column(j));
    m.dtype = data.dtype(j);
    e.marginals.push_back(std::move(m));
  }
  e.draws = std::move(draws);
  e.data = std::move(data);

  PredictorModel model;
  model.names_ = e.data.names();
  model.impl_ = std::move(e);
  return model;
}

PredictorModel PredictorModel::estimation_from_data(const DataTable& data,
                                                    std::size_t bootstrap_reps,
                                                    RandomStream& rng) {
  LatentCorrelationEstimate est =
      estimate_latent_correlation(data, bootstrap_reps, rng);
  std::vector<CorrelationMatrix> draws = std::move(est.draws);
  if (draws.empty()) draws.push_back(est.point);
  return estimation(data, std::move(draws));
}

std::string PredictorModel::method_name() const {
  if (std::holds_alternative<Resampling>(impl_)) return "resampling";
  if (std::holds_alternative<CVine>(impl_)) return "cvine";
  return "estimation";
}

namespace {

// Latent-normal draw pushed through Phi and the marginal quantiles.
DataTable copula_sample(const Eigen::MatrixXd& corr,
                        const std::vector<std::string>& names,
                        const std::vector<MarginalSpec>& marginals,
                        std::size_t n, RandomStream& rng) {
  const std::size_t p = names.size();
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success)
    throw Error("copula: correlation matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();

  std::vector<std::vector<double>> cols(p);
  for (auto& c : cols) c.reserve(n);
  Eigen::VectorXd eps(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) eps(j) = rng.normal();
    const Eigen::VectorXd z = l * eps;
    for (std::size_t j = 0; j < p; ++j) {
      const double u = dist::std_normal_cdf(z(j));
      cols[j].push_back(quantile(marginals[j], u));
    }
  }

  DataTable out;
  for (std::size_t j = 0; j < p; ++j)
    out.add_column(names[j], std::move(cols[j]), marginals[j].dtype);
  return out;
}

}  // namespace

DataTable sample_predictors(const PredictorModel& model, std::size_t n,
                            RandomStream& rng) {
  if (n == 0) throw Error("sample_predictors: n must be >= 1");

  if (const auto* r = std::get_if<PredictorModel::Resampling>(&model.impl_)) {
    std::vector<std::size_t> rows(n);
    if (r->cumulative.empty()) {
      for (auto& idx : rows) idx = rng.uniform_index(r->data.nrow());
    } else {
      for (auto& idx : rows) {
        const double u = rng.uniform();
        idx = static_cast<std::size_t>(
            std::upper_bound(r->cumulative.begin(), r->cumulative.end(), u) -
            r->cumulative.begin());
        if (idx >= r->data.nrow()) idx = r->data.nrow() - 1;
      }
    }
    return r->data.take_rows(rows);
  }

  if (const auto* v = std::get_if<PredictorModel::CVine>(&model.impl_)) {
    const CorrelationMatrix corr = sample_cvine(v->spec, rng);
    return copula_sample(corr.matrix(), model.names_, v->marginals, n, rng);
  }

  const auto& e = std::get<PredictorModel::Estimation>(model.impl_);
  const std::size_t pick = rng.uniform_index(e.draws.size());
  return copula_sample(e.draws[pick].matrix(), model.names_, e.marginals, n,
                       rng);
}

std::vector<double> sample_outcome(const OutcomeModel& model,
                                   const DataTable& predictors,
                                   RandomStream& rng) {
  const std::vector<double> f = model.mean_values(predictors);
  std::vector<double> y(f.size());
  switch (model.family) {
    case Family::gaussian:
      for (std::size_t i = 0; i < f.size(); ++i)
        y[i] = f[i] + model.sigma * rng.normal();
      break;
    case Family::binomial:
      for (std::size_t i = 0; i < f.size(); ++i)
        y[i] = rng.uniform() < logistic(f[i]) ? 1.0 : 0.0;
      break;
    case Family::poisson:
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double lambda = std::exp(f[i]);
        if (lambda > kPoissonMeanCap)
          throw Error("poisson mean " + format_double(lambda) +
                      " exceeds the cap " + format_double(kPoissonMeanCap) +
                      " at row " + std::to_string(i));
        if (lambda <= 0.0) {
          y[i] = 0.0;
          continue;
        }
        y[i] = quantile(MarginalSpec::poisson(lambda), rng.uniform());
      }
      break;
  }
  return y;
}

}  // namespace powersim
