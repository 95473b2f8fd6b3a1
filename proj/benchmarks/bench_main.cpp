#include <benchmark/benchmark.h>

#include "powersim/correlation.hpp"
#include "powersim/engine.hpp"
#include "powersim/glm.hpp"
#include "powersim/models.hpp"
#include "powersim/rng.hpp"

namespace {

using namespace powersim;

VineSpec identity_vine(std::size_t p, double m) {
  VineSpec spec;
  spec.guess = Eigen::MatrixXd::Identity(p, p);
  spec.concentration = m;
  for (std::size_t j = 0; j < p; ++j)
    spec.names.push_back("x" + std::to_string(j + 1));
  return spec;
}

PredictorModel normal_cvine(std::size_t p, double m) {
  std::vector<MarginalSpec> marginals(p, MarginalSpec::normal(0.0, 1.0));
  return PredictorModel::cvine(identity_vine(p, m), std::move(marginals));
}

void BM_SampleCvine(benchmark::State& state) {
  const std::size_t p = static_cast<std::size_t>(state.range(0));
  VineSpec spec;
  spec.guess = Eigen::MatrixXd::Constant(p, p, 0.5);
  spec.guess.diagonal().setOnes();
  spec.concentration = 100.0;
  RandomStream rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_cvine(spec, rng));
  }
}
BENCHMARK(BM_SampleCvine)->Arg(10)->Arg(40);

void BM_CopulaPredictors(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PredictorModel xmod = normal_cvine(8, 1000.0);
  RandomStream rng(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_predictors(xmod, n, rng));
  }
}
BENCHMARK(BM_CopulaPredictors)->Arg(200)->Arg(2000);

void BM_IrlsBinomial(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PredictorModel xmod = normal_cvine(6, 1000.0);
  const OutcomeModel ymod =
      OutcomeModel::binomial(MeanFunction::from_string("0.5*x1 + 0.5*x2"));
  RandomStream rng(13);
  const DataTable x = sample_predictors(xmod, n, rng);
  const std::vector<double> y = sample_outcome(ymod, x, rng);
  const Formula formula =
      parse_formula("y ~ x1 + x2 + x3 + x4 + x5 + x6");
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_glm(x, y, Family::binomial, formula));
  }
}
BENCHMARK(BM_IrlsBinomial)->Arg(500)->Arg(2000);

void BM_SimPower(benchmark::State& state) {
  const PredictorModel xmod = normal_cvine(4, 1000.0);
  const OutcomeModel ymod = OutcomeModel::gaussian(
      MeanFunction::from_string("0.3*x1 + 0.3*x2"), 1.0);
  const InferenceModel imod = InferenceModel::ftest();
  SimOptions options;
  options.s = 50;
  options.snr_iter = 1000;
  options.cores = static_cast<std::size_t>(state.range(0));
  options.seed = 17;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim_power(xmod, ymod, imod, 100, options));
  }
}
BENCHMARK(BM_SimPower)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
