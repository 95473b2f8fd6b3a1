#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "powersim/engine.hpp"
#include "powersim/errors.hpp"

using namespace powersim;

namespace {

PredictorModel independent_normals(std::vector<std::string> names,
                                   double m = 1e5) {
  VineSpec spec;
  const std::size_t p = names.size();
  spec.guess = Eigen::MatrixXd::Identity(p, p);
  spec.concentration = m;
  spec.names = std::move(names);
  return PredictorModel::cvine(
      spec, std::vector<MarginalSpec>(p, MarginalSpec::normal(0, 1)));
}

SimOptions options_with(std::size_t s, std::uint64_t seed,
                        std::size_t cores = 1) {
  SimOptions opt;
  opt.s = s;
  opt.snr_iter = 2000;
  opt.cores = cores;
  opt.seed = seed;
  return opt;
}

bool same_iterations(const SimResult& a, const SimResult& b) {
  if (a.iterations.size() != b.iterations.size()) return false;
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    if (a.iterations[i].has_value() != b.iterations[i].has_value())
      return false;
    if (!a.iterations[i]) continue;
    const CritResult& ca = *a.iterations[i];
    const CritResult& cb = *b.iterations[i];
    if (ca.size() != cb.size()) return false;
    for (const auto& [crit, values] : ca) {
      const auto it = cb.find(crit);
      if (it == cb.end()) return false;
      if (values.size() != it->second.size()) return false;
      for (const auto& [effect, value] : values) {
        const auto vit = it->second.find(effect);
        if (vit == it->second.end()) return false;
        if (vit->second != value) return false;  // bit-equal
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("a plugin that always rejects gives power 1") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  const InferenceModel imod = InferenceModel::plugin(
      "always", [](const DataTable&, const std::vector<double>&) {
        return CritResult{{"pval", {{"effect", 0.001}}}};
      });
  const SimResult result = sim_power(xmod, ymod, imod, 10,
                                     options_with(50, 1));
  const PowerTable table =
      power_summary(result, "pval", {0.05}, Direction::lesser);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].power == 1.0);
  CHECK(table.rows[0].se == 0.0);
}

TEST_CASE("null outcome with the overall F-test has size 0.05") {
  const PredictorModel xmod = independent_normals({"x1", "x2"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("0*x1"), 1.0);
  const SimResult result = sim_power(xmod, ymod, InferenceModel::ftest(), 30,
                                     options_with(1000, 99, 2));
  const PowerTable table =
      power_summary(result, "pval", {0.05}, Direction::lesser);
  CHECK(std::fabs(table.rows[0].power - 0.05) <= 0.02);
}

TEST_CASE("determinism: cores 1, 2, 8 give bit-identical results") {
  const PredictorModel xmod = independent_normals({"x1", "x2"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("0.3*x1 + 0.3*x2"), 1.0);
  const InferenceModel imod = InferenceModel::ftest();

  const SimResult r1 = sim_power(xmod, ymod, imod, 40, options_with(60, 7, 1));
  const SimResult r2 = sim_power(xmod, ymod, imod, 40, options_with(60, 7, 2));
  const SimResult r8 = sim_power(xmod, ymod, imod, 40, options_with(60, 7, 8));
  CHECK(same_iterations(r1, r2));
  CHECK(same_iterations(r1, r8));
  CHECK(r1.snr.snr == r2.snr.snr);
  CHECK(r1.snr.snr == r8.snr.snr);
}

TEST_CASE("different seeds give different draws") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  const InferenceModel imod = InferenceModel::ftest();
  const SimResult a = sim_power(xmod, ymod, imod, 20, options_with(30, 1));
  const SimResult b = sim_power(xmod, ymod, imod, 20, options_with(30, 2));
  CHECK(!same_iterations(a, b));
}

TEST_CASE("power is monotone in the threshold") {
  const PredictorModel xmod = independent_normals({"x1", "x2"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("0.2*x1"), 1.0);
  const SimResult result = sim_power(xmod, ymod, InferenceModel::ftest(), 50,
                                     options_with(200, 5));
  const std::vector<double> thresholds = {0.01, 0.05, 0.1, 0.2};
  const PowerTable lesser =
      power_summary(result, "pval", thresholds, Direction::lesser);
  REQUIRE(lesser.rows.size() == 4);
  for (std::size_t i = 1; i < 4; ++i)
    CHECK(lesser.rows[i].power >= lesser.rows[i - 1].power);

  const PowerTable greater =
      power_summary(result, "pval", {0.5, 0.6, 0.7, 0.8}, Direction::greater);
  for (std::size_t i = 1; i < greater.rows.size(); ++i)
    CHECK(greater.rows[i].power <= greater.rows[i - 1].power);
}

TEST_CASE("power summary counts and standard error") {
  // Four fixed criterion values: 0.01, 0.2, 0.04, 0.07 at threshold 0.05.
  SimResult result;
  result.s = 4;
  result.n = 10;
  result.inference_name = "fixed";
  for (double v : {0.01, 0.2, 0.04, 0.07})
    result.iterations.push_back(CritResult{{"pval", {{"e", v}}}});
  const PowerTable table =
      power_summary(result, "pval", {0.05}, Direction::lesser);
  CHECK(table.rows[0].power == doctest::Approx(0.5));
  CHECK(table.rows[0].se ==
        doctest::Approx(std::sqrt(0.5 * 0.5 / 4.0)).epsilon(1e-12));
}

TEST_CASE("unknown criterion names the available ones") {
  SimResult result;
  result.s = 1;
  result.n = 10;
  result.iterations.push_back(CritResult{{"pval", {{"e", 0.5}}}});
  try {
    (void)power_summary(result, "pip", {0.5}, Direction::greater);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("pval") != std::string::npos);
  }
}

TEST_CASE("error handling modes") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  // Fails deterministically on iterations 3 and 7 via the iteration-indexed
  // predictor draw: the plugin inspects nothing, so fail on value patterns
  // is impossible; instead throw on a fixed call count per iteration seed.
  const InferenceModel imod = InferenceModel::plugin(
      "flaky", [](const DataTable& x, const std::vector<double>&) {
        // x1 is standard normal; a draw beyond 3.1 in the first row flags
        // roughly 1 in 1000 iterations, so pick a data-dependent rule that
        // hits a few of 60 iterations: first-row value above 1.2.
        if (x.at(0, 0) > 1.2) throw Error("synthetic failure");
        return CritResult{{"pval", {{"e", 0.01}}}};
      });

  SimOptions remove_opt = options_with(60, 11);
  remove_opt.errorhandling = ErrorHandling::remove;
  const SimResult removed = sim_power(xmod, ymod, imod, 5, remove_opt);
  CHECK(removed.errors.size() > 0);
  CHECK(removed.successes() + removed.errors.size() == 60);

  SimOptions pass_opt = remove_opt;
  pass_opt.errorhandling = ErrorHandling::pass;
  const SimResult passed = sim_power(xmod, ymod, imod, 5, pass_opt);
  CHECK(same_iterations(removed, passed));  // only bookkeeping differs
  REQUIRE(passed.errors.size() == removed.errors.size());
  CHECK(passed.errors[0].stage == "inference");
  CHECK(passed.errors[0].message.find("synthetic failure") !=
        std::string::npos);

  SimOptions stop_opt = remove_opt;
  stop_opt.errorhandling = ErrorHandling::stop;
  CHECK_THROWS_AS((void)sim_power(xmod, ymod, imod, 5, stop_opt),
                  SimulationError);
}

TEST_CASE("power denominator excludes errored iterations") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  const InferenceModel imod = InferenceModel::plugin(
      "flaky", [](const DataTable& x, const std::vector<double>&) {
        if (x.at(0, 0) > 0.8) throw Error("synthetic failure");
        return CritResult{{"pval", {{"e", 0.01}}}};
      });
  SimOptions opt = options_with(80, 13);
  const SimResult result = sim_power(xmod, ymod, imod, 5, opt);
  REQUIRE(result.errors.size() > 0);
  const PowerTable table =
      power_summary(result, "pval", {0.05}, Direction::lesser);
  CHECK(table.rows[0].power == 1.0);  // successes all reject
}

TEST_CASE("curve runs the full grid") {
  const PredictorModel xmod = independent_normals({"x1", "x2"});
  const std::vector<OutcomeModel> ymods = {
      OutcomeModel::gaussian(MeanFunction::from_string("0.3*x1 + 0.3*x2"), 1.0),
      OutcomeModel::gaussian(MeanFunction::from_string("0.2*x1 + 0.2*x2"), 1.0),
      OutcomeModel::gaussian(MeanFunction::from_string("0.1*x1 + 0.1*x2"), 1.0)};
  const std::vector<std::size_t> n_values = {20, 30, 40, 50};
  const CurveResult curve = sim_curve(xmod, ymods, InferenceModel::ftest(),
                                      n_values, options_with(25, 3));
  CHECK(curve.cells.size() == 12);
  // n varies slowest, matching the reporting order.
  CHECK(curve.cells[0].n == 20);
  CHECK(curve.cells[0].ymod_index == 0);
  CHECK(curve.cells[1].ymod_index == 1);
  CHECK(curve.cells[3].n == 30);
  // One SNR estimate per outcome model, shared across sample sizes.
  CHECK(curve.cells[0].snr.snr == curve.cells[3].snr.snr);
  const PowerTable table =
      power_summary(curve, "pval", {0.05}, Direction::lesser);
  CHECK(table.rows.size() == 12);
}

TEST_CASE("a 1x1 curve equals the sim_power result on the same seed") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("0.4*x1"), 1.0);
  const InferenceModel imod = InferenceModel::ftest();
  const SimOptions opt = options_with(40, 17);
  const SimResult single = sim_power(xmod, ymod, imod, 25, opt);
  const CurveResult curve = sim_curve(xmod, {ymod}, imod, {25}, opt);
  REQUIRE(curve.cells.size() == 1);
  CHECK(same_iterations(single, curve.cells[0]));
  CHECK(single.snr.snr == curve.cells[0].snr.snr);
}

TEST_CASE("schema consistency is enforced across iterations") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  const InferenceModel imod = InferenceModel::plugin(
      "shifty", [](const DataTable& x, const std::vector<double>&) {
        if (x.at(0, 0) > 0.0)
          return CritResult{{"pval", {{"a", 0.5}}}};
        return CritResult{{"pval", {{"b", 0.5}}}};
      });
  CHECK_THROWS_AS((void)sim_power(xmod, ymod, imod, 5, options_with(20, 19)),
                  Error);
}

TEST_CASE("progress callback reports completion") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  SimOptions opt = options_with(40, 23, 2);
  std::size_t last = 0;
  opt.progress = [&](std::size_t done, std::size_t total) {
    CHECK(total == 40);
    last = std::max(last, done);
  };
  (void)sim_power(xmod, ymod, InferenceModel::ftest(), 10, opt);
  CHECK(last == 40);
}

TEST_CASE("option validation") {
  const PredictorModel xmod = independent_normals({"x1"});
  const OutcomeModel ymod =
      OutcomeModel::gaussian(MeanFunction::from_string("x1"), 1.0);
  const InferenceModel imod = InferenceModel::ftest();
  SimOptions opt = options_with(0, 1);
  CHECK_THROWS_AS((void)sim_power(xmod, ymod, imod, 10, opt), Error);
  opt = options_with(5, 1);
  CHECK_THROWS_AS((void)sim_power(xmod, ymod, imod, 1, opt), Error);
  opt.cores = 0;
  CHECK_THROWS_AS((void)sim_power(xmod, ymod, imod, 10, opt), Error);
  CHECK_THROWS_AS((void)sim_curve(xmod, {}, imod, {10}, options_with(5, 1)),
                  Error);
  CHECK_THROWS_AS((void)sim_curve(xmod, {ymod}, imod, {}, options_with(5, 1)),
                  Error);
}
