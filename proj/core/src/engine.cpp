#include "powersim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "powersim/errors.hpp"
#include "powersim/rng.hpp"

namespace powersim {

namespace {

constexpr std::uint64_t kStageSnr = 0x736e722d657374ull;
constexpr std::uint64_t kStageIteration = 0x697465722d726e67ull;
constexpr std::size_t kSnrBootstrapReps = 200;

std::uint64_t cell_key(std::size_t ymod_index, std::size_t n_index) {
  return (static_cast<std::uint64_t>(ymod_index) << 32) |
         static_cast<std::uint64_t>(n_index);
}

// Criterion/effect schema of one result, for cross-iteration consistency.
std::vector<std::pair<std::string, std::vector<std::string>>> schema_of(
    const CritResult& crit) {
  std::vector<std::pair<std::string, std::vector<std::string>>> schema;
  for (const auto& [criterion, values] : crit) {
    std::vector<std::string> labels;
    labels.reserve(values.size());
    for (const auto& [label, _] : values) labels.push_back(label);
    schema.emplace_back(criterion, std::move(labels));
  }
  return schema;
}

SimResult run_cell(const PredictorModel& xmod, const OutcomeModel& ymod,
                   const InferenceModel& imod, std::size_t n,
                   const SimOptions& options, std::size_t ymod_index,
                   std::size_t n_index, const std::optional<SnrEstimate>& snr) {
  if (options.s < 1) throw Error("sim_power: s must be >= 1");
  if (n < 2) throw Error("sim_power: n must be >= 2");
  if (options.cores < 1) throw Error("sim_power: cores must be >= 1");

  const auto start = std::chrono::steady_clock::now();

  SimResult result;
  result.s = options.s;
  result.n = n;
  result.predictor_method = xmod.method_name();
  result.outcome_label = ymod.label();
  result.outcome_family = ymod.family;
  result.inference_name = imod.name();
  result.seed = options.seed;
  result.errorhandling = options.errorhandling;
  result.ymod_index = ymod_index;
  result.n_index = n_index;

  if (snr) {
    result.snr = *snr;
  } else {
    RandomStream snr_rng(derive_seed(options.seed, {kStageSnr, ymod_index}));
    result.snr =
        estimate_snr(xmod, ymod, options.snr_iter, kSnrBootstrapReps, snr_rng);
  }

  result.iterations.assign(options.s, std::nullopt);

  const std::uint64_t cell = cell_key(ymod_index, n_index);
  const bool stop_mode = options.errorhandling == ErrorHandling::stop;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> abort{false};
  std::mutex sink;
  const std::size_t progress_step =
      std::max<std::size_t>(1, options.s / 20);

  auto worker = [&]() {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= options.s) return;
      RandomStream rng(derive_seed(options.seed, {kStageIteration, cell, i}));
      const char* stage = "predictors";
      try {
        const DataTable x = sample_predictors(xmod, n, rng);
        stage = "outcome";
        const std::vector<double> y = sample_outcome(ymod, x, rng);
        stage = "inference";
        CritResult crit = run_inference(imod, x, y);
        result.iterations[i] = std::move(crit);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(sink);
        result.errors.push_back({i, stage, e.what()});
        if (stop_mode) abort.store(true, std::memory_order_relaxed);
      }
      const std::size_t d = done.fetch_add(1, std::memory_order_relaxed) + 1;
      if (options.progress && (d % progress_step == 0 || d == options.s)) {
        std::lock_guard<std::mutex> lock(sink);
        options.progress(d, options.s);
      }
    }
  };

  const std::size_t workers = std::min(options.cores, options.s);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::sort(result.errors.begin(), result.errors.end(),
            [](const IterationError& a, const IterationError& b) {
              return a.iteration < b.iteration;
            });

  if (stop_mode && !result.errors.empty()) {
    const IterationError& first = result.errors.front();
    throw SimulationError(first.stage, first.iteration, first.message);
  }

  // All successful iterations must share one criterion/effect schema.
  std::vector<std::pair<std::string, std::vector<std::string>>> reference;
  bool have_reference = false;
  for (const auto& it : result.iterations) {
    if (!it) continue;
    if (!have_reference) {
      reference = schema_of(*it);
      have_reference = true;
      continue;
    }
    if (schema_of(*it) != reference)
      throw Error("sim_power: criterion/effect schema differs across "
                  "iterations");
  }

  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace

std::string errorhandling_name(ErrorHandling mode) {
  switch (mode) {
    case ErrorHandling::remove:
      return "remove";
    case ErrorHandling::pass:
      return "pass";
    case ErrorHandling::stop:
      return "stop";
  }
  return "?";
}

ErrorHandling parse_errorhandling(const std::string& name) {
  if (name == "remove") return ErrorHandling::remove;
  if (name == "pass") return ErrorHandling::pass;
  if (name == "stop") return ErrorHandling::stop;
  throw Error("unknown errorhandling mode '" + name + "'");
}

std::string direction_name(Direction how) {
  return how == Direction::lesser ? "lesser" : "greater";
}

Direction parse_direction(const std::string& name) {
  if (name == "lesser") return Direction::lesser;
  if (name == "greater") return Direction::greater;
  throw Error("unknown direction '" + name + "' (use lesser or greater)");
}

std::size_t SimResult::successes() const {
  std::size_t count = 0;
  for (const auto& it : iterations) count += it.has_value() ? 1 : 0;
  return count;
}

SimResult sim_power(const PredictorModel& xmod, const OutcomeModel& ymod,
                    const InferenceModel& imod, std::size_t n,
                    const SimOptions& options) {
  return run_cell(xmod, ymod, imod, n, options, 0, 0, std::nullopt);
}

CurveResult sim_curve(const PredictorModel& xmod,
                      const std::vector<OutcomeModel>& ymods,
                      const InferenceModel& imod,
                      const std::vector<std::size_t>& n_values,
                      const SimOptions& options) {
  if (ymods.empty()) throw Error("sim_curve: need at least one outcome model");
  if (n_values.empty()) throw Error("sim_curve: need at least one sample size");

  // One SNR estimate per outcome model, shared across sample sizes.
  std::vector<SnrEstimate> snrs;
  snrs.reserve(ymods.size());
  for (std::size_t j = 0; j < ymods.size(); ++j) {
    RandomStream snr_rng(derive_seed(options.seed, {kStageSnr, j}));
    snrs.push_back(estimate_snr(xmod, ymods[j], options.snr_iter,
                                kSnrBootstrapReps, snr_rng));
  }

  CurveResult curve;
  curve.n_values = n_values;
  curve.ymod_count = ymods.size();
  curve.cells.reserve(ymods.size() * n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i)
    for (std::size_t j = 0; j < ymods.size(); ++j)
      curve.cells.push_back(run_cell(xmod, ymods[j], imod, n_values[i],
                                     options, j, i, snrs[j]));
  return curve;
}

namespace {

void summarize_cell(const SimResult& result, const std::string& criterion,
                    const std::vector<double>& thresholds, Direction how,
                    std::vector<PowerRow>& rows) {
  const std::size_t successes = result.successes();
  if (successes == 0)
    throw Error("power_summary: no successful iterations to summarize");

  // Effect labels from the shared schema.
  const CritResult* reference = nullptr;
  for (const auto& it : result.iterations)
    if (it) {
      reference = &*it;
      break;
    }
  const auto crit_it = reference->find(criterion);
  if (crit_it == reference->end()) {
    std::string available;
    for (const auto& [name, _] : *reference) {
      if (!available.empty()) available += ", ";
      available += name;
    }
    throw Error("power_summary: unknown criterion '" + criterion +
                "' (available: " + available + ")");
  }

  for (double threshold : thresholds) {
    for (const auto& [effect, _] : crit_it->second) {
      std::size_t hits = 0;
      for (const auto& it : result.iterations) {
        if (!it) continue;
        const double value = it->at(criterion).at(effect);
        const bool hit = how == Direction::lesser ? value <= threshold
                                                  : value >= threshold;
        hits += hit ? 1 : 0;
      }
      PowerRow row;
      row.inference = result.inference_name;
      row.effect = effect;
      row.power = static_cast<double>(hits) / static_cast<double>(successes);
      row.se = std::sqrt(row.power * (1.0 - row.power) /
                         static_cast<double>(successes));
      row.n = result.n;
      row.snr = result.snr.snr;
      row.threshold = threshold;
      row.ymod_index = result.ymod_index;
      row.n_index = result.n_index;
      rows.push_back(std::move(row));
    }
  }
}

}  // namespace

PowerTable power_summary(const SimResult& result, const std::string& criterion,
                         const std::vector<double>& thresholds, Direction how) {
  if (thresholds.empty()) throw Error("power_summary: no thresholds given");
  PowerTable table;
  table.criterion = criterion;
  table.how = how;
  table.thresholds = thresholds;
  table.s = result.s;
  table.n_values = {result.n};
  table.snr_values = {result.snr.snr};
  table.inference = result.inference_name;
  table.is_curve = false;
  summarize_cell(result, criterion, thresholds, how, table.rows);
  return table;
}

PowerTable power_summary(const CurveResult& result,
                         const std::string& criterion,
                         const std::vector<double>& thresholds, Direction how) {
  if (thresholds.empty()) throw Error("power_summary: no thresholds given");
  if (result.cells.empty()) throw Error("power_summary: empty curve result");
  if (result.cells.size() != result.ymod_count * result.n_values.size())
    throw Error("power_summary: incomplete curve grid");

  PowerTable table;
  table.criterion = criterion;
  table.how = how;
  table.thresholds = thresholds;
  table.s = result.cells.front().s;
  table.n_values = result.n_values;
  table.inference = result.cells.front().inference_name;
  table.is_curve = true;
  table.snr_values.assign(result.ymod_count, 0.0);
  for (const auto& cell : result.cells)
    table.snr_values[cell.ymod_index] = cell.snr.snr;
  for (const auto& cell : result.cells)
    summarize_cell(cell, criterion, thresholds, how, table.rows);
  return table;
}

}  // namespace powersim
