#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "powersim/inference.hpp"
#include "powersim/models.hpp"
#include "powersim/snr.hpp"

namespace powersim {

// What to do when an iteration fails: drop it (remove), keep the error
// record alongside the successes (pass), or abort the run (stop).
enum class ErrorHandling { remove, pass, stop };

std::string errorhandling_name(ErrorHandling mode);
ErrorHandling parse_errorhandling(const std::string& name);

enum class Direction { lesser, greater };

std::string direction_name(Direction how);
Direction parse_direction(const std::string& name);

struct IterationError {
  std::size_t iteration = 0;
  std::string stage;  // "predictors" | "outcome" | "inference"
  std::string message;
};

// Outcome of one sim_power run: per-iteration criterion values (nullopt for
// errored iterations) plus metadata. Successful count + error count == s.
struct SimResult {
  std::vector<std::optional<CritResult>> iterations;
  std::vector<IterationError> errors;
  std::size_t s = 0;
  std::size_t n = 0;
  SnrEstimate snr;
  std::string predictor_method;
  std::string outcome_label;
  Family outcome_family = Family::gaussian;
  std::string inference_name;
  std::uint64_t seed = 0;
  ErrorHandling errorhandling = ErrorHandling::remove;
  double elapsed_seconds = 0.0;  // not part of serialized results
  std::size_t ymod_index = 0;    // grid position, 0 outside curves
  std::size_t n_index = 0;

  std::size_t successes() const;
};

// Full grid of sim_power runs: one cell per (outcome model, sample size),
// stored with n varying slowest to match the reporting order.
struct CurveResult {
  std::vector<SimResult> cells;
  std::vector<std::size_t> n_values;
  std::size_t ymod_count = 0;
};

struct SimOptions {
  std::size_t s = 100;          // Monte Carlo iterations
  std::size_t snr_iter = 10000; // draws for the SNR estimate
  std::size_t cores = 1;
  ErrorHandling errorhandling = ErrorHandling::remove;
  std::uint64_t seed = 0;
  // Called with (iterations done, total) from the running pool.
  std::function<void(std::size_t, std::size_t)> progress;
};

// Runs s independent (sample predictors -> sample outcome -> infer)
// iterations at sample size n. Results are bitwise identical for a fixed
// seed regardless of `cores`: every iteration owns a stream derived from
// (seed, grid cell, iteration index).
SimResult sim_power(const PredictorModel& xmod, const OutcomeModel& ymod,
                    const InferenceModel& imod, std::size_t n,
                    const SimOptions& options);

// Grid of sim_power runs over outcome models and sample sizes; the SNR is
// estimated once per outcome model. A 1x1 grid reproduces sim_power exactly.
CurveResult sim_curve(const PredictorModel& xmod,
                      const std::vector<OutcomeModel>& ymods,
                      const InferenceModel& imod,
                      const std::vector<std::size_t>& n_values,
                      const SimOptions& options);

struct PowerRow {
  std::string inference;
  std::string effect;
  double power = 0.0;
  double se = 0.0;  // sqrt(p(1-p)/successes)
  std::size_t n = 0;
  double snr = 0.0;
  double threshold = 0.0;
  std::size_t ymod_index = 0;
  std::size_t n_index = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;  // ordered by (n, outcome model, threshold)
  std::string criterion;
  Direction how = Direction::lesser;
  std::vector<double> thresholds;
  std::size_t s = 0;
  std::vector<std::size_t> n_values;
  std::vector<double> snr_values;  // one per outcome model
  std::string inference;
  bool is_curve = false;
};

// Power per effect and threshold: the fraction of successful iterations
// whose criterion value is <= (lesser) or >= (greater) the threshold.
PowerTable power_summary(const SimResult& result, const std::string& criterion,
                         const std::vector<double>& thresholds, Direction how);
PowerTable power_summary(const CurveResult& result, const std::string& criterion,
                         const std::vector<double>& thresholds, Direction how);

}  // namespace powersim
