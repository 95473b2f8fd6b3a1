#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace powersim {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression, marginal string, or formula. `position` is a byte
// offset into the offending input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Aggregated run-spec validation failures: every detected problem is kept,
// not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string msg = "run spec validation failed:";
    for (const auto& p : problems) {
      msg += "\n  - ";
      msg += p;
    }
    return msg;
  }

  std::vector<std::string> problems_;
};

// Failure inside one Monte Carlo iteration, tagged with the pipeline stage
// ("predictors", "outcome", or "inference") and the iteration index.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& stage, std::size_t iteration,
                  const std::string& what)
      : Error("iteration " + std::to_string(iteration) + " [" + stage +
              "]: " + what),
        stage_(stage),
        iteration_(iteration) {}

  const std::string& stage() const { return stage_; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::string stage_;
  std::size_t iteration_;
};

}  // namespace powersim
