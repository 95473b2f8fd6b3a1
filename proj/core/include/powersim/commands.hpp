#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "powersim/engine.hpp"
#include "powersim/runspec.hpp"

namespace powersim {

// Options for one CLI command run. Flags override the spec's run block.
struct CommandOptions {
  std::string command;  // power | curve | snr | scale | sample
  std::string out_dir;  // artifact directory ("" = no artifacts)
  std::optional<std::size_t> cores;
  std::optional<std::uint64_t> seed;
  std::optional<ErrorHandling> errorhandling;
  bool progress = false;  // report iteration progress on `err`
};

// Executes a command against a validated run spec. `out` receives the
// human-readable summary, `err` progress lines. Artifacts written to
// out_dir: results.json, summary.csv, summary.txt, power_curve.svg
// (power/curve), sample.csv (sample), scaled_outcomes.json (scale), and
// latent_correlation.csv whenever the estimation method is used.
// Throws ValidationError for spec/command mismatches and Error for
// runtime failures.
void run_command(const RunSpec& spec, const CommandOptions& options,
                 std::ostream& out, std::ostream& err);

}  // namespace powersim
