#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "powersim/commands.hpp"
#include "powersim/errors.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CliArgs {
  std::string spec_path;
  std::string out_dir;
  std::optional<std::size_t> cores;
  std::optional<std::uint64_t> seed;
  std::string errorhandling;
  bool quiet = false;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--spec", args.spec_path, "Run-spec JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory for artifacts");
  cmd->add_option("--cores", args.cores, "Worker threads (overrides the spec)");
  cmd->add_option("--seed", args.seed, "Master seed (overrides the spec)");
  cmd->add_option("--errorhandling", args.errorhandling,
                  "remove|pass|stop (overrides the spec)")
      ->check(CLI::IsMember({"remove", "pass", "stop"}));
  cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Monte Carlo power analysis for studies with correlated predictors"};
  app.require_subcommand(1);

  CliArgs args;
  const char* descriptions[][2] = {
      {"power", "Estimate power for one outcome model at one sample size"},
      {"curve", "Power over a grid of outcome models and sample sizes"},
      {"snr", "Estimate the signal-to-noise ratio of each outcome model"},
      {"scale", "Rescale outcome models to their target SNR"},
      {"sample", "Draw predictor rows from the predictors model"},
  };
  for (const auto& d : descriptions)
    add_common_options(app.add_subcommand(d[0], d[1]), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    powersim::CommandOptions options;
    options.command = app.get_subcommands().front()->get_name();
    options.out_dir = args.out_dir;
    options.cores = args.cores;
    options.seed = args.seed;
    if (!args.errorhandling.empty())
      options.errorhandling = powersim::parse_errorhandling(args.errorhandling);
    options.progress = !args.quiet;

    const powersim::RunSpec spec = powersim::load_runspec(args.spec_path);
    powersim::run_command(spec, options, std::cout, std::cerr);
    return 0;
  } catch (const powersim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
