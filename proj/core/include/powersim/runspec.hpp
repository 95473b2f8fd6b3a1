#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "powersim/engine.hpp"
#include "powersim/models.hpp"
#include "powersim/table.hpp"

namespace powersim {

// Parsed, validated run-spec file (JSON). Referenced CSVs are loaded at
// validation time; validation reports every problem at once.

struct PredictorSpec {
  std::string method;  // "resampling" | "cvine" | "estimation"
  std::string data_path;
  std::string weights_path;
  Eigen::MatrixXd guess;      // cvine
  double concentration = 0.0; // cvine m
  std::vector<std::pair<std::string, std::string>> marginals;  // name, q-string
  std::map<std::string, std::string> dtypes;
  std::size_t bootstrap_reps = 100;  // estimation

  DataTable data;               // loaded for resampling/estimation
  std::vector<double> weights;  // loaded weights column
  std::size_t rows_dropped = 0; // rows rejected for missing cells
};

struct OutcomeSpec {
  std::string mean;
  Family family = Family::gaussian;
  std::optional<double> sigma;
  std::optional<double> target_snr;
  std::string scale_mode;  // "f" | "sigma" | ""
};

struct InferenceSpec {
  std::string model;  // "glm" | "ftest"
  Family family = Family::gaussian;
  std::string formula;
};

struct RunBlock {
  std::size_t s = 0;
  std::vector<std::size_t> n_values;
  std::size_t snr_iter = 10000;
  std::size_t snr_boot = 1000;  // bootstrap replicates for the snr command
  std::size_t cores = 1;
  ErrorHandling errorhandling = ErrorHandling::remove;
  std::uint64_t seed = 0;
};

struct SummaryBlock {
  std::string crit = "pval";
  std::vector<double> thresholds = {0.05};
  Direction how = Direction::lesser;
};

struct RunSpec {
  PredictorSpec predictors;
  std::vector<OutcomeSpec> outcomes;
  InferenceSpec inference;
  RunBlock run;
  SummaryBlock summary;
};

// Loads and validates a run-spec file; relative data paths resolve against
// the spec file's directory. Throws ValidationError listing every problem.
RunSpec load_runspec(const std::string& path);

// Same, from an in-memory JSON document (paths resolve against base_dir).
RunSpec parse_runspec(const std::string& json_text, const std::string& base_dir);

struct BuiltModels {
  PredictorModel xmod;
  std::vector<OutcomeModel> ymods;
  InferenceModel imod;
  std::optional<Eigen::MatrixXd> latent_correlation;  // estimation only
};

// Constructs the generative and inference models. The estimation method
// derives its bootstrap stream from run.seed, so builds are reproducible.
BuiltModels build_models(const RunSpec& spec);

}  // namespace powersim
