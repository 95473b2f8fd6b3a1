#include "powersim/runspec.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"
#include "powersim/formula.hpp"
#include "powersim/marginals.hpp"

namespace powersim {

namespace {

using njson = nlohmann::ordered_json;

constexpr std::uint64_t kStageEstimation = 0x6573742d626f6f74ull;

// Collects every validation problem before failing.
class Problems {
 public:
  void add(const std::string& path, const std::string& message) {
    list_.push_back(path + ": " + message);
  }

  bool empty() const { return list_.empty(); }

  [[noreturn]] void raise() const { throw ValidationError(list_); }

  void raise_if_any() const {
    if (!empty()) raise();
  }

 private:
  std::vector<std::string> list_;
};

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

bool get_positive_size(const njson& obj, const char* key, std::size_t& out,
                       const std::string& path, Problems& problems) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
    problems.add(path + "." + key, "must be a positive integer");
    return false;
  }
  out = v.get<std::size_t>();
  return true;
}

std::vector<std::size_t> get_size_list(const njson& v, const std::string& path,
                                       Problems& problems) {
  std::vector<std::size_t> out;
  const njson arr = v.is_array() ? v : njson::array({v});
  for (const auto& item : arr) {
    if (!item.is_number_unsigned() || item.get<std::uint64_t>() == 0) {
      problems.add(path, "entries must be positive integers");
      return {};
    }
    out.push_back(item.get<std::size_t>());
  }
  if (out.empty()) problems.add(path, "must be nonempty");
  return out;
}

std::vector<double> get_double_list(const njson& v, const std::string& path,
                                    Problems& problems) {
  std::vector<double> out;
  const njson arr = v.is_array() ? v : njson::array({v});
  for (const auto& item : arr) {
    if (!item.is_number()) {
      problems.add(path, "entries must be numbers");
      return {};
    }
    out.push_back(item.get<double>());
  }
  if (out.empty()) problems.add(path, "must be nonempty");
  return out;
}

void check_known_keys(const njson& obj, const std::string& path,
                      std::initializer_list<const char*> known,
                      Problems& problems) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) problems.add(path + "." + key, "unknown field");
  }
}

void parse_predictors(const njson& node, const std::string& base_dir,
                      PredictorSpec& spec, Problems& problems) {
  if (!node.is_object()) {
    problems.add("predictors", "must be an object");
    return;
  }
  check_known_keys(node, "predictors",
                   {"method", "data", "weights", "G", "m", "marginals",
                    "dtypes", "bootstrap_reps"},
                   problems);
  if (!node.contains("method") || !node.at("method").is_string()) {
    problems.add("predictors.method",
                 "required: one of resampling, cvine, estimation");
    return;
  }
  spec.method = node.at("method").get<std::string>();
  if (spec.method != "resampling" && spec.method != "cvine" &&
      spec.method != "estimation") {
    problems.add("predictors.method",
                 "unknown method '" + spec.method +
                     "' (use resampling, cvine, or estimation)");
    return;
  }

  if (node.contains("dtypes")) {
    if (!node.at("dtypes").is_object()) {
      problems.add("predictors.dtypes", "must map column names to dtypes");
    } else {
      for (const auto& [name, value] : node.at("dtypes").items()) {
        if (!value.is_string() ||
            (value != "factor" && value != "numeric")) {
          problems.add("predictors.dtypes." + name,
                       "must be \"factor\" or \"numeric\"");
          continue;
        }
        spec.dtypes[name] = value.get<std::string>();
      }
    }
  }

  if (spec.method == "resampling" || spec.method == "estimation") {
    if (!node.contains("data") || !node.at("data").is_string()) {
      problems.add("predictors.data", "required: path to a CSV file");
      return;
    }
    spec.data_path = resolve_path(base_dir, node.at("data").get<std::string>());
    try {
      CsvReadReport report;
      spec.data = read_csv_file(spec.data_path, &report);
      spec.rows_dropped = report.rows_dropped_missing;
      if (spec.data.nrow() == 0)
        problems.add("predictors.data", "file has no data rows");
    } catch (const Error& e) {
      problems.add("predictors.data", e.what());
      return;
    }
    for (const auto& [name, dtype] : spec.dtypes) {
      if (spec.data.find(name) == DataTable::npos)
        problems.add("predictors.dtypes." + name, "no such column");
      else if (dtype == "factor")
        spec.data.set_dtype(name, DType::factor);
    }
  }

  if (spec.method == "resampling" && node.contains("weights")) {
    if (!node.at("weights").is_string()) {
      problems.add("predictors.weights", "must be a path to a CSV file");
    } else {
      spec.weights_path =
          resolve_path(base_dir, node.at("weights").get<std::string>());
      try {
        const DataTable w = read_csv_file(spec.weights_path);
        if (w.ncol() != 1)
          problems.add("predictors.weights", "must have exactly one column");
        else {
          spec.weights = w.column(0);
          double sum = 0.0;
          for (double v : spec.weights) sum += v;
          if (std::fabs(sum - 1.0) > 1e-9)
            problems.add("predictors.weights",
                         "must sum to 1 (got " + format_double(sum) + ")");
          if (!spec.data.empty() && spec.weights.size() != spec.data.nrow())
            problems.add("predictors.weights",
                         "length must equal the data row count");
        }
      } catch (const Error& e) {
        problems.add("predictors.weights", e.what());
      }
    }
  }

  if (spec.method == "estimation") {
    std::size_t reps = spec.bootstrap_reps;
    if (get_positive_size(node, "bootstrap_reps", reps, "predictors", problems))
      spec.bootstrap_reps = reps;
  }

  if (spec.method == "cvine") {
    if (!node.contains("marginals") || !node.at("marginals").is_object() ||
        node.at("marginals").empty()) {
      problems.add("predictors.marginals",
                   "required: map of column name to quantile spec string");
      return;
    }
    for (const auto& [name, value] : node.at("marginals").items()) {
      if (!value.is_string()) {
        problems.add("predictors.marginals." + name, "must be a string");
        continue;
      }
      const std::string text = value.get<std::string>();
      try {
        parse_marginal(text);
      } catch (const std::exception& e) {
        problems.add("predictors.marginals." + name, e.what());
      }
      spec.marginals.emplace_back(name, text);
    }

    if (!node.contains("m") || !node.at("m").is_number() ||
        !(node.at("m").get<double>() > 0.0)) {
      problems.add("predictors.m", "required: concentration > 0");
    } else {
      spec.concentration = node.at("m").get<double>();
    }

    if (!node.contains("G")) {
      problems.add("predictors.G",
                   "required: inline matrix or path to a square CSV");
      return;
    }
    const std::size_t p = spec.marginals.size();
    if (node.at("G").is_string()) {
      const std::string g_path =
          resolve_path(base_dir, node.at("G").get<std::string>());
      try {
        const DataTable g = read_csv_file(g_path);
        if (g.nrow() != g.ncol()) {
          problems.add("predictors.G", "matrix must be square");
          return;
        }
        // The header fixes the column order; marginals must cover it.
        std::vector<std::pair<std::string, std::string>> reordered;
        for (const auto& name : g.names()) {
          bool found = false;
          for (const auto& [mname, mtext] : spec.marginals)
            if (mname == name) {
              reordered.emplace_back(mname, mtext);
              found = true;
            }
          if (!found)
            problems.add("predictors.marginals",
                         "missing marginal for G column '" + name + "'");
        }
        if (reordered.size() != spec.marginals.size())
          problems.add("predictors.marginals",
                       "has entries not present in G's header");
        else
          spec.marginals = std::move(reordered);
        spec.guess.resize(g.nrow(), g.ncol());
        for (std::size_t i = 0; i < g.nrow(); ++i)
          for (std::size_t j = 0; j < g.ncol(); ++j)
            spec.guess(i, j) = g.at(i, j);
      } catch (const Error& e) {
        problems.add("predictors.G", e.what());
        return;
      }
    } else if (node.at("G").is_array()) {
      const auto& rows = node.at("G");
      if (rows.size() != p) {
        problems.add("predictors.G", "must be " + std::to_string(p) + "x" +
                                         std::to_string(p) +
                                         " to match the marginals");
        return;
      }
      spec.guess.resize(p, p);
      for (std::size_t i = 0; i < p; ++i) {
        if (!rows[i].is_array() || rows[i].size() != p) {
          problems.add("predictors.G", "row " + std::to_string(i + 1) +
                                           " must have " + std::to_string(p) +
                                           " entries");
          return;
        }
        for (std::size_t j = 0; j < p; ++j) {
          if (!rows[i][j].is_number()) {
            problems.add("predictors.G", "entries must be numbers");
            return;
          }
          spec.guess(i, j) = rows[i][j].get<double>();
        }
      }
    } else {
      problems.add("predictors.G", "must be a matrix or a CSV path");
      return;
    }

    VineSpec vine;
    vine.guess = spec.guess;
    vine.concentration = spec.concentration > 0.0 ? spec.concentration : 1.0;
    for (const auto& [name, _] : spec.marginals) vine.names.push_back(name);
    try {
      vine.validate();
    } catch (const std::exception& e) {
      problems.add("predictors.G", e.what());
    }
    for (const auto& [name, _] : spec.dtypes) {
      bool found = false;
      for (const auto& [mname, __] : spec.marginals) found = found || mname == name;
      if (!found) problems.add("predictors.dtypes." + name, "no such column");
    }
  }
}

void parse_outcomes(const njson& root, std::vector<OutcomeSpec>& outcomes,
                    Problems& problems) {
  njson list = njson::array();
  if (root.contains("outcomes")) {
    if (root.at("outcomes").is_array())
      list = root.at("outcomes");
    else
      list.push_back(root.at("outcomes"));
  } else if (root.contains("outcome")) {
    list.push_back(root.at("outcome"));
  } else {
    problems.add("outcomes", "required: at least one outcome block");
    return;
  }
  if (list.empty()) {
    problems.add("outcomes", "required: at least one outcome block");
    return;
  }

  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string path = "outcomes[" + std::to_string(k) + "]";
    const auto& node = list[k];
    if (!node.is_object()) {
      problems.add(path, "must be an object");
      continue;
    }
    check_known_keys(node, path,
                     {"mean", "family", "sigma", "target_snr", "scale"},
                     problems);
    OutcomeSpec out;
    if (!node.contains("mean") || !node.at("mean").is_string()) {
      problems.add(path + ".mean", "required: mean expression string");
      continue;
    }
    out.mean = node.at("mean").get<std::string>();
    try {
      parse_expression(out.mean);
    } catch (const std::exception& e) {
      problems.add(path + ".mean", e.what());
    }

    std::string family = "gaussian";
    if (node.contains("family")) {
      if (!node.at("family").is_string()) {
        problems.add(path + ".family", "must be a string");
      } else {
        family = node.at("family").get<std::string>();
      }
    }
    try {
      out.family = parse_family(family);
    } catch (const std::exception& e) {
      problems.add(path + ".family", e.what());
    }

    if (node.contains("sigma")) {
      if (!node.at("sigma").is_number() ||
          !(node.at("sigma").get<double>() > 0.0))
        problems.add(path + ".sigma", "must be a number > 0");
      else
        out.sigma = node.at("sigma").get<double>();
    }
    if (out.family == Family::gaussian && !out.sigma)
      problems.add(path + ".sigma", "required for the gaussian family");
    if (out.family != Family::gaussian && out.sigma)
      problems.add(path + ".sigma",
                   "only the gaussian family has a noise sigma");

    if (node.contains("target_snr")) {
      if (!node.at("target_snr").is_number() ||
          !(node.at("target_snr").get<double>() > 0.0))
        problems.add(path + ".target_snr", "must be a number > 0");
      else
        out.target_snr = node.at("target_snr").get<double>();
    }
    if (node.contains("scale")) {
      if (!node.at("scale").is_string() ||
          (node.at("scale") != "f" && node.at("scale") != "sigma"))
        problems.add(path + ".scale", "must be \"f\" or \"sigma\"");
      else
        out.scale_mode = node.at("scale").get<std::string>();
    }
    if (out.target_snr && out.scale_mode.empty())
      problems.add(path + ".scale", "required when target_snr is set");
    if (!out.target_snr && !out.scale_mode.empty())
      problems.add(path + ".target_snr", "required when scale is set");
    if (out.scale_mode == "sigma" && out.family != Family::gaussian)
      problems.add(path + ".scale",
                   "scale \"sigma\" requires the gaussian family");
    outcomes.push_back(std::move(out));
  }
}

void parse_inference(const njson& root, InferenceSpec& spec,
                     Problems& problems) {
  if (!root.contains("inference") || !root.at("inference").is_object()) {
    problems.add("inference", "required: inference block");
    return;
  }
  const auto& node = root.at("inference");
  check_known_keys(node, "inference", {"model", "family", "formula"}, problems);
  if (!node.contains("model") || !node.at("model").is_string()) {
    problems.add("inference.model", "required: \"glm\" or \"ftest\"");
    return;
  }
  spec.model = node.at("model").get<std::string>();
  if (spec.model != "glm" && spec.model != "ftest") {
    problems.add("inference.model",
                 "unknown model '" + spec.model + "' (use glm or ftest)");
    return;
  }
  if (spec.model == "glm") {
    if (!node.contains("formula") || !node.at("formula").is_string()) {
      problems.add("inference.formula", "required for the glm model");
    } else {
      spec.formula = node.at("formula").get<std::string>();
      try {
        parse_formula(spec.formula);
      } catch (const std::exception& e) {
        problems.add("inference.formula", e.what());
      }
    }
    std::string family = "gaussian";
    if (node.contains("family")) {
      if (!node.at("family").is_string())
        problems.add("inference.family", "must be a string");
      else
        family = node.at("family").get<std::string>();
    }
    try {
      spec.family = parse_family(family);
    } catch (const std::exception& e) {
      problems.add("inference.family", e.what());
    }
  } else if (node.contains("formula")) {
    problems.add("inference.formula", "the ftest model takes no formula");
  }
}

void parse_run(const njson& root, RunBlock& run, Problems& problems) {
  if (!root.contains("run") || !root.at("run").is_object()) {
    problems.add("run", "required: run block with s and n");
    return;
  }
  const auto& node = root.at("run");
  check_known_keys(
      node, "run",
      {"s", "n", "snr_iter", "snr_boot", "cores", "errorhandling", "seed"},
      problems);
  if (!get_positive_size(node, "s", run.s, "run", problems))
    if (!node.contains("s")) problems.add("run.s", "required");
  if (!node.contains("n")) {
    problems.add("run.n", "required: sample size or list of sample sizes");
  } else {
    run.n_values = get_size_list(node.at("n"), "run.n", problems);
  }
  get_positive_size(node, "snr_iter", run.snr_iter, "run", problems);
  get_positive_size(node, "snr_boot", run.snr_boot, "run", problems);
  get_positive_size(node, "cores", run.cores, "run", problems);
  if (node.contains("errorhandling")) {
    if (!node.at("errorhandling").is_string()) {
      problems.add("run.errorhandling", "must be a string");
    } else {
      try {
        run.errorhandling =
            parse_errorhandling(node.at("errorhandling").get<std::string>());
      } catch (const std::exception& e) {
        problems.add("run.errorhandling", e.what());
      }
    }
  }
  if (node.contains("seed")) {
    if (!node.at("seed").is_number_unsigned())
      problems.add("run.seed", "must be an unsigned integer");
    else
      run.seed = node.at("seed").get<std::uint64_t>();
  }
}

void parse_summary(const njson& root, SummaryBlock& summary,
                   Problems& problems) {
  if (!root.contains("summary")) return;  // defaults apply
  const auto& node = root.at("summary");
  if (!node.is_object()) {
    problems.add("summary", "must be an object");
    return;
  }
  check_known_keys(node, "summary", {"crit", "thres", "how"}, problems);
  if (node.contains("crit")) {
    if (!node.at("crit").is_string())
      problems.add("summary.crit", "must be a string");
    else
      summary.crit = node.at("crit").get<std::string>();
  }
  if (node.contains("thres")) {
    summary.thresholds =
        get_double_list(node.at("thres"), "summary.thres", problems);
  }
  if (node.contains("how")) {
    if (!node.at("how").is_string()) {
      problems.add("summary.how", "must be a string");
    } else {
      try {
        summary.how = parse_direction(node.at("how").get<std::string>());
      } catch (const std::exception& e) {
        problems.add("summary.how", e.what());
      }
    }
  }
}

}  // namespace

RunSpec parse_runspec(const std::string& json_text,
                      const std::string& base_dir) {
  Problems problems;
  njson root;
  try {
    root = njson::parse(json_text);
  } catch (const njson::parse_error& e) {
    problems.add("spec", std::string("invalid JSON: ") + e.what());
    problems.raise();
  }
  if (!root.is_object()) {
    problems.add("spec", "top level must be an object");
    problems.raise();
  }
  check_known_keys(root, "spec",
                   {"predictors", "outcome", "outcomes", "inference", "run",
                    "summary"},
                   problems);

  RunSpec spec;
  if (root.contains("predictors"))
    parse_predictors(root.at("predictors"), base_dir, spec.predictors,
                     problems);
  else
    problems.add("predictors", "required: predictors block");
  parse_outcomes(root, spec.outcomes, problems);
  parse_inference(root, spec.inference, problems);
  parse_run(root, spec.run, problems);
  parse_summary(root, spec.summary, problems);

  // Cross-block checks that need a parsed spec.
  if (problems.empty()) {
    std::set<std::string> columns;
    if (spec.predictors.method == "cvine") {
      for (const auto& [name, _] : spec.predictors.marginals)
        columns.insert(name);
    } else {
      for (const auto& name : spec.predictors.data.names())
        columns.insert(name);
    }
    for (std::size_t k = 0; k < spec.outcomes.size(); ++k) {
      try {
        for (const auto& var :
             parse_expression(spec.outcomes[k].mean).variables())
          if (!columns.count(var))
            problems.add("outcomes[" + std::to_string(k) + "].mean",
                         "references unknown column '" + var + "'");
      } catch (const std::exception&) {
        // already reported
      }
    }
    if (spec.inference.model == "glm") {
      try {
        const Formula formula = parse_formula(spec.inference.formula);
        std::set<std::string> referenced;
        for (const auto& term : formula.terms)
          for (const auto& atom : term.atoms) {
            if (atom.kind == Formula::Atom::Kind::indicator) {
              for (const auto& var : atom.expr.variables())
                referenced.insert(var);
            } else {
              referenced.insert(atom.name);
            }
          }
        for (const auto& name : referenced)
          if (!columns.count(name))
            problems.add("inference.formula",
                         "references unknown column '" + name + "'");
      } catch (const std::exception&) {
        // already reported
      }
    }
  }

  problems.raise_if_any();
  return spec;
}

RunSpec load_runspec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"spec: cannot open '" + path + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_runspec(buffer.str(),
                       std::filesystem::path(path).parent_path().string());
}

BuiltModels build_models(const RunSpec& spec) {
  const PredictorSpec& p = spec.predictors;

  std::optional<Eigen::MatrixXd> latent_point;
  PredictorModel xmod = [&]() {
    if (p.method == "resampling")
      return PredictorModel::resampling(p.data, p.weights);
    if (p.method == "estimation") {
      RandomStream rng(derive_seed(spec.run.seed, {kStageEstimation}));
      LatentCorrelationEstimate est =
          estimate_latent_correlation(p.data, p.bootstrap_reps, rng);
      latent_point = est.point.matrix();
      std::vector<CorrelationMatrix> draws = std::move(est.draws);
      if (draws.empty()) draws.push_back(est.point);
      return PredictorModel::estimation(p.data, std::move(draws));
    }
    VineSpec vine;
    vine.guess = p.guess;
    vine.concentration = p.concentration;
    std::vector<MarginalSpec> marginals;
    for (const auto& [name, text] : p.marginals) {
      vine.names.push_back(name);
      MarginalSpec m = parse_marginal(text);
      auto it = p.dtypes.find(name);
      if (it != p.dtypes.end() && it->second == "factor")
        m.dtype = DType::factor;
      marginals.push_back(std::move(m));
    }
    return PredictorModel::cvine(std::move(vine), std::move(marginals));
  }();

  std::vector<OutcomeModel> ymods;
  ymods.reserve(spec.outcomes.size());
  for (const auto& out : spec.outcomes) {
    MeanFunction mean = MeanFunction::from_string(out.mean);
    switch (out.family) {
      case Family::gaussian:
        ymods.push_back(OutcomeModel::gaussian(std::move(mean), *out.sigma));
        break;
      case Family::binomial:
        ymods.push_back(OutcomeModel::binomial(std::move(mean)));
        break;
      case Family::poisson:
        ymods.push_back(OutcomeModel::poisson(std::move(mean)));
        break;
    }
  }

  InferenceModel imod = spec.inference.model == "glm"
                            ? InferenceModel::glm(spec.inference.family,
                                                  spec.inference.formula)
                            : InferenceModel::ftest();

  return {std::move(xmod), std::move(ymods), std::move(imod),
          std::move(latent_point)};
}

}  // namespace powersim
