#include "powersim/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"
#include "powersim/report.hpp"

namespace powersim {

namespace {

constexpr std::uint64_t kStageScale = 0x7363616c652d66ull;
constexpr std::uint64_t kStageSample = 0x73616d706c65ull;
constexpr std::uint64_t kStageSnrCmd = 0x736e722d636d64ull;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

void export_latent_correlation(const BuiltModels& models,
                               const std::string& out_dir) {
  if (!models.latent_correlation || out_dir.empty()) return;
  DataTable table;
  const auto& names = models.xmod.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> col(names.size());
    for (std::size_t i = 0; i < names.size(); ++i)
      col[i] = (*models.latent_correlation)(i, j);
    table.add_column(names[j], std::move(col));
  }
  write_csv_file(table,
                 (std::filesystem::path(out_dir) / "latent_correlation.csv")
                     .string());
}

// Applies target-SNR scaling to the outcome models that request it.
std::vector<OutcomeModel> apply_scaling(const RunSpec& spec,
                                        const BuiltModels& models) {
  std::vector<OutcomeModel> ymods = models.ymods;
  for (std::size_t j = 0; j < ymods.size(); ++j) {
    const OutcomeSpec& out = spec.outcomes[j];
    if (!out.target_snr) continue;
    RandomStream rng(derive_seed(spec.run.seed, {kStageScale, j}));
    if (out.scale_mode == "sigma")
      ymods[j] = scale_sigma(*out.target_snr, ymods[j], models.xmod,
                             spec.run.snr_iter, rng);
    else
      ymods[j] = scale_f(*out.target_snr, ymods[j], models.xmod,
                         spec.run.snr_iter, rng);
  }
  return ymods;
}

void write_run_artifacts(const ResultsDocument& doc, const RunSpec& spec,
                         const std::string& out_dir, std::ostream& out) {
  const SummaryTable table = summarize_results(
      doc, spec.summary.crit, spec.summary.thresholds, spec.summary.how);
  const std::string text = render_summary_text(table);
  out << text;
  if (out_dir.empty()) return;
  write_results_json(doc,
                     (std::filesystem::path(out_dir) / "results.json").string());
  write_text_file((std::filesystem::path(out_dir) / "summary.txt").string(),
                  text);
  write_text_file((std::filesystem::path(out_dir) / "summary.csv").string(),
                  render_summary_csv(table));
  write_text_file(
      (std::filesystem::path(out_dir) / "power_curve.svg").string(),
      render_power_svg(table));
}

}  // namespace

void run_command(const RunSpec& spec_in, const CommandOptions& options,
                 std::ostream& out, std::ostream& err) {
  RunSpec spec = spec_in;
  if (options.cores) spec.run.cores = *options.cores;
  if (options.seed) spec.run.seed = *options.seed;
  if (options.errorhandling) spec.run.errorhandling = *options.errorhandling;

  if (!options.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec)
      throw Error("cannot create output directory '" + options.out_dir +
                  "': " + ec.message());
  }

  if (spec.predictors.rows_dropped > 0)
    err << "note: dropped " << spec.predictors.rows_dropped
        << " data rows with missing cells\n";

  const BuiltModels models = build_models(spec);
  export_latent_correlation(models, options.out_dir);

  SimOptions sim;
  sim.s = spec.run.s;
  sim.snr_iter = spec.run.snr_iter;
  sim.cores = spec.run.cores;
  sim.errorhandling = spec.run.errorhandling;
  sim.seed = spec.run.seed;

  if (options.command == "power" || options.command == "curve") {
    const std::vector<OutcomeModel> ymods = apply_scaling(spec, models);
    if (options.command == "power") {
      if (ymods.size() != 1)
        throw ValidationError(
            {"run: the power command takes exactly one outcome block (use "
             "curve for several)"});
      if (spec.run.n_values.size() != 1)
        throw ValidationError(
            {"run.n: the power command takes a single sample size (use curve "
             "for a grid)"});
      if (options.progress)
        sim.progress = [&err](std::size_t done, std::size_t total) {
          err << "  " << done << "/" << total << " iterations\r";
          if (done == total) err << "\n";
          err.flush();
        };
      ResultsDocument doc;
      doc.kind = "power";
      doc.curve.n_values = spec.run.n_values;
      doc.curve.ymod_count = 1;
      doc.curve.cells.push_back(sim_power(models.xmod, ymods.front(),
                                          models.imod,
                                          spec.run.n_values.front(), sim));
      err << "completed " << doc.curve.cells.front().successes() << "/"
          << spec.run.s << " iterations in "
          << doc.curve.cells.front().elapsed_seconds << "s\n";
      write_run_artifacts(doc, spec, options.out_dir, out);
      return;
    }

    // curve
    if (options.progress)
      sim.progress = [&err](std::size_t done, std::size_t total) {
        err << "  " << done << "/" << total << " iterations\r";
        if (done == total) err << "\n";
        err.flush();
      };
    ResultsDocument doc;
    doc.kind = "curve";
    doc.curve =
        sim_curve(models.xmod, ymods, models.imod, spec.run.n_values, sim);
    double elapsed = 0.0;
    for (const auto& cell : doc.curve.cells) elapsed += cell.elapsed_seconds;
    err << "completed " << doc.curve.cells.size() << " cells in " << elapsed
        << "s\n";
    write_run_artifacts(doc, spec, options.out_dir, out);
    return;
  }

  if (options.command == "snr") {
    for (std::size_t j = 0; j < models.ymods.size(); ++j) {
      RandomStream rng(derive_seed(spec.run.seed, {kStageSnrCmd, j}));
      const SnrEstimate est =
          estimate_snr(models.xmod, models.ymods[j], spec.run.snr_iter,
                       spec.run.snr_boot, rng);
      char line[128];
      std::snprintf(line, sizeof(line), "SNR = %.4f (se %.4f, m = %zu, R = %zu)",
                    est.snr, est.se, est.m, est.r);
      out << "outcome " << j + 1 << " (" << models.ymods[j].label()
          << "): " << line << "\n";
    }
    return;
  }

  if (options.command == "scale") {
    bool any = false;
    for (const auto& o : spec.outcomes) any = any || o.target_snr.has_value();
    if (!any)
      throw ValidationError(
          {"outcomes: the scale command needs target_snr and scale on at "
           "least one outcome block"});
    const std::vector<OutcomeModel> scaled = apply_scaling(spec, models);
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < scaled.size(); ++j) {
      nlohmann::ordered_json block;
      block["mean"] = spec.outcomes[j].mean;
      block["family"] = family_name(scaled[j].family);
      if (scaled[j].family == Family::gaussian)
        block["sigma"] = scaled[j].sigma;
      block["scale_multiplier"] = scaled[j].scale;
      block["scaled_mean"] = scaled[j].label();
      blocks.push_back(std::move(block));
    }
    const std::string text = blocks.dump(2) + "\n";
    out << text;
    if (!options.out_dir.empty())
      write_text_file(
          (std::filesystem::path(options.out_dir) / "scaled_outcomes.json")
              .string(),
          text);
    return;
  }

  if (options.command == "sample") {
    RandomStream rng(derive_seed(spec.run.seed, {kStageSample}));
    const DataTable sample =
        sample_predictors(models.xmod, spec.run.n_values.front(), rng);
    if (options.out_dir.empty()) {
      write_csv(sample, out);
    } else {
      write_csv_file(
          sample,
          (std::filesystem::path(options.out_dir) / "sample.csv").string());
      err << "wrote " << sample.nrow() << " rows to " << options.out_dir
          << "/sample.csv\n";
    }
    return;
  }

  throw ValidationError({"command: unknown command '" + options.command +
                         "' (use power, curve, snr, scale, or sample)"});
}

}  // namespace powersim
