#pragma once

#include <string>

#include "powersim/engine.hpp"

namespace powersim {

// The rendered power summary is the engine's PowerTable: rows of
// (inference, effect, power, s.e., n, SNR, threshold) plus header metadata.
using SummaryTable = PowerTable;

// Text block formatted like the console summary: a header of run facts
// followed by a markdown-style table.
std::string render_summary_text(const SummaryTable& table);

// Machine-readable rows: inference,effect,power,power_se,n,snr,threshold.
std::string render_summary_csv(const SummaryTable& table);

// Deterministic SVG line chart: power vs sample size (one line per outcome
// model), or power vs threshold when a threshold sweep was requested. One
// panel per effect. Byte-identical across runs with identical inputs.
std::string render_power_svg(const SummaryTable& table);

// Serialized simulation results. A sim_power run is stored as a 1x1 grid.
struct ResultsDocument {
  std::string kind;  // "power" | "curve"
  CurveResult curve;
};

std::string results_to_json(const ResultsDocument& doc);
ResultsDocument results_from_json(const std::string& text);

void write_results_json(const ResultsDocument& doc, const std::string& path);
ResultsDocument load_results_json(const std::string& path);

// Summarizes a (re)loaded results document.
SummaryTable summarize_results(const ResultsDocument& doc,
                               const std::string& criterion,
                               const std::vector<double>& thresholds,
                               Direction how);

}  // namespace powersim
