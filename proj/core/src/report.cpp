#include "powersim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"

namespace powersim {

namespace {

using njson = nlohmann::ordered_json;

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string trimmed_number(double value) {
  // %g-style compact form for thresholds.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

// ---- text summary ----------------------------------------------------------

struct TextColumn {
  std::string header;
  bool left = false;
  std::vector<std::string> cells;
};

std::string markdown_table(std::vector<TextColumn> columns) {
  std::vector<std::size_t> widths(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::size_t w = columns[c].header.size();
    for (const auto& cell : columns[c].cells) w = std::max(w, cell.size());
    widths[c] = w + 1;
  }
  auto pad = [](const std::string& s, std::size_t w, bool left) {
    std::string out;
    if (left) {
      out = s + std::string(w - s.size(), ' ');
    } else {
      out = std::string(w - s.size(), ' ') + s;
    }
    return out;
  };

  std::string out;
  out.push_back('|');
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out += pad(columns[c].header, widths[c], columns[c].left);
    out.push_back('|');
  }
  out.push_back('\n');
  out.push_back('|');
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].left)
      out += ":" + std::string(widths[c] - 1, '-');
    else
      out += std::string(widths[c] - 1, '-') + ":";
    out.push_back('|');
  }
  out.push_back('\n');
  const std::size_t rows = columns.empty() ? 0 : columns[0].cells.size();
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back('|');
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out += pad(columns[c].cells[r], widths[c], columns[c].left);
      out.push_back('|');
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace

std::string render_summary_text(const SummaryTable& table) {
  std::ostringstream out;
  const bool sweep = table.thresholds.size() > 1;

  if (table.is_curve)
    out << "\t*** POWER CURVE ANALYSIS SUMMARY ***\n";
  else
    out << "\t*** POWER ANALYSIS SUMMARY ***\n";
  out << "Number of Monte Carlo simulations: " << table.s << "\n";
  out << "Number of observations in each simulation:";
  for (std::size_t n : table.n_values) out << " " << n;
  out << "\n";
  if (table.is_curve) {
    out << "Data generating process estimated SNR (for each outcome model):";
    for (double snr : table.snr_values) out << " " << fixed(snr, 2);
    out << "\n";
  } else {
    out << "Data generating process estimated SNR: "
        << fixed(table.snr_values.front(), 2) << "\n";
  }
  out << "Inference model: " << table.inference << "\n";
  out << "Significance criterion: " << table.criterion << "\n";
  if (table.is_curve) {
    out << "Significance threshold:";
    for (double t : table.thresholds) out << " " << trimmed_number(t);
    out << "\n\n";
  } else {
    out << "\nSignificance threshold: ";
    for (double t : table.thresholds) out << " " << trimmed_number(t);
    out << "\n\n";
  }

  TextColumn effect{"", true, {}};
  TextColumn power{"power", false, {}};
  TextColumn nn{"n", false, {}};
  TextColumn snr{"snr", false, {}};
  TextColumn thres{"thres", false, {}};
  for (const auto& row : table.rows) {
    effect.cells.push_back(row.effect);
    power.cells.push_back(fixed(row.power, 3));
    nn.cells.push_back(std::to_string(row.n));
    snr.cells.push_back(fixed(row.snr, 2));
    thres.cells.push_back(trimmed_number(row.threshold));
  }
  std::vector<TextColumn> columns;
  columns.push_back(std::move(effect));
  columns.push_back(std::move(power));
  if (table.is_curve) {
    columns.push_back(std::move(nn));
    columns.push_back(std::move(snr));
  }
  if (sweep) columns.push_back(std::move(thres));
  out << markdown_table(std::move(columns));
  return out.str();
}

std::string render_summary_csv(const SummaryTable& table) {
  std::string out = "inference,effect,power,power_se,n,snr,threshold\n";
  for (const auto& row : table.rows) {
    out += row.inference;
    out += ',';
    out += row.effect;
    out += ',';
    out += format_double(row.power);
    out += ',';
    out += format_double(row.se);
    out += ',';
    out += std::to_string(row.n);
    out += ',';
    out += format_double(row.snr);
    out += ',';
    out += format_double(row.threshold);
    out += '\n';
  }
  return out;
}

// ---- results JSON ----------------------------------------------------------

std::string results_to_json(const ResultsDocument& doc) {
  const CurveResult& curve = doc.curve;
  njson root;
  root["kind"] = doc.kind;
  if (!curve.cells.empty()) {
    const SimResult& first = curve.cells.front();
    root["s"] = first.s;
    root["seed"] = first.seed;
    root["errorhandling"] = errorhandling_name(first.errorhandling);
    root["inference"] = first.inference_name;
    root["predictors"] = first.predictor_method;
  }
  root["n_values"] = curve.n_values;
  root["ymod_count"] = curve.ymod_count;

  njson cells = njson::array();
  for (const SimResult& cell : curve.cells) {
    njson c;
    c["ymod_index"] = cell.ymod_index;
    c["n_index"] = cell.n_index;
    c["ymod"] = cell.outcome_label;
    c["family"] = family_name(cell.outcome_family);
    c["n"] = cell.n;
    c["s"] = cell.s;
    c["snr"] = {{"snr", cell.snr.snr},
                {"se", cell.snr.se},
                {"m", cell.snr.m},
                {"r", cell.snr.r}};
    njson iterations = njson::array();
    for (const auto& it : cell.iterations) {
      if (!it) {
        iterations.push_back(nullptr);
        continue;
      }
      njson crit;
      for (const auto& [criterion, values] : *it) {
        njson effects;
        for (const auto& [effect, value] : values) effects[effect] = value;
        crit[criterion] = std::move(effects);
      }
      iterations.push_back(std::move(crit));
    }
    c["iterations"] = std::move(iterations);
    njson errors = njson::array();
    const bool with_message = cell.errorhandling == ErrorHandling::pass;
    for (const auto& e : cell.errors) {
      njson rec;
      rec["iteration"] = e.iteration;
      rec["stage"] = e.stage;
      if (with_message) rec["message"] = e.message;
      errors.push_back(std::move(rec));
    }
    c["error_count"] = cell.errors.size();
    c["errors"] = std::move(errors);
    cells.push_back(std::move(c));
  }
  root["cells"] = std::move(cells);
  return root.dump(2) + "\n";
}

ResultsDocument results_from_json(const std::string& text) {
  njson root;
  try {
    root = njson::parse(text);
  } catch (const njson::parse_error& e) {
    throw Error(std::string("results: invalid JSON: ") + e.what());
  }
  ResultsDocument doc;
  doc.kind = root.at("kind").get<std::string>();
  doc.curve.n_values = root.at("n_values").get<std::vector<std::size_t>>();
  doc.curve.ymod_count = root.at("ymod_count").get<std::size_t>();

  for (const auto& c : root.at("cells")) {
    SimResult cell;
    cell.ymod_index = c.at("ymod_index").get<std::size_t>();
    cell.n_index = c.at("n_index").get<std::size_t>();
    cell.outcome_label = c.at("ymod").get<std::string>();
    cell.outcome_family = parse_family(c.at("family").get<std::string>());
    cell.n = c.at("n").get<std::size_t>();
    cell.s = c.at("s").get<std::size_t>();
    cell.snr.snr = c.at("snr").at("snr").get<double>();
    cell.snr.se = c.at("snr").at("se").get<double>();
    cell.snr.m = c.at("snr").at("m").get<std::size_t>();
    cell.snr.r = c.at("snr").at("r").get<std::size_t>();
    cell.seed = root.value("seed", std::uint64_t{0});
    cell.errorhandling =
        parse_errorhandling(root.value("errorhandling", std::string("remove")));
    cell.inference_name = root.value("inference", std::string());
    cell.predictor_method = root.value("predictors", std::string());
    for (const auto& it : c.at("iterations")) {
      if (it.is_null()) {
        cell.iterations.push_back(std::nullopt);
        continue;
      }
      CritResult crit;
      for (const auto& [criterion, values] : it.items()) {
        CritValues effects;
        for (const auto& [effect, value] : values.items())
          effects[effect] = value.get<double>();
        crit[criterion] = std::move(effects);
      }
      cell.iterations.push_back(std::move(crit));
    }
    for (const auto& e : c.at("errors")) {
      IterationError rec;
      rec.iteration = e.at("iteration").get<std::size_t>();
      rec.stage = e.at("stage").get<std::string>();
      rec.message = e.value("message", std::string());
      cell.errors.push_back(std::move(rec));
    }
    doc.curve.cells.push_back(std::move(cell));
  }
  return doc;
}

void write_results_json(const ResultsDocument& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("results: cannot write '" + path + "'");
  out << results_to_json(doc);
}

ResultsDocument load_results_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("results: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return results_from_json(buffer.str());
}

SummaryTable summarize_results(const ResultsDocument& doc,
                               const std::string& criterion,
                               const std::vector<double>& thresholds,
                               Direction how) {
  if (doc.kind == "power") {
    if (doc.curve.cells.size() != 1)
      throw Error("results: a power document must hold exactly one cell");
    return power_summary(doc.curve.cells.front(), criterion, thresholds, how);
  }
  return power_summary(doc.curve, criterion, thresholds, how);
}

// ---- SVG -------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, power)
};

struct Panel {
  std::string effect;
  std::vector<Series> series;
};

std::string svg_coord(double v) { return fixed(v, 2); }

void svg_text(std::string& out, double x, double y, const std::string& text,
              const std::string& anchor, int size = 12) {
  out += "<text x=\"" + svg_coord(x) + "\" y=\"" + svg_coord(y) +
         "\" font-family=\"monospace\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + text + "</text>\n";
}

void svg_line(std::string& out, double x1, double y1, double x2, double y2,
              const std::string& stroke) {
  out += "<line x1=\"" + svg_coord(x1) + "\" y1=\"" + svg_coord(y1) +
         "\" x2=\"" + svg_coord(x2) + "\" y2=\"" + svg_coord(y2) +
         "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

}  // namespace

std::string render_power_svg(const SummaryTable& table) {
  if (table.rows.empty())
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"200\" "
           "height=\"40\"><text x=\"10\" y=\"24\" font-family=\"monospace\" "
           "font-size=\"12\">no rows to plot</text></svg>\n";
  const bool sweep = table.thresholds.size() > 1;

  // Group rows into panels (one per effect) and series.
  std::vector<Panel> panels;
  auto panel_of = [&](const std::string& effect) -> Panel& {
    for (auto& p : panels)
      if (p.effect == effect) return p;
    panels.push_back({effect, {}});
    return panels.back();
  };
  auto series_of = [&](Panel& panel, const std::string& label) -> Series& {
    for (auto& s : panel.series)
      if (s.label == label) return s;
    panel.series.push_back({label, {}});
    return panel.series.back();
  };

  for (const auto& row : table.rows) {
    Panel& panel = panel_of(row.effect);
    std::string label;
    double x = 0.0;
    if (sweep) {
      label = "n=" + std::to_string(row.n);
      if (table.snr_values.size() > 1 || table.is_curve)
        label += ", SNR=" + fixed(row.snr, 2);
      x = row.threshold;
    } else {
      label = "SNR=" + fixed(row.snr, 2);
      x = static_cast<double>(row.n);
    }
    series_of(panel, label).points.emplace_back(x, row.power);
  }
  for (auto& panel : panels)
    for (auto& s : panel.series)
      std::sort(s.points.begin(), s.points.end());

  // Shared x range.
  double xmin = 0.0, xmax = 1.0;
  bool first_point = true;
  for (const auto& panel : panels)
    for (const auto& s : panel.series)
      for (const auto& [x, _] : s.points) {
        xmin = first_point ? x : std::min(xmin, x);
        xmax = first_point ? x : std::max(xmax, x);
        first_point = false;
      }
  if (xmax <= xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }

  constexpr double kPanelW = 420.0, kPanelH = 330.0;
  constexpr double kLeft = 58.0, kRight = 14.0, kTop = 44.0, kBottom = 48.0;
  constexpr double kLegendW = 170.0;
  const double width = kPanelW * panels.size() + kLegendW;
  const double height = kPanelH;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         svg_coord(width) + "\" height=\"" + svg_coord(height) +
         "\" viewBox=\"0 0 " + svg_coord(width) + " " + svg_coord(height) +
         "\">\n";
  out += "<rect width=\"" + svg_coord(width) + "\" height=\"" +
         svg_coord(height) + "\" fill=\"white\"/>\n";

  const std::string x_title = sweep ? "threshold" : "n";
  const std::string title = "power vs " + x_title + " (criterion " +
                            table.criterion + ", " +
                            direction_name(table.how) + ")";
  svg_text(out, width / 2.0, 18.0, title, "middle", 13);

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const Panel& panel = panels[pi];
    const double ox = kPanelW * pi;  // panel origin
    const double plot_x0 = ox + kLeft;
    const double plot_x1 = ox + kPanelW - kRight;
    const double plot_y0 = kTop;
    const double plot_y1 = kPanelH - kBottom;
    auto px = [&](double x) {
      return plot_x0 + (x - xmin) / (xmax - xmin) * (plot_x1 - plot_x0);
    };
    auto py = [&](double power) {
      return plot_y1 - power * (plot_y1 - plot_y0);
    };

    svg_text(out, (plot_x0 + plot_x1) / 2.0, kTop - 8.0, panel.effect,
             "middle");
    svg_line(out, plot_x0, plot_y1, plot_x1, plot_y1, "#000000");
    svg_line(out, plot_x0, plot_y0, plot_x0, plot_y1, "#000000");

    for (int t = 0; t <= 4; ++t) {
      const double power = t / 4.0;
      const double y = py(power);
      svg_line(out, plot_x0 - 4.0, y, plot_x0, y, "#000000");
      svg_text(out, plot_x0 - 8.0, y + 4.0, fixed(power, 2), "end", 11);
      if (t > 0) svg_line(out, plot_x0, y, plot_x1, y, "#dddddd");
    }

    // X ticks at the distinct data positions (thinned to at most 8).
    std::vector<double> xticks;
    for (const auto& s : panel.series)
      for (const auto& [x, _] : s.points)
        if (std::find(xticks.begin(), xticks.end(), x) == xticks.end())
          xticks.push_back(x);
    std::sort(xticks.begin(), xticks.end());
    const std::size_t step = xticks.size() > 8 ? (xticks.size() + 7) / 8 : 1;
    for (std::size_t t = 0; t < xticks.size(); t += step) {
      const double x = px(xticks[t]);
      svg_line(out, x, plot_y1, x, plot_y1 + 4.0, "#000000");
      svg_text(out, x, plot_y1 + 18.0, trimmed_number(xticks[t]), "middle",
               11);
    }
    svg_text(out, (plot_x0 + plot_x1) / 2.0, kPanelH - 12.0, x_title,
             "middle");
    svg_text(out, ox + 16.0, (plot_y0 + plot_y1) / 2.0, "power", "middle");

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& s = panel.series[si];
      const std::string color = kPalette[si % kPaletteSize];
      std::string points;
      for (const auto& [x, power] : s.points) {
        points += svg_coord(px(x)) + "," + svg_coord(py(power)) + " ";
        out += "<circle cx=\"" + svg_coord(px(x)) + "\" cy=\"" +
               svg_coord(py(power)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
      if (s.points.size() > 1)
        out += "<polyline points=\"" + points +
               "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
    }
  }

  // Legend (series labels are shared across panels).
  const double lx = kPanelW * panels.size() + 10.0;
  double ly = kTop + 6.0;
  const Panel& legend_panel = panels.front();
  for (std::size_t si = 0; si < legend_panel.series.size(); ++si) {
    const std::string color = kPalette[si % kPaletteSize];
    out += "<rect x=\"" + svg_coord(lx) + "\" y=\"" + svg_coord(ly - 9.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    svg_text(out, lx + 18.0, ly + 2.0, legend_panel.series[si].label, "start",
             11);
    ly += 18.0;
  }

  out += "</svg>\n";
  return out;
}

}  // namespace powersim
