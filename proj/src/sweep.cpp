#include "nara/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "nara/engine.hpp"
#include "nara/format.hpp"

namespace nara {

namespace {

std::string shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double round_grid(double value) { return std::round(value * 1e12) / 1e12; }

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
  std::vector<double> grid;
  if (spec.find(':') != std::string_view::npos) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    if (b == std::string_view::npos) throw Error("grid must be start:stop:step");
    const double start = parse_double(spec.substr(0, a));
    const double stop = parse_double(spec.substr(a + 1, b - a - 1));
    const double step = parse_double(spec.substr(b + 1));
    if (!(step > 0.0) || stop < start) throw Error("grid needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) grid.push_back(round_grid(start + static_cast<double>(i) * step));
  } else {
    std::size_t begin = 0;
    while (begin <= spec.size()) {
      const auto end = std::min(spec.find(',', begin), spec.size());
      grid.push_back(parse_double(spec.substr(begin, end - begin)));
      begin = end + 1;
    }
  }
  for (double e : grid) {
    if (!(e >= 0.0 && e <= 1.0)) throw Error("epsilon must be in [0, 1]");
  }
  return grid;
}

std::vector<SweepRow> run_sweep(const ModelBundle& bundle, const std::vector<std::vector<double>>& sequences,
                                const SweepOptions& options) {
  if (!bundle.conf_trained) throw Error("confidence predictor untrained");
  if (options.grid.empty()) throw Error("empty epsilon grid");
  if (sequences.empty()) throw Error("no sequences to sweep");
  const std::size_t o = bundle.dims.context;
  const std::size_t h = options.horizon;
  for (const auto& s : sequences) {
    if (s.size() < o + h) throw Error("sequence shorter than context + horizon");
  }

  const std::size_t per_row = sequences.size();
  std::vector<GenerationTrace> traces(options.grid.size() * per_row);
  for_each_index(traces.size(), options.execution, [&](std::size_t i) {
    const std::size_t row = i / per_row;
    const std::size_t s = i % per_row;
    GenerationConfig cfg;
    cfg.epsilon = options.grid[row];
    cfg.horizon = h;
    cfg.seed = mix_seed(options.seed, s, 0x5EE9);
    traces[i] = generate_nara(bundle, std::span<const double>(sequences[s]).first(o), cfg);
  });

  std::vector<SweepRow> rows;
  for (std::size_t row = 0; row < options.grid.size(); ++row) {
    SweepRow r;
    r.epsilon = options.grid[row];
    double l1 = 0.0;
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < per_row; ++s) {
      const auto& t = traces[row * per_row + s];
      for (std::size_t k = 0; k < h; ++k) {
        l1 += std::abs(bundle.standardization.invert(t.generated[k]) -
                       bundle.standardization.invert(sequences[s][o + k]));
      }
      accepted += t.accepted_total;
      r.sequential_rounds += t.sequential_rounds;
      r.draft_passes += t.draft_passes;
      r.wall_ms += t.wall_ms;
    }
    const double total = static_cast<double>(per_row * h);
    r.mean_l1 = l1 / total;
    r.acceptance_ratio_pct = 100.0 * static_cast<double>(accepted) / total;
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << shortest(r.epsilon) << ',' << format_double(r.acceptance_ratio_pct) << ','
        << format_double(r.mean_l1) << ',' << r.sequential_rounds << ',' << r.draft_passes << ','
        << format_double(r.wall_ms, 6) << '\n';
  }
}

void write_sweep_svg(const std::vector<SweepRow>& rows, std::ostream& out) {
  constexpr double width = 640, height = 400, left = 60, right = 60, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  double l1_max = 0.0;
  for (const auto& r : rows) l1_max = std::max(l1_max, r.mean_l1);
  if (!(l1_max > 0.0)) l1_max = 1.0;
  auto x_of = [&](double eps) { return left + eps * plot_w; };
  auto y_of = [&](double v, double vmax) { return top + plot_h * (1.0 - v / vmax); };
  auto polyline = [&](const char* colour, auto value, double vmax) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) out << format_double(x_of(r.epsilon), 6) << ',' << format_double(y_of(value(r), vmax), 6) << ' ';
    out << "\"/>\n";
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double eps = i / 10.0;
    out << "<text x=\"" << x_of(eps) << "\" y=\"" << height - bottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << shortest(eps) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double frac = i / 4.0;
    const double y = top + plot_h * (1.0 - frac);
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#1f77b4\">"
        << format_double(frac * l1_max, 3) << "</text>\n";
    out << "<text x=\"" << width - right + 6 << "\" y=\"" << y + 4 << "\" font-size=\"11\" fill=\"#d62728\">"
        << format_double(frac * 100.0, 3) << "%</text>\n";
  }
  polyline("#1f77b4", [](const SweepRow& r) { return r.mean_l1; }, l1_max);
  polyline("#d62728", [](const SweepRow& r) { return r.acceptance_ratio_pct; }, 100.0);
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" text-anchor=\"middle\">epsilon</text>\n";
  out << "<text x=\"" << left << "\" y=\"" << top - 10 << "\" font-size=\"13\" fill=\"#1f77b4\">mean l1</text>\n";
  out << "<text x=\"" << width - right << "\" y=\"" << top - 10
      << "\" font-size=\"13\" text-anchor=\"end\" fill=\"#d62728\">acceptance ratio</text>\n";
  out << "</svg>\n";
}

}  // namespace nara
