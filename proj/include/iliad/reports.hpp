#pragma once

// Report emission: per-run CSV curves, cross-algorithm summary CSV, and
// self-contained SVG learning-curve plots with a +-1 std band per algorithm.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "iliad/harness.hpp"

namespace iliad::harness {

inline std::string format_double(double v) {
    if (std::isinf(v)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// run.csv: seed,episode,metric,value with metric in
// {val_success, train_success_cum}.
inline std::string emit_run_csv(std::span<const MetricsLog> logs) {
    std::string out = "seed,episode,metric,value\n";
    for (const auto& log : logs)
        for (const auto& p : log.points) {
            out += std::to_string(log.seed) + "," + std::to_string(p.episode) +
                   ",val_success," + format_double(p.val_success) + "\n";
            out += std::to_string(log.seed) + "," + std::to_string(p.episode) +
                   ",train_success_cum," + format_double(p.train_success_cum) + "\n";
        }
    return out;
}

inline std::vector<MetricsLog> parse_run_csv(const std::string& csv) {
    std::map<int, MetricsLog> by_seed;
    std::size_t pos = csv.find('\n') + 1;  // skip header
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        const std::string line = csv.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        std::array<std::string, 4> cols;
        std::size_t start = 0;
        for (int c = 0; c < 4; ++c) {
            const std::size_t comma = c < 3 ? line.find(',', start) : line.size();
            cols[c] = line.substr(start, comma - start);
            start = comma + 1;
        }
        const int seed = std::stoi(cols[0]);
        const long episode = std::stol(cols[1]);
        const double value = cols[3] == "inf" ? kInf : std::strtod(cols[3].c_str(), nullptr);
        MetricsLog& log = by_seed[seed];
        log.seed = seed;
        if (cols[2] == "val_success") {
            log.points.push_back({episode, value, 0.0});
        } else {
            for (auto& p : log.points)
                if (p.episode == episode) p.train_success_cum = value;
        }
    }
    std::vector<MetricsLog> logs;
    for (auto& [seed, log] : by_seed) logs.push_back(std::move(log));
    return logs;
}

// summary.csv: one row per (setting, algorithm).
inline std::string emit_summary_csv(std::span<const ExperimentResult> results) {
    std::string out =
        "setting,algorithm,val_mean,val_std,test_mean,test_std,complexity_mean,complexity_std\n";
    for (const auto& r : results) {
        const Aggregate val = r.val_aggregate();
        const Aggregate test = r.test_aggregate();
        const Aggregate complexity = r.complexity_aggregate();
        out += r.setting + "," + r.algorithm + "," + format_double(val.mean) + "," +
               format_double(val.stddev) + "," + format_double(test.mean) + "," +
               format_double(test.stddev) + "," + format_double(complexity.mean) + "," +
               format_double(complexity.stddev) + "\n";
    }
    return out;
}

namespace svg_detail {

struct Series {
    std::string label;
    std::vector<long> episodes;
    std::vector<double> mean, lo, hi;
};

inline Series series_of(const ExperimentResult& r) {
    Series s;
    s.label = r.algorithm;
    if (r.seeds.empty()) return s;
    const std::size_t n_points = r.seeds.front().points.size();
    for (std::size_t i = 0; i < n_points; ++i) {
        std::vector<double> vals;
        for (const auto& log : r.seeds)
            if (i < log.points.size()) vals.push_back(log.points[i].val_success);
        const Aggregate agg = aggregate_seeds(vals);
        s.episodes.push_back(r.seeds.front().points[i].episode);
        s.mean.push_back(agg.mean);
        s.lo.push_back(std::max(0.0, agg.mean - agg.stddev));
        s.hi.push_back(std::min(1.0, agg.mean + agg.stddev));
    }
    return s;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf"};
    return colors[i % 7];
}

}  // namespace svg_detail

// Validation success-rate curves, mean line and +-1 std band per algorithm.
inline std::string emit_svg(std::span<const ExperimentResult> results,
                            const std::string& title) {
    const int width = 720, height = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    long max_episode = 1;
    for (const auto& r : results)
        for (const auto& log : r.seeds)
            if (!log.points.empty()) max_episode = std::max(max_episode, log.points.back().episode);

    auto x_of = [&](double episode) {
        return ml + (width - ml - mr) * episode / static_cast<double>(max_episode);
    };
    auto y_of = [&](double rate) { return mt + (height - mt - mb) * (1.0 - rate); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";

    // axes and grid
    for (int tick = 0; tick <= 5; ++tick) {
        const double rate = tick / 5.0;
        const double y = y_of(rate);
        svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + format_double(y) + "\" x2=\"" +
               std::to_string(width - mr) + "\" y2=\"" + format_double(y) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + std::to_string(ml - 8) + "\" y=\"" + format_double(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_double(rate) + "</text>\n";
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const double ep = max_episode * tick / 4.0;
        svg += "<text x=\"" + format_double(x_of(ep)) + "\" y=\"" +
               std::to_string(height - mb + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               std::to_string(static_cast<long>(ep)) + "</text>\n";
    }
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">training episodes"
           "</text>\n";
    svg += "<text x=\"16\" y=\"" + std::to_string(height / 2) +
           "\" transform=\"rotate(-90 16 " + std::to_string(height / 2) +
           ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">validation "
           "success rate</text>\n";

    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto s = svg_detail::series_of(results[i]);
        if (s.episodes.empty()) continue;
        const std::string color = svg_detail::palette(i);
        // band polygon: hi forward, lo backward
        std::string band = "<polygon fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < s.episodes.size(); ++k)
            band += format_double(x_of(s.episodes[k])) + "," + format_double(y_of(s.hi[k])) + " ";
        for (std::size_t k = s.episodes.size(); k-- > 0;)
            band += format_double(x_of(s.episodes[k])) + "," + format_double(y_of(s.lo[k])) + " ";
        band += "\"/>\n";
        svg += band;
        std::string line = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < s.episodes.size(); ++k)
            line += format_double(x_of(s.episodes[k])) + "," + format_double(y_of(s.mean[k])) + " ";
        line += "\"/>\n";
        svg += line;
        // legend entry
        const int ly = mt + 16 * static_cast<int>(i);
        svg += "<rect x=\"" + std::to_string(width - mr - 150) + "\" y=\"" + std::to_string(ly) +
               "\" width=\"12\" height=\"4\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + std::to_string(width - mr - 132) + "\" y=\"" + std::to_string(ly + 6) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// Writes the requested report files for a set of experiment results:
// <setting>-<algorithm>/run.csv per result, a combined summary.csv, and one
// SVG per setting. An empty format list writes nothing.
inline std::vector<std::string> emit_reports(std::span<const ExperimentResult> results,
                                             const std::string& out_dir,
                                             std::span<const std::string> formats) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    bool want_csv = false, want_svg = false;
    for (const auto& f : formats) {
        if (f == "csv") want_csv = true;
        else if (f == "svg") want_svg = true;
        else throw std::invalid_argument("unknown report format: " + f);
    }
    if (!want_csv && !want_svg) return written;
    fs::create_directories(out_dir);
    auto write_file = [&](const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << content;
        written.push_back(path);
    };
    if (want_csv) {
        for (const auto& r : results) {
            const std::string dir = out_dir + "/" + r.setting + "-" + r.algorithm;
            fs::create_directories(dir);
            write_file(dir + "/run.csv", emit_run_csv(r.seeds));
        }
        write_file(out_dir + "/summary.csv", emit_summary_csv(results));
    }
    if (want_svg) {
        std::map<std::string, std::vector<ExperimentResult>> by_setting;
        for (const auto& r : results) by_setting[r.setting].push_back(r);
        for (const auto& [setting, rs] : by_setting)
            write_file(out_dir + "/" + setting + "_val_success.svg",
                       emit_svg(rs, setting + " validation success"));
    }
    return written;
}

}  // namespace iliad::harness
