#pragma once

// Per-iteration report files: a CSV with one row per (iteration, joint), a
// separate timing CSV, and an SVG line chart with one panel per joint.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vidpose/core/errors.hpp"
#include "vidpose/pipeline/pipeline.hpp"

namespace vidpose {

/// Percentages throughout.
struct ReportRow {
    int iteration = 0;
    JointId joint = JointId::Head;
    double coverage = 0;
    std::optional<double> accuracy;
    std::size_t added = 0, discarded = 0, corrected = 0, occluded = 0, active = 0;
    std::optional<double> annotation_accuracy;
};

inline std::vector<ReportRow> report_rows(const std::vector<IterationReport>& reports) {
    std::vector<ReportRow> rows;
    for (const auto& r : reports)
        for (JointId j : kAllJoints) {
            const auto& s = r.joints[index_of(j)];
            rows.push_back({r.iteration, j, 100.0 * s.coverage, s.accuracy, s.added, s.discarded, s.corrected, s.occluded,
                            s.active_after, s.annotation_accuracy});
        }
    return rows;
}

inline constexpr const char* kReportHeader =
    "iteration,joint,coverage,accuracy,added,discarded,corrected,occluded,active,annotation_accuracy";

namespace detail {
inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
inline std::string opt2(const std::optional<double>& v) { return v ? fixed2(*v) : std::string(); }
}  // namespace detail

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << kReportHeader << '\n';
    for (const auto& r : rows)
        out << r.iteration << ',' << joint_name(r.joint) << ',' << detail::fixed2(r.coverage) << ',' << detail::opt2(r.accuracy)
            << ',' << r.added << ',' << r.discarded << ',' << r.corrected << ',' << r.occluded << ',' << r.active << ','
            << detail::opt2(r.annotation_accuracy) << '\n';
}

inline void write_timings_csv(std::ostream& out, const std::vector<IterationReport>& reports) {
    out << "iteration,spatial_s,temporal_s,self_evaluation_s,detector_s\n";
    for (const auto& r : reports)
        out << r.iteration << ',' << detail::fixed2(r.seconds.spatial) << ',' << detail::fixed2(r.seconds.temporal) << ','
            << detail::fixed2(r.seconds.self_evaluation) << ',' << detail::fixed2(r.seconds.detector) << '\n';
}

inline std::vector<ReportRow> read_report_csv(std::istream& in, const std::string& file = "<stream>") {
    std::string line;
    std::size_t n = 0;
    if (!std::getline(in, line) || line != kReportHeader) throw ParseError(file, 1, "unexpected report header");
    ++n;
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 10) throw ParseError(file, n, "expected 10 columns");
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || *end) throw ParseError(file, n, "bad number '" + s + "'");
            return v;
        };
        auto opt = [&](const std::string& s) { return s.empty() ? std::optional<double>() : num(s); };
        ReportRow r;
        r.iteration = int(num(f[0]));
        const auto j = parse_joint(f[1]);
        if (!j) throw ParseError(file, n, "unknown joint '" + f[1] + "'");
        r.joint = *j;
        r.coverage = num(f[2]);
        r.accuracy = opt(f[3]);
        r.added = std::size_t(num(f[4]));
        r.discarded = std::size_t(num(f[5]));
        r.corrected = std::size_t(num(f[6]));
        r.occluded = std::size_t(num(f[7]));
        r.active = std::size_t(num(f[8]));
        r.annotation_accuracy = opt(f[9]);
        rows.push_back(r);
    }
    return rows;
}

/// Coverage (solid) and detector accuracy (dashed) against iteration, one panel per joint.
inline void write_report_svg(std::ostream& out, const std::vector<ReportRow>& rows) {
    constexpr int kCols = 4, kPanelW = 220, kPanelH = 170, kPad = 36;
    const int rows_n = int((kJointCount + kCols - 1) / kCols);
    int max_it = 1;
    for (const auto& r : rows) max_it = std::max(max_it, r.iteration);
    const int W = kCols * kPanelW, H = rows_n * kPanelH + 24;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"8\" y=\"16\" font-size=\"12\">coverage (solid) and accuracy (dashed), % vs iteration</text>\n";
    for (JointId j : kAllJoints) {
        const int k = int(index_of(j));
        const double ox = (k % kCols) * kPanelW + kPad, oy = (k / kCols) * kPanelH + 24 + 14;
        const double pw = kPanelW - kPad - 12, ph = kPanelH - kPad - 14;
        auto px = [&](double it) { return ox + pw * it / max_it; };
        auto py = [&](double pct) { return oy + ph * (1.0 - pct / 100.0); };
        out << "<g>\n<text x=\"" << ox << "\" y=\"" << oy - 4 << "\" font-size=\"11\">" << joint_name(j) << "</text>\n";
        out << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << pw << "\" height=\"" << ph
            << "\" fill=\"none\" stroke=\"#999\"/>\n";
        for (int t = 0; t <= 100; t += 50)
            out << "<text x=\"" << ox - 4 << "\" y=\"" << py(t) + 3 << "\" text-anchor=\"end\">" << t << "</text>\n";
        for (int it = 0; it <= max_it; ++it)
            out << "<text x=\"" << px(it) << "\" y=\"" << oy + ph + 12 << "\" text-anchor=\"middle\">" << it << "</text>\n";
        std::string cov, acc;
        for (const auto& r : rows) {
            if (r.joint != j) continue;
            cov += detail::fixed2(px(r.iteration)) + "," + detail::fixed2(py(r.coverage)) + " ";
            if (r.accuracy) acc += detail::fixed2(px(r.iteration)) + "," + detail::fixed2(py(*r.accuracy)) + " ";
        }
        if (!cov.empty()) out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" << cov << "\"/>\n";
        if (!acc.empty())
            out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"4 2\" points=\"" << acc
                << "\"/>\n";
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace vidpose
