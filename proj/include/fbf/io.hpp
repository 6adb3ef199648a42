#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fbf/problems.hpp"
#include "fbf/sweep.hpp"

namespace fbf {

// Sweep rows as CSV: header `epsilon,eta_eps,fpp0,newton_iterations,mesh_points`,
// 17 significant digits (lossless for double), LF line endings. An optional
// trailing comment line records a mid-sweep failure.
std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows,
                              const std::string& trailing_comment = "");

// Inverse of sweep_rows_to_csv; ignores comment lines. Throws on a bad header
// or malformed row.
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

std::string sweep_rows_to_json(const std::vector<SweepRow>& rows);

// One named curve for the SVG plot.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Self-contained SVG line chart with axes, tick labels, and a legend.
std::string render_svg_chart(const std::vector<PlotSeries>& series,
                             const std::string& x_label, const std::string& title);

// Writes text to path; throws std::ios_base::failure on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fbf
