#include "fbf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fbf {

namespace {

const char* kCsvHeader = "epsilon,eta_eps,fpp0,newton_iterations,mesh_points";

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number in CSV: " + s);
    return v;
}

}  // namespace

std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows,
                              const std::string& trailing_comment) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += fmt17(r.epsilon) + ',' + fmt17(r.eta_eps) + ',' + fmt17(r.fpp0) + ',' +
               std::to_string(r.newton_iterations) + ',' + std::to_string(r.mesh_points) + '\n';
    }
    if (!trailing_comment.empty()) {
        out += "# " + trailing_comment + '\n';
    }
    return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::invalid_argument("bad CSV header");
    }
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (fields.size() != 5) throw std::invalid_argument("bad CSV row: " + line);
        rows.push_back({parse_double(fields[0]), parse_double(fields[1]),
                        parse_double(fields[2]), std::stoi(fields[3]), std::stoi(fields[4])});
    }
    return rows;
}

std::string sweep_rows_to_json(const std::vector<SweepRow>& rows) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out += "  {\"epsilon\": " + fmt17(r.epsilon) + ", \"eta_eps\": " + fmt17(r.eta_eps) +
               ", \"fpp0\": " + fmt17(r.fpp0) +
               ", \"newton_iterations\": " + std::to_string(r.newton_iterations) +
               ", \"mesh_points\": " + std::to_string(r.mesh_points) + "}";
        if (i + 1 < rows.size()) out += ',';
        out += '\n';
    }
    out += "]\n";
    return out;
}

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 600.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 50.0;
constexpr double kMarginBottom = 60.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string render_svg_chart(const std::vector<PlotSeries>& series,
                             const std::string& x_label, const std::string& title) {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    ymax += 0.05 * (ymax - ymin);

    const double pw = kWidth - kMarginLeft - kMarginRight;
    const double ph = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kMarginTop + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"18\">" << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + ph << "\" x2=\""
        << kMarginLeft + pw << "\" y2=\"" << kMarginTop + ph
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
        << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + ph << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    const int nticks = 6;
    for (int t = 0; t <= nticks; ++t) {
        const double xv = xmin + (xmax - xmin) * t / nticks;
        const double yv = ymin + (ymax - ymin) * t / nticks;
        svg << "<line x1=\"" << px(xv) << "\" y1=\"" << kMarginTop + ph << "\" x2=\"" << px(xv)
            << "\" y2=\"" << kMarginTop + ph + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << px(xv) << "\" y=\"" << kMarginTop + ph + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_tick(xv) << "</text>\n"
            << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << py(yv) << "\" x2=\""
            << kMarginLeft << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_tick(yv) << "</text>\n";
    }
    svg << "<text x=\"" << kMarginLeft + pw / 2 << "\" y=\"" << kHeight - 15
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << x_label
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        svg << "<polyline fill=\"none\" stroke=\"" << kColors[si % 5]
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg << px(s.x[i]) << ',' << py(s.y[i]);
            if (i + 1 < s.x.size()) svg << ' ';
        }
        svg << "\"/>\n";
        // legend entry
        const double ly = kMarginTop + 12 + 20.0 * si;
        svg << "<line x1=\"" << kMarginLeft + pw - 140 << "\" y1=\"" << ly << "\" x2=\""
            << kMarginLeft + pw - 110 << "\" y2=\"" << ly << "\" stroke=\"" << kColors[si % 5]
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << kMarginLeft + pw - 104 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + path);
}

}  // namespace fbf
