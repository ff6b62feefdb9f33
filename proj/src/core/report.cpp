#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tbiq {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::strtod(s.c_str(), nullptr);
}

} // namespace

std::string csv_text(const Report& report) {
    std::ostringstream o;
    o << "study,sweep_value,resolution,observer,auc,ci_lo,ci_hi,mse,psnr,ssim,seed\n";
    for (const ReportRow& r : report.rows) {
        o << r.study << ',' << r.sweep_value << ',' << r.resolution << ',' << r.observer << ','
          << num(r.auc) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi) << ',' << num(r.mse) << ','
          << num(r.psnr) << ',' << num(r.ssim) << ',' << r.seed << '\n';
    }
    return o.str();
}

void write_csv(const Report& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << csv_text(report);
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

Report read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
    if (line != "study,sweep_value,resolution,observer,auc,ci_lo,ci_hi,mse,psnr,ssim,seed")
        throw std::runtime_error("read_csv: unexpected header in " + path);
    Report rep;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) fields.push_back(item);
        if (fields.size() != 11) throw std::runtime_error("read_csv: malformed row: " + line);
        ReportRow r;
        r.study = fields[0];
        r.sweep_value = fields[1];
        r.resolution = fields[2];
        r.observer = fields[3];
        r.auc = parse_num(fields[4]);
        r.ci_lo = parse_num(fields[5]);
        r.ci_hi = parse_num(fields[6]);
        r.mse = parse_num(fields[7]);
        r.psnr = parse_num(fields[8]);
        r.ssim = parse_num(fields[9]);
        r.seed = std::strtoull(fields[10].c_str(), nullptr, 10);
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

void emit_plot(const Report& report, const std::string& path) {
    if (report.rows.empty()) throw std::invalid_argument("emit_plot: empty report");

    // x axis: sweep values in first-seen order
    std::vector<std::string> sweeps;
    for (const auto& r : report.rows)
        if (std::find(sweeps.begin(), sweeps.end(), r.sweep_value) == sweeps.end())
            sweeps.push_back(r.sweep_value);

    const bool use_auc = std::any_of(report.rows.begin(), report.rows.end(),
                                     [](const ReportRow& r) { return std::isfinite(r.auc); });

    struct Point {
        double x, y, lo, hi;
        bool has_ci;
    };
    std::map<std::pair<std::string, std::string>, std::vector<Point>> series;
    for (const auto& r : report.rows) {
        const double y = use_auc ? r.auc : r.mse;
        if (!std::isfinite(y)) continue;
        const double x = static_cast<double>(
            std::find(sweeps.begin(), sweeps.end(), r.sweep_value) - sweeps.begin());
        const bool has_ci = use_auc && std::isfinite(r.ci_lo) && std::isfinite(r.ci_hi);
        series[{r.resolution, r.observer}].push_back({x, y, r.ci_lo, r.ci_hi, has_ci});
    }

    double ylo = 1e300, yhi = -1e300;
    for (const auto& [k, pts] : series)
        for (const auto& p : pts) {
            ylo = std::min(ylo, p.has_ci ? p.lo : p.y);
            yhi = std::max(yhi, p.has_ci ? p.hi : p.y);
        }
    if (!(yhi > ylo)) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    const double pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;

    const int W = 720, H = 480, ml = 70, mr = 160, mt = 30, mb = 50;
    auto sx = [&](double x) {
        const double span = std::max<double>(1, sweeps.size() - 1);
        return ml + x / span * (W - ml - mr);
    };
    auto sy = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b", "#e377c2", "#17becf", "#7f7f7f"};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < sweeps.size(); ++i)
        out << "<text x=\"" << sx(static_cast<double>(i)) << "\" y=\"" << H - mb + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << sweeps[i] << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = ylo + pad + (yhi - ylo - 2 * pad) * i / 4.0;
        out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(y) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << num(std::round(y * 1000) / 1000)
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">sweep</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">" << (use_auc ? "AUC" : "MSE")
        << "</text>\n";

    int ci = 0, legend_y = mt + 10;
    for (const auto& [key, pts_in] : series) {
        auto pts = pts_in;
        std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
        const char* color = colors[ci % 9];
        std::ostringstream poly;
        for (const auto& p : pts) poly << sx(p.x) << "," << sy(p.y) << " ";
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
            << poly.str() << "\"/>\n";
        for (const auto& p : pts) {
            out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"2.5\" fill=\""
                << color << "\"/>\n";
            if (p.has_ci) {
                out << "<line x1=\"" << sx(p.x) << "\" y1=\"" << sy(p.lo) << "\" x2=\"" << sx(p.x)
                    << "\" y2=\"" << sy(p.hi) << "\" stroke=\"" << color << "\"/>\n";
                out << "<line x1=\"" << sx(p.x) - 3 << "\" y1=\"" << sy(p.lo) << "\" x2=\""
                    << sx(p.x) + 3 << "\" y2=\"" << sy(p.lo) << "\" stroke=\"" << color << "\"/>\n";
                out << "<line x1=\"" << sx(p.x) - 3 << "\" y1=\"" << sy(p.hi) << "\" x2=\""
                    << sx(p.x) + 3 << "\" y2=\"" << sy(p.hi) << "\" stroke=\"" << color << "\"/>\n";
            }
        }
        out << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << W - mr + 30
            << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - mr + 36 << "\" y=\"" << legend_y + 4 << "\" font-size=\"11\">"
            << key.first << "/" << key.second << "</text>\n";
        legend_y += 18;
        ++ci;
    }
    out << "</svg>\n";
}

} // namespace tbiq
