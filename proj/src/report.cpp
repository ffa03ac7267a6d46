#include "qsplit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qsplit::harness {

bool ConvergenceReport::any_failed() const {
    for (const auto& row : rows)
        if (row.failed) return true;
    return false;
}

const SlopeFit* ConvergenceReport::slope_for(const std::string& policy,
                                             const std::string& norm) const {
    for (const auto& [key, fit] : slopes)
        if (key.first == policy && key.second == norm) return &fit;
    return nullptr;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> tau_error) {
    if (tau_error.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [tau, err] : tau_error) {
        if (!(tau > 0.0) || !(err > 0.0))
            throw std::domain_error("fit_slope: values must be positive");
        const double x = std::log(tau);
        const double y = std::log(err);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(tau_error.size());
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::domain_error("fit_slope: degenerate abscissae");
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (const auto& [tau, err] : tau_error) {
        const double r = std::log(err) - (fit.intercept + fit.slope * std::log(tau));
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    return fit;
}

void compute_slopes(ConvergenceReport& report) {
    report.slopes.clear();
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& row : report.rows) {
        const auto key = std::make_pair(row.policy, row.norm);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& key : keys) {
        std::vector<std::pair<double, double>> points;
        bool floored = false;
        for (const auto& row : report.rows) {
            if (row.policy != key.first || row.norm != key.second || row.failed) continue;
            if (!(row.max_err > kDegenerateFloor)) {
                floored = true;
                continue;
            }
            points.emplace_back(row.tau, row.max_err);
        }
        SlopeFit fit;
        if (floored || points.size() < 2) {
            fit.degenerate = true;
            fit.slope = fit.intercept = fit.residual =
                std::numeric_limits<double>::quiet_NaN();
        } else {
            fit = fit_slope(points);
        }
        report.slopes.emplace_back(key, fit);
    }
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void emit_csv(const ConvergenceReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
    out << "config_hash,policy,tau,norm,max_err,mean_err,std_err,subflow_evals\n";
    for (const auto& row : report.rows) {
        out << report.config_hash << ',' << row.policy << ',' << format_double(row.tau) << ','
            << row.norm << ',' << format_double(row.max_err) << ','
            << format_double(row.mean_err) << ',' << format_double(row.std_err) << ','
            << row.subflow_evals << '\n';
    }
    if (!out) throw std::runtime_error("emit_csv: write failed for '" + path + "'");
}

ConvergenceReport read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_csv: empty file '" + path + "'");
    if (line != "config_hash,policy,tau,norm,max_err,mean_err,std_err,subflow_evals")
        throw std::runtime_error("read_csv: unexpected header in '" + path + "'");
    ConvergenceReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8)
            throw std::runtime_error("read_csv: malformed row '" + line + "'");
        if (report.config_hash.empty()) report.config_hash = fields[0];
        ReportRow row;
        row.policy = fields[1];
        row.tau = std::strtod(fields[2].c_str(), nullptr);
        row.norm = fields[3];
        row.max_err = std::strtod(fields[4].c_str(), nullptr);
        row.mean_err = std::strtod(fields[5].c_str(), nullptr);
        row.std_err = std::strtod(fields[6].c_str(), nullptr);
        row.subflow_evals = std::strtoll(fields[7].c_str(), nullptr, 10);
        row.failed = !std::isfinite(row.max_err);
        report.rows.push_back(row);
    }
    compute_slopes(report);
    return report;
}

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (tau, err), tau ascending
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void emit_svg(const ConvergenceReport& report, const std::string& path) {
    std::vector<Series> series;
    for (const auto& row : report.rows) {
        if (row.failed || !(row.max_err > 0.0) || !std::isfinite(row.max_err)) continue;
        const std::string label = row.policy + " (" + row.norm + ")";
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const Series& s) { return s.label == label; });
        if (it == series.end()) {
            series.push_back({label, {}});
            it = series.end() - 1;
        }
        it->points.emplace_back(row.tau, row.max_err);
    }
    if (series.empty())
        throw std::invalid_argument("emit_svg: report has no positive-error rows");
    for (auto& s : series) std::sort(s.points.begin(), s.points.end());

    double tau_min = 1e300, tau_max = 0.0, err_min = 1e300, err_max = 0.0;
    for (const auto& s : series)
        for (const auto& [tau, err] : s.points) {
            tau_min = std::min(tau_min, tau);
            tau_max = std::max(tau_max, tau);
            err_min = std::min(err_min, err);
            err_max = std::max(err_max, err);
        }
    if (tau_max <= tau_min) tau_max = tau_min * 2.0;

    // Reference lines of slopes 1, 1.5, 2 through the bottom-left data corner.
    const double ref_slopes[] = {1.0, 1.5, 2.0};
    for (double s : ref_slopes)
        err_max = std::max(err_max, err_min * std::pow(tau_max / tau_min, s));

    const double lx0 = std::log10(tau_min), lx1 = std::log10(tau_max);
    double ly0 = std::log10(err_min), ly1 = std::log10(err_max);
    const double pad = 0.05 * (ly1 - ly0 + 1e-12);
    ly0 -= pad;
    ly1 += pad;

    const double width = 900, height = 620;
    const double ml = 90, mr = 230, mt = 40, mb = 70;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double tau) { return ml + (std::log10(tau) - lx0) / (lx1 - lx0) * pw; };
    auto py = [&](double err) { return mt + (ly1 - std::log10(err)) / (ly1 - ly0) * ph; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    // x ticks at the data tau values, labeled as powers of two.
    std::vector<double> xticks;
    for (const auto& s : series)
        for (const auto& [tau, err] : s.points)
            if (std::find(xticks.begin(), xticks.end(), tau) == xticks.end())
                xticks.push_back(tau);
    std::sort(xticks.begin(), xticks.end());
    for (double tau : xticks) {
        const double x = px(tau);
        svg << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x << "\" y2=\""
            << mt + ph + 6 << "\" stroke=\"black\"/>\n";
        int exponent = 0;
        std::frexp(tau, &exponent);
        svg << "<text x=\"" << x << "\" y=\"" << mt + ph + 22
            << "\" font-size=\"12\" text-anchor=\"middle\">2^" << exponent - 1 << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 18
        << "\" font-size=\"14\" text-anchor=\"middle\">tau</text>\n";

    // y ticks at decades.
    const int dec_lo = static_cast<int>(std::ceil(ly0));
    const int dec_hi = static_cast<int>(std::floor(ly1));
    for (int d = dec_lo; d <= dec_hi; ++d) {
        const double y = mt + (ly1 - d) / (ly1 - ly0) * ph;
        svg << "<line x1=\"" << ml - 6 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << ml - 10 << "\" y=\"" << y + 4
            << "\" font-size=\"12\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    svg << "<text x=\"20\" y=\"" << mt + ph / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << mt + ph / 2 << ")\">max error</text>\n";

    // Dashed reference slope lines.
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = ref_slopes[i];
        const double e0 = err_min;
        const double e1 = err_min * std::pow(tau_max / tau_min, s);
        svg << "<line x1=\"" << px(tau_min) << "\" y1=\"" << py(e0) << "\" x2=\"" << px(tau_max)
            << "\" y2=\"" << py(e1)
            << "\" stroke=\"#999999\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    }

    // Data polylines with markers.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [tau, err] : series[si].points)
            svg << px(tau) << "," << py(err) << " ";
        svg << "\"/>\n";
        for (const auto& [tau, err] : series[si].points)
            svg << "<circle cx=\"" << px(tau) << "\" cy=\"" << py(err)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }

    // Legend: one entry per series plus the reference lines.
    double ly = mt + 10;
    const double lxx = ml + pw + 14;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<line x1=\"" << lxx << "\" y1=\"" << ly << "\" x2=\"" << lxx + 24 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << lxx + 30 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << series[si].label << "</text>\n";
        ly += 18;
    }
    const char* ref_labels[] = {"slope 1", "slope 1.5", "slope 2"};
    for (int i = 0; i < 3; ++i) {
        svg << "<line x1=\"" << lxx << "\" y1=\"" << ly << "\" x2=\"" << lxx + 24 << "\" y2=\""
            << ly << "\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>\n";
        svg << "<text x=\"" << lxx + 30 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << ref_labels[i] << "</text>\n";
        ly += 18;
    }

    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_svg: cannot open '" + path + "' for writing");
    out << svg.str();
    if (!out) throw std::runtime_error("emit_svg: write failed for '" + path + "'");
}

}  // namespace qsplit::harness
