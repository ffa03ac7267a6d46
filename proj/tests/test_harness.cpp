#include <doctest.h>

#include <limits>
#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "qsplit/config.hpp"
#include "qsplit/report.hpp"

using namespace qsplit;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Minimal well-formedness check: balanced tags, quoted attributes.
bool well_formed_xml(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = text.find('<', i)) != std::string::npos) {
        if (text.compare(i, 2, "<?") == 0) {
            i = text.find("?>", i);
            if (i == std::string::npos) return false;
            i += 2;
            continue;
        }
        const std::size_t end = text.find('>', i);
        if (end == std::string::npos) return false;
        std::string inside = text.substr(i + 1, end - i - 1);
        if (std::count(inside.begin(), inside.end(), '"') % 2 != 0) return false;
        if (!inside.empty() && inside.front() == '/') {
            const std::string name = inside.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else {
            const bool self_closing = !inside.empty() && inside.back() == '/';
            if (self_closing) inside.pop_back();
            const std::string name = inside.substr(0, inside.find_first_of(" \t\r\n"));
            if (name.empty()) return false;
            if (!self_closing) stack.push_back(name);
        }
        i = end + 1;
    }
    return stack.empty();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

harness::ConvergenceReport sample_report(int policies) {
    harness::ConvergenceReport report;
    report.config_hash = "deadbeefdeadbeef";
    const char* names[] = {"qr", "rand"};
    for (int p = 0; p < policies; ++p) {
        for (int q = 4; q <= 8; ++q) {
            harness::ReportRow row;
            row.policy = names[p];
            row.tau = std::ldexp(1.0, -q);
            row.norm = "l2";
            row.max_err = (p + 1) * 0.3 * std::pow(row.tau, 2.0 - 0.5 * p);
            row.mean_err = row.max_err;
            row.std_err = 0.0;
            row.subflow_evals = (1 << q) * 2;
            report.rows.push_back(row);
        }
    }
    harness::compute_slopes(report);
    return report;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("fit_slope: exact power laws") {
    std::vector<std::pair<double, double>> tau2, tau1;
    for (int q = 4; q <= 10; ++q) {
        const double tau = std::ldexp(1.0, -q);
        tau2.emplace_back(tau, 0.37 * tau * tau);
        tau1.emplace_back(tau, 5.0 * tau);
    }
    const auto fit2 = harness::fit_slope(tau2);
    CHECK(fit2.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit2.residual <= 1e-12);
    CHECK(harness::fit_slope(tau1).slope == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_slope: logarithmic correction stays near 2") {
    std::vector<std::pair<double, double>> model;
    for (int q = 10; q <= 15; ++q) {
        const double tau = std::ldexp(1.0, -q);
        model.emplace_back(tau, tau * tau * std::log(1.0 / tau));
    }
    const auto fit = harness::fit_slope(model);
    CHECK(fit.slope > 1.8);
    CHECK(fit.slope < 2.1);
}

TEST_CASE("fit_slope: rejects bad input") {
    std::vector<std::pair<double, double>> one = {{0.1, 0.2}};
    CHECK_THROWS_AS(harness::fit_slope(one), std::invalid_argument);
    std::vector<std::pair<double, double>> nonpositive = {{0.1, 0.2}, {0.05, 0.0}};
    CHECK_THROWS_AS(harness::fit_slope(nonpositive), std::domain_error);
}

TEST_CASE("compute_slopes: noise-floor rows flag the fit as degenerate") {
    harness::ConvergenceReport report;
    report.config_hash = "0";
    for (int q = 4; q <= 6; ++q) {
        harness::ReportRow row;
        row.policy = "lie";
        row.tau = std::ldexp(1.0, -q);
        row.norm = "l2";
        row.max_err = 1e-15;
        report.rows.push_back(row);
    }
    harness::compute_slopes(report);
    REQUIRE(report.slopes.size() == 1);
    CHECK(report.slopes[0].second.degenerate);
}

TEST_CASE("csv: empty report is header-only") {
    harness::ConvergenceReport report;
    report.config_hash = "abc";
    const std::string path = temp_path("qsplit_empty.csv");
    harness::emit_csv(report, path);
    CHECK(slurp(path) == "config_hash,policy,tau,norm,max_err,mean_err,std_err,subflow_evals\n");
}

TEST_CASE("csv: one-row and full-report round trips") {
    const auto report = sample_report(2);
    const std::string path = temp_path("qsplit_report.csv");
    harness::emit_csv(report, path);
    const auto back = harness::read_csv(path);
    CHECK(back.config_hash == report.config_hash);
    REQUIRE(back.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].policy == report.rows[i].policy);
        CHECK(back.rows[i].norm == report.rows[i].norm);
        CHECK(back.rows[i].tau == report.rows[i].tau);  // %.17g round-trips exactly
        CHECK(back.rows[i].max_err == report.rows[i].max_err);
        CHECK(back.rows[i].subflow_evals == report.rows[i].subflow_evals);
    }

    harness::ConvergenceReport single;
    single.config_hash = "1";
    single.rows.push_back(report.rows[0]);
    const std::string path1 = temp_path("qsplit_single.csv");
    harness::emit_csv(single, path1);
    std::ifstream in(path1);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 2);
    CHECK(harness::read_csv(path1).rows.size() == 1);
}

TEST_CASE("csv: emission is byte-deterministic") {
    const auto report = sample_report(2);
    const std::string a = temp_path("qsplit_det_a.csv");
    const std::string b = temp_path("qsplit_det_b.csv");
    harness::emit_csv(report, a);
    harness::emit_csv(report, b);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("svg: structure, legend, and well-formedness") {
    const auto one = sample_report(1);
    const std::string path1 = temp_path("qsplit_one.svg");
    harness::emit_svg(one, path1);
    const std::string svg1 = slurp(path1);
    CHECK(count_occurrences(svg1, "<polyline") == 1);
    CHECK(count_occurrences(svg1, "stroke-dasharray") == 6);  // 3 plot lines + 3 legend keys
    CHECK(svg1.find("slope 1.5") != std::string::npos);
    CHECK(well_formed_xml(svg1));

    const auto two = sample_report(2);
    const std::string path2 = temp_path("qsplit_two.svg");
    harness::emit_svg(two, path2);
    const std::string svg2 = slurp(path2);
    CHECK(count_occurrences(svg2, "<polyline") == 2);
    CHECK(svg2.find("qr (l2)") != std::string::npos);
    CHECK(svg2.find("rand (l2)") != std::string::npos);
    CHECK(well_formed_xml(svg2));

    harness::ConvergenceReport empty;
    CHECK_THROWS_AS(harness::emit_svg(empty, temp_path("qsplit_none.svg")),
                    std::invalid_argument);

    // Degenerate ranges: a single row still renders well-formed output.
    harness::ConvergenceReport single;
    single.config_hash = "2";
    single.rows.push_back(sample_report(1).rows[0]);
    const std::string path3 = temp_path("qsplit_single_row.svg");
    harness::emit_svg(single, path3);
    CHECK(well_formed_xml(slurp(path3)));
}

TEST_CASE("tau list parsing") {
    const auto range = harness::parse_tau_list("2^-4..2^-8");
    REQUIRE(range.size() == 5);
    CHECK(range.front() == 0.0625);
    CHECK(range.back() == doctest::Approx(1.0 / 256.0));
    for (std::size_t i = 1; i < range.size(); ++i) CHECK(range[i] < range[i - 1]);

    const auto list = harness::parse_tau_list("0.5,2^-2");
    CHECK(list == std::vector<double>{0.5, 0.25});

    CHECK_THROWS_AS(harness::parse_tau_list("abc"), std::invalid_argument);
    CHECK_THROWS_AS(harness::parse_tau_list("0.3..0.1"), std::invalid_argument);
}

TEST_CASE("config: validation catches the documented misuses") {
    harness::ExperimentConfig cfg;
    cfg.backend = harness::Backend::Linear;
    cfg.taus = {0.25, 0.125};
    cfg.policies = {"qr"};
    cfg.validate();

    auto bad = cfg;
    bad.taus = {0.3, 0.1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.taus = {0.125, 0.25};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.policies = {"qr", "qr"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.policies = {"sobol"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.norms = {"w12"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // linear is l2-only
    bad = cfg;
    bad.ensemble = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    harness::ExperimentConfig ac;
    ac.backend = harness::Backend::AllenCahn;
    ac.taus = {0.25, 0.125};
    ac.policies = {"qr"};
    ac.norms = {"l2", "w12"};
    ac.tau_ref = 0x1p-8;
    ac.validate();
    auto bad_ac = ac;
    bad_ac.tau_ref = 0.5;  // larger than the smallest tau
    CHECK_THROWS_AS(bad_ac.validate(), std::invalid_argument);
    bad_ac = ac;
    bad_ac.grid_size = 48;
    CHECK_THROWS_AS(bad_ac.validate(), std::invalid_argument);
    bad_ac = ac;
    bad_ac.flow = "vortex";
    CHECK_THROWS_AS(bad_ac.validate(), std::invalid_argument);
    bad_ac = ac;
    bad_ac.nu = 0.0;
    CHECK_THROWS_AS(bad_ac.validate(), std::invalid_argument);
}

TEST_CASE("config: canonical text and hash are stable and seed-sensitive") {
    harness::ExperimentConfig cfg;
    cfg.backend = harness::Backend::Linear;
    cfg.taus = {0.25, 0.125};
    cfg.policies = {"qr", "rand"};
    cfg.seed = 7;
    const std::string h1 = cfg.hash();
    CHECK(h1 == cfg.hash());
    CHECK(h1.size() == 16);
    auto other = cfg;
    other.seed = 8;
    CHECK(other.hash() != h1);
    CHECK(cfg.canonical_text().find("seed=7") != std::string::npos);
}

}  // TEST_SUITE
