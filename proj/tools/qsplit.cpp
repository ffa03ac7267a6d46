#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsplit/config.hpp"
#include "qsplit/experiment.hpp"
#include "qsplit/lowdisc.hpp"
#include "qsplit/report.hpp"

namespace {

using namespace qsplit;

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

int run_seq(int base, std::int64_t count, std::int64_t offset, const std::string& emit,
            double tau, const std::vector<double>& orders, const std::string& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");

    if (emit == "points" || emit == "signs") {
        const auto seq =
            lowdisc::sign_sequence(lowdisc::RadicalInverseSequence(base, offset), count);
        lowdisc::RadicalInverseSequence points(base, offset);
        out << "n,z,xi,S_n\n";
        char buf[40];
        for (std::int64_t i = 0; i < count; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", points.next());
            out << offset + i + 1 << ',' << buf << ',' << seq.signs[static_cast<std::size_t>(i)]
                << ',' << seq.partial_sums[static_cast<std::size_t>(i + 1)] << '\n';
        }
    } else if (emit == "discrepancy") {
        if (count < 2) throw std::invalid_argument("discrepancy sweep needs --count >= 2");
        const auto sweep = lowdisc::discrepancy_sweep(base, offset, count);
        out << "N,Dstar,bound\n";
        char buf[40], buf2[40];
        for (std::int64_t n = 2; n <= count; ++n) {
            std::snprintf(buf, sizeof(buf), "%.17g", sweep[static_cast<std::size_t>(n - 1)]);
            std::snprintf(buf2, sizeof(buf2), "%.17g", lowdisc::discrepancy_bound(base, n));
            out << n << ',' << buf << ',' << buf2 << '\n';
        }
    } else {  // decomposition
        const auto signs =
            lowdisc::sign_sequence(lowdisc::RadicalInverseSequence(base, offset), count);
        const double effective_tau = tau > 0.0 ? tau : 1.0 / static_cast<double>(count);
        const auto decomp = lowdisc::measure_decomposition(signs, effective_tau, orders);
        out << "kind,a,b\n";
        for (std::int64_t i = 0; i < decomp.pair_count; ++i)
            out << "pair," << decomp.plus_support[static_cast<std::size_t>(i)] << ','
                << decomp.minus_support[static_cast<std::size_t>(i)] << '\n';
        for (std::int64_t idx : decomp.residual_indices) out << "residual," << idx << ",\n";
        out << "tv," << decomp.tv_residual << ",\n";
        char buf[40];
        for (const auto& [p, w] : decomp.wasserstein) {
            std::snprintf(buf, sizeof(buf), "%.17g", w);
            out << "w," << p << ',' << buf << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + out_path + "'");
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int finish_experiment(const harness::ExperimentConfig& cfg, const std::string& out_path,
                      const std::string& svg_path) {
    const harness::ConvergenceReport report = harness::run_experiment(cfg);
    harness::emit_csv(report, out_path);
    std::cout << "config " << report.config_hash << ": wrote " << report.rows.size()
              << " rows to " << out_path << "\n";
    if (report.self_convergence)
        std::cout << "reference self-convergence gap: " << *report.self_convergence << "\n";
    for (const auto& [key, fit] : report.slopes) {
        std::cout << "slope " << key.first << " (" << key.second << "): ";
        if (fit.degenerate)
            std::cout << "degenerate (errors at noise floor)\n";
        else
            std::cout << fit.slope << " (residual " << fit.residual << ")\n";
    }
    if (!svg_path.empty()) {
        try {
            harness::emit_svg(report, svg_path);
            std::cout << "wrote " << svg_path << "\n";
        } catch (const std::exception& e) {
            std::cerr << "svg not written: " << e.what() << "\n";
        }
    }
    for (const auto& msg : report.failures) std::cerr << "run failed: " << msg << "\n";
    return report.any_failed() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsplit: quasi-random operator splitting experiments"};
    app.set_config("--config", "", "flat key=value config file (section per subcommand)");
    app.require_subcommand(0, 1);

    // --- seq ---------------------------------------------------------------
    auto* seq = app.add_subcommand("seq", "radical-inverse sequence diagnostics");
    int seq_base = 2;
    std::int64_t seq_count = 0, seq_offset = 0;
    std::string seq_emit = "points", seq_out;
    double seq_tau = 0.0;
    std::vector<double> seq_orders = {1.0};
    seq->add_option("--base,-R", seq_base, "sequence base R >= 2");
    seq->add_option("--count,-N", seq_count, "number of points")->required();
    seq->add_option("--offset", seq_offset, "start index offset n0");
    seq->add_option("--emit", seq_emit, "points|signs|discrepancy|decomposition")
        ->check(CLI::IsMember({"points", "signs", "discrepancy", "decomposition"}));
    seq->add_option("--tau", seq_tau, "time step for decomposition (default 1/N)");
    seq->add_option("--orders", seq_orders, "Wasserstein orders p >= 1");
    seq->add_option("--out", seq_out, "output CSV path")->required();

    // --- shared experiment options ------------------------------------------
    std::string lin_taus = "2^-4..2^-8", lin_policies = "qr,rand,lie,strang", lin_out, lin_svg;
    int lin_m = 20, lin_p = 3, lin_ensemble = 1000;
    double lin_T = 1.0;
    std::uint64_t lin_seed = 0;
    int lin_base = 2;
    std::int64_t lin_offset = 0;

    auto* lin = app.add_subcommand("linear", "bounded linear convergence sweep");
    lin->add_option("--m", lin_m, "matrix dimension");
    lin->add_option("--p", lin_p, "operator count");
    lin->add_option("--T", lin_T, "horizon");
    lin->add_option("--taus", lin_taus, "tau list, e.g. 2^-4..2^-8");
    lin->add_option("--policies", lin_policies, "comma list of qr,rand,lie,strang");
    lin->add_option("--ensemble", lin_ensemble, "randomized runs per tau");
    lin->add_option("--seed", lin_seed, "base seed");
    lin->add_option("--base", lin_base, "quasi-random driver base");
    lin->add_option("--offset", lin_offset, "quasi-random driver offset");
    lin->add_option("--out", lin_out, "output CSV path")->required();
    lin->add_option("--svg", lin_svg, "optional SVG plot path");

    std::string ac_taus = "2^-8..2^-13", ac_policies = "qr,rand", ac_flow = "none",
                ac_norms = "l2,w12", ac_tau_ref = "2^-16", ac_out, ac_svg;
    int ac_grid = 64, ac_ensemble = 100, ac_substeps = 1;
    double ac_nu = 1.0, ac_T = 1.0;
    std::uint64_t ac_seed = 0;
    int ac_base = 2;
    std::int64_t ac_offset = 0;
    bool ac_self_check = false;

    auto* ac = app.add_subcommand("allen-cahn", "spectral Allen-Cahn convergence sweep");
    ac->add_option("--grid", ac_grid, "points per dimension (power of two)");
    ac->add_option("--nu", ac_nu, "diffusion coefficient");
    ac->add_option("--T", ac_T, "horizon");
    ac->add_option("--taus", ac_taus, "tau list, e.g. 2^-8..2^-13");
    ac->add_option("--tau-ref", ac_tau_ref, "reference solver step, e.g. 2^-16");
    ac->add_option("--policies", ac_policies, "comma list of qr,rand,lie,strang");
    ac->add_option("--ensemble", ac_ensemble, "randomized runs per tau");
    ac->add_option("--flow", ac_flow, "none|shear (shear adds the advection operator)")
        ->check(CLI::IsMember({"none", "shear"}));
    ac->add_option("--norms", ac_norms, "comma list of l2,w12");
    ac->add_option("--substeps", ac_substeps, "RK4 substeps per advection subflow");
    ac->add_flag("--self-check", ac_self_check, "run the tau_ref vs tau_ref/2 gate");
    ac->add_option("--seed", ac_seed, "base seed");
    ac->add_option("--base", ac_base, "quasi-random driver base");
    ac->add_option("--offset", ac_offset, "quasi-random driver offset");
    ac->add_option("--out", ac_out, "output CSV path")->required();
    ac->add_option("--svg", ac_svg, "optional SVG plot path");

    // --- report --------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "re-plot an existing CSV");
    std::string rep_in, rep_svg;
    rep->add_option("--in", rep_in, "input CSV path")->required();
    rep->add_option("--svg", rep_svg, "output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*seq) return run_seq(seq_base, seq_count, seq_offset, seq_emit, seq_tau,
                                 seq_orders, seq_out);
        if (*lin) {
            harness::ExperimentConfig cfg;
            cfg.backend = harness::Backend::Linear;
            cfg.dimension = lin_m;
            cfg.operator_count = lin_p;
            cfg.horizon = lin_T;
            cfg.taus = harness::parse_tau_list(lin_taus);
            cfg.policies = split_tokens(lin_policies);
            cfg.ensemble = lin_ensemble;
            cfg.seed = lin_seed;
            cfg.base = lin_base;
            cfg.offset = lin_offset;
            cfg.norms = {"l2"};
            return finish_experiment(cfg, lin_out, lin_svg);
        }
        if (*ac) {
            harness::ExperimentConfig cfg;
            cfg.backend = harness::Backend::AllenCahn;
            cfg.grid_size = ac_grid;
            cfg.nu = ac_nu;
            cfg.horizon = ac_T;
            cfg.taus = harness::parse_tau_list(ac_taus);
            cfg.tau_ref = harness::parse_tau_token(ac_tau_ref);
            cfg.policies = split_tokens(ac_policies);
            cfg.ensemble = ac_ensemble;
            cfg.flow = ac_flow;
            cfg.norms = split_tokens(ac_norms);
            cfg.advection_substeps = ac_substeps;
            cfg.self_check = ac_self_check;
            cfg.seed = ac_seed;
            cfg.base = ac_base;
            cfg.offset = ac_offset;
            return finish_experiment(cfg, ac_out, ac_svg);
        }
        if (*rep) {
            const harness::ConvergenceReport report = harness::read_csv(rep_in);
            harness::emit_svg(report, rep_svg);
            std::cout << "wrote " << rep_svg << "\n";
            return 0;
        }
        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
