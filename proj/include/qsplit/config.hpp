#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qsplit::harness {

enum class Backend { Linear, AllenCahn };

/// Fully resolved experiment description. The canonical text of this struct
/// (and hence its content hash) is what makes runs reproducible and rows
/// traceable; both CLI flags and config files resolve into it.
struct ExperimentConfig {
    Backend backend = Backend::Linear;

    // linear backend
    int dimension = 20;       // m
    int operator_count = 2;   // p

    // allen-cahn backend
    int grid_size = 64;
    double nu = 1.0;
    std::string flow = "none";  // none | shear (three-operator)
    double tau_ref = 0x1p-16;
    int advection_substeps = 1;
    bool self_check = false;  // run the tau_ref vs tau_ref/2 gate

    // common
    double horizon = 1.0;
    std::vector<double> taus;                   // strictly decreasing powers of two
    std::vector<std::string> policies;          // qr | rand | lie | strang
    int ensemble = 1;                           // randomized runs per tau
    std::uint64_t seed = 0;
    int base = 2;                               // quasi-random driver base
    std::int64_t offset = 0;                    // quasi-random driver offset n0
    std::vector<std::string> norms = {"l2"};    // l2 | w12 (w12: allen-cahn only)

    void validate() const;  // throws std::invalid_argument
    std::string canonical_text() const;
    std::string hash() const;  // FNV-1a 64 of the canonical text, 16 hex chars
};

/// Parses "2^-4..2^-8" (inclusive dyadic range), or a comma list of tokens,
/// each "2^q" or a plain decimal.
std::vector<double> parse_tau_list(const std::string& text);
double parse_tau_token(const std::string& token);

std::string fnv1a_hex(const std::string& text);

}  // namespace qsplit::harness
