#include "qsplit/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qsplit::harness {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool is_power_of_two_value(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return false;
    int exponent = 0;
    return std::frexp(v, &exponent) == 0.5;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

double parse_tau_token(const std::string& token) {
    const std::string t = trim(token);
    if (t.empty()) throw std::invalid_argument("parse_tau_token: empty token");
    if (t.rfind("2^", 0) == 0) {
        std::size_t used = 0;
        const int exponent = std::stoi(t.substr(2), &used);
        if (used != t.size() - 2)
            throw std::invalid_argument("parse_tau_token: bad exponent in '" + t + "'");
        return std::ldexp(1.0, exponent);
    }
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size())
        throw std::invalid_argument("parse_tau_token: bad value '" + t + "'");
    return v;
}

std::vector<double> parse_tau_list(const std::string& text) {
    std::vector<double> out;
    const auto range_pos = text.find("..");
    if (range_pos != std::string::npos) {
        const double first = parse_tau_token(text.substr(0, range_pos));
        const double last = parse_tau_token(text.substr(range_pos + 2));
        if (!is_power_of_two_value(first) || !is_power_of_two_value(last))
            throw std::invalid_argument("parse_tau_list: range endpoints must be powers of two");
        int qf = 0, ql = 0;
        std::frexp(first, &qf);
        std::frexp(last, &ql);
        // frexp gives v = 0.5 * 2^e, so the dyadic exponent is e - 1.
        --qf;
        --ql;
        if (qf < ql) std::swap(qf, ql);
        for (int q = qf; q >= ql; --q) out.push_back(std::ldexp(1.0, q));
        return out;
    }
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) out.push_back(parse_tau_token(token));
    if (out.empty()) throw std::invalid_argument("parse_tau_list: no values in '" + text + "'");
    return out;
}

void ExperimentConfig::validate() const {
    if (taus.empty()) throw std::invalid_argument("config: no tau values");
    for (double tau : taus)
        if (!is_power_of_two_value(tau))
            throw std::invalid_argument("config: tau values must be powers of two, got " +
                                        format_double(tau));
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] < taus[i - 1]))
            throw std::invalid_argument("config: tau values must be strictly decreasing");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon must be > 0");

    if (policies.empty()) throw std::invalid_argument("config: no policies");
    const std::set<std::string> known = {"qr", "rand", "lie", "strang"};
    std::set<std::string> seen;
    for (const auto& p : policies) {
        if (!known.count(p)) throw std::invalid_argument("config: unknown policy '" + p + "'");
        if (!seen.insert(p).second)
            throw std::invalid_argument("config: duplicate policy '" + p + "'");
    }
    if (ensemble < 1) throw std::invalid_argument("config: ensemble must be >= 1");
    if (base < 2) throw std::invalid_argument("config: base must be >= 2");
    if (offset < 0) throw std::invalid_argument("config: offset must be >= 0");

    if (norms.empty()) throw std::invalid_argument("config: no norms");
    for (const auto& n : norms) {
        if (n != "l2" && n != "w12")
            throw std::invalid_argument("config: unknown norm '" + n + "'");
        if (backend == Backend::Linear && n != "l2")
            throw std::invalid_argument("config: the linear backend reports the l2 norm only");
    }

    if (backend == Backend::Linear) {
        if (dimension < 2) throw std::invalid_argument("config: dimension must be >= 2");
        if (operator_count < 2)
            throw std::invalid_argument("config: operator count must be >= 2");
    } else {
        if (grid_size < 8 || (grid_size & (grid_size - 1)) != 0)
            throw std::invalid_argument("config: grid size must be a power of two >= 8");
        if (!(nu > 0.0)) throw std::invalid_argument("config: nu must be > 0");
        if (flow != "none" && flow != "shear")
            throw std::invalid_argument("config: flow must be none or shear");
        if (!is_power_of_two_value(tau_ref))
            throw std::invalid_argument("config: tau_ref must be a power of two");
        if (!(tau_ref <= taus.back()))
            throw std::invalid_argument("config: tau_ref must not exceed the smallest tau");
        if (advection_substeps < 1)
            throw std::invalid_argument("config: advection substeps must be >= 1");
    }
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream out;
    out << "backend=" << (backend == Backend::Linear ? "linear" : "allen-cahn") << '\n';
    if (backend == Backend::Linear) {
        out << "m=" << dimension << '\n';
        out << "p=" << operator_count << '\n';
    } else {
        out << "grid=" << grid_size << '\n';
        out << "nu=" << format_double(nu) << '\n';
        out << "flow=" << flow << '\n';
        out << "tau_ref=" << format_double(tau_ref) << '\n';
        out << "substeps=" << advection_substeps << '\n';
    }
    out << "T=" << format_double(horizon) << '\n';
    out << "taus=";
    for (std::size_t i = 0; i < taus.size(); ++i)
        out << (i ? "," : "") << format_double(taus[i]);
    out << '\n';
    out << "policies=";
    for (std::size_t i = 0; i < policies.size(); ++i) out << (i ? "," : "") << policies[i];
    out << '\n';
    out << "ensemble=" << ensemble << '\n';
    out << "seed=" << seed << '\n';
    out << "base=" << base << '\n';
    out << "offset=" << offset << '\n';
    out << "norms=";
    for (std::size_t i = 0; i < norms.size(); ++i) out << (i ? "," : "") << norms[i];
    out << '\n';
    return out.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_text()); }

}  // namespace qsplit::harness
