#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qsplit::harness {

/// One (policy, tau, norm) result row.
///
/// max_err is the headline error: the max over grid times of the ensemble
/// mean error at each time (for a single deterministic run this reduces to
/// the plain max over time). mean_err and std_err are the mean and sample
/// standard deviation over runs of the per-run max error.
struct ReportRow {
    std::string policy;
    double tau = 0.0;
    std::string norm;
    double max_err = 0.0;
    double mean_err = 0.0;
    double std_err = 0.0;
    std::int64_t subflow_evals = 0;
    bool failed = false;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;   // RMS misfit in log space
    bool degenerate = false; // errors at the noise floor; no fit attempted
};

/// Errors at or below this are treated as the arithmetic noise floor and
/// excluded from slope fitting.
inline constexpr double kDegenerateFloor = 1e-12;

struct ConvergenceReport {
    std::string config_hash;
    std::vector<ReportRow> rows;
    /// (policy, norm) -> least-squares fit of log(max_err) against log(tau).
    std::vector<std::pair<std::pair<std::string, std::string>, SlopeFit>> slopes;
    std::optional<double> self_convergence;  // reference gate gap, when run
    std::vector<std::string> failures;       // messages for failed rows

    bool any_failed() const;
    const SlopeFit* slope_for(const std::string& policy, const std::string& norm) const;
};

/// Ordinary least squares on (log tau, log error). Rejects nonpositive
/// values and fewer than two points.
SlopeFit fit_slope(std::span<const std::pair<double, double>> tau_error);

/// Fills report.slopes from the rows, marking (policy, norm) groups whose
/// errors touch the noise floor as degenerate.
void compute_slopes(ConvergenceReport& report);

/// CSV schema: config_hash,policy,tau,norm,max_err,mean_err,std_err,subflow_evals.
/// Rows are written in stored order (policy in config order, tau descending).
void emit_csv(const ConvergenceReport& report, const std::string& path);
ConvergenceReport read_csv(const std::string& path);

/// Self-contained log-log SVG: one polyline per (policy, norm), dashed
/// reference lines of slopes 1, 1.5 and 2 anchored to the data range, legend.
void emit_svg(const ConvergenceReport& report, const std::string& path);

}  // namespace qsplit::harness
