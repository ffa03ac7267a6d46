#pragma once

#include "qsplit/config.hpp"
#include "qsplit/linear.hpp"
#include "qsplit/report.hpp"

namespace qsplit::harness {

/// Runs the configured convergence sweep: for each (policy, tau) a single
/// deterministic run (qr, lie, strang) or an ensemble of seeded runs (rand),
/// aggregated as the max over grid times of the ensemble mean error.
/// Failed runs are recorded per row; completed rows are still reported.
ConvergenceReport run_experiment(const ExperimentConfig& config);

/// Linear-backend entry point with a caller-supplied problem instead of the
/// seeded generator (used for commuting or otherwise structured operators).
ConvergenceReport run_experiment(const ExperimentConfig& config,
                                 const linear::LinearProblem& problem);

/// Task parallelism cap: QSPLIT_THREADS if set, hardware concurrency
/// otherwise, at least 1. Parallel and serial execution produce identical
/// reports; only wall time changes.
int thread_cap();

}  // namespace qsplit::harness
