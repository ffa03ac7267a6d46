#include "qsplit/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <thread>

#include "qsplit/allencahn.hpp"
#include "qsplit/splitting.hpp"

namespace qsplit::harness {

int thread_cap() {
    if (const char* env = std::getenv("QSPLIT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct TaskResult {
    splitting::ErrorTrace trace;
    bool failed = false;
    std::string message;
};

splitting::Policy make_policy(const ExperimentConfig& cfg, const std::string& token, int p,
                              std::size_t tau_index, int member) {
    if (token == "lie")
        return splitting::Policy::fixed_lie(ordering::Permutation::identity(p));
    if (token == "strang") return splitting::Policy::strang();
    if (token == "qr") return splitting::Policy::quasi_random(cfg.base, cfg.offset);
    const std::uint64_t run_seed = rng::derive_seed(
        cfg.seed, rng::StreamLabel::ensemble,
        (static_cast<std::uint64_t>(tau_index) << 32) | static_cast<std::uint64_t>(member));
    return splitting::Policy::randomized(run_seed);
}

/// Aggregates one (policy, tau) group of member traces into report rows,
/// one per norm. The headline error is the max over grid times of the
/// ensemble mean at each time (not the mean of per-run maxima; the two
/// differ and the former is the reported quantity).
void append_rows(ConvergenceReport& report, const ExperimentConfig& cfg,
                 const std::string& policy, double tau,
                 const std::vector<TaskResult>& members) {
    bool failed = false;
    for (const auto& m : members) {
        if (m.failed) {
            failed = true;
            report.failures.push_back("policy=" + policy + " tau=" + std::to_string(tau) +
                                      ": " + m.message);
        }
    }
    for (std::size_t ni = 0; ni < cfg.norms.size(); ++ni) {
        ReportRow row;
        row.policy = policy;
        row.tau = tau;
        row.norm = cfg.norms[ni];
        if (failed) {
            row.failed = true;
            row.max_err = row.mean_err = row.std_err = kNan;
            row.subflow_evals = 0;
        } else {
            const std::size_t count = members[0].trace.errors[ni].size();
            const double member_count = static_cast<double>(members.size());
            double headline = 0.0;
            for (std::size_t k = 0; k < count; ++k) {
                double mean = 0.0;
                for (const auto& m : members) mean += m.trace.errors[ni][k];
                headline = std::max(headline, mean / member_count);
            }
            double mean_max = 0.0;
            for (const auto& m : members) mean_max += m.trace.max_error[ni];
            mean_max /= member_count;
            double var = 0.0;
            if (members.size() > 1) {
                for (const auto& m : members) {
                    const double d = m.trace.max_error[ni] - mean_max;
                    var += d * d;
                }
                var /= member_count - 1.0;
            }
            row.max_err = headline;
            row.mean_err = mean_max;
            row.std_err = std::sqrt(var);
            row.subflow_evals = members[0].trace.subflow_evals;
        }
        report.rows.push_back(row);
    }
}

struct TaskKey {
    std::size_t policy_index;
    std::size_t tau_index;
    int member;
};

int members_for(const ExperimentConfig& cfg, const std::string& token) {
    // Deterministic policies need (and get) exactly one run.
    return token == "rand" ? cfg.ensemble : 1;
}

std::vector<TaskKey> build_tasks(const ExperimentConfig& cfg) {
    std::vector<TaskKey> tasks;
    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi)
        for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti)
            for (int m = 0; m < members_for(cfg, cfg.policies[pi]); ++m)
                tasks.push_back({pi, ti, m});
    return tasks;
}

template <class RunTask>
ConvergenceReport orchestrate(const ExperimentConfig& cfg, RunTask&& run_task) {
    ConvergenceReport report;
    report.config_hash = cfg.hash();
    const std::vector<TaskKey> tasks = build_tasks(cfg);
    std::vector<TaskResult> results(tasks.size());
    parallel_for(tasks.size(), thread_cap(), [&](std::size_t i) {
        results[i] = run_task(cfg.policies[tasks[i].policy_index], cfg.taus[tasks[i].tau_index],
                              tasks[i].tau_index, tasks[i].member);
    });
    std::size_t cursor = 0;
    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
        for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti) {
            const int count = members_for(cfg, cfg.policies[pi]);
            std::vector<TaskResult> group(results.begin() + cursor,
                                          results.begin() + cursor + count);
            cursor += static_cast<std::size_t>(count);
            append_rows(report, cfg, cfg.policies[pi], cfg.taus[ti], group);
        }
    }
    compute_slopes(report);
    return report;
}

// ---------------------------------------------------------------------------
// Linear backend
// ---------------------------------------------------------------------------

TaskResult run_linear_task(const ExperimentConfig& cfg, const linear::LinearProblem& problem,
                           const std::string& token, double tau, std::size_t tau_index,
                           int member) {
    TaskResult result;
    try {
        const int p = problem.operator_count();
        std::vector<splitting::Flow<linear::Vector>> flows;
        for (int j = 0; j < p; ++j) {
            auto cache = std::make_shared<std::map<double, linear::Matrix>>();
            linear::Matrix a = problem.operators[static_cast<std::size_t>(j)];
            flows.push_back([cache, a](const linear::Vector& u, double t) {
                auto it = cache->find(t);
                if (it == cache->end()) it = cache->emplace(t, linear::expm(a, t)).first;
                return linear::Vector(it->second * u);
            });
        }
        splitting::Scheme<linear::Vector> scheme;
        scheme.flows = std::move(flows);
        scheme.policy = make_policy(cfg, token, p, tau_index, member);
        scheme.tau = tau;
        scheme.horizon = cfg.horizon;

        struct ExactRef {
            linear::Matrix prop;
            linear::Vector current;
            std::int64_t index = 0;
            double tau = 0.0;
        };
        auto ref = std::make_shared<ExactRef>();
        ref->prop = linear::expm(problem.operator_sum(), tau);
        ref->current = problem.initial;
        ref->tau = tau;

        splitting::RunContext<linear::Vector> ctx;
        ctx.reference = [ref](double t) -> const linear::Vector& {
            const auto target = static_cast<std::int64_t>(std::llround(t / ref->tau));
            while (ref->index < target) {
                ref->current = ref->prop * ref->current;
                ++ref->index;
            }
            return ref->current;
        };
        ctx.norms = {{"l2", [](const linear::Vector& u, const linear::Vector& r) {
                          return (u - r).norm();
                      }}};
        ctx.finite = [](const linear::Vector& u) { return u.allFinite(); };
        result.trace = splitting::run(scheme, problem.initial, ctx);
    } catch (const std::exception& e) {
        result.failed = true;
        result.message = e.what();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Allen-Cahn backend
// ---------------------------------------------------------------------------

std::int64_t grid_steps(double horizon, double tau) {
    return static_cast<std::int64_t>(std::ceil(horizon / tau - 1e-9));
}

TaskResult run_ac_task(const ExperimentConfig& cfg, const allencahn::SpectralGrid& grid,
                       const allencahn::ACProblem& problem,
                       const std::shared_ptr<const allencahn::ReferenceTrajectory>& reference,
                       const std::string& token, double tau, std::size_t tau_index,
                       int member) {
    using allencahn::Field;
    TaskResult result;
    try {
        allencahn::SpectralWorkspace ws(grid);
        const int p = problem.velocity ? 3 : 2;

        auto heat_cache = std::make_shared<std::map<double, allencahn::HeatOperator>>();
        splitting::Flow<Field> heat = [heat_cache, &ws, grid, nu = problem.nu](
                                          const Field& u, double t) {
            auto it = heat_cache->find(t);
            if (it == heat_cache->end())
                it = heat_cache->emplace(t, allencahn::HeatOperator(grid, nu, t)).first;
            return it->second.apply(u, ws);
        };
        splitting::Flow<Field> reaction = [](const Field& u, double t) {
            return allencahn::reaction_flow(u, t);
        };

        std::vector<splitting::Flow<Field>> flows;
        if (problem.velocity) {
            splitting::Flow<Field> advect = [&ws, &problem, sub = cfg.advection_substeps](
                                                const Field& u, double t) {
                return allencahn::advection_flow(u, *problem.velocity, t, ws, sub);
            };
            // Subflow labels: 1 = advection, 2 = diffusion, 3 = reaction.
            flows = {advect, heat, reaction};
        } else {
            // Subflow labels: 1 = diffusion, 2 = reaction.
            flows = {heat, reaction};
        }

        splitting::Scheme<Field> scheme;
        scheme.flows = std::move(flows);
        scheme.policy = make_policy(cfg, token, p, tau_index, member);
        scheme.tau = tau;
        scheme.horizon = cfg.horizon;

        splitting::RunContext<Field> ctx;
        ctx.reference = [reference](double t) -> const Field& { return reference->state_at(t); };
        for (const auto& token_norm : cfg.norms) {
            const auto kind =
                token_norm == "l2" ? allencahn::NormKind::L2 : allencahn::NormKind::W12;
            ctx.norms.emplace_back(token_norm, [&ws, kind](const Field& u, const Field& r) {
                return allencahn::discrete_norm(u - r, kind, ws);
            });
        }
        ctx.finite = [](const Field& u) { return u.finite(); };
        result.trace = splitting::run(scheme, problem.initial, ctx);
    } catch (const std::exception& e) {
        result.failed = true;
        result.message = e.what();
    }
    return result;
}

ConvergenceReport run_allencahn(const ExperimentConfig& cfg) {
    const allencahn::SpectralGrid grid(cfg.grid_size, 2.0 * 3.14159265358979323846);
    allencahn::ACProblem problem;
    problem.nu = cfg.nu;
    problem.horizon = cfg.horizon;
    problem.initial = allencahn::benchmark_initial_condition(grid);
    if (cfg.flow == "shear") problem.velocity = allencahn::Velocity::shear(grid);

    // Union of all per-run grid times: multiples of the smallest tau up to
    // the latest run end (the final step may overshoot the horizon).
    const double tau_min = cfg.taus.back();
    std::int64_t max_units = 0;
    for (double tau : cfg.taus) {
        const std::int64_t units =
            grid_steps(cfg.horizon, tau) * std::llround(tau / tau_min);
        max_units = std::max(max_units, units);
    }
    std::vector<double> sample_times;
    sample_times.reserve(static_cast<std::size_t>(max_units) + 1);
    for (std::int64_t k = 0; k <= max_units; ++k)
        sample_times.push_back(static_cast<double>(k) * tau_min);

    auto reference = std::make_shared<const allencahn::ReferenceTrajectory>(
        problem, cfg.tau_ref, grid, sample_times);

    ConvergenceReport report = orchestrate(
        cfg, [&](const std::string& token, double tau, std::size_t tau_index, int member) {
            return run_ac_task(cfg, grid, problem, reference, token, tau, tau_index, member);
        });

    if (cfg.self_check) {
        const double tau_max = cfg.taus.front();
        std::vector<double> probes;
        const std::int64_t steps = grid_steps(cfg.horizon, tau_max);
        for (std::int64_t k = 0; k <= steps; ++k)
            probes.push_back(static_cast<double>(k) * tau_max);
        report.self_convergence = allencahn::self_convergence_gap(problem, cfg.tau_ref, grid, probes);
    }
    return report;
}

}  // namespace

ConvergenceReport run_experiment(const ExperimentConfig& cfg,
                                 const linear::LinearProblem& problem) {
    cfg.validate();
    if (cfg.backend != Backend::Linear)
        throw std::invalid_argument("run_experiment: problem overload is linear-only");
    return orchestrate(cfg, [&](const std::string& token, double tau, std::size_t tau_index,
                                int member) {
        return run_linear_task(cfg, problem, token, tau, tau_index, member);
    });
}

ConvergenceReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.backend == Backend::Linear) {
        const linear::LinearProblem problem =
            linear::generate_problem(cfg.dimension, cfg.operator_count, cfg.seed, cfg.horizon);
        return run_experiment(cfg, problem);
    }
    return run_allencahn(cfg);
}

}  // namespace qsplit::harness
