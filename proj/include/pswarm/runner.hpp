#pragma once

#include <algorithm>
#include <chrono>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pswarm/error_metric.hpp"
#include "pswarm/propagator.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Execution layouts compared by the benchmark harness:
///  independent          - one singleton group per trajectory
///  augmented_sequential - the whole batch as one block, one worker
///  augmented_parallel   - one block with data-parallel internals
///  grouped              - P groups dispatched over a worker pool
enum class RunMode { independent, augmented_sequential, augmented_parallel, grouped };

inline std::string to_string(RunMode mode) {
    switch (mode) {
    case RunMode::independent: return "independent";
    case RunMode::augmented_sequential: return "augmented_sequential";
    case RunMode::augmented_parallel: return "augmented_parallel";
    case RunMode::grouped: return "grouped";
    }
    return "unknown";
}

inline RunMode parse_run_mode(const std::string& name) {
    if (name == "independent") return RunMode::independent;
    if (name == "augmented_sequential") return RunMode::augmented_sequential;
    if (name == "augmented" || name == "augmented_parallel") return RunMode::augmented_parallel;
    if (name == "grouped") return RunMode::grouped;
    throw ParseError("unknown run mode '" + name + "'");
}

struct RunOutcome {
    PropagationResult result;
    double wall_time_s = 0.0;
};

/// Grouping plan implied by a run mode.
inline GroupingPlan grouping_for_mode(Index batch, RunMode mode, Index p_groups) {
    switch (mode) {
    case RunMode::independent: return split_groups(batch, batch);
    case RunMode::augmented_sequential:
    case RunMode::augmented_parallel: return split_groups(batch, 1);
    case RunMode::grouped: return split_groups(batch, std::clamp<Index>(p_groups, 1, batch));
    }
    throw InvalidPlanError("grouping_for_mode: invalid mode");
}

namespace detail {

/// Independent runs model the standalone workflow: every trajectory gets the
/// whole pipeline to itself (node sampling, ephemeris interpolation, warm
/// start, its own convergence loop). Runs may be spread over workers; each
/// one stays single-threaded inside.
inline PropagationResult run_independent(std::span<const StateVector> states,
                                         const PropagationConfig& config,
                                         const SegmentPlan& segments, unsigned workers) {
    const Index n_traj = static_cast<Index>(states.size());
    std::vector<PropagationResult> singles(static_cast<std::size_t>(n_traj));
    auto solve_one = [&](Index i) {
        const GroupingPlan one = split_groups(1, 1);
        singles[static_cast<std::size_t>(i)] =
            propagate(states.subspan(static_cast<std::size_t>(i), 1), one, segments, config, {});
    };
    if (workers > 1) {
        ThreadPool pool(workers);
        pool.parallel_tasks(n_traj, solve_one);
    } else {
        for (Index i = 0; i < n_traj; ++i) {
            solve_one(i);
        }
    }

    PropagationResult merged;
    merged.plan = split_groups(n_traj, n_traj);
    merged.segments = segments;
    merged.times = singles[0].times;
    merged.trajectories.reserve(static_cast<std::size_t>(n_traj));
    merged.terminal_states.reserve(static_cast<std::size_t>(n_traj));
    merged.reports.assign(static_cast<std::size_t>(segments.segments()), {});
    for (auto& seg_reports : merged.reports) {
        seg_reports.resize(static_cast<std::size_t>(n_traj));
    }
    for (Index i = 0; i < n_traj; ++i) {
        auto& single = singles[static_cast<std::size_t>(i)];
        merged.trajectories.push_back(std::move(single.trajectories[0]));
        merged.terminal_states.push_back(single.terminal_states[0]);
        for (Index seg = 0; seg < segments.segments(); ++seg) {
            merged.reports[static_cast<std::size_t>(seg)][static_cast<std::size_t>(i)] =
                std::move(single.reports[static_cast<std::size_t>(seg)][0]);
        }
        for (auto& warning : single.warnings) {
            merged.warnings.push_back("trajectory " + std::to_string(i) + ": " + warning);
        }
    }
    return merged;
}

} // namespace detail

/// Dispatches one batch through the propagator in the requested mode and
/// times the solve phase only (no file IO inside the clock).
inline RunOutcome run_batch(std::span<const StateVector> states, const PropagationConfig& config,
                            const SegmentPlan& segments, RunMode mode, unsigned workers = 1) {
    if (workers < 1) {
        throw InvalidPlanError("run_batch: need at least one worker");
    }

    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome;
    if (mode == RunMode::independent) {
        outcome.result = detail::run_independent(states, config, segments, workers);
    } else {
        const GroupingPlan plan = grouping_for_mode(static_cast<Index>(states.size()), mode,
                                                    config.p_groups);
        ExecutionPolicy exec;
        switch (mode) {
        case RunMode::independent: break;
        case RunMode::augmented_sequential: exec = {1, 1}; break;
        case RunMode::augmented_parallel: exec = {1, workers}; break;
        case RunMode::grouped: exec = {workers, 1}; break;
        }
        outcome.result = propagate(states, plan, segments, config, exec);
    }
    outcome.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

/// Max over trajectories and nodes of the relative state difference between
/// two runs (the second argument provides the normalization).
inline double max_state_discrepancy(const PropagationResult& a, const PropagationResult& b) {
    if (a.trajectories.size() != b.trajectories.size()) {
        throw ShapeError("max_state_discrepancy: different batch sizes");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        const Mat& ta = a.trajectories[i];
        const Mat& tb = b.trajectories[i];
        if (ta.rows() != tb.rows()) {
            throw ShapeError("max_state_discrepancy: different sample counts");
        }
        for (Index j = 0; j < ta.rows(); ++j) {
            const double dr = (ta.row(j).head<3>() - tb.row(j).head<3>()).norm();
            const double dv = (ta.row(j).tail<3>() - tb.row(j).tail<3>()).norm();
            const double pos = component_error(dr, tb.row(j).head<3>().norm(), ErrorMode::relative);
            const double vel = component_error(dv, tb.row(j).tail<3>().norm(), ErrorMode::relative);
            worst = std::max(worst, std::max(pos, vel));
        }
    }
    return worst;
}

struct BenchmarkRow {
    RunMode mode = RunMode::independent;
    unsigned threads = 1;
    Index groups = 1;
    double wall_time_s = 0.0;
    double speedup = 1.0;
    int max_iterations = 0;
    double max_discrepancy = 0.0;
    std::vector<int> group_iterations;
};

struct BenchmarkReport {
    std::string machine;
    int repeat = 1;
    std::vector<BenchmarkRow> rows;
};

namespace detail {

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace detail

/// Runs every (mode, threads) combination `repeat` times and reports median
/// wall times, speedups against the independent-sequential baseline, and the
/// cross-mode state discrepancy. Numerical outputs never depend on the
/// repeat count; only the timings do.
inline BenchmarkReport run_benchmark(std::span<const StateVector> states,
                                     const PropagationConfig& config, const SegmentPlan& segments,
                                     const std::vector<unsigned>& thread_counts,
                                     const std::vector<RunMode>& modes, int repeat = 5) {
    if (repeat < 1) {
        throw InvalidPlanError("run_benchmark: repeat must be positive");
    }
    BenchmarkReport report;
    report.repeat = repeat;
    report.machine = std::to_string(std::thread::hardware_concurrency()) + " hardware threads";

    // Baseline: independent runs on a single worker.
    std::vector<double> base_times;
    RunOutcome baseline;
    for (int i = 0; i < repeat; ++i) {
        baseline = run_batch(states, config, segments, RunMode::independent, 1);
        base_times.push_back(baseline.wall_time_s);
    }
    const double baseline_median = detail::median(base_times);

    auto collect_iterations = [](const PropagationResult& result) {
        std::vector<int> iters;
        for (const auto& seg : result.reports) {
            for (const auto& rep : seg) {
                iters.push_back(rep.iterations);
            }
        }
        return iters;
    };

    for (RunMode mode : modes) {
        for (unsigned threads : thread_counts) {
            BenchmarkRow row;
            row.mode = mode;
            row.threads = threads;
            if (mode == RunMode::independent && threads == 1) {
                row.wall_time_s = baseline_median;
                row.groups = static_cast<Index>(states.size());
                row.speedup = 1.0;
                row.max_iterations = baseline.result.max_iterations_used();
                row.max_discrepancy = 0.0;
                row.group_iterations = collect_iterations(baseline.result);
                report.rows.push_back(std::move(row));
                continue;
            }
            std::vector<double> times;
            RunOutcome outcome;
            for (int i = 0; i < repeat; ++i) {
                outcome = run_batch(states, config, segments, mode, threads);
                times.push_back(outcome.wall_time_s);
            }
            row.wall_time_s = detail::median(times);
            row.groups = outcome.result.plan.groups();
            row.speedup = baseline_median / row.wall_time_s;
            row.max_iterations = outcome.result.max_iterations_used();
            row.max_discrepancy = max_state_discrepancy(outcome.result, baseline.result);
            row.group_iterations = collect_iterations(outcome.result);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

} // namespace pswarm
