#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "pswarm/block.hpp"
#include "pswarm/error_metric.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/force_model.hpp"
#include "pswarm/picard.hpp"
#include "pswarm/reduction.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Per-trajectory iteration errors of one group and their maximum.
struct ErrorSummary {
    Vec per_state_errors;
    double group_max = 0.0;
};

namespace detail {

/// Accumulates per-trajectory error maxima for trajectories [t_begin,
/// t_end), sweeping node rows in storage order so the component-major
/// layout is read contiguously. The error of sample (j, t) is
/// max(position error, velocity error) with the previous iterate providing
/// the normalization; worst[t] collects the max over nodes.
inline void sweep_block_error(const Mat& cur, const Mat& prev, Index m, ErrorMode mode,
                              Index t_begin, Index t_end, Vec& worst) {
    for (Index j = 0; j < cur.rows(); ++j) {
        const double* c = cur.data() + j * cur.cols();
        const double* p = prev.data() + j * prev.cols();
        for (Index t = t_begin; t < t_end; ++t) {
            double dr2 = 0.0, r2 = 0.0, dv2 = 0.0, v2 = 0.0;
            for (Index comp = 0; comp < 3; ++comp) {
                const Index rc = comp * m + t;
                const Index vc = (comp + 3) * m + t;
                const double dr = c[rc] - p[rc];
                const double dv = c[vc] - p[vc];
                dr2 += dr * dr;
                r2 += p[rc] * p[rc];
                dv2 += dv * dv;
                v2 += p[vc] * p[vc];
            }
            const double pos = component_error(std::sqrt(dr2), std::sqrt(r2), mode);
            const double vel = component_error(std::sqrt(dv2), std::sqrt(v2), mode);
            worst[t] = std::max(worst[t], std::max(pos, vel));
        }
    }
}

} // namespace detail

/// Stopping error of one iteration over a whole block, without the
/// per-trajectory breakdown. Parallel splitting is over trajectories, so
/// the result does not depend on the arrangement (pure max reduction).
inline double block_max_error(const Mat& cur, const Mat& prev, Index group_size, ErrorMode mode,
                              ThreadPool* pool = nullptr) {
    if (cur.rows() != prev.rows() || cur.cols() != prev.cols()
        || cur.cols() != state_dim * group_size) {
        throw ShapeError("block_max_error: shape mismatch");
    }
    Vec per_state = Vec::Zero(group_size);
    if (pool != nullptr && pool->size() > 1 && group_size >= 2) {
        pool->parallel_chunks(group_size, [&](Index begin, Index end) {
            detail::sweep_block_error(cur, prev, group_size, mode, begin, end, per_state);
        });
        return reduce_max_tree({per_state.data(), static_cast<std::size_t>(group_size)}, pool);
    }
    detail::sweep_block_error(cur, prev, group_size, mode, 0, group_size, per_state);
    return reduce_max({per_state.data(), static_cast<std::size_t>(group_size)});
}

/// Full per-trajectory error summary between two iterates of a group.
inline ErrorSummary block_iteration_error(const TrajectoryBlock& current,
                                          const TrajectoryBlock& previous, ErrorMode mode,
                                          ThreadPool* pool = nullptr) {
    if (current.n_nodes != previous.n_nodes || current.group_size != previous.group_size
        || current.data.rows() != previous.data.rows()
        || current.data.cols() != previous.data.cols()) {
        throw ShapeError("block_iteration_error: block shapes do not match");
    }
    ErrorSummary summary;
    const Index m = current.group_size;
    summary.per_state_errors = Vec::Zero(m);
    if (pool != nullptr && pool->size() > 1 && m >= 2) {
        pool->parallel_chunks(m, [&](Index begin, Index end) {
            detail::sweep_block_error(current.data, previous.data, m, mode, begin, end,
                                      summary.per_state_errors);
        });
        summary.group_max =
            reduce_max_tree({summary.per_state_errors.data(), static_cast<std::size_t>(m)}, pool);
    } else {
        detail::sweep_block_error(current.data, previous.data, m, mode, 0, m,
                                  summary.per_state_errors);
        summary.group_max =
            reduce_max({summary.per_state_errors.data(), static_cast<std::size_t>(m)});
    }
    return summary;
}

/// Runs the Picard iteration on one group's block as a single system: the
/// group converges only when the maximum error over all of its trajectories
/// drops below the tolerance. Inner data parallelism (dynamics, update
/// products, error reduction) goes through the optional pool.
inline std::pair<TrajectoryBlock, IterationReport> solve_group(
    TrajectoryBlock block, const ChebyshevGrid& grid, const PCMatrices& mats,
    const EphemerisTable& table, const ForceModelConfig& config, double tolerance,
    int max_iterations, ErrorMode mode = ErrorMode::relative, ThreadPool* inner_pool = nullptr,
    int group_id = -1,
    std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max()) {
    const Index m = block.group_size;
    auto dynamics = [&](const Mat& y, Mat& force) {
        if (std::chrono::steady_clock::now() > deadline) {
            throw TimeoutError("solve_group: wall-clock budget exhausted in group "
                               + std::to_string(group_id));
        }
        eval_force_block_data(y, m, grid, table, config, force, inner_pool);
    };
    auto error_fn = [&](const Mat& cur, const Mat& prev) {
        return block_max_error(cur, prev, m, mode, inner_pool);
    };
    try {
        auto [data, report] = pc_solve(mats, dynamics, block.data, block.initial_row, tolerance,
                                       max_iterations, error_fn, inner_pool);
        block.data = std::move(data);
        return {std::move(block), std::move(report)};
    } catch (const DivergenceError& e) {
        throw DivergenceError("group " + std::to_string(group_id) + ": " + e.what(), e.node(),
                              e.column());
    }
}

} // namespace pswarm
