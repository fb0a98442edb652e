#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pswarm/augment.hpp"
#include "pswarm/block.hpp"
#include "pswarm/ephemeris.hpp"
#include "pswarm/force_model.hpp"
#include "pswarm/kepler.hpp"
#include "pswarm/picard.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

enum class StartMode { warm, cold };
enum class SegmentPolicy { single, per_orbit };
enum class Direction { forward, backward };

/// Ordered integration boundaries and the node count shared by every segment.
struct SegmentPlan {
    std::vector<double> boundaries;
    Index n_nodes = 200;
    Direction direction = Direction::forward;

    Index segments() const { return static_cast<Index>(boundaries.size()) - 1; }
};

/// Defaults reproduce the reference setup: 200 nodes, relative tolerance
/// 1e-12, warm start, at most 100 iterations.
struct PropagationConfig {
    Index n_nodes = 200;
    double tolerance = 1e-12;
    ErrorMode error_mode = ErrorMode::relative;
    int max_iterations = 100;
    StartMode start_mode = StartMode::warm;
    SegmentPolicy segment_policy = SegmentPolicy::single;
    double max_segment_periods = 1.0;
    ForceModelConfig force;
    Index p_groups = 1;
    double timeout_s = 0.0; // 0 disables the wall-clock guard
};

/// Worker split for one run: groups are scheduled over group_workers; the
/// internals of one group solve (dynamics, products, reduction) use
/// inner_workers. The two are not combined.
struct ExecutionPolicy {
    unsigned group_workers = 1;
    unsigned inner_workers = 1;
};

struct WarmStartResult {
    std::vector<Mat> guesses;
    std::vector<char> cold_fallback; // per trajectory, 1 when conic start failed
};

/// Every guess row equals the trajectory's initial state.
inline std::vector<Mat> cold_start(std::span<const StateVector> states, Index n_nodes) {
    std::vector<Mat> guesses;
    guesses.reserve(states.size());
    for (const auto& s : states) {
        Mat g(n_nodes, state_dim);
        RowVec row(state_dim);
        row << s.r.x(), s.r.y(), s.r.z(), s.v.x(), s.v.y(), s.v.z();
        g.rowwise() = row;
        guesses.push_back(std::move(g));
    }
    return guesses;
}

/// Conic (dominant-dynamics) guess: row j is the Kepler propagation of the
/// state to grid time j. Non-elliptic states fall back to a cold start for
/// that trajectory, flagged in cold_fallback.
inline WarmStartResult warm_start(std::span<const StateVector> states, const ChebyshevGrid& grid,
                                  double central_mu) {
    WarmStartResult out;
    out.guesses.reserve(states.size());
    out.cold_fallback.assign(states.size(), 0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const StateVector& s = states[i];
        Mat g(grid.n_nodes, state_dim);
        try {
            for (Index j = 0; j < grid.n_nodes; ++j) {
                const StateVector sj = kepler_propagate(s, central_mu, grid.times[j] - s.epoch);
                g.row(j) << sj.r.x(), sj.r.y(), sj.r.z(), sj.v.x(), sj.v.y(), sj.v.z();
            }
        } catch (const NonEllipticError&) {
            RowVec row(state_dim);
            row << s.r.x(), s.r.y(), s.r.z(), s.v.x(), s.v.y(), s.v.z();
            g.rowwise() = row;
            out.cold_fallback[i] = 1;
        }
        out.guesses.push_back(std::move(g));
    }
    return out;
}

/// Splits [t_start, t_end] into PC-stable segments. single keeps one
/// segment (and rejects spans beyond max_periods nominal orbits); per_orbit
/// cuts segments of max_periods osculating periods of the representative,
/// truncating the last one. Backward spans produce descending boundaries.
inline SegmentPlan plan_segments(const StateVector& representative, double t_start, double t_end,
                                 double central_mu, SegmentPolicy policy, Index n_nodes,
                                 double max_periods = 1.0) {
    if (t_start == t_end) {
        throw InvalidSpanError("plan_segments: degenerate span at t = " + std::to_string(t_start));
    }
    SegmentPlan plan;
    plan.n_nodes = n_nodes;
    plan.direction = t_end > t_start ? Direction::forward : Direction::backward;
    const double span = t_end - t_start;

    if (policy == SegmentPolicy::single) {
        std::optional<double> period;
        try {
            period = osculating_period(representative, central_mu);
        } catch (const NonEllipticError&) {
            // No nominal period; accept the span as requested.
        }
        if (period && std::abs(span) > max_periods * (*period) * (1.0 + 1e-12)) {
            throw InvalidSpanError("plan_segments: span of " + std::to_string(std::abs(span))
                                   + " s exceeds " + std::to_string(max_periods)
                                   + " nominal periods; use the per-orbit policy");
        }
        plan.boundaries = {t_start, t_end};
        return plan;
    }

    // Per-orbit policy: the osculating period is constant along the conic
    // of the representative, so boundaries can be laid out up front.
    const double period = osculating_period(representative, central_mu);
    const double step = std::copysign(max_periods * period, span);
    plan.boundaries.push_back(t_start);
    double at = t_start;
    while ((t_end - at - step) * (span > 0 ? 1.0 : -1.0) > 1e-9 * period) {
        at += step;
        plan.boundaries.push_back(at);
    }
    plan.boundaries.push_back(t_end);
    return plan;
}

/// Full node-sample history and per-(segment, group) reports of one batch.
struct PropagationResult {
    Vec times;
    std::vector<Mat> trajectories; // per trajectory: times.size() x 6
    std::vector<StateVector> terminal_states;
    std::vector<std::vector<IterationReport>> reports; // [segment][group]
    GroupingPlan plan;
    SegmentPlan segments;
    std::vector<std::string> warnings;

    int max_iterations_used() const {
        int worst = 0;
        for (const auto& seg : reports) {
            for (const auto& rep : seg) {
                worst = std::max(worst, rep.iterations);
            }
        }
        return worst;
    }
};

/// A group failed to converge; completed work up to the previous segment
/// travels with the error.
class PropagationIncompleteError : public Error {
public:
    PropagationIncompleteError(const std::string& what, Index segment, Index group,
                               std::shared_ptr<const PropagationResult> partial)
        : Error(what), segment_(segment), group_(group), partial_(std::move(partial)) {}
    Index segment() const noexcept { return segment_; }
    Index group() const noexcept { return group_; }
    const std::shared_ptr<const PropagationResult>& partial() const noexcept { return partial_; }

private:
    Index segment_;
    Index group_;
    std::shared_ptr<const PropagationResult> partial_;
};

/// Propagates a batch through every segment of the plan: build grid, reuse
/// the cached operators, freeze the ephemerides, start the iterate (warm or
/// cold on the first segment, conic from the chained terminal states after
/// that) and solve each group to its own convergence.
inline PropagationResult propagate(std::span<const StateVector> states, const GroupingPlan& plan,
                                   const SegmentPlan& segment_plan,
                                   const PropagationConfig& config,
                                   const ExecutionPolicy& exec = {}) {
    if (states.empty()) {
        throw InvalidPlanError("propagate: empty batch");
    }
    if (plan.total != static_cast<Index>(states.size())) {
        throw InvalidPlanError("propagate: grouping plan covers " + std::to_string(plan.total)
                               + " states, batch has " + std::to_string(states.size()));
    }
    if (segment_plan.segments() < 1) {
        throw InvalidSpanError("propagate: empty segment plan");
    }
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (states[i].epoch != states[0].epoch) {
            throw AlignmentError("propagate: state " + std::to_string(i) + " epoch "
                                 + std::to_string(states[i].epoch)
                                 + " differs from shared epoch "
                                 + std::to_string(states[0].epoch));
        }
    }
    if (states[0].epoch != segment_plan.boundaries.front()) {
        throw AlignmentError("propagate: batch epoch does not match the first segment boundary");
    }

    const auto mats = cached_matrices(segment_plan.n_nodes);
    const Index n = segment_plan.n_nodes;
    const Index n_seg = segment_plan.segments();
    const Index n_traj = static_cast<Index>(states.size());

    const unsigned pool_size = std::max(exec.group_workers, exec.inner_workers);
    std::optional<ThreadPool> pool;
    if (pool_size > 1) {
        pool.emplace(pool_size);
    }
    ThreadPool* group_pool = (pool && exec.group_workers > 1) ? &*pool : nullptr;
    ThreadPool* inner_pool = (pool && exec.group_workers <= 1 && exec.inner_workers > 1)
                                 ? &*pool
                                 : nullptr;

    const auto deadline = config.timeout_s > 0.0
                              ? std::chrono::steady_clock::now()
                                    + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(config.timeout_s))
                              : std::chrono::steady_clock::time_point::max();

    auto result = std::make_shared<PropagationResult>();
    result->plan = plan;
    result->segments = segment_plan;
    const Index total_rows = 1 + n_seg * (n - 1);
    result->times.resize(total_rows);
    result->trajectories.assign(static_cast<std::size_t>(n_traj), Mat(total_rows, state_dim));
    result->reports.reserve(static_cast<std::size_t>(n_seg));

    std::vector<StateVector> current(states.begin(), states.end());

    for (Index seg = 0; seg < n_seg; ++seg) {
        const auto grid = build_grid(n, segment_plan.boundaries[static_cast<std::size_t>(seg)],
                                     segment_plan.boundaries[static_cast<std::size_t>(seg) + 1]);
        const auto table = build_ephemeris_cache(
            config.force.kind == ForceKind::n_body ? config.force.bodies
                                                   : std::vector<BodySpec>{},
            grid, config.force.central_mu);

        std::vector<Mat> guesses;
        if (seg == 0 && config.start_mode == StartMode::cold) {
            guesses = cold_start(current, n);
        } else {
            auto warm = warm_start(current, grid, config.force.central_mu);
            guesses = std::move(warm.guesses);
            for (std::size_t i = 0; i < warm.cold_fallback.size(); ++i) {
                if (warm.cold_fallback[i]) {
                    result->warnings.push_back("segment " + std::to_string(seg) + ", trajectory "
                                               + std::to_string(i)
                                               + ": non-elliptic state, cold start used");
                }
            }
        }

        const Index n_groups = plan.groups();
        std::vector<TrajectoryBlock> blocks(static_cast<std::size_t>(n_groups));
        std::vector<IterationReport> seg_reports(static_cast<std::size_t>(n_groups));

        auto solve_one = [&](Index g) {
            const Index offset = plan.offsets[static_cast<std::size_t>(g)];
            const Index size = plan.group_sizes[static_cast<std::size_t>(g)];
            auto block = assemble_block(
                std::span<const StateVector>(current.data() + offset,
                                             static_cast<std::size_t>(size)),
                grid,
                std::span<const Mat>(guesses.data() + offset, static_cast<std::size_t>(size)));
            auto [solved, report] =
                solve_group(std::move(block), grid, *mats, table, config.force, config.tolerance,
                            config.max_iterations, config.error_mode, inner_pool,
                            static_cast<int>(g), deadline);
            blocks[static_cast<std::size_t>(g)] = std::move(solved);
            seg_reports[static_cast<std::size_t>(g)] = std::move(report);
        };

        if (group_pool != nullptr) {
            group_pool->parallel_tasks(n_groups, solve_one);
        } else {
            for (Index g = 0; g < n_groups; ++g) {
                solve_one(g);
            }
        }

        for (Index g = 0; g < n_groups; ++g) {
            if (!seg_reports[static_cast<std::size_t>(g)].converged) {
                result->reports.push_back(seg_reports);
                throw PropagationIncompleteError(
                    "propagate: group " + std::to_string(g) + " did not converge in segment "
                        + std::to_string(seg) + " (error "
                        + std::to_string(seg_reports[static_cast<std::size_t>(g)].final_error)
                        + " after "
                        + std::to_string(seg_reports[static_cast<std::size_t>(g)].iterations)
                        + " iterations)",
                    seg, g, result);
            }
        }
        result->reports.push_back(std::move(seg_reports));

        // Append this segment's samples; the first node repeats the chained
        // boundary and is only stored for segment 0.
        const Index row0 = seg * (n - 1);
        for (Index j = (seg == 0 ? 0 : 1); j < n; ++j) {
            result->times[row0 + j] = grid.times[j];
        }
        for (Index g = 0; g < n_groups; ++g) {
            const auto& block = blocks[static_cast<std::size_t>(g)];
            const Index offset = plan.offsets[static_cast<std::size_t>(g)];
            for (Index slot = 0; slot < block.group_size; ++slot) {
                Mat& traj = result->trajectories[static_cast<std::size_t>(offset + slot)];
                for (Index j = (seg == 0 ? 0 : 1); j < n; ++j) {
                    for (Index comp = 0; comp < state_dim; ++comp) {
                        traj(row0 + j, comp) =
                            block.data(j, TrajectoryBlock::col_index(comp, slot, block.group_size));
                    }
                }
            }
        }

        // Chain: the stored terminal row becomes the next initial state.
        for (Index i = 0; i < n_traj; ++i) {
            const Mat& traj = result->trajectories[static_cast<std::size_t>(i)];
            StateVector& s = current[static_cast<std::size_t>(i)];
            s.epoch = grid.times[n - 1];
            s.r = Vec3(traj(row0 + n - 1, 0), traj(row0 + n - 1, 1), traj(row0 + n - 1, 2));
            s.v = Vec3(traj(row0 + n - 1, 3), traj(row0 + n - 1, 4), traj(row0 + n - 1, 5));
        }
    }

    result->terminal_states = std::move(current);
    return std::move(*result);
}

} // namespace pswarm
