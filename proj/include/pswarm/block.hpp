#pragma once

#include <span>
#include <string>
#include <vector>

#include "pswarm/chebyshev.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/state.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Component-major augmented state block for one group: N node rows by
/// 6*M columns ordered [x_1..x_M, y_1..y_M, z_1..z_M, vx.., vy.., vz..].
/// Column c always maps to component c / M, trajectory c % M.
struct TrajectoryBlock {
    Index n_nodes = 0;
    Index group_size = 0;
    Mat data;
    RowVec initial_row;

    static Index col_index(Index component, Index trajectory, Index group_size) {
        return component * group_size + trajectory;
    }
    Index cols() const { return state_dim * group_size; }
};

/// Stacks per-trajectory guesses (N x 6, [x y z vx vy vz]) into one
/// component-major block. Guesses must span the grid's nodes and anchor
/// at the corresponding state.
inline TrajectoryBlock assemble_block(std::span<const StateVector> states,
                                      const ChebyshevGrid& grid, std::span<const Mat> guesses) {
    if (states.empty() || states.size() != guesses.size()) {
        throw ShapeError("assemble_block: need one guess per state, got "
                         + std::to_string(guesses.size()) + " guesses for "
                         + std::to_string(states.size()) + " states");
    }
    const Index m = static_cast<Index>(states.size());
    const Index n = grid.n_nodes;
    TrajectoryBlock block;
    block.n_nodes = n;
    block.group_size = m;
    block.data.resize(n, state_dim * m);
    block.initial_row.resize(state_dim * m);

    for (Index t = 0; t < m; ++t) {
        const Mat& guess = guesses[static_cast<std::size_t>(t)];
        const StateVector& state = states[static_cast<std::size_t>(t)];
        if (guess.rows() != n || guess.cols() != state_dim) {
            throw AlignmentError("assemble_block: guess " + std::to_string(t) + " is "
                                 + std::to_string(guess.rows()) + "x" + std::to_string(guess.cols())
                                 + ", expected " + std::to_string(n) + "x6");
        }
        if (state.epoch != grid.times[0]) {
            throw AlignmentError("assemble_block: state " + std::to_string(t) + " epoch "
                                 + std::to_string(state.epoch) + " does not match grid start "
                                 + std::to_string(grid.times[0]));
        }
        for (Index comp = 0; comp < state_dim; ++comp) {
            const Index col = TrajectoryBlock::col_index(comp, t, m);
            block.data.col(col) = guess.col(comp);
            block.initial_row(col) = comp < 3 ? state.r[comp] : state.v[comp - 3];
        }
    }
    return block;
}

/// Inverse of assemble_block: per-trajectory N x 6 sample matrices.
inline std::vector<Mat> disassemble_block(const TrajectoryBlock& block) {
    std::vector<Mat> out(static_cast<std::size_t>(block.group_size));
    for (Index t = 0; t < block.group_size; ++t) {
        Mat& traj = out[static_cast<std::size_t>(t)];
        traj.resize(block.n_nodes, state_dim);
        for (Index comp = 0; comp < state_dim; ++comp) {
            traj.col(comp) = block.data.col(TrajectoryBlock::col_index(comp, t, block.group_size));
        }
    }
    return out;
}

/// Partition of a batch into P contiguous outer groups.
struct GroupingPlan {
    Index total = 0;
    std::vector<Index> group_sizes;
    std::vector<Index> offsets;  // start index of each group
    std::vector<Index> group_of; // per-trajectory group
    std::vector<Index> slot_of;  // per-trajectory slot within its group

    Index groups() const { return static_cast<Index>(group_sizes.size()); }

    void rebuild_assignment() {
        offsets.assign(group_sizes.size(), 0);
        group_of.assign(static_cast<std::size_t>(total), 0);
        slot_of.assign(static_cast<std::size_t>(total), 0);
        Index at = 0;
        for (std::size_t g = 0; g < group_sizes.size(); ++g) {
            offsets[g] = at;
            for (Index s = 0; s < group_sizes[g]; ++s) {
                group_of[static_cast<std::size_t>(at)] = static_cast<Index>(g);
                slot_of[static_cast<std::size_t>(at)] = s;
                ++at;
            }
        }
    }
};

/// Balanced contiguous split: sizes are ceil(total/p) or floor(total/p),
/// larger groups first, deterministic in its inputs.
inline GroupingPlan split_groups(Index total, Index p_groups) {
    if (total < 1 || p_groups < 1 || p_groups > total) {
        throw InvalidPlanError("split_groups: cannot split " + std::to_string(total)
                               + " states into " + std::to_string(p_groups) + " groups");
    }
    GroupingPlan plan;
    plan.total = total;
    const Index base = total / p_groups;
    const Index remainder = total % p_groups;
    plan.group_sizes.reserve(static_cast<std::size_t>(p_groups));
    for (Index g = 0; g < p_groups; ++g) {
        plan.group_sizes.push_back(g < remainder ? base + 1 : base);
    }
    plan.rebuild_assignment();
    return plan;
}

inline GroupingPlan split_groups(std::span<const StateVector> states, Index p_groups) {
    return split_groups(static_cast<Index>(states.size()), p_groups);
}

/// Explicit group sizes for heterogeneous batches (for example, isolating
/// trajectories whose dynamics diverge from the rest).
inline GroupingPlan plan_from_sizes(std::vector<Index> sizes) {
    Index total = 0;
    for (Index s : sizes) {
        if (s < 1) {
            throw InvalidPlanError("plan_from_sizes: group sizes must be positive");
        }
        total += s;
    }
    if (total < 1) {
        throw InvalidPlanError("plan_from_sizes: empty plan");
    }
    GroupingPlan plan;
    plan.total = total;
    plan.group_sizes = std::move(sizes);
    plan.rebuild_assignment();
    return plan;
}

} // namespace pswarm
