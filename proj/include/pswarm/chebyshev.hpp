#pragma once

#include <cmath>
#include <numbers>

#include "pswarm/errors.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Chebyshev-Gauss-Lobatto sampling of one integration segment.
///
/// tau holds the N dimensionless nodes tau_j = -cos(j*pi/(N-1)) in
/// ascending order, times the mapped epochs t_j = omega2*tau_j + omega1.
/// omega2 is signed: negative for a backward segment.
struct ChebyshevGrid {
    Index n_nodes = 0;
    Vec tau;
    Vec times;
    double omega1 = 0.0;
    double omega2 = 0.0;
};

/// Lobatto nodes -cos(j*pi/(N-1)), j = 0..N-1. Built by mirroring the
/// first half so that tau[j] == -tau[N-1-j] holds exactly.
inline Vec chebyshev_lobatto_nodes(Index n_nodes) {
    if (n_nodes < 3) {
        throw InvalidSizeError("chebyshev_lobatto_nodes: need at least 3 nodes, got "
                               + std::to_string(n_nodes));
    }
    const Index m = n_nodes - 1;
    Vec tau(n_nodes);
    for (Index j = 0; 2 * j < m; ++j) {
        const double c = std::cos(static_cast<double>(j) * std::numbers::pi
                                  / static_cast<double>(m));
        tau[j] = -c;
        tau[m - j] = c;
    }
    if (m % 2 == 0) {
        tau[m / 2] = 0.0;
    }
    tau[0] = -1.0;
    tau[m] = 1.0;
    return tau;
}

/// Fills t[0..count-1] with T_k(x) by the three-term recurrence.
inline void chebyshev_values(double x, double* t, Index count) {
    if (count <= 0) {
        return;
    }
    t[0] = 1.0;
    if (count > 1) {
        t[1] = x;
    }
    for (Index k = 2; k < count; ++k) {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    }
}

inline ChebyshevGrid build_grid(Index n_nodes, double t_start, double t_end) {
    if (n_nodes < 3) {
        throw InvalidSizeError("build_grid: need at least 3 nodes, got "
                               + std::to_string(n_nodes));
    }
    if (t_start == t_end) {
        throw InvalidSpanError("build_grid: degenerate span at t = " + std::to_string(t_start));
    }
    ChebyshevGrid grid;
    grid.n_nodes = n_nodes;
    grid.tau = chebyshev_lobatto_nodes(n_nodes);
    grid.omega1 = 0.5 * (t_end + t_start);
    grid.omega2 = 0.5 * (t_end - t_start);
    grid.times.resize(n_nodes);
    for (Index j = 0; j < n_nodes; ++j) {
        grid.times[j] = grid.omega2 * grid.tau[j] + grid.omega1;
    }
    // Pin the endpoints: (t_end+t_start)/2 -+ (t_end-t_start)/2 can be one
    // ulp off the segment boundaries, and downstream chaining compares them
    // for exact equality.
    grid.times[0] = t_start;
    grid.times[n_nodes - 1] = t_end;
    return grid;
}

} // namespace pswarm
