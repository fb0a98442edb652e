#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "pswarm/errors.hpp"
#include "pswarm/state.hpp"
#include "pswarm/types.hpp"

// Independent verification integrator. Deliberately free of any
// Picard-Chebyshev machinery: it only sees a derivative callback, so it can
// cross-check the main path without sharing its numerics.

namespace pswarm {

using State6 = Eigen::Matrix<double, 6, 1>;

struct OracleConfig {
    double rel_tol = 1e-13;
    double abs_tol = 1e-16;
    long max_steps = 4000000;
    int order = 8; // embedded 7(8) pair
};

namespace detail::rkf78 {

// Fehlberg 7(8) embedded pair, 13 stages.
inline constexpr std::array<double, 13> c = {
    0.0,       2.0 / 27.0, 1.0 / 9.0, 1.0 / 6.0, 5.0 / 12.0, 0.5, 5.0 / 6.0,
    1.0 / 6.0, 2.0 / 3.0,  1.0 / 3.0, 1.0,       0.0,        1.0};

inline constexpr std::array<std::array<double, 12>, 13> a = {{
    {},
    {2.0 / 27.0},
    {1.0 / 36.0, 1.0 / 12.0},
    {1.0 / 24.0, 0.0, 1.0 / 8.0},
    {5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0},
    {1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0},
    {-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0},
    {31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0},
    {2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0},
    {-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0,
     17.0 / 6.0, -1.0 / 12.0},
    {2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0,
     2133.0 / 4100.0, 45.0 / 82.0, 45.0 / 164.0, 18.0 / 41.0},
    {3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0,
     6.0 / 41.0, 0.0},
    {-1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0,
     2193.0 / 4100.0, 51.0 / 82.0, 33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0},
}};

// Eighth-order weights; the 7th-order defect is 41/840 (k0 + k10 - k11 - k12).
inline constexpr std::array<double, 13> b8 = {
    0.0, 0.0, 0.0, 0.0, 0.0, 34.0 / 105.0, 9.0 / 35.0, 9.0 / 35.0, 9.0 / 280.0,
    9.0 / 280.0, 0.0, 41.0 / 840.0, 41.0 / 840.0};

} // namespace detail::rkf78

/// Adaptive Fehlberg 7(8) propagation of a 6-dimensional state from
/// start.epoch to t_end. deriv(t, y) must return the state derivative.
template <typename Deriv>
StateVector rk_propagate(const StateVector& start, Deriv&& deriv, double t_end,
                         const OracleConfig& cfg = {}) {
    namespace tab = detail::rkf78;
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) {
        throw OracleError("rk_propagate: tolerances must be positive");
    }
    double t = start.epoch;
    const double span = t_end - t;
    if (span == 0.0) {
        return start;
    }
    State6 y;
    y << start.r, start.v;

    const double dir = span > 0.0 ? 1.0 : -1.0;
    double h = span / 50.0;
    long steps = 0;
    std::array<State6, 13> k;

    while (t != t_end) {
        bool final_step = false;
        if ((t + h - t_end) * dir >= 0.0) {
            h = t_end - t;
            final_step = true;
        }
        for (int i = 0; i < 13; ++i) {
            State6 yi = y;
            for (int l = 0; l < i; ++l) {
                const double alk = tab::a[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
                if (alk != 0.0) {
                    yi += (h * alk) * k[static_cast<std::size_t>(l)];
                }
            }
            k[static_cast<std::size_t>(i)] = deriv(t + tab::c[static_cast<std::size_t>(i)] * h, yi);
        }
        State6 y8 = y;
        for (int i = 0; i < 13; ++i) {
            if (tab::b8[static_cast<std::size_t>(i)] != 0.0) {
                y8 += (h * tab::b8[static_cast<std::size_t>(i)]) * k[static_cast<std::size_t>(i)];
            }
        }
        const State6 defect = (h * (41.0 / 840.0)) * (k[0] + k[10] - k[11] - k[12]);
        double err = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y8[i]));
            err = std::max(err, std::abs(defect[i]) / scale);
        }

        if (err <= 1.0) {
            y = y8;
            t = final_step ? t_end : t + h;
        }
        const double factor =
            (err > 0.0) ? std::clamp(0.9 * std::pow(err, -1.0 / 8.0), 0.2, 4.0) : 4.0;
        h *= factor;
        if (t + h == t) {
            throw OracleError("rk_propagate: step size underflow at t = " + std::to_string(t));
        }
        if (++steps > cfg.max_steps) {
            throw OracleError("rk_propagate: exceeded " + std::to_string(cfg.max_steps)
                              + " steps");
        }
    }
    StateVector out;
    out.epoch = t_end;
    out.r = y.head<3>();
    out.v = y.tail<3>();
    return out;
}

/// Samples the reference trajectory at the given epochs by chaining
/// adaptive steps node to node. times[0] must equal start.epoch.
template <typename Deriv>
Mat oracle_sample_trajectory(const StateVector& start, Deriv&& deriv, const Vec& times,
                             const OracleConfig& cfg = {}) {
    if (times.size() == 0 || times[0] != start.epoch) {
        throw OracleError("oracle_sample_trajectory: sample times must begin at the state epoch");
    }
    Mat out(times.size(), state_dim);
    StateVector current = start;
    out.row(0) << current.r.transpose(), current.v.transpose();
    for (Index j = 1; j < times.size(); ++j) {
        current = rk_propagate(current, deriv, times[j], cfg);
        out.row(j) << current.r.transpose(), current.v.transpose();
    }
    return out;
}

/// Per-node relative position/velocity discrepancies between two sampled
/// trajectories (rows of [r v]); the reference provides the normalization.
struct DiscrepancyReport {
    Vec per_node_position;
    Vec per_node_velocity;
    double max_position = 0.0;
    double max_velocity = 0.0;
    double max_combined = 0.0;
};

inline DiscrepancyReport compare_trajectories(const Mat& candidate, const Mat& reference) {
    if (candidate.rows() != reference.rows() || candidate.cols() != state_dim
        || reference.cols() != state_dim) {
        throw ShapeError("compare_trajectories: sample shapes do not match");
    }
    DiscrepancyReport rep;
    const Index n = candidate.rows();
    rep.per_node_position.resize(n);
    rep.per_node_velocity.resize(n);
    for (Index j = 0; j < n; ++j) {
        const double dr = (candidate.row(j).head<3>() - reference.row(j).head<3>()).norm();
        const double dv = (candidate.row(j).tail<3>() - reference.row(j).tail<3>()).norm();
        const double rn = std::max(reference.row(j).head<3>().norm(), 1e-30);
        const double vn = std::max(reference.row(j).tail<3>().norm(), 1e-30);
        rep.per_node_position[j] = dr / rn;
        rep.per_node_velocity[j] = dv / vn;
    }
    rep.max_position = rep.per_node_position.maxCoeff();
    rep.max_velocity = rep.per_node_velocity.maxCoeff();
    rep.max_combined = std::max(rep.max_position, rep.max_velocity);
    return rep;
}

} // namespace pswarm
