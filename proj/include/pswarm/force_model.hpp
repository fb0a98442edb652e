#pragma once

#include <string>
#include <vector>

#include "pswarm/block.hpp"
#include "pswarm/ephemeris.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/state.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

enum class ForceKind { two_body, n_body };

struct ForceModelConfig {
    ForceKind kind = ForceKind::two_body;
    double central_mu = 0.0;
    std::vector<BodySpec> bodies;
    /// Spacecraft-body distances below this raise a close-approach error
    /// instead of silently blowing up the acceleration.
    double proximity_floor_km = 1.0;
};

inline Vec3 central_acceleration(const Vec3& r, double mu) {
    const double rn = r.norm();
    if (!(rn > 0.0)) {
        throw SingularityError("central-body acceleration at zero radius");
    }
    return (-mu / (rn * rn * rn)) * r;
}

/// a = -mu r / |r|^3.
inline Vec3 eval_two_body(const StateVector& state, double mu) {
    return central_acceleration(state.r, mu);
}

/// Direct + indirect contribution of one perturbing body at position r_body.
inline Vec3 perturber_acceleration(const Vec3& r, const Vec3& r_body, double mu_body,
                                   double proximity_floor_km, const std::string& body_name) {
    const Vec3 d = r_body - r;
    const double dn = d.norm();
    if (dn < proximity_floor_km) {
        throw SingularityError("close approach to body '" + body_name + "': distance "
                                   + std::to_string(dn) + " km below floor "
                                   + std::to_string(proximity_floor_km) + " km",
                               body_name);
    }
    const double bn = r_body.norm();
    return mu_body * (d / (dn * dn * dn) - r_body / (bn * bn * bn));
}

/// Restricted N-body acceleration with body positions frozen in the
/// per-node ephemeris table. The same routine backs both the single-state
/// and the block evaluation paths, so they agree bit for bit.
inline Vec3 table_acceleration(const Vec3& r, Index node, const EphemerisTable& table,
                               ForceKind kind, double proximity_floor_km) {
    Vec3 a = central_acceleration(r, table.central_mu);
    if (kind == ForceKind::n_body) {
        for (Index b = 0; b < table.n_bodies(); ++b) {
            const Vec3 r_body = table.body_positions[static_cast<std::size_t>(b)].row(node);
            a += perturber_acceleration(r, r_body, table.body_mus[static_cast<std::size_t>(b)],
                                        proximity_floor_km,
                                        table.body_names[static_cast<std::size_t>(b)]);
        }
    }
    return a;
}

inline Vec3 eval_nbody(const StateVector& state, Index node, const EphemerisTable& table,
                       double proximity_floor_km = 1.0) {
    return table_acceleration(state.r, node, table, ForceKind::n_body, proximity_floor_km);
}

/// Continuous-time variant for integrators that step between nodes
/// (reference propagation and body-position checks).
inline Vec3 acceleration_at(const Vec3& r, double t, const ForceModelConfig& config) {
    Vec3 a = central_acceleration(r, config.central_mu);
    if (config.kind == ForceKind::n_body) {
        for (const auto& body : config.bodies) {
            a += perturber_acceleration(r, body_position(body, config.central_mu, t), body.mu,
                                        config.proximity_floor_km, body.name);
        }
    }
    return a;
}

/// Fills the omega2-scaled first-order derivative block for a component-major
/// state block: velocity components feed the position rows, accelerations the
/// velocity rows. Every (node, trajectory) sample is independent; the
/// optional pool splits them without changing any result.
inline void eval_force_block_data(const Mat& y, Index group_size, const ChebyshevGrid& grid,
                                  const EphemerisTable& table, const ForceModelConfig& config,
                                  Mat& force, ThreadPool* pool = nullptr) {
    const Index n = grid.n_nodes;
    const Index m = group_size;
    if (y.rows() != n || y.cols() != state_dim * m) {
        throw ShapeError("eval_force_block: state block is " + std::to_string(y.rows()) + "x"
                         + std::to_string(y.cols()) + ", expected " + std::to_string(n) + "x"
                         + std::to_string(state_dim * m));
    }
    if (table.node_times.size() != n) {
        throw AlignmentError("eval_force_block: ephemeris table has "
                             + std::to_string(table.node_times.size()) + " nodes, grid has "
                             + std::to_string(n));
    }
    force.resize(n, state_dim * m);
    const double w2 = grid.omega2;

    auto eval_sample = [&](Index j, Index t) {
        const Vec3 r(y(j, t), y(j, m + t), y(j, 2 * m + t));
        const Vec3 v(y(j, 3 * m + t), y(j, 4 * m + t), y(j, 5 * m + t));
        Vec3 a;
        try {
            a = table_acceleration(r, j, table, config.kind, config.proximity_floor_km);
        } catch (const SingularityError& e) {
            throw SingularityError("node " + std::to_string(j) + ", trajectory "
                                       + std::to_string(t) + ": " + e.what(),
                                   e.body());
        }
        force(j, t) = w2 * v.x();
        force(j, m + t) = w2 * v.y();
        force(j, 2 * m + t) = w2 * v.z();
        force(j, 3 * m + t) = w2 * a.x();
        force(j, 4 * m + t) = w2 * a.y();
        force(j, 5 * m + t) = w2 * a.z();
    };

    const Index samples = n * m;
    if (pool != nullptr && pool->size() > 1) {
        pool->parallel_chunks(samples, [&](Index begin, Index end) {
            for (Index s = begin; s < end; ++s) {
                eval_sample(s / m, s % m);
            }
        });
    } else {
        for (Index s = 0; s < samples; ++s) {
            eval_sample(s / m, s % m);
        }
    }
}

inline Mat eval_force_block(const TrajectoryBlock& block, const ChebyshevGrid& grid,
                            const EphemerisTable& table, const ForceModelConfig& config,
                            ThreadPool* pool = nullptr) {
    Mat force;
    eval_force_block_data(block.data, block.group_size, grid, table, config, force, pool);
    return force;
}

} // namespace pswarm
