#pragma once

#include <cstdint>
#include <vector>

#include "pswarm/force_model.hpp"
#include "pswarm/kepler.hpp"
#include "pswarm/state.hpp"

// Deterministic synthetic systems and batches shared by the selftest, the
// benchmark harness and the verification suites.

namespace pswarm {

inline constexpr double mu_sun_km3s2 = 1.32712440018e11;

/// Two analytic planets on near-circular heliocentric orbits bracketing the
/// reference spacecraft orbit.
inline std::vector<BodySpec> make_reference_bodies() {
    std::vector<BodySpec> bodies(2);
    bodies[0].name = "venus-like";
    bodies[0].mu = 3.24858592e5;
    bodies[0].ephemeris = OrbitalElements{1.08208e8, 0.0068, 0.0593, 1.338, 0.958, 2.10, 0.0};
    bodies[1].name = "earth-like";
    bodies[1].mu = 3.98600436e5;
    bodies[1].ephemeris = OrbitalElements{1.495979e8, 0.0167, 0.0, 0.0, 1.796, 4.20, 0.0};
    return bodies;
}

/// Spacecraft on an eccentric heliocentric orbit between the two planets.
inline StateVector make_reference_state() {
    return elements_to_state(OrbitalElements{1.25e8, 0.12, 0.030, 0.30, 1.00, 0.0, 0.0},
                             mu_sun_km3s2, 0.0);
}

inline ForceModelConfig make_reference_force_model(ForceKind kind = ForceKind::n_body) {
    ForceModelConfig config;
    config.kind = kind;
    config.central_mu = mu_sun_km3s2;
    if (kind == ForceKind::n_body) {
        config.bodies = make_reference_bodies();
    }
    return config;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform in [-1, 1), platform-stable.
inline double symmetric_unit(std::uint64_t& state) {
    return 2.0 * (static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace detail

/// count perturbed clones of a base state (the first entry is the base
/// itself). Each position/velocity component is scaled by 1 + delta with
/// delta uniform in [-relative_spread, relative_spread).
inline std::vector<StateVector> make_clone_batch(const StateVector& base, Index count,
                                                 double relative_spread = 1e-5,
                                                 std::uint64_t seed = 20220411ULL) {
    std::vector<StateVector> batch;
    batch.reserve(static_cast<std::size_t>(count));
    std::uint64_t rng = seed;
    for (Index i = 0; i < count; ++i) {
        StateVector s = base;
        if (i > 0) {
            for (int c = 0; c < 3; ++c) {
                s.r[c] *= 1.0 + relative_spread * detail::symmetric_unit(rng);
                s.v[c] *= 1.0 + relative_spread * detail::symmetric_unit(rng);
            }
        }
        batch.push_back(s);
    }
    return batch;
}

} // namespace pswarm
