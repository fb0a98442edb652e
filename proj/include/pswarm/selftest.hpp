#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "pswarm/runner.hpp"
#include "pswarm/synthetic.hpp"

namespace pswarm {

struct SelftestOptions {
    Index n_nodes = 200;
    double tolerance = 1e-12;
    Index batch_size = 64;
    /// Test hook: corrupts the transform before the checks, so every
    /// matrix-contract property must fail (negative control).
    bool perturb_matrices = false;
};

namespace detail {

inline PCMatrices selftest_matrices(Index n, bool perturb) {
    PCMatrices mats = build_matrices(n);
    if (perturb) {
        mats.xform(1, 1) += 1e-6;
        mats.a_op = mats.integ * mats.xform;
        mats.update_op = mats.eval * mats.a_op;
        RowVec s_full = RowVec::Zero(n);
        s_full.tail(n - 1) = mats.s_row;
        mats.anchor_op = s_full * mats.a_op;
    }
    return mats;
}

} // namespace detail

/// Embedded verification suite behind the `selftest` CLI subcommand. Prints
/// one PASS/FAIL line per property and returns overall success.
inline bool run_selftest(std::ostream& os, const SelftestOptions& opts = {}) {
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok) {
        os << (ok ? "PASS " : "FAIL ") << name << "\n";
        all_ok = all_ok && ok;
    };

    // Transform inversion contract on a few operator sizes.
    {
        bool ok = true;
        for (Index n : {static_cast<Index>(8), static_cast<Index>(64), opts.n_nodes}) {
            const auto mats = detail::selftest_matrices(n, opts.perturb_matrices);
            const Vec tau = chebyshev_lobatto_nodes(n);
            Mat plain(n, n);
            for (Index j = 0; j < n; ++j) {
                chebyshev_values(tau[j], plain.row(j).data(), n);
            }
            const double residual = (plain * mats.xform - Mat::Identity(n, n))
                                        .cwiseAbs()
                                        .maxCoeff();
            ok = ok && residual <= 1e-12;
        }
        report("matrix-inversion-contract", ok);
    }

    // Polynomial exactness of one update, degrees 0..10 at N = 16.
    {
        const Index n = 16;
        const auto mats = detail::selftest_matrices(n, opts.perturb_matrices);
        const auto grid = build_grid(n, 0.0, 2.0);
        bool ok = true;
        for (int degree = 0; degree <= 10 && ok; ++degree) {
            Mat force(n, 1);
            for (Index j = 0; j < n; ++j) {
                force(j, 0) = grid.omega2 * std::pow(grid.times[j], degree);
            }
            RowVec initial = RowVec::Ones(1);
            const Mat y = picard_update(mats, force, initial);
            for (Index j = 0; j < n; ++j) {
                const double expected =
                    1.0 + std::pow(grid.times[j], degree + 1) / (degree + 1);
                ok = ok && std::abs(y(j, 0) - expected) <= 1e-12 * std::abs(expected);
            }
        }
        report("polynomial-exactness", ok);
    }

    // Conic propagation returns home after one full period.
    {
        bool ok = true;
        for (double ecc : {0.0, 0.2, 0.5, 0.8}) {
            OrbitalElements el;
            el.a = 1.2e8;
            el.e = ecc;
            el.i = 0.3 * ecc;
            el.raan = 0.7;
            el.argp = 1.1;
            el.m0 = 0.4;
            const StateVector s = elements_to_state(el, mu_sun_km3s2, 0.0);
            const auto back = kepler_propagate(s, mu_sun_km3s2, osculating_period(s, mu_sun_km3s2));
            ok = ok && (back.r - s.r).norm() / s.r.norm() <= 1e-11;
            ok = ok && (back.v - s.v).norm() / s.v.norm() <= 1e-11;
        }
        report("kepler-period-recurrence", ok);
    }

    // Conic propagation preserves the orbital energy along an arc.
    {
        const StateVector s = make_reference_state();
        const double e0 = specific_energy(s, mu_sun_km3s2);
        bool ok = true;
        for (int step = 1; step <= 8; ++step) {
            const auto sj = kepler_propagate(s, mu_sun_km3s2, step * 2.0e6);
            ok = ok && std::abs(specific_energy(sj, mu_sun_km3s2) - e0) <= 1e-11 * std::abs(e0);
        }
        report("kepler-energy-consistency", ok);
    }

    // Grouping invariance + warm/cold comparison on the synthetic batch.
    {
        PropagationConfig config;
        config.n_nodes = opts.n_nodes;
        config.tolerance = opts.tolerance;
        config.force = make_reference_force_model();
        const auto states = make_clone_batch(make_reference_state(), opts.batch_size, 1e-5);
        const double period = osculating_period(states[0], mu_sun_km3s2);
        const auto segments = plan_segments(states[0], 0.0, 0.87 * period, mu_sun_km3s2,
                                            SegmentPolicy::single, config.n_nodes);

        config.p_groups = 1;
        const auto one = run_batch(states, config, segments, RunMode::grouped, 1);
        config.p_groups = 4;
        const auto four = run_batch(states, config, segments, RunMode::grouped, 1);
        config.p_groups = opts.batch_size;
        const auto singl = run_batch(states, config, segments, RunMode::grouped, 1);

        const double d14 = max_state_discrepancy(four.result, one.result);
        const double d1s = max_state_discrepancy(singl.result, one.result);
        report("grouping-invariance", d14 <= opts.tolerance && d1s <= opts.tolerance);

        // Iteration-count homogeneity across the outer groups (diagnostic).
        int it_min = four.result.reports.at(0).at(0).iterations;
        int it_max = it_min;
        for (const auto& rep : four.result.reports.at(0)) {
            it_min = std::min(it_min, rep.iterations);
            it_max = std::max(it_max, rep.iterations);
        }
        os << "info group iteration counts span [" << it_min << ", " << it_max << "]\n";

        config.p_groups = 4;
        config.start_mode = StartMode::cold;
        const auto cold = run_batch(states, config, segments, RunMode::grouped, 1);
        const int warm_iters = one.result.max_iterations_used();
        const int cold_iters = cold.result.max_iterations_used();
        os << "info warm-start iterations " << warm_iters << ", cold-start iterations "
           << cold_iters << "\n";
        report("warm-start-benefit", warm_iters <= cold_iters
                                         && one.result.reports.at(0).at(0).converged
                                         && cold.result.reports.at(0).at(0).converged);
    }

    os << (all_ok ? "selftest: all properties passed" : "selftest: FAILURES detected") << "\n";
    return all_ok;
}

} // namespace pswarm
