#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pswarm/propagator.hpp"
#include "pswarm/synthetic.hpp"

using namespace pswarm;

TEST_CASE("cold_start: every row replicates the initial state") {
    std::vector<StateVector> states(2);
    states[0].r = Vec3(1.0, 2.0, 3.0);
    states[0].v = Vec3(-1.0, 0.5, 0.25);
    states[1].r = Vec3(9.0, 8.0, 7.0);
    states[1].v = Vec3(0.1, 0.2, 0.3);
    const auto guesses = cold_start(states, 3);
    REQUIRE(guesses.size() == 2);
    for (Index j = 0; j < 3; ++j) {
        CHECK(guesses[0](j, 0) == 1.0);
        CHECK(guesses[0](j, 5) == 0.25);
        CHECK(guesses[1](j, 3) == 0.1);
    }
    CHECK(guesses[0].row(0) == guesses[0].row(2));
}

TEST_CASE("warm_start: half-period grid ends at the antipodal state") {
    StateVector s;
    s.r = Vec3(1.3e8, 0.0, 0.0);
    const double speed = std::sqrt(mu_sun_km3s2 / 1.3e8);
    s.v = Vec3(0.0, speed, 0.0);
    const double period = osculating_period(s, mu_sun_km3s2);
    const auto grid = build_grid(21, 0.0, 0.5 * period);
    const std::vector<StateVector> states{s};
    const auto warm = warm_start(states, grid, mu_sun_km3s2);
    REQUIRE(warm.guesses.size() == 1);
    CHECK(warm.cold_fallback[0] == 0);
    const Mat& g = warm.guesses[0];
    CHECK(g(0, 0) == s.r.x()); // anchored exactly at the state
    CHECK(g(20, 0) == doctest::Approx(-1.3e8).epsilon(1e-10));
    CHECK(g(20, 4) == doctest::Approx(-speed).epsilon(1e-10));
}

TEST_CASE("warm_start: hyperbolic states fall back to cold rows") {
    StateVector hyper;
    hyper.r = Vec3(1.0e8, 0.0, 0.0);
    hyper.v = Vec3(0.0, 60.0, 0.0);
    const auto grid = build_grid(5, 0.0, 1.0e6);
    const std::vector<StateVector> states{hyper};
    const auto warm = warm_start(states, grid, mu_sun_km3s2);
    CHECK(warm.cold_fallback[0] == 1);
    for (Index j = 0; j < 5; ++j) {
        CHECK(warm.guesses[0](j, 0) == 1.0e8);
        CHECK(warm.guesses[0](j, 4) == 60.0);
    }
}

TEST_CASE("plan_segments: reference span stays a single segment") {
    const StateVector s = make_reference_state();
    const double period = osculating_period(s, mu_sun_km3s2);
    const auto plan = plan_segments(s, 0.0, 0.87 * period, mu_sun_km3s2,
                                    SegmentPolicy::per_orbit, 200);
    CHECK(plan.segments() == 1);
    CHECK(plan.direction == Direction::forward);
    CHECK(plan.boundaries.back() == 0.87 * period);
}

TEST_CASE("plan_segments: 2.5 periods become segments of 1, 1, 0.5") {
    const StateVector s = make_reference_state();
    const double period = osculating_period(s, mu_sun_km3s2);
    const auto plan = plan_segments(s, 0.0, 2.5 * period, mu_sun_km3s2,
                                    SegmentPolicy::per_orbit, 64);
    REQUIRE(plan.segments() == 3);
    CHECK(plan.boundaries[1] == doctest::Approx(period).epsilon(1e-12));
    CHECK(plan.boundaries[2] == doctest::Approx(2.0 * period).epsilon(1e-12));
    CHECK(plan.boundaries[3] == doctest::Approx(2.5 * period).epsilon(1e-12));
}

TEST_CASE("plan_segments: backward spans descend and flip omega2") {
    const StateVector s = make_reference_state();
    const double period = osculating_period(s, mu_sun_km3s2);
    const auto plan = plan_segments(s, 0.0, -1.6 * period, mu_sun_km3s2,
                                    SegmentPolicy::per_orbit, 32);
    CHECK(plan.direction == Direction::backward);
    REQUIRE(plan.segments() == 2);
    CHECK(plan.boundaries[1] < plan.boundaries[0]);
    const auto grid = build_grid(32, plan.boundaries[0], plan.boundaries[1]);
    CHECK(grid.omega2 < 0.0);
}

TEST_CASE("plan_segments: guardrails") {
    const StateVector s = make_reference_state();
    const double period = osculating_period(s, mu_sun_km3s2);
    CHECK_THROWS_AS(plan_segments(s, 5.0, 5.0, mu_sun_km3s2, SegmentPolicy::single, 10),
                    InvalidSpanError);
    CHECK_THROWS_AS(
        plan_segments(s, 0.0, 3.0 * period, mu_sun_km3s2, SegmentPolicy::single, 10),
        InvalidSpanError);

    StateVector hyper;
    hyper.r = Vec3(1.0e8, 0.0, 0.0);
    hyper.v = Vec3(0.0, 60.0, 0.0);
    CHECK_THROWS_AS(
        plan_segments(hyper, 0.0, 1.0e6, mu_sun_km3s2, SegmentPolicy::per_orbit, 10),
        NonEllipticError);
}

namespace {

PropagationConfig two_body_config(Index n_nodes = 48) {
    PropagationConfig config;
    config.n_nodes = n_nodes;
    config.force = make_reference_force_model(ForceKind::two_body);
    return config;
}

} // namespace

TEST_CASE("propagate: exact warm start is already the fixed point") {
    const auto config = two_body_config();
    const auto states = make_clone_batch(make_reference_state(), 3, 1e-6);
    const double period = osculating_period(states[0], mu_sun_km3s2);
    const auto segments = plan_segments(states[0], 0.0, 0.5 * period, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 1);
    const auto result = propagate(states, plan, segments, config);

    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0][0].converged);
    CHECK(result.reports[0][0].iterations <= 3);

    // Node samples agree with the conic solution.
    for (Index j = 0; j < config.n_nodes; ++j) {
        const auto expect = kepler_propagate(states[1], mu_sun_km3s2, result.times[j]);
        const Vec3 got = result.trajectories[1].row(j).head<3>();
        CHECK((got - expect.r).norm() / expect.r.norm() <= 1e-12);
    }
}

TEST_CASE("propagate: segments chain exactly") {
    auto config = two_body_config(32);
    config.segment_policy = SegmentPolicy::per_orbit;
    const auto states = make_clone_batch(make_reference_state(), 2, 1e-5);
    const double period = osculating_period(states[0], mu_sun_km3s2);
    const auto segments = plan_segments(states[0], 0.0, 1.7 * period, mu_sun_km3s2,
                                        SegmentPolicy::per_orbit, config.n_nodes);
    REQUIRE(segments.segments() == 2);
    const auto plan = split_groups(states, 2);
    const auto result = propagate(states, plan, segments, config);

    CHECK(result.times.size() == 1 + 2 * (config.n_nodes - 1));
    CHECK(result.times[config.n_nodes - 1] == segments.boundaries[1]);
    // Terminal states mirror the stored terminal rows.
    for (std::size_t i = 0; i < 2; ++i) {
        const Mat& traj = result.trajectories[i];
        const Index last = traj.rows() - 1;
        CHECK(result.terminal_states[i].r.x() == traj(last, 0));
        CHECK(result.terminal_states[i].v.z() == traj(last, 5));
        CHECK(result.terminal_states[i].epoch == segments.boundaries[2]);
    }
    for (const auto& seg_reports : result.reports) {
        for (const auto& rep : seg_reports) {
            CHECK(rep.converged);
        }
    }
}

TEST_CASE("propagate: warm start needs fewer iterations than cold") {
    PropagationConfig config;
    config.n_nodes = 96;
    config.force = make_reference_force_model();
    const auto states = make_clone_batch(make_reference_state(), 6, 1e-5);
    const double period = osculating_period(states[0], mu_sun_km3s2);
    const auto segments = plan_segments(states[0], 0.0, 0.6 * period, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 2);

    config.start_mode = StartMode::warm;
    const auto warm = propagate(states, plan, segments, config);
    config.start_mode = StartMode::cold;
    const auto cold = propagate(states, plan, segments, config);

    for (Index g = 0; g < plan.groups(); ++g) {
        CHECK(warm.reports[0][g].iterations < cold.reports[0][g].iterations);
        CHECK(warm.reports[0][g].converged);
        CHECK(cold.reports[0][g].converged);
    }
    CHECK(warm.max_iterations_used() <= config.max_iterations);
    CHECK(cold.max_iterations_used() <= config.max_iterations);
}

TEST_CASE("propagate: forward-backward round trip recovers the batch") {
    const auto config = two_body_config(64);
    const auto states = make_clone_batch(make_reference_state(), 4, 1e-5);
    const double period = osculating_period(states[0], mu_sun_km3s2);
    const double t_end = 0.7 * period;
    const auto fwd_segments = plan_segments(states[0], 0.0, t_end, mu_sun_km3s2,
                                            SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 1);
    const auto fwd = propagate(states, plan, fwd_segments, config);

    const auto back_segments = plan_segments(fwd.terminal_states[0], t_end, 0.0, mu_sun_km3s2,
                                             SegmentPolicy::single, config.n_nodes);
    const auto back = propagate(fwd.terminal_states, plan, back_segments, config);

    for (std::size_t i = 0; i < states.size(); ++i) {
        const double dr = (back.terminal_states[i].r - states[i].r).norm() / states[i].r.norm();
        const double dv = (back.terminal_states[i].v - states[i].v).norm() / states[i].v.norm();
        CHECK(dr <= 1e-9);
        CHECK(dv <= 1e-9);
    }
}

TEST_CASE("propagate: mixed epochs are rejected with the offending index") {
    const auto config = two_body_config(16);
    auto states = make_clone_batch(make_reference_state(), 3, 1e-5);
    states[2].epoch = 10.0;
    const auto segments = plan_segments(states[0], 0.0, 1.0e6, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(3, 1);
    try {
        propagate(states, plan, segments, config);
        FAIL("expected AlignmentError");
    } catch (const AlignmentError& e) {
        CHECK(std::string(e.what()).find("state 2") != std::string::npos);
    }
}

TEST_CASE("propagate: non-convergence carries segment, group, and partial work") {
    PropagationConfig config;
    config.n_nodes = 64;
    config.force = make_reference_force_model(ForceKind::two_body);
    config.start_mode = StartMode::cold;
    config.max_iterations = 3; // far too few for a cold start
    const auto states = make_clone_batch(make_reference_state(), 4, 1e-5);
    const double period = osculating_period(states[0], mu_sun_km3s2);
    const auto segments = plan_segments(states[0], 0.0, 0.8 * period, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 2);
    try {
        propagate(states, plan, segments, config);
        FAIL("expected PropagationIncompleteError");
    } catch (const PropagationIncompleteError& e) {
        CHECK(e.segment() == 0);
        CHECK(e.group() == 0);
        REQUIRE(e.partial() != nullptr);
        CHECK_FALSE(e.partial()->reports.at(0).at(0).converged);
    }
}

TEST_CASE("propagate: timeout guard raises a timeout error") {
    PropagationConfig config;
    config.n_nodes = 64;
    config.force = make_reference_force_model();
    config.timeout_s = 1e-9;
    const auto states = make_clone_batch(make_reference_state(), 4, 1e-5);
    const auto segments = plan_segments(states[0], 0.0, 1.0e6, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 1);
    CHECK_THROWS_AS(propagate(states, plan, segments, config), TimeoutError);
}
