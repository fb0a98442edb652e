#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pswarm/io.hpp"
#include "pswarm/synthetic.hpp"

using namespace pswarm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path()
               / ("pswarm_io_" + std::to_string(::getpid()) + "_"
                  + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("format_double/parse_double: value-exact round trip") {
    for (double v : {0.0, 1.0, -1.0 / 3.0, 6.674e-20, -2.5e300, 1.32712440018e11,
                     0.1 + 0.2, 1e-308}) {
        CHECK(parse_double(format_double(v), "test") == v);
    }
    CHECK(parse_double("1.5e-3", "test") == 1.5e-3);
    CHECK(parse_double("  2E+4 ", "test") == 2e4);
    CHECK_THROWS_AS(parse_double("12,5", "test"), ParseError);
    CHECK_THROWS_AS(parse_double("", "test"), ParseError);
    CHECK_THROWS_AS(parse_double("abc", "test"), ParseError);
}

TEST_CASE("batch CSV: round trip is exact") {
    TempDir tmp;
    const auto states = make_clone_batch(make_reference_state(), 7, 3e-4);
    const auto path = tmp.path / "batch.csv";
    write_batch_csv(path, states);
    const auto back = read_batch_csv(path);
    REQUIRE(back.size() == states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        CHECK(back[i].epoch == states[i].epoch);
        CHECK(back[i].r == states[i].r);
        CHECK(back[i].v == states[i].v);
    }
}

TEST_CASE("batch CSV: malformed inputs are rejected with row context") {
    TempDir tmp;
    const auto path = tmp.path / "bad.csv";

    write_text(path, "wrong,header\n1,2,3,4,5,6,7\n");
    CHECK_THROWS_AS(read_batch_csv(path), ParseError);

    write_text(path, std::string(batch_csv_header) + "\n0,1,2,3,4,5\n");
    CHECK_THROWS_AS(read_batch_csv(path), ParseError);

    write_text(path, std::string(batch_csv_header) + "\n0,1,2,3,4,5,x\n");
    try {
        read_batch_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    write_text(path, std::string(batch_csv_header) + "\n0,1,2,3,4,5,nan\n");
    CHECK_THROWS_AS(read_batch_csv(path), ParseError);

    write_text(path, std::string(batch_csv_header) + "\n");
    CHECK_THROWS_AS(read_batch_csv(path), ParseError);

    // Windows line endings parse fine.
    write_text(path, std::string(batch_csv_header) + "\r\n0,1,2,3,4,5,6\r\n");
    const auto states = read_batch_csv(path);
    CHECK(states.size() == 1);
    CHECK(states[0].v.z() == 6.0);
}

TEST_CASE("system JSON: analytic and tabulated bodies round trip") {
    TempDir tmp;
    SystemModel model;
    model.central_mu = mu_sun_km3s2;
    model.bodies = make_reference_bodies();

    BodySpec tab;
    tab.name = "tabulated";
    tab.mu = 42.5;
    ChebyshevEphemeris eph;
    eph.segments.push_back(fit_chebyshev_segment(
        [&](double t) { return body_position(model.bodies[0], mu_sun_km3s2, t); }, 0.0, 1e6, 12));
    tab.ephemeris = eph;
    model.bodies.push_back(tab);

    const auto path = tmp.path / "system.json";
    write_system_json(path, model);
    const auto back = read_system_json(path);
    CHECK(back.frame == model.frame);
    CHECK(back.central_mu == model.central_mu);
    REQUIRE(back.bodies.size() == 3);
    const auto& el_in = std::get<OrbitalElements>(model.bodies[0].ephemeris);
    const auto& el_out = std::get<OrbitalElements>(back.bodies[0].ephemeris);
    CHECK(el_out.a == el_in.a);
    CHECK(el_out.m0 == el_in.m0);
    const auto& tab_out = std::get<ChebyshevEphemeris>(back.bodies[2].ephemeris);
    CHECK(tab_out.segments[0].coeffs_x == eph.segments[0].coeffs_x);
}

TEST_CASE("system JSON: schema violations") {
    TempDir tmp;
    const auto path = tmp.path / "system.json";

    write_text(path, R"({"header": {"frame": "f", "units": {"length": "m", "time": "s",
        "mu": "km3/s2"}}, "central": {"name": "sun", "mu": 1.0}, "bodies": []})");
    CHECK_THROWS_AS(read_system_json(path), ParseError); // wrong units

    write_text(path, R"({"header": {"frame": "f", "units": {"length": "km", "time": "s",
        "mu": "km3/s2"}}, "central": {"name": "sun", "mu": 1.0}, "bodies": [],
        "extra": 1})");
    CHECK_THROWS_AS(read_system_json(path), ParseError); // unknown key

    write_text(path, R"({"header": {"frame": "f", "units": {"length": "km", "time": "s",
        "mu": "km3/s2"}}, "central": {"name": "sun", "mu": 1.0},
        "bodies": [{"name": "x", "mu": 1.0}]})");
    CHECK_THROWS_AS(read_system_json(path), ParseError); // neither provider

    write_text(path, R"({"header": {"frame": "f", "units": {"length": "km", "time": "s",
        "mu": "km3/s2"}}, "central": {"name": "sun", "mu": 1.0},
        "bodies": [{"name": "x", "mu": 1.0,
        "elements": {"a": 1e8, "e": 1.5, "i": 0, "raan": 0, "argp": 0, "M0": 0, "epoch": 0}}]})");
    CHECK_THROWS_AS(read_system_json(path), ParseError); // unbound conic

    write_text(path, "{not json");
    CHECK_THROWS_AS(read_system_json(path), ParseError);
}

TEST_CASE("config JSON: defaults reproduce the reference configuration") {
    TempDir tmp;
    const auto path = tmp.path / "config.json";
    write_text(path, "{}");
    const auto s = read_config_json(path);
    CHECK(s.config.n_nodes == 200);
    CHECK(s.config.tolerance == 1e-12);
    CHECK(s.config.error_mode == ErrorMode::relative);
    CHECK(s.config.max_iterations == 100);
    CHECK(s.config.start_mode == StartMode::warm);
    CHECK(s.mode == RunMode::grouped);
    CHECK(s.span_periods == 0.87);
    CHECK(s.output.samples == "samples.csv");
}

TEST_CASE("config JSON: explicit values, overrides, and rejection") {
    TempDir tmp;
    const auto path = tmp.path / "config.json";
    write_text(path, R"({"nodes": 64, "tolerance": 1e-10, "error_mode": "absolute",
        "max_iterations": 50, "start": "cold", "segments": "per-orbit",
        "force_model": "two_body", "mode": "augmented", "groups": 4, "threads": 2,
        "span_s": 1000.0,
        "output": {"samples": "s.csv", "report": "r.json", "error_history": "e.csv"},
        "benchmark": {"repeat": 3, "threads": [1, 2], "modes": ["independent", "grouped"]}})");
    const auto s = read_config_json(path);
    CHECK(s.config.n_nodes == 64);
    CHECK(s.config.error_mode == ErrorMode::absolute);
    CHECK(s.config.start_mode == StartMode::cold);
    CHECK(s.config.segment_policy == SegmentPolicy::per_orbit);
    CHECK(s.config.force.kind == ForceKind::two_body);
    CHECK(s.mode == RunMode::augmented_parallel);
    CHECK(s.config.p_groups == 4);
    CHECK(s.threads == 2);
    CHECK(s.span_s == 1000.0);
    CHECK(s.span_periods == 0.0);
    CHECK(s.output.error_history == "e.csv");
    CHECK(s.benchmark.repeat == 3);
    REQUIRE(s.benchmark.modes.size() == 2);
    CHECK(s.benchmark.modes[1] == RunMode::grouped);

    write_text(path, R"({"nodez": 64})");
    CHECK_THROWS_AS(read_config_json(path), ParseError);

    write_text(path, R"({"span_s": 10.0, "span_periods": 0.5})");
    CHECK_THROWS_AS(read_config_json(path), ParseError);

    write_text(path, R"({"tolerance": -1.0})");
    CHECK_THROWS_AS(read_config_json(path), ParseError);

    write_text(path, R"({"output": {"samples": "s.csv", "oops": 1}})");
    CHECK_THROWS_AS(read_config_json(path), ParseError);
}

TEST_CASE("result writers: structural checks") {
    TempDir tmp;
    PropagationConfig config;
    config.n_nodes = 16;
    config.tolerance = 1e-10;
    config.force = make_reference_force_model(ForceKind::two_body);
    const auto states = make_clone_batch(make_reference_state(), 3, 1e-5);
    const auto segments = plan_segments(states[0], 0.0, 2.0e6, mu_sun_km3s2,
                                        SegmentPolicy::single, config.n_nodes);
    const auto plan = split_groups(states, 2);
    const auto result = propagate(states, plan, segments, config);

    write_samples_csv(tmp.path / "samples.csv", result);
    const auto samples_text = read_text(tmp.path / "samples.csv");
    CHECK(samples_text.find("trajectory_id,node_index,t_s,") == 0);
    // header + 3 trajectories x 16 nodes
    CHECK(std::count(samples_text.begin(), samples_text.end(), '\n') == 1 + 3 * 16);

    write_report_json(tmp.path / "report.json", result, json{{"mode", "grouped"}});
    const json report = json::parse(read_text(tmp.path / "report.json"));
    CHECK(report.at("metadata").at("mode") == "grouped");
    CHECK(report.at("iteration_reports").size() == 2);
    CHECK(report.at("group_sizes").size() == 2);

    write_error_history_csv(tmp.path / "errors.csv", result);
    const auto errors_text = read_text(tmp.path / "errors.csv");
    CHECK(errors_text.find("segment,group,iteration,error\n") == 0);

    BenchmarkReport bench;
    bench.machine = "test";
    bench.repeat = 1;
    BenchmarkRow row;
    row.mode = RunMode::grouped;
    row.threads = 2;
    row.groups = 4;
    row.wall_time_s = 0.5;
    row.speedup = 2.0;
    row.max_iterations = 17;
    row.max_discrepancy = 1e-13;
    bench.rows.push_back(row);
    write_benchmark_csv(tmp.path / "bench.csv", bench);
    const auto bench_text = read_text(tmp.path / "bench.csv");
    CHECK(bench_text.find("mode,threads,groups,wall_time_s,speedup,max_iterations,"
                          "max_discrepancy\n")
          == 0);
    CHECK(bench_text.find("grouped,2,4,0.5,2,17,") != std::string::npos);
    CHECK(!benchmark_summary(bench).empty());
}
