#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pswarm/ephemeris.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/propagator.hpp"
#include "pswarm/runner.hpp"
#include "pswarm/state.hpp"

namespace pswarm {

using json = nlohmann::json;

// Numeric text IO goes through to_chars/from_chars: locale independent, and
// 17 significant digits make the text round-trip value-exact for doubles.

inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
    // Leading whitespace is not consumed by from_chars.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError(context + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

/// Rejects keys outside the documented schema.
inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ParseError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

inline json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Initial-condition batches (CSV)

inline constexpr std::string_view batch_csv_header =
    "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms";

inline std::vector<StateVector> read_batch_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != batch_csv_header) {
        throw ParseError("'" + path.string() + "': first line must be '"
                         + std::string(batch_csv_header) + "'");
    }
    std::vector<StateVector> states;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        ++row;
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 7) {
            throw ParseError("'" + path.string() + "' row " + std::to_string(row) + ": expected 7 "
                             + "fields, got " + std::to_string(fields.size()));
        }
        const std::string ctx = "'" + path.string() + "' row " + std::to_string(row);
        StateVector s;
        s.epoch = parse_double(fields[0], ctx);
        for (int c = 0; c < 3; ++c) {
            s.r[c] = parse_double(fields[static_cast<std::size_t>(1 + c)], ctx);
            s.v[c] = parse_double(fields[static_cast<std::size_t>(4 + c)], ctx);
        }
        if (!is_finite(s)) {
            throw ParseError(ctx + ": non-finite state");
        }
        states.push_back(s);
    }
    if (states.empty()) {
        throw ParseError("'" + path.string() + "': no initial conditions");
    }
    return states;
}

inline void write_batch_csv(const std::filesystem::path& path,
                            std::span<const StateVector> states) {
    auto out = detail::open_output(path);
    out << batch_csv_header << "\n";
    for (const auto& s : states) {
        out << format_double(s.epoch);
        for (int c = 0; c < 3; ++c) {
            out << ',' << format_double(s.r[c]);
        }
        for (int c = 0; c < 3; ++c) {
            out << ',' << format_double(s.v[c]);
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Ephemeris system file (JSON)

struct SystemModel {
    std::string frame = "heliocentric-ecliptic-J2000";
    std::string central_name = "sun";
    double central_mu = 0.0;
    std::vector<BodySpec> bodies;
};

inline SystemModel read_system_json(const std::filesystem::path& path) {
    const json root = detail::load_json(path);
    const std::string where = "'" + path.string() + "'";
    try {
        detail::check_keys(root, {"header", "central", "bodies"}, where);
        const json& header = root.at("header");
        detail::check_keys(header, {"frame", "units"}, where + " header");
        const json& units = header.at("units");
        detail::check_keys(units, {"length", "time", "mu"}, where + " units");
        if (units.at("length") != "km" || units.at("time") != "s"
            || units.at("mu") != "km3/s2") {
            throw ParseError(where + ": units must be km, s, km3/s2");
        }
        SystemModel model;
        model.frame = header.at("frame").get<std::string>();
        const json& central = root.at("central");
        detail::check_keys(central, {"name", "mu"}, where + " central");
        model.central_name = central.at("name").get<std::string>();
        model.central_mu = central.at("mu").get<double>();
        if (!(model.central_mu > 0.0)) {
            throw ParseError(where + ": central mu must be positive");
        }
        for (const json& jb : root.value("bodies", json::array())) {
            detail::check_keys(jb, {"name", "mu", "elements", "chebyshev"}, where + " body");
            BodySpec body;
            body.name = jb.at("name").get<std::string>();
            body.mu = jb.at("mu").get<double>();
            if (!(body.mu > 0.0)) {
                throw ParseError(where + ": body '" + body.name + "' mu must be positive");
            }
            const bool has_elements = jb.contains("elements");
            const bool has_chebyshev = jb.contains("chebyshev");
            if (has_elements == has_chebyshev) {
                throw ParseError(where + ": body '" + body.name
                                 + "' needs exactly one of elements/chebyshev");
            }
            if (has_elements) {
                const json& je = jb.at("elements");
                detail::check_keys(je, {"a", "e", "i", "raan", "argp", "M0", "epoch"},
                                   where + " elements of '" + body.name + "'");
                OrbitalElements el;
                el.a = je.at("a").get<double>();
                el.e = je.at("e").get<double>();
                el.i = je.at("i").get<double>();
                el.raan = je.at("raan").get<double>();
                el.argp = je.at("argp").get<double>();
                el.m0 = je.at("M0").get<double>();
                el.epoch = je.at("epoch").get<double>();
                if (!(el.a > 0.0) || el.e < 0.0 || el.e >= 1.0) {
                    throw ParseError(where + ": body '" + body.name
                                     + "' elements must describe a bound conic");
                }
                body.ephemeris = el;
            } else {
                ChebyshevEphemeris eph;
                for (const json& js : jb.at("chebyshev")) {
                    detail::check_keys(js, {"t_start", "t_end", "coeffs_x", "coeffs_y", "coeffs_z"},
                                       where + " chebyshev segment of '" + body.name + "'");
                    ChebyshevSegment seg;
                    seg.t_start = js.at("t_start").get<double>();
                    seg.t_end = js.at("t_end").get<double>();
                    const auto cx = js.at("coeffs_x").get<std::vector<double>>();
                    const auto cy = js.at("coeffs_y").get<std::vector<double>>();
                    const auto cz = js.at("coeffs_z").get<std::vector<double>>();
                    if (cx.empty() || cx.size() != cy.size() || cx.size() != cz.size()) {
                        throw ParseError(where + ": body '" + body.name
                                         + "' needs equal, non-empty coefficient arrays");
                    }
                    seg.coeffs_x = Eigen::Map<const Vec>(cx.data(), static_cast<Index>(cx.size()));
                    seg.coeffs_y = Eigen::Map<const Vec>(cy.data(), static_cast<Index>(cy.size()));
                    seg.coeffs_z = Eigen::Map<const Vec>(cz.data(), static_cast<Index>(cz.size()));
                    eph.segments.push_back(std::move(seg));
                }
                if (eph.segments.empty()) {
                    throw ParseError(where + ": body '" + body.name + "' has no segments");
                }
                body.ephemeris = std::move(eph);
            }
            model.bodies.push_back(std::move(body));
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

inline void write_system_json(const std::filesystem::path& path, const SystemModel& model) {
    json root;
    root["header"] = {{"frame", model.frame},
                      {"units", {{"length", "km"}, {"time", "s"}, {"mu", "km3/s2"}}}};
    root["central"] = {{"name", model.central_name}, {"mu", model.central_mu}};
    root["bodies"] = json::array();
    for (const auto& body : model.bodies) {
        json jb = {{"name", body.name}, {"mu", body.mu}};
        if (const auto* el = std::get_if<OrbitalElements>(&body.ephemeris)) {
            jb["elements"] = {{"a", el->a},     {"e", el->e},         {"i", el->i},
                              {"raan", el->raan}, {"argp", el->argp}, {"M0", el->m0},
                              {"epoch", el->epoch}};
        } else {
            const auto& eph = std::get<ChebyshevEphemeris>(body.ephemeris);
            json segments = json::array();
            for (const auto& seg : eph.segments) {
                segments.push_back(
                    {{"t_start", seg.t_start},
                     {"t_end", seg.t_end},
                     {"coeffs_x", std::vector<double>(seg.coeffs_x.begin(), seg.coeffs_x.end())},
                     {"coeffs_y", std::vector<double>(seg.coeffs_y.begin(), seg.coeffs_y.end())},
                     {"coeffs_z", std::vector<double>(seg.coeffs_z.begin(), seg.coeffs_z.end())}});
            }
            jb["chebyshev"] = std::move(segments);
        }
        root["bodies"].push_back(std::move(jb));
    }
    auto out = detail::open_output(path);
    out << root.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration (JSON)

struct OutputSpec {
    std::string samples = "samples.csv";
    std::string report = "report.json";
    std::string error_history; // empty disables the per-iteration dump
};

struct BenchmarkSpec {
    int repeat = 5;
    std::vector<unsigned> threads{1};
    std::vector<RunMode> modes{RunMode::independent, RunMode::augmented_parallel};
};

struct RunSettings {
    PropagationConfig config;
    RunMode mode = RunMode::grouped;
    unsigned threads = 0; // 0 -> PICARD_SWARM_THREADS or hardware default
    double span_s = 0.0;
    double span_periods = 0.87; // used when span_s is 0
    OutputSpec output;
    BenchmarkSpec benchmark;
};

inline StartMode parse_start_mode(const std::string& name) {
    if (name == "warm") return StartMode::warm;
    if (name == "cold") return StartMode::cold;
    throw ParseError("start mode must be 'warm' or 'cold', got '" + name + "'");
}

inline ErrorMode parse_error_mode(const std::string& name) {
    if (name == "relative") return ErrorMode::relative;
    if (name == "absolute") return ErrorMode::absolute;
    throw ParseError("error mode must be 'relative' or 'absolute', got '" + name + "'");
}

inline SegmentPolicy parse_segment_policy(const std::string& name) {
    if (name == "single") return SegmentPolicy::single;
    if (name == "per-orbit") return SegmentPolicy::per_orbit;
    throw ParseError("segment policy must be 'single' or 'per-orbit', got '" + name + "'");
}

inline ForceKind parse_force_kind(const std::string& name) {
    if (name == "two_body") return ForceKind::two_body;
    if (name == "n_body") return ForceKind::n_body;
    throw ParseError("force model must be 'two_body' or 'n_body', got '" + name + "'");
}

inline RunSettings read_config_json(const std::filesystem::path& path) {
    const json root = detail::load_json(path);
    const std::string where = "'" + path.string() + "'";
    RunSettings s;
    s.config.force.kind = ForceKind::n_body;
    try {
        detail::check_keys(root,
                           {"nodes", "tolerance", "error_mode", "max_iterations", "start",
                            "segments", "max_segment_periods", "force_model",
                            "proximity_floor_km", "mode", "groups", "threads", "timeout_s",
                            "span_s", "span_periods", "output", "benchmark"},
                           where);
        s.config.n_nodes = root.value("nodes", static_cast<Index>(200));
        s.config.tolerance = root.value("tolerance", 1e-12);
        s.config.error_mode = parse_error_mode(root.value("error_mode", "relative"));
        s.config.max_iterations = root.value("max_iterations", 100);
        s.config.start_mode = parse_start_mode(root.value("start", "warm"));
        s.config.segment_policy = parse_segment_policy(root.value("segments", "single"));
        s.config.max_segment_periods = root.value("max_segment_periods", 1.0);
        s.config.force.kind = parse_force_kind(root.value("force_model", "n_body"));
        s.config.force.proximity_floor_km = root.value("proximity_floor_km", 1.0);
        s.config.p_groups = root.value("groups", static_cast<Index>(1));
        s.config.timeout_s = root.value("timeout_s", 0.0);
        s.mode = parse_run_mode(root.value("mode", "grouped"));
        s.threads = root.value("threads", 0u);
        if (root.contains("span_s") && root.contains("span_periods")) {
            throw ParseError(where + ": give span_s or span_periods, not both");
        }
        s.span_s = root.value("span_s", 0.0);
        s.span_periods = root.value("span_periods", s.span_s != 0.0 ? 0.0 : 0.87);
        if (root.contains("output")) {
            const json& jo = root.at("output");
            detail::check_keys(jo, {"samples", "report", "error_history"}, where + " output");
            s.output.samples = jo.value("samples", s.output.samples);
            s.output.report = jo.value("report", s.output.report);
            s.output.error_history = jo.value("error_history", s.output.error_history);
        }
        if (root.contains("benchmark")) {
            const json& jb = root.at("benchmark");
            detail::check_keys(jb, {"repeat", "threads", "modes"}, where + " benchmark");
            s.benchmark.repeat = jb.value("repeat", s.benchmark.repeat);
            if (jb.contains("threads")) {
                s.benchmark.threads = jb.at("threads").get<std::vector<unsigned>>();
            }
            if (jb.contains("modes")) {
                s.benchmark.modes.clear();
                for (const auto& name : jb.at("modes")) {
                    s.benchmark.modes.push_back(parse_run_mode(name.get<std::string>()));
                }
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    if (s.config.n_nodes < 3) {
        throw ParseError(where + ": nodes must be at least 3");
    }
    if (!(s.config.tolerance > 0.0)) {
        throw ParseError(where + ": tolerance must be positive");
    }
    if (s.config.max_iterations < 1) {
        throw ParseError(where + ": max_iterations must be positive");
    }
    if (s.span_s == 0.0 && !(s.span_periods > 0.0) && !(s.span_periods < 0.0)) {
        throw ParseError(where + ": need a non-zero span_s or span_periods");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Result writers

inline void write_samples_csv(const std::filesystem::path& path,
                              const PropagationResult& result,
                              const Mat* oracle_errors = nullptr) {
    auto out = detail::open_output(path);
    out << "trajectory_id,node_index,t_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms";
    if (oracle_errors != nullptr) {
        out << ",oracle_rel_err";
    }
    out << "\n";
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
        const Mat& traj = result.trajectories[i];
        for (Index j = 0; j < traj.rows(); ++j) {
            out << i << ',' << j << ',' << format_double(result.times[j]);
            for (Index c = 0; c < state_dim; ++c) {
                out << ',' << format_double(traj(j, c));
            }
            if (oracle_errors != nullptr) {
                out << ',' << format_double((*oracle_errors)(j, static_cast<Index>(i)));
            }
            out << "\n";
        }
    }
}

inline void write_report_json(const std::filesystem::path& path, const PropagationResult& result,
                              const json& metadata = json::object(),
                              const Vec* oracle_max_per_trajectory = nullptr) {
    json root;
    root["metadata"] = metadata;
    root["group_sizes"] = result.plan.group_sizes;
    root["segment_boundaries"] = result.segments.boundaries;
    root["warnings"] = result.warnings;
    json reports = json::array();
    for (std::size_t seg = 0; seg < result.reports.size(); ++seg) {
        for (std::size_t g = 0; g < result.reports[seg].size(); ++g) {
            const auto& rep = result.reports[seg][g];
            reports.push_back({{"segment", seg},
                               {"group", g},
                               {"iterations", rep.iterations},
                               {"converged", rep.converged},
                               {"final_error", rep.final_error}});
        }
    }
    root["iteration_reports"] = std::move(reports);
    if (oracle_max_per_trajectory != nullptr) {
        root["oracle_check"] = {
            {"per_trajectory_max",
             std::vector<double>(oracle_max_per_trajectory->begin(),
                                 oracle_max_per_trajectory->end())},
            {"max", oracle_max_per_trajectory->maxCoeff()}};
    }
    auto out = detail::open_output(path);
    out << root.dump(2) << "\n";
}

inline void write_error_history_csv(const std::filesystem::path& path,
                                    const PropagationResult& result) {
    auto out = detail::open_output(path);
    out << "segment,group,iteration,error\n";
    for (std::size_t seg = 0; seg < result.reports.size(); ++seg) {
        for (std::size_t g = 0; g < result.reports[seg].size(); ++g) {
            const auto& history = result.reports[seg][g].per_iteration_errors;
            for (std::size_t it = 0; it < history.size(); ++it) {
                out << seg << ',' << g << ',' << (it + 1) << ',' << format_double(history[it])
                    << "\n";
            }
        }
    }
}

inline void write_benchmark_csv(const std::filesystem::path& path,
                                const BenchmarkReport& report) {
    auto out = detail::open_output(path);
    out << "mode,threads,groups,wall_time_s,speedup,max_iterations,max_discrepancy\n";
    for (const auto& row : report.rows) {
        out << to_string(row.mode) << ',' << row.threads << ',' << row.groups << ','
            << format_double(row.wall_time_s) << ',' << format_double(row.speedup) << ','
            << row.max_iterations << ',' << format_double(row.max_discrepancy) << "\n";
    }
}

inline std::string benchmark_summary(const BenchmarkReport& report) {
    std::ostringstream os;
    os << "machine: " << report.machine << ", median of " << report.repeat << " run(s)\n";
    os << "mode                   threads  groups  wall_time_s  speedup  max_iter  max_discrepancy\n";
    for (const auto& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-22s %7u %7lld %12.4f %8.3f %9d %16.3e\n",
                      to_string(row.mode).c_str(), row.threads,
                      static_cast<long long>(row.groups), row.wall_time_s, row.speedup,
                      row.max_iterations, row.max_discrepancy);
        os << line;
    }
    return os.str();
}

} // namespace pswarm
