#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pswarm/io.hpp"
#include "pswarm/oracle.hpp"
#include "pswarm/selftest.hpp"

namespace pswarm {

// Exit codes: 0 success, 1 internal error, 2 parse/validation error,
// 3 ephemeris coverage error, 4 non-convergence (including timeouts).
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int parse = 2;
inline constexpr int coverage = 3;
inline constexpr int nonconvergence = 4;
} // namespace exit_code

/// Flag overrides layered on top of the config file.
struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<Index> groups;
    std::optional<unsigned> threads;
    std::optional<Index> nodes;
    std::optional<double> tolerance;
    std::optional<int> max_iterations;
    std::optional<std::string> start;
};

struct PropagateOptions {
    std::string config_path;    // optional; defaults apply when empty
    std::string input_path;     // required
    std::string ephemeris_path; // required
    std::string out_dir = "out";
    CliOverrides overrides;
    bool oracle_check = false;
};

struct BenchmarkOptions {
    std::string config_path;
    std::string input_path;
    std::string ephemeris_path;
    std::string out_dir = "out";
    CliOverrides overrides;
    std::optional<int> repeat;
    std::optional<std::string> threads_list; // comma separated
    std::optional<std::string> modes_list;   // comma separated
};

struct SelftestCliOptions {
    Index nodes = 200;
    Index batch = 64;
    bool perturb_matrices = false;
};

namespace detail {

inline unsigned resolve_threads(unsigned configured) {
    if (configured > 0) {
        return configured;
    }
    if (const char* env = std::getenv("PICARD_SWARM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

inline RunSettings load_settings(const std::string& config_path, const CliOverrides& o) {
    RunSettings settings;
    if (!config_path.empty()) {
        settings = read_config_json(config_path);
    }
    if (o.mode) settings.mode = parse_run_mode(*o.mode);
    if (o.groups) settings.config.p_groups = *o.groups;
    if (o.threads) settings.threads = *o.threads;
    if (o.nodes) settings.config.n_nodes = *o.nodes;
    if (o.tolerance) settings.config.tolerance = *o.tolerance;
    if (o.max_iterations) settings.config.max_iterations = *o.max_iterations;
    if (o.start) settings.config.start_mode = parse_start_mode(*o.start);
    if (settings.config.n_nodes < 3) {
        throw ParseError("nodes must be at least 3");
    }
    if (!(settings.config.tolerance > 0.0)) {
        throw ParseError("tolerance must be positive");
    }
    return settings;
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) {
            items.push_back(text.substr(start));
            break;
        }
        items.push_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return items;
}

/// Shared-epoch premise of the augmented formulation: every row must carry
/// the same epoch.
inline void require_shared_epoch(const std::vector<StateVector>& states,
                                 const std::string& input_path) {
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (states[i].epoch != states[0].epoch) {
            throw ParseError("'" + input_path + "' row " + std::to_string(i + 1) + ": epoch "
                             + format_double(states[i].epoch) + " differs from row 1 epoch "
                             + format_double(states[0].epoch)
                             + "; augmented runs need shared time nodes");
        }
    }
}

struct LoadedRun {
    RunSettings settings;
    std::vector<StateVector> states;
    SystemModel system;
    SegmentPlan segments;
    unsigned workers = 1;
};

inline LoadedRun load_run(const std::string& config_path, const std::string& input_path,
                          const std::string& ephemeris_path, const CliOverrides& overrides) {
    LoadedRun run;
    run.settings = load_settings(config_path, overrides);
    run.states = read_batch_csv(input_path);
    require_shared_epoch(run.states, input_path);
    run.system = read_system_json(ephemeris_path);
    run.settings.config.force.central_mu = run.system.central_mu;
    run.settings.config.force.bodies = run.system.bodies;
    if (run.settings.config.force.kind == ForceKind::n_body
        && run.settings.config.force.bodies.empty()) {
        throw ParseError("n_body force model needs at least one perturbing body in '"
                         + ephemeris_path + "'");
    }

    const double t0 = run.states[0].epoch;
    double t_end;
    if (run.settings.span_s != 0.0) {
        t_end = t0 + run.settings.span_s;
    } else {
        const double period = osculating_period(run.states[0], run.system.central_mu);
        t_end = t0 + run.settings.span_periods * period;
    }
    run.segments = plan_segments(run.states[0], t0, t_end, run.system.central_mu,
                                 run.settings.config.segment_policy, run.settings.config.n_nodes,
                                 run.settings.config.max_segment_periods);
    run.workers = resolve_threads(run.settings.threads);
    return run;
}

inline json run_metadata(const LoadedRun& run, RunMode mode, unsigned workers,
                         double wall_time_s) {
    return json{{"mode", to_string(mode)},
                {"threads", workers},
                {"nodes", run.settings.config.n_nodes},
                {"tolerance", run.settings.config.tolerance},
                {"max_iterations", run.settings.config.max_iterations},
                {"start", run.settings.config.start_mode == StartMode::warm ? "warm" : "cold"},
                {"frame", run.system.frame},
                {"central_mu", run.system.central_mu},
                {"trajectories", run.states.size()},
                {"wall_time_s", wall_time_s}};
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::parse;
    } catch (const AlignmentError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::parse;
    } catch (const CoverageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::coverage;
    } catch (const TimeoutError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::nonconvergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::internal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_code::internal;
    }
}

} // namespace detail

inline int cmd_propagate(const PropagateOptions& options, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        auto run = detail::load_run(options.config_path, options.input_path,
                                    options.ephemeris_path, options.overrides);
        const std::filesystem::path out_dir(options.out_dir);

        RunOutcome outcome;
        try {
            outcome = run_batch(run.states, run.settings.config, run.segments,
                                run.settings.mode, run.workers);
        } catch (const PropagationIncompleteError& e) {
            err << "error: " << e.what() << "\n";
            if (e.partial() != nullptr && !e.partial()->reports.empty()) {
                write_report_json(out_dir / run.settings.output.report, *e.partial(),
                                  json{{"status", "incomplete"},
                                       {"failed_segment", e.segment()},
                                       {"failed_group", e.group()}});
                err << "partial report written to "
                    << (out_dir / run.settings.output.report).string() << "\n";
            }
            return exit_code::nonconvergence;
        }

        for (const auto& warning : outcome.result.warnings) {
            err << "warning: " << warning << "\n";
        }

        std::optional<Mat> oracle_errors;
        std::optional<Vec> oracle_max;
        if (options.oracle_check) {
            const auto& cfg = run.settings.config.force;
            auto deriv = [&cfg](double t, const State6& y) {
                State6 dy;
                dy.head<3>() = y.tail<3>();
                dy.tail<3>() = acceleration_at(y.head<3>(), t, cfg);
                return dy;
            };
            const Index rows = outcome.result.times.size();
            const Index cols = static_cast<Index>(run.states.size());
            oracle_errors.emplace(rows, cols);
            oracle_max.emplace(cols);
            for (Index i = 0; i < cols; ++i) {
                const Mat reference = oracle_sample_trajectory(
                    run.states[static_cast<std::size_t>(i)], deriv, outcome.result.times);
                const auto rep = compare_trajectories(
                    outcome.result.trajectories[static_cast<std::size_t>(i)], reference);
                for (Index j = 0; j < rows; ++j) {
                    (*oracle_errors)(j, i) =
                        std::max(rep.per_node_position[j], rep.per_node_velocity[j]);
                }
                (*oracle_max)[i] = rep.max_combined;
            }
        }

        write_samples_csv(out_dir / run.settings.output.samples, outcome.result,
                          oracle_errors ? &*oracle_errors : nullptr);
        write_report_json(out_dir / run.settings.output.report, outcome.result,
                          detail::run_metadata(run, run.settings.mode, run.workers,
                                               outcome.wall_time_s),
                          oracle_max ? &*oracle_max : nullptr);
        if (!run.settings.output.error_history.empty()) {
            write_error_history_csv(out_dir / run.settings.output.error_history, outcome.result);
        }

        out << "propagated " << run.states.size() << " trajectories over "
            << run.segments.segments() << " segment(s) in " << format_double(outcome.wall_time_s)
            << " s; max iterations " << outcome.result.max_iterations_used() << "\n";
        if (oracle_max) {
            out << "oracle check: max relative discrepancy " << format_double(oracle_max->maxCoeff())
                << "\n";
        }
        return exit_code::ok;
    });
}

inline int cmd_benchmark(const BenchmarkOptions& options, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        auto run = detail::load_run(options.config_path, options.input_path,
                                    options.ephemeris_path, options.overrides);
        auto spec = run.settings.benchmark;
        if (options.repeat) {
            spec.repeat = *options.repeat;
        }
        if (options.threads_list) {
            spec.threads.clear();
            for (const auto& item : detail::split_list(*options.threads_list)) {
                const int n = std::atoi(item.c_str());
                if (n < 1) {
                    throw ParseError("invalid thread count '" + item + "'");
                }
                spec.threads.push_back(static_cast<unsigned>(n));
            }
        }
        if (options.modes_list) {
            spec.modes.clear();
            for (const auto& item : detail::split_list(*options.modes_list)) {
                spec.modes.push_back(parse_run_mode(item));
            }
        }
        if (spec.repeat < 1) {
            throw ParseError("benchmark repeat must be positive");
        }

        const auto report = run_benchmark(run.states, run.settings.config, run.segments,
                                          spec.threads, spec.modes, spec.repeat);
        write_benchmark_csv(std::filesystem::path(options.out_dir) / "benchmark.csv", report);
        out << benchmark_summary(report);
        return exit_code::ok;
    });
}

inline int cmd_selftest(const SelftestCliOptions& options, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        SelftestOptions opts;
        opts.n_nodes = options.nodes;
        opts.batch_size = options.batch;
        opts.perturb_matrices = options.perturb_matrices;
        return run_selftest(out, opts) ? exit_code::ok : exit_code::internal;
    });
}

} // namespace pswarm
