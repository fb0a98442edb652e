#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pswarm/cli.hpp"

namespace {

void add_common_overrides(CLI::App* cmd, pswarm::CliOverrides& o) {
    cmd->add_option("--mode", o.mode,
                    "independent | augmented_sequential | augmented_parallel | grouped");
    cmd->add_option("--groups", o.groups, "outer group count for grouped mode");
    cmd->add_option("--nodes", o.nodes, "Chebyshev nodes per segment");
    cmd->add_option("--tol", o.tolerance, "iteration stopping tolerance");
    cmd->add_option("--max-iter", o.max_iterations, "iteration cap per segment");
    cmd->add_option("--start", o.start, "warm | cold");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pswarm - batch orbit propagation with the augmented "
                 "Picard-Chebyshev integrator"};
    app.require_subcommand(1);

    pswarm::PropagateOptions prop;
    auto* propagate = app.add_subcommand("propagate", "propagate a batch of initial conditions");
    propagate->add_option("--config", prop.config_path, "run configuration JSON");
    propagate->add_option("--input", prop.input_path, "initial conditions CSV")->required();
    propagate->add_option("--ephemeris", prop.ephemeris_path, "system model JSON")->required();
    propagate->add_option("--out", prop.out_dir, "output directory (default: out)");
    add_common_overrides(propagate, prop.overrides);
    propagate->add_option("--threads", prop.overrides.threads,
                          "worker count (default: PICARD_SWARM_THREADS or hardware)");
    propagate->add_flag("--oracle-check", prop.oracle_check,
                        "append reference-integrator discrepancies to the outputs");

    pswarm::BenchmarkOptions bench;
    auto* benchmark = app.add_subcommand("benchmark", "compare execution modes and thread counts");
    benchmark->add_option("--config", bench.config_path, "run configuration JSON");
    benchmark->add_option("--input", bench.input_path, "initial conditions CSV")->required();
    benchmark->add_option("--ephemeris", bench.ephemeris_path, "system model JSON")->required();
    benchmark->add_option("--out", bench.out_dir, "output directory (default: out)");
    add_common_overrides(benchmark, bench.overrides);
    benchmark->add_option("--threads", bench.threads_list, "comma-separated thread counts");
    benchmark->add_option("--modes", bench.modes_list, "comma-separated run modes");
    benchmark->add_option("--repeat", bench.repeat, "timing repetitions per case (median)");

    pswarm::SelftestCliOptions self;
    auto* selftest = app.add_subcommand("selftest", "run the embedded verification suite");
    selftest->add_option("--nodes", self.nodes, "node count for the operator checks");
    selftest->add_option("--batch", self.batch, "synthetic batch size");
    selftest->add_flag("--perturb-matrices", self.perturb_matrices,
                       "negative control: corrupt the operators before checking");

    CLI11_PARSE(app, argc, argv);

    if (propagate->parsed()) {
        return pswarm::cmd_propagate(prop, std::cout, std::cerr);
    }
    if (benchmark->parsed()) {
        return pswarm::cmd_benchmark(bench, std::cout, std::cerr);
    }
    return pswarm::cmd_selftest(self, std::cout, std::cerr);
}
