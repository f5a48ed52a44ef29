#include "pxspk/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace pxspk;

    CLI::App app{"Paraxial speckle Monte Carlo and moment toolkit"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    CliOptions opts;
    std::string config;
    std::uint64_t seed = 0;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config, "experiment config (JSON)");
        if (needs_config)
            c->required();
        sub->add_option("--seed", seed, "override ensemble.seed");
        sub->add_option("--threads", opts.threads, "worker threads (falls back to PXSPK_THREADS, then 1)");
        sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
    };

    auto* validate = app.add_subcommand("validate", "check modelling assumptions and echo resolved parameters");
    add_common(validate, true);

    PropagateCommand prop;
    std::string solver;
    auto* propagate = app.add_subcommand("propagate", "propagate one realization and write field snapshots");
    add_common(propagate, true);
    propagate->add_option("--solver", solver, "paraxial or ito")->check(CLI::IsMember({"paraxial", "ito"}));
    propagate->add_option("--snapshot-at", prop.snapshot_at, "snapshot depths");

    ExperimentCommand exp;
    Index shard = -1;
    auto* experiment = app.add_subcommand("experiment", "run the configured ensemble (resumable by shard)");
    add_common(experiment, true);
    experiment->add_option("--shard", shard, "run and store a single shard");

    auto* compare = app.add_subcommand("compare-moments", "Monte Carlo mu_11 against the analytic moments");
    add_common(compare, true);

    CalibrateCommand cal;
    auto* calibrate = app.add_subcommand("calibrate-ks", "simulate the KS null distribution for Exp samples");
    add_common(calibrate, false);
    calibrate->add_option("--n", cal.n, "sample size")->check(CLI::Range(Index(50), Index(1) << 40));
    calibrate->add_option("--trials", cal.trials, "number of null trials")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    opts.config = config;
    for (const auto* sub : app.get_subcommands())
        if (sub->count("--seed"))
            opts.seed = seed;
    if (!out_dir.empty())
        opts.out = out_dir;

    return run_guarded(
        [&]() -> int {
            if (app.got_subcommand(validate))
                return cmd_validate(opts, std::cout);
            if (app.got_subcommand(propagate))
            {
                if (!solver.empty())
                    prop.solver = solver_kind_from_string(solver);
                return cmd_propagate(opts, prop, std::cout);
            }
            if (app.got_subcommand(experiment))
            {
                if (shard >= 0)
                    exp.shard = shard;
                return cmd_experiment(opts, exp, std::cout);
            }
            if (app.got_subcommand(compare))
                return cmd_compare_moments(opts, std::cout);
            return cmd_calibrate_ks(opts, cal, std::cout);
        },
        std::cerr);
}
