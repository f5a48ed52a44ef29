#pragma once

#include "pxspk/config.hpp"
#include "pxspk/experiment.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string_view>

namespace pxspk
{

/// Git-style version string fixed at configure time.
std::string_view version();

struct CliOptions
{
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    /// 0 defers to PXSPK_THREADS, then 1.
    unsigned threads = 0;
    std::optional<std::filesystem::path> out;
};

struct PropagateCommand
{
    std::optional<SolverKind> solver;
    /// Snapshot depths; the positive ensemble checkpoints when empty.
    std::vector<Real> snapshot_at;
};

struct ExperimentCommand
{
    /// Run and store only this shard.
    std::optional<Index> shard;
};

struct CalibrateCommand
{
    Index n = 10000;
    Index trials = 1000;
};

/// Config document with command-line overrides (--seed) applied before hashing.
ExperimentConfig resolve_config(const CliOptions& opts);

int cmd_validate(const CliOptions& opts, std::ostream& out);
int cmd_propagate(const CliOptions& opts, const PropagateCommand& cmd, std::ostream& out);
int cmd_experiment(const CliOptions& opts, const ExperimentCommand& cmd, std::ostream& out);
int cmd_compare_moments(const CliOptions& opts, std::ostream& out);
int cmd_calibrate_ks(const CliOptions& opts, const CalibrateCommand& cmd, std::ostream& out);

/// Runs a command body and maps failures to exit codes:
/// 2 for config and schema errors, 1 for everything else.
int run_guarded(const std::function<int()>& body, std::ostream& err);

} // namespace pxspk
