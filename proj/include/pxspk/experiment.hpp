#pragma once

#include "pxspk/config.hpp"
#include "pxspk/stats.hpp"

#include <optional>
#include <vector>

namespace pxspk
{

/// Intensity statistics of one probe point at one checkpoint. Tests whose
/// sample-size precondition fails are left empty.
struct PointSummary
{
    std::size_t probe = 0;
    Index point = 0;
    MomentEstimate mean_intensity;
    std::optional<MomentEstimate> scintillation;
    std::optional<TestResult> ks;
    std::optional<TestResult> circularity;
};

struct IndependenceRow
{
    std::size_t probe_a = 0;
    std::size_t probe_b = 0;
    TestResult test;
};

struct CheckpointSummary
{
    Real z = 0.0;
    std::vector<PointSummary> points;
    /// First point of probe 0 against the first point of every other probe.
    std::vector<IndependenceRow> independence;
};

std::vector<CheckpointSummary> summarize_ensemble(const EnsembleResult& res);

/// Shard k of S covers realizations [N k / S, N (k + 1) / S).
EnsembleConfig shard_config(const EnsembleConfig& cfg, Index shard, Index shards);

/// Ensemble over the compare pairs at compare.z.
EnsembleResult run_pair_ensemble(const ExperimentConfig& cfg, SolverKind solver, const ScalingRegime& regime,
                                 const Grid& grid, unsigned threads);

struct PairComparison
{
    VectorXr x;
    VectorXr y;
    MomentEstimate monte_carlo;
    AnalyticMoment prelimit;
    std::optional<AnalyticMoment> limit;
    /// |monte_carlo - prelimit|
    Real deviation = 0.0;
    /// 3 sqrt(se^2 + quadrature_error^2), floored at 1e-6 for deterministic runs.
    Real tolerance = 0.0;
    bool pass = false;
};

/// Monte Carlo mu_11 of a pair ensemble against the prelimit and limiting formulas.
std::vector<PairComparison> compare_pairs(const ExperimentConfig& cfg, const EnsembleResult& pairs);

struct SweepRow
{
    Real theta = 0.0;
    /// max over pairs of |mu_paraxial - mu_reference|, Monte Carlo on both sides.
    Real max_discrepancy = 0.0;
    /// sqrt(se_paraxial^2 + se_reference^2) at the maximizing pair.
    Real combined_se = 0.0;
    std::size_t worst_pair = 0;
    /// max over pairs of |mu_paraxial - m11_prelimit| and the paraxial se there.
    Real max_vs_prelimit = 0.0;
    Real se_vs_prelimit = 0.0;
    /// max_discrepancy does not exceed the previous row's.
    bool nonincreasing = true;
};

/// Paraxial runs at each compare.theta_sweep value (epsilon, eta and the seed
/// count fixed) against the Monte Carlo values of a reference comparison.
std::vector<SweepRow> theta_sweep(const ExperimentConfig& cfg, const std::vector<PairComparison>& reference_rows,
                                  unsigned threads);

} // namespace pxspk
