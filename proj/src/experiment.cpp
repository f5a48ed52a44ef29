#include "pxspk/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace pxspk
{

std::vector<CheckpointSummary> summarize_ensemble(const EnsembleResult& res)
{
    std::vector<CheckpointSummary> out;
    const Index n = res.n_realizations();
    for (std::size_t c = 0; c < res.checkpoints.size(); ++c)
    {
        CheckpointSummary cs;
        cs.z = res.checkpoints[c];
        for (std::size_t p = 0; p < res.probes.size(); ++p)
            for (Index j = 0; j < res.probes[p].X.cols(); ++j)
            {
                const VectorXc phi = res.samples[c].col(res.column(p, j));
                const VectorXr intensity = phi.cwiseAbs2();
                PointSummary ps;
                ps.probe = p;
                ps.point = j;
                if (n >= 2)
                {
                    ps.mean_intensity = mean_estimate(intensity.cast<Complex>());
                    if (intensity.sum() > 0.0)
                        ps.scintillation = scintillation_index(intensity);
                }
                else
                {
                    ps.mean_intensity.value = intensity.size() ? intensity(0) : 0.0;
                    ps.mean_intensity.n_samples = n;
                }
                if (n >= 50)
                    ps.ks = ks_exponential(intensity);
                if (n >= 100)
                    ps.circularity = circularity_test(phi);
                cs.points.push_back(std::move(ps));
            }
        if (n >= 100)
            for (std::size_t p = 1; p < res.probes.size(); ++p)
            {
                const VectorXc a = res.samples[c].col(res.column(0, 0));
                const VectorXc b = res.samples[c].col(res.column(p, 0));
                cs.independence.push_back({0, p, independence_test(a, b)});
            }
        out.push_back(std::move(cs));
    }
    return out;
}

EnsembleConfig shard_config(const EnsembleConfig& cfg, Index shard, Index shards)
{
    require(shards >= 1 && shard >= 0 && shard < shards, ErrorCode::InvalidParameter, "shard index out of range");
    require(shards <= cfg.n_realizations, ErrorCode::InvalidParameter, "more shards than realizations");
    EnsembleConfig out = cfg;
    const Index lo = cfg.n_realizations * shard / shards;
    const Index hi = cfg.n_realizations * (shard + 1) / shards;
    out.first_realization = cfg.first_realization + lo;
    out.n_realizations = hi - lo;
    return out;
}

EnsembleResult run_pair_ensemble(const ExperimentConfig& cfg, SolverKind solver, const ScalingRegime& regime,
                                 const Grid& grid, unsigned threads)
{
    require(cfg.compare.has_value(), ErrorCode::SchemaError, "config has no compare section");
    EnsembleConfig e = cfg.ensemble;
    e.solver = solver;
    e.probes = pair_probes(*cfg.compare);
    e.checkpoints = {cfg.compare->z};
    e.threads = threads;
    return run_ensemble(e, cfg.medium, regime, cfg.source, grid);
}

std::vector<PairComparison> compare_pairs(const ExperimentConfig& cfg, const EnsembleResult& pairs)
{
    require(cfg.compare.has_value(), ErrorCode::SchemaError, "config has no compare section");
    const auto& cs = *cfg.compare;
    require(pairs.probes.size() == cs.pairs.size() && pairs.checkpoints.size() == 1, ErrorCode::InvalidParameter,
            "ensemble does not match the compare pairs");
    std::vector<PairComparison> out;
    for (std::size_t k = 0; k < cs.pairs.size(); ++k)
    {
        PairComparison row;
        row.x = cs.pairs[k].x;
        row.y = cs.pairs[k].y;
        const RowMatrixXc s = pairs.probe_samples(0, k);
        if (s.rows() >= 2)
        {
            row.monte_carlo = estimate_moment(s, {0}, {1});
        }
        else
        {
            row.monte_carlo.value = s(0, 0) * std::conj(s(0, 1));
            row.monte_carlo.n_samples = s.rows();
        }
        row.prelimit = m11_prelimit(cfg.medium, cfg.regime, cfg.source, cs.z, cs.r, cs.r, row.x, row.y);
        try
        {
            row.limit = cfg.regime.kind == RegimeKind::Diffusive
                            ? m11_diffusive(cfg.medium, cfg.regime, cfg.source, cs.z, cs.r, row.x, row.y)
                            : m11_kinetic(cfg.medium, cfg.regime, cfg.source, cs.z, cs.r, row.x, row.y);
        }
        catch (const Error&)
        {
            row.limit.reset();
        }
        row.deviation = std::abs(row.monte_carlo.value - row.prelimit.value);
        row.tolerance = std::max(3.0 * std::hypot(row.monte_carlo.std_error, row.prelimit.quadrature_error), 1e-6);
        row.pass = row.deviation <= row.tolerance;
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<SweepRow> theta_sweep(const ExperimentConfig& cfg, const std::vector<PairComparison>& reference_rows,
                                  unsigned threads)
{
    require(cfg.compare.has_value(), ErrorCode::SchemaError, "config has no compare section");
    const auto& cs = *cfg.compare;
    require(reference_rows.size() == cs.pairs.size(), ErrorCode::InvalidParameter,
            "reference rows do not match the compare pairs");
    const Grid grid(cfg.grid.d, cfg.grid.n, cfg.grid.length, cs.paraxial_dz.value_or(cfg.grid.dz));
    std::vector<SweepRow> out;
    for (Real theta : cs.theta_sweep)
    {
        const ScalingRegime r =
            custom_regime(theta, cfg.regime.epsilon, cfg.regime.eta, cfg.regime.beta, cfg.regime.gamma);
        const EnsembleResult px = run_pair_ensemble(cfg, SolverKind::Paraxial, r, grid, threads);
        SweepRow row;
        row.theta = theta;
        for (std::size_t k = 0; k < cs.pairs.size(); ++k)
        {
            const auto e = estimate_moment(px.probe_samples(0, k), {0}, {1});
            const auto& ref = reference_rows[k];
            const Real d = std::abs(e.value - ref.monte_carlo.value);
            if (d > row.max_discrepancy || k == 0)
            {
                row.max_discrepancy = d;
                row.combined_se = std::hypot(e.std_error, ref.monte_carlo.std_error);
                row.worst_pair = k;
            }
            const Real dp = std::abs(e.value - ref.prelimit.value);
            if (dp > row.max_vs_prelimit || k == 0)
            {
                row.max_vs_prelimit = dp;
                row.se_vs_prelimit = std::hypot(e.std_error, ref.prelimit.quadrature_error);
            }
        }
        row.nonincreasing = out.empty() || row.max_discrepancy <= out.back().max_discrepancy;
        out.push_back(row);
    }
    return out;
}

} // namespace pxspk
