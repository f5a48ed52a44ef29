#pragma once

#include "pxspk/medium.hpp"
#include "pxspk/moments.hpp"
#include "pxspk/propagate.hpp"
#include "pxspk/rng.hpp"
#include "pxspk/scaling.hpp"
#include "pxspk/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pxspk
{

struct MomentEstimate
{
    Complex value{};
    Real std_error = 0.0;
    Index n_samples = 0;
};

struct TestResult
{
    Real statistic = 0.0;
    Real p_value = 1.0;
    Index n = 0;
    std::string note;
};

enum class SolverKind
{
    Paraxial,
    Ito,
};

std::string_view to_string(SolverKind s);
SolverKind solver_kind_from_string(std::string_view name);

/// Centre r and offsets X (one column per point) of Phi(z, r, X).
struct Probe
{
    VectorXr r;
    MatrixXr X;
};

struct EnsembleConfig
{
    Index n_realizations = 1;
    Index first_realization = 0;
    std::uint64_t seed = 0;
    SolverKind solver = SolverKind::Ito;
    Splitting splitting = Splitting::Strang;
    std::vector<Probe> probes;
    std::vector<Real> checkpoints;
    unsigned threads = 1;
    /// Minimum distance of sampled points from the periodic boundary.
    Real margin = 0.0;
};

/// Per-realization samples of every probe point at every checkpoint.
/// samples[c] has one row per realization and one column per probe point,
/// probes laid out consecutively.
struct EnsembleResult
{
    std::vector<Real> checkpoints;
    std::vector<Probe> probes;
    Index first_realization = 0;
    std::uint64_t seed = 0;
    std::vector<RowMatrixXc> samples;
    Real max_norm_drift = 0.0;
    Real max_wraparound = 0.0;

    Index n_realizations() const { return samples.empty() ? 0 : samples.front().rows(); }
    Index column(std::size_t probe, Index point) const;
    /// All points of one probe at checkpoint c (realizations x points).
    RowMatrixXc probe_samples(std::size_t c, std::size_t probe) const;

    /// Concatenates two results over adjacent realization ranges (a first).
    static EnsembleResult merge(const EnsembleResult& a, const EnsembleResult& b);
};

/// Ensemble archive ("PXENS1"), little-endian. `tag` is free text stored
/// alongside the samples (the CLI records the config hash there).
void write_ensemble(std::ostream& os, const EnsembleResult& res, const std::string& tag = {});
EnsembleResult read_ensemble(std::istream& is, std::string* tag = nullptr);

/// Propagates realizations [first, first + n) and records Phi at every checkpoint.
/// Results do not depend on the thread count.
EnsembleResult run_ensemble(const EnsembleConfig& cfg, const MediumSpec& spec, const ScalingRegime& regime,
                            const SourceSpec& source, const Grid& grid);

/// Sample mean of prod_{j in P} phi_j prod_{l in Q} phi_l* over rows, with a
/// jackknife standard error (modulus of the complex deviation).
MomentEstimate estimate_moment(const RowMatrixXc& samples, const std::vector<Index>& P, const std::vector<Index>& Q);

/// Per-row products prod_{j in P} phi_j prod_{l in Q} phi_l*.
VectorXc moment_products(const RowMatrixXc& samples, const std::vector<Index>& P, const std::vector<Index>& Q);

/// Sample mean with jackknife standard error.
MomentEstimate mean_estimate(const VectorXc& values);

/// S = (m2 - m1^2) / m1^2 with jackknife standard error.
MomentEstimate scintillation_index(const VectorXr& intensity);

/// One-sample KS test against Exp(mean = sample mean), asymptotic Kolmogorov p-value.
TestResult ks_exponential(const VectorXr& intensity);

/// Asymptotic Kolmogorov survival function P(K > t).
Real kolmogorov_survival(Real t);

/// |mean phi^2| / mean |phi|^2; p-value exp(-n |mean phi^2|^2 / mean |phi|^4).
TestResult circularity_test(const VectorXc& phi);

/// Pearson correlation of two intensity series, Fisher-z two-sided p-value.
TestResult independence_test(const VectorXr& a, const VectorXr& b);
TestResult independence_test(const VectorXc& a, const VectorXc& b);

struct HolderRow
{
    Real h = 0.0;
    Real value = 0.0;
    Real std_error = 0.0;
};

struct HolderTable
{
    std::vector<HolderRow> rows;
    /// Least-squares slope of log value against log h (h > 0, value > 0); NaN if undefined.
    Real slope = 0.0;
};

/// E|phi(x + h_j) - phi(x)|^{2n}: column 0 of `samples` is phi(x), column j is phi(x + h_j).
HolderTable holder_increment_probe(const RowMatrixXc& samples, const std::vector<Real>& h, int n);

/// Draws rows of a complex Gaussian vector with the model's mean and covariance.
/// Circular models use mean + L w with gamma = L L^*, w standard circular normal.
RowMatrixXc sample_gaussian_vectors(const CovarianceModel& model, Index n, const SeedPath& path);

struct KsCalibration
{
    Index n = 0;
    Index trials = 0;
    /// Fraction of null trials with asymptotic p > 0.01.
    Real pass_fraction = 0.0;
    /// Empirical 99% quantile of the statistic under the null.
    Real critical_statistic = 0.0;
};

/// Simulated null distribution of ks_exponential for Exp(1) samples of size n.
KsCalibration calibrate_ks(Index n, Index trials, std::uint64_t seed);

/// Resolved worker count: explicit value, else PXSPK_THREADS, else 1.
unsigned resolve_threads(unsigned requested);

} // namespace pxspk
