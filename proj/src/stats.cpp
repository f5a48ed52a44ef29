#include "pxspk/stats.hpp"

#include "pxspk/binary_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <thread>

namespace pxspk
{

std::string_view to_string(SolverKind s)
{
    switch (s)
    {
    case SolverKind::Paraxial:
        return "paraxial";
    case SolverKind::Ito:
        return "ito";
    }
    return "unknown";
}

SolverKind solver_kind_from_string(std::string_view name)
{
    if (name == "paraxial")
        return SolverKind::Paraxial;
    if (name == "ito")
        return SolverKind::Ito;
    throw Error(ErrorCode::InvalidParameter, "unknown solver '" + std::string(name) + "'");
}

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("PXSPK_THREADS"))
    {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0)
            return unsigned(v);
    }
    return 1;
}

// ---------------------------------------------------------------------------

Index EnsembleResult::column(std::size_t probe, Index point) const
{
    require(probe < probes.size(), ErrorCode::InvalidParameter, "probe index out of range");
    require(point >= 0 && point < probes[probe].X.cols(), ErrorCode::InvalidParameter, "point index out of range");
    Index offset = 0;
    for (std::size_t p = 0; p < probe; ++p)
        offset += probes[p].X.cols();
    return offset + point;
}

RowMatrixXc EnsembleResult::probe_samples(std::size_t c, std::size_t probe) const
{
    require(c < samples.size(), ErrorCode::InvalidParameter, "checkpoint index out of range");
    const Index first = column(probe, 0);
    return samples[c].middleCols(first, probes[probe].X.cols());
}

EnsembleResult EnsembleResult::merge(const EnsembleResult& a, const EnsembleResult& b)
{
    if (a.n_realizations() == 0)
        return b;
    if (b.n_realizations() == 0)
        return a;
    require(a.checkpoints == b.checkpoints && a.samples.size() == b.samples.size(), ErrorCode::InvalidParameter,
            "ensembles have different checkpoints");
    require(a.seed == b.seed, ErrorCode::InvalidParameter, "ensembles use different seeds");
    require(a.first_realization + a.n_realizations() == b.first_realization, ErrorCode::InvalidParameter,
            "ensembles must cover adjacent realization ranges");
    EnsembleResult out = a;
    for (std::size_t c = 0; c < a.samples.size(); ++c)
    {
        require(a.samples[c].cols() == b.samples[c].cols(), ErrorCode::InvalidParameter, "probe layouts differ");
        out.samples[c].resize(a.n_realizations() + b.n_realizations(), a.samples[c].cols());
        out.samples[c] << a.samples[c], b.samples[c];
    }
    out.max_norm_drift = std::max(a.max_norm_drift, b.max_norm_drift);
    out.max_wraparound = std::max(a.max_wraparound, b.max_wraparound);
    return out;
}

namespace
{

constexpr char kEnsembleMagic[6] = {'P', 'X', 'E', 'N', 'S', '1'};
constexpr std::uint32_t kEnsembleVersion = 1;

} // namespace

void write_ensemble(std::ostream& os, const EnsembleResult& res, const std::string& tag)
{
    os.write(kEnsembleMagic, 6);
    io::write_u32(os, kEnsembleVersion);
    io::write_u32(os, std::uint32_t(tag.size()));
    os.write(tag.data(), std::streamsize(tag.size()));
    io::write_u64(os, res.seed);
    io::write_u64(os, std::uint64_t(res.first_realization));
    io::write_f64(os, res.max_norm_drift);
    io::write_f64(os, res.max_wraparound);
    io::write_u32(os, std::uint32_t(res.checkpoints.size()));
    for (Real z : res.checkpoints)
        io::write_f64(os, z);
    io::write_u32(os, std::uint32_t(res.probes.size()));
    for (const auto& p : res.probes)
    {
        io::write_u32(os, std::uint32_t(p.r.size()));
        io::write_u32(os, std::uint32_t(p.X.cols()));
        for (Index i = 0; i < p.r.size(); ++i)
            io::write_f64(os, p.r(i));
        for (Index j = 0; j < p.X.cols(); ++j)
            for (Index i = 0; i < p.X.rows(); ++i)
                io::write_f64(os, p.X(i, j));
    }
    const Index rows = res.n_realizations();
    const Index cols = res.samples.empty() ? 0 : res.samples.front().cols();
    io::write_u64(os, std::uint64_t(rows));
    io::write_u64(os, std::uint64_t(cols));
    for (const auto& m : res.samples)
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
            {
                io::write_f64(os, m(i, j).real());
                io::write_f64(os, m(i, j).imag());
            }
    require(bool(os), ErrorCode::IoError, "failed writing ensemble archive");
}

EnsembleResult read_ensemble(std::istream& is, std::string* tag)
{
    char magic[6];
    is.read(magic, 6);
    require(is && std::equal(magic, magic + 6, kEnsembleMagic), ErrorCode::ParseError, "not a PXENS1 archive");
    require(io::read_u32(is) == kEnsembleVersion, ErrorCode::ParseError, "unsupported ensemble archive version");
    const std::uint32_t tag_len = io::read_u32(is);
    require(bool(is) && tag_len < (1u << 20), ErrorCode::ParseError, "corrupt ensemble archive tag");
    std::string t(tag_len, '\0');
    is.read(t.data(), std::streamsize(tag_len));
    if (tag)
        *tag = t;
    EnsembleResult res;
    res.seed = io::read_u64(is);
    res.first_realization = Index(io::read_u64(is));
    res.max_norm_drift = io::read_f64(is);
    res.max_wraparound = io::read_f64(is);
    const std::uint32_t n_marks = io::read_u32(is);
    require(bool(is) && n_marks < (1u << 20), ErrorCode::ParseError, "corrupt ensemble archive header");
    for (std::uint32_t c = 0; c < n_marks; ++c)
        res.checkpoints.push_back(io::read_f64(is));
    const std::uint32_t n_probes = io::read_u32(is);
    require(bool(is) && n_probes < (1u << 20), ErrorCode::ParseError, "corrupt ensemble archive probes");
    Index total = 0;
    for (std::uint32_t k = 0; k < n_probes; ++k)
    {
        const std::uint32_t d = io::read_u32(is);
        const std::uint32_t m = io::read_u32(is);
        require(bool(is) && d >= 1 && d <= 3 && m < (1u << 20), ErrorCode::ParseError, "corrupt probe record");
        Probe p;
        p.r.resize(d);
        p.X.resize(d, m);
        for (Index i = 0; i < Index(d); ++i)
            p.r(i) = io::read_f64(is);
        for (Index j = 0; j < Index(m); ++j)
            for (Index i = 0; i < Index(d); ++i)
                p.X(i, j) = io::read_f64(is);
        total += m;
        res.probes.push_back(std::move(p));
    }
    const auto rows = Index(io::read_u64(is));
    const auto cols = Index(io::read_u64(is));
    require(bool(is) && cols == total && rows >= 0 && rows < (Index(1) << 32), ErrorCode::ParseError,
            "ensemble archive layout does not match its probes");
    res.samples.assign(n_marks, RowMatrixXc(rows, cols));
    for (auto& mtx : res.samples)
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
            {
                const Real re = io::read_f64(is);
                const Real im = io::read_f64(is);
                mtx(i, j) = {re, im};
            }
    require(bool(is), ErrorCode::ParseError, "truncated ensemble archive");
    return res;
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const MediumSpec& spec, const ScalingRegime& regime,
                            const SourceSpec& source, const Grid& grid)
{
    require(cfg.n_realizations >= 1, ErrorCode::InvalidParameter, "need at least one realization");
    require(!cfg.probes.empty(), ErrorCode::InvalidParameter, "probe set is empty");
    require(!cfg.checkpoints.empty(), ErrorCode::InvalidParameter, "checkpoint list is empty");
    Index n_points = 0;
    for (const auto& p : cfg.probes)
    {
        require(p.r.size() == grid.d && p.X.rows() == grid.d, ErrorCode::InvalidParameter,
                "probe dimension differs from the grid");
        n_points += p.X.cols();
    }
    std::vector<Real> marks = cfg.checkpoints;
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    require(marks.front() >= 0.0, ErrorCode::InvalidParameter, "checkpoints must be nonnegative");
    const Real z_final = marks.back();

    EnsembleResult res;
    res.checkpoints = marks;
    res.probes = cfg.probes;
    res.first_realization = cfg.first_realization;
    res.seed = cfg.seed;
    res.samples.assign(marks.size(), RowMatrixXc(cfg.n_realizations, n_points));

    const Field u0 = make_source(source, regime, grid);
    auto sample_all = [&](const Field& f, Index row, std::size_t c) {
        Index col = 0;
        for (const auto& p : cfg.probes)
        {
            const VectorXc v = sample_macroscopic(f, p.r, p.X, cfg.margin);
            res.samples[c].row(row).segment(col, v.size()) = v.transpose();
            col += v.size();
        }
    };
    // Sampling at z = 0 checks the domain before any propagation.
    std::vector<std::size_t> zero_marks;
    std::vector<Real> positive;
    for (std::size_t c = 0; c < marks.size(); ++c)
        if (marks[c] == 0.0)
            zero_marks.push_back(c);
        else
            positive.push_back(marks[c]);
    {
        Index col = 0;
        for (const auto& p : cfg.probes)
        {
            const VectorXc v = sample_macroscopic(u0, p.r, p.X, cfg.margin);
            for (std::size_t c : zero_marks)
                res.samples[c].block(0, col, cfg.n_realizations, v.size()).rowwise() = v.transpose();
            col += v.size();
        }
    }

    const unsigned threads = std::max(1u, std::min<unsigned>(resolve_threads(cfg.threads),
                                                             unsigned(cfg.n_realizations)));
    std::vector<Real> drift(threads, 0.0), wrap(threads, 0.0);
    std::vector<std::exception_ptr> errors(threads);

    auto worker = [&](unsigned t) {
        try
        {
            const Index lo = cfg.n_realizations * t / threads;
            const Index hi = cfg.n_realizations * (t + 1) / threads;
            for (Index i = lo; i < hi; ++i)
            {
                if (positive.empty())
                    break;
                std::size_t next = zero_marks.size();
                PropagationOptions opts;
                opts.splitting = cfg.splitting;
                opts.checkpoints = positive;
                opts.observer = [&](const Field& f) { sample_all(f, i, next++); };
                SeedPath path;
                path.seed = cfg.seed;
                path.realization = std::uint32_t(cfg.first_realization + i);
                const Propagation p = cfg.solver == SolverKind::Ito
                                          ? propagate_ito(u0, spec, regime, z_final, path, opts)
                                          : propagate_paraxial(u0, spec, regime, z_final, path, opts);
                drift[t] = std::max(drift[t], p.max_norm_drift);
                wrap[t] = std::max(wrap[t], wraparound_mass(p.field));
            }
        }
        catch (...)
        {
            errors[t] = std::current_exception();
        }
    };

    if (threads == 1)
    {
        worker(0);
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker, t);
        for (auto& th : pool)
            th.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    res.max_norm_drift = *std::max_element(drift.begin(), drift.end());
    res.max_wraparound = *std::max_element(wrap.begin(), wrap.end());
    return res;
}

// ---------------------------------------------------------------------------

VectorXc moment_products(const RowMatrixXc& samples, const std::vector<Index>& P, const std::vector<Index>& Q)
{
    for (Index j : P)
        require(j >= 0 && j < samples.cols(), ErrorCode::InvalidParameter, "point index out of range");
    for (Index l : Q)
        require(l >= 0 && l < samples.cols(), ErrorCode::InvalidParameter, "point index out of range");
    VectorXc out(samples.rows());
    for (Index i = 0; i < samples.rows(); ++i)
    {
        Complex v = 1.0;
        for (Index j : P)
            v *= samples(i, j);
        for (Index l : Q)
            v *= std::conj(samples(i, l));
        out(i) = v;
    }
    return out;
}

MomentEstimate mean_estimate(const VectorXc& values)
{
    const Index n = values.size();
    require(n >= 2, ErrorCode::InsufficientSamples, "need at least two samples");
    MomentEstimate e;
    e.n_samples = n;
    const Complex total = values.sum();
    e.value = total / Real(n);
    // Jackknife over leave-one-out means.
    Real acc = 0.0;
    for (Index i = 0; i < n; ++i)
    {
        const Complex loo = (total - values(i)) / Real(n - 1);
        acc += std::norm(loo - e.value);
    }
    e.std_error = std::sqrt(Real(n - 1) / Real(n) * acc);
    return e;
}

MomentEstimate estimate_moment(const RowMatrixXc& samples, const std::vector<Index>& P, const std::vector<Index>& Q)
{
    require(samples.rows() >= 2, ErrorCode::InsufficientSamples, "need at least two samples");
    return mean_estimate(moment_products(samples, P, Q));
}

MomentEstimate scintillation_index(const VectorXr& intensity)
{
    const Index n = intensity.size();
    require(n >= 2, ErrorCode::InsufficientSamples, "need at least two intensity samples");
    const Real s1 = intensity.sum();
    const Real s2 = intensity.squaredNorm();
    require(s1 > 0.0, ErrorCode::DegenerateIntensity, "mean intensity must be positive");
    auto index_of = [](Real a1, Real a2, Real m) {
        const Real m1 = a1 / m, m2 = a2 / m;
        return (m2 - m1 * m1) / (m1 * m1);
    };
    MomentEstimate e;
    e.n_samples = n;
    e.value = index_of(s1, s2, Real(n));
    VectorXr loo(n);
    for (Index i = 0; i < n; ++i)
    {
        const Real a1 = s1 - intensity(i);
        loo(i) = a1 > 0.0 ? index_of(a1, s2 - intensity(i) * intensity(i), Real(n - 1)) : 0.0;
    }
    const Real mean_loo = loo.mean();
    e.std_error = std::sqrt(Real(n - 1) / Real(n) * (loo.array() - mean_loo).square().sum());
    return e;
}

Real kolmogorov_survival(Real t)
{
    if (t <= 0.0)
        return 1.0;
    if (t < 0.2)
        return 1.0;
    Real s = 0.0;
    for (int k = 1; k <= 100; ++k)
    {
        const Real term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18)
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

TestResult ks_exponential(const VectorXr& intensity)
{
    const Index n = intensity.size();
    require(n >= 50, ErrorCode::InsufficientSamples, "KS test needs at least 50 samples");
    std::vector<Real> v(intensity.data(), intensity.data() + n);
    std::sort(v.begin(), v.end());
    const Real mean = intensity.mean();
    TestResult t;
    t.n = n;
    t.note = "asymptotic Kolmogorov p-value with the mean estimated from the same sample; conservative";
    Real d = 0.0;
    if (!(mean > 0.0))
    {
        t.statistic = 1.0;
        t.p_value = 0.0;
        return t;
    }
    for (Index i = 0; i < n; ++i)
    {
        const Real F = 1.0 - std::exp(-v[std::size_t(i)] / mean);
        d = std::max({d, F - Real(i) / Real(n), Real(i + 1) / Real(n) - F});
    }
    t.statistic = d;
    const Real sn = std::sqrt(Real(n));
    t.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    return t;
}

TestResult circularity_test(const VectorXc& phi)
{
    const Index n = phi.size();
    require(n >= 100, ErrorCode::InsufficientSamples, "circularity test needs at least 100 samples");
    Complex m_sq = 0.0;
    Real m_abs = 0.0, m_four = 0.0;
    for (Index i = 0; i < n; ++i)
    {
        m_sq += phi(i) * phi(i);
        const Real a = std::norm(phi(i));
        m_abs += a;
        m_four += a * a;
    }
    m_sq /= Real(n);
    m_abs /= Real(n);
    m_four /= Real(n);
    TestResult t;
    t.n = n;
    t.statistic = m_abs > 0.0 ? std::abs(m_sq) / m_abs : 0.0;
    t.p_value = m_four > 0.0 ? std::clamp(std::exp(-Real(n) * std::norm(m_sq) / m_four), 0.0, 1.0) : 1.0;
    t.note = "null: n |mean phi^2|^2 / mean |phi|^4 approximately Exp(1)";
    return t;
}

TestResult independence_test(const VectorXr& a, const VectorXr& b)
{
    const Index n = a.size();
    require(b.size() == n, ErrorCode::InvalidParameter, "series lengths differ");
    require(n >= 100, ErrorCode::InsufficientSamples, "independence test needs at least 100 samples");
    const VectorXr da = a.array() - a.mean();
    const VectorXr db = b.array() - b.mean();
    const Real denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    TestResult t;
    t.n = n;
    t.statistic = denom > 0.0 ? std::clamp(da.dot(db) / denom, -1.0, 1.0) : 0.0;
    const Real z = std::atanh(t.statistic) * std::sqrt(Real(n - 3));
    t.p_value = std::isfinite(z) ? std::erfc(std::abs(z) / std::sqrt(2.0)) : 0.0;
    t.note = "Pearson correlation of intensities, Fisher-z normal approximation";
    return t;
}

TestResult independence_test(const VectorXc& a, const VectorXc& b)
{
    return independence_test(VectorXr(a.cwiseAbs2()), VectorXr(b.cwiseAbs2()));
}

HolderTable holder_increment_probe(const RowMatrixXc& samples, const std::vector<Real>& h, int n)
{
    require(n >= 1, ErrorCode::InvalidParameter, "order must be positive");
    require(samples.cols() == Index(h.size()) + 1, ErrorCode::InvalidParameter,
            "need one base column plus one column per increment");
    HolderTable table;
    std::vector<Real> lx, ly;
    for (std::size_t j = 0; j < h.size(); ++j)
    {
        VectorXc inc(samples.rows());
        for (Index i = 0; i < samples.rows(); ++i)
            inc(i) = std::pow(std::norm(samples(i, Index(j) + 1) - samples(i, 0)), Real(n));
        HolderRow row;
        row.h = h[j];
        if (samples.rows() >= 2)
        {
            const auto e = mean_estimate(inc);
            row.value = e.value.real();
            row.std_error = e.std_error;
        }
        else
        {
            row.value = inc.size() ? inc(0).real() : 0.0;
        }
        if (h[j] > 0.0 && row.value > 0.0)
        {
            lx.push_back(std::log(std::abs(h[j])));
            ly.push_back(std::log(row.value));
        }
        table.rows.push_back(row);
    }
    if (lx.size() >= 2)
    {
        const Real mx = std::accumulate(lx.begin(), lx.end(), 0.0) / Real(lx.size());
        const Real my = std::accumulate(ly.begin(), ly.end(), 0.0) / Real(ly.size());
        Real sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i)
        {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        table.slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<Real>::quiet_NaN();
    }
    else
    {
        table.slope = std::numeric_limits<Real>::quiet_NaN();
    }
    return table;
}

RowMatrixXc sample_gaussian_vectors(const CovarianceModel& model, Index n, const SeedPath& path)
{
    require(model.circular, ErrorCode::InvalidParameter, "only circular models can be sampled");
    const Index N = model.size();
    require(model.gamma.cols() == N && N >= 1, ErrorCode::InvalidParameter, "gamma must be square and nonempty");
    const MatrixXc herm = 0.5 * (model.gamma + model.gamma.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(herm);
    require(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff()),
            ErrorCode::InvalidParameter, "gamma must be positive semidefinite");
    const MatrixXc L = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const bool has_mean = model.mean.size() == N;
    RowMatrixXc out(n, N);
    CounterStream rng(path);
    VectorXc w(N);
    for (Index i = 0; i < n; ++i)
    {
        for (Index j = 0; j < N; ++j)
            w(j) = rng.complex_normal();
        VectorXc v = L * w;
        if (has_mean)
            v += model.mean;
        out.row(i) = v.transpose();
    }
    return out;
}

KsCalibration calibrate_ks(Index n, Index trials, std::uint64_t seed)
{
    require(n >= 50 && trials >= 1, ErrorCode::InvalidParameter, "need n >= 50 and at least one trial");
    KsCalibration cal;
    cal.n = n;
    cal.trials = trials;
    std::vector<Real> stats;
    Index pass = 0;
    VectorXr v(n);
    for (Index t = 0; t < trials; ++t)
    {
        SeedPath path;
        path.seed = seed;
        path.realization = std::uint32_t(t);
        path.purpose = StreamPurpose::Calibration;
        CounterStream rng(path);
        for (Index i = 0; i < n; ++i)
            v(i) = rng.exponential(1.0);
        const auto r = ks_exponential(v);
        stats.push_back(r.statistic);
        pass += r.p_value > 0.01;
    }
    std::sort(stats.begin(), stats.end());
    cal.pass_fraction = Real(pass) / Real(trials);
    cal.critical_statistic = stats[std::min<std::size_t>(stats.size() - 1, std::size_t(0.99 * Real(stats.size())))];
    return cal;
}

} // namespace pxspk
