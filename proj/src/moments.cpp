#include "pxspk/moments.hpp"

#include "pxspk/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace pxspk
{

std::string_view to_string(MomentFormula f)
{
    switch (f)
    {
    case MomentFormula::KineticM11:
        return "KineticM11";
    case MomentFormula::DiffusiveM11:
        return "DiffusiveM11";
    case MomentFormula::PrelimitM11:
        return "PrelimitM11";
    case MomentFormula::MeanField:
        return "MeanField";
    case MomentFormula::WickPredicted:
        return "WickPredicted";
    }
    return "unknown";
}

Real CovarianceModel::circularity_defect() const
{
    if (pseudo.size() == 0)
        return 0.0;
    const Real g = gamma.size() ? gamma.cwiseAbs().maxCoeff() : 0.0;
    const Real p = pseudo.cwiseAbs().maxCoeff();
    return g > 0.0 ? p / g : p;
}

namespace
{

bool is_beta_one(const ScalingRegime& regime) { return std::abs(regime.beta - 1.0) <= 1e-12; }

void check_points(const MediumSpec& spec, const VectorXr& a, const VectorXr& b, const VectorXr& c)
{
    const Index d = spec.d();
    require(a.size() == d && b.size() == d && c.size() == d, ErrorCode::InvalidParameter,
            "points must have the medium dimension");
}

/// Integral over R^d (d = 1, 2) of f(k) on the box [-K, K]^d, adaptive per axis.
template <class F>
ComplexQuadratureResult integrate_box(int d, Real K, const F& f, const QuadratureOptions& opts)
{
    if (d == 1)
        return integrate_complex([&](Real k) { return f(Eigen::Matrix<Real, 1, 1>::Constant(k)); }, -K, K, opts);
    Real err = 0.0;
    QuadratureOptions inner = opts;
    inner.abs_tol = opts.abs_tol / (2.0 * K);
    auto outer = integrate_complex(
        [&](Real k1) {
            auto r = integrate_complex(
                [&](Real k2) {
                    Eigen::Matrix<Real, 2, 1> k(k1, k2);
                    return f(k);
                },
                -K, K, inner);
            err = std::max(err, r.error);
            return r.value;
        },
        -K, K, opts);
    outer.error += err * 2.0 * K;
    return outer;
}

} // namespace

AnalyticMoment mean_field(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                          const VectorXr& r)
{
    require(z >= 0.0, ErrorCode::InvalidParameter, "mean_field needs z >= 0");
    require(r.size() == spec.d(), ErrorCode::InvalidParameter, "centre must have the medium dimension");
    AnalyticMoment m;
    m.formula = MomentFormula::MeanField;
    const Complex damped = std::exp(-spec.R0() * z / (2.0 * regime.eta * regime.eta)) * source.profile_at(r);
    if (regime.kind == RegimeKind::Diffusive)
    {
        m.value = 0.0;
        m.companion = damped;
    }
    else
    {
        m.value = damped;
    }
    return m;
}

AnalyticMoment m11_kinetic(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                          const VectorXr& r, const VectorXr& x, const VectorXr& y, const QuadratureOptions& opts)
{
    require(regime.kind != RegimeKind::Diffusive, ErrorCode::InvalidParameter,
            "m11_kinetic is the kinetic-regime formula");
    require(z > 0.0, ErrorCode::InvalidParameter, "m11_kinetic needs z > 0");
    check_points(spec, r, x, y);
    AnalyticMoment m;
    m.formula = MomentFormula::KineticM11;
    const VectorXr tau = y - x;
    const int d = spec.d();

    if (!is_beta_one(regime))
    {
        m.value = std::norm(source.profile_at(r)) * q_kernel(spec, regime, z, tau, VectorXr::Zero(d));
        return m;
    }

    // Transform of |u0|^2: closed form for the Gaussian profile.
    std::function<Complex(const VectorXr&)> intensity_hat;
    const Real w = source.width;
    Real K = 0.0;
    if (source.profile == SourceSpec::Profile::Gaussian)
    {
        const Real a2 = std::norm(source.amplitude);
        const Real norm = a2 * std::pow(std::sqrt(kPi) * w, d);
        intensity_hat = [=](const VectorXr& xi) { return Complex(norm * std::exp(-0.25 * xi.squaredNorm() * w * w)); };
        K = 2.0 * std::sqrt(50.0) / w;
    }
    else
    {
        require(d == 1, ErrorCode::UnsupportedProfile, "custom sources need d = 1 for the kinetic integral");
        const Real span = 12.0 * w;
        intensity_hat = [=, &source](const VectorXr& xi) {
            QuadratureOptions o = opts;
            o.abs_tol *= 1e-2;
            return integrate_complex(
                       [&](Real rp) {
                           VectorXr v = VectorXr::Constant(1, rp);
                           return std::norm(source.profile_at(v)) * std::polar(1.0, -xi(0) * rp);
                       },
                       -span, span, o)
                .value;
        };
        K = 40.0 / w;
    }

    const auto res = integrate_box(
        d, K,
        [&](const auto& xi) {
            const VectorXr v = xi;
            return std::polar(1.0, v.dot(r)) * intensity_hat(v) * q_kernel(spec, regime, z, tau, v);
        },
        opts);
    const Real scale = std::pow(kTwoPi, -d);
    m.value = res.value * scale;
    m.quadrature_error = res.error * scale;
    return m;
}

AnalyticMoment m11_diffusive(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                             const VectorXr& r, const VectorXr& x, const VectorXr& y)
{
    require(regime.kind != RegimeKind::Kinetic, ErrorCode::InvalidParameter,
            "m11_diffusive is the diffusive-regime formula");
    require(z > 0.0, ErrorCode::InvalidParameter, "m11_diffusive needs z > 0");
    check_points(spec, r, x, y);
    AnalyticMoment m;
    m.formula = MomentFormula::DiffusiveM11;
    const int d = spec.d();
    const MatrixXr xi = hessian_Xi(spec);
    const VectorXr delta = y - x;
    const Real quad = delta.dot(xi * delta);

    if (!is_beta_one(regime))
    {
        m.value = std::norm(source.profile_at(r)) * std::exp(0.5 * z * quad);
        return m;
    }

    const Real t = z * z * z;
    const MatrixXr D = (-2.0 / 3.0) * xi;
    const Real spread = std::sqrt(2.0 * D.diagonal().maxCoeff() * t);
    const VectorXr kappa = (3.0 / (4.0 * z)) * delta;
    const Real w = source.width;

    // Grid centred at r, wide enough for the source and the kernel, fine enough
    // for the modulated intensity's bandwidth.
    const Real half = 8.0 * (w + spread);
    const Real band = kappa.cwiseAbs().maxCoeff() + 13.0 / w;
    const Real dx_max = std::min(w / 16.0, kPi / band);
    int n = 16;
    while (2.0 * half / n > dx_max)
        n *= 2;
    require(n <= (d == 1 ? (1 << 22) : (1 << 12)), ErrorCode::TooLarge,
            "convolution grid for m11_diffusive is too large");
    const Grid grid(d, n, 2.0 * half, 1.0);

    VectorXc g(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
    {
        const VectorXr s = grid.position(i);
        const VectorXr rp = r + s;
        g(i) = std::polar(1.0, kappa.dot(rp)) * std::norm(source.profile_at(rp));
    }
    Fft(grid.dims()).forward(g);

    // (G * f)(r) = (2 pi)^{-d} int G^(k) f^(k) dk with f^ taken about r.
    Complex acc = 0.0;
    for (Index i = 0; i < grid.size(); ++i)
    {
        const auto idx = grid.unflatten(i);
        const Index parity = d == 1 ? idx[0] : idx[0] + idx[1];
        const VectorXr k = grid.wavevector(i);
        const Real ghat = std::exp(-t * k.dot(D * k));
        acc += (parity % 2 == 0 ? 1.0 : -1.0) * ghat * g(i);
    }
    acc *= grid.cell_volume() / std::pow(grid.length, d);
    m.value = std::exp(z * quad / 8.0) * std::polar(1.0, -kappa.dot(r)) * acc;
    return m;
}

AnalyticMoment m11_prelimit(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                            const VectorXr& r, const VectorXr& r_prime, const VectorXr& x,
                            const VectorXr& y_prime, PrelimitMethod method, const QuadratureOptions& opts)
{
    require(z > 0.0, ErrorCode::InvalidParameter, "m11_prelimit needs z > 0");
    check_points(spec, r, r_prime, x);
    require(y_prime.size() == spec.d(), ErrorCode::InvalidParameter, "points must have the medium dimension");
    require(source.profile == SourceSpec::Profile::Gaussian, ErrorCode::UnsupportedProfile,
            "m11_prelimit is implemented for Gaussian sources");
    const int d = spec.d();
    const Real sc = std::pow(regime.epsilon, -regime.beta);
    const Real s = source.width * sc;
    const Real a = regime.eta / regime.epsilon;
    const VectorXr xp = sc * r + regime.eta * x;
    const VectorXr yp = sc * r_prime + regime.eta * y_prime;
    const Real A2 = std::norm(source.amplitude);
    AnalyticMoment m;
    m.formula = MomentFormula::PrelimitM11;

    if (method == PrelimitMethod::Reduced)
    {
        // Transport solution in centre/difference variables:
        // Gamma(X, tau) = int e^{ik.X} G0(k, tau - 2azk) Q(tau, -ak) dk / (2pi)^d.
        const VectorXr X = 0.5 * (xp + yp);
        const VectorXr tau = xp - yp;
        const Real norm = A2 * std::pow(std::sqrt(kPi) * s, d);
        auto integrand = [&](const auto& kk) {
            const VectorXr k = kk;
            const VectorXr shifted = tau - (2.0 * a * z) * k;
            const Real g0 = norm * std::exp(-0.25 * k.squaredNorm() * s * s) *
                            std::exp(-0.25 * shifted.squaredNorm() / (s * s));
            return std::polar(g0 * q_kernel(spec, regime, z, tau, VectorXr(-a * k)), k.dot(X));
        };
        const Real K = 2.0 * std::sqrt(50.0) / s;
        ComplexQuadratureResult res;
        if (d == 1)
        {
            // Break the range at the peak of the shifted factor so narrow peaks are seen.
            const Real kc = tau(0) / (2.0 * a * z);
            const Real hw = 12.0 * s / (2.0 * a * z);
            std::vector<Real> cuts{-K, K};
            for (Real c : {kc - hw, kc, kc + hw})
                if (c > -K && c < K)
                    cuts.push_back(c);
            std::sort(cuts.begin(), cuts.end());
            QuadratureOptions o = opts;
            o.abs_tol = opts.abs_tol / Real(cuts.size() - 1);
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            {
                const auto piece = integrate_complex(
                    [&](Real k) { return integrand(Eigen::Matrix<Real, 1, 1>::Constant(k)); }, cuts[i], cuts[i + 1], o);
                res.value += piece.value;
                res.error += piece.error;
                res.evaluations += piece.evaluations;
            }
        }
        else
        {
            res = integrate_box(d, K, integrand, opts);
        }
        const Real scale = std::pow(kTwoPi, -d);
        m.value = res.value * scale;
        m.quadrature_error = res.error * scale;
        return m;
    }

    require(d == 1, ErrorCode::InvalidParameter, "double-spectral route is implemented for d = 1");
    // Literal (xi, zeta) integral with u0^(xi) = A sqrt(2 pi) s e^{-xi^2 s^2 / 2}.
    const Real uh = std::sqrt(kTwoPi) * s;
    const Real K = std::sqrt(100.0) / s;
    const Real tau = yp(0) - xp(0);
    Real inner_err = 0.0;
    QuadratureOptions inner = opts;
    inner.abs_tol = opts.abs_tol / (2.0 * K);
    auto outer = integrate_complex(
        [&](Real xi) {
            const Complex fx = std::polar(uh * std::exp(-0.5 * xi * xi * s * s), xi * xp(0) - a * z * xi * xi);
            auto in = integrate_complex(
                [&](Real zeta) {
                    const Complex fz = std::polar(uh * std::exp(-0.5 * zeta * zeta * s * s),
                                                  -zeta * yp(0) + a * z * zeta * zeta);
                    return fz * q_kernel(spec, regime, z, tau, a * (xi - zeta));
                },
                -K, K, inner);
            inner_err = std::max(inner_err, in.error);
            return fx * in.value;
        },
        -K, K, opts);
    const Real scale = A2 / (kTwoPi * kTwoPi);
    m.value = outer.value * scale;
    m.quadrature_error = (outer.error + inner_err * 2.0 * K * uh) * scale;
    return m;
}

Complex wick_predict(const CovarianceModel& model, const std::vector<Index>& P, const std::vector<Index>& Q)
{
    require(P.size() + Q.size() <= 16, ErrorCode::TooLarge, "wick_predict is capped at p + q <= 16");
    require(model.circular, ErrorCode::InvalidParameter, "wick_predict requires a circular model");
    const Index N = model.size();
    require(model.gamma.cols() == N, ErrorCode::InvalidParameter, "gamma must be square");
    for (Index i : P)
        require(i >= 0 && i < N, ErrorCode::InvalidParameter, "index outside the model");
    for (Index i : Q)
        require(i >= 0 && i < N, ErrorCode::InvalidParameter, "index outside the model");
    const bool has_mean = model.mean.size() == N && model.mean.cwiseAbs().maxCoeff() > 0.0;
    const int p = int(P.size()), q = int(Q.size());

    auto perm_of = [&](std::uint32_t amask, std::uint32_t bmask) {
        const int m = std::popcount(amask);
        MatrixXc sub(m, m);
        int a = 0;
        for (int j = 0; j < p; ++j)
        {
            if (!(amask >> j & 1u))
                continue;
            int b = 0;
            for (int l = 0; l < q; ++l)
                if (bmask >> l & 1u)
                    sub(a, b++) = model.gamma(P[j], Q[l]);
            ++a;
        }
        return permanent(sub);
    };

    const std::uint32_t fullP = (1u << p) - 1u, fullQ = (1u << q) - 1u;
    if (!has_mean)
        return p == q ? perm_of(fullP, fullQ) : Complex(0.0);

    // Paired factors contribute a permanent, unpaired ones their means.
    Complex total = 0.0;
    for (std::uint32_t A = 0; A <= fullP; ++A)
    {
        Complex mean_p = 1.0;
        for (int j = 0; j < p; ++j)
            if (!(A >> j & 1u))
                mean_p *= model.mean(P[j]);
        for (std::uint32_t B = 0; B <= fullQ; ++B)
        {
            if (std::popcount(A) != std::popcount(B))
                continue;
            Complex mean_q = 1.0;
            for (int l = 0; l < q; ++l)
                if (!(B >> l & 1u))
                    mean_q *= std::conj(model.mean(Q[l]));
            total += mean_p * mean_q * perm_of(A, B);
        }
    }
    return total;
}

Complex wick_predict(const CovarianceModel& model, int p, int q)
{
    require(p >= 0 && q >= 0, ErrorCode::InvalidParameter, "orders must be nonnegative");
    require(p + q <= 16, ErrorCode::TooLarge, "wick_predict is capped at p + q <= 16");
    std::vector<Index> P(p), Q(q);
    for (int j = 0; j < p; ++j)
        P[j] = j;
    for (int l = 0; l < q; ++l)
        Q[l] = l;
    return wick_predict(model, P, Q);
}

Real remainder_lambda(const MediumSpec& spec, int p, int q, Real z, Real alpha, Real C, std::optional<int> d0)
{
    require(p >= 0 && q >= 0 && p + q >= 1, ErrorCode::InvalidParameter, "need p + q >= 1");
    require(C > 0.0, ErrorCode::InvalidParameter, "constant C must be positive");
    require(z >= 0.0, ErrorCode::InvalidParameter, "z must be nonnegative");
    const int n = p + q;
    const int dd = d0.value_or(spec.d());
    require(alpha >= 0.0 && alpha <= Real(dd + 1) / n, ErrorCode::InvalidParameter,
            "alpha must lie in [0, (d0 + 1)/(p + q)]");
    if (z == 0.0)
        return 0.0;
    const auto moment = spectral_moment(spec, 2.0 + n * alpha, 1.0);
    return 0.5 * std::pow(C, n) * Real(n * n) * z * moment.value;
}

void write_moment_table(std::ostream& os, const std::vector<MomentRow>& rows)
{
    auto join = [](const VectorXr& v) {
        std::string s;
        for (Index i = 0; i < v.size(); ++i)
            s += (i ? ";" : "") + format_real(v(i));
        return s;
    };
    os << "formula,p,q,z,r,x,y,re,im,quadrature_error\n";
    for (const auto& row : rows)
        os << to_string(row.formula) << ',' << row.p << ',' << row.q << ',' << format_real(row.z) << ','
           << join(row.r) << ',' << join(row.x) << ',' << join(row.y) << ',' << format_real(row.value.real())
           << ',' << format_real(row.value.imag()) << ',' << format_real(row.quadrature_error) << '\n';
}

} // namespace pxspk
