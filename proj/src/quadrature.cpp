#include "pxspk/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <vector>

namespace pxspk
{

const GaussLegendreRule& gauss_legendre(int n)
{
    require(n >= 1, ErrorCode::InvalidParameter, "Gauss-Legendre order must be positive");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> rules;
    std::lock_guard lock(mutex);
    if (auto it = rules.find(n); it != rules.end())
        return it->second;

    // Jacobi matrix of the Legendre recurrence.
    MatrixXr jacobi = MatrixXr::Zero(n, n);
    for (int k = 1; k < n; ++k)
    {
        const Real b = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXr> eig(jacobi);
    GaussLegendreRule rule{eig.eigenvalues(), VectorXr(n)};

    for (int i = 0; i < n; ++i)
    {
        // Newton polish on P_n, then w = 2 / ((1 - x^2) P_n'(x)^2).
        Real x = rule.nodes(i);
        Real dp = 1.0;
        for (int it = 0; it < 3; ++it)
        {
            Real p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k)
            {
                const Real p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const Real pn = n == 1 ? x : p1;
            const Real pm = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            x -= pn / dp;
        }
        rule.nodes(i) = x;
        rule.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rules.emplace(n, std::move(rule)).first->second;
}

GaussLegendreRule gauss_legendre(int n, Real a, Real b)
{
    const auto& ref = gauss_legendre(n);
    const Real half = 0.5 * (b - a);
    const Real mid = 0.5 * (a + b);
    return {(mid + half * ref.nodes.array()).matrix(), half * ref.weights};
}

namespace
{

constexpr Real kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr Real kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr Real kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                         0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

Real magnitude(Real v) { return std::abs(v); }
Real magnitude(Complex v) { return std::abs(v); }

template <class T>
struct Segment
{
    Real a, b;
    T value;
    Real error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> kronrod(const F& f, Real a, Real b)
{
    const Real c = 0.5 * (a + b);
    const Real h = 0.5 * (b - a);
    const T fc = f(c);
    T kron = fc * kWgk[7];
    T gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j)
    {
        const Real dx = h * kXgk[j];
        const T f1 = f(c - dx);
        const T f2 = f(c + dx);
        kron += (f1 + f2) * kWgk[j];
        if (j % 2 == 1)
            gauss += (f1 + f2) * kWg[j / 2];
    }
    return {a, b, kron * h, magnitude((kron - gauss) * h)};
}

template <class T, class F>
std::pair<T, Real> adaptive(const F& f, Real a, Real b, const QuadratureOptions& opts, int& evals)
{
    std::priority_queue<Segment<T>> heap;
    heap.push(kronrod<T>(f, a, b));
    evals += 15;
    T total = heap.top().value;
    Real err = heap.top().error;
    int splits = 0;
    while (err > std::max(opts.abs_tol, opts.rel_tol * magnitude(total)))
    {
        if (splits >= opts.max_subdivisions)
            throw Error(ErrorCode::QuadratureNotConverged,
                        "adaptive Gauss-Kronrod exhausted its subdivision budget (error " +
                            std::to_string(err) + ")");
        Segment<T> worst = heap.top();
        heap.pop();
        const Real mid = 0.5 * (worst.a + worst.b);
        auto left = kronrod<T>(f, worst.a, mid);
        auto right = kronrod<T>(f, mid, worst.b);
        evals += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
        if (splits % 64 == 0)
        {
            // Re-sum to shed accumulated cancellation in the running totals.
            auto copy = heap;
            total = T{};
            err = 0.0;
            while (!copy.empty())
            {
                total += copy.top().value;
                err += copy.top().error;
                copy.pop();
            }
        }
    }
    return {total, err};
}

template <class T, class F>
std::pair<T, Real> integrate_any(const F& f, Real a, Real b, const QuadratureOptions& opts, int& evals)
{
    if (a == b)
        return {T{}, 0.0};
    if (a > b)
    {
        auto [v, e] = integrate_any<T>(f, b, a, opts, evals);
        return {T{} - v, e};
    }
    const bool lo_inf = std::isinf(a);
    const bool hi_inf = std::isinf(b);
    if (lo_inf && hi_inf)
    {
        auto g = [&](Real t) -> T {
            const Real d = 1.0 - t * t;
            if (d <= 0.0)
                return T{};
            const Real x = t / d;
            return f(x) * ((1.0 + t * t) / (d * d));
        };
        return adaptive<T>(g, -1.0, 1.0, opts, evals);
    }
    if (hi_inf)
    {
        auto g = [&](Real t) -> T {
            const Real d = 1.0 - t;
            if (d <= 0.0)
                return T{};
            return f(a + t / d) * (1.0 / (d * d));
        };
        return adaptive<T>(g, 0.0, 1.0, opts, evals);
    }
    if (lo_inf)
    {
        auto g = [&](Real t) -> T {
            const Real d = 1.0 - t;
            if (d <= 0.0)
                return T{};
            return f(b - t / d) * (1.0 / (d * d));
        };
        return adaptive<T>(g, 0.0, 1.0, opts, evals);
    }
    return adaptive<T>(f, a, b, opts, evals);
}

} // namespace

QuadratureResult integrate(const std::function<Real(Real)>& f, Real a, Real b,
                           const QuadratureOptions& opts)
{
    QuadratureResult r;
    auto [v, e] = integrate_any<Real>(f, a, b, opts, r.evaluations);
    r.value = v;
    r.error = e;
    return r;
}

ComplexQuadratureResult integrate_complex(const std::function<Complex(Real)>& f, Real a, Real b,
                                          const QuadratureOptions& opts)
{
    ComplexQuadratureResult r;
    auto [v, e] = integrate_any<Complex>(f, a, b, opts, r.evaluations);
    r.value = v;
    r.error = e;
    return r;
}

} // namespace pxspk
