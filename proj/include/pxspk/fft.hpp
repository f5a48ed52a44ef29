#pragma once

#include "pxspk/types.hpp"

#include <memory>
#include <vector>

namespace pxspk
{

/// Unnormalized in-place complex DFT over a dense row-major array.
/// forward:  X_k = sum_j x_j e^{-2 pi i jk/N};  inverse uses e^{+...} and no 1/N.
/// Plans are shared through a process-wide cache; execute() is safe to call
/// concurrently from several threads on distinct buffers.
class FftPlan
{
public:
    FftPlan(std::vector<int> dims, int sign);
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;
    ~FftPlan();

    void execute(Complex* data) const;
    Index size() const { return size_; }
    const std::vector<int>& dims() const { return dims_; }

private:
    std::vector<int> dims_;
    Index size_ = 0;
    void* plan_ = nullptr; // fftw_plan, owned by the cache
};

/// Forward/inverse pair over the same shape.
class Fft
{
public:
    explicit Fft(std::vector<int> dims);

    void forward(Complex* data) const { fwd_.execute(data); }
    void inverse(Complex* data) const { inv_.execute(data); }
    void forward(VectorXc& v) const { forward(v.data()); }
    void inverse(VectorXc& v) const { inverse(v.data()); }
    /// Inverse including the 1/N factor.
    void inverse_normalized(VectorXc& v) const
    {
        inverse(v.data());
        v /= Real(size());
    }
    Index size() const { return fwd_.size(); }
    const std::vector<int>& dims() const { return fwd_.dims(); }

private:
    FftPlan fwd_;
    FftPlan inv_;
};

/// Signed DFT index: m for m < n/2, m - n otherwise (Nyquist maps to -n/2).
inline Index signed_frequency(Index m, Index n) { return m < n / 2 ? m : m - n; }

} // namespace pxspk
