#include "pxspk/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numeric>
#include <utility>

namespace pxspk
{

namespace
{

struct PlanCache
{
    std::mutex mutex;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

    ~PlanCache()
    {
        for (auto& [key, plan] : plans)
            fftw_destroy_plan(plan);
    }

    fftw_plan get(const std::vector<int>& dims, int sign)
    {
        std::lock_guard lock(mutex);
        auto key = std::make_pair(dims, sign);
        if (auto it = plans.find(key); it != plans.end())
            return it->second;

        const Index n = std::accumulate(dims.begin(), dims.end(), Index(1), std::multiplies<>());
        auto* scratch = fftw_alloc_complex(std::size_t(n));
        // ESTIMATE keeps plan selection (and hence rounding) identical across runs.
        // UNALIGNED lets execute() take any Eigen buffer.
        fftw_plan plan = fftw_plan_dft(int(dims.size()), dims.data(), scratch, scratch,
                                       sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        require(plan != nullptr, ErrorCode::InvalidParameter, "FFTW could not create a plan");
        plans.emplace(std::move(key), plan);
        return plan;
    }
};

PlanCache& cache()
{
    static PlanCache instance;
    return instance;
}

} // namespace

FftPlan::FftPlan(std::vector<int> dims, int sign) : dims_(std::move(dims))
{
    require(!dims_.empty(), ErrorCode::InvalidParameter, "FFT needs at least one dimension");
    size_ = std::accumulate(dims_.begin(), dims_.end(), Index(1), std::multiplies<>());
    plan_ = cache().get(dims_, sign);
}

FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;
FftPlan::~FftPlan() = default;

void FftPlan::execute(Complex* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(plan_), p, p);
}

Fft::Fft(std::vector<int> dims) : fwd_(dims, -1), inv_(dims, +1) {}

} // namespace pxspk
