#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <memory>
#include <mutex>

namespace qawg::detail {
namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

struct BufferDeleter {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& in, FftDirection dir) {
    const int n = static_cast<int>(in.size());
    if (n == 0) return {};
    std::unique_ptr<fftw_complex, BufferDeleter> buf(fftw_alloc_complex(static_cast<std::size_t>(n)));
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_1d(n, buf.get(), buf.get(), dir == FftDirection::kForward ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE));
    }
    std::memcpy(buf.get(), in.data(), sizeof(fftw_complex) * static_cast<std::size_t>(n));
    fftw_execute(plan.get());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
    std::memcpy(static_cast<void*>(out.data()), buf.get(), sizeof(fftw_complex) * static_cast<std::size_t>(n));
    return out;
}

}  // namespace qawg::detail
