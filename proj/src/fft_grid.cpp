#include "akpz/fft_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "akpz/errors.hpp"

namespace akpz {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

FftGrid::FftGrid(int size) : size_(size) {
    if (size < 1) throw DomainError("FftGrid: size must be positive");
    const std::size_t n = std::size_t(size) * size;
    buf_a_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    buf_b_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buf_a_ || !buf_b_) throw std::bad_alloc();
    clear_a();
    clear_b();
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* a = reinterpret_cast<fftw_complex*>(buf_a_);
    auto* b = reinterpret_cast<fftw_complex*>(buf_b_);
    plan_fw_a_ = fftw_plan_dft_2d(size, size, a, a, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bw_a_ = fftw_plan_dft_2d(size, size, a, a, FFTW_BACKWARD, FFTW_ESTIMATE);
    plan_bw_b_ = fftw_plan_dft_2d(size, size, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftGrid::~FftGrid() {
    if (plan_fw_a_ || plan_bw_a_ || plan_bw_b_) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (plan_fw_a_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fw_a_));
        if (plan_bw_a_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bw_a_));
        if (plan_bw_b_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bw_b_));
    }
    if (buf_a_) fftw_free(buf_a_);
    if (buf_b_) fftw_free(buf_b_);
}

FftGrid::FftGrid(FftGrid&& other) noexcept
    : size_(other.size_),
      buf_a_(other.buf_a_),
      buf_b_(other.buf_b_),
      plan_fw_a_(other.plan_fw_a_),
      plan_bw_a_(other.plan_bw_a_),
      plan_bw_b_(other.plan_bw_b_) {
    other.buf_a_ = nullptr;
    other.buf_b_ = nullptr;
    other.plan_fw_a_ = nullptr;
    other.plan_bw_a_ = nullptr;
    other.plan_bw_b_ = nullptr;
}

void FftGrid::clear_a() {
    std::fill_n(buf_a_, std::size_t(size_) * size_, Complex{0.0, 0.0});
}

void FftGrid::clear_b() {
    std::fill_n(buf_b_, std::size_t(size_) * size_, Complex{0.0, 0.0});
}

void FftGrid::backward_a() { fftw_execute(static_cast<fftw_plan>(plan_bw_a_)); }
void FftGrid::backward_b() { fftw_execute(static_cast<fftw_plan>(plan_bw_b_)); }
void FftGrid::forward_a() { fftw_execute(static_cast<fftw_plan>(plan_fw_a_)); }

int FftGrid::next_fast_size(int n) {
    auto smooth = [](int m) {
        for (int p : {2, 3, 5, 7})
            while (m % p == 0) m /= p;
        return m == 1;
    };
    while (!smooth(n)) ++n;
    return n;
}

}  // namespace akpz
