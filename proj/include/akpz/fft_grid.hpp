#pragma once

#include <complex>
#include <vector>

#include "akpz/fourier_field.hpp"

namespace akpz {

// Thin RAII wrapper around a pair of FFTW c2c 2D transforms on an L x L grid.
// Transforms are unnormalized: backward applies e^{+i}, forward e^{-i}, and
// forward(backward(a) . backward(b)) = L^2 * circular_convolution(a, b).
// Plans are created with FFTW_ESTIMATE so results do not depend on planner
// state; plan creation is serialized internally (FFTW planning is not
// thread safe, execution on distinct buffers is).
class FftGrid {
  public:
    explicit FftGrid(int size);
    ~FftGrid();

    FftGrid(const FftGrid&) = delete;
    FftGrid& operator=(const FftGrid&) = delete;
    FftGrid(FftGrid&& other) noexcept;
    FftGrid& operator=(FftGrid&&) = delete;

    int size() const { return size_; }

    Complex* buf_a() { return buf_a_; }
    Complex* buf_b() { return buf_b_; }
    void clear_a();
    void clear_b();

    void backward_a();  // in place, sign +1
    void backward_b();
    void forward_a();  // in place, sign -1

    // Mode k lives at grid index (k mod L) in each dimension.
    std::size_t wrap_index(Wavenumber k) const {
        int i = k.k1 % size_;
        int j = k.k2 % size_;
        if (i < 0) i += size_;
        if (j < 0) j += size_;
        return std::size_t(i) * size_ + j;
    }

    // Smallest size >= n whose factors are all in {2,3,5,7}.
    static int next_fast_size(int n);

  private:
    int size_ = 0;
    Complex* buf_a_ = nullptr;
    Complex* buf_b_ = nullptr;
    void* plan_fw_a_ = nullptr;
    void* plan_bw_a_ = nullptr;
    void* plan_bw_b_ = nullptr;
};

}  // namespace akpz
