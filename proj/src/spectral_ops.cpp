#include "akpz/spectral_ops.hpp"

#include <algorithm>
#include <cmath>

#include "akpz/errors.hpp"
#include "akpz/fft_grid.hpp"

namespace akpz {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kInvSqrt2 = 0.7071067811865475244008444;
}  // namespace

FourierField sample_white_noise(int cutoff, Rng& rng) {
    if (cutoff < 1) throw DomainError("sample_white_noise: cutoff must be >= 1");
    FourierField f(cutoff);
    for (std::size_t i = 0; i < f.half_count(); ++i) {
        double re = rng.normal() * kInvSqrt2;
        double im = rng.normal() * kInvSqrt2;
        f.set_half_entry(i, Complex{re, im});
    }
    return f;
}

FourierField sample_gff(int cutoff, Rng& rng) {
    FourierField f = sample_white_noise(cutoff, rng);
    for (std::size_t i = 0; i < f.half_count(); ++i)
        f.set_half_entry(i, f.half_entry(i) / f.half_wavenumber(i).norm());
    return f;
}

FourierField project(const FourierField& f, int n) {
    FourierField out = f;
    for (std::size_t i = 0; i < out.half_count(); ++i)
        if (out.half_wavenumber(i).norm_inf() > n) out.set_half_entry(i, Complex{0.0, 0.0});
    return out;
}

FourierField frac_laplacian(const FourierField& f, double theta) {
    if (theta < 0.0 && f.zero_mode() != 0.0)
        throw DomainError("frac_laplacian: negative power needs vanishing zero mode");
    FourierField out = f;
    if (theta != 0.0) out.set_zero_mode(0.0);
    for (std::size_t i = 0; i < out.half_count(); ++i)
        out.set_half_entry(i, out.half_entry(i) * std::pow(out.half_wavenumber(i).norm_sq(), theta));
    return out;
}

double sobolev_norm_sq(const FourierField& f, double alpha, bool homogeneous) {
    double s = homogeneous ? 0.0 : f.zero_mode() * f.zero_mode();
    for (std::size_t i = 0; i < f.half_count(); ++i) {
        double k2 = f.half_wavenumber(i).norm_sq();
        double w = homogeneous ? std::pow(k2, alpha) : std::pow(1.0 + k2, alpha);
        s += 2.0 * w * std::norm(f.half_entry(i));
    }
    return s;
}

double sobolev_norm(const FourierField& f, double alpha, bool homogeneous) {
    return std::sqrt(sobolev_norm_sq(f, alpha, homogeneous));
}

std::vector<double> besov_block_sups(const FourierField& f, const BesovOptions& opts) {
    const int m = f.cutoff();
    if (opts.oversample < 1) throw DomainError("besov: oversample must be >= 1");

    int j_max = 0;
    double kmax = std::sqrt(2.0) * m;
    while ((1 << (j_max + 1)) <= kmax) ++j_max;

    std::vector<double> sups(std::size_t(j_max) + 2, 0.0);
    sups[0] = std::abs(f.zero_mode()) / kTwoPi;  // block -1: constant e_0 part

    const int grid = FftGrid::next_fast_size(opts.oversample * (2 * m + 1));
    FftGrid fft(grid);
    for (int j = 0; j <= j_max; ++j) {
        fft.clear_a();
        const double lo = double(1 << j), hi = double(2 << j);
        bool any = false;
        f.for_each_canonical([&](Wavenumber k, Complex v) {
            double r = k.norm();
            if (r >= lo && r < hi && v != Complex{0.0, 0.0}) {
                any = true;
                fft.buf_a()[fft.wrap_index(k)] = v;
                fft.buf_a()[fft.wrap_index(-k)] = std::conj(v);
            }
        });
        if (!any) continue;
        fft.backward_a();
        double sup = 0.0;
        const std::size_t n = std::size_t(grid) * grid;
        for (std::size_t i = 0; i < n; ++i) {
            double a = std::abs(fft.buf_a()[i].real());
            if (a > sup) sup = a;
        }
        sups[std::size_t(j) + 1] = sup / kTwoPi;  // e_k = e^{ikx} / (2 pi)
    }
    return sups;
}

double besov_norm(const FourierField& f, double alpha, const BesovOptions& opts) {
    auto sups = besov_block_sups(f, opts);
    double best = 0.0;
    for (std::size_t i = 0; i < sups.size(); ++i) {
        int j = int(i) - 1;
        double v = std::pow(2.0, alpha * j) * sups[i];
        if (v > best) best = v;
    }
    return best;
}

}  // namespace akpz
