#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>

namespace akpz {

// Lattice wavenumber on Z^2. The zero mode (0,0) is stored by fields but
// carries no dynamics; operations that require k != 0 check for it explicitly.
struct Wavenumber {
    int k1 = 0;
    int k2 = 0;

    friend constexpr bool operator==(Wavenumber a, Wavenumber b) {
        return a.k1 == b.k1 && a.k2 == b.k2;
    }
    friend constexpr bool operator!=(Wavenumber a, Wavenumber b) { return !(a == b); }
    friend constexpr Wavenumber operator+(Wavenumber a, Wavenumber b) {
        return {a.k1 + b.k1, a.k2 + b.k2};
    }
    friend constexpr Wavenumber operator-(Wavenumber a, Wavenumber b) {
        return {a.k1 - b.k1, a.k2 - b.k2};
    }
    friend constexpr Wavenumber operator-(Wavenumber a) { return {-a.k1, -a.k2}; }

    constexpr bool is_zero() const { return k1 == 0 && k2 == 0; }

    // |k|^2 (Euclidean). Used in all multipliers and kernel denominators.
    constexpr double norm_sq() const {
        return double(k1) * k1 + double(k2) * k2;
    }
    double norm() const { return std::sqrt(norm_sq()); }

    // |k|_inf. Used only in cutoff indicators.
    constexpr int norm_inf() const {
        int a = k1 < 0 ? -k1 : k1;
        int b = k2 < 0 ? -k2 : k2;
        return a > b ? a : b;
    }

    // Canonical representative of {k,-k}: the lexicographically positive one.
    constexpr bool is_canonical() const {
        return k1 > 0 || (k1 == 0 && k2 > 0);
    }

    friend constexpr bool operator<(Wavenumber a, Wavenumber b) {
        return a.k1 != b.k1 ? a.k1 < b.k1 : a.k2 < b.k2;
    }

    friend std::ostream& operator<<(std::ostream& os, Wavenumber k) {
        return os << "(" << k.k1 << "," << k.k2 << ")";
    }
};

struct WavenumberHash {
    std::size_t operator()(Wavenumber k) const {
        std::uint64_t v = (std::uint64_t(std::uint32_t(k.k1)) << 32) | std::uint32_t(k.k2);
        v ^= v >> 33;
        v *= 0xff51afd7ed558ccdULL;
        v ^= v >> 33;
        return std::size_t(v);
    }
};

}  // namespace akpz
