#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <map>
#include <vector>

#include "akpz/errors.hpp"
#include "akpz/wavenumber.hpp"

namespace akpz {

using Complex = std::complex<double>;

// Real-valued random field on T^2, stored as Fourier coefficients on the
// half-lattice {k : |k|_inf <= M, k canonical}. The mirrored coefficient is
// conj(coeff(k)) by Hermitian symmetry, so reality holds by construction.
// The zero mode is real and kept separately.
//
// Half-lattice enumeration (also the serialization order): k1 = 0 with
// k2 = 1..M first, then k1 = 1..M row-major with k2 = -M..M.
class FourierField {
  public:
    FourierField() = default;
    explicit FourierField(int cutoff) : m_(cutoff), data_(half_size(cutoff), Complex{0.0, 0.0}) {
        if (cutoff < 0) throw DomainError("FourierField: cutoff must be >= 0");
    }

    static std::size_t half_size(int m) {
        return std::size_t(2) * m * (m + 1);
    }

    int cutoff() const { return m_; }
    double zero_mode() const { return zero_; }
    void set_zero_mode(double v) { zero_ = v; }

    bool in_range(Wavenumber k) const { return k.norm_inf() <= m_; }

    Complex coeff(Wavenumber k) const {
        if (k.is_zero()) return Complex{zero_, 0.0};
        if (!in_range(k)) return Complex{0.0, 0.0};
        return k.is_canonical() ? data_[index(k)] : std::conj(data_[index(-k)]);
    }

    // Sets coeff(k) and, implicitly, coeff(-k) = conj(value).
    void set_coeff(Wavenumber k, Complex value) {
        if (k.is_zero()) {
            zero_ = value.real();
            return;
        }
        if (!in_range(k)) throw DomainError("FourierField::set_coeff: mode outside storage");
        if (k.is_canonical())
            data_[index(k)] = value;
        else
            data_[index(-k)] = std::conj(value);
    }

    void add_coeff(Wavenumber k, Complex value) { set_coeff(k, coeff(k) + value); }

    // Canonical (half-lattice) entries in enumeration order.
    std::size_t half_count() const { return data_.size(); }
    Complex half_entry(std::size_t i) const { return data_[i]; }
    void set_half_entry(std::size_t i, Complex v) { data_[i] = v; }
    Wavenumber half_wavenumber(std::size_t i) const {
        if (i < std::size_t(m_)) return {0, int(i) + 1};
        std::size_t j = i - m_;
        int row = int(j / (2 * m_ + 1));
        int col = int(j % (2 * m_ + 1));
        return {row + 1, col - m_};
    }

    template <class F>
    void for_each_canonical(F&& f) const {
        for (std::size_t i = 0; i < data_.size(); ++i) f(half_wavenumber(i), data_[i]);
    }

    // Max |coeff| over stored modes (zero mode included). Blowup detection.
    double max_abs() const {
        double m = std::abs(zero_);
        for (const auto& c : data_) {
            double a = std::abs(c);
            if (a > m) m = a;
        }
        return m;
    }

    double l2_sq() const {  // sum over all of Z^2 plus zero mode
        double s = zero_ * zero_;
        for (const auto& c : data_) s += 2.0 * std::norm(c);
        return s;
    }

    friend bool operator==(const FourierField& a, const FourierField& b) {
        return a.m_ == b.m_ && a.zero_ == b.zero_ && a.data_ == b.data_;
    }

  private:
    std::size_t index(Wavenumber k) const {
        assert(k.is_canonical() && in_range(k));
        if (k.k1 == 0) return std::size_t(k.k2) - 1;
        return std::size_t(m_) + std::size_t(k.k1 - 1) * (2 * m_ + 1) + std::size_t(k.k2 + m_);
    }

    int m_ = 0;
    double zero_ = 0.0;
    std::vector<Complex> data_;
};

// Finitely supported test function, Hermitian by construction. Kept sparse:
// experiments pair fields and chaos kernels against a handful of modes.
class TestFunction {
  public:
    TestFunction() = default;

    void set_coeff(Wavenumber k, Complex value) {
        if (k.is_zero()) {
            zero_ = value.real();
            return;
        }
        if (k.is_canonical())
            coeffs_[k] = value;
        else
            coeffs_[-k] = std::conj(value);
    }

    Complex coeff(Wavenumber k) const {
        if (k.is_zero()) return Complex{zero_, 0.0};
        if (k.is_canonical()) {
            auto it = coeffs_.find(k);
            return it == coeffs_.end() ? Complex{0.0, 0.0} : it->second;
        }
        auto it = coeffs_.find(-k);
        return it == coeffs_.end() ? Complex{0.0, 0.0} : std::conj(it->second);
    }

    double zero_mode() const { return zero_; }

    // phi = e_k + e_{-k}: the standard real single-pair test function.
    static TestFunction mode_pair(Wavenumber k, Complex amplitude = {1.0, 0.0}) {
        TestFunction phi;
        phi.set_coeff(k, amplitude);
        return phi;
    }

    // All modes with nonzero coefficient, canonical and mirrored.
    std::vector<Wavenumber> support() const {
        std::vector<Wavenumber> s;
        s.reserve(2 * coeffs_.size());
        for (const auto& [k, v] : coeffs_) {
            (void)v;
            s.push_back(k);
            s.push_back(-k);
        }
        return s;
    }

    const std::map<Wavenumber, Complex>& canonical_coeffs() const { return coeffs_; }

    int max_norm_inf() const {
        int m = 0;
        for (const auto& [k, v] : coeffs_) {
            (void)v;
            if (k.norm_inf() > m) m = k.norm_inf();
        }
        return m;
    }

    // Homogeneous H^1 norm squared: sum_k |k|^2 |phi_k|^2 (zero mode excluded).
    double h1_sq() const {
        double s = 0.0;
        for (const auto& [k, v] : coeffs_) s += 2.0 * k.norm_sq() * std::norm(v);
        return s;
    }

  private:
    double zero_ = 0.0;
    std::map<Wavenumber, Complex> coeffs_;  // canonical keys only
};

}  // namespace akpz
