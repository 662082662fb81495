#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <cstring>
#include <unordered_map>
#include <vector>

#include "akpz/errors.hpp"
#include "akpz/fourier_field.hpp"
#include "akpz/wavenumber.hpp"

namespace akpz {

// Ordered tuple of up to three wavenumbers, stored sorted (lexicographic).
// Keys the entries of symmetric Fock-space kernels.
struct KernelTuple {
    std::array<Wavenumber, 3> k{};
    int degree = 0;

    static KernelTuple of(std::initializer_list<Wavenumber> ks) {
        KernelTuple t;
        t.degree = int(ks.size());
        int i = 0;
        for (auto w : ks) t.k[std::size_t(i++)] = w;
        t.normalize();
        return t;
    }
    template <class It>
    static KernelTuple from_range(It first, It last) {
        KernelTuple t;
        for (It it = first; it != last; ++it) t.k[std::size_t(t.degree++)] = *it;
        t.normalize();
        return t;
    }

    void normalize() { std::sort(k.begin(), k.begin() + degree); }

    KernelTuple negated() const {
        KernelTuple t = *this;
        for (int i = 0; i < degree; ++i) t.k[std::size_t(i)] = -t.k[std::size_t(i)];
        t.normalize();
        return t;
    }

    // Number of distinct orderings, n! / prod(multiplicity!).
    int distinct_orderings() const {
        static constexpr int fact[4] = {1, 1, 2, 6};
        int denom = 1, run = 1;
        for (int i = 1; i < degree; ++i) {
            if (k[std::size_t(i)] == k[std::size_t(i - 1)])
                ++run;
            else
                run = 1;
            denom *= run;
        }
        // denom accumulates prod over positions of running multiplicities,
        // which telescopes to prod(multiplicity!).
        return fact[degree] / denom;
    }

    double eigenvalue_sum_norm_sq() const {  // sum_i |k_i|^2
        double s = 0;
        for (int i = 0; i < degree; ++i) s += k[std::size_t(i)].norm_sq();
        return s;
    }

    int max_norm_inf() const {
        int m = 0;
        for (int i = 0; i < degree; ++i) m = std::max(m, k[std::size_t(i)].norm_inf());
        return m;
    }

    friend bool operator==(const KernelTuple& a, const KernelTuple& b) {
        if (a.degree != b.degree) return false;
        for (int i = 0; i < a.degree; ++i)
            if (a.k[std::size_t(i)] != b.k[std::size_t(i)]) return false;
        return true;
    }
};

struct KernelTupleHash {
    std::size_t operator()(const KernelTuple& t) const {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ std::uint64_t(t.degree);
        for (int i = 0; i < t.degree; ++i) {
            WavenumberHash wh;
            h ^= wh(t.k[std::size_t(i)]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return std::size_t(h);
    }
};

// Finitely supported symmetric kernel on (Z^2 \ {0})^n, n in {1,2,3}.
// Entries are indexed by the eta-subscripts directly: the functional it
// represents is I_n(K) = sum over ordered tuples K(k_1..k_n) :eta_k1...eta_kn:.
// Values are stored once per sorted tuple; symmetry is structural. Reality of
// the represented functional corresponds to conj(K(t)) = K(-t).
class ChaosKernel {
  public:
    ChaosKernel() = default;
    explicit ChaosKernel(int degree) : degree_(degree) {
        if (degree < 1 || degree > 3) throw DomainError("ChaosKernel: degree must be 1..3");
    }

    int degree() const { return degree_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    Complex entry(const KernelTuple& t) const {
        auto it = entries_.find(t);
        return it == entries_.end() ? Complex{0, 0} : it->second;
    }
    Complex entry(std::initializer_list<Wavenumber> ks) const {
        return entry(KernelTuple::of(ks));
    }

    void set(const KernelTuple& t, Complex v) {
        check(t);
        if (v == Complex{0, 0})
            entries_.erase(t);
        else
            entries_[t] = v;
    }
    void add(const KernelTuple& t, Complex v) {
        check(t);
        auto [it, inserted] = entries_.try_emplace(t, v);
        if (!inserted) it->second += v;
    }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [t, v] : entries_) f(t, v);
    }

    // Fock norm^2: sum over all *ordered* tuples of |K|^2.
    double fock_norm_sq() const {
        double s = 0;
        for (const auto& [t, v] : entries_) s += t.distinct_orderings() * std::norm(v);
        return s;
    }

    // Hermitian Fock pairing sum_{ordered} K(t) conj(K'(t)).
    Complex fock_inner(const ChaosKernel& other) const {
        if (degree_ != other.degree_) return {0, 0};
        const ChaosKernel* small = this;
        const ChaosKernel* big = &other;
        bool swapped = false;
        if (small->size() > big->size()) {
            std::swap(small, big);
            swapped = true;
        }
        Complex s{0, 0};
        small->for_each([&](const KernelTuple& t, Complex v) {
            Complex w = big->entry(t);
            s += double(t.distinct_orderings()) * (swapped ? w * std::conj(v) : v * std::conj(w));
        });
        return s;
    }

    double max_abs_entry() const {
        double m = 0;
        for (const auto& [t, v] : entries_) m = std::max(m, std::abs(v));
        return m;
    }

    int support_norm_inf() const {
        int m = 0;
        for (const auto& [t, v] : entries_) {
            (void)v;
            m = std::max(m, t.max_norm_inf());
        }
        return m;
    }

    // Max violation of conj(K(t)) = K(-t) relative to the entry scale.
    double reality_error() const {
        double err = 0;
        for (const auto& [t, v] : entries_) err = std::max(err, std::abs(std::conj(v) - entry(t.negated())));
        return err;
    }

    void scale(Complex c) {
        for (auto& [t, v] : entries_) v *= c;
    }
    void accumulate(const ChaosKernel& other, Complex weight = {1, 0}) {
        if (degree_ != other.degree_) throw DomainError("ChaosKernel::accumulate: degree mismatch");
        other.for_each([&](const KernelTuple& t, Complex v) { add(t, weight * v); });
    }

  private:
    void check(const KernelTuple& t) const {
        if (t.degree != degree_) throw DomainError("ChaosKernel: tuple degree mismatch");
        for (int i = 0; i < t.degree; ++i)
            if (t.k[std::size_t(i)].is_zero()) throw DomainError("ChaosKernel: zero wavenumber in tuple");
    }

    int degree_ = 1;
    std::unordered_map<KernelTuple, Complex, KernelTupleHash> entries_;
};

// Cylinder functional F = const + I_1(K_1) + I_2(K_2) + I_3(K_3) in the
// chaos decomposition over the spatial white noise. The constant may be
// complex for intermediate objects (e.g. Malliavin derivatives in a complex
// direction); physical functionals keep it real and kernels Hermitian.
class CylinderFunctional {
  public:
    Complex constant{0, 0};

    CylinderFunctional() {
        for (int d = 1; d <= 3; ++d) kernels_[std::size_t(d - 1)] = ChaosKernel(d);
    }

    static CylinderFunctional from_kernel(ChaosKernel k) {
        CylinderFunctional f;
        f.kernels_[std::size_t(k.degree() - 1)] = std::move(k);
        return f;
    }

    ChaosKernel& kernel(int degree) { return kernels_.at(std::size_t(degree - 1)); }
    const ChaosKernel& kernel(int degree) const { return kernels_.at(std::size_t(degree - 1)); }

    int max_degree() const {
        for (int d = 3; d >= 1; --d)
            if (!kernel(d).empty()) return d;
        return 0;
    }

    // ||F||^2_{L^2(eta)} = |const|^2 + sum_n n! ||K_n||^2.
    double l2_sq() const {
        static constexpr double fact[4] = {1, 1, 2, 6};
        double s = std::norm(constant);
        for (int d = 1; d <= 3; ++d) s += fact[d] * kernel(d).fock_norm_sq();
        return s;
    }

    double reality_error() const {
        double e = std::abs(constant.imag());
        for (int d = 1; d <= 3; ++d) e = std::max(e, kernel(d).reality_error());
        return e;
    }

    int support_norm_inf() const {
        int m = 0;
        for (int d = 1; d <= 3; ++d) m = std::max(m, kernel(d).support_norm_inf());
        return m;
    }

    void scale(Complex c) {
        constant *= c;
        for (auto& k : kernels_) k.scale(c);
    }

    void accumulate(const CylinderFunctional& other, Complex weight = {1, 0}) {
        constant += weight * other.constant;
        for (int d = 1; d <= 3; ++d) kernel(d).accumulate(other.kernel(d), weight);
    }

  private:
    std::array<ChaosKernel, 3> kernels_;
};

}  // namespace akpz
