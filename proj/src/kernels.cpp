#include "akpz/kernels.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "akpz/errors.hpp"

namespace akpz {

namespace {

std::atomic<bool> g_sign_flip{false};

// Fixed row decomposition: results do not depend on the thread count.
constexpr int kRowBlock = 64;

template <class BlockFn>
double blocked_sum(int lo, int hi, int threads, BlockFn&& block_fn) {
    const int rows = hi - lo + 1;
    const int nblocks = (rows + kRowBlock - 1) / kRowBlock;
    std::vector<double> partial(std::size_t(nblocks), 0.0);
    auto run_block = [&](int b) {
        int r0 = lo + b * kRowBlock;
        int r1 = std::min(hi, r0 + kRowBlock - 1);
        partial[std::size_t(b)] = block_fn(r0, r1);
    };
    if (threads <= 1 || nblocks == 1) {
        for (int b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) run_block(b);
        };
        std::vector<std::thread> pool;
        int n = std::min(threads, nblocks);
        pool.reserve(std::size_t(n));
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    KahanSum total;
    for (double p : partial) total.add(p);
    return total.value();
}

}  // namespace

void set_kernel_sign_flip_for_tests(bool enabled) { g_sign_flip.store(enabled); }
bool kernel_sign_flip_for_tests() { return g_sign_flip.load(); }

double kernel_K(Wavenumber l, Wavenumber m, const KernelParams& params) {
    if (l.is_zero() || m.is_zero()) throw DomainError("kernel_K: zero wavenumber");
    Wavenumber s = l + m;
    if (s.is_zero()) return 0.0;
    const int n = params.n;
    if (l.norm_inf() > n || m.norm_inf() > n || s.norm_inf() > n) return 0.0;
    double v = s.norm() * double(c_form(l, m)) / (l.norm() * m.norm());
    if (g_sign_flip.load(std::memory_order_relaxed)) {
        // Perturb a single orbit-member class so the cancellation breaks.
        if (l.k1 > m.k1 || (l.k1 == m.k1 && l.k2 > m.k2)) v = -v;
    }
    return v;
}

double orbit_sum(Wavenumber m, Wavenumber l, const KernelParams& params) {
    if (m.is_zero() || l.is_zero() || (m + l).is_zero())
        throw DomainError("orbit_sum: degenerate wavenumbers");
    Wavenumber t = -(m + l);
    return kernel_K(m, l, params) + kernel_K(t, l, params) + kernel_K(m, t, params);
}

double sigma_energy(Wavenumber k, const KernelParams& params, int threads) {
    const int n = params.n;
    if (k.is_zero()) throw DomainError("sigma_energy: k must be nonzero");
    if (k.norm_inf() > n) throw DomainError("sigma_energy: k outside cutoff");
    const int lo1 = std::max(-n, k.k1 - n), hi1 = std::min(n, k.k1 + n);
    const int lo2 = std::max(-n, k.k2 - n), hi2 = std::min(n, k.k2 + n);
    return blocked_sum(lo1, hi1, threads, [&](int r0, int r1) {
        KahanSum acc;
        for (int l1 = r0; l1 <= r1; ++l1) {
            for (int l2 = lo2; l2 <= hi2; ++l2) {
                Wavenumber l{l1, l2};
                Wavenumber m = k - l;
                if (l.is_zero() || m.is_zero()) continue;
                double c = double(c_form(l, m));
                double l2n = l.norm_sq(), m2n = m.norm_sq();
                double d = l2n + m2n;
                acc.add(c * c / (m2n * d * d));
            }
        }
        return acc.value();
    });
}

double sigma_variational(Wavenumber k, const KernelParams& params, int threads) {
    const int n = params.n;
    if (k.is_zero()) throw DomainError("sigma_variational: k must be nonzero");
    if (k.norm_inf() > n) throw DomainError("sigma_variational: k outside cutoff");
    const int lo1 = std::max(-n, k.k1 - n), hi1 = std::min(n, k.k1 + n);
    const int lo2 = std::max(-n, k.k2 - n), hi2 = std::min(n, k.k2 + n);
    return blocked_sum(lo1, hi1, threads, [&](int r0, int r1) {
        KahanSum acc;
        for (int l1 = r0; l1 <= r1; ++l1) {
            for (int l2 = lo2; l2 <= hi2; ++l2) {
                Wavenumber l{l1, l2};
                Wavenumber m = k - l;
                if (l.is_zero() || m.is_zero()) continue;
                double c = double(c_form(l, m));
                double l2n = l.norm_sq(), m2n = m.norm_sq();
                acc.add(c * c / (l2n * m2n * (l2n + m2n)));
            }
        }
        return acc.value();
    });
}

double sigma_zero_mode(const KernelParams& params, int threads) {
    const int n = params.n;
    return blocked_sum(-n, n, threads, [&](int r0, int r1) {
        KahanSum acc;
        for (int l1 = r0; l1 <= r1; ++l1) {
            for (int l2 = -n; l2 <= n; ++l2) {
                if (l1 == 0 && l2 == 0) continue;
                double diff = double(l1) * l1 - double(l2) * l2;
                double r2 = double(l1) * l1 + double(l2) * l2;
                acc.add(diff * diff / (r2 * r2 * r2));
            }
        }
        return acc.value();
    });
}

double sigma_a_minus(Wavenumber k, const KernelParams& params, int threads) {
    const int n = params.n;
    if (k.is_zero()) throw DomainError("sigma_a_minus: k must be nonzero");
    if (k.norm_inf() > n) return 0.0;
    const int lo1 = std::max(-n, k.k1 - n), hi1 = std::min(n, k.k1 + n);
    const int lo2 = std::max(-n, k.k2 - n), hi2 = std::min(n, k.k2 + n);
    return blocked_sum(lo1, hi1, threads, [&](int r0, int r1) {
        KahanSum acc;
        for (int l1 = r0; l1 <= r1; ++l1) {
            for (int l2 = lo2; l2 <= hi2; ++l2) {
                Wavenumber l{l1, l2};
                Wavenumber m = k - l;
                if (l.is_zero() || m.is_zero()) continue;
                double num = double(c_form(k, -l)) * double(c_form(l, m));
                double l2n = l.norm_sq();
                acc.add(num / (l2n * (l2n + m.norm_sq())));
            }
        }
        return acc.value();
    });
}

}  // namespace akpz
