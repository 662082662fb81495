#include "akpz/chaos_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace akpz {

namespace {

// Accumulates one term of an unsymmetrized kernel into the symmetric store.
// If every ordered tuple in the support is produced exactly once with its
// pointwise value, this reproduces the symmetrization Sym f on sorted tuples:
// Sym f(s) = (prod mult! / n!) * sum over distinct orderings of f.
void sym_add(ChaosKernel& out, const KernelTuple& ordered_as_sorted_key, Complex value) {
    out.add(ordered_as_sorted_key, value / double(ordered_as_sorted_key.distinct_orderings()));
}

template <class Fn>
void for_each_split(Wavenumber target, int n, Fn&& fn) {
    // All ordered (k1, k2) with k1 + k2 = target inside the sup-norm cutoff.
    const int lo1 = std::max(-n, target.k1 - n), hi1 = std::min(n, target.k1 + n);
    const int lo2 = std::max(-n, target.k2 - n), hi2 = std::min(n, target.k2 + n);
    for (int a = lo1; a <= hi1; ++a)
        for (int b = lo2; b <= hi2; ++b) {
            Wavenumber k1{a, b};
            Wavenumber k2 = target - k1;
            if (k1.is_zero() || k2.is_zero()) continue;
            fn(k1, k2);
        }
}

// Distinct orderings of a sorted tuple, as index permutations.
template <class Fn>
void for_each_distinct_ordering(const KernelTuple& s, Fn&& fn) {
    static constexpr int perms3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    std::array<Wavenumber, 3> t{};
    if (s.degree == 1) {
        fn(s.k);
        return;
    }
    if (s.degree == 2) {
        fn(s.k);
        if (s.k[0] != s.k[1]) {
            t = {s.k[1], s.k[0], s.k[2]};
            fn(t);
        }
        return;
    }
    std::array<std::array<Wavenumber, 3>, 6> seen{};
    int n_seen = 0;
    for (const auto& p : perms3) {
        t = {s.k[std::size_t(p[0])], s.k[std::size_t(p[1])], s.k[std::size_t(p[2])]};
        bool dup = false;
        for (int i = 0; i < n_seen; ++i)
            if (seen[std::size_t(i)] == t) {
                dup = true;
                break;
            }
        if (dup) continue;
        seen[std::size_t(n_seen++)] = t;
        fn(t);
    }
}

}  // namespace

CylinderFunctional apply_L0(const CylinderFunctional& f, const KernelParams& params) {
    CylinderFunctional out;
    out.constant = {0, 0};  // L0 annihilates constants
    for (int d = 1; d <= 3; ++d)
        f.kernel(d).for_each([&](const KernelTuple& t, Complex v) {
            out.kernel(d).set(t, v * (-0.5 * params.nu * t.eigenvalue_sum_norm_sq()));
        });
    return out;
}

CylinderFunctional apply_Aplus(const CylinderFunctional& f, const KernelParams& params) {
    if (!f.kernel(3).empty())
        throw CapacityError("apply_Aplus: input of degree 3 would leave the degree-3 cap");
    CylinderFunctional out;
    const double lam = params.lambda;
    const int n_cut = params.n;

    // n = 1 -> 2:  f+(k1,k2) = lambda K_{k1,k2} K(k1+k2)
    f.kernel(1).for_each([&](const KernelTuple& t, Complex v) {
        for_each_split(t.k[0], n_cut, [&](Wavenumber k1, Wavenumber k2) {
            double K = kernel_K(k1, k2, params);
            if (K == 0.0) return;
            sym_add(out.kernel(2), KernelTuple::of({k1, k2}), lam * K * v);
        });
    });

    // n = 2 -> 3:  f+(k1,k2,k3) = 2 lambda K_{k1,k2} K(k1+k2, k3)
    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        auto emit = [&](Wavenumber sum_target, Wavenumber spectator) {
            for_each_split(sum_target, n_cut, [&](Wavenumber k1, Wavenumber k2) {
                double K = kernel_K(k1, k2, params);
                if (K == 0.0) return;
                sym_add(out.kernel(3), KernelTuple::of({k1, k2, spectator}), 2.0 * lam * K * v);
            });
        };
        emit(t.k[0], t.k[1]);
        if (t.k[0] != t.k[1]) emit(t.k[1], t.k[0]);
    });
    return out;
}

CylinderFunctional apply_Aminus(const CylinderFunctional& f, const KernelParams& params) {
    CylinderFunctional out;
    const double lam = params.lambda;

    // n = 2 -> 1:  K-(k) = 4 lambda sum_{l+m=k} K_{k,-l} K(l,m)
    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        auto emit = [&](Wavenumber l, Wavenumber m) {
            Wavenumber k = l + m;
            if (k.is_zero()) return;
            double K = kernel_K(k, -l, params);
            if (K == 0.0) return;
            out.kernel(1).add(KernelTuple::of({k}), 4.0 * lam * K * v);
        };
        emit(t.k[0], t.k[1]);
        if (t.k[0] != t.k[1]) emit(t.k[1], t.k[0]);
    });

    // n = 3 -> 2:  f-(k1,k2) = 12 lambda sum_{l+m=k1} K_{k1,-l} K(l,m,k2)
    f.kernel(3).for_each([&](const KernelTuple& t, Complex v) {
        for_each_distinct_ordering(t, [&](const std::array<Wavenumber, 3>& o) {
            Wavenumber l = o[0], m = o[1], rest = o[2];
            Wavenumber k1 = l + m;
            if (k1.is_zero()) return;
            double K = kernel_K(k1, -l, params);
            if (K == 0.0) return;
            sym_add(out.kernel(2), KernelTuple::of({k1, rest}), 12.0 * lam * K * v);
        });
    });
    return out;
}

Complex chaos_inner(const CylinderFunctional& f, const CylinderFunctional& g) {
    static constexpr double fact[4] = {1, 1, 2, 6};
    Complex s = f.constant * std::conj(g.constant);
    for (int d = 1; d <= 3; ++d) s += fact[d] * f.kernel(d).fock_inner(g.kernel(d));
    return s;
}

double adjointness_check(const CylinderFunctional& f, const CylinderFunctional& g,
                         const KernelParams& params) {
    Complex s = chaos_inner(apply_Aplus(f, params), g) + chaos_inner(f, apply_Aminus(g, params));
    return s.real();
}

ChaosKernel nonlinearity_kernel(const TestFunction& phi, const KernelParams& params) {
    ChaosKernel k(2);
    for (Wavenumber w : phi.support()) {
        Complex pw = phi.coeff(-w);
        for_each_split(w, params.n, [&](Wavenumber l, Wavenumber m) {
            if (m < l) return;  // each unordered pair once
            double K = kernel_K(l, m, params);
            if (K == 0.0) return;
            k.set(KernelTuple::of({l, m}), K * pw);
        });
    }
    return k;
}

ChaosKernel zero_mode_nonlinearity_kernel(const KernelParams& params) {
    ChaosKernel k(2);
    const int n = params.n;
    for (int a = 0; a <= n; ++a)
        for (int b = -n; b <= n; ++b) {
            Wavenumber l{a, b};
            if (!l.is_canonical() || l.norm_inf() > n) continue;
            double v = double(c_form(l, -l)) / l.norm_sq();
            if (v != 0.0) k.set(KernelTuple::of({l, -l}), Complex{v, 0});
        }
    return k;
}

CylinderFunctional poisson_solve_nonlinearity(const TestFunction& phi, const KernelParams& params) {
    CylinderFunctional h;
    const double pref = -2.0 * params.lambda / params.nu;
    for (Wavenumber w : phi.support()) {
        Complex pw = phi.coeff(-w);
        for_each_split(w, params.n, [&](Wavenumber l, Wavenumber m) {
            if (m < l) return;
            double K = kernel_K(l, m, params);
            if (K == 0.0) return;
            h.kernel(2).set(KernelTuple::of({l, m}),
                            pref * K * pw / (l.norm_sq() + m.norm_sq()));
        });
    }
    return h;
}

CylinderFunctional poisson_solve_zero_mode(const KernelParams& params) {
    CylinderFunctional h;
    const int n = params.n;
    const double pref = -params.lambda / params.nu;
    for (int a = 0; a <= n; ++a)
        for (int b = -n; b <= n; ++b) {
            Wavenumber l{a, b};
            if (!l.is_canonical() || l.norm_inf() > n) continue;
            double v = double(c_form(l, -l)) / (l.norm_sq() * l.norm_sq());
            if (v != 0.0) h.kernel(2).set(KernelTuple::of({l, -l}), Complex{pref * v, 0});
        }
    return h;
}

CylinderFunctional malliavin_derivative(const CylinderFunctional& f, Wavenumber k) {
    CylinderFunctional out;
    const Wavenumber mk = -k;
    out.constant = f.kernel(1).entry({mk});
    for (int d = 2; d <= 3; ++d) {
        f.kernel(d).for_each([&](const KernelTuple& t, Complex v) {
            for (int i = 0; i < t.degree; ++i) {
                if (t.k[std::size_t(i)] != mk) continue;
                KernelTuple rest;
                rest.degree = d - 1;
                int j = 0;
                for (int q = 0; q < t.degree; ++q)
                    if (q != i) rest.k[std::size_t(j++)] = t.k[std::size_t(q)];
                rest.normalize();
                out.kernel(d - 1).set(rest, double(d) * v);
                break;  // removing any one instance gives the same tuple
            }
        });
    }
    return out;
}

CylinderFunctional energy_functional(const CylinderFunctional& f) {
    if (!f.kernel(3).empty())
        throw CapacityError("energy_functional: degree-3 input exceeds the degree-2 output cap");

    // D_k F = c(k) + sum_j g_k(j) u_j with c(k) = K1(-k), g_k(j) = 2 K2(-k, j).
    std::unordered_map<Wavenumber, Complex, WavenumberHash> c;
    std::unordered_map<Wavenumber, std::vector<std::pair<Wavenumber, Complex>>, WavenumberHash> g;
    f.kernel(1).for_each([&](const KernelTuple& t, Complex v) { c[-t.k[0]] += v; });
    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        g[-t.k[0]].emplace_back(t.k[1], 2.0 * v);
        if (t.k[0] != t.k[1]) g[-t.k[1]].emplace_back(t.k[0], 2.0 * v);
    });

    std::vector<Wavenumber> ks;
    for (const auto& [k, v] : c) {
        (void)v;
        ks.push_back(k);
    }
    for (const auto& [k, v] : g) {
        (void)v;
        if (!c.count(k)) ks.push_back(k);
    }

    auto c_at = [&](Wavenumber k) -> Complex {
        auto it = c.find(k);
        return it == c.end() ? Complex{0, 0} : it->second;
    };
    static const std::vector<std::pair<Wavenumber, Complex>> kEmpty;
    auto g_at = [&](Wavenumber k) -> const std::vector<std::pair<Wavenumber, Complex>>& {
        auto it = g.find(k);
        return it == g.end() ? kEmpty : it->second;
    };

    CylinderFunctional out;
    for (Wavenumber k : ks) {
        double w = k.norm_sq();
        if (w == 0.0) continue;
        Complex ck = c_at(k), cmk = c_at(-k);
        const auto& gk = g_at(k);
        const auto& gmk = g_at(-k);

        out.constant += w * ck * cmk;
        for (const auto& [j1, a] : gk)
            for (const auto& [j2, b] : gmk) {
                if (j1 + j2 == Wavenumber{0, 0}) out.constant += w * a * b;
                sym_add(out.kernel(2), KernelTuple::of({j1, j2}), w * a * b);
            }
        for (const auto& [j, a] : gk)
            if (cmk != Complex{0, 0}) out.kernel(1).add(KernelTuple::of({j}), w * cmk * a);
        for (const auto& [j, b] : gmk)
            if (ck != Complex{0, 0}) out.kernel(1).add(KernelTuple::of({j}), w * ck * b);
    }
    return out;
}

namespace {

struct Slot {
    Wavenumber k;
    int factor;
};

double count_pairings(std::vector<Slot>& slots, std::vector<bool>& used, Complex weight,
                      Complex& total) {
    std::size_t first = slots.size();
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (!used[i]) {
            first = i;
            break;
        }
    if (first == slots.size()) {
        total += weight;
        return 0;
    }
    used[first] = true;
    for (std::size_t j = first + 1; j < slots.size(); ++j) {
        if (used[j] || slots[j].factor == slots[first].factor) continue;
        if (!(slots[j].k + slots[first].k).is_zero()) continue;
        used[j] = true;
        count_pairings(slots, used, weight, total);
        used[j] = false;
    }
    used[first] = false;
    return 0;
}

void wick_over_entries(const std::vector<const ChaosKernel*>& kernels, std::size_t idx,
                       std::vector<Slot>& slots, Complex weight, Complex& total) {
    if (idx == kernels.size()) {
        std::vector<bool> used(slots.size(), false);
        count_pairings(slots, used, weight, total);
        return;
    }
    kernels[idx]->for_each([&](const KernelTuple& t, Complex v) {
        std::size_t base = slots.size();
        for (int i = 0; i < t.degree; ++i) slots.push_back({t.k[std::size_t(i)], int(idx)});
        wick_over_entries(kernels, idx + 1, slots, weight * v * double(t.distinct_orderings()),
                          total);
        slots.resize(base);
    });
}

}  // namespace

double wick_expectation(const std::vector<const CylinderFunctional*>& fs) {
    int max_total = 0;
    for (const auto* f : fs) max_total += f->max_degree();
    if (max_total > 12) throw CapacityError("wick_expectation: total degree exceeds 12");

    // Multilinear expansion: each factor contributes its constant or one of
    // its homogeneous components; lone homogeneous components have mean zero.
    Complex total{0, 0};
    std::size_t r = fs.size();
    std::vector<int> choice(r, 0);  // 0 = constant, d = kernel of degree d
    while (true) {
        Complex weight{1, 0};
        std::vector<const ChaosKernel*> kernels;
        bool skip = false;
        for (std::size_t i = 0; i < r; ++i) {
            if (choice[i] == 0) {
                weight *= fs[i]->constant;
                if (weight == Complex{0, 0}) skip = true;
            } else {
                const auto& k = fs[i]->kernel(choice[i]);
                if (k.empty()) skip = true;
                kernels.push_back(&k);
            }
            if (skip) break;
        }
        if (!skip && !kernels.empty()) {
            int deg_sum = 0;
            for (const auto* k : kernels) deg_sum += k->degree();
            if (deg_sum % 2 == 0 && kernels.size() >= 2) {
                std::vector<Slot> slots;
                wick_over_entries(kernels, 0, slots, weight, total);
            }
        } else if (!skip && kernels.empty()) {
            total += weight;
        }
        // advance mixed-radix counter over {0..3}^r
        std::size_t pos = 0;
        while (pos < r) {
            if (++choice[pos] <= 3) break;
            choice[pos] = 0;
            ++pos;
        }
        if (pos == r) break;
    }
    return total.real();
}

Complex evaluate(const CylinderFunctional& f, const FourierField& field) {
    if (f.support_norm_inf() > field.cutoff())
        throw DomainError("evaluate: field cutoff does not cover the kernel support");
    Complex total = f.constant;

    f.kernel(1).for_each([&](const KernelTuple& t, Complex v) { total += v * field.coeff(t.k[0]); });

    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        double o = t.distinct_orderings();
        Complex prod = field.coeff(t.k[0]) * field.coeff(t.k[1]);
        if ((t.k[0] + t.k[1]).is_zero()) prod -= 1.0;  // Wick pairing
        total += v * o * prod;
    });

    f.kernel(3).for_each([&](const KernelTuple& t, Complex v) {
        for_each_distinct_ordering(t, [&](const std::array<Wavenumber, 3>& o) {
            Complex u1 = field.coeff(o[0]), u2 = field.coeff(o[1]), u3 = field.coeff(o[2]);
            Complex term = u1 * u2 * u3;
            if ((o[0] + o[1]).is_zero()) term -= u3;
            if ((o[0] + o[2]).is_zero()) term -= u2;
            if ((o[1] + o[2]).is_zero()) term -= u1;
            total += v * term;
        });
    });
    return total;
}

double evaluate_real(const CylinderFunctional& f, const FourierField& field) {
    return evaluate(f, field).real();
}

Complex malliavin_value(const CylinderFunctional& f, Wavenumber k, const FourierField& field) {
    return evaluate(malliavin_derivative(f, k), field);
}

std::string functional_to_json(const CylinderFunctional& f) {
    nlohmann::json j;
    j["constant"] = {f.constant.real(), f.constant.imag()};
    for (int d = 1; d <= 3; ++d) {
        if (f.kernel(d).empty()) continue;
        // sorted map keeps the file byte-stable across runs
        std::map<std::vector<int>, Complex> ordered;
        f.kernel(d).for_each([&](const KernelTuple& t, Complex v) {
            std::vector<int> key;
            for (int i = 0; i < t.degree; ++i) {
                key.push_back(t.k[std::size_t(i)].k1);
                key.push_back(t.k[std::size_t(i)].k2);
            }
            ordered[key] = v;
        });
        auto rows = nlohmann::json::array();
        for (const auto& [key, v] : ordered) {
            nlohmann::json row;
            row["tuple"] = key;
            row["value"] = {v.real(), v.imag()};
            rows.push_back(row);
        }
        j["degree" + std::to_string(d)] = rows;
    }
    return j.dump(2);
}

CylinderFunctional functional_from_json(const std::string& json) {
    auto j = nlohmann::json::parse(json);
    CylinderFunctional f;
    f.constant = Complex{j.at("constant").at(0).get<double>(), j.at("constant").at(1).get<double>()};
    for (int d = 1; d <= 3; ++d) {
        auto key = "degree" + std::to_string(d);
        if (!j.contains(key)) continue;
        for (const auto& row : j.at(key)) {
            const auto& tup = row.at("tuple");
            KernelTuple t;
            t.degree = d;
            for (int i = 0; i < d; ++i)
                t.k[std::size_t(i)] = {tup.at(2 * i).get<int>(), tup.at(2 * i + 1).get<int>()};
            t.normalize();
            f.kernel(d).set(t, Complex{row.at("value").at(0).get<double>(),
                                       row.at("value").at(1).get<double>()});
        }
    }
    return f;
}

EnergyEvaluator::EnergyEvaluator(const CylinderFunctional& f) {
    if (!f.kernel(3).empty())
        throw CapacityError("EnergyEvaluator: degree-3 functionals are not supported");
    std::unordered_map<Wavenumber, Row, WavenumberHash> rows;
    auto row = [&](Wavenumber k) -> Row& {
        auto [it, inserted] = rows.try_emplace(k);
        if (inserted) {
            it->second.k = k;
            it->second.weight = k.norm_sq();
            it->second.constant = {0, 0};
        }
        return it->second;
    };
    f.kernel(1).for_each([&](const KernelTuple& t, Complex v) { row(-t.k[0]).constant += v; });
    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        row(-t.k[0]).linear.emplace_back(t.k[1], 2.0 * v);
        if (t.k[0] != t.k[1]) row(-t.k[1]).linear.emplace_back(t.k[0], 2.0 * v);
    });
    rows_.reserve(rows.size());
    for (auto& [k, r] : rows)
        if (r.weight > 0.0) rows_.push_back(std::move(r));
}

double EnergyEvaluator::operator()(const FourierField& field) const {
    double total = 0;
    for (const auto& r : rows_) {
        Complex d = r.constant;
        for (const auto& [j, cj] : r.linear) d += cj * field.coeff(j);
        total += r.weight * std::norm(d);
    }
    return total;
}

NonlinearGeneratorEvaluator::NonlinearGeneratorEvaluator(const CylinderFunctional& f, int cutoff) {
    if (f.max_degree() > 2)
        throw CapacityError("NonlinearGeneratorEvaluator: degree must be <= 2");
    std::unordered_map<Wavenumber, Row, WavenumberHash> m;
    auto row = [&](Wavenumber k) -> Row& {
        auto [it, ins] = m.try_emplace(k);
        if (ins) it->second.k = k;
        return it->second;
    };
    // D_{-k}F = K1(k) + 2 sum_j K2(k, j) u_j; modes outside the cutoff never
    // meet a nonzero N_k.
    f.kernel(1).for_each([&](const KernelTuple& t, Complex v) {
        if (t.k[0].norm_inf() <= cutoff) row(t.k[0]).constant += v;
    });
    f.kernel(2).for_each([&](const KernelTuple& t, Complex v) {
        if (t.k[0].norm_inf() <= cutoff) row(t.k[0]).linear.emplace_back(t.k[1], 2.0 * v);
        if (t.k[0] != t.k[1] && t.k[1].norm_inf() <= cutoff)
            row(t.k[1]).linear.emplace_back(t.k[0], 2.0 * v);
    });
    rows_.reserve(m.size());
    for (auto& [k, r] : m) rows_.push_back(std::move(r));
}

double NonlinearGeneratorEvaluator::operator()(const FourierField& nl,
                                               const FourierField& u) const {
    Complex s{0, 0};
    for (const auto& r : rows_) {
        Complex d = r.constant;
        for (const auto& [j, c] : r.linear) d += c * u.coeff(j);
        s += nl.coeff(r.k) * d;
    }
    return s.real();
}

}  // namespace akpz
