#pragma once

#include <vector>

#include "akpz/chaos.hpp"
#include "akpz/kernel_params.hpp"
#include "akpz/kernels.hpp"

namespace akpz {

// Generator pieces in Fock-space representation, acting on cylinder
// functionals of degree <= 3.
//
// Conventions, fixed once and verified by the exact suites:
//  * eta_k pairs as D_k eta_m = 1_{m+k=0}; D_k I_n(K) = n I_{n-1}(K(-k, .)).
//  * L0 multiplies a degree-n entry at (k_1..k_n) by -(nu/2) sum_i |k_i|^2.
//  * A+ raises, A- lowers the degree by one; outputs are re-symmetrized.
//    With these conventions -A+ is the exact adjoint of A- at every cutoff
//    (the orbit cancellation of kernel_K is what makes it exact).

CylinderFunctional apply_L0(const CylinderFunctional& f, const KernelParams& params);
CylinderFunctional apply_Aplus(const CylinderFunctional& f, const KernelParams& params);
CylinderFunctional apply_Aminus(const CylinderFunctional& f, const KernelParams& params);

// <F, G>_{L^2(eta)} = E[F conj(G)] = const_F conj(const_G) + sum_n n! <K_n, K'_n>.
Complex chaos_inner(const CylinderFunctional& f, const CylinderFunctional& g);

// <A+ F, G> + <F, A- G>; vanishes identically under the conventions above.
double adjointness_check(const CylinderFunctional& f, const CylinderFunctional& g,
                         const KernelParams& params);

// Degree-2 kernel of the tested nonlinearity N^N(phi):
// K(l,m) = K^N_{l,m} phi_{-l-m}.
ChaosKernel nonlinearity_kernel(const TestFunction& phi, const KernelParams& params);

// Kernel of the zero Fourier mode of the KPZ-form nonlinearity, expressed in
// the invariant (white noise) variables: entries c(l,-l)/|l|^2 on pairs (l,-l).
ChaosKernel zero_mode_nonlinearity_kernel(const KernelParams& params);

// Solution H(phi) of L0 H = lambda N^N(phi): degree-2 kernel
//   -2 lambda nu^{-1} K^N_{l,m} phi_{-l-m} / (|l|^2+|m|^2).
// The leading sign makes the residual vanish identically with our L0
// convention (the commonly printed formula carries the opposite sign).
CylinderFunctional poisson_solve_nonlinearity(const TestFunction& phi, const KernelParams& params);

// Poisson solution for the zero mode: diagonal degree-2 kernel
//   -lambda nu^{-1} (l_1^2-l_2^2)/|l|^4 on pairs (l,-l), |l|_inf <= N.
// Annihilated by A-.
CylinderFunctional poisson_solve_zero_mode(const KernelParams& params);

// D_k F. Lowers each degree by one; the constant picks up K_1(-k).
CylinderFunctional malliavin_derivative(const CylinderFunctional& f, Wavenumber k);

// E^N(F) = sum_k |k|^2 D_k F D_{-k} F expanded into chaos components.
// Requires degree(F) <= 2 so the output stays within degree 2.
CylinderFunctional energy_functional(const CylinderFunctional& f);

// Exact E[prod_i F_i(eta)] by complete-pairing enumeration; total degree
// across the list is capped at 12.
double wick_expectation(const std::vector<const CylinderFunctional*>& fs);

// Wick-ordered evaluation of F at a sample field (pairings subtracted for
// degrees 2 and 3). The field cutoff must cover the kernel support.
Complex evaluate(const CylinderFunctional& f, const FourierField& field);
double evaluate_real(const CylinderFunctional& f, const FourierField& field);

// Value of D_k F at a field.
Complex malliavin_value(const CylinderFunctional& f, Wavenumber k, const FourierField& field);

// JSON form of a functional, tuples mapped to [re, im] entries; stable
// ordering, so serialized kernels work as golden regression files.
std::string functional_to_json(const CylinderFunctional& f);
CylinderFunctional functional_from_json(const std::string& json);

// Cached evaluator for the pathwise energy E^N(F)(u) = sum |k|^2 |D_k F(u)|^2,
// for real F of degree <= 2; used in the quadratic-variation accumulators.
class EnergyEvaluator {
  public:
    explicit EnergyEvaluator(const CylinderFunctional& f);
    double operator()(const FourierField& field) const;

  private:
    struct Row {
        Wavenumber k;
        double weight;  // |k|^2
        Complex constant;
        std::vector<std::pair<Wavenumber, Complex>> linear;  // D_k F = const + sum c_j u_j
    };
    std::vector<Row> rows_;
};

// Pathwise value of the antisymmetric generator part without the coupling:
// (A F)(u) / lambda = sum_k N_k[u] D_{-k}F(u). Takes the precomputed
// nonlinearity of the same state. Degree(F) <= 2.
class NonlinearGeneratorEvaluator {
  public:
    NonlinearGeneratorEvaluator() = default;
    NonlinearGeneratorEvaluator(const CylinderFunctional& f, int cutoff);
    double operator()(const FourierField& nl, const FourierField& u) const;

  private:
    struct Row {
        Wavenumber k;
        Complex constant{0, 0};
        std::vector<std::pair<Wavenumber, Complex>> linear;
    };
    std::vector<Row> rows_;
};

}  // namespace akpz
