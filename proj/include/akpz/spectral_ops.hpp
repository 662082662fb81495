#pragma once

#include "akpz/fourier_field.hpp"
#include "akpz/rng.hpp"

namespace akpz {

// Spatial white noise in Fourier variables: independent standard complex
// Gaussians on the half-lattice (Re and Im each of variance 1/2), so that
// E[eta_k eta_j] = 1_{k+j=0}. Zero mode is 0.
FourierField sample_white_noise(int cutoff, Rng& rng);

// Gaussian free field: white noise with coeff(k) divided by |k|.
FourierField sample_gff(int cutoff, Rng& rng);

// Galerkin projection Pi_N: zeroes every coefficient with |k|_inf > n.
FourierField project(const FourierField& f, int n);

// (-Delta)^theta: multiplies coeff(k) by |k|^{2 theta}. The zero mode is
// annihilated for theta > 0 and must vanish for theta < 0.
FourierField frac_laplacian(const FourierField& f, double theta);

// Sobolev norms. The homogeneous variant sum_k |k|^{2 alpha} |u_k|^2 (zero
// mode excluded) is the one every experiment uses as ||.||_{1,2} at alpha=1;
// the inhomogeneous variant weights with (1+|k|^2)^alpha and includes the
// zero mode.
double sobolev_norm_sq(const FourierField& f, double alpha, bool homogeneous = true);
double sobolev_norm(const FourierField& f, double alpha, bool homogeneous = true);

struct BesovOptions {
    int oversample = 4;  // physical grid per linear mode count
};

// Besov B^alpha_{inf,inf} norm with sharp Fourier annuli as blocks:
// block j >= 0 collects 2^j <= |k| < 2^{j+1} (Euclidean), block -1 the zero
// mode. Sharp indicators give an equivalent norm to the smooth dyadic one;
// block sup norms are evaluated on an oversampled physical grid by FFT.
double besov_norm(const FourierField& f, double alpha, const BesovOptions& opts = {});

// L^inf norms of the individual blocks, index 0 holding block j = -1.
std::vector<double> besov_block_sups(const FourierField& f, const BesovOptions& opts = {});

}  // namespace akpz
