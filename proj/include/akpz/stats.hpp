#pragma once

#include <cstddef>
#include <vector>

namespace akpz {

struct MeanStderr {
    double mean = 0;
    double stderr_ = 0;
    std::size_t n = 0;
};

// Plain iid mean and standard error.
MeanStderr mean_stderr(const std::vector<double>& xs);

// Batch-means error bars: values are grouped into n_batches contiguous
// batches (>= 20 by default) and the spread of batch means is what enters
// the standard error. The right tool for autocorrelated per-trajectory or
// time-series observables.
MeanStderr batch_means(const std::vector<double>& xs, std::size_t n_batches = 20);

double normal_cdf(double z);

// Two-sample Kolmogorov-Smirnov; returns the asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

// Jarque-Bera normality test p-value (chi^2 with 2 dof).
double jarque_bera_pvalue(const std::vector<double>& xs);

// Pearson correlation with a crude stderr ~ 1/sqrt(n).
struct Correlation {
    double r = 0;
    double stderr_ = 0;
};
Correlation correlation(const std::vector<double>& xs, const std::vector<double>& ys);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace akpz
