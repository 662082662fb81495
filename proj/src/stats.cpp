#include "akpz/stats.hpp"

#include <algorithm>
#include <cmath>

#include "akpz/errors.hpp"

namespace akpz {

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double s = 0;
    for (double x : xs) s += x;
    out.mean = s / double(xs.size());
    if (xs.size() < 2) return out;
    double v = 0;
    for (double x : xs) v += (x - out.mean) * (x - out.mean);
    v /= double(xs.size() - 1);
    out.stderr_ = std::sqrt(v / double(xs.size()));
    return out;
}

MeanStderr batch_means(const std::vector<double>& xs, std::size_t n_batches) {
    if (n_batches < 2) throw DomainError("batch_means: need at least 2 batches");
    if (xs.size() < n_batches) return mean_stderr(xs);
    std::vector<double> batches(n_batches, 0.0);
    std::vector<std::size_t> counts(n_batches, 0);
    std::size_t per = xs.size() / n_batches;
    for (std::size_t i = 0; i < per * n_batches; ++i) {
        batches[i / per] += xs[i];
        ++counts[i / per];
    }
    for (std::size_t b = 0; b < n_batches; ++b) batches[b] /= double(counts[b]);
    MeanStderr out = mean_stderr(batches);
    out.n = xs.size();
    return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {
double kolmogorov_sf(double x) {
    // P(K > x), alternating series; fine for p-values down to ~1e-10.
    if (x < 0.05) return 1.0;
    double s = 0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * x * x);
        s += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}
}  // namespace

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks test: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = double(i) / double(a.size());
        double fb = double(j) / double(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
    return kolmogorov_sf((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d);
}

double jarque_bera_pvalue(const std::vector<double>& xs) {
    std::size_t n = xs.size();
    if (n < 8) throw DomainError("jarque-bera: sample too small");
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= double(n);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= double(n);
    m3 /= double(n);
    m4 /= double(n);
    double skew = m3 / std::pow(m2, 1.5);
    double kurt = m4 / (m2 * m2);
    double jb = double(n) / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    return std::exp(-0.5 * jb);  // chi^2_2 survival function
}

Correlation correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3) throw DomainError("correlation: bad samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(xs.size());
    my /= double(xs.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    Correlation c;
    c.r = sxy / std::sqrt(sxx * syy);
    c.stderr_ = 1.0 / std::sqrt(double(xs.size()));
    return c;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("linear_fit: bad samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace akpz
