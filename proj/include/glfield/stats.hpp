#ifndef GLFIELD_STATS_HPP
#define GLFIELD_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "glfield/errors.hpp"
#include "glfield/rng.hpp"

namespace glfield {

struct TVEstimate {
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0; // bootstrap 0.95 interval
    std::size_t n_bins = 0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double bin_lo = 0.0;
    double bin_hi = 0.0;
};

namespace detail {

inline double tv_from_histograms(const std::vector<double>& a,
                                 const std::vector<double>& b, double lo,
                                 double hi, std::size_t n_bins) {
    std::vector<double> pa(n_bins, 0.0), pb(n_bins, 0.0);
    double width = hi - lo;
    auto bin_of = [&](double v) {
        if (width <= 0.0)
            return std::size_t(0);
        double f = (v - lo) / width;
        auto i = std::size_t(std::min(std::max(f, 0.0), 1.0) * double(n_bins));
        return std::min(i, n_bins - 1);
    };
    for (double v : a)
        pa[bin_of(v)] += 1.0 / double(a.size());
    for (double v : b)
        pb[bin_of(v)] += 1.0 / double(b.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < n_bins; ++i)
        tv += std::abs(pa[i] - pb[i]);
    return 0.5 * tv;
}

} // namespace detail

// Histogram total-variation distance between two empirical samples over
// common equal-width bins spanning the pooled range, with a 200-resample
// bootstrap confidence interval.
inline TVEstimate estimate_tv(const std::vector<double>& a,
                              const std::vector<double>& b, std::size_t n_bins,
                              std::uint64_t seed = 0) {
    if (a.empty() || b.empty())
        throw DomainError("estimate_tv: empty sample set");
    if (n_bins < 2)
        throw DomainError("estimate_tv: n_bins must be >= 2");
    double lo = std::min(*std::min_element(a.begin(), a.end()),
                         *std::min_element(b.begin(), b.end()));
    double hi = std::max(*std::max_element(a.begin(), a.end()),
                         *std::max_element(b.begin(), b.end()));

    TVEstimate est;
    est.n_bins = n_bins;
    est.n_a = a.size();
    est.n_b = b.size();
    est.bin_lo = lo;
    est.bin_hi = hi;
    est.value = detail::tv_from_histograms(a, b, lo, hi, n_bins);

    const std::size_t n_boot = 200;
    std::vector<double> boots(n_boot);
    Rng rng(Rng::derive(seed, rng_tag::bootstrap));
    std::vector<double> ra(a.size()), rb(b.size());
    for (std::size_t r = 0; r < n_boot; ++r) {
        for (std::size_t i = 0; i < a.size(); ++i)
            ra[i] = a[rng.next_below(a.size())];
        for (std::size_t i = 0; i < b.size(); ++i)
            rb[i] = b[rng.next_below(b.size())];
        boots[r] = detail::tv_from_histograms(ra, rb, lo, hi, n_bins);
    }
    std::sort(boots.begin(), boots.end());
    est.ci_lo = std::min(boots[std::size_t(0.025 * n_boot)], est.value);
    est.ci_hi = std::max(boots[std::size_t(0.975 * n_boot) - 1], est.value);
    return est;
}

inline std::size_t default_tv_bins(std::size_t n_a, std::size_t n_b) {
    double n = double(std::min(n_a, n_b));
    return std::max<std::size_t>(2, std::size_t(std::ceil(std::cbrt(n))));
}

// Total variation between an empirical integer sample and the Poisson law
// with the given mean (exact on the integer support).
inline double tv_to_poisson(const std::vector<std::uint64_t>& samples,
                            double mean) {
    std::uint64_t maxv = 0;
    for (std::uint64_t v : samples)
        maxv = std::max(maxv, v);
    std::vector<double> emp(maxv + 1, 0.0);
    for (std::uint64_t v : samples)
        emp[v] += 1.0 / double(samples.size());
    double tv = 0.0, pmf = std::exp(-mean), tail = 1.0;
    for (std::uint64_t k = 0; k <= maxv; ++k) {
        tv += std::abs(emp[k] - pmf);
        tail -= pmf;
        pmf *= mean / double(k + 1);
    }
    return 0.5 * (tv + std::max(tail, 0.0));
}

// Monte Carlo estimate of E| (1/(M-1)) sum_n (X_n - E[X_n]) | from an
// M x trials matrix of counts, using per-row empirical means for E[X_n].
inline double tlln_metric(const std::vector<std::vector<double>>& counts) {
    std::size_t m = counts.size();
    if (m < 2)
        throw DomainError("tlln_metric: M must be >= 2");
    std::size_t trials = counts.front().size();
    std::vector<double> row_mean(m, 0.0);
    for (std::size_t n = 0; n < m; ++n) {
        for (double v : counts[n])
            row_mean[n] += v;
        row_mean[n] /= double(trials);
    }
    double acc = 0.0;
    for (std::size_t tr = 0; tr < trials; ++tr) {
        double s = 0.0;
        for (std::size_t n = 0; n < m; ++n)
            s += counts[n][tr] - row_mean[n];
        acc += std::abs(s / double(m - 1));
    }
    return acc / double(trials);
}

struct TailCheck {
    double level = 0.0; // L
    double bound = 0.0; // 1 / sqrt(1 + L^2)
    double empirical = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

// Quadratic-dynamics tail bound: P(lambda > L) <= 1/sqrt(1 + L^2), checked
// against empirical tail frequencies with a 3-sigma binomial allowance.
inline std::vector<TailCheck> check_tail_bound(const std::vector<double>& samples,
                                               const std::vector<double>& l_list) {
    if (samples.empty())
        throw DomainError("check_tail_bound: empty sample set");
    std::vector<TailCheck> out;
    for (double l : l_list) {
        TailCheck c;
        c.level = l;
        c.bound = 1.0 / std::sqrt(1.0 + l * l);
        std::size_t hits = 0;
        for (double v : samples)
            if (v > l)
                ++hits;
        double n = double(samples.size());
        c.empirical = double(hits) / n;
        c.std_error = std::sqrt(c.empirical * (1.0 - c.empirical) / n);
        c.pass = c.empirical <= c.bound + 3.0 * c.std_error;
        out.push_back(c);
    }
    return out;
}

struct ChenSteinTerms {
    double term1 = 0.0;
    double term2 = 0.0;
    double tv_to_poisson = 0.0;
    double mean_count = 0.0; // empirical E[N_{1,y}([0,t))]
};

// The two right-hand-side terms of the Chen-Stein Poisson approximation
// bound, from empirical spike counts (per replica, per trial, at the source
// site) and routed-arrival counts into one fixed (replica, site).
inline ChenSteinTerms
chen_stein_terms(const std::vector<std::vector<double>>& source_counts,
                 const std::vector<std::uint64_t>& arrival_counts) {
    std::size_t m = source_counts.size();
    if (m < 2)
        throw DomainError("chen_stein_terms: M must be >= 2");
    std::size_t trials = source_counts.front().size();

    ChenSteinTerms out;
    double grand = 0.0;
    for (const auto& row : source_counts)
        for (double v : row)
            grand += v;
    out.mean_count = grand / double(m * trials);

    // term1: (1 ^ 0.74/sqrt(E[N])) * (1/(M-1)) * E|sum_{n != m}(E[N] - N_n)|.
    // The excluded replica is row 0 by exchangeability.
    double acc = 0.0;
    for (std::size_t tr = 0; tr < trials; ++tr) {
        double s = 0.0;
        for (std::size_t n = 1; n < m; ++n)
            s += out.mean_count - source_counts[n][tr];
        acc += std::abs(s);
    }
    double centered = acc / double(trials);
    double damp = out.mean_count > 0.0
                      ? std::min(1.0, 0.74 / std::sqrt(out.mean_count))
                      : 1.0;
    out.term1 = damp * centered / double(m - 1);

    double damp2 = out.mean_count > 0.0
                       ? std::min(1.0, 1.0 / out.mean_count)
                       : 1.0;
    out.term2 = damp2 * out.mean_count / double(m - 1);

    if (out.mean_count == 0.0) {
        bool all_zero = true;
        for (std::uint64_t v : arrival_counts)
            all_zero = all_zero && v == 0;
        out.tv_to_poisson = all_zero ? 0.0 : 1.0;
        out.term1 = 0.0;
        out.term2 = 0.0;
        return out;
    }
    out.tv_to_poisson = glfield::tv_to_poisson(arrival_counts, out.mean_count);
    return out;
}

struct ScalingFit {
    std::vector<double> x;
    std::vector<double> y;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares fit of log(y) against log(x).
inline ScalingFit fit_loglog(const std::vector<double>& x,
                             const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw DomainError("fit_loglog: needs >= 3 matched points");
    ScalingFit fit;
    fit.x = x;
    fit.y = y;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw DomainError("fit_loglog: values must be positive");
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    double vxx = sxx - sx * sx / n;
    double vxy = sxy - sx * sy / n;
    double vyy = syy - sy * sy / n;
    fit.slope = vxy / vxx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r_squared = vyy > 0.0 ? vxy * vxy / (vxx * vyy) : 1.0;
    if (!std::isfinite(fit.slope))
        throw DomainError("fit_loglog: degenerate abscissae");
    return fit;
}

// Kolmogorov-Smirnov test of a sample against a CDF. Asymptotic p-value via
// the Kolmogorov series.
struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

template <typename Cdf>
KsResult ks_test(std::vector<double> samples, Cdf&& cdf) {
    if (samples.empty())
        throw DomainError("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    double n = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - double(i) / n));
        d = std::max(d, std::abs(double(i + 1) / n - f));
    }
    double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += 2.0 * sign * term;
        sign = -sign;
        if (term < 1e-12)
            break;
    }
    return {d, std::min(std::max(p, 0.0), 1.0)};
}

// Regularized upper incomplete gamma Q(a, x), series/continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0)
        throw DomainError("gamma_q: bad arguments");
    if (x == 0.0)
        return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // lower series
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-14)
                break;
        }
        double p = sum * std::exp(-x + a * std::log(x) - gln);
        return 1.0 - p;
    }
    // continued fraction
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300)
            d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300)
            c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-14)
            break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// P(Chi2_df >= stat)
inline double chi_square_p_value(double stat, double df) {
    return gamma_q(0.5 * df, 0.5 * stat);
}

} // namespace glfield

#endif
