#pragma once

#include "rwde/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace rwde {

namespace detail {

/// Continued fraction for the incomplete beta function, modified Lentz evaluation.
inline double ibeta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

/// I_x(a, b), evaluated on whichever side of the symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
/// makes the continued fraction converge quickly.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0) || !(x <= 1.0) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorCode::DomainError, "incomplete beta needs a, b > 0 and x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::clamp(front * detail::ibeta_cf(a, b, x) / a, 0.0, 1.0);
    return std::clamp(1.0 - front * detail::ibeta_cf(b, a, 1.0 - x) / b, 0.0, 1.0);
}

struct KsReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Asymptotic Kolmogorov survival function P(K > lambda).
inline double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    constexpr double pi = 3.14159265358979323846;
    if (lambda < 1.18) {
        // P(K <= lambda) = sqrt(2 pi) / lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        double s = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi * pi / (8.0 * lambda * lambda));
            s += term;
            if (k >= 20 && term < 1e-12) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (k >= 20 && term < 1e-12) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test with the asymptotic p-value (small-n corrected argument).
inline KsReport ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw Error(ErrorCode::EmptySample, "KS test of an empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    KsReport r;
    r.statistic = std::clamp(d, 0.0, 1.0);
    r.n = xs.size();
    const double sq = std::sqrt(n);
    r.p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * r.statistic);
    return r;
}

inline std::size_t default_hill_k(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.6) - 1e-9));
}

/// Tail index: reciprocal mean log-spacing of the top k order statistics over the (k+1)-th.
inline double hill_estimator(std::span<const double> sample, std::size_t k) {
    if (sample.empty()) throw Error(ErrorCode::EmptySample, "Hill estimator of an empty sample");
    if (k < 1 || k >= sample.size()) throw Error(ErrorCode::BadK, "need 1 <= k < n");
    std::vector<double> xs(sample.begin(), sample.end());
    for (double x : xs)
        if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::DomainError, "Hill estimator needs positive values");
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end(), std::greater<>());
    const double threshold = std::log(xs[k]);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(xs[i]) - threshold;
    return static_cast<double>(k) / s;
}

struct MeanSe {
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
    MeanSe r;
    r.n = xs.size();
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= static_cast<double>(r.n);
    if (r.n > 1) {
        for (double x : xs) r.variance += (x - r.mean) * (x - r.mean);
        r.variance /= static_cast<double>(r.n - 1);
        r.std_error = std::sqrt(r.variance / static_cast<double>(r.n));
    }
    return r;
}

} // namespace rwde
