#pragma once

#include "rwde/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rwde {

/// Dirichlet concentrations alpha_i for jumps i in [-L, R]. Only obtainable through
/// validate_params, so every instance satisfies the model assumptions.
class DirichletParams {
public:
    int L() const noexcept { return L_; }
    int R() const noexcept { return R_; }

    double alpha(int offset) const noexcept {
        if (offset < -L_ || offset > R_) return 0.0;
        return weights_[static_cast<std::size_t>(offset + L_)];
    }

    /// Offsets with positive weight, ascending (may include 0).
    std::vector<int> support() const {
        std::vector<int> out;
        for (int i = -L_; i <= R_; ++i)
            if (alpha(i) > 0.0) out.push_back(i);
        return out;
    }

    /// Same as support() without the self-loop offset 0.
    std::vector<int> jump_support() const {
        std::vector<int> out;
        for (int i : support())
            if (i != 0) out.push_back(i);
        return out;
    }

    std::map<int, double> as_map() const {
        std::map<int, double> out;
        for (int i = -L_; i <= R_; ++i)
            if (alpha(i) > 0.0) out[i] = alpha(i);
        return out;
    }

    double total_weight() const {
        double sum = 0.0;
        for (double w : weights_) sum += w;
        return sum;
    }

    bool operator==(const DirichletParams& other) const = default;

private:
    friend DirichletParams validate_params(int, int, const std::map<int, double>&);
    DirichletParams(int L, int R, std::vector<double> weights)
        : L_(L), R_(R), weights_(std::move(weights)) {}

    int L_ = 1;
    int R_ = 1;
    std::vector<double> weights_;
};

struct DerivedParams {
    double d_plus = 0.0;
    double d_minus = 0.0;
    double c_plus = 0.0;
    double c_minus = 0.0;
    double kappa1 = 0.0;
    int m0 = 1;
};

namespace detail {

/// Kahan-compensated accumulator.
class KahanSum {
public:
    void add(double x) noexcept {
        double y = x - c_;
        double t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

} // namespace detail

inline DirichletParams validate_params(int L, int R, const std::map<int, double>& alphas) {
    if (L < 1 || R < 1)
        throw Error(ErrorCode::EmptySide, "L and R must both be at least 1 (got L=" + std::to_string(L) +
                                              ", R=" + std::to_string(R) + ")");
    std::vector<double> weights(static_cast<std::size_t>(L + R + 1), 0.0);
    for (const auto& [offset, w] : alphas) {
        if (offset < -L || offset > R)
            throw Error(ErrorCode::OffsetOutOfRange, "offset " + std::to_string(offset) + " outside [-L, R]");
        if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteWeight, "weight at offset " + std::to_string(offset));
        if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "weight at offset " + std::to_string(offset));
        weights[static_cast<std::size_t>(offset + L)] = w;
    }
    if (weights.front() <= 0.0 || weights.back() <= 0.0)
        throw Error(ErrorCode::EndpointZero, "alpha_{-L} and alpha_R must be positive");
    int g = 0;
    for (int i = -L; i <= R; ++i)
        if (i != 0 && weights[static_cast<std::size_t>(i + L)] > 0.0) g = std::gcd(g, std::abs(i));
    if (g != 1) throw Error(ErrorCode::GcdViolation, "gcd of the jump support is " + std::to_string(g));
    return DirichletParams(L, R, std::move(weights));
}

/// Parses the CLI weight syntax `offset:weight,offset:weight,...`. L and R are taken from the
/// extreme offsets mentioned, so a zero weight at an extreme offset fails validation.
inline DirichletParams parse_alphas(std::string_view text) {
    std::map<int, double> alphas;
    int lo = 0;
    int hi = 0;
    std::string item;
    std::stringstream ss{std::string(text)};
    bool any = false;
    while (std::getline(ss, item, ',')) {
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        item = trim(item);
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "expected offset:weight, got '" + item + "'");
        std::string key = trim(item.substr(0, colon));
        std::string val = trim(item.substr(colon + 1));
        int offset = 0;
        auto [kp, kec] = std::from_chars(key.data(), key.data() + key.size(), offset);
        if (kec != std::errc() || kp != key.data() + key.size())
            throw Error(ErrorCode::ParseError, "bad offset '" + key + "'");
        char* end = nullptr;
        double w = std::strtod(val.c_str(), &end);
        if (val.empty() || end != val.c_str() + val.size())
            throw Error(ErrorCode::ParseError, "bad weight '" + val + "'");
        if (alphas.count(offset)) throw Error(ErrorCode::ParseError, "duplicate offset " + key);
        alphas[offset] = w;
        lo = std::min(lo, offset);
        hi = std::max(hi, offset);
        any = true;
    }
    if (!any) throw Error(ErrorCode::ParseError, "empty weight map");
    return validate_params(-lo, hi, alphas);
}

inline std::string format_alphas(const DirichletParams& p) {
    std::string out;
    for (const auto& [i, w] : p.as_map()) {
        char buf[32];
        const auto end = std::to_chars(buf, buf + sizeof buf, w).ptr;
        if (!out.empty()) out += ',';
        out += std::to_string(i) + ':' + std::string(buf, end);
    }
    return out;
}

namespace detail {

/// Distinct-pair strong connectivity of the model graph restricted to [0, m-1].
inline bool interval_connected(const DirichletParams& p, int m) {
    if (m <= 1) return true;
    const auto jumps = p.jump_support();
    auto reach = [&](int sign) {
        std::vector<char> seen(static_cast<std::size_t>(m), 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        int count = 1;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (int i : jumps) {
                int y = x + sign * i;
                if (y < 0 || y >= m || seen[static_cast<std::size_t>(y)]) continue;
                seen[static_cast<std::size_t>(y)] = 1;
                ++count;
                queue.push_back(y);
            }
        }
        return count == m;
    };
    return reach(+1) && reach(-1);
}

} // namespace detail

inline int compute_m0(const DirichletParams& p) {
    const int start = std::max(p.L(), p.R());
    const int cap = 4 * (p.L() + p.R()) * (p.L() + p.R());
    for (int m = start; m <= cap; ++m)
        if (detail::interval_connected(p, m)) return m;
    throw Error(ErrorCode::CapExceeded, "no strongly connected interval up to length " + std::to_string(cap));
}

inline DerivedParams derive_params(const DirichletParams& p) {
    detail::KahanSum dp, dm, cp, cm;
    for (int i = -p.L(); i <= p.R(); ++i) {
        const double a = p.alpha(i);
        if (i < 0) {
            dm.add(-i * a);
            cm.add(a);
        } else if (i > 0) {
            dp.add(i * a);
            cp.add(a);
        }
    }
    DerivedParams d;
    d.d_plus = dp.value();
    d.d_minus = dm.value();
    d.c_plus = cp.value();
    d.c_minus = cm.value();
    d.kappa1 = d.d_plus - d.d_minus;
    d.m0 = compute_m0(p);
    return d;
}

/// Recurrence boundary test: |kappa1| <= 1e-12 (d+ + d-).
inline bool kappa1_is_zero(const DerivedParams& d) {
    return std::abs(d.kappa1) <= 1e-12 * (d.d_plus + d.d_minus);
}

inline DirichletParams reflect(const DirichletParams& p) {
    std::map<int, double> mirrored;
    for (const auto& [i, w] : p.as_map()) mirrored[-i] = w;
    return validate_params(p.R(), p.L(), mirrored);
}

} // namespace rwde
