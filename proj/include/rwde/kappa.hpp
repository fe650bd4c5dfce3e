#pragma once

#include "rwde/error.hpp"
#include "rwde/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace rwde {

/// Candidate trap: a finite vertex set translated so that its minimum is 0, with its exit profile.
struct TrapSet {
    std::vector<int> offsets;         ///< sorted, min 0
    std::map<int, long> exit_counts;  ///< x_i = #{z in S : z + i not in S}, per nonzero support offset
    double beta = 0.0;                ///< sum_i x_i alpha_i
};

struct Kappa0Result {
    double value = 0.0;
    TrapSet witness;
    bool certified = false;
    int diameter_searched = 0;
    int certified_bound = 0;
    std::uint64_t nodes_explored = 0;
    bool timed_out = false;
};

enum class SearchStrategy { Exhaustive, BranchAndBound };

enum class RegimeTag { Recurrent, TransientRight, TransientLeft };

constexpr std::string_view to_string(RegimeTag tag) {
    switch (tag) {
    case RegimeTag::Recurrent: return "Recurrent";
    case RegimeTag::TransientRight: return "TransientRight";
    case RegimeTag::TransientLeft: return "TransientLeft";
    }
    return "?";
}

struct Regime {
    RegimeTag tag = RegimeTag::Recurrent;
    bool ballistic = false;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    std::vector<std::string> warnings;
};

struct SearchOptions {
    SearchStrategy strategy = SearchStrategy::BranchAndBound;
    /// Node budget standing in for a wall-clock limit; exceeding it yields an uncertified partial result.
    std::uint64_t node_budget = 4'000'000'000ULL;
};

namespace detail {

using Mask = unsigned __int128;

inline constexpr int kMaxMaskDiameter = 127;
inline constexpr int kMaxExhaustiveDiameter = 30;

inline Mask bit(int z) { return Mask{1} << z; }

inline int popcount(Mask m) {
    return std::popcount(static_cast<std::uint64_t>(m)) + std::popcount(static_cast<std::uint64_t>(m >> 64));
}

/// Bit z of the result is set iff z + i is in S.
inline Mask shifted_by(Mask s, int i) {
    if (i >= 128 || i <= -128) return 0;
    return i >= 0 ? (s >> i) : (s << (-i));
}

inline std::vector<int> mask_to_offsets(Mask s) {
    std::vector<int> out;
    for (int z = 0; z < 128; ++z)
        if ((s >> z) & 1) out.push_back(z);
    return out;
}

/// Precomputed per-parameter data shared by both search strategies.
struct TrapContext {
    std::vector<int> jumps;      ///< nonzero support offsets, ascending
    std::vector<double> alphas;  ///< alpha per entry of `jumps`
    bool self_loop = false;
    int L = 1;
    int R = 1;

    explicit TrapContext(const DirichletParams& p) : self_loop(p.alpha(0) > 0.0), L(p.L()), R(p.R()) {
        jumps = p.jump_support();
        for (int i : jumps) alphas.push_back(p.alpha(i));
    }

    /// Canonical beta from exit counts.
    double beta_from_counts(const std::vector<long>& counts) const {
        double b = 0.0;
        for (std::size_t k = 0; k < jumps.size(); ++k) b += static_cast<double>(counts[k]) * alphas[k];
        return b;
    }

    std::vector<long> exit_counts(Mask s) const {
        std::vector<long> counts(jumps.size());
        for (std::size_t k = 0; k < jumps.size(); ++k) counts[k] = popcount(s & ~shifted_by(s, jumps[k]));
        return counts;
    }

    bool strongly_connected(Mask s) const {
        if (s == 0) return false;
        if (popcount(s) == 1) return self_loop;
        auto closure = [&](int sign) {
            Mask lowest = s & (~s + 1);
            Mask reach = lowest;
            while (true) {
                Mask next = reach;
                for (int i : jumps) next |= shifted_by(reach, -sign * i) & s;
                if (next == reach) return reach;
                reach = next;
            }
        };
        return closure(+1) == s && closure(-1) == s;
    }
};

/// Strict preference between candidate minimizers: beta (with a relative tie tolerance), then
/// cardinality, then lexicographic offset order.
inline bool better_candidate(double a_val, Mask a, double b_val, Mask b, double tol) {
    if (std::abs(a_val - b_val) > tol) return a_val < b_val;
    int ca = popcount(a), cb = popcount(b);
    if (ca != cb) return ca < cb;
    for (int z = 0; z < 128; ++z) {
        bool ia = (a >> z) & 1, ib = (b >> z) & 1;
        if (ia != ib) return ia;  // the set holding the smaller differing element sorts first
    }
    return false;
}

} // namespace detail

inline TrapSet beta(const DirichletParams& p, std::vector<int> S) {
    if (S.empty()) throw Error(ErrorCode::EmptySet, "beta of an empty set");
    std::sort(S.begin(), S.end());
    S.erase(std::unique(S.begin(), S.end()), S.end());
    const int shift = S.front();
    for (int& z : S) z -= shift;
    TrapSet t;
    t.offsets = S;
    const detail::TrapContext ctx(p);
    std::vector<long> counts(ctx.jumps.size(), 0);
    for (std::size_t k = 0; k < ctx.jumps.size(); ++k) {
        const int i = ctx.jumps[k];
        for (int z : S)
            if (!std::binary_search(S.begin(), S.end(), z + i)) ++counts[k];
        t.exit_counts[i] = counts[k];
    }
    t.beta = ctx.beta_from_counts(counts);
    return t;
}

/// Diameter beyond which no set can improve on the interval bound: (N - 1) m0 with N eps >= d+ + d-.
inline int diameter_bound(const DirichletParams& p) {
    const DerivedParams d = derive_params(p);
    double eps = std::numeric_limits<double>::infinity();
    for (int i : p.support()) eps = std::min(eps, p.alpha(i));
    const double total = d.d_plus + d.d_minus;
    const double slack = 1e-12 * total;
    long n = std::max(1L, static_cast<long>(std::ceil(total / eps)));
    while (n > 1 && static_cast<double>(n - 1) * eps >= total - slack) --n;
    while (static_cast<double>(n) * eps < total - slack) ++n;
    return static_cast<int>((n - 1) * d.m0);
}

namespace detail {

class BranchAndBound {
public:
    BranchAndBound(const TrapContext& ctx, int D, double tol, std::uint64_t budget)
        : ctx_(ctx), D_(D), tol_(tol), budget_(budget) {}

    void seed(Mask s, double value) {
        best_ = s;
        best_value_ = value;
    }

    void run() {
        std::vector<long> counts = ctx_.exit_counts(bit(0));
        visit(bit(0), 0, counts);
    }

    Mask best() const { return best_; }
    double best_value() const { return best_value_; }
    std::uint64_t nodes() const { return nodes_; }
    bool timed_out() const { return timed_out_; }

private:
    // S has maximum element `top`; positions above `top` are undecided and provisionally outside.
    void visit(Mask s, int top, std::vector<long>& counts) {
        if (timed_out_) return;
        if (++nodes_ > budget_) {
            timed_out_ = true;
            return;
        }
        const double lb = ctx_.beta_from_counts(counts);
        if (lb <= best_value_ + tol_ && ctx_.strongly_connected(s) &&
            better_candidate(lb, s, best_value_, best_, tol_)) {
            best_ = s;
            best_value_ = lb;
        }
        const std::size_t nj = ctx_.jumps.size();
        // consecutive members further apart than min(L, R) cannot communicate
        const int max_gap = std::min(ctx_.L, ctx_.R);
        for (int z = top + 1; z <= std::min(D_, top + max_gap); ++z) {
            const Mask child = s | bit(z);
            std::vector<long> next = counts;
            for (std::size_t k = 0; k < nj; ++k) {
                const int i = ctx_.jumps[k];
                if (i < 0) {
                    if (z + i < 0 || !((s >> (z + i)) & 1)) ++next[k];
                } else {
                    ++next[k];
                    if (z - i >= 0 && ((s >> (z - i)) & 1)) --next[k];
                }
            }
            if (ctx_.beta_from_counts(next) > best_value_ + 4.0 * tol_) continue;
            if (!neighbours_alive(child, top, z)) continue;
            visit(child, z, next);
            if (timed_out_) return;
        }
    }

    // Members whose out- or in-neighbourhood became fully decided when z was added must keep a
    // neighbour inside the set.
    bool neighbours_alive(Mask s, int prev_top, int z) const {
        for (int y = std::max(0, prev_top - ctx_.R + 1); y <= z - ctx_.R; ++y) {
            if (!((s >> y) & 1)) continue;
            bool ok = false;
            for (int i : ctx_.jumps)
                if (y + i >= 0 && ((s >> (y + i)) & 1)) ok = true;
            if (!ok) return false;
        }
        for (int y = std::max(0, prev_top - ctx_.L + 1); y <= z - ctx_.L; ++y) {
            if (!((s >> y) & 1)) continue;
            bool ok = false;
            for (int i : ctx_.jumps)
                if (y - i >= 0 && ((s >> (y - i)) & 1)) ok = true;
            if (!ok) return false;
        }
        return true;
    }

    const TrapContext& ctx_;
    int D_;
    double tol_;
    std::uint64_t budget_;
    Mask best_ = 0;
    double best_value_ = std::numeric_limits<double>::infinity();
    std::uint64_t nodes_ = 0;
    bool timed_out_ = false;
};

} // namespace detail

/// Minimum exit weight over strongly connected S subset of [0, max_diameter] with min S = 0.
inline Kappa0Result kappa0_search(const DirichletParams& p, int max_diameter, const SearchOptions& opts = {}) {
    const DerivedParams d = derive_params(p);
    if (max_diameter < d.m0)
        throw Error(ErrorCode::DiameterTooSmall,
                    "max_diameter " + std::to_string(max_diameter) + " below m0 = " + std::to_string(d.m0));
    if (max_diameter > detail::kMaxMaskDiameter)
        throw Error(ErrorCode::DiameterTooLarge, "max_diameter above " + std::to_string(detail::kMaxMaskDiameter));
    const detail::TrapContext ctx(p);
    const double tol = 1e-12 * (d.d_plus + d.d_minus);

    Kappa0Result result;
    result.diameter_searched = max_diameter;
    result.certified_bound = diameter_bound(p);

    detail::Mask best = 0;
    double best_value = std::numeric_limits<double>::infinity();

    if (opts.strategy == SearchStrategy::Exhaustive) {
        if (max_diameter > detail::kMaxExhaustiveDiameter)
            throw Error(ErrorCode::DiameterTooLarge, "exhaustive search limited to diameter " +
                                                         std::to_string(detail::kMaxExhaustiveDiameter));
        const std::uint64_t n = std::uint64_t{1} << max_diameter;
        for (std::uint64_t m = 0; m < n; ++m) {
            const detail::Mask s = (detail::Mask{m} << 1) | 1;
            ++result.nodes_explored;
            if (!ctx.strongly_connected(s)) continue;
            const double b = ctx.beta_from_counts(ctx.exit_counts(s));
            if (detail::better_candidate(b, s, best_value, best, tol)) {
                best = s;
                best_value = b;
            }
        }
    } else {
        // Seed with the interval [0, max(m0, 2) - 1], whose exit weight is d+ + d-.
        const int len = std::max(d.m0, 2);
        detail::Mask interval = 0;
        for (int z = 0; z < len; ++z) interval |= detail::bit(z);
        detail::BranchAndBound bnb(ctx, max_diameter, tol, opts.node_budget);
        if (len - 1 <= max_diameter && ctx.strongly_connected(interval))
            bnb.seed(interval, ctx.beta_from_counts(ctx.exit_counts(interval)));
        bnb.run();
        best = bnb.best();
        best_value = bnb.best_value();
        result.nodes_explored = bnb.nodes();
        result.timed_out = bnb.timed_out();
    }

    result.value = best_value;
    result.witness = beta(p, detail::mask_to_offsets(best));
    result.certified = !result.timed_out && max_diameter >= result.certified_bound;
    return result;
}

inline Regime classify_regime(const DirichletParams& p, const Kappa0Result& k0) {
    const DerivedParams d = derive_params(p);
    Regime r;
    r.kappa0 = k0.value;
    r.kappa1 = d.kappa1;
    if (kappa1_is_zero(d)) {
        r.tag = RegimeTag::Recurrent;
        r.ballistic = false;
    } else {
        r.tag = d.kappa1 > 0.0 ? RegimeTag::TransientRight : RegimeTag::TransientLeft;
        const double scale = d.d_plus + d.d_minus;
        r.ballistic = std::min(k0.value, std::abs(d.kappa1)) > 1.0 + 1e-12 * std::max(1.0, scale);
    }
    if (!k0.certified)
        r.warnings.push_back("UncertifiedKappa0: searched diameter " + std::to_string(k0.diameter_searched) +
                             " < certified bound " + std::to_string(k0.certified_bound) +
                             (k0.timed_out ? " (node budget exhausted)" : ""));
    return r;
}

} // namespace rwde
