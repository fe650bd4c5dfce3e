#pragma once

#include "rwde/environment.hpp"
#include "rwde/error.hpp"
#include "rwde/graph.hpp"
#include "rwde/model.hpp"
#include "rwde/parallel.hpp"
#include "rwde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

namespace rwde {

enum class StopReason { Horizon, HitTarget, LeftWindow };

constexpr std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::Horizon: return "horizon";
    case StopReason::HitTarget: return "hit_target";
    case StopReason::LeftWindow: return "left_window";
    }
    return "?";
}

struct Trajectory {
    int start = 0;
    std::vector<int> positions;
    StopReason stop_reason = StopReason::Horizon;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::size_t steps() const { return positions.empty() ? 0 : positions.size() - 1; }
};

/// Trajectory CSV with header `n,x`.
inline void write_csv(std::ostream& os, const Trajectory& t) {
    os << "n,x\n";
    for (std::size_t n = 0; n < t.positions.size(); ++n) os << n << ',' << t.positions[n] << '\n';
}

struct QuenchedOptions {
    /// When set to (L, R), positions within L of the left edge or R of the right edge stop the walk.
    std::optional<std::pair<int, int>> band;
    std::vector<int> targets;
};

namespace detail {

/// Per-vertex cumulative rows for fast step sampling.
class RowSampler {
public:
    explicit RowSampler(const Environment& env) : g_(env.graph()) {
        cumulative_.resize(g_.edge_count());
        heads_.resize(g_.edge_count());
        const auto probs = env.probabilities();
        for (std::size_t vi = 0; vi < g_.vertex_count(); ++vi) {
            auto [a, b] = g_.out_range(vi);
            double s = 0.0;
            for (std::size_t k = a; k < b; ++k) {
                s += probs[k];
                cumulative_[k] = s;
                heads_[k] = g_.edges()[k].head;
            }
            if (b > a) cumulative_[b - 1] = std::numeric_limits<double>::infinity();
        }
    }

    int step(int x, RngStream& rng) const {
        auto [a, b] = g_.out_range(g_.index_of(x));
        if (a == b) throw Error(ErrorCode::DeadEnd, "vertex " + std::to_string(x) + " has no out-edge");
        const double u = rng.uniform();
        std::size_t k = a;
        while (u >= cumulative_[k]) ++k;
        return heads_[k];
    }

private:
    const WeightedDigraph& g_;
    std::vector<double> cumulative_;
    std::vector<int> heads_;
};

} // namespace detail

inline Trajectory simulate_quenched(const Environment& env, int start, std::size_t horizon, RngStream rng,
                                    const QuenchedOptions& opts = {}) {
    const WeightedDigraph& g = env.graph();
    if (!g.contains(start)) throw Error(ErrorCode::StartOutsideWindow, "start " + std::to_string(start));
    const int lo = g.vertices().front();
    const int hi = g.vertices().back();
    auto outside_band = [&](int x) {
        return opts.band && (x < lo + opts.band->first || x > hi - opts.band->second);
    };
    if (outside_band(start)) throw Error(ErrorCode::StartOutsideWindow, "start inside the boundary band");
    std::vector<char> target(g.vertex_count(), 0);
    for (int t : opts.targets) target[g.index_of(t)] = 1;

    Trajectory tr;
    tr.start = start;
    tr.seed = rng.seed();
    tr.stream = rng.stream();
    tr.positions.reserve(std::min<std::size_t>(horizon + 1, std::size_t{1} << 22));
    tr.positions.push_back(start);
    const detail::RowSampler sampler(env);
    int x = start;
    for (std::size_t n = 0; n < horizon; ++n) {
        x = sampler.step(x, rng);
        tr.positions.push_back(x);
        if (target[g.index_of(x)]) {
            tr.stop_reason = StopReason::HitTarget;
            return tr;
        }
        if (outside_band(x)) {
            tr.stop_reason = StopReason::LeftWindow;
            return tr;
        }
    }
    tr.stop_reason = StopReason::Horizon;
    return tr;
}

/// Dirichlet environment on all of Z, sampled lazily in blocks of kBlock sites. Block b is
/// drawn from the stream (seed, stream).split(b), so the environment does not depend on the
/// order in which blocks are touched.
class LazyEnvironment {
public:
    static constexpr int kBlock = 1024;

    LazyEnvironment(const DirichletParams& p, RngStream base) : base_(std::move(base)) {
        for (int i : p.support()) {
            offsets_.push_back(i);
            alphas_.push_back(p.alpha(i));
        }
    }

    /// Every site uses the same fixed row (for tests and deterministic environments).
    LazyEnvironment(std::vector<int> offsets, std::vector<double> row) : offsets_(std::move(offsets)) {
        if (offsets_.empty() || offsets_.size() != row.size()) throw Error(ErrorCode::BadRow, "row/offset mismatch");
        double s = 0.0;
        for (double q : row) {
            if (!(q > 0.0)) throw Error(ErrorCode::BadRow, "probabilities must be positive");
            s += q;
        }
        if (std::abs(s - 1.0) > 1e-12) throw Error(ErrorCode::BadRow, "row does not sum to 1");
        fixed_.resize(row.size());
        double c = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) fixed_[k] = (c += row[k]);
        fixed_.back() = std::numeric_limits<double>::infinity();
    }

    std::size_t row_size() const noexcept { return offsets_.size(); }
    const std::vector<int>& offsets() const noexcept { return offsets_; }

    /// omega(x, x + offsets()[k]).
    double prob(int x, std::size_t k) const {
        const double* c = cumulative(x);
        const double hi = k + 1 == offsets_.size() ? 1.0 : c[k];
        return hi - (k == 0 ? 0.0 : c[k - 1]);
    }

    int step(int x, RngStream& rng) const {
        const double* c = cumulative(x);
        const double u = rng.uniform();
        std::size_t k = 0;
        while (u >= c[k]) ++k;
        return x + offsets_[k];
    }

private:
    const double* cumulative(int x) const {
        if (!fixed_.empty()) return fixed_.data();
        const long b = floor_div(x, kBlock);
        if (b != cached_block_) {
            cached_ = &block(b);
            cached_block_ = b;
        }
        return cached_->data() + static_cast<std::size_t>(x - b * kBlock) * offsets_.size();
    }

    static long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

    const std::vector<double>& block(long b) const {
        auto& slot = b >= 0 ? right_ : left_;
        const std::size_t idx = static_cast<std::size_t>(b >= 0 ? b : -b - 1);
        if (slot.size() <= idx) slot.resize(idx + 1);
        if (!slot[idx]) {
            auto rows = std::make_unique<std::vector<double>>(static_cast<std::size_t>(kBlock) * offsets_.size());
            RngStream rng = base_.split(static_cast<std::uint64_t>(b));
            const std::size_t k = offsets_.size();
            for (int s = 0; s < kBlock; ++s) {
                const auto row = sample_dirichlet(alphas_, rng);
                double c = 0.0;
                for (std::size_t j = 0; j < k; ++j) (*rows)[s * k + j] = (c += row[j]);
                (*rows)[s * k + k - 1] = std::numeric_limits<double>::infinity();
            }
            slot[idx] = std::move(rows);
        }
        return *slot[idx];
    }

    RngStream base_;
    std::vector<int> offsets_;
    std::vector<double> alphas_;
    std::vector<double> fixed_;
    mutable std::vector<std::unique_ptr<std::vector<double>>> right_, left_;
    mutable long cached_block_ = std::numeric_limits<long>::min();
    mutable const std::vector<double>* cached_ = nullptr;
};

struct ZWalkOptions {
    /// Stop as soon as the walk reaches a site >= stop_at_or_above.
    std::optional<int> stop_at_or_above;
    bool record = true;  ///< keep every position; otherwise only the start and the final site
};

inline Trajectory simulate_on_Z(const LazyEnvironment& env, int start, std::size_t horizon, RngStream rng,
                                const ZWalkOptions& opts = {}) {
    Trajectory tr;
    tr.start = start;
    tr.seed = rng.seed();
    tr.stream = rng.stream();
    tr.positions.push_back(start);
    if (opts.record) tr.positions.reserve(horizon + 1);
    int x = start;
    for (std::size_t n = 0; n < horizon; ++n) {
        x = env.step(x, rng);
        if (opts.record) tr.positions.push_back(x);
        if (opts.stop_at_or_above && x >= *opts.stop_at_or_above) {
            if (!opts.record) tr.positions.push_back(x);
            tr.stop_reason = StopReason::HitTarget;
            return tr;
        }
    }
    if (!opts.record) tr.positions.push_back(x);
    tr.stop_reason = StopReason::Horizon;
    return tr;
}

struct DerrwOptions {
    /// Stop on the first return to the start vertex (time >= 1).
    bool stop_on_return = false;
};

/// Directed edge reinforced walk: edge e is taken with probability r(e) / sum of r at its
/// tail, and the taken edge gains weight 1.
inline Trajectory simulate_derrw(const WeightedDigraph& g, int start, std::size_t horizon, RngStream rng,
                                 const DerrwOptions& opts = {}) {
    if (!g.contains(start)) throw Error(ErrorCode::StartOutsideWindow, "start " + std::to_string(start));
    std::vector<double> r(g.edge_count());
    std::vector<double> total(g.vertex_count(), 0.0);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        r[k] = g.edges()[k].weight;
        total[g.index_of(g.edges()[k].tail)] += r[k];
    }
    Trajectory tr;
    tr.start = start;
    tr.seed = rng.seed();
    tr.stream = rng.stream();
    tr.positions.push_back(start);
    std::size_t vi = g.index_of(start);
    for (std::size_t n = 0; n < horizon; ++n) {
        auto [a, b] = g.out_range(vi);
        if (a == b) throw Error(ErrorCode::DeadEnd, "vertex " + std::to_string(g.vertices()[vi]) + " has no out-edge");
        double u = rng.uniform() * total[vi];
        std::size_t k = a;
        while (k + 1 < b && u >= r[k]) {
            u -= r[k];
            ++k;
        }
        r[k] += 1.0;
        total[vi] += 1.0;
        const int y = g.edges()[k].head;
        tr.positions.push_back(y);
        vi = g.index_of(y);
        if (opts.stop_on_return && y == start) {
            tr.stop_reason = StopReason::HitTarget;
            return tr;
        }
    }
    tr.stop_reason = StopReason::Horizon;
    return tr;
}

/// Annealed probability of following `path`: the Polya-urn product over its steps.
inline double annealed_path_probability(const WeightedDigraph& g, const std::vector<int>& path) {
    if (path.empty()) throw Error(ErrorCode::NotAPath, "empty path");
    std::map<std::pair<int, int>, int> edge_uses;
    std::map<int, int> departures;
    double prob = 1.0;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        const int x = path[t], y = path[t + 1];
        if (!g.contains(x)) throw Error(ErrorCode::NotAPath, "unknown vertex " + std::to_string(x));
        const double w = g.weight(x, y);
        if (!(w > 0.0)) throw Error(ErrorCode::NotAPath, std::to_string(x) + "->" + std::to_string(y) + " is not an edge");
        int& used = edge_uses[{x, y}];
        int& left = departures[x];
        prob *= (w + used) / (g.out_weight(x) + left);
        ++used;
        ++left;
    }
    return prob;
}

inline constexpr std::int64_t kNotHit = -1;

struct StatsQueries {
    std::vector<int> sites;
    std::vector<std::pair<int, std::vector<int>>> site_sets;  ///< (x, S) for N_x^S
    std::vector<std::pair<int, int>> pairs;                   ///< (x, y) with x < y
};

struct SiteStats {
    std::int64_t H = kNotHit;          ///< first n >= 0 with X_n = x
    std::int64_t H_tilde = kNotHit;    ///< first n >= 1 with X_n = x
    std::int64_t H_at_least = kNotHit; ///< first n >= 0 with X_n >= x
    std::int64_t N = 0;                ///< visits to x
};

struct SetStats {
    std::int64_t N = 0;     ///< visits to x before first leaving S
    bool censored = false;  ///< the walk never left S within the trajectory
};

struct PairStats {
    std::int64_t trips = 0;  ///< N_{x,y}
    std::int64_t cross = 0;  ///< N'_{x,y}
};

struct WalkStats {
    std::map<int, SiteStats> sites;
    std::vector<SetStats> sets;
    std::map<std::pair<int, int>, PairStats> pairs;
    bool censored = false;  ///< stopped by the horizon, so every statistic is a lower-bound snapshot
};

inline WalkStats trajectory_stats(const Trajectory& traj, const StatsQueries& q) {
    WalkStats ws;
    ws.censored = traj.stop_reason == StopReason::Horizon;
    const auto& X = traj.positions;
    for (int x : q.sites) {
        SiteStats s;
        for (std::size_t n = 0; n < X.size(); ++n) {
            if (X[n] == x) {
                ++s.N;
                if (s.H == kNotHit) s.H = static_cast<std::int64_t>(n);
                if (n >= 1 && s.H_tilde == kNotHit) s.H_tilde = static_cast<std::int64_t>(n);
            }
            if (X[n] >= x && s.H_at_least == kNotHit) s.H_at_least = static_cast<std::int64_t>(n);
        }
        ws.sites[x] = s;
    }
    for (const auto& [x, S] : q.site_sets) {
        std::vector<int> sorted = S;
        std::sort(sorted.begin(), sorted.end());
        SetStats s;
        s.censored = true;
        for (int v : X) {
            if (!std::binary_search(sorted.begin(), sorted.end(), v)) {
                s.censored = false;
                break;
            }
            if (v == x) ++s.N;
        }
        ws.sets.push_back(s);
    }
    for (const auto& [x, y] : q.pairs) {
        PairStats s;
        // Last times strictly before n; -1 encodes sup of the empty set.
        std::int64_t last_x = -1, last_y = -1, last_le = -1, last_ge = -1;
        for (std::size_t n = 0; n < X.size(); ++n) {
            const int v = X[n];
            if (v == x && last_y > last_x) ++s.trips;
            if (v <= x && last_ge > last_le) ++s.cross;
            const auto t = static_cast<std::int64_t>(n);
            if (v == x) last_x = t;
            if (v == y) last_y = t;
            if (v <= x) last_le = t;
            if (v >= y) last_ge = t;
        }
        ws.pairs[{x, y}] = s;
    }
    return ws;
}

/// Times n >= 1 with X_n above every earlier position and at most every later position,
/// restricted to n <= last index - tail_buffer.
inline std::vector<std::size_t> regeneration_times(const Trajectory& traj, std::size_t tail_buffer) {
    const auto& X = traj.positions;
    std::vector<std::size_t> out;
    if (X.size() < 2 || tail_buffer > X.size() - 1) return out;
    const std::size_t last = X.size() - 1 - tail_buffer;
    std::vector<int> suffix_min(X.size());
    suffix_min.back() = std::numeric_limits<int>::max();
    for (std::size_t n = X.size() - 1; n-- > 0;) suffix_min[n] = std::min(suffix_min[n + 1], X[n + 1]);
    int prefix_max = X[0];
    for (std::size_t n = 1; n <= last; ++n) {
        if (X[n] > prefix_max && X[n] <= suffix_min[n]) out.push_back(n);
        prefix_max = std::max(prefix_max, X[n]);
    }
    return out;
}

inline std::size_t default_tail_buffer(const DirichletParams& p) {
    const double k1 = std::abs(derive_params(p).kappa1);
    return static_cast<std::size_t>(10 * (p.L() + p.R())) *
           static_cast<std::size_t>(std::ceil(1.0 / std::max(k1, 0.1)));
}

enum class VelocityMethod { Endpoint, Regeneration };

constexpr std::string_view to_string(VelocityMethod m) {
    return m == VelocityMethod::Endpoint ? "endpoint" : "regeneration";
}

struct VelocityEstimate {
    double v_hat = 0.0;
    double std_error = 0.0;
    VelocityMethod method = VelocityMethod::Endpoint;
    std::size_t steps = 0;
    std::size_t replicas = 0;
    std::size_t cycles = 0;  ///< regeneration increments used (regeneration method only)
    std::vector<std::string> warnings;
};

namespace detail {

inline Trajectory velocity_replica(const DirichletParams& p, std::size_t steps, std::uint64_t seed, std::size_t r,
                                   bool record) {
    const RngStream root(seed, 0);
    const RngStream replica = root.split(r);
    const LazyEnvironment env(p, replica.split(0));
    ZWalkOptions o;
    o.record = record;
    return simulate_on_Z(env, 0, steps, replica.split(1), o);
}

} // namespace detail

/// Replica r walks in its own environment drawn from (seed, r); results are aggregated in
/// replica order, so the estimate does not depend on the thread count.
inline VelocityEstimate estimate_velocity(const DirichletParams& p, std::size_t steps, std::size_t replicas,
                                          VelocityMethod method, std::uint64_t seed, unsigned threads = 1) {
    if (steps == 0 || replicas == 0) throw Error(ErrorCode::BadProblem, "steps and replicas must be positive");
    VelocityEstimate est;
    est.method = method;
    est.steps = steps;
    est.replicas = replicas;
    if (kappa1_is_zero(derive_params(p))) est.warnings.push_back("recurrent parameters: velocity is 0");

    if (method == VelocityMethod::Endpoint) {
        std::vector<double> v(replicas);
        parallel_for(replicas, threads, [&](std::size_t r) {
            const Trajectory t = detail::velocity_replica(p, steps, seed, r, false);
            v[r] = static_cast<double>(t.positions.back() - t.start) / static_cast<double>(steps);
        });
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(replicas);
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        est.v_hat = mean;
        est.std_error = replicas > 1 ? std::sqrt(var / static_cast<double>(replicas - 1) / static_cast<double>(replicas)) : 0.0;
        return est;
    }

    // Per-replica sums of displacement and time over complete regeneration cycles after the first.
    const std::size_t buffer = default_tail_buffer(p);
    std::vector<double> dx(replicas, 0.0), dt(replicas, 0.0);
    std::vector<std::size_t> cycles(replicas, 0);
    parallel_for(replicas, threads, [&](std::size_t r) {
        const Trajectory t = detail::velocity_replica(p, steps, seed, r, true);
        const auto tau = regeneration_times(t, buffer);
        if (tau.size() < 2) return;
        dx[r] = static_cast<double>(t.positions[tau.back()] - t.positions[tau.front()]);
        dt[r] = static_cast<double>(tau.back() - tau.front());
        cycles[r] = tau.size() - 1;
    });
    double sx = 0.0, st = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
        sx += dx[r];
        st += dt[r];
        est.cycles += cycles[r];
    }
    if (st <= 0.0) {
        est.warnings.push_back("no complete regeneration cycle observed");
        est.v_hat = 0.0;
        est.std_error = std::numeric_limits<double>::infinity();
        return est;
    }
    const double ratio = sx / st;
    est.v_hat = ratio;
    // Delta method for a ratio of replica means.
    const double n = static_cast<double>(replicas);
    const double mean_t = st / n;
    double var = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
        const double e = dx[r] - ratio * dt[r];
        var += e * e;
    }
    est.std_error = replicas > 1 ? std::sqrt(var / (n - 1) / n) / mean_t : 0.0;
    return est;
}

struct HittingEstimate {
    double mean = 0.0;  ///< over uncensored replicas
    double std_error = 0.0;
    double censored_fraction = 0.0;
    std::size_t replicas = 0;
    std::size_t horizon = 0;
};

/// Empirical H_{>=1} from 0 with horizon `steps`; censored replicas are excluded from the mean
/// and counted separately.
inline HittingEstimate estimate_mean_hitting(const DirichletParams& p, std::size_t steps, std::size_t replicas,
                                             std::uint64_t seed, unsigned threads = 1) {
    const DerivedParams d = derive_params(p);
    if (!(d.kappa1 > 0.0) || kappa1_is_zero(d)) throw Error(ErrorCode::NonpositiveKappa1, "needs kappa1 > 0");
    std::vector<double> h(replicas, -1.0);
    parallel_for(replicas, threads, [&](std::size_t r) {
        const RngStream replica = RngStream(seed, 1).split(r);
        const LazyEnvironment env(p, replica.split(0));
        RngStream rng = replica.split(1);
        int x = 0;
        for (std::size_t n = 1; n <= steps; ++n) {
            x = env.step(x, rng);
            if (x >= 1) {
                h[r] = static_cast<double>(n);
                return;
            }
        }
    });
    HittingEstimate est;
    est.replicas = replicas;
    est.horizon = steps;
    std::size_t ok = 0;
    double sum = 0.0;
    for (double x : h)
        if (x >= 0.0) {
            ++ok;
            sum += x;
        }
    est.censored_fraction = 1.0 - static_cast<double>(ok) / static_cast<double>(replicas);
    if (ok == 0) return est;
    est.mean = sum / static_cast<double>(ok);
    double var = 0.0;
    for (double x : h)
        if (x >= 0.0) var += (x - est.mean) * (x - est.mean);
    est.std_error = ok > 1 ? std::sqrt(var / static_cast<double>(ok - 1) / static_cast<double>(ok)) : 0.0;
    return est;
}

} // namespace rwde
