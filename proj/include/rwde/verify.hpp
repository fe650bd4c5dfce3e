#pragma once

#include "rwde/environment.hpp"
#include "rwde/graph.hpp"
#include "rwde/kappa.hpp"
#include "rwde/model.hpp"
#include "rwde/parallel.hpp"
#include "rwde/report.hpp"
#include "rwde/rng.hpp"
#include "rwde/solver.hpp"
#include "rwde/stats.hpp"
#include "rwde/walk.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rwde::verify {

inline constexpr double kFailP = 0.001;
inline constexpr double kWarnP = 0.01;

struct SuiteResult {
    std::string suite;
    bool passed = false;
    json evidence = json::object();
};

inline json to_json(const SuiteResult& r) {
    return json{{"suite", r.suite}, {"passed", r.passed}, {"evidence", r.evidence}};
}

// ---------------------------------------------------------------------------------------------
// Escape probability law on the half-line graph.

struct BetaLawConfig {
    std::size_t replicas = 2000;
    int window = 512;
    std::uint64_t seed = 7;
    unsigned threads = 1;
};

inline SuiteResult beta_law(const DirichletParams& p, const BetaLawConfig& cfg) {
    const DerivedParams d = derive_params(p);
    auto g = std::make_shared<const WeightedDigraph>(build_Gplus(p, cfg.window));
    std::vector<double> mid(cfg.replicas), width(cfg.replicas);
    const RngStream root(cfg.seed, 0x6265746100ULL);
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
        const auto env = sample_environment(g, root.split(r));
        const auto b = escape_probability_bracket(p, env);
        mid[r] = b.midpoint();
        width[r] = b.width();
    });
    const double a = d.kappa1, b = d.d_minus;
    const auto ks = ks_test(mid, [&](double x) { return regularized_incomplete_beta(a, b, std::clamp(x, 0.0, 1.0)); });
    const double mean_width = mean_se(width).mean;
    SuiteResult out;
    out.suite = "beta-law";
    out.passed = ks.p_value > kFailP && mean_width < 1e-3;
    out.evidence = json{{"alphas", format_alphas(p)},
                        {"beta_a", num(a)},
                        {"beta_b", num(b)},
                        {"window", cfg.window},
                        {"replicas", cfg.replicas},
                        {"ks_statistic", num(ks.statistic)},
                        {"ks_p_value", num(ks.p_value)},
                        {"ks_warning", ks.p_value < kWarnP},
                        {"mean_bracket_width", num(mean_width)},
                        {"max_bracket_width", num(*std::max_element(width.begin(), width.end()))},
                        {"sample_mean", num(mean_se(mid).mean)},
                        {"expected_mean", num(a / (a + b))}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Reinforced walk versus annealed path law.

/// Three vertices, each with two out-edges, so there are 16 paths of length 4 from any start.
inline WeightedDigraph derrw_test_graph() {
    return WeightedDigraph({}, {{0, 1, 1.0}, {0, 2, 0.5}, {1, 0, 2.0}, {1, 2, 1.0}, {2, 0, 1.0}, {2, 1, 1.5}});
}

inline SuiteResult derrw(std::size_t runs, std::uint64_t seed, int depth = 4) {
    const WeightedDigraph g = derrw_test_graph();
    std::vector<std::vector<int>> paths{{0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<std::vector<int>> next;
        for (const auto& path : paths)
            for (const Edge& e : g.out_edges(path.back())) {
                auto q = path;
                q.push_back(e.head);
                next.push_back(std::move(q));
            }
        paths = std::move(next);
    }
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < paths.size(); ++i) index[paths[i]] = i;
    std::vector<double> count(paths.size(), 0.0);
    const RngStream root(seed, 0x6465727277ULL);
    for (std::size_t r = 0; r < runs; ++r) {
        const auto t = simulate_derrw(g, 0, static_cast<std::size_t>(depth), root.split(r));
        count[index.at(t.positions)] += 1.0;
    }
    SuiteResult out;
    out.suite = "derrw";
    out.passed = true;
    json rows = json::array();
    double worst = 0.0, total = 0.0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const double expected = annealed_path_probability(g, paths[i]);
        total += expected;
        const double freq = count[i] / static_cast<double>(runs);
        const double se = std::sqrt(expected * (1 - expected) / static_cast<double>(runs));
        const double z = se > 0 ? (freq - expected) / se : 0.0;
        worst = std::max(worst, std::abs(z));
        if (std::abs(z) > 4.0) out.passed = false;
        rows.push_back(json{{"path", paths[i]}, {"expected", num(expected)}, {"observed", num(freq)}, {"z", num(z)}});
    }
    out.passed = out.passed && std::abs(total - 1.0) < 1e-12;
    out.evidence = json{{"runs", runs}, {"paths", paths.size()}, {"max_abs_z", num(worst)},
                        {"total_probability", num(total)}, {"table", rows}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Last step before the first return (annealed), on the closed graph G_M.

inline SuiteResult loop_reversal(const DirichletParams& p, int M, std::size_t runs, std::uint64_t seed,
                                 std::size_t horizon = 10'000'000) {
    const WeightedDigraph g = build_GM(p, M);
    std::map<int, double> in_weight;
    double total_in = 0.0;
    for (std::size_t k : g.in_edge_indices(0)) {
        const Edge& e = g.edges()[k];
        in_weight[e.tail] += e.weight;
        total_in += e.weight;
    }
    std::map<int, double> hits;
    std::size_t censored = 0;
    const RngStream root(seed, 0x6c6f6f70ULL);
    DerrwOptions o;
    o.stop_on_return = true;
    for (std::size_t r = 0; r < runs; ++r) {
        const auto t = simulate_derrw(g, 0, horizon, root.split(r), o);
        if (t.stop_reason != StopReason::HitTarget) {
            ++censored;
            continue;
        }
        hits[t.positions[t.positions.size() - 2]] += 1.0;
    }
    const double n = static_cast<double>(runs - censored);
    SuiteResult out;
    out.suite = "loop-reversal";
    out.passed = censored == 0;
    json rows = json::array();
    double worst = 0.0;
    for (const auto& [y, w] : in_weight) {
        const double expected = w / total_in;
        const double freq = hits[y] / n;
        const double se = std::sqrt(expected * (1 - expected) / n);
        const double z = se > 0 ? (freq - expected) / se : 0.0;
        worst = std::max(worst, std::abs(z));
        if (std::abs(z) > 4.0) out.passed = false;
        rows.push_back(json{{"in_neighbour", y}, {"expected", num(expected)}, {"observed", num(freq)}, {"z", num(z)}});
    }
    out.evidence = json{{"alphas", format_alphas(p)}, {"M", M}, {"runs", runs}, {"censored", censored},
                        {"max_abs_z", num(worst)}, {"table", rows}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Time reversal: per-environment cycle identity and the law of the reversed environment.

namespace detail {

/// Closed walk through `start`: a random forward walk of random length, closed by a shortest path back.
inline std::vector<int> random_cycle(const WeightedDigraph& g, int start, RngStream& rng) {
    std::vector<int> cyc{start};
    const int len = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < len; ++i) {
        const auto out = g.out_edges(cyc.back());
        cyc.push_back(out[rng.below(out.size())].head);
    }
    std::map<int, int> parent{{cyc.back(), cyc.back()}};
    std::deque<int> queue{cyc.back()};
    while (!queue.empty() && !parent.count(start)) {
        const int v = queue.front();
        queue.pop_front();
        for (const Edge& e : g.out_edges(v))
            if (!parent.count(e.head)) {
                parent[e.head] = v;
                queue.push_back(e.head);
            }
    }
    if (cyc.back() == start) return cyc;
    std::vector<int> back;
    for (int v = start; v != cyc.back(); v = parent.at(v)) back.push_back(v);
    std::reverse(back.begin(), back.end());
    cyc.insert(cyc.end(), back.begin(), back.end());
    return cyc;
}

} // namespace detail

struct ReversalConfig {
    int M = 6;
    std::size_t environments = 100;
    std::size_t cycles = 100;
    std::size_t draws = 10000;
    std::uint64_t seed = 11;
};

inline SuiteResult reversal(const DirichletParams& p, const ReversalConfig& cfg) {
    auto g = std::make_shared<const WeightedDigraph>(build_GM(p, cfg.M));
    auto grev = std::make_shared<const WeightedDigraph>(g->reversed());
    const RngStream root(cfg.seed, 0x7265766572ULL);

    // Deterministic part: P_omega(cycle) = P_reversed(reversed cycle).
    double worst_rel = 0.0;
    for (std::size_t e = 0; e < cfg.environments; ++e) {
        const auto env = sample_environment(g, root.split(e));
        const auto rev = time_reverse(env);
        RngStream crng = root.split(1'000'000 + e);
        for (std::size_t c = 0; c < cfg.cycles; ++c) {
            const int start = g->vertices()[crng.below(g->vertex_count())];
            const auto cyc = detail::random_cycle(*g, start, crng);
            double fwd = 1.0, bwd = 1.0;
            for (std::size_t i = 0; i + 1 < cyc.size(); ++i) {
                fwd *= env.prob(cyc[i], cyc[i + 1]);
                bwd *= rev.prob(cyc[i + 1], cyc[i]);
            }
            worst_rel = std::max(worst_rel, std::abs(fwd - bwd) / std::max(fwd, bwd));
        }
    }

    // Distributional part: reversed draws on G_M against direct draws on the reversed graph.
    const std::size_t m = grev->edge_count();
    std::vector<std::vector<double>> a(m), b(m);
    for (auto& v : a) v.reserve(cfg.draws);
    for (auto& v : b) v.reserve(cfg.draws);
    for (std::size_t i = 0; i < cfg.draws; ++i) {
        const auto rev = time_reverse(sample_environment(g, root.split(2'000'000 + i)));
        const auto direct = sample_environment(grev, root.split(3'000'000 + i));
        for (std::size_t k = 0; k < m; ++k) {
            a[k].push_back(rev.prob_of_edge(k));
            b[k].push_back(direct.prob_of_edge(k));
        }
    }
    auto moment_z = [](const std::vector<double>& x, const std::vector<double>& y, int which) {
        auto stats = [&](const std::vector<double>& v) {
            const auto ms = mean_se(v);
            if (which == 1) return std::pair{ms.mean, ms.std_error};
            // Sample variance and its standard error from the fourth central moment.
            double m4 = 0.0;
            for (double t : v) m4 += std::pow(t - ms.mean, 4);
            m4 /= static_cast<double>(v.size());
            const double s4 = ms.variance * ms.variance;
            return std::pair{ms.variance, std::sqrt(std::max(0.0, m4 - s4) / static_cast<double>(v.size()))};
        };
        const auto [vx, sx] = stats(x);
        const auto [vy, sy] = stats(y);
        const double se = std::sqrt(sx * sx + sy * sy);
        if (se <= 1e-15) return std::abs(vx - vy) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
        return (vx - vy) / se;
    };
    double worst_mean = 0.0, worst_var = 0.0;
    json rows = json::array();
    for (std::size_t k = 0; k < m; ++k) {
        const double zm = moment_z(a[k], b[k], 1), zv = moment_z(a[k], b[k], 2);
        worst_mean = std::max(worst_mean, std::abs(zm));
        worst_var = std::max(worst_var, std::abs(zv));
        const Edge& e = grev->edges()[k];
        rows.push_back(json{{"edge", {e.tail, e.head}}, {"z_mean", num(zm)}, {"z_variance", num(zv)}});
    }
    SuiteResult out;
    out.suite = "reversal";
    out.passed = worst_rel <= 1e-10 && worst_mean <= 3.0 && worst_var <= 3.0;
    out.evidence = json{{"alphas", format_alphas(p)},
                        {"M", cfg.M},
                        {"environments", cfg.environments},
                        {"cycles_per_environment", cfg.cycles},
                        {"max_cycle_relative_error", num(worst_rel)},
                        {"draws", cfg.draws},
                        {"max_abs_z_mean", num(worst_mean)},
                        {"max_abs_z_variance", num(worst_var)},
                        {"entries", rows}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Redirecting a site to a better one never lowers a hitting probability.

inline SuiteResult harmonic(std::size_t instances, std::uint64_t seed) {
    RngStream rng(seed, 0x6861726dULL);
    double worst = 0.0;
    std::size_t done = 0, skipped = 0, degenerate = 0;
    while (done < instances) {
        const int n = 4 + static_cast<int>(rng.below(9));
        std::vector<Edge> es;
        for (int v = 0; v < n; ++v) es.push_back({v, (v + 1) % n, 0.1 + 2.9 * rng.uniform()});
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (rng.uniform() < 0.3) es.push_back({a, b, 0.1 + 2.9 * rng.uniform()});
        auto g = std::make_shared<const WeightedDigraph>(std::vector<int>{}, es);
        const auto env = sample_environment(g, rng.split(done + skipped));
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) perm[v] = v;
        for (int v = n - 1; v > 0; --v) std::swap(perm[v], perm[rng.below(static_cast<std::uint64_t>(v) + 1)]);
        const int na = 1 + static_cast<int>(rng.below(2)), nb = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, n - na))));
        std::vector<int> A(perm.begin(), perm.begin() + na), B(perm.begin() + na, perm.begin() + na + nb);
        const int x = perm[na + nb];
        const auto h = hitting_probability_vector(env, A, B);
        std::vector<int> eligible;
        for (int y = 0; y < n; ++y)
            if (y != x && std::find(B.begin(), B.end(), y) == B.end() && h[g->index_of(y)] >= h[g->index_of(x)])
                eligible.push_back(y);
        if (eligible.empty() || h[g->index_of(x)] <= 0.0) {
            ++skipped;
            continue;
        }
        const int y = eligible[rng.below(eligible.size())];
        const auto redirected = redirect(env, x, y);
        const WeightedDigraph& rg = redirected.graph();
        std::vector<char> boundary(rg.vertex_count(), 0), everything(rg.vertex_count(), 1);
        for (int v : A) boundary[rg.index_of(v)] = 1;
        for (int v : B) boundary[rg.index_of(v)] = 1;
        const auto reach = rwde::detail::can_reach(rg, boundary, everything);
        if (std::find(reach.begin(), reach.end(), 0) != reach.end()) {
            ++degenerate;
            continue;
        }
        const auto h2 = hitting_probability_vector(redirected, A, B);
        for (std::size_t i = 0; i < h.size(); ++i) worst = std::max(worst, h[i] - h2[i]);
        ++done;
    }
    SuiteResult out;
    out.suite = "harmonic";
    out.passed = worst <= 1e-10;
    out.evidence = json{{"instances", instances}, {"skipped", skipped}, {"degenerate", degenerate}, {"max_decrease", num(std::max(0.0, worst))}};
    return out;
}

// ---------------------------------------------------------------------------------------------
// Tail exponent of the quenched expected visit count on a sink graph.

/// Vertices 0..3 plus the sink 4. The pair {0, 1} exits only through 0->2 and 1->2, each of
/// weight 0.75, so its exit weight is 1.5; every other strongly connected set through 0 exits more.
inline WeightedDigraph tournier_graph() {
    return WeightedDigraph({}, {{0, 1, 1.0},
                                {0, 2, 0.75},
                                {1, 0, 1.0},
                                {1, 2, 0.75},
                                {2, 0, 1.0},
                                {2, 3, 1.0},
                                {2, 4, 2.0},
                                {3, 1, 1.0},
                                {3, 4, 2.0},
                                {4, 4, 1.0}});
}

/// Minimum exit weight over strongly connected vertex sets containing x, by enumeration.
inline double min_exit_weight(const WeightedDigraph& g, int x) {
    const std::size_t n = g.vertex_count();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<int> S;
        for (std::size_t i = 0; i < n; ++i)
            if ((mask >> i) & 1) S.push_back(g.vertices()[i]);
        if (std::find(S.begin(), S.end(), x) == S.end() || !strongly_connected(g, S)) continue;
        double exit = 0.0;
        for (const Edge& e : g.edges())
            if (std::find(S.begin(), S.end(), e.tail) != S.end() && std::find(S.begin(), S.end(), e.head) == S.end())
                exit += e.weight;
        best = std::min(best, exit);
    }
    return best;
}

inline SuiteResult tournier(std::size_t environments, std::uint64_t seed, unsigned threads = 1) {
    auto g = std::make_shared<const WeightedDigraph>(tournier_graph());
    const std::vector<int> transient{0, 1, 2, 3};
    std::vector<double> visits(environments);
    const RngStream root(seed, 0x746f75726eULL);
    parallel_for(environments, threads, [&](std::size_t r) {
        visits[r] = expected_visits(sample_environment(g, root.split(r)), 0, transient);
    });
    const std::size_t k = default_hill_k(environments);
    const double hill = hill_estimator(visits, k);
    const double beta_min = min_exit_weight(*g, 0);
    SuiteResult out;
    out.suite = "tournier";
    out.passed = hill >= 1.2 && hill <= 1.8;
    out.evidence = json{{"environments", environments}, {"hill_k", k}, {"hill_estimate", num(hill)},
                        {"min_exit_weight", num(beta_min)}, {"accepted_range", {1.2, 1.8}}};
    return out;
}

} // namespace rwde::verify
