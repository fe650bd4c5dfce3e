#pragma once

#include "rwde/environment.hpp"
#include "rwde/error.hpp"
#include "rwde/graph.hpp"
#include "rwde/model.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <vector>

namespace rwde {

struct HittingProblem {
    const Environment* env = nullptr;
    std::vector<int> A;  ///< target
    std::vector<int> B;  ///< taboo, absorbing
};

struct EscapeBracket {
    double lower = 0.0;
    double upper = 0.0;
    int W = 0;
    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
};

inline constexpr double kSolveResidual = 1e-10;

namespace detail {

/// Solves M x = b with sparse LU plus iterative refinement. The residual is measured against
/// max(1, |b|, |M| |x|) in the infinity norm. Throws SingularSystem above kSolveResidual.
inline Eigen::VectorXd solve_checked(const Eigen::SparseMatrix<double>& M, const Eigen::VectorXd& b) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "LU factorisation failed");
    double norm_m = 0.0;
    {
        Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(M.rows());
        for (int k = 0; k < M.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) row_sums[it.row()] += std::abs(it.value());
        norm_m = row_sums.size() ? row_sums.maxCoeff() : 0.0;
    }
    auto scaled_residual = [&](const Eigen::VectorXd& x) {
        const double scale = std::max({1.0, b.lpNorm<Eigen::Infinity>(), norm_m * x.lpNorm<Eigen::Infinity>()});
        return (b - M * x).lpNorm<Eigen::Infinity>() / scale;
    };
    Eigen::VectorXd x = lu.solve(b);
    for (int pass = 0; pass < 4 && x.allFinite(); ++pass) {
        if (scaled_residual(x) <= kSolveResidual) return x;
        x += lu.solve(Eigen::VectorXd(b - M * x));
    }
    if (!x.allFinite() || !(scaled_residual(x) <= kSolveResidual))
        throw Error(ErrorCode::SingularSystem, "residual above tolerance");
    return x;
}

/// Vertex-index mask of vertices that can reach `targets` (by index) along edges of g.
inline std::vector<char> can_reach(const WeightedDigraph& g, const std::vector<char>& targets,
                                   const std::vector<char>& allowed) {
    std::vector<char> seen = targets;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i]) queue.push_back(i);
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t k : g.in_edge_indices(g.vertices()[v])) {
            const std::size_t t = g.index_of(g.edges()[k].tail);
            if (seen[t] || !allowed[t]) continue;
            seen[t] = 1;
            queue.push_back(t);
        }
    }
    return seen;
}

} // namespace detail

/// P^z(H_A < H_B) for every vertex z, indexed like env.graph().vertices().
inline std::vector<double> hitting_probability_vector(const Environment& env, const std::vector<int>& A,
                                                      const std::vector<int>& B) {
    const WeightedDigraph& g = env.graph();
    const std::size_t n = g.vertex_count();
    if (A.empty()) throw Error(ErrorCode::BadProblem, "target set A is empty");
    std::vector<signed char> role(n, 0);  // 1 in A, -1 in B
    for (int a : A) role[g.index_of(a)] = 1;
    for (int b : B) {
        const std::size_t i = g.index_of(b);
        if (role[i] == 1) throw Error(ErrorCode::BadProblem, "A and B intersect at " + std::to_string(b));
        role[i] = -1;
    }
    std::vector<char> boundary(n, 0), everything(n, 1);
    for (std::size_t i = 0; i < n; ++i) boundary[i] = role[i] != 0;
    const auto reach = detail::can_reach(g, boundary, everything);
    for (std::size_t i = 0; i < n; ++i)
        if (!reach[i])
            throw Error(ErrorCode::UnreachableBoundary,
                        "A and B unreachable from vertex " + std::to_string(g.vertices()[i]));

    // Vertices that cannot reach B without passing through A have h = 1 exactly, and symmetrically for 0.
    std::vector<char> in_a(n), in_b(n), not_b(n), not_a(n);
    for (std::size_t i = 0; i < n; ++i) {
        in_a[i] = role[i] == 1;
        in_b[i] = role[i] == -1;
        not_b[i] = role[i] != -1;
        not_a[i] = role[i] != 1;
    }
    const auto reach_a = detail::can_reach(g, in_a, not_b);
    const auto reach_b = detail::can_reach(g, in_b, not_a);
    for (std::size_t i = 0; i < n; ++i) {
        if (role[i] != 0) continue;
        if (!reach_a[i]) role[i] = -1;
        else if (!reach_b[i]) role[i] = 1;
    }

    std::vector<int> unknown(n, -1);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (role[i] == 0) unknown[i] = m++;
    std::vector<double> h(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (role[i] == 1) h[i] = 1.0;
    if (m == 0) return h;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    const auto probs = env.probabilities();
    for (std::size_t i = 0; i < n; ++i) {
        if (unknown[i] < 0) continue;
        const int r = unknown[i];
        double diag = 0.0;
        auto [a, b] = g.out_range(i);
        for (std::size_t k = a; k < b; ++k) {
            const std::size_t j = g.index_of(g.edges()[k].head);
            if (j == i) continue;
            diag += probs[k];
            if (role[j] == 1) rhs[r] += probs[k];
            else if (role[j] == 0) trip.emplace_back(r, unknown[j], -probs[k]);
        }
        trip.emplace_back(r, r, diag);
    }
    Eigen::SparseMatrix<double> M(m, m);
    M.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd x = detail::solve_checked(M, rhs);
    for (std::size_t i = 0; i < n; ++i)
        if (unknown[i] >= 0) h[i] = std::clamp(x[unknown[i]], 0.0, 1.0);
    return h;
}

inline std::map<int, double> hitting_probability(const HittingProblem& prob) {
    if (!prob.env) throw Error(ErrorCode::BadProblem, "no environment");
    const auto h = hitting_probability_vector(*prob.env, prob.A, prob.B);
    std::map<int, double> out;
    const auto& vs = prob.env->graph().vertices();
    for (std::size_t i = 0; i < vs.size(); ++i) out[vs[i]] = h[i];
    return out;
}

/// E^x[N_x^S]: expected visits to x before the walk first leaves S.
inline double expected_visits(const Environment& env, int x, const std::vector<int>& S) {
    const WeightedDigraph& g = env.graph();
    const std::size_t n = g.vertex_count();
    std::vector<char> in_s(n, 0);
    for (int v : S) in_s[g.index_of(v)] = 1;
    const std::size_t xi = g.index_of(x);
    if (!in_s[xi]) throw Error(ErrorCode::BadProblem, "x must belong to S");

    // Vertices of S with a direct exit, then everything in S that can reach one.
    std::vector<char> exits(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_s[i]) continue;
        auto [a, b] = g.out_range(i);
        for (std::size_t k = a; k < b; ++k)
            if (!in_s[g.index_of(g.edges()[k].head)]) exits[i] = 1;
    }
    const auto alive = detail::can_reach(g, exits, in_s);
    if (!alive[xi]) throw Error(ErrorCode::NoExit, "walk started at " + std::to_string(x) + " cannot leave S");

    std::vector<int> unknown(n, -1);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (in_s[i] && alive[i]) unknown[i] = m++;
    std::vector<Eigen::Triplet<double>> trip;
    const auto probs = env.probabilities();
    for (std::size_t i = 0; i < n; ++i) {
        if (unknown[i] < 0) continue;
        trip.emplace_back(unknown[i], unknown[i], 1.0);
        auto [a, b] = g.out_range(i);
        for (std::size_t k = a; k < b; ++k) {
            const int c = unknown[g.index_of(g.edges()[k].head)];
            if (c >= 0) trip.emplace_back(unknown[i], c, -probs[k]);
        }
    }
    Eigen::SparseMatrix<double> M(m, m);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[unknown[xi]] = 1.0;
    return detail::solve_checked(M, e)[unknown[xi]];
}

/// Bracket for P^0(no return to 0) on the half-line graph truncated at W. Absorbing at the
/// band [W-R+1, W] and counting it as escape gives the upper value. The lower value discounts it by the worst return
/// probability seen from the middle band [W/2-R+1, W/2].
inline EscapeBracket escape_probability_bracket(const DirichletParams& p, const Environment& env) {
    const DerivedParams d = derive_params(p);
    if (!(d.kappa1 > 0.0) || kappa1_is_zero(d)) throw Error(ErrorCode::NonpositiveKappa1, "escape needs kappa1 > 0");
    const WeightedDigraph& g = env.graph();
    const int W = g.vertices().back();
    if (g.vertices().front() != 0 || W <= p.L() + p.R())
        throw Error(ErrorCode::WTooSmall, "environment must live on build_Gplus(p, W)");
    std::vector<int> band;
    for (int b = W - p.R() + 1; b <= W; ++b) band.push_back(b);
    const auto h = hitting_probability_vector(env, band, {0});

    EscapeBracket out;
    out.W = W;
    auto [a, b] = g.out_range(g.index_of(0));
    for (std::size_t k = a; k < b; ++k) out.upper += env.prob_of_edge(k) * h[g.index_of(g.edges()[k].head)];
    double worst_return = 0.0;
    for (int m = std::max(1, W / 2 - p.R() + 1); m <= W / 2; ++m)
        worst_return = std::max(worst_return, 1.0 - h[g.index_of(m)]);
    out.upper = std::clamp(out.upper, 0.0, 1.0);
    out.lower = std::clamp(out.upper * (1.0 - worst_return), 0.0, out.upper);
    return out;
}

/// Stationary distribution, indexed like env.graph().vertices().
inline std::vector<double> invariant_measure_vector(const Environment& env) {
    const WeightedDigraph& g = env.graph();
    const std::size_t n = g.vertex_count();
    if (n == 0) throw Error(ErrorCode::NotStronglyConnected, "empty graph");
    auto [comp, ncomp] = scc_components(g, std::vector<char>(n, 1));
    if (ncomp != 1) throw Error(ErrorCode::NotStronglyConnected, "environment support is not strongly connected");
    if (n == 1) return {1.0};

    // Rows 0..n-2: (P^T - I) pi = 0; the last row is the normalisation sum pi = 1.
    const int N = static_cast<int>(n);
    std::vector<Eigen::Triplet<double>> trip;
    const auto probs = env.probabilities();
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const int t = static_cast<int>(g.index_of(g.edges()[k].tail));
        const int h = static_cast<int>(g.index_of(g.edges()[k].head));
        if (h < N - 1) trip.emplace_back(h, t, probs[k]);
    }
    for (int i = 0; i < N - 1; ++i) trip.emplace_back(i, i, -1.0);
    for (int j = 0; j < N; ++j) trip.emplace_back(N - 1, j, 1.0);
    Eigen::SparseMatrix<double> M(N, N);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    rhs[N - 1] = 1.0;
    const Eigen::VectorXd pi = detail::solve_checked(M, rhs);
    return {pi.data(), pi.data() + N};
}

inline std::map<int, double> invariant_measure(const Environment& env) {
    const auto pi = invariant_measure_vector(env);
    std::map<int, double> out;
    for (std::size_t i = 0; i < pi.size(); ++i) out[env.graph().vertices()[i]] = pi[i];
    return out;
}

/// Time reversal on the edge-reversed graph: w(x, y) = pi(y) omega(y, x) / pi(x).
inline Environment time_reverse(const Environment& env) {
    const WeightedDigraph& g = env.graph();
    const auto pi = invariant_measure_vector(env);
    auto rev = std::make_shared<const WeightedDigraph>(g.reversed());
    std::vector<double> probs(rev->edge_count());
    for (std::size_t vi = 0; vi < rev->vertex_count(); ++vi) {
        auto [a, b] = rev->out_range(vi);
        double total = 0.0;
        for (std::size_t k = a; k < b; ++k) {
            const int y = rev->edges()[k].head;
            const int x = rev->edges()[k].tail;
            probs[k] = pi[g.index_of(y)] * env.prob(y, x) / pi[vi];
            total += probs[k];
        }
        for (std::size_t k = a; k < b; ++k) probs[k] /= total;
    }
    return Environment(std::move(rev), std::move(probs));
}

/// The environment with x sent surely to y; every other row is kept. y need not be an
/// out-neighbour of x, so the result lives on a graph where x has the single out-edge x -> y.
inline Environment redirect(const Environment& env, int x, int y) {
    const WeightedDigraph& g = env.graph();
    if (!g.contains(x) || !g.contains(y)) throw Error(ErrorCode::UnknownVertex, "redirect endpoints must be vertices");
    std::vector<Edge> es;
    std::vector<std::pair<std::pair<int, int>, double>> rows;
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edges()[k];
        if (e.tail == x) continue;
        es.push_back(e);
        rows.push_back({{e.tail, e.head}, env.prob_of_edge(k)});
    }
    es.push_back({x, y, 1.0});
    rows.push_back({{x, y}, 1.0});
    auto g2 = std::make_shared<const WeightedDigraph>(g.vertices(), es);
    std::sort(rows.begin(), rows.end());
    std::vector<double> probs;
    probs.reserve(rows.size());
    for (const auto& r : rows) probs.push_back(r.second);
    return Environment(std::move(g2), std::move(probs));
}

} // namespace rwde
