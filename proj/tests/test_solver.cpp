#include "rwde/solver.hpp"
#include "rwde/walk.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rwde;

namespace {

/// Birth-death chain on [0, N] with up-probability p at interior sites; 0 and N have no out-edges.
Environment birth_death(int N, double p) {
    std::vector<Edge> es;
    std::vector<int> vs;
    for (int x = 0; x <= N; ++x) vs.push_back(x);
    for (int x = 1; x < N; ++x) {
        es.push_back({x, x - 1, 1.0});
        es.push_back({x, x + 1, 1.0});
    }
    auto g = std::make_shared<const WeightedDigraph>(vs, es);
    std::vector<double> probs;
    for (const Edge& e : g->edges()) probs.push_back(e.head > e.tail ? p : 1 - p);
    return Environment(g, probs);
}

/// Random environment on a complete digraph with self-loops on n vertices.
Environment random_complete(int n, std::uint64_t seed) {
    std::vector<Edge> es;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) es.push_back({a, b, 0.7 + a + 0.3 * b});
    return sample_environment(WeightedDigraph({}, es), RngStream(seed, 0));
}

} // namespace

TEST(Hitting, GamblersRuinSymmetric) {
    const int N = 20;
    const auto env = birth_death(N, 0.5);
    const auto h = hitting_probability({&env, {N}, {0}});
    for (int z = 0; z <= N; ++z) EXPECT_NEAR(h.at(z), static_cast<double>(z) / N, 1e-10);
}

TEST(Hitting, GamblersRuinBiased) {
    const int N = 30;
    const double p = 2.0 / 3, rho = (1 - p) / p;
    const auto env = birth_death(N, p);
    const auto h = hitting_probability({&env, {N}, {0}});
    for (int z = 0; z <= N; ++z) EXPECT_NEAR(h.at(z), (1 - std::pow(rho, z)) / (1 - std::pow(rho, N)), 1e-10);
}

TEST(Hitting, ComplementarySum) {
    const auto env = birth_death(15, 0.4);
    const auto a = hitting_probability({&env, {15}, {0}});
    const auto b = hitting_probability({&env, {0}, {15}});
    for (auto [z, v] : a) EXPECT_NEAR(v + b.at(z), 1.0, 1e-10);
}

TEST(Hitting, ExactWhereOneSideIsUnreachable) {
    // 0 <-> 1 leak into 2 with probability 1e-13; 3 only reaches 4.
    auto g = std::make_shared<const WeightedDigraph>(
        std::vector<int>{0, 1, 2, 3, 4},
        std::vector<Edge>{{0, 1, 1.0}, {0, 2, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {3, 4, 1.0}, {4, 3, 1.0}});
    const Environment env(g, {1.0 - 1e-13, 1e-13, 1.0, 1.0, 1.0, 1.0});
    const auto h = hitting_probability({&env, {2, 4}, {}});
    EXPECT_EQ(h.at(0), 1.0);
    EXPECT_EQ(h.at(1), 1.0);
    EXPECT_EQ(h.at(3), 1.0);
    const auto k = hitting_probability({&env, {2}, {4}});
    EXPECT_EQ(k.at(0), 1.0);
    EXPECT_EQ(k.at(3), 0.0);
}

TEST(Hitting, Errors) {
    const auto env = birth_death(5, 0.5);
    EXPECT_THROW(hitting_probability({&env, {}, {0}}), Error);
    EXPECT_THROW(hitting_probability({&env, {0}, {0}}), Error);
    const auto loop = Environment(std::make_shared<const WeightedDigraph>(
                                      std::vector<int>{0, 1, 2}, std::vector<Edge>{{0, 0, 1.0}, {1, 2, 1.0}}),
                                  {1.0, 1.0});
    try {
        hitting_probability({&loop, {2}, {}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnreachableBoundary);
    }
}

TEST(ExpectedVisits, Geometric) {
    auto g = std::make_shared<const WeightedDigraph>(std::vector<int>{}, std::vector<Edge>{{0, 0, 1.0}, {0, 1, 1.0}});
    const Environment env(g, {0.75, 0.25});
    EXPECT_NEAR(expected_visits(env, 0, {0}), 4.0, 1e-12);
}

TEST(ExpectedVisits, NoExit) {
    const auto env = random_complete(3, 1);
    try {
        expected_visits(env, 0, {0, 1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoExit);
    }
}

TEST(ExpectedVisits, MatchesMonteCarlo) {
    const auto env = random_complete(5, 2);
    const std::vector<int> S{0, 1, 2, 3};
    const double exact = expected_visits(env, 1, S);
    const int runs = 100000;
    RngStream rng(3, 0);
    const detail::RowSampler sampler(env);
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < runs; ++r) {
        int x = 1, count = 0;
        while (x != 4) {
            if (x == 1) ++count;
            x = sampler.step(x, rng);
        }
        s += count;
        s2 += static_cast<double>(count) * count;
    }
    const double m = s / runs, se = std::sqrt((s2 / runs - m * m) / runs);
    EXPECT_NEAR(m, exact, 3 * se);
}

TEST(Invariant, TwoState) {
    auto g = std::make_shared<const WeightedDigraph>(
        std::vector<int>{}, std::vector<Edge>{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
    const double p = 0.3, q = 0.6;
    const Environment env(g, {1 - p, p, q, 1 - q});
    const auto pi = invariant_measure(env);
    EXPECT_NEAR(pi.at(0), q / (p + q), 1e-12);
    EXPECT_NEAR(pi.at(1), p / (p + q), 1e-12);
    const Environment sym(g, {0.5, 0.5, 0.5, 0.5});
    EXPECT_NEAR(invariant_measure(sym).at(0), 0.5, 1e-12);
}

TEST(Invariant, ResidualOnRandomEnvironments) {
    const auto p = parse_alphas("-2:0.3,-1:1,1:0.7,3:0.4");
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto env = sample_environment(build_GM(p, 12), RngStream(s, 9));
        const auto pi = invariant_measure_vector(env);
        const auto& g = env.graph();
        std::vector<double> next(pi.size(), 0.0);
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            next[g.index_of(g.edges()[k].head)] += pi[g.index_of(g.edges()[k].tail)] * env.prob_of_edge(k);
        for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_NEAR(next[i], pi[i], 1e-10);
    }
}

TEST(Invariant, NotStronglyConnected) {
    const auto env = birth_death(4, 0.5);
    EXPECT_THROW(invariant_measure(env), Error);
}

TEST(TimeReversal, ReversibleChainIsFixed) {
    std::vector<Edge> es;
    for (int x = 0; x < 6; ++x) {
        if (x > 0) es.push_back({x, x - 1, 1.0});
        if (x < 5) es.push_back({x, x + 1, 1.0});
    }
    const auto env = sample_environment(WeightedDigraph({}, es), RngStream(4, 0));
    const auto rev = time_reverse(env);
    for (const Edge& e : env.graph().edges()) EXPECT_NEAR(rev.prob(e.tail, e.head), env.prob(e.tail, e.head), 1e-10);
}

TEST(TimeReversal, InvolutionAndCycles) {
    std::mt19937_64 gen(5);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto env = random_complete(4, 100 + s);
        const auto rev = time_reverse(env);
        const auto back = time_reverse(rev);
        for (const Edge& e : env.graph().edges()) EXPECT_NEAR(back.prob(e.tail, e.head), env.prob(e.tail, e.head), 1e-10);
        std::uniform_int_distribution<int> v(0, 3), len(1, 8);
        for (int c = 0; c < 100; ++c) {
            std::vector<int> cyc{v(gen)};
            const int n = len(gen);
            for (int i = 1; i < n; ++i) cyc.push_back(v(gen));
            cyc.push_back(cyc.front());
            double fwd = 1.0, bwd = 1.0;
            for (std::size_t i = 0; i + 1 < cyc.size(); ++i) {
                fwd *= env.prob(cyc[i], cyc[i + 1]);
                bwd *= rev.prob(cyc[i + 1], cyc[i]);
            }
            EXPECT_NEAR(fwd, bwd, 1e-10);
        }
    }
}

TEST(EscapeBracket, DeterministicRight) {
    const auto p = parse_alphas("-1:1,1:2");
    const int W = 10;
    std::vector<Edge> es;
    for (int x = 0; x < W; ++x) es.push_back({x, x + 1, 1.0});
    es.push_back({W, W, 1.0});
    auto g = std::make_shared<const WeightedDigraph>(std::vector<int>{}, es);
    const Environment env(g, std::vector<double>(g->edge_count(), 1.0));
    const auto b = escape_probability_bracket(p, env);
    EXPECT_DOUBLE_EQ(b.lower, 1.0);
    EXPECT_DOUBLE_EQ(b.upper, 1.0);
}

TEST(EscapeBracket, ConstantNearestNeighbour) {
    const auto p = parse_alphas("-1:1,1:2");
    const int W = 64;
    auto g = std::make_shared<const WeightedDigraph>(build_Gplus(p, W));
    std::vector<double> probs;
    for (const Edge& e : g->edges()) {
        if (e.tail == 0) probs.push_back(1.0);
        else probs.push_back(e.head > e.tail || (e.tail == W && e.head == W) ? 2.0 / 3 : 1.0 / 3);
    }
    const auto b = escape_probability_bracket(p, Environment(g, probs));
    EXPECT_LE(b.lower, b.upper);
    EXPECT_NEAR(b.lower, 0.5, 1e-3);
    EXPECT_NEAR(b.upper, 0.5, 1e-3);
    EXPECT_LT(b.width(), 1e-3);
}

TEST(EscapeBracket, UpperNonIncreasingUnderCoupling) {
    const auto p = parse_alphas("-2:0.5,-1:1,1:1,2:1");
    for (std::uint64_t s = 0; s < 30; ++s) {
        double prev = 1.0;
        for (int W : {16, 32, 64, 128}) {
            const auto env = sample_environment(build_Gplus(p, W), RngStream(s, 77));
            const auto b = escape_probability_bracket(p, env);
            EXPECT_LE(b.lower, b.upper);
            EXPECT_LE(b.upper, prev + 1e-10) << "seed " << s << " W " << W;
            prev = b.upper;
        }
    }
}

TEST(EscapeBracket, RequiresPositiveDrift) {
    const auto p = parse_alphas("-1:1,1:1");
    const auto q = parse_alphas("-1:1,1:2");
    const auto env = sample_environment(build_Gplus(q, 10), RngStream(1, 1));
    EXPECT_THROW(escape_probability_bracket(p, env), Error);
}

TEST(Harmonic, RedirectionNeverDecreases) {
    // If P^y(H_A < H_B) >= P^z(H_A < H_B) for every out-neighbour z of x,
    // sending x surely to y cannot lower any hitting probability.
    const auto p = parse_alphas("-2:0.5,-1:1,1:1,2:0.5");
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto env = sample_environment(build_window(p, 0, 14), RngStream(s, 5));
        const auto h = hitting_probability_vector(env, {14, 13}, {0, 1});
        const auto& g = env.graph();
        const int x = 7;
        int best = x;
        double best_h = -1.0;
        for (const Edge& e : g.out_edges(x))
            if (h[g.index_of(e.head)] > best_h) {
                best_h = h[g.index_of(e.head)];
                best = e.head;
            }
        const auto env2 = redirect(env, x, best);
        const auto h2 = hitting_probability_vector(env2, {14, 13}, {0, 1});
        for (std::size_t i = 0; i < h.size(); ++i) EXPECT_GE(h2[i], h[i] - 1e-10);
    }
}
