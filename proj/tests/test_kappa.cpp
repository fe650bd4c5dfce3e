#include "rwde/kappa.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rwde;

namespace {

DirichletParams random_params(std::mt19937_64& gen, int maxL, int maxR) {
    std::uniform_int_distribution<int> side(1, std::max(maxL, maxR));
    std::uniform_real_distribution<double> w(0.05, 3.0);
    std::bernoulli_distribution keep(0.5);
    while (true) {
        const int L = std::min(side(gen), maxL), R = std::min(side(gen), maxR);
        std::map<int, double> a{{-L, w(gen)}, {R, w(gen)}};
        for (int i = -L + 1; i < R; ++i)
            if (keep(gen)) a[i] = w(gen);
        try {
            return validate_params(L, R, a);
        } catch (const Error&) {
        }
    }
}

} // namespace

TEST(Beta, HandComputed) {
    const auto p = parse_alphas("-1:1,1:2");
    const auto t = beta(p, {3, 4, 5});
    EXPECT_EQ(t.offsets, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(t.exit_counts.at(1), 1);
    EXPECT_EQ(t.exit_counts.at(-1), 1);
    EXPECT_DOUBLE_EQ(t.beta, 3.0);
    EXPECT_THROW(beta(p, {}), Error);
}

TEST(Beta, SparseWeightSets) {
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    EXPECT_NEAR(beta(p, {0, 2, 4, 6, 8, 10, 12, 14, 16}).beta, 68.0 / 67, 1e-12);
    EXPECT_NEAR(beta(p, {0, 5, 10, 15, 16, 20, 25, 30, 32}).beta, 142.0 / 67, 1e-12);
    EXPECT_NEAR(beta(p, {0, 5, 10, 12, 14, 16}).beta, 70.0 / 67, 1e-12);
    EXPECT_NEAR(beta(p, {0, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16}).beta, 1.0, 1e-12);
}

TEST(Beta, MonotoneUnderOuterAddition) {
    std::mt19937_64 gen(17);
    std::bernoulli_distribution keep(0.5);
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = random_params(gen, 4, 4);
        std::vector<int> S;
        for (int z = 0; z < 15; ++z)
            if (keep(gen)) S.push_back(z);
        if (S.empty()) S.push_back(0);
        const double b = beta(p, S).beta;
        for (int x : {S.front() - 1, S.front() - 3, S.back() + 1, S.back() + 4}) {
            auto T = S;
            T.push_back(x);
            EXPECT_GE(beta(p, T).beta, b - 1e-12);
        }
    }
}

TEST(DiameterBound, SparseWeights) {
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    EXPECT_EQ(diameter_bound(p), 70 * 18);
}

TEST(Kappa0, NearestNeighbour) {
    const auto r = kappa0_search(parse_alphas("-1:1,1:2"), 6);
    EXPECT_DOUBLE_EQ(r.value, 3.0);
    EXPECT_EQ(r.witness.offsets, (std::vector<int>{0, 1}));
    EXPECT_TRUE(r.certified);
}

TEST(Kappa0, SelfLoopSingleton) {
    const auto r = kappa0_search(parse_alphas("-1:1,0:0.5,1:2"), 6, {SearchStrategy::Exhaustive});
    EXPECT_DOUBLE_EQ(r.value, 3.0);
    EXPECT_EQ(r.witness.offsets, (std::vector<int>{0}));
}

TEST(Kappa0, ThreeJumpUnitWeights) {
    const auto r = kappa0_search(parse_alphas("-6:1,2:1,3:1"), 12);
    EXPECT_DOUBLE_EQ(r.value, 6.0);
    EXPECT_EQ(r.witness.offsets, (std::vector<int>{0, 3, 6}));
}

TEST(Kappa0, SparseWeightsBranchAndBound) {
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    const auto r = kappa0_search(p, 40);
    EXPECT_NEAR(r.value, 1.0, 1e-9);
    EXPECT_EQ(r.witness.offsets, (std::vector<int>{0, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16}));
    EXPECT_FALSE(r.certified);
    EXPECT_EQ(r.certified_bound, 1260);
}

TEST(Kappa0, Preconditions) {
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    EXPECT_THROW(kappa0_search(p, 17), Error);
    EXPECT_THROW(kappa0_search(p, 200), Error);
    EXPECT_THROW(kappa0_search(p, 31, {SearchStrategy::Exhaustive}), Error);
}

TEST(Kappa0, NodeBudgetYieldsUncertified) {
    SearchOptions o;
    o.node_budget = 10;
    const auto r = kappa0_search(parse_alphas("-3:1,-1:0.2,2:1,3:0.3"), 30, o);
    EXPECT_TRUE(r.timed_out);
    EXPECT_FALSE(r.certified);
}

TEST(Kappa0, BranchAndBoundMatchesExhaustive) {
    std::mt19937_64 gen(23);
    std::uniform_int_distribution<int> dia(0, 14);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(gen, 3, 3);
        const int D = std::max(derive_params(p).m0, dia(gen));
        const auto a = kappa0_search(p, D, {SearchStrategy::Exhaustive});
        const auto b = kappa0_search(p, D, {SearchStrategy::BranchAndBound});
        EXPECT_EQ(a.value, b.value) << format_alphas(p) << " D=" << D;
        EXPECT_EQ(a.witness.offsets, b.witness.offsets) << format_alphas(p) << " D=" << D;
    }
}

TEST(Kappa0, BoundsReflectionAndScaling) {
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(gen, 3, 3);
        const auto d = derive_params(p);
        const auto r = kappa0_search(p, 12);
        EXPECT_GE(r.value, d.c_plus + d.c_minus - 1e-12);
        EXPECT_LE(r.value, d.d_plus + d.d_minus + 1e-12);
        EXPECT_NEAR(kappa0_search(reflect(p), 12).value, r.value, 1e-12);
        std::map<int, double> scaled;
        for (auto [i, w] : p.as_map()) scaled[i] = 2.5 * w;
        const auto s = kappa0_search(validate_params(p.L(), p.R(), scaled), 12);
        EXPECT_NEAR(s.value, 2.5 * r.value, 1e-12);
        EXPECT_EQ(s.witness.offsets, r.witness.offsets);
    }
}

TEST(Regime, Classification) {
    auto classify = [](const char* a, int D) {
        const auto p = parse_alphas(a);
        return classify_regime(p, kappa0_search(p, D));
    };
    EXPECT_EQ(classify("-1:1,1:1", 8).tag, RegimeTag::Recurrent);
    const auto b5 = classify("-1:1,1:1,4:0.5", 20);
    EXPECT_EQ(b5.tag, RegimeTag::TransientRight);
    EXPECT_DOUBLE_EQ(b5.kappa0, 3.0);
    EXPECT_TRUE(b5.ballistic);
    EXPECT_FALSE(classify("-1:1,1:2", 8).ballistic);
    EXPECT_EQ(classify("-1:2,1:1", 8).tag, RegimeTag::TransientLeft);
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    const auto b7 = classify_regime(p, kappa0_search(p, 40));
    EXPECT_EQ(b7.tag, RegimeTag::TransientRight);
    EXPECT_FALSE(b7.ballistic);
    EXPECT_FALSE(b7.warnings.empty());
}
