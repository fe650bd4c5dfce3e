#include "rwde/model.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace rwde;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::DomainError;
}

/// Transitive closure (Floyd-Warshall) of the model graph on [0, m-1], distinct pairs only.
bool closure_connected(const DirichletParams& p, int m) {
    std::vector<std::vector<char>> r(m, std::vector<char>(m, 0));
    for (int x = 0; x < m; ++x)
        for (int i : p.jump_support())
            if (x + i >= 0 && x + i < m) r[x][x + i] = 1;
    for (int k = 0; k < m; ++k)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (r[a][k] && r[k][b]) r[a][b] = 1;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (a != b && !r[a][b]) return false;
    return true;
}

} // namespace

TEST(Validate, ErrorOrder) {
    EXPECT_EQ(code_of([] { validate_params(0, 1, {{1, 1.0}}); }), ErrorCode::EmptySide);
    EXPECT_EQ(code_of([] { validate_params(1, 1, {{2, 1.0}}); }), ErrorCode::OffsetOutOfRange);
    EXPECT_EQ(code_of([] { validate_params(1, 1, {{-1, 1.0}, {1, -1.0}}); }), ErrorCode::NegativeWeight);
    EXPECT_EQ(code_of([] { validate_params(1, 1, {{-1, 1.0}, {1, NAN}}); }), ErrorCode::NonFiniteWeight);
    EXPECT_EQ(code_of([] { validate_params(2, 1, {{-1, 1.0}, {1, 1.0}}); }), ErrorCode::EndpointZero);
    EXPECT_EQ(code_of([] { validate_params(2, 2, {{-2, 1.0}, {2, 1.0}}); }), ErrorCode::GcdViolation);
}

TEST(Parse, RoundTripAndExtremes) {
    const auto p = parse_alphas("-1:1, 1:2");
    EXPECT_EQ(p.L(), 1);
    EXPECT_EQ(p.R(), 1);
    EXPECT_DOUBLE_EQ(p.alpha(1), 2.0);
    EXPECT_EQ(parse_alphas(format_alphas(p)), p);
    EXPECT_EQ(code_of([] { parse_alphas("-1:1,1"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_alphas("-1:1,1:x"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_alphas(""); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_alphas("-1:1,1:1,1:2"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_alphas("-2:0,1:1,-1:1"); }), ErrorCode::EndpointZero);
}

TEST(Derived, NearestNeighbour) {
    const auto d = derive_params(parse_alphas("-1:1,1:2"));
    EXPECT_DOUBLE_EQ(d.d_plus, 2.0);
    EXPECT_DOUBLE_EQ(d.d_minus, 1.0);
    EXPECT_DOUBLE_EQ(d.c_plus, 2.0);
    EXPECT_DOUBLE_EQ(d.c_minus, 1.0);
    EXPECT_DOUBLE_EQ(d.kappa1, 1.0);
    EXPECT_EQ(d.m0, 1);
}

TEST(Derived, SparseWeights) {
    const auto p = validate_params(16, 5, {{-16, 1.0 / 67}, {2, 15.0 / 67}, {5, 5.0 / 67}});
    const auto d = derive_params(p);
    EXPECT_NEAR(d.kappa1, 39.0 / 67, 1e-15);
    EXPECT_EQ(d.m0, 18);
}

TEST(Derived, PropB5Construction) {
    const auto d = derive_params(parse_alphas("-1:1,1:1,4:0.5"));
    EXPECT_DOUBLE_EQ(d.kappa1, 2.0);
}

TEST(Derived, M0MatchesTransitiveClosure) {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> side(1, 5);
    std::bernoulli_distribution keep(0.5);
    int checked = 0;
    while (checked < 200) {
        const int L = side(gen), R = side(gen);
        std::map<int, double> a{{-L, 1.0}, {R, 1.0}};
        for (int i = -L + 1; i < R; ++i)
            if (i != 0 && keep(gen)) a[i] = 0.5;
        DirichletParams p = [&] {
            try {
                return validate_params(L, R, a);
            } catch (const Error&) {
                return validate_params(1, 1, {{-1, 1.0}, {1, 1.0}});
            }
        }();
        if (p.L() != L || p.R() != R) continue;
        const int m0 = compute_m0(p);
        EXPECT_TRUE(closure_connected(p, m0));
        for (int m = std::max(L, R); m < m0; ++m) EXPECT_FALSE(closure_connected(p, m)) << m;
        ++checked;
    }
}

TEST(Derived, KappaZeroTest) {
    EXPECT_TRUE(kappa1_is_zero(derive_params(parse_alphas("-1:1,1:1"))));
    EXPECT_TRUE(kappa1_is_zero(derive_params(parse_alphas("-2:1,1:2"))));
    EXPECT_FALSE(kappa1_is_zero(derive_params(parse_alphas("-2:1,1:2.000001"))));
}

TEST(Reflect, SwapsSides) {
    const auto p = parse_alphas("-3:1,1:2,2:0.5");
    const auto q = reflect(p);
    EXPECT_EQ(q.L(), 2);
    EXPECT_EQ(q.R(), 3);
    EXPECT_DOUBLE_EQ(q.alpha(3), 1.0);
    EXPECT_DOUBLE_EQ(derive_params(q).kappa1, -derive_params(p).kappa1);
    EXPECT_EQ(reflect(q), p);
}
