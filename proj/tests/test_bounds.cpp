#include "udrl/bounds.hpp"
#include "udrl/domains.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace udrl;

TEST(FMap, FixedPointIsOneMinusGamma) {
    for (double g : {1e-6, 0.01, 0.3, 0.9}) {
        const auto fp = f_fixed_point(g);
        EXPECT_DOUBLE_EQ(fp.value, 1.0 - g);
        EXPECT_LE(fp.residual, 1e-15);
    }
    EXPECT_THROW(f_fixed_point(0.0), DomainError);
    EXPECT_THROW(f_map(0.0, 0.5), DomainError);
}

TEST(HMap, ThresholdAtHorizonTwo) {
    EXPECT_NEAR(h_b0(2), 27.0 / 256.0, 1e-16);
    EXPECT_NEAR(h_b0(1), 0.25, 1e-16);
    EXPECT_THROW(h_fixed_points(h_b0(3), 3), DomainError);
    EXPECT_THROW(h_fixed_points(0.0, 3), DomainError);
}

TEST(HMap, FixedPointsBracketTheMidpoint) {
    for (std::size_t N : {1u, 2u, 4u, 8u})
        for (double frac : {1e-6, 0.1, 0.5, 0.9, 0.999}) {
            const double b = frac * h_b0(N);
            const auto fp = h_fixed_points(b, N);
            const double mid = (2.0 * N - 1.0) / (2.0 * N);
            EXPECT_LT(fp.lower.value, mid);
            EXPECT_GT(fp.upper.value, mid);
            EXPECT_LE(fp.lower.residual, 1e-12);
            EXPECT_LE(fp.upper.residual, 1e-12);
            // Between x_l and x_u the map pushes upward.
            const double x = 0.5 * (fp.lower.value + fp.upper.value);
            EXPECT_GT(h_map(x, b, N), x);
        }
}

TEST(ZMap, KnownFixedPoint) {
    const auto fp = z_fixed_point(0.1, 0.2, 1.0, 2.0);
    EXPECT_NEAR(fp.value, 0.5 * (0.8 + std::sqrt(0.64 + 0.04)), 1e-15);
    EXPECT_NEAR(fp.value, 0.8123105625617661, 1e-12);
    EXPECT_LE(fp.residual, 1e-15);
    EXPECT_NEAR(z_fixed_point_value(0.0, 0.2, 1.0, 4.0), 1.0 - 0.2 * 0.75, 1e-15);
    EXPECT_THROW(z_fixed_point(0.5, 0.5, 1.0, 2.0), DomainError);
    EXPECT_THROW(z_fixed_point(0.1, 0.2, 3.0, 2.0), DomainError);
}

TEST(Alpha, ConstantForms) {
    EXPECT_DOUBLE_EQ(alpha_constant(1, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(alpha_constant(4, 1.0), 0.1);
    EXPECT_DOUBLE_EQ(alpha_constant(4, 1.0, AlphaForm::NNMinus1), 2.0 / 12.0);
    EXPECT_THROW(alpha_constant(1, 1.0, AlphaForm::NNMinus1), DomainError);
}

TEST(Alpha, ThrowsWhenCriticalStatesLeaveSupport) {
    const Domain d = odt_gridworld({2, 2});
    const auto ctx = make_bound_context(d.ce, d.ray(0.0));
    EXPECT_FALSE(ctx.critical_in_support);
    EXPECT_THROW(alpha_visitation(ctx), PremiseViolated);
    EXPECT_THROW(supp_mu_bounds(ctx, 0.01), PremiseViolated);
}

TEST(SuppMuBounds, BanditValues) {
    const Domain d = bandit();
    const double delta = 0.01;
    const auto r = supp_mu_bounds(d.ce, d.ray(0.0), delta);
    ASSERT_TRUE(r.valid);
    EXPECT_DOUBLE_EQ(r.alpha, 0.5);  // N = 1, mu_bar = 1/2 on both critical states
    EXPECT_DOUBLE_EQ(r.beta_tilde, 0.005);
    ASSERT_EQ(r.beta.size(), 1u);
    EXPECT_DOUBLE_EQ(r.beta[0], 0.01);
    EXPECT_NEAR(r.gamma[0], 0.005 / (0.99 * 0.5), 1e-15);
    EXPECT_NEAR(r.optimal_mass_bound, 1.0 - r.gamma[0], 1e-15);
    EXPECT_NEAR(r.j_bound, 0.005 + 0.01 + 2.0 * r.gamma[0], 1e-15);
}

TEST(SuppMuBounds, MonotoneInHorizon) {
    const Domain d = z3_walk();
    const auto r = supp_mu_bounds(d.ce, d.ray(0.0), 1e-9);
    ASSERT_TRUE(r.valid);
    for (std::size_t h = 1; h < r.beta.size(); ++h) {
        EXPECT_GT(r.beta[h], r.beta[h - 1]);
        EXPECT_GE(r.gamma[h], r.gamma[h - 1]);
        EXPECT_GE(r.kappa[h], r.kappa[h - 1]);
    }
}

TEST(SuppMuBounds, LargeDeltaIsFlaggedWithNanOutputs) {
    const Domain d = z3_walk();
    const auto r = supp_mu_bounds(d.ce, d.ray(0.0), 0.5);
    EXPECT_FALSE(r.valid);
    EXPECT_FALSE(r.violations.empty());
    EXPECT_TRUE(std::isnan(r.optimal_mass_bound));
    EXPECT_THROW(supp_mu_bounds(d.ce, d.ray(0.0), 0.0), DomainError);
}

TEST(SuppMuBounds, TendToOneAsDeltaVanishes) {
    const Domain d = gridworld_3x3();
    const auto ctx = make_bound_context(d.ce, d.ray(0.0));
    double prev = 0.0;
    for (double delta : {1e-8, 1e-10, 1e-12, 1e-14}) {
        const auto r = supp_mu_bounds(ctx, delta);
        ASSERT_TRUE(r.valid);
        EXPECT_GT(r.optimal_mass_bound, prev);
        prev = r.optimal_mass_bound;
    }
    EXPECT_NEAR(prev, bound_limit(ctx), 1e-6);
}

TEST(UniqueOptBounds, RequiresUniqueOptimalActions) {
    const Domain d = z3_walk();
    EXPECT_THROW(unique_opt_bounds(d.ce, d.ray(0.0), 1e-4), PremiseViolated);
}

TEST(UniqueOptBounds, GateAndThreshold) {
    const Domain d = odt_gridworld({2, 2});
    const auto ctx = make_bound_context(d.ce, d.ray(0.0));
    ASSERT_EQ(ctx.max_optimal, 1u);
    const auto r = unique_opt_bounds(ctx, 1e-6);
    ASSERT_TRUE(r.valid);
    EXPECT_LT(r.b, r.b0);
    EXPECT_NEAR(r.delta0, unique_opt_delta0(4, 1.0), 0.0);
    EXPECT_NEAR(unique_opt_b(4, 1.0, r.delta0), h_b0(4), 1e-9);
    EXPECT_LT(r.x_l.value, r.x_u.value);
    EXPECT_GT(r.optimal_mass_bound, 0.99);
    // Uniform pi0 puts 1/4 on the optimal action; x_l is far smaller only for tiny delta.
    EXPECT_TRUE(unique_opt_gate(ctx, PolicyTensor::uniform(d.ce), unique_opt_bounds(ctx, 1e-9).x_l.value));
    const auto over = unique_opt_bounds(ctx, 0.5);
    EXPECT_FALSE(over.valid);
    EXPECT_TRUE(std::isnan(over.q_bound));
}

TEST(EpsBounds, FlagsAndLimit) {
    const Domain d = bandit();
    const auto ctx = make_bound_context(d.ce, d.ray(0.0));
    const double eps = 0.1;
    EXPECT_NEAR(bound_limit(ctx, eps), 1.0 - eps * 0.5, 1e-15);
    const auto r = eps_bounds(ctx, 1e-6, eps);
    ASSERT_TRUE(r.valid);
    EXPECT_LT(r.optimal_mass_bound, bound_limit(ctx, eps));
    EXPECT_NEAR(r.optimal_mass_bound, bound_limit(ctx, eps), 1e-3);
    EXPECT_NEAR(r.alpha, 0.5 * (eps / 2.0) * (1.0 - 5e-7), 1e-15);
    EXPECT_FALSE(eps_bounds(ctx, 0.5, eps).valid);
    EXPECT_THROW(eps_bounds(ctx, 0.01, 0.0), DomainError);
}

TEST(EpsBounds, AlphaUsesWholeSupport) {
    const Domain d = odt_gridworld({2, 0});
    const auto ctx = make_bound_context(d.ce, d.ray(0.0));
    EXPECT_DOUBLE_EQ(ctx.min_mu_support, 1.0);
    const auto r = eps_bounds(ctx, 1e-12, 0.1);
    EXPECT_TRUE(r.valid);
    EXPECT_EQ(r.x_star.size(), ctx.distinct_optimal.size());
}
