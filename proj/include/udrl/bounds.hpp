// Fixed-point maps bounding the eUDRL recursion near deterministic kernels and
// the three bound pipelines built on them.
//
//   f(x)   = x / (x + gamma)                          fixed point 1 - gamma
//   h_b(x) = x^{2N} / (x^{2N} + b)                    fixed points 0 < x_l < x_u
//   z(x)   = (1 - eps) x / (x + gamma) + eps M / A    unique fixed point x*
//
// The pipelines turn a distance delta to the deterministic kernel into lower
// bounds on the optimal-action mass of the limit policies and upper bounds on
// the value, action-value and objective errors.

#pragma once

#include "udrl/core.hpp"
#include "udrl/recursion.hpp"
#include "udrl/values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace udrl {

/// Value and final residual |map(x) - x| of a fixed-point solve.
struct FixedPoint {
    double value = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

// ---------------------------------------------------------------------------
// f map
// ---------------------------------------------------------------------------

inline void check_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
}

inline double f_map(double x, double gamma) {
    check_gamma(gamma);
    if (!(x > 0.0 && x <= 1.0)) throw DomainError("f map is defined on (0, 1]");
    return x / (x + gamma);
}

inline FixedPoint f_fixed_point(double gamma) {
    check_gamma(gamma);
    const double x = 1.0 - gamma;
    return {x, std::abs(f_map(x, gamma) - x), 0};
}

// ---------------------------------------------------------------------------
// h map
// ---------------------------------------------------------------------------

/// b0(N) = (1 / 2N) ((2N - 1) / 2N)^{2N - 1}; h_b has three fixed points iff 0 < b < b0.
inline double h_b0(std::size_t N) {
    if (N < 1) throw DomainError("horizon must be at least 1");
    const double n2 = 2.0 * double(N);
    return std::pow((n2 - 1.0) / n2, n2 - 1.0) / n2;
}

inline double h_map(double x, double b, std::size_t N) {
    const double p = std::pow(x, 2.0 * double(N));
    return p / (p + b);
}

struct HFixedPoints {
    FixedPoint lower;  // x_l
    FixedPoint upper;  // x_u
};

namespace detail {

/// Root of u(x) = x^{2N-1}(1 - x) - b on [lo, hi] where u changes sign.
inline double bisect_u(double lo, double hi, double b, std::size_t N) {
    const double k = 2.0 * double(N) - 1.0;
    auto u = [&](double x) { return std::pow(x, k) * (1.0 - x) - b; };
    const bool rising = u(lo) < u(hi);
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if ((u(mid) < 0.0) == rising) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

template <class G>
FixedPoint contract(G&& g, double x, double b, std::size_t N, std::size_t max_iter, double tol) {
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        const double next = g(x);
        const bool done = std::abs(next - x) <= tol;
        x = next;
        if (done) break;
    }
    return {x, std::abs(h_map(x, b, N) - x), it};
}

} // namespace detail

/// x_l by iterating g_l(x) = (b / (1 - x))^{1/(2N-1)} from 0 and x_u by
/// iterating g_u(x) = 1 - b / x^{2N-1} from 1. Both contractions slow down as
/// b approaches b0, in which case bisection on x^{2N-1}(1 - x) = b finishes.
inline HFixedPoints h_fixed_points(double b, std::size_t N, double tol = 1e-12) {
    const double b0 = h_b0(N);
    if (!(b > 0.0 && b < b0)) throw DomainError("h map needs 0 < b < b0(N)");
    const double k = 2.0 * double(N) - 1.0;
    const double mid = k / (k + 1.0);
    const std::size_t max_iter = 10000;

    HFixedPoints out;
    out.lower = detail::contract([&](double x) { return std::pow(b / (1.0 - x), 1.0 / k); }, 0.0, b, N,
                                 max_iter, tol * 1e-3);
    if (!(out.lower.residual <= tol) || out.lower.iterations >= max_iter) {
        const double x = detail::bisect_u(0.0, mid, b, N);
        out.lower = {x, std::abs(h_map(x, b, N) - x), out.lower.iterations};
    }
    out.upper = detail::contract([&](double x) { return 1.0 - b / std::pow(x, k); }, 1.0, b, N, max_iter,
                                 tol * 1e-3);
    if (!(out.upper.residual <= tol) || out.upper.iterations >= max_iter) {
        const double x = detail::bisect_u(mid, 1.0, b, N);
        out.upper = {x, std::abs(h_map(x, b, N) - x), out.upper.iterations};
    }
    return out;
}

// ---------------------------------------------------------------------------
// z map
// ---------------------------------------------------------------------------

inline void check_z_params(double gamma, double eps, double M, double A) {
    if (!(gamma > 0.0 && eps > 0.0 && gamma + eps < 1.0)) throw DomainError("z map needs gamma, eps > 0 and gamma + eps < 1");
    if (!(M > 0.0 && M <= A)) throw DomainError("z map needs 0 < M <= A");
}

inline double z_map(double x, double gamma, double eps, double M, double A) {
    check_z_params(gamma, eps, M, A);
    return (1.0 - eps) * x / (x + gamma) + eps * M / A;
}

/// Closed form, valid for any gamma >= 0 (gamma = 0 gives 1 - eps (1 - M/A)).
inline double z_fixed_point_value(double gamma, double eps, double M, double A) {
    const double xh = 1.0 - eps * (1.0 - M / A) - gamma;
    return 0.5 * (xh + std::sqrt(xh * xh + 4.0 * gamma * eps * M / A));
}

inline FixedPoint z_fixed_point(double gamma, double eps, double M, double A) {
    check_z_params(gamma, eps, M, A);
    const double x = z_fixed_point_value(gamma, eps, M, A);
    return {x, std::abs(z_map(x, gamma, eps, M, A) - x), 0};
}

// ---------------------------------------------------------------------------
// Bound pipelines
// ---------------------------------------------------------------------------

enum class BoundVariant { SuppMu, UniqueOpt, Epsilon };

inline const char* to_string(BoundVariant v) {
    switch (v) {
    case BoundVariant::SuppMu: return "supp_mu";
    case BoundVariant::UniqueOpt: return "unique_opt";
    case BoundVariant::Epsilon: return "epsilon";
    }
    return "?";
}

/// Denominator used in the visitation constant alpha: N(N+1) (default) or
/// N(N-1) as an alternative constant. N(N-1) is undefined at N = 1.
enum class AlphaForm { NNPlus1, NNMinus1 };

/// Everything the pipelines need from the deterministic kernel; computed once
/// per domain and reused across a delta grid.
struct BoundContext {
    std::size_t horizon = 0;
    std::size_t num_actions = 0;
    ReferenceSolution reference;
    double min_mu_critical = 0.0;  // min over critical states of mu_bar (0 if one lies outside supp)
    double min_mu_support = 0.0;   // min over supp mu_bar
    bool critical_in_support = false;
    std::size_t max_optimal = 0;
    std::vector<std::size_t> critical_horizon;  // per critical state
    std::vector<std::size_t> critical_optimal;  // |O| per critical state
    std::vector<std::size_t> distinct_optimal;  // sorted distinct |O| values
};

inline BoundContext make_bound_context(const CommandExtension& ce, const TransitionKernel& kernel0) {
    BoundContext ctx;
    ctx.horizon = ce.horizon();
    ctx.num_actions = ce.num_actions();
    ctx.reference = make_reference(ce, kernel0);
    const auto& mu = ce.mu_bar();
    ctx.min_mu_support = std::numeric_limits<double>::infinity();
    for (double m : mu)
        if (m > 0.0) ctx.min_mu_support = std::min(ctx.min_mu_support, m);
    ctx.critical_in_support = true;
    ctx.min_mu_critical = std::numeric_limits<double>::infinity();
    std::set<std::size_t> distinct;
    for (std::size_t e : ctx.reference.critical.members()) {
        ctx.min_mu_critical = std::min(ctx.min_mu_critical, mu[e]);
        if (!(mu[e] > 0.0)) ctx.critical_in_support = false;
        const std::size_t M = ctx.reference.optimal.size(e);
        ctx.critical_horizon.push_back(ce.shape().coords(e).h);
        ctx.critical_optimal.push_back(M);
        ctx.max_optimal = std::max(ctx.max_optimal, M);
        distinct.insert(M);
    }
    if (ctx.critical_horizon.empty()) ctx.min_mu_critical = 0.0;
    ctx.distinct_optimal.assign(distinct.begin(), distinct.end());
    return ctx;
}

struct BoundReport {
    BoundVariant variant = BoundVariant::SuppMu;
    AlphaForm alpha_form = AlphaForm::NNPlus1;

    // inputs
    double delta = 0.0;
    double epsilon = 0.0;
    std::size_t horizon = 0;
    std::size_t num_actions = 0;
    double min_mu = 0.0;
    std::vector<std::size_t> optimal_sizes;  // distinct |O| over critical states

    // supp-mu / epsilon intermediates
    double alpha = 0.0;
    double beta_tilde = 0.0;
    std::vector<double> beta, gamma, kappa;  // h = 1..N
    std::vector<double> x_star;              // epsilon: x*(gamma_N, eps, M) per entry of optimal_sizes

    // unique-opt intermediates
    double b = 0.0, b0 = 0.0, delta0 = 0.0;
    FixedPoint x_l, x_u;

    // outputs
    double optimal_mass_bound = 0.0;  // lower bound on lim inf min pi_n(O | s)
    double policy_bound = 0.0;
    double q_bound = 0.0;
    double v_bound = 0.0;
    double j_bound = 0.0;
    double rate = 0.0;

    bool valid = true;
    std::vector<std::string> violations;

    void flag(std::string what) {
        valid = false;
        violations.push_back(std::move(what));
    }

    /// Outputs carry no meaning once a premise fails.
    void void_outputs_if_invalid() {
        if (valid) return;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        optimal_mass_bound = policy_bound = q_bound = v_bound = j_bound = rate = nan;
    }
};

inline double alpha_constant(std::size_t N, double min_mu, AlphaForm form = AlphaForm::NNPlus1) {
    const double n = double(N);
    const double denom = form == AlphaForm::NNPlus1 ? n * (n + 1.0) : n * (n - 1.0);
    if (!(denom > 0.0)) throw DomainError("alpha with the N(N-1) denominator is undefined at N = 1");
    return 2.0 / denom * min_mu;
}

/// alpha = 2 / (N(N+1)) min over critical states of mu_bar; needs the critical set inside supp mu_bar.
inline double alpha_visitation(const BoundContext& ctx, AlphaForm form = AlphaForm::NNPlus1) {
    if (!ctx.critical_in_support) throw PremiseViolated("critical states are not contained in supp mu_bar");
    return alpha_constant(ctx.horizon, ctx.min_mu_critical, form);
}

inline double alpha_visitation(const CommandExtension& ce, const TransitionKernel& kernel0,
                               AlphaForm form = AlphaForm::NNPlus1) {
    return alpha_visitation(make_bound_context(ce, kernel0), form);
}

/// Regularized visitation constant; uses min over supp mu_bar.
inline double alpha_eps(const BoundContext& ctx, double delta, double eps, AlphaForm form = AlphaForm::NNPlus1) {
    const double N = double(ctx.horizon);
    return alpha_constant(ctx.horizon, ctx.min_mu_support, form) * std::pow(eps / double(ctx.num_actions), N) *
           std::pow(1.0 - delta / 2.0, N);
}

inline double alpha_eps(const CommandExtension& ce, const TransitionKernel& kernel0, double delta, double eps,
                        AlphaForm form = AlphaForm::NNPlus1) {
    return alpha_eps(make_bound_context(ce, kernel0), delta, eps, form);
}

namespace detail {

inline void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

inline void fill_inputs(BoundReport& r, const BoundContext& ctx, double delta, double eps) {
    r.delta = delta;
    r.epsilon = eps;
    r.horizon = ctx.horizon;
    r.num_actions = ctx.num_actions;
    r.optimal_sizes = ctx.distinct_optimal;
}

} // namespace detail

inline BoundReport supp_mu_bounds(const BoundContext& ctx, double delta, AlphaForm form = AlphaForm::NNPlus1) {
    detail::check_delta(delta);
    BoundReport r;
    r.variant = BoundVariant::SuppMu;
    r.alpha_form = form;
    detail::fill_inputs(r, ctx, delta, 0.0);
    r.min_mu = ctx.min_mu_critical;
    r.alpha = alpha_visitation(ctx, form);
    const std::size_t N = ctx.horizon;
    r.beta_tilde = double(N) * delta / 2.0;
    for (std::size_t h = 1; h <= N; ++h) {
        const double beta =
            h == 1 ? std::max(delta, r.beta_tilde) : delta + r.kappa.back() + r.beta.back();
        const double gamma = r.beta_tilde / ((1.0 - beta) * r.alpha);
        r.beta.push_back(beta);
        r.gamma.push_back(gamma);
        r.kappa.push_back(2.0 * gamma);  // 2 (1 - x*(gamma)) with x* = 1 - gamma
        if (!(beta > 0.0 && beta < 1.0)) r.flag("beta_" + std::to_string(h) + " outside (0, 1)");
        if (!(gamma > 0.0 && gamma < 1.0)) r.flag("gamma_" + std::to_string(h) + " outside (0, 1)");
    }
    const double gN = r.gamma.back(), bN = r.beta.back(), kN = r.kappa.back();
    r.optimal_mass_bound = 1.0 - gN;
    r.policy_bound = kN;
    r.q_bound = bN;
    r.v_bound = bN + kN;
    r.j_bound = r.beta_tilde + bN + kN;
    r.rate = gN;  // gamma' / (x*(gamma') + gamma')^2 = gamma' in the limit gamma' -> gamma_N
    r.void_outputs_if_invalid();
    return r;
}

inline BoundReport supp_mu_bounds(const CommandExtension& ce, const TransitionKernel& kernel0, double delta,
                                  AlphaForm form = AlphaForm::NNPlus1) {
    return supp_mu_bounds(make_bound_context(ce, kernel0), delta, form);
}

/// b(delta) = delta N^2 (N+1) / (4 (1 - delta/2)^{2N} min_{supp mu_bar} mu_bar).
inline double unique_opt_b(std::size_t N, double min_mu, double delta) {
    const double n = double(N);
    return delta * n * n * (n + 1.0) / (4.0 * std::pow(1.0 - delta / 2.0, 2.0 * n) * min_mu);
}

/// Root of b(delta) = b0 on (1e-15, 2 / (N+1)] by bisection.
inline double unique_opt_delta0(std::size_t N, double min_mu) {
    const double b0 = h_b0(N);
    double lo = 1e-15, hi = 2.0 / (double(N) + 1.0);
    if (unique_opt_b(N, min_mu, lo) >= b0) return lo;
    if (unique_opt_b(N, min_mu, hi) <= b0) return hi;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (unique_opt_b(N, min_mu, mid) < b0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline BoundReport unique_opt_bounds(const BoundContext& ctx, double delta) {
    detail::check_delta(delta);
    if (ctx.max_optimal > 1) throw PremiseViolated("some critical state has more than one optimal action");
    BoundReport r;
    r.variant = BoundVariant::UniqueOpt;
    detail::fill_inputs(r, ctx, delta, 0.0);
    const std::size_t N = ctx.horizon;
    const double n = double(N);
    r.min_mu = ctx.min_mu_support;
    r.beta_tilde = n * delta / 2.0;
    r.b0 = h_b0(N);
    r.delta0 = unique_opt_delta0(N, r.min_mu);
    r.b = unique_opt_b(N, r.min_mu, delta);
    if (!(delta < r.delta0) || !(r.b < r.b0)) {
        r.flag("delta >= delta0");
        r.void_outputs_if_invalid();
        return r;
    }
    const HFixedPoints fp = h_fixed_points(r.b, N);
    r.x_l = fp.lower;
    r.x_u = fp.upper;
    const double xu = fp.upper.value;
    r.optimal_mass_bound = xu;
    r.policy_bound = 2.0 * (1.0 - xu);
    r.v_bound = 1.0 - std::pow(1.0 - delta / 2.0, n) * std::pow(xu, n);
    r.j_bound = r.beta_tilde + r.v_bound;
    r.q_bound = r.v_bound;
    const double p = std::pow(xu, 2.0 * n);
    r.rate = 2.0 * n * r.b * std::pow(xu, 2.0 * n - 1.0) / ((p + r.b) * (p + r.b));
    return r;
}

inline BoundReport unique_opt_bounds(const CommandExtension& ce, const TransitionKernel& kernel0, double delta) {
    return unique_opt_bounds(make_bound_context(ce, kernel0), delta);
}

/// True iff pi0(O(s) | s) > x_l on every critical state.
inline bool unique_opt_gate(const BoundContext& ctx, const PolicyTensor& policy0, double x_l) {
    return optimal_mass(policy0, ctx.reference.optimal, ctx.reference.critical) > x_l;
}

inline BoundReport eps_bounds(const BoundContext& ctx, double delta, double eps, AlphaForm form = AlphaForm::NNPlus1) {
    detail::check_delta(delta);
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    BoundReport r;
    r.variant = BoundVariant::Epsilon;
    r.alpha_form = form;
    detail::fill_inputs(r, ctx, delta, eps);
    r.min_mu = ctx.min_mu_support;
    r.alpha = alpha_eps(ctx, delta, eps, form);
    const std::size_t N = ctx.horizon;
    const double A = double(ctx.num_actions);
    const double keep = std::pow(1.0 - eps, double(N));
    r.beta_tilde = double(N) * delta / 2.0;

    auto kappa_term = [&](double gamma, std::size_t M) {
        const double m = double(M);
        return 2.0 * (1.0 - eps * (1.0 - m / A) - z_fixed_point_value(gamma, eps, m, A));
    };
    for (std::size_t h = 1; h <= N; ++h) {
        const double beta =
            h == 1 ? std::max(delta, r.beta_tilde) : delta + r.kappa.back() + r.beta.back();
        const double gamma = r.beta_tilde / ((keep - beta) * r.alpha);
        // Max over critical states with horizon h; over every |O| if none has it.
        double kappa = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < ctx.critical_horizon.size(); ++i)
            if (ctx.critical_horizon[i] == h) {
                kappa = std::max(kappa, kappa_term(gamma, ctx.critical_optimal[i]));
                any = true;
            }
        if (!any)
            for (std::size_t M : ctx.distinct_optimal) kappa = std::max(kappa, kappa_term(gamma, M));
        r.beta.push_back(beta);
        r.gamma.push_back(gamma);
        r.kappa.push_back(kappa);
        if (!(beta > 0.0 && beta < 1.0)) r.flag("beta_" + std::to_string(h) + " outside (0, 1)");
        if (!(keep > beta)) r.flag("(1 - eps)^N <= beta_" + std::to_string(h));
        if (!(gamma > 0.0 && gamma < 1.0)) r.flag("gamma_" + std::to_string(h) + " outside (0, 1)");
        else if (!(gamma + eps < 1.0)) r.flag("gamma_" + std::to_string(h) + " + eps >= 1");
    }
    const double gN = r.gamma.back(), bN = r.beta.back(), kN = r.kappa.back();
    r.optimal_mass_bound = 1.0;
    r.rate = 0.0;
    for (std::size_t M : ctx.distinct_optimal) {
        const double x = z_fixed_point_value(gN, eps, double(M), A);
        r.x_star.push_back(x);
        r.optimal_mass_bound = std::min(r.optimal_mass_bound, x);
        r.rate = std::max(r.rate, (1.0 - eps) * gN / ((x + gN) * (x + gN)));
    }
    r.policy_bound = kN;
    r.q_bound = bN;
    r.v_bound = bN + kN;
    r.j_bound = r.beta_tilde + bN + kN;
    r.void_outputs_if_invalid();
    return r;
}

inline BoundReport eps_bounds(const CommandExtension& ce, const TransitionKernel& kernel0, double delta, double eps,
                              AlphaForm form = AlphaForm::NNPlus1) {
    return eps_bounds(make_bound_context(ce, kernel0), delta, eps, form);
}

/// Theoretical limit of the optimal-mass bound as delta -> 0.
inline double bound_limit(const BoundContext& ctx, double eps = 0.0) {
    double m = 1.0;
    for (std::size_t M : ctx.distinct_optimal)
        m = std::min(m, 1.0 - eps * (1.0 - double(M) / double(ctx.num_actions)));
    return m;
}

} // namespace udrl
