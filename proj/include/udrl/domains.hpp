// Built-in example environments. Each comes as a command extension, a kernel
// ray alpha -> lambda_alpha with lambda_0 deterministic (or the boundary
// kernel for the first three-state example), and reference values.

#pragma once

#include "udrl/core.hpp"

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace udrl {

enum class Provenance { Published, Derived, Trivial };

inline const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::Published: return "published";
    case Provenance::Derived: return "derived";
    case Provenance::Trivial: return "trivial";
    }
    return "?";
}

/// A reference value for a quantity of the eUDRL iteration started from the
/// uniform policy in the Seg space.
///
/// quantity: "J" (objective of pi_steps), "pi" (pi_steps(action | s, h, goal)),
/// "V" (V^{pi_steps}(s, h, goal)).
struct GroundTruth {
    std::string quantity;
    double alpha = 0.0;
    std::size_t steps = 2;
    std::size_t state = 0;
    std::size_t horizon = 1;
    std::size_t goal = 0;
    std::size_t action = 0;
    double value = 0.0;
    double tolerance = 1e-10;
    Provenance provenance = Provenance::Published;
    std::string where;  // which table / statement the value comes from
};

struct DomainSpec {
    std::string name;
    std::vector<std::pair<std::string, std::string>> parameters;
    double delta_per_alpha = 2.0;  // kernel_distance(ray(alpha), ray(0)) = delta_per_alpha * alpha
    std::vector<GroundTruth> ground_truth;
};

struct Domain {
    DomainSpec spec;
    CommandExtension ce;
    KernelRay ray;

    double alpha_for_delta(double delta) const { return delta / spec.delta_per_alpha; }
};

// ---------------------------------------------------------------------------
// Three-state examples
// ---------------------------------------------------------------------------

enum class ThreeStateExample { Boundary, Deterministic };
enum class ThreeStateRay { A, C };

namespace detail {

/// Kernel with the given rows for state 0 and self-loops on states 1, 2.
inline TransitionKernel three_state_kernel(const std::array<std::array<double, 3>, 3>& rows) {
    return TransitionKernel::from_function(3, 3, [&](std::size_t s, std::size_t a, std::size_t n) {
        if (s == 0) return rows[a][n];
        return n == s ? 1.0 : 0.0;
    });
}

inline std::array<std::array<double, 3>, 3> three_state_rows(ThreeStateExample ex, ThreeStateRay ray, double x) {
    if (ex == ThreeStateExample::Boundary) {
        if (ray == ThreeStateRay::A)
            return {{{1 - x, x / 4, 3 * x / 4}, {3 * x / 4, 1 - x, x / 4}, {0.5, 0.5, 0.0}}};
        return {{{1 - x, 3 * x / 4, x / 4}, {x / 4, 1 - x, 3 * x / 4}, {0.5, 0.5, 0.0}}};
    }
    if (ray == ThreeStateRay::A) return {{{1 - x, x, 0.0}, {0.0, 1 - x, x}, {x, 1 - x, 0.0}}};
    return {{{1 - x, 0.0, x}, {x, 1 - x, 0.0}, {0.0, 1 - x, x}}};
}

inline GroundTruth gt_pi(double alpha, std::size_t goal, std::size_t action, double value, double tol,
                         std::string where) {
    GroundTruth g;
    g.quantity = "pi";
    g.alpha = alpha;
    g.goal = goal;
    g.action = action;
    g.value = value;
    g.tolerance = tol;
    g.where = std::move(where);
    return g;
}

inline GroundTruth gt_scalar(std::string quantity, double alpha, std::size_t goal, double value, double tol,
                             std::string where, std::size_t steps = 2) {
    GroundTruth g;
    g.quantity = std::move(quantity);
    g.alpha = alpha;
    g.goal = goal;
    g.value = value;
    g.tolerance = tol;
    g.steps = steps;
    g.where = std::move(where);
    return g;
}

inline void add_pi_column(std::vector<GroundTruth>& out, double alpha, std::size_t goal, std::array<double, 3> col,
                          double tol, const std::string& where, std::size_t steps = 2) {
    for (std::size_t a = 0; a < 3; ++a) {
        auto g = gt_pi(alpha, goal, a, col[a], tol, where);
        g.steps = steps;
        out.push_back(g);
    }
}

} // namespace detail

/// Limit values along the rays are checked at this alpha.
inline constexpr double kLimitAlpha = 1e-6;

inline Domain three_state_domain(ThreeStateExample ex, ThreeStateRay ray) {
    const bool boundary = ex == ThreeStateExample::Boundary;
    std::vector<double> cmd(3 * 2 * 3, 0.0);  // (s, h in 0..1, g)
    if (boundary) {
        cmd[3 + 0] = 0.5;
        cmd[3 + 2] = 0.5;
    } else {
        for (std::size_t g = 0; g < 3; ++g) cmd[3 + g] = 1.0 / 3.0;
    }
    auto make = [ex, ray](double x) { return detail::three_state_kernel(detail::three_state_rows(ex, ray, x)); };
    FiniteMdp mdp(make(0.0), {1.0, 0.0, 0.0});
    CommandExtension ce = build_ce(mdp, {0, 1, 2}, 3, 1, cmd);

    const std::string ray_name = ray == ThreeStateRay::A ? "A" : "C";
    RayFamily fam = boundary ? (ray == ThreeStateRay::A ? RayFamily::BoundaryA : RayFamily::BoundaryC)
                             : (ray == ThreeStateRay::A ? RayFamily::DeterministicA : RayFamily::DeterministicC);
    Domain d{{}, std::move(ce), KernelRay(fam, 2.0, make)};
    d.spec.name = std::string(boundary ? "three_state_boundary_" : "three_state_deterministic_") +
                  (ray == ThreeStateRay::A ? "a" : "c");
    d.spec.parameters = {{"example", boundary ? "boundary" : "deterministic"}, {"ray", ray_name}};
    d.spec.delta_per_alpha = 2.0;

    auto& gt = d.spec.ground_truth;
    const double lim = kLimitAlpha, lt = 1e-4;
    if (boundary) {
        gt.push_back(detail::gt_scalar("J", 0.0, 0, 7.0 / 16.0, 1e-12, "objective at the boundary kernel"));
        gt.push_back(detail::gt_scalar("V", 0.0, 0, 7.0 / 8.0, 1e-12, "value at the boundary kernel, g=0"));
        gt.push_back(detail::gt_scalar("V", 0.0, 2, 0.0, 1e-12, "value at the boundary kernel, g=2"));
        detail::add_pi_column(gt, 0.0, 0, {3.0 / 4.0, 0.0, 1.0 / 4.0}, 1e-12, "pi_2 at the boundary kernel, g=0");
        if (ray == ThreeStateRay::A) {
            gt.push_back(detail::gt_scalar("J", lim, 0, 9.0 / 19.0, lt, "objective, ray A limit"));
            gt.push_back(detail::gt_scalar("V", lim, 0, 18.0 / 19.0, lt, "value, ray A limit, g=0"));
            gt.push_back(detail::gt_scalar("V", lim, 2, 0.0, lt, "value, ray A limit, g=2"));
            detail::add_pi_column(gt, lim, 0, {17.0 / 19.0, 0.0, 2.0 / 19.0}, lt, "pi_2, ray A limit, g=0");
            detail::add_pi_column(gt, lim, 1, {0.0, 3.0 / 5.0, 2.0 / 5.0}, lt, "pi_2, ray A limit, g=1");
            detail::add_pi_column(gt, lim, 2, {3.0 / 4.0, 1.0 / 4.0, 0.0}, lt, "pi_1, ray A limit, g=2", 1);
        } else {
            gt.push_back(detail::gt_scalar("J", lim, 0, 6.0 / 13.0, lt, "objective, ray C limit"));
            gt.push_back(detail::gt_scalar("V", lim, 0, 12.0 / 13.0, lt, "value, ray C limit, g=0"));
            gt.push_back(detail::gt_scalar("V", lim, 2, 0.0, lt, "value, ray C limit, g=2"));
            detail::add_pi_column(gt, lim, 0, {11.0 / 13.0, 0.0, 2.0 / 13.0}, lt, "pi_2, ray C limit, g=0");
            detail::add_pi_column(gt, lim, 1, {0.0, 9.0 / 11.0, 2.0 / 11.0}, lt, "pi_2, ray C limit, g=1");
        }
    } else {
        for (double a : {0.0, lim}) {
            const double tol = a == 0.0 ? 1e-12 : lt;
            gt.push_back(detail::gt_scalar("J", a, 0, 2.0 / 3.0, tol, "objective"));
            gt.push_back(detail::gt_scalar("V", a, 0, 1.0, tol, "value, g=0"));
            gt.push_back(detail::gt_scalar("V", a, 1, 1.0, tol, "value, g=1"));
            gt.push_back(detail::gt_scalar("V", a, 2, 0.0, tol, "value, g=2"));
        }
        const std::string at0 = "pi_2 at alpha = 0";
        detail::add_pi_column(gt, 0.0, 0, {1.0, 0.0, 0.0}, 1e-12, at0 + ", g=0");
        detail::add_pi_column(gt, 0.0, 1, {0.0, 0.5, 0.5}, 1e-12, at0 + ", g=1");
        detail::add_pi_column(gt, 0.0, 2, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1e-12, at0 + ", g=2");
        if (ray == ThreeStateRay::A) {
            detail::add_pi_column(gt, lim, 0, {1.0, 0.0, 0.0}, lt, "pi_2, ray A limit, g=0");
            detail::add_pi_column(gt, lim, 1, {0.0, 3.0 / 4.0, 1.0 / 4.0}, lt, "pi_2, ray A limit, g=1");
        } else {
            detail::add_pi_column(gt, lim, 0, {1.0, 0.0, 0.0}, lt, "pi_2, ray C limit, g=0");
            detail::add_pi_column(gt, lim, 1, {0.0, 1.0 / 3.0, 2.0 / 3.0}, lt, "pi_2, ray C limit, g=1");
            detail::add_pi_column(gt, lim, 2, {3.0 / 5.0, 0.0, 2.0 / 5.0}, lt, "pi_2, ray C limit, g=2");
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Bandit and random walk
// ---------------------------------------------------------------------------

inline Domain bandit() {
    auto make = [](double x) {
        return TransitionKernel::from_function(2, 2, [x](std::size_t s, std::size_t a, std::size_t n) {
            const bool stay = n == s;
            if (a == 0) return stay ? 1.0 - x : x;
            return stay ? x : 1.0 - x;
        });
    };
    std::vector<double> cmd(2 * 2 * 2, 0.0);
    cmd[2 + 0] = 0.5;
    cmd[2 + 1] = 0.5;
    CommandExtension ce = build_ce(FiniteMdp(make(0.0), {1.0, 0.0}), {0, 1}, 2, 1, cmd);
    Domain d{{}, std::move(ce), KernelRay(RayFamily::Bandit, 2.0, make)};
    d.spec.name = "bandit";
    d.spec.delta_per_alpha = 2.0;
    return d;
}

inline Domain z3_walk(std::size_t horizon = 8) {
    auto make = [](double x) {
        return TransitionKernel::from_function(3, 2, [x](std::size_t s, std::size_t a, std::size_t n) {
            const bool stay = n == s, step = n == (s + 1) % 3;
            const double p_stay = a == 0 ? 1.0 - x : x;
            return stay ? p_stay : step ? 1.0 - p_stay : 0.0;
        });
    };
    const std::size_t N = horizon, G = 3;
    std::vector<double> cmd(3 * (N + 1) * G, 0.0);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t h = 1; h <= N; ++h)
            for (std::size_t g = 0; g < G; ++g) cmd[(s * (N + 1) + h) * G + g] = 1.0 / double(N * G);
    std::vector<double> mu(3, 1.0 / 3.0);
    CommandExtension ce = build_ce(FiniteMdp(make(0.0), mu), {0, 1, 2}, G, N, cmd);
    Domain d{{}, std::move(ce), KernelRay(RayFamily::Z3Walk, 2.0, make)};
    d.spec.name = "z3_walk";
    d.spec.parameters = {{"horizon", std::to_string(N)}};
    d.spec.delta_per_alpha = 2.0;
    return d;
}

// ---------------------------------------------------------------------------
// Grid world
// ---------------------------------------------------------------------------

/// 3x3 grid, (row, col) coordinates, wall at (1, 2). Free cells are numbered
/// row-major: (0,0)=0 (0,1)=1 (0,2)=2 (1,0)=3 (1,1)=4 (2,0)=5 (2,1)=6 (2,2)=7.
/// Actions: 0 right, 1 left, 2 up, 3 down.
struct GridLayout {
    static constexpr std::size_t rows = 3, cols = 3;
    static constexpr std::size_t num_cells = 8;
    static constexpr std::size_t num_actions = 4;

    static bool is_wall(int r, int c) { return r == 1 && c == 2; }

    static std::optional<std::size_t> cell(int r, int c) {
        if (r < 0 || c < 0 || r >= int(rows) || c >= int(cols) || is_wall(r, c)) return std::nullopt;
        std::size_t idx = 0;
        for (int rr = 0; rr < int(rows); ++rr)
            for (int cc = 0; cc < int(cols); ++cc) {
                if (is_wall(rr, cc)) continue;
                if (rr == r && cc == c) return idx;
                ++idx;
            }
        return std::nullopt;
    }

    static std::pair<int, int> coords(std::size_t cell_index) {
        std::size_t idx = 0;
        for (int r = 0; r < int(rows); ++r)
            for (int c = 0; c < int(cols); ++c) {
                if (is_wall(r, c)) continue;
                if (idx++ == cell_index) return {r, c};
            }
        throw IndexError("grid cell index out of range");
    }

    /// Deterministic move-or-stay target.
    static std::size_t move(std::size_t from, std::size_t action) {
        static constexpr int dr[4] = {0, 0, -1, 1};
        static constexpr int dc[4] = {1, -1, 0, 0};
        const auto [r, c] = coords(from);
        auto to = cell(r + dr[action], c + dc[action]);
        return to ? *to : from;
    }
};

/// Noisy grid kernel: 1 - alpha to the deterministic target, alpha spread
/// uniformly over the other cells some action reaches in one step (target
/// gets everything if there are none).
inline TransitionKernel grid_kernel(double alpha) {
    using L = GridLayout;
    std::vector<double> p(L::num_cells * L::num_actions * L::num_cells, 0.0);
    for (std::size_t s = 0; s < L::num_cells; ++s) {
        std::set<std::size_t> available;
        for (std::size_t a = 0; a < L::num_actions; ++a) available.insert(L::move(s, a));
        for (std::size_t a = 0; a < L::num_actions; ++a) {
            const std::size_t target = L::move(s, a);
            double* row = p.data() + (s * L::num_actions + a) * L::num_cells;
            std::vector<std::size_t> others;
            for (std::size_t n : available)
                if (n != target) others.push_back(n);
            if (others.empty()) {
                row[target] = 1.0;
                continue;
            }
            row[target] = 1.0 - alpha;
            for (std::size_t n : others) row[n] += alpha / double(others.size());
        }
    }
    return TransitionKernel(L::num_cells, L::num_actions, std::move(p));
}

inline Domain gridworld_3x3() {
    const std::size_t S = GridLayout::num_cells, N = 4, G = S;
    std::vector<double> cmd(S * (N + 1) * G, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t h = 1; h <= N; ++h)
            for (std::size_t g = 0; g < G; ++g) cmd[(s * (N + 1) + h) * G + g] = 1.0 / double(N * G);
    std::vector<std::size_t> goal_map(S);
    for (std::size_t s = 0; s < S; ++s) goal_map[s] = s;
    CommandExtension ce =
        build_ce(FiniteMdp(grid_kernel(0.0), std::vector<double>(S, 1.0 / double(S))), goal_map, G, N, cmd);
    Domain d{{}, std::move(ce), KernelRay(RayFamily::GridWorld, 2.0, grid_kernel)};
    d.spec.name = "gridworld";
    d.spec.parameters = {{"horizon", "4"}, {"wall", "(1,2)"}};
    d.spec.delta_per_alpha = 2.0;
    return d;
}

/// Tuple length of the lifted grid world.
inline constexpr std::size_t kOdtTupleLength = 3;

/// Lifted grid world: states are the last three cells, the goal flags tuples
/// ending at (0, 2), and every episode starts at (start, start, start) with
/// command (h = 4, g = 1).
inline Domain odt_gridworld(std::pair<int, int> start) {
    const auto start_cell = GridLayout::cell(start.first, start.second);
    if (!start_cell) throw DomainError("start position is not a free grid cell");
    const std::size_t K = kOdtTupleLength, N = 4, G = 2;
    const std::size_t goal_cell = *GridLayout::cell(0, 2);
    TupleCodec codec{GridLayout::num_cells, K};
    const std::size_t T = codec.size();

    auto make = [K](double x) { return lift_kernel(grid_kernel(x), K); };
    std::vector<double> mu(T, 0.0);
    mu[codec.repeat(*start_cell)] = 1.0;
    std::vector<std::size_t> goal_map(T);
    for (std::size_t t = 0; t < T; ++t) goal_map[t] = codec.last(t) == goal_cell ? 1 : 0;
    std::vector<double> cmd(T * (N + 1) * G, 0.0);
    cmd[(codec.repeat(*start_cell) * (N + 1) + N) * G + 1] = 1.0;
    CommandExtension ce = build_ce(FiniteMdp(make(0.0), std::move(mu)), std::move(goal_map), G, N, std::move(cmd));
    Domain d{{}, std::move(ce), KernelRay(RayFamily::GridWorldLifted, 2.0, make)};
    d.spec.name = "odt_gridworld_" + std::to_string(start.first) + std::to_string(start.second);
    d.spec.parameters = {{"start", "(" + std::to_string(start.first) + "," + std::to_string(start.second) + ")"},
                         {"tuple_length", std::to_string(K)}};
    d.spec.delta_per_alpha = 2.0;
    return d;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline std::vector<std::string> domain_names() {
    return {"three_state_boundary_a", "three_state_boundary_c", "three_state_deterministic_a",
            "three_state_deterministic_c", "bandit", "z3_walk", "gridworld", "odt_gridworld_22", "odt_gridworld_20"};
}

inline Domain make_domain(const std::string& name) {
    if (name == "three_state_boundary_a") return three_state_domain(ThreeStateExample::Boundary, ThreeStateRay::A);
    if (name == "three_state_boundary_c") return three_state_domain(ThreeStateExample::Boundary, ThreeStateRay::C);
    if (name == "three_state_deterministic_a")
        return three_state_domain(ThreeStateExample::Deterministic, ThreeStateRay::A);
    if (name == "three_state_deterministic_c")
        return three_state_domain(ThreeStateExample::Deterministic, ThreeStateRay::C);
    if (name == "bandit") return bandit();
    if (name == "z3_walk") return z3_walk();
    if (name == "gridworld") return gridworld_3x3();
    if (name == "odt_gridworld_22") return odt_gridworld({2, 2});
    if (name == "odt_gridworld_20") return odt_gridworld({2, 0});
    throw DomainError("unknown domain '" + name + "'");
}

} // namespace udrl
