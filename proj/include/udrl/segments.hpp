// Segment distribution of a command extension.
//
// A segment starts at some transient extended state (s, h', g') visited at
// time t and has length 1 <= l <= h'. Its probability is the trajectory
// marginal of the covered window, summed over t and divided by the
// normalization constant c. The recursion only needs the marginals
//
//   num(a, s, h, g) = P(A0 = a, S0 = s, l = h, rho(S_h) = g)
//   den(s, h, g)    = sum_a num(a, s, h, g)
//
// which factor through the aggregated visitation M and the reach
// probabilities W (see reach_probabilities). The brute-force enumerator at
// the bottom of the file is the independent oracle for tiny instances.

#pragma once

#include "udrl/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace udrl {

/// Which part of the segment space the recursion is fitted on.
enum class SegmentSpace { Seg, Trail, Diag };

inline const char* to_string(SegmentSpace space) {
    switch (space) {
    case SegmentSpace::Seg: return "seg";
    case SegmentSpace::Trail: return "trail";
    case SegmentSpace::Diag: return "diag";
    }
    return "?";
}

inline SegmentSpace parse_segment_space(const std::string& name) {
    if (name == "seg") return SegmentSpace::Seg;
    if (name == "trail") return SegmentSpace::Trail;
    if (name == "diag") return SegmentSpace::Diag;
    throw DomainError("unknown segment space '" + name + "' (expected seg, trail or diag)");
}

/// M(s, h, g) = sum_{t < N} P(S_t = s, H_t = h, G_t = g), transient states only.
struct StateVisitTensor {
    ExtendedShape shape;
    std::vector<double> m;

    double operator()(std::size_t s, std::size_t h, std::size_t g) const { return m[shape.index(s, h, g)]; }

    /// sum h * M(s, h, g): the number of segments, i.e. the constant c.
    double segment_mass() const {
        double c = 0.0;
        for (std::size_t e = 0; e < m.size(); ++e) c += double(shape.coords(e).h) * m[e];
        return c;
    }

    double total() const { return std::accumulate(m.begin(), m.end(), 0.0); }
};

/// Forward dynamic program for the aggregated transient visitation.
inline StateVisitTensor forward_marginals(const CommandExtension& ce, const TransitionKernel& kernel,
                                          const PolicyTensor& policy) {
    ce.check_compatible(kernel);
    const auto& shape = ce.shape();
    const std::size_t A = ce.num_actions();

    StateVisitTensor out{shape, std::vector<double>(shape.size(), 0.0)};
    std::vector<double> current = ce.mu_bar();
    std::vector<double> next(shape.size());
    for (std::size_t t = 0; t < shape.horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        bool any = false;
        for (std::size_t e = 0; e < shape.size(); ++e) {
            const double p = current[e];
            if (p == 0.0) continue;
            any = true;
            out.m[e] += p;
            const auto [s, h, g] = shape.coords(e);
            if (h == 1) continue;  // the next state is absorbing
            for (std::size_t a = 0; a < A; ++a) {
                const double pa = p * policy(e, a);
                if (pa == 0.0) continue;
                for (const auto& [s2, q] : kernel.support(s, a)) next[shape.index(s2, h - 1, g)] += pa * q;
            }
        }
        if (!any) break;
        std::swap(current, next);
    }
    return out;
}

namespace detail {

/// W_k(s, h'', g') = P(rho(S_k) = goal | S0 = s, H0 = h'', G0 = g') for one
/// target goal, k = 0..N-1 and h'' = 0..N. Once the horizon hits zero the
/// state is frozen, so W_k(s, 0, .) = 1{rho(s) = goal}.
class GoalReachTable {
public:
    GoalReachTable(const CommandExtension& ce, const TransitionKernel& kernel, const PolicyTensor& policy,
                   std::size_t goal)
        : S_(ce.num_states()), N_(ce.horizon()), G_(ce.num_goals()) {
        const auto& shape = ce.shape();
        const std::size_t A = ce.num_actions();
        table_.assign(N_ * S_ * (N_ + 1) * G_, 0.0);
        for (std::size_t s = 0; s < S_; ++s) {
            const double hit = ce.goal_of(s) == goal ? 1.0 : 0.0;
            for (std::size_t hh = 0; hh <= N_; ++hh)
                for (std::size_t gp = 0; gp < G_; ++gp) {
                    at(0, s, hh, gp) = hit;
                    for (std::size_t k = 1; k < N_; ++k) at(k, s, 0, gp) = hit;
                }
        }
        for (std::size_t k = 1; k < N_; ++k)
            for (std::size_t s = 0; s < S_; ++s)
                for (std::size_t hh = 1; hh <= N_; ++hh)
                    for (std::size_t gp = 0; gp < G_; ++gp) {
                        const std::size_t e = shape.index(s, hh, gp);
                        double acc = 0.0;
                        for (std::size_t a = 0; a < A; ++a) {
                            const double pa = policy(e, a);
                            if (pa == 0.0) continue;
                            double inner = 0.0;
                            for (const auto& [s2, q] : kernel.support(s, a)) inner += q * at(k - 1, s2, hh - 1, gp);
                            acc += pa * inner;
                        }
                        at(k, s, hh, gp) = acc;
                    }
    }

    double operator()(std::size_t k, std::size_t s, std::size_t hh, std::size_t gp) const {
        return table_[((k * S_ + s) * (N_ + 1) + hh) * G_ + gp];
    }

private:
    double& at(std::size_t k, std::size_t s, std::size_t hh, std::size_t gp) {
        return table_[((k * S_ + s) * (N_ + 1) + hh) * G_ + gp];
    }

    std::size_t S_, N_, G_;
    std::vector<double> table_;
};

/// sum_{s'} lambda(s' | s, a) W_{h-1}(s', h' - 1, g')
inline double reach_after_action(const TransitionKernel& kernel, const GoalReachTable& w, std::size_t a,
                                 std::size_t s, std::size_t h_start, std::size_t g_start, std::size_t h) {
    double acc = 0.0;
    for (const auto& [s2, q] : kernel.support(s, a)) acc += q * w(h - 1, s2, h_start - 1, g_start);
    return acc;
}

} // namespace detail

/// r(a, s, h', g', h, g) = P(rho(S_h) = g | A0 = a, S0 = s, H0 = h', G0 = g')
/// for 1 <= h <= h' <= N.
class ReachProbTensor {
public:
    ReachProbTensor(ExtendedShape shape, std::size_t num_actions)
        : shape_(shape), A_(num_actions),
          r_(num_actions * shape.num_states * shape.horizon * shape.num_goals * shape.horizon * shape.num_goals,
             0.0) {}

    double operator()(std::size_t a, std::size_t s, std::size_t h_start, std::size_t g_start, std::size_t h,
                      std::size_t g) const {
        return r_[flat(a, s, h_start, g_start, h, g)];
    }

    const ExtendedShape& shape() const { return shape_; }
    std::size_t num_actions() const { return A_; }

    void set(std::size_t a, std::size_t s, std::size_t h_start, std::size_t g_start, std::size_t h, std::size_t g,
             double v) {
        r_[flat(a, s, h_start, g_start, h, g)] = v;
    }

private:
    std::size_t flat(std::size_t a, std::size_t s, std::size_t h_start, std::size_t g_start, std::size_t h,
                     std::size_t g) const {
        if (h < 1 || h > h_start || h_start > shape_.horizon)
            throw IndexError("reach probability requested with h outside 1..h'");
        const std::size_t N = shape_.horizon, G = shape_.num_goals;
        return ((((a * shape_.num_states + s) * N + (h_start - 1)) * G + g_start) * N + (h - 1)) * G + g;
    }

    ExtendedShape shape_;
    std::size_t A_;
    std::vector<double> r_;
};

/// Backward dynamic program for the reach probabilities, one goal at a time.
inline ReachProbTensor reach_probabilities(const CommandExtension& ce, const TransitionKernel& kernel,
                                           const PolicyTensor& policy) {
    ce.check_compatible(kernel);
    const std::size_t S = ce.num_states(), N = ce.horizon(), G = ce.num_goals(), A = ce.num_actions();
    ReachProbTensor out(ce.shape(), A);
    for (std::size_t g = 0; g < G; ++g) {
        detail::GoalReachTable w(ce, kernel, policy, g);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t hs = 1; hs <= N; ++hs)
                    for (std::size_t gs = 0; gs < G; ++gs)
                        for (std::size_t h = 1; h <= hs; ++h)
                            out.set(a, s, hs, gs, h, g, detail::reach_after_action(kernel, w, a, s, hs, gs, h));
    }
    return out;
}

/// Numerator, denominator, normalization and visitation of one (kernel, policy) pair.
///
/// All three spaces report joint probabilities under the full segment law
/// (normalized by the Seg-space c); Trail/Diag additionally restrict to the
/// trailing/diagonal event. Ratios num/den are therefore the conditionals
/// each recursion is fitted to.
struct SegmentStats {
    ExtendedShape shape;
    std::size_t num_actions = 0;
    SegmentSpace space = SegmentSpace::Seg;
    std::vector<double> num;  // (ext, a)
    std::vector<double> den;  // ext
    double c = 0.0;
    std::vector<double> nu;   // ext

    double numerator(std::size_t ext, std::size_t a) const { return num[ext * num_actions + a]; }
    double numerator(std::size_t a, std::size_t s, std::size_t h, std::size_t g) const {
        return numerator(shape.index(s, h, g), a);
    }
    double denominator(std::size_t s, std::size_t h, std::size_t g) const { return den[shape.index(s, h, g)]; }
    double visitation(std::size_t s, std::size_t h, std::size_t g) const { return nu[shape.index(s, h, g)]; }
};

inline SegmentStats segment_stats(const CommandExtension& ce, const TransitionKernel& kernel,
                                  const PolicyTensor& policy, SegmentSpace space = SegmentSpace::Seg) {
    ce.check_compatible(kernel);
    const auto& shape = ce.shape();
    const std::size_t S = ce.num_states(), N = ce.horizon(), G = ce.num_goals(), A = ce.num_actions();

    const StateVisitTensor visits = forward_marginals(ce, kernel, policy);
    SegmentStats out;
    out.shape = shape;
    out.num_actions = A;
    out.space = space;
    out.num.assign(shape.size() * A, 0.0);
    out.den.assign(shape.size(), 0.0);
    out.c = visits.segment_mass();
    out.nu = visits.m;
    const double total = visits.total();
    for (double& v : out.nu) v /= total;

    for (std::size_t g = 0; g < G; ++g) {
        detail::GoalReachTable w(ce, kernel, policy, g);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t h = 1; h <= N; ++h) {
                const std::size_t target = shape.index(s, h, g);
                const std::size_t h_hi = space == SegmentSpace::Seg ? N : h;
                for (std::size_t hs = h; hs <= h_hi; ++hs)
                    for (std::size_t gs = 0; gs < G; ++gs) {
                        if (space == SegmentSpace::Diag && gs != g) continue;
                        const std::size_t start = shape.index(s, hs, gs);
                        const double mass = visits.m[start];
                        if (mass == 0.0) continue;
                        for (std::size_t a = 0; a < A; ++a) {
                            const double pa = policy(start, a);
                            if (pa == 0.0) continue;
                            out.num[target * A + a] +=
                                mass * pa * detail::reach_after_action(kernel, w, a, s, hs, gs, h);
                        }
                    }
            }
    }
    for (std::size_t e = 0; e < shape.size(); ++e) {
        double d = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            out.num[e * A + a] /= out.c;
            d += out.num[e * A + a];
        }
        out.den[e] = d;
    }
    return out;
}

/// P(H0 = h, G0 = g | S0 = s, l = h): the weight the recursion gives to the
/// command that was actually issued among all commands whose segments of
/// length h start at s. Zero when no such segment exists.
inline double issued_command_weight(const SegmentStats& stats, std::size_t s, std::size_t h, std::size_t g) {
    const auto& shape = stats.shape;
    double all = 0.0;
    for (std::size_t hs = h; hs <= shape.horizon; ++hs)
        for (std::size_t gs = 0; gs < shape.num_goals; ++gs) all += stats.nu[shape.index(s, hs, gs)];
    return all > 0.0 ? stats.nu[shape.index(s, h, g)] / all : 0.0;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Default cap on |S|^N |A|^N N |G| for exhaustive enumeration.
inline constexpr double kDefaultEnumerationCap = 1e7;

/// Segment encoded as {l, s0, h0, g0, a0, s1, a1, ..., s_l}.
using SegmentKey = std::vector<std::size_t>;

/// Unnormalized segment weights (summed over start times) and their total c.
struct SegmentLaw {
    std::map<SegmentKey, double> weight;
    double c = 0.0;

    double probability(const SegmentKey& key) const {
        auto it = weight.find(key);
        return it == weight.end() ? 0.0 : it->second / c;
    }
};

namespace detail {

inline void check_enumeration_cap(const CommandExtension& ce, double cap) {
    const double N = double(ce.horizon());
    const double terms = std::pow(double(ce.num_states()), N) * std::pow(double(ce.num_actions()), N) * N *
                         double(ce.num_goals());
    if (terms > cap)
        throw CapacityExceeded("exhaustive segment enumeration needs " + std::to_string(terms) +
                               " terms (cap " + std::to_string(cap) + ")");
}

struct TrajectoryWalker {
    const CommandExtension& ce;
    const TransitionKernel& kernel;
    const PolicyTensor& policy;
    SegmentLaw& law;
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    std::size_t h0 = 0, g0 = 0;

    void emit(double prob) {
        // Every window [t, t + l] with t + l <= h0 is a segment.
        for (std::size_t t = 0; t < h0; ++t)
            for (std::size_t l = 1; t + l <= h0; ++l) {
                SegmentKey key{l, states[t], h0 - t, g0};
                for (std::size_t i = 0; i < l; ++i) {
                    key.push_back(actions[t + i]);
                    key.push_back(states[t + i + 1]);
                }
                law.weight[key] += prob;
                law.c += prob;
            }
    }

    void extend(double prob) {
        const std::size_t t = actions.size();
        if (t == h0) {
            emit(prob);
            return;
        }
        const std::size_t s = states.back();
        const std::size_t e = ce.shape().index(s, h0 - t, g0);
        for (std::size_t a = 0; a < ce.num_actions(); ++a) {
            const double pa = policy(e, a);
            if (pa == 0.0) continue;
            for (const auto& [s2, q] : kernel.support(s, a)) {
                actions.push_back(a);
                states.push_back(s2);
                extend(prob * pa * q);
                states.pop_back();
                actions.pop_back();
            }
        }
    }
};

} // namespace detail

/// Enumerates every trajectory and every contained segment.
inline SegmentLaw enumerate_segment_law(const CommandExtension& ce, const TransitionKernel& kernel,
                                        const PolicyTensor& policy, double cap = kDefaultEnumerationCap) {
    ce.check_compatible(kernel);
    detail::check_enumeration_cap(ce, cap);
    SegmentLaw law;
    detail::TrajectoryWalker walker{ce, kernel, policy, law, {}, {}};
    const auto& shape = ce.shape();
    for (std::size_t e = 0; e < shape.size(); ++e) {
        const double p0 = ce.mu_bar()[e];
        if (p0 == 0.0) continue;
        const auto [s, h, g] = shape.coords(e);
        walker.states = {s};
        walker.actions.clear();
        walker.h0 = h;
        walker.g0 = g;
        walker.extend(p0);
    }
    return law;
}

/// Segment statistics obtained by summing the enumerated law directly.
inline SegmentStats brute_force_segment_dist(const CommandExtension& ce, const TransitionKernel& kernel,
                                             const PolicyTensor& policy, SegmentSpace space = SegmentSpace::Seg,
                                             double cap = kDefaultEnumerationCap) {
    const SegmentLaw law = enumerate_segment_law(ce, kernel, policy, cap);
    const auto& shape = ce.shape();
    const std::size_t A = ce.num_actions();
    SegmentStats out;
    out.shape = shape;
    out.num_actions = A;
    out.space = space;
    out.c = law.c;
    out.num.assign(shape.size() * A, 0.0);
    out.den.assign(shape.size(), 0.0);
    out.nu.assign(shape.size(), 0.0);
    double visits = 0.0;
    for (const auto& [key, w] : law.weight) {
        const std::size_t l = key[0], s0 = key[1], h0 = key[2], g0 = key[3], a0 = key[4];
        const std::size_t reached = ce.goal_of(key.back());
        // A segment of length 1 marks one visit of its start state.
        if (l == 1) {
            out.nu[shape.index(s0, h0, g0)] += w;
            visits += w;
        }
        if (space != SegmentSpace::Seg && l != h0) continue;
        if (space == SegmentSpace::Diag && reached != g0) continue;
        out.num[shape.index(s0, l, reached) * A + a0] += w / law.c;
    }
    for (auto& v : out.nu) v /= visits;
    for (std::size_t e = 0; e < shape.size(); ++e)
        for (std::size_t a = 0; a < A; ++a) out.den[e] += out.num[e * A + a];
    return out;
}

/// Largest deviation of the enumerated law's conditionals from the policy
/// and kernel: P(A_i | l, prefix up to S_i) against pi(a_i | s_i, h0 - i, g0)
/// and P(S_i | l, prefix up to A_{i-1}) against lambda(s_i | s_{i-1}, a_{i-1}).
inline double markovianity_residual(const SegmentLaw& law, const CommandExtension& ce,
                                    const TransitionKernel& kernel, const PolicyTensor& policy) {
    // Prefix masses for every prefix length of every segment.
    std::map<SegmentKey, double> prefix_mass;
    for (const auto& [key, w] : law.weight)
        for (std::size_t len = 5; len <= key.size(); ++len)
            prefix_mass[SegmentKey(key.begin(), key.begin() + std::ptrdiff_t(len))] += w;
    // Prefixes ending in s0 (length 4) also needed as conditioning events.
    for (const auto& [key, w] : law.weight) prefix_mass[SegmentKey(key.begin(), key.begin() + 4)] += w;

    double worst = 0.0;
    for (const auto& [prefix, w] : prefix_mass) {
        if (prefix.size() < 5) continue;
        const std::size_t h0 = prefix[2], g0 = prefix[3];
        const SegmentKey parent(prefix.begin(), prefix.end() - 1);
        const double cond = w / prefix_mass.at(parent);
        // Layout: {l, s0, h0, g0, a0, s1, a1, s2, ...}.
        auto state_at = [&](std::size_t i) { return i == 0 ? prefix[1] : prefix[3 + 2 * i]; };
        const bool ends_in_action = (prefix.size() - 4) % 2 == 1;
        double expected;
        if (ends_in_action) {
            const std::size_t i = (prefix.size() - 5) / 2;
            expected = policy(ce.shape().index(state_at(i), h0 - i, g0), prefix.back());
        } else {
            const std::size_t i = (prefix.size() - 6) / 2;
            expected = kernel(state_at(i), prefix[4 + 2 * i], prefix.back());
        }
        worst = std::max(worst, std::abs(cond - expected));
    }
    return worst;
}

} // namespace udrl
