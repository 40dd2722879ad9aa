// Value functions, goal-reaching objective, optimal actions and critical
// states of a command extension.

#pragma once

#include "udrl/core.hpp"
#include "udrl/random.hpp"
#include "udrl/segments.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace udrl {

/// V(s, h, g) and Q((s, h, g), a) on the transient states.
struct ValueTables {
    ExtendedShape shape;
    std::size_t num_actions = 0;
    std::vector<double> v;  // ext
    std::vector<double> q;  // (ext, a)

    double value(std::size_t ext) const { return v[ext]; }
    double value(std::size_t s, std::size_t h, std::size_t g) const { return v[shape.index(s, h, g)]; }
    double action_value(std::size_t ext, std::size_t a) const { return q[ext * num_actions + a]; }
    double action_value(std::size_t s, std::size_t h, std::size_t g, std::size_t a) const {
        return action_value(shape.index(s, h, g), a);
    }
};

namespace detail {

/// Backward induction; `policy == nullptr` means greedy (optimal) backups.
inline ValueTables backward_induction(const CommandExtension& ce, const TransitionKernel& kernel,
                                      const PolicyTensor* policy) {
    ce.check_compatible(kernel);
    const auto& shape = ce.shape();
    const std::size_t S = ce.num_states(), N = ce.horizon(), G = ce.num_goals(), A = ce.num_actions();
    ValueTables out{shape, A, std::vector<double>(shape.size(), 0.0), std::vector<double>(shape.size() * A, 0.0)};

    auto value_before = [&](std::size_t s2, std::size_t h, std::size_t g) {
        return h == 0 ? (ce.goal_of(s2) == g ? 1.0 : 0.0) : out.v[shape.index(s2, h, g)];
    };
    for (std::size_t h = 1; h <= N; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t g = 0; g < G; ++g) {
                const std::size_t e = shape.index(s, h, g);
                double v = policy ? 0.0 : -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < A; ++a) {
                    double q = 0.0;
                    for (const auto& [s2, p] : kernel.support(s, a)) q += p * value_before(s2, h - 1, g);
                    out.q[e * A + a] = q;
                    v = policy ? v + (*policy)(e, a) * q : std::max(v, q);
                }
                out.v[e] = v;
            }
    return out;
}

} // namespace detail

inline ValueTables policy_values(const CommandExtension& ce, const TransitionKernel& kernel,
                                 const PolicyTensor& policy) {
    return detail::backward_induction(ce, kernel, &policy);
}

inline ValueTables optimal_values(const CommandExtension& ce, const TransitionKernel& kernel) {
    return detail::backward_induction(ce, kernel, nullptr);
}

/// J = sum over extended states of mu_bar * V.
inline double goal_reaching_objective(const CommandExtension& ce, const ValueTables& values) {
    double j = 0.0;
    for (std::size_t e = 0; e < values.v.size(); ++e) j += ce.mu_bar()[e] * values.v[e];
    return j;
}

inline double goal_reaching_objective(const CommandExtension& ce, const TransitionKernel& kernel,
                                      const PolicyTensor& policy) {
    return goal_reaching_objective(ce, policy_values(ce, kernel, policy));
}

/// Boolean mask over the transient extended states.
struct CriticalStateSet {
    ExtendedShape shape;
    std::vector<char> mask;

    bool contains(std::size_t ext) const { return mask[ext] != 0; }
    bool contains(std::size_t s, std::size_t h, std::size_t g) const { return contains(shape.index(s, h, g)); }
    std::size_t count() const { return std::size_t(std::count(mask.begin(), mask.end(), char(1))); }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < mask.size(); ++e)
            if (mask[e]) out.push_back(e);
        return out;
    }

    bool operator==(const CriticalStateSet&) const = default;
};

/// O(s, h, g) for every state in supp den; empty elsewhere.
struct OptimalActionMap {
    ExtendedShape shape;
    std::size_t num_actions = 0;
    std::vector<char> defined;  // ext
    std::vector<char> member;   // (ext, a)

    bool is_defined(std::size_t ext) const { return defined[ext] != 0; }
    bool contains(std::size_t ext, std::size_t a) const { return member[ext * num_actions + a] != 0; }

    std::vector<std::size_t> actions(std::size_t ext) const {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < num_actions; ++a)
            if (contains(ext, a)) out.push_back(a);
        return out;
    }

    std::size_t size(std::size_t ext) const { return actions(ext).size(); }
};

namespace detail {

inline void require_deterministic(const TransitionKernel& kernel, const char* what) {
    if (!is_deterministic(kernel)) throw NotDeterministic(std::string(what) + " needs a deterministic kernel");
}

inline OptimalActionMap support_of_numerator(const SegmentStats& stats, double threshold) {
    const std::size_t A = stats.num_actions;
    OptimalActionMap out{stats.shape, A, std::vector<char>(stats.shape.size(), 0),
                         std::vector<char>(stats.shape.size() * A, 0)};
    for (std::size_t e = 0; e < stats.shape.size(); ++e) {
        if (stats.den[e] <= threshold) continue;
        out.defined[e] = 1;
        for (std::size_t a = 0; a < A; ++a) out.member[e * A + a] = stats.numerator(e, a) > threshold ? 1 : 0;
    }
    return out;
}

inline CriticalStateSet critical_from_stats(const SegmentStats& stats, double threshold) {
    CriticalStateSet out{stats.shape, std::vector<char>(stats.shape.size(), 0)};
    for (std::size_t e = 0; e < stats.shape.size(); ++e)
        out.mask[e] = stats.den[e] > threshold && stats.nu[e] > threshold ? 1 : 0;
    return out;
}

} // namespace detail

/// O(s) = supp num_{lambda0, pi0}(., s) on supp den_{lambda0, pi0}.
inline OptimalActionMap optimal_actions(const CommandExtension& ce, const TransitionKernel& kernel0,
                                        const PolicyTensor& policy0, SegmentSpace space = SegmentSpace::Seg,
                                        double threshold = kSupportTolerance) {
    detail::require_deterministic(kernel0, "optimal_actions");
    if (policy0.min_entry() <= 0.0) throw DomainError("optimal_actions needs a strictly positive policy");
    return detail::support_of_numerator(segment_stats(ce, kernel0, policy0, space), threshold);
}

inline OptimalActionMap optimal_actions(const CommandExtension& ce, const TransitionKernel& kernel0) {
    return optimal_actions(ce, kernel0, PolicyTensor::uniform(ce));
}

/// supp den ∩ supp nu at a deterministic kernel. Computed with the uniform
/// policy and cross-checked against one random positive policy.
inline CriticalStateSet critical_states(const CommandExtension& ce, const TransitionKernel& kernel0,
                                        SegmentSpace space = SegmentSpace::Seg, std::uint64_t check_seed = 7,
                                        double threshold = kSupportTolerance) {
    detail::require_deterministic(kernel0, "critical_states");
    auto set = detail::critical_from_stats(segment_stats(ce, kernel0, PolicyTensor::uniform(ce), space), threshold);
    Rng rng(check_seed);
    auto other = detail::critical_from_stats(
        segment_stats(ce, kernel0, random_policy(rng, ce.shape(), ce.num_actions(), 0.2), space), threshold);
    if (!(set == other)) throw Error("critical state set depends on the positive policy used to compute it");
    return set;
}

/// min over critical states of pi(O(s) | s). Vacuously 1 on an empty set.
inline double optimal_mass(const PolicyTensor& policy, const OptimalActionMap& optimal,
                           const CriticalStateSet& critical) {
    double worst = 1.0;
    for (std::size_t e = 0; e < critical.mask.size(); ++e) {
        if (!critical.mask[e]) continue;
        double mass = 0.0;
        for (std::size_t a = 0; a < policy.num_actions(); ++a)
            if (optimal.contains(e, a)) mass += policy(e, a);
        worst = std::min(worst, mass);
    }
    return worst;
}

} // namespace udrl
