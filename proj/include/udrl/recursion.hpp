// eUDRL policy updates (plain, trailing, diagonal, epsilon-regularized), the
// reward-weighted regression step and an iteration driver.

#pragma once

#include "udrl/core.hpp"
#include "udrl/segments.hpp"
#include "udrl/values.hpp"

#include <chrono>
#include <optional>
#include <vector>

namespace udrl {

/// pi'(a | s) = (1 - eps) num / den + eps / |A| where den > 0, uniform elsewhere.
inline PolicyTensor policy_from_stats(const SegmentStats& stats, double epsilon = 0.0) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
    const std::size_t A = stats.num_actions;
    const double uniform = 1.0 / double(A);
    std::vector<double> probs(stats.shape.size() * A, uniform);
    for (std::size_t e = 0; e < stats.shape.size(); ++e) {
        const double den = stats.den[e];
        if (!(den > 0.0)) continue;
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) sum += stats.num[e * A + a];
        for (std::size_t a = 0; a < A; ++a)
            probs[e * A + a] = (1.0 - epsilon) * stats.num[e * A + a] / sum + epsilon * uniform;
    }
    return PolicyTensor(stats.shape, A, std::move(probs));
}

inline PolicyTensor eudrl_step(const CommandExtension& ce, const TransitionKernel& kernel, const PolicyTensor& policy,
                               SegmentSpace space = SegmentSpace::Seg, double epsilon = 0.0) {
    return policy_from_stats(segment_stats(ce, kernel, policy, space), epsilon);
}

/// pi'(a | s) proportional to Q^pi(s, a) pi(a | s); uniform where the sum vanishes.
inline PolicyTensor rwr_step(const CommandExtension& ce, const TransitionKernel& kernel, const PolicyTensor& policy) {
    const ValueTables values = policy_values(ce, kernel, policy);
    const std::size_t A = ce.num_actions();
    std::vector<double> probs(ce.shape().size() * A, 1.0 / double(A));
    for (std::size_t e = 0; e < ce.shape().size(); ++e) {
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) sum += values.action_value(e, a) * policy(e, a);
        if (!(sum > 0.0)) continue;
        for (std::size_t a = 0; a < A; ++a) probs[e * A + a] = values.action_value(e, a) * policy(e, a) / sum;
    }
    return PolicyTensor(ce.shape(), A, std::move(probs));
}

/// Everything the metrics need from the deterministic reference kernel.
struct ReferenceSolution {
    OptimalActionMap optimal;
    CriticalStateSet critical;
    ValueTables optimal_values;
};

inline ReferenceSolution make_reference(const CommandExtension& ce, const TransitionKernel& kernel0,
                                        SegmentSpace space = SegmentSpace::Seg) {
    return {optimal_actions(ce, kernel0, PolicyTensor::uniform(ce), space), critical_states(ce, kernel0, space),
            optimal_values(ce, kernel0)};
}

struct IterationOptions {
    SegmentSpace space = SegmentSpace::Seg;
    double epsilon = 0.0;
    bool record_policies = false;
};

struct StepRecord {
    std::size_t n = 0;
    double optimal_mass = 0.0;
    double objective = 0.0;  // J
    double v_err = 0.0;      // max over critical states of |V^pi_n - V*_0|
    double q_err = 0.0;      // same for Q
    double seconds = 0.0;    // wall clock since the start of the run
};

struct IterationTrace {
    std::vector<StepRecord> steps;
    std::vector<PolicyTensor> policies;  // only with record_policies
    PolicyTensor final_policy;
};

inline StepRecord measure_step(const CommandExtension& ce, const TransitionKernel& kernel, const PolicyTensor& policy,
                               const ReferenceSolution& ref, std::size_t n) {
    StepRecord rec;
    rec.n = n;
    const ValueTables values = policy_values(ce, kernel, policy);
    rec.objective = goal_reaching_objective(ce, values);
    rec.optimal_mass = optimal_mass(policy, ref.optimal, ref.critical);
    const std::size_t A = ce.num_actions();
    for (std::size_t e : ref.critical.members()) {
        rec.v_err = std::max(rec.v_err, std::abs(values.v[e] - ref.optimal_values.v[e]));
        for (std::size_t a = 0; a < A; ++a)
            rec.q_err = std::max(rec.q_err, std::abs(values.action_value(e, a) - ref.optimal_values.action_value(e, a)));
    }
    return rec;
}

/// Applies n_steps updates starting from pi0 and records one StepRecord per
/// iterate (n = 0..n_steps).
inline IterationTrace iterate(const CommandExtension& ce, const TransitionKernel& kernel, const PolicyTensor& policy0,
                              std::size_t n_steps, const ReferenceSolution& ref, const IterationOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    IterationTrace trace;
    PolicyTensor policy = policy0;
    for (std::size_t n = 0;; ++n) {
        StepRecord rec = measure_step(ce, kernel, policy, ref, n);
        rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
        trace.steps.push_back(rec);
        if (opts.record_policies) trace.policies.push_back(policy);
        if (n == n_steps) break;
        policy = eudrl_step(ce, kernel, policy, opts.space, opts.epsilon);
    }
    trace.final_policy = std::move(policy);
    return trace;
}

/// Runs on ray(alpha) with the reference taken at ray(0).
inline IterationTrace iterate(const CommandExtension& ce, const KernelRay& ray, double alpha,
                              const PolicyTensor& policy0, std::size_t n_steps, const IterationOptions& opts = {}) {
    const ReferenceSolution ref = make_reference(ce, ray(0.0));
    return iterate(ce, ray(alpha), policy0, n_steps, ref, opts);
}

} // namespace udrl
