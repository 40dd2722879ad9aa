// Seeded generators for random kernels, policies and command extensions.
// Used by the property tests and the validation suite.

#pragma once

#include "udrl/core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace udrl {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(Rng& rng, std::size_t n) { return std::size_t(uniform01(rng) * double(n)); }

/// Random point of the simplex with every entry at least `floor / n`.
inline std::vector<double> random_simplex(Rng& rng, std::size_t n, double floor = 0.0) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = -std::log(1.0 - uniform01(rng));
        sum += v;
    }
    for (auto& v : p) v = (1.0 - floor) * v / sum + floor / double(n);
    return p;
}

/// Random positive policy; `floor` keeps every entry >= floor / |A|.
inline PolicyTensor random_policy(Rng& rng, ExtendedShape shape, std::size_t num_actions, double floor = 0.05) {
    std::vector<double> probs;
    probs.reserve(shape.size() * num_actions);
    for (std::size_t e = 0; e < shape.size(); ++e) {
        auto row = random_simplex(rng, num_actions, floor);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return PolicyTensor(shape, num_actions, std::move(probs));
}

/// Dense random kernel; with `sparsity` > 0 some entries are zeroed first.
inline TransitionKernel random_kernel(Rng& rng, std::size_t S, std::size_t A, double sparsity = 0.0) {
    std::vector<double> probs;
    probs.reserve(S * A * S);
    for (std::size_t k = 0; k < S * A; ++k) {
        auto row = random_simplex(rng, S);
        if (sparsity > 0.0) {
            const std::size_t keep = uniform_index(rng, S);
            double sum = 0.0;
            for (std::size_t n = 0; n < S; ++n) {
                if (n != keep && uniform01(rng) < sparsity) row[n] = 0.0;
                sum += row[n];
            }
            for (auto& v : row) v /= sum;
        }
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return TransitionKernel(S, A, std::move(probs));
}

inline TransitionKernel random_deterministic_kernel(Rng& rng, std::size_t S, std::size_t A) {
    std::vector<double> probs(S * A * S, 0.0);
    for (std::size_t k = 0; k < S * A; ++k) probs[k * S + uniform_index(rng, S)] = 1.0;
    return TransitionKernel(S, A, std::move(probs));
}

/// Random CE around the given kernel: random mu, surjective-ish goal map and
/// a random command distribution on h >= 1 (some entries zeroed).
inline CommandExtension random_ce(Rng& rng, TransitionKernel kernel, std::size_t G, std::size_t N) {
    const std::size_t S = kernel.num_states();
    std::vector<double> mu = random_simplex(rng, S);
    if (S > 1 && uniform01(rng) < 0.5) {
        mu[uniform_index(rng, S)] = 0.0;
        double sum = 0.0;
        for (double v : mu) sum += v;
        for (auto& v : mu) v /= sum;
    }
    std::vector<std::size_t> goal_map(S);
    for (std::size_t s = 0; s < S; ++s) goal_map[s] = s < G ? s : uniform_index(rng, G);
    std::vector<double> cmd(S * (N + 1) * G, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        auto row = random_simplex(rng, N * G);
        double sum = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (row.size() > 1 && uniform01(rng) < 0.3) row[k] = 0.0;
            sum += row[k];
        }
        if (sum == 0.0) {
            row[0] = 1.0;
            sum = 1.0;
        }
        for (std::size_t k = 0; k < row.size(); ++k) cmd[s * (N + 1) * G + G + k] = row[k] / sum;
    }
    return build_ce(FiniteMdp(std::move(kernel), std::move(mu)), std::move(goal_map), G, N, std::move(cmd));
}

} // namespace udrl
