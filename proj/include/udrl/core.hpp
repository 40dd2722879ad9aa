// Finite MDPs, command extensions, transition kernels and policies.
//
// Everything here is immutable after construction. Extended states (s, h, g)
// are laid out on a dense grid with h in 1..N; absorbing states (h = 0) are
// never stored since no policy or visitation quantity lives on them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace udrl {

/// Tolerance used when validating that rows of a stochastic object sum to one.
inline constexpr double kSimplexTolerance = 1e-12;

/// Default threshold below which a probability counts as zero in support
/// computations (optimal actions, critical states).
inline constexpr double kSupportTolerance = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define UDRL_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
    }

UDRL_DEFINE_ERROR(ShapeMismatch);
UDRL_DEFINE_ERROR(InvalidDistribution);
UDRL_DEFINE_ERROR(DegenerateInitialization);
UDRL_DEFINE_ERROR(CapacityExceeded);
UDRL_DEFINE_ERROR(DomainError);
UDRL_DEFINE_ERROR(PremiseViolated);
UDRL_DEFINE_ERROR(NotDeterministic);
UDRL_DEFINE_ERROR(IndexError);

#undef UDRL_DEFINE_ERROR

namespace detail {

inline void check_distribution(std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidDistribution(what + ": negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
        throw InvalidDistribution(what + ": entries sum to " + std::to_string(sum));
}

} // namespace detail

/// One non-zero entry of a kernel row.
struct Transition {
    std::size_t next;
    double prob;
};

/// Dense tensor lambda(s' | s, a), stored in (s, a, s') order.
///
/// A sparse copy of every row is built once at construction; the dynamic
/// programs only ever walk the non-zero entries.
class TransitionKernel {
public:
    TransitionKernel() = default;

    TransitionKernel(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
        : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
        if (num_states_ == 0 || num_actions_ == 0)
            throw ShapeMismatch("kernel needs at least one state and one action");
        if (probs_.size() != num_states_ * num_actions_ * num_states_)
            throw ShapeMismatch("kernel tensor has " + std::to_string(probs_.size()) +
                                " entries, expected " +
                                std::to_string(num_states_ * num_actions_ * num_states_));
        offsets_.reserve(num_states_ * num_actions_ + 1);
        offsets_.push_back(0);
        for (std::size_t s = 0; s < num_states_; ++s) {
            for (std::size_t a = 0; a < num_actions_; ++a) {
                auto r = row(s, a);
                detail::check_distribution(
                    r, "kernel row (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
                for (std::size_t n = 0; n < num_states_; ++n)
                    if (r[n] > 0.0) entries_.push_back({n, r[n]});
                offsets_.push_back(entries_.size());
            }
        }
    }

    /// Builds a kernel by evaluating f(s, a, s') on every index.
    template <class F>
    static TransitionKernel from_function(std::size_t num_states, std::size_t num_actions, F&& f) {
        std::vector<double> p(num_states * num_actions * num_states);
        for (std::size_t s = 0; s < num_states; ++s)
            for (std::size_t a = 0; a < num_actions; ++a)
                for (std::size_t n = 0; n < num_states; ++n)
                    p[(s * num_actions + a) * num_states + n] = f(s, a, n);
        return TransitionKernel(num_states, num_actions, std::move(p));
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double operator()(std::size_t s, std::size_t a, std::size_t next) const {
        return probs_[(s * num_actions_ + a) * num_states_ + next];
    }

    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {probs_.data() + (s * num_actions_ + a) * num_states_, num_states_};
    }

    /// Non-zero entries of the row (s, a).
    std::span<const Transition> support(std::size_t s, std::size_t a) const {
        std::size_t k = s * num_actions_ + a;
        return {entries_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }

    const std::vector<double>& data() const { return probs_; }

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> probs_;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> entries_;
};

/// Finite MDP without rewards; the command extension induces the reward.
class FiniteMdp {
public:
    FiniteMdp() = default;

    FiniteMdp(TransitionKernel kernel, std::vector<double> mu)
        : kernel_(std::move(kernel)), mu_(std::move(mu)) {
        if (mu_.size() != kernel_.num_states())
            throw ShapeMismatch("initial distribution has wrong length");
        detail::check_distribution(mu_, "initial state distribution");
    }

    std::size_t num_states() const { return kernel_.num_states(); }
    std::size_t num_actions() const { return kernel_.num_actions(); }
    const TransitionKernel& kernel() const { return kernel_; }
    const std::vector<double>& mu() const { return mu_; }

private:
    TransitionKernel kernel_;
    std::vector<double> mu_;
};

/// Dense layout of the transient extended states (s, h, g), h in 1..N.
struct ExtendedShape {
    std::size_t num_states = 0;
    std::size_t horizon = 0;  // N
    std::size_t num_goals = 0;

    std::size_t size() const { return num_states * horizon * num_goals; }

    std::size_t index(std::size_t s, std::size_t h, std::size_t g) const {
        return (s * horizon + (h - 1)) * num_goals + g;
    }

    struct Coords {
        std::size_t s, h, g;
    };

    Coords coords(std::size_t idx) const {
        std::size_t g = idx % num_goals;
        idx /= num_goals;
        return {idx / horizon, idx % horizon + 1, g};
    }

    bool operator==(const ExtendedShape&) const = default;
};

/// An MDP wrapped with a goal map, a maximal horizon and a distribution of
/// initial commands.
class CommandExtension {
public:
    CommandExtension() = default;

    /// `command_dist` holds P(H0 = h, G0 = g | S0 = s) in (s, h, g) order
    /// with h running over 0..N, so that mass on absorbing commands can be
    /// detected and rejected.
    CommandExtension(FiniteMdp mdp, std::size_t num_goals, std::vector<std::size_t> goal_map,
                     std::size_t horizon, std::vector<double> command_dist)
        : mdp_(std::move(mdp)), goal_map_(std::move(goal_map)), command_dist_(std::move(command_dist)) {
        const std::size_t S = mdp_.num_states();
        if (horizon < 1) throw ShapeMismatch("maximal horizon N must be at least 1");
        if (num_goals < 1) throw ShapeMismatch("goal set must be non-empty");
        if (goal_map_.size() != S) throw ShapeMismatch("goal map must be defined on every state");
        for (std::size_t g : goal_map_)
            if (g >= num_goals) throw ShapeMismatch("goal map value out of range");
        if (command_dist_.size() != S * (horizon + 1) * num_goals)
            throw ShapeMismatch("command distribution has wrong shape");

        shape_ = {S, horizon, num_goals};
        const std::size_t per_state = (horizon + 1) * num_goals;
        mu_bar_.assign(shape_.size(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            std::span<const double> slice(command_dist_.data() + s * per_state, per_state);
            for (double v : slice)
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw InvalidDistribution("command distribution has a negative entry");
            const double m = mdp_.mu()[s];
            if (m <= 0.0) continue;
            detail::check_distribution(slice, "command distribution at s=" + std::to_string(s));
            for (std::size_t g = 0; g < num_goals; ++g)
                if (slice[g] > 0.0)
                    throw DegenerateInitialization(
                        "initial distribution puts mass on an absorbing state (h = 0)");
            for (std::size_t h = 1; h <= horizon; ++h)
                for (std::size_t g = 0; g < num_goals; ++g)
                    mu_bar_[shape_.index(s, h, g)] = m * slice[h * num_goals + g];
        }
    }

    const FiniteMdp& mdp() const { return mdp_; }
    std::size_t num_states() const { return shape_.num_states; }
    std::size_t num_actions() const { return mdp_.num_actions(); }
    std::size_t num_goals() const { return shape_.num_goals; }
    std::size_t horizon() const { return shape_.horizon; }
    const ExtendedShape& shape() const { return shape_; }
    const std::vector<std::size_t>& goal_map() const { return goal_map_; }
    std::size_t goal_of(std::size_t s) const { return goal_map_[s]; }
    const std::vector<double>& command_dist() const { return command_dist_; }

    /// Initial distribution over transient extended states.
    const std::vector<double>& mu_bar() const { return mu_bar_; }

    /// The CE's own kernel; alternative kernels of the compatible family are
    /// passed explicitly to the algorithms.
    const TransitionKernel& kernel() const { return mdp_.kernel(); }

    /// Checks that a kernel belongs to the same compatible family.
    void check_compatible(const TransitionKernel& kernel) const {
        if (kernel.num_states() != num_states() || kernel.num_actions() != num_actions())
            throw ShapeMismatch("kernel does not match the command extension's state/action sets");
    }

private:
    FiniteMdp mdp_;
    ExtendedShape shape_;
    std::vector<std::size_t> goal_map_;
    std::vector<double> command_dist_;
    std::vector<double> mu_bar_;
};

/// Validating factory matching the library's other free functions.
inline CommandExtension build_ce(FiniteMdp mdp, std::vector<std::size_t> goal_map, std::size_t num_goals,
                                 std::size_t horizon, std::vector<double> command_dist) {
    return CommandExtension(std::move(mdp), num_goals, std::move(goal_map), horizon, std::move(command_dist));
}

/// Conditional action distribution pi(a | s, h, g) on the transient states.
class PolicyTensor {
public:
    PolicyTensor() = default;

    PolicyTensor(ExtendedShape shape, std::size_t num_actions, std::vector<double> probs)
        : shape_(shape), num_actions_(num_actions), probs_(std::move(probs)) {
        if (probs_.size() != shape_.size() * num_actions_)
            throw ShapeMismatch("policy tensor has wrong size");
        for (std::size_t e = 0; e < shape_.size(); ++e)
            detail::check_distribution(row(e), "policy row " + std::to_string(e));
    }

    static PolicyTensor uniform(ExtendedShape shape, std::size_t num_actions) {
        return PolicyTensor(shape, num_actions,
                            std::vector<double>(shape.size() * num_actions, 1.0 / double(num_actions)));
    }

    static PolicyTensor uniform(const CommandExtension& ce) { return uniform(ce.shape(), ce.num_actions()); }

    const ExtendedShape& shape() const { return shape_; }
    std::size_t num_actions() const { return num_actions_; }

    double operator()(std::size_t ext, std::size_t a) const { return probs_[ext * num_actions_ + a]; }
    double operator()(std::size_t s, std::size_t h, std::size_t g, std::size_t a) const {
        return (*this)(shape_.index(s, h, g), a);
    }

    std::span<const double> row(std::size_t ext) const {
        return {probs_.data() + ext * num_actions_, num_actions_};
    }

    const std::vector<double>& data() const { return probs_; }

    double min_entry() const {
        double m = 1.0;
        for (double v : probs_) m = std::min(m, v);
        return m;
    }

private:
    ExtendedShape shape_;
    std::size_t num_actions_ = 0;
    std::vector<double> probs_;
};

/// Composite max-L1 distance: the largest L1 distance between matching rows.
inline double kernel_distance(const TransitionKernel& lhs, const TransitionKernel& rhs) {
    if (lhs.num_states() != rhs.num_states() || lhs.num_actions() != rhs.num_actions())
        throw ShapeMismatch("kernel_distance: shapes differ");
    double worst = 0.0;
    for (std::size_t s = 0; s < lhs.num_states(); ++s)
        for (std::size_t a = 0; a < lhs.num_actions(); ++a) {
            auto x = lhs.row(s, a);
            auto y = rhs.row(s, a);
            double d = 0.0;
            for (std::size_t n = 0; n < x.size(); ++n) d += std::abs(x[n] - y[n]);
            worst = std::max(worst, d);
        }
    return worst;
}

/// True iff every row is a point mass (up to 1e-12).
inline bool is_deterministic(const TransitionKernel& kernel) {
    for (std::size_t s = 0; s < kernel.num_states(); ++s)
        for (std::size_t a = 0; a < kernel.num_actions(); ++a) {
            bool hit = false;
            for (double p : kernel.row(s, a))
                if (p >= 1.0 - kSimplexTolerance) hit = true;
            if (!hit) return false;
        }
    return true;
}

/// Built-in parametric kernel families.
enum class RayFamily {
    BoundaryA,
    BoundaryC,
    DeterministicA,
    DeterministicC,
    Bandit,
    Z3Walk,
    GridWorld,
    GridWorldLifted,
    Custom,
};

/// A continuous one-parameter family alpha -> kernel on [0, 1].
class KernelRay {
public:
    KernelRay() = default;
    KernelRay(RayFamily family, double lipschitz, std::function<TransitionKernel(double)> eval)
        : family_(family), lipschitz_(lipschitz), eval_(std::move(eval)) {}

    RayFamily family() const { return family_; }

    /// Bound L with kernel_distance(eval(x), eval(y)) <= L |x - y|.
    double lipschitz() const { return lipschitz_; }

    TransitionKernel eval(double alpha) const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("ray parameter must lie in [0, 1]");
        return eval_(alpha);
    }

    TransitionKernel operator()(double alpha) const { return eval(alpha); }

private:
    RayFamily family_ = RayFamily::Custom;
    double lipschitz_ = 0.0;
    std::function<TransitionKernel(double)> eval_;
};

/// Default cap on the number of lifted states |S|^K.
inline constexpr std::size_t kDefaultLiftCapacity = 4096;

namespace detail {

inline std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t cap) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (r > cap / base) throw CapacityExceeded("K-tuple lift exceeds the configured state limit");
        r *= base;
    }
    if (r > cap) throw CapacityExceeded("K-tuple lift exceeds the configured state limit");
    return r;
}

} // namespace detail

/// Index arithmetic for K-tuples (x_1, ..., x_K) of base states; x_K is the
/// most recent state and the least significant digit.
struct TupleCodec {
    std::size_t base = 0;
    std::size_t length = 0;

    std::size_t size() const {
        std::size_t r = 1;
        for (std::size_t i = 0; i < length; ++i) r *= base;
        return r;
    }
    std::size_t last(std::size_t tuple) const { return tuple % base; }
    std::size_t shift(std::size_t tuple, std::size_t next) const { return (tuple * base) % size() + next; }
    std::size_t repeat(std::size_t s) const {
        std::size_t t = 0;
        for (std::size_t i = 0; i < length; ++i) t = t * base + s;
        return t;
    }
    std::vector<std::size_t> decode(std::size_t tuple) const {
        std::vector<std::size_t> out(length);
        for (std::size_t i = length; i-- > 0;) {
            out[i] = tuple % base;
            tuple /= base;
        }
        return out;
    }
};

/// Lifts a kernel to K-tuples of states: the window shifts by one and the
/// newest state follows the base kernel from the current last state.
inline TransitionKernel lift_kernel(const TransitionKernel& kernel, std::size_t K,
                                    std::size_t max_states = kDefaultLiftCapacity) {
    if (K < 1) throw DomainError("tuple length K must be at least 1");
    const std::size_t S = kernel.num_states();
    const std::size_t A = kernel.num_actions();
    const std::size_t T = detail::checked_power(S, K, max_states);
    TupleCodec codec{S, K};
    std::vector<double> p(T * A * T, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t a = 0; a < A; ++a)
            for (const auto& [next, prob] : kernel.support(codec.last(t), a))
                p[(t * A + a) * T + codec.shift(t, next)] = prob;
    return TransitionKernel(T, A, std::move(p));
}

/// K-tuple state lift; episodes start from the padded tuple (s, ..., s).
inline FiniteMdp k_tuple_lift(const FiniteMdp& mdp, std::size_t K,
                              std::size_t max_states = kDefaultLiftCapacity) {
    TransitionKernel lifted = lift_kernel(mdp.kernel(), K, max_states);
    TupleCodec codec{mdp.num_states(), K};
    std::vector<double> mu(lifted.num_states(), 0.0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) mu[codec.repeat(s)] = mdp.mu()[s];
    return FiniteMdp(std::move(lifted), std::move(mu));
}

} // namespace udrl
