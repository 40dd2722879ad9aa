// Acceptance checks. Usage: acceptance N (1..10), or no argument for all.
// Prints one "criterion N: PASS|FAIL ..." line per check; exits nonzero on FAIL.

#include "udrl/experiments.hpp"
#include "udrl/udrl.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace udrl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Ground-truth records of the given domains, with the runtime limit.
Outcome reference_values(std::initializer_list<const char*> names, double max_seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t total = 0, failed = 0;
    double worst = 0.0;
    std::string first_failure;
    for (const char* name : names)
        for (const auto& r : check_ground_truth(make_domain(name))) {
            ++total;
            worst = std::max(worst, std::abs(r.measured - r.record.value));
            if (!r.passed) {
                ++failed;
                if (first_failure.empty()) first_failure = std::string(name) + ": " + r.record.where;
            }
        }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = failed == 0 && secs < max_seconds;
    o.detail = std::to_string(total - failed) + "/" + std::to_string(total) + " values, max |err| " +
               fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + " s";
    if (!first_failure.empty()) o.detail += ", first failure: " + first_failure;
    return o;
}

Outcome criterion1() {
    return reference_values({"three_state_boundary_a", "three_state_boundary_c"}, 1.0);
}

Outcome criterion2() {
    return reference_values({"three_state_deterministic_a", "three_state_deterministic_c"}, 1.0);
}

Outcome criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(303);
    double v_gap = 0.0;
    std::size_t mismatches = 0, critical = 0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t S = 2 + uniform_index(rng, 4), A = 1 + uniform_index(rng, 3);
        const std::size_t G = 1 + uniform_index(rng, 3), N = 1 + uniform_index(rng, 4);
        const CommandExtension ce = random_ce(rng, random_deterministic_kernel(rng, S, A), G, N);
        const ReferenceSolution ref = make_reference(ce, ce.kernel());
        const PolicyTensor pi0 = random_policy(rng, ce.shape(), A);
        critical += ref.critical.count();
        for (auto space : {SegmentSpace::Seg, SegmentSpace::Trail, SegmentSpace::Diag}) {
            PolicyTensor pi = pi0;
            for (int n = 1; n <= 5; ++n) {
                pi = eudrl_step(ce, ce.kernel(), pi, space);
                const ValueTables v = policy_values(ce, ce.kernel(), pi);
                for (std::size_t e : ref.critical.members()) {
                    v_gap = std::max(v_gap, std::abs(v.v[e] - 1.0));
                    for (std::size_t a = 0; a < A; ++a)
                        if ((pi(e, a) > 0.0) != ref.optimal.contains(e, a)) ++mismatches;
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    return {v_gap <= 1e-10 && mismatches == 0 && secs < 30.0,
            "20 kernels, " + std::to_string(critical) + " critical states, max |V - 1| " + fmt("%.2e", v_gap) +
                ", support mismatches " + std::to_string(mismatches) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(404);
    double dp = 0.0, markov = 0.0;
    bool c_ok = true;
    for (int i = 0; i < 20; ++i) {
        const std::size_t S = 1 + uniform_index(rng, 3), A = 1 + uniform_index(rng, 2);
        const std::size_t G = 1 + uniform_index(rng, 3), N = 1 + uniform_index(rng, 3);
        const CommandExtension ce = random_ce(rng, random_kernel(rng, S, A, 0.3), G, N);
        const PolicyTensor pi = random_policy(rng, ce.shape(), A);
        for (auto space : {SegmentSpace::Seg, SegmentSpace::Trail, SegmentSpace::Diag})
            dp = std::max(dp, stats_distance(segment_stats(ce, ce.kernel(), pi, space),
                                             brute_force_segment_dist(ce, ce.kernel(), pi, space)));
        const double c = segment_stats(ce, ce.kernel(), pi).c;
        c_ok = c_ok && c > 0.0 && c <= double(N * (N + 1)) / 2.0 + 1e-12;
        markov = std::max(markov, markovianity_residual(enumerate_segment_law(ce, ce.kernel(), pi), ce, ce.kernel(), pi));
    }
    const double secs = seconds_since(t0);
    return {dp <= 1e-10 && markov <= 1e-10 && c_ok && secs < 60.0,
            "max DP/enumeration diff " + fmt("%.2e", dp) + ", Markov residual " + fmt("%.2e", markov) + ", c bound " +
                (c_ok ? "ok" : "violated") + ", " + fmt("%.2f", secs) + " s"};
}

Outcome criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(505);
    double diff = 0.0;
    for (const char* name : {"bandit", "z3_walk", "gridworld"}) {
        const Domain d = make_domain(name);
        const CriticalStateSet crit = critical_states(d.ce, d.ray(0.0));
        for (double alpha : {0.0, 0.01, 0.1, 0.4}) {
            const TransitionKernel k = d.ray(alpha);
            for (int i = 0; i < 3; ++i) {
                const PolicyTensor pi = random_policy(rng, d.ce.shape(), d.ce.num_actions());
                const PolicyTensor a = eudrl_step(d.ce, k, pi, SegmentSpace::Diag);
                const PolicyTensor b = rwr_step(d.ce, k, pi);
                for (std::size_t e : crit.members())
                    for (std::size_t act = 0; act < d.ce.num_actions(); ++act)
                        diff = std::max(diff, std::abs(a(e, act) - b(e, act)));
            }
        }
    }
    const double secs = seconds_since(t0);
    return {diff <= 1e-10 && secs < 10.0, "max |Diag - RWR| " + fmt("%.2e", diff) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome criterion6() {
    const auto t0 = std::chrono::steady_clock::now();
    double res = 0.0;
    std::size_t sign_errors = 0, samples = 0;
    for (double g : logspace(1e-4, 0.99, 200)) res = std::max(res, f_fixed_point(g).residual);
    for (std::size_t N : {1u, 2u, 4u, 8u}) {
        const double b0 = h_b0(N);
        for (double frac : linspace(0.001, 0.999, 40)) {
            const double b = frac * b0;
            const HFixedPoints fp = h_fixed_points(b, N);
            res = std::max({res, fp.lower.residual, fp.upper.residual});
            const double xl = fp.lower.value, xu = fp.upper.value;
            for (int i = 1; i <= 1000; ++i) {
                const double x = double(i) / 1001.0;
                // Skip samples that sit on a fixed point to rounding accuracy.
                if (std::abs(x - xl) < 1e-9 || std::abs(x - xu) < 1e-9) continue;
                ++samples;
                const double d = h_map(x, b, N) - x;
                const bool inside = x > xl && x < xu;
                if (inside ? !(d > 0.0) : !(d < 0.0)) ++sign_errors;
            }
        }
    }
    for (double eps : linspace(0.01, 0.5, 20))
        for (double g : logspace(1e-4, 0.99 - eps, 20))
            for (double A : {2.0, 4.0})
                for (double M = 1.0; M <= A; M += 1.0) res = std::max(res, z_fixed_point(g, eps, M, A).residual);
    const double secs = seconds_since(t0);
    return {res <= 1e-10 && sign_errors == 0 && secs < 10.0,
            "max residual " + fmt("%.2e", res) + ", h sign pattern " + std::to_string(samples - sign_errors) + "/" +
                std::to_string(samples) + " samples, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 7: dominance of the bounds at n = 100
// ---------------------------------------------------------------------------

struct DominanceSetup {
    std::string label;
    Domain domain;
    SegmentSpace space;
    double epsilon;
    std::vector<double> deltas;
    std::function<BoundReport(const BoundContext&, double)> bound;
    double limit;
};

struct DominanceOutcome {
    std::size_t checked = 0, skipped = 0, violations = 0;
    double worst_margin = 1.0;  // min over checks of measured - bound
    bool trend = true;
    double endpoint_gap = 0.0;
    std::string summary;
};

DominanceOutcome run_setup(const DominanceSetup& s, std::uint64_t seed) {
    const BoundContext ctx = make_bound_context(s.domain.ce, s.domain.ray(0.0));
    std::vector<std::pair<std::string, PolicyTensor>> policies;
    policies.emplace_back("uniform", PolicyTensor::uniform(s.domain.ce));
    policies.emplace_back("biased", biased_policy(s.domain.ce, ctx.reference.optimal, 0.9));
    for (std::uint64_t i = 0; i < 3; ++i) {
        Rng rng = derived_rng(seed, i);
        policies.emplace_back("random" + std::to_string(i),
                              random_policy(rng, s.domain.ce.shape(), s.domain.ce.num_actions()));
    }
    IterationOptions opts;
    opts.space = s.space;
    opts.epsilon = s.epsilon;

    DominanceOutcome out;
    std::vector<BoundReport> reports(s.deltas.size());
    for (std::size_t i = 0; i < s.deltas.size(); ++i) reports[i] = s.bound(ctx, s.deltas[i]);

    std::vector<double> measured(s.deltas.size() * policies.size(), 0.0);
    parallel_for(measured.size(), 4, [&](std::size_t j) {
        const std::size_t i = j / policies.size();
        if (!reports[i].valid) return;
        const double alpha = s.domain.alpha_for_delta(s.deltas[i]);
        const auto tr = iterate(s.domain.ce, s.domain.ray(alpha), policies[j % policies.size()].second, 100,
                                ctx.reference, opts);
        measured[j] = tr.steps.back().optimal_mass;
    });

    std::vector<std::pair<double, double>> valid_bounds;  // (delta, bound)
    for (std::size_t i = 0; i < s.deltas.size(); ++i) {
        const BoundReport& r = reports[i];
        if (!r.valid) {
            out.skipped += policies.size();
            continue;
        }
        valid_bounds.emplace_back(s.deltas[i], r.optimal_mass_bound);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            if (r.variant == BoundVariant::UniqueOpt && !unique_opt_gate(ctx, policies[p].second, r.x_l.value)) {
                ++out.skipped;
                continue;
            }
            const double m = measured[i * policies.size() + p];
            ++out.checked;
            out.worst_margin = std::min(out.worst_margin, m - r.optimal_mass_bound);
            if (m < r.optimal_mass_bound - 1e-9) ++out.violations;
        }
    }
    // Bound must rise toward the limit as delta shrinks.
    std::sort(valid_bounds.begin(), valid_bounds.end());
    for (std::size_t i = 1; i < valid_bounds.size(); ++i)
        if (valid_bounds[i - 1].second < valid_bounds[i].second - 1e-15) out.trend = false;
    out.endpoint_gap = valid_bounds.empty() ? 1.0 : std::abs(s.limit - valid_bounds.front().second);
    out.summary = s.label + ": " + std::to_string(out.checked) + " checks, " + std::to_string(out.violations) +
                  " violations, min margin " + fmt("%.2e", out.worst_margin) + ", limit gap at delta " +
                  fmt("%.0e", valid_bounds.empty() ? 0.0 : valid_bounds.front().first) + " " +
                  fmt("%.2e", out.endpoint_gap) + (out.trend ? "" : ", trend broken");
    return out;
}

Outcome criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<DominanceSetup> setups;
    {
        Domain d = bandit();
        setups.push_back({"bandit x*(gamma_N)", d, SegmentSpace::Seg, 0.0, logspace(1e-6, 0.5, 25),
                          [](const BoundContext& c, double delta) { return supp_mu_bounds(c, delta); }, 1.0});
        setups.push_back({"bandit x_u", d, SegmentSpace::Seg, 0.0, logspace(1e-6, 0.5, 25),
                          [](const BoundContext& c, double delta) { return unique_opt_bounds(c, delta); }, 1.0});
    }
    {
        Domain d = odt_gridworld({2, 2});
        const double delta0 = unique_opt_delta0(d.ce.horizon(), 1.0);
        setups.push_back({"lifted grid (2,2) x_u", d, SegmentSpace::Trail, 0.0, logspace(1e-9, 0.99 * delta0, 15),
                          [](const BoundContext& c, double delta) { return unique_opt_bounds(c, delta); }, 1.0});
    }
    {
        Domain d = odt_gridworld({2, 0});
        const BoundContext ctx = make_bound_context(d.ce, d.ray(0.0));
        const double eps = 0.1;
        setups.push_back({"lifted grid (2,0) eps=0.1 min_M x*", d, SegmentSpace::Trail, eps,
                          logspace(1e-14, 1e-1, 14),
                          [eps](const BoundContext& c, double delta) { return eps_bounds(c, delta, eps); },
                          bound_limit(ctx, eps)});
    }
    bool pass = true;
    std::string detail;
    for (const auto& s : setups) {
        const DominanceOutcome o = run_setup(s, 77);
        std::printf("  %s\n", o.summary.c_str());
        pass = pass && o.checked > 0 && o.violations == 0 && o.trend && o.endpoint_gap < 1e-3;
    }
    const double secs = seconds_since(t0);
    pass = pass && secs < 600.0;
    return {pass, std::to_string(setups.size()) + " setups, " + fmt("%.1f", secs) + " s"};
}

Outcome criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(808);
    double worst = 1.0;
    std::size_t checks = 0;
    bool ok = true;
    for (const char* name : {"bandit", "z3_walk"}) {
        const Domain d = make_domain(name);
        const BoundContext ctx = make_bound_context(d.ce, d.ray(0.0));
        const double alpha = alpha_visitation(ctx);
        for (int i = 0; i < 10; ++i) {
            // Half on the domain's ray, half arbitrary kernels of the same shape.
            const TransitionKernel k = i % 2 == 0 ? d.ray(uniform01(rng))
                                                  : random_kernel(rng, d.ce.num_states(), d.ce.num_actions());
            const SegmentStats st = segment_stats(d.ce, k, random_policy(rng, d.ce.shape(), d.ce.num_actions()));
            for (std::size_t e : ctx.reference.critical.members()) {
                const auto [s, h, g] = d.ce.shape().coords(e);
                const double w = issued_command_weight(st, s, h, g);
                worst = std::min(worst, w - alpha);
                ok = ok && w >= alpha;
                ++checks;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 30.0, std::to_string(checks) + " checks, min (measured - alpha) " + fmt("%.3e", worst) +
                                   ", " + fmt("%.2f", secs) + " s"};
}

Outcome criterion9() {
    const Domain d = bandit();
    const double delta = 0.01;
    const BoundContext ctx = make_bound_context(d.ce, d.ray(0.0));
    const BoundReport sm = supp_mu_bounds(ctx, delta);
    const BoundReport uo = unique_opt_bounds(ctx, delta);
    Rng rng = derived_rng(9, 0);
    const PolicyTensor pi0 = random_policy(rng, d.ce.shape(), 2);
    IterationOptions opts;
    opts.record_policies = true;
    const auto tr = iterate(d.ce, d.ray(d.alpha_for_delta(delta)), pi0, 200, ctx.reference, opts);
    const PolicyTensor& limit = tr.final_policy;
    auto err = [&](std::size_t n) {
        double m = 0.0;
        for (std::size_t e : ctx.reference.critical.members())
            for (std::size_t a = 0; a < 2; ++a) m = std::max(m, std::abs(tr.policies[n](e, a) - limit(e, a)));
        return m;
    };
    // Ratios e_{n+1} / e_n while the error is above rounding noise; the last one is the estimate.
    double ratio = std::nan("");
    std::size_t last_n = 0;
    for (std::size_t n = 0; n < 50; ++n) {
        const double a = err(n), b = err(n + 1);
        if (!(a > 1e-12) || !(b > 1e-12)) break;
        ratio = b / a;
        last_n = n + 1;
    }
    const double rel = std::abs(ratio - sm.rate) / sm.rate;
    return {rel <= 0.1, "empirical ratio " + fmt("%.4f", ratio) + " (last at n=" + std::to_string(last_n) +
                            "), reported rate " + fmt("%.4f", sm.rate) + ", relative error " + fmt("%.1f%%", 100 * rel) +
                            "; unique-optimum rate " + fmt("%.4f", uo.rate)};
}

Outcome criterion10() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / ("udrl_acceptance_" + std::to_string(::getpid()));
    const fs::path a = base / "a", b = base / "b";
    fs::create_directories(a);
    fs::create_directories(b);
    const std::string lab = UDRL_LAB_PATH;
    const std::string cmd_a = lab + " reproduce all --seed 11 --jobs 4 --out " + a.string() + " > /dev/null";
    const std::string cmd_b = lab + " reproduce all --seed 11 --jobs 1 --out " + b.string() + " > /dev/null";
    const int ra = std::system(cmd_a.c_str());
    const int rb = std::system(cmd_b.c_str());
    std::size_t files = 0, differ = 0;
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const fs::path other = b / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differ;
    }
    fs::remove_all(base);
    const bool ran = ra != -1 && rb != -1 && WEXITSTATUS(ra) == WEXITSTATUS(rb);
    return {ran && files > 0 && differ == 0,
            std::to_string(files) + " CSV files compared, " + std::to_string(differ) + " differ"};
}

} // namespace

int main(int argc, char** argv) {
    const std::map<int, std::function<Outcome()>> checks{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
    std::vector<int> which;
    if (argc > 1) which.push_back(std::atoi(argv[1]));
    else
        for (const auto& [k, _] : checks) which.push_back(k);
    bool all = true;
    for (int n : which) {
        auto it = checks.find(n);
        if (it == checks.end()) {
            std::fprintf(stderr, "no criterion %d\n", n);
            return 2;
        }
        Outcome o;
        try {
            o = it->second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
