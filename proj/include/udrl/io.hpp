// JSON and CSV serialization. CSV reals use '.' decimals and 17 significant
// digits so that doubles round-trip; every file starts with '#' metadata lines.

#pragma once

#include "udrl/bounds.hpp"
#include "udrl/core.hpp"
#include "udrl/recursion.hpp"
#include "udrl/segments.hpp"
#include "udrl/values.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace udrl {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

/// Minimal CSV builder; fields are written verbatim (callers keep them free of commas).
class CsvTable {
public:
    using Metadata = std::vector<std::pair<std::string, std::string>>;

    CsvTable(Metadata meta, std::vector<std::string> columns)
        : meta_(std::move(meta)), columns_(std::move(columns)) {}

    class Row {
    public:
        Row& operator<<(double v) { return push(format_real(v)); }
        Row& operator<<(const std::string& v) { return push(v); }
        Row& operator<<(const char* v) { return push(v); }
        Row& operator<<(std::size_t v) { return push(std::to_string(v)); }
        Row& operator<<(int v) { return push(std::to_string(v)); }
        Row& operator<<(bool v) { return push(v ? "1" : "0"); }

    private:
        friend class CsvTable;
        Row& push(std::string s) {
            cells_.push_back(std::move(s));
            return *this;
        }
        std::vector<std::string> cells_;
    };

    void add(Row row) {
        if (row.cells_.size() != columns_.size())
            throw ShapeMismatch("CSV row has " + std::to_string(row.cells_.size()) + " cells, expected " +
                                std::to_string(columns_.size()));
        rows_.push_back(std::move(row.cells_));
    }

    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : meta_) out += "# " + k + ": " + v + "\n";
        out += join(columns_) + "\n";
        for (const auto& r : rows_) out += join(r) + "\n";
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open '" + path + "' for writing");
        f << str();
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += ',';
            s += cells[i];
        }
        return s;
    }

    Metadata meta_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
}

// ---------------------------------------------------------------------------
// Command extension JSON
// ---------------------------------------------------------------------------

/// Kernel as nested arrays kernel[s][a][s'].
inline json ce_to_json(const CommandExtension& ce) {
    const std::size_t S = ce.num_states(), A = ce.num_actions();
    json kernel = json::array();
    for (std::size_t s = 0; s < S; ++s) {
        json rows = json::array();
        for (std::size_t a = 0; a < A; ++a) {
            json row = json::array();
            for (std::size_t n = 0; n < S; ++n) row.push_back(ce.kernel()(s, a, n));
            rows.push_back(std::move(row));
        }
        kernel.push_back(std::move(rows));
    }
    return json{{"num_states", S},
                {"num_actions", A},
                {"num_goals", ce.num_goals()},
                {"N", ce.horizon()},
                {"kernel", std::move(kernel)},
                {"mu", ce.mdp().mu()},
                {"goal_map", ce.goal_map()},
                {"command_dist", ce.command_dist()}};
}

/// Accepts the kernel nested or flat, and "horizon" as an alias of "N".
inline CommandExtension ce_from_json(const json& j) {
    try {
        const auto S = j.at("num_states").get<std::size_t>();
        const auto A = j.at("num_actions").get<std::size_t>();
        std::vector<double> flat;
        std::function<void(const json&)> collect = [&](const json& v) {
            if (v.is_array())
                for (const auto& e : v) collect(e);
            else
                flat.push_back(v.get<double>());
        };
        collect(j.at("kernel"));
        TransitionKernel kernel(S, A, std::move(flat));
        FiniteMdp mdp(std::move(kernel), j.at("mu").get<std::vector<double>>());
        const auto N = j.contains("N") ? j.at("N").get<std::size_t>() : j.at("horizon").get<std::size_t>();
        return build_ce(std::move(mdp), j.at("goal_map").get<std::vector<std::size_t>>(),
                        j.at("num_goals").get<std::size_t>(), N, j.at("command_dist").get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw ShapeMismatch(std::string("malformed command extension JSON: ") + e.what());
    }
}

inline json policy_to_json(const PolicyTensor& p) {
    return json{{"num_states", p.shape().num_states},
                {"N", p.shape().horizon},
                {"num_goals", p.shape().num_goals},
                {"num_actions", p.num_actions()},
                {"probs", p.data()}};
}

inline PolicyTensor policy_from_json(const json& j) {
    ExtendedShape shape{j.at("num_states").get<std::size_t>(), j.at("N").get<std::size_t>(),
                        j.at("num_goals").get<std::size_t>()};
    return PolicyTensor(shape, j.at("num_actions").get<std::size_t>(), j.at("probs").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline CsvTable segment_stats_csv(const SegmentStats& st, CsvTable::Metadata meta = {}) {
    meta.emplace_back("space", to_string(st.space));
    meta.emplace_back("c", format_real(st.c));
    CsvTable t(std::move(meta), {"s", "h", "g", "a", "num", "den", "nu"});
    for (std::size_t e = 0; e < st.shape.size(); ++e) {
        const auto [s, h, g] = st.shape.coords(e);
        for (std::size_t a = 0; a < st.num_actions; ++a) {
            CsvTable::Row r;
            r << s << h << g << a << st.numerator(e, a) << st.den[e] << st.nu[e];
            t.add(std::move(r));
        }
    }
    return t;
}

inline CsvTable values_csv(const ValueTables& v, CsvTable::Metadata meta = {}) {
    CsvTable t(std::move(meta), {"s", "h", "g", "a", "V", "Q"});
    for (std::size_t e = 0; e < v.shape.size(); ++e) {
        const auto [s, h, g] = v.shape.coords(e);
        for (std::size_t a = 0; a < v.num_actions; ++a) {
            CsvTable::Row r;
            r << s << h << g << a << v.v[e] << v.action_value(e, a);
            t.add(std::move(r));
        }
    }
    return t;
}

inline CsvTable critical_csv(const CriticalStateSet& c, const OptimalActionMap& o, CsvTable::Metadata meta = {}) {
    CsvTable t(std::move(meta), {"s", "h", "g", "critical", "optimal_actions"});
    for (std::size_t e = 0; e < c.shape.size(); ++e) {
        const auto [s, h, g] = c.shape.coords(e);
        std::string acts;
        for (std::size_t a : o.actions(e)) acts += (acts.empty() ? "" : " ") + std::to_string(a);
        CsvTable::Row r;
        r << s << h << g << c.contains(e) << acts;
        t.add(std::move(r));
    }
    return t;
}

inline json bound_report_json(const BoundReport& r) {
    json j{{"variant", to_string(r.variant)},
           {"alpha_denominator", r.alpha_form == AlphaForm::NNPlus1 ? "N(N+1)" : "N(N-1)"},
           {"delta", r.delta},
           {"epsilon", r.epsilon},
           {"horizon", r.horizon},
           {"num_actions", r.num_actions},
           {"min_mu", r.min_mu},
           {"optimal_sizes", r.optimal_sizes},
           {"valid", r.valid},
           {"violations", r.violations}};
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    auto arr = [&](const std::vector<double>& xs) {
        json a = json::array();
        for (double x : xs) a.push_back(num(x));
        return a;
    };
    if (r.variant == BoundVariant::UniqueOpt) {
        j["b"] = num(r.b);
        j["b0"] = num(r.b0);
        j["delta0"] = num(r.delta0);
        j["x_l"] = {{"value", num(r.x_l.value)}, {"residual", num(r.x_l.residual)}};
        j["x_u"] = {{"value", num(r.x_u.value)}, {"residual", num(r.x_u.residual)}};
    } else {
        j["alpha"] = num(r.alpha);
        j["beta_tilde"] = num(r.beta_tilde);
        j["beta"] = arr(r.beta);
        j["gamma"] = arr(r.gamma);
        j["kappa"] = arr(r.kappa);
        if (r.variant == BoundVariant::Epsilon) j["x_star"] = arr(r.x_star);
    }
    j["outputs"] = {{"optimal_mass_bound", num(r.optimal_mass_bound)},
                    {"policy_bound", num(r.policy_bound)},
                    {"q_bound", num(r.q_bound)},
                    {"v_bound", num(r.v_bound)},
                    {"j_bound", num(r.j_bound)},
                    {"rate", num(r.rate)}};
    return j;
}

inline std::vector<std::string> bound_csv_columns() {
    return {"variant", "delta",     "epsilon", "valid",  "alpha",  "gamma_N",
            "beta_N",  "kappa_N",   "x_l",     "x_u",    "optimal_mass_bound",
            "policy_bound", "q_bound", "v_bound", "j_bound", "rate"};
}

inline CsvTable::Row bound_csv_row(const BoundReport& r) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto last = [&](const std::vector<double>& v) { return v.empty() ? nan : v.back(); };
    const bool uo = r.variant == BoundVariant::UniqueOpt;
    CsvTable::Row row;
    row << to_string(r.variant) << r.delta << r.epsilon << r.valid << (uo ? nan : r.alpha) << last(r.gamma)
        << last(r.beta) << last(r.kappa) << (uo ? r.x_l.value : nan) << (uo ? r.x_u.value : nan)
        << r.optimal_mass_bound << r.policy_bound << r.q_bound << r.v_bound << r.j_bound << r.rate;
    return row;
}

inline CsvTable trace_csv(const std::vector<std::pair<std::string, IterationTrace>>& traces,
                          CsvTable::Metadata meta = {}) {
    CsvTable t(std::move(meta), {"config_id", "n", "optimal_mass", "J", "v_err", "q_err"});
    for (const auto& [id, tr] : traces)
        for (const auto& s : tr.steps) {
            CsvTable::Row r;
            r << id << s.n << s.optimal_mass << s.objective << s.v_err << s.q_err;
            t.add(std::move(r));
        }
    return t;
}

} // namespace udrl
