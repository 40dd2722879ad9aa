// udrl_lab: experiment runner for the eUDRL library.
//
//   udrl_lab iterate   --config cfg.json --out DIR [--jobs N] [--seed S]
//   udrl_lab bounds    --config cfg.json --out DIR
//   udrl_lab reproduce fig5 --out DIR [--seed S]   (or "all")
//   udrl_lab validate  [--seed S] [--tolerance T]
//   udrl_lab domains list | domains export NAME [--out FILE]
//
// Exit codes: 0 ok, 1 validation or runtime failure, 2 usage error.

#include "udrl/experiments.hpp"
#include "udrl/udrl.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

udrl::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw udrl::ConfigError("cannot read config '" + path + "'");
    try {
        return udrl::json::parse(f);
    } catch (const udrl::json::exception& e) {
        throw udrl::ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

struct Common {
    std::string config;
    std::string out = "out";
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
};

/// Flags override the matching config keys.
udrl::ExperimentConfig load_config(const Common& c) {
    udrl::json j = load_json(c.config);
    if (c.seed) j["seed"] = *c.seed;
    if (c.tolerance) j["tolerance"] = *c.tolerance;
    return udrl::parse_config(j);
}

void write_sweep(const udrl::SweepOutput& s, const std::string& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    s.table.write(dir + "/" + stem + ".csv");
    udrl::write_text(dir + "/" + stem + ".json", s.sidecar.dump(2) + "\n");
    std::cout << "wrote " << dir << "/" << stem << ".csv (" << s.table.size() << " rows)\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"eUDRL experiment runner"};
    app.require_subcommand(1);

    Common it, bd, rp, va;
    auto add_common = [](CLI::App* sub, Common& c, bool config) {
        if (config) sub->add_option("--config", c.config, "JSON experiment config")->required();
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", c.seed, "random seed (overrides config)");
        sub->add_option("--tolerance", c.tolerance, "numeric tolerance (overrides config)");
    };

    auto* iterate_cmd = app.add_subcommand("iterate", "run eUDRL over a delta grid and a set of initial policies");
    add_common(iterate_cmd, it, true);
    auto* bounds_cmd = app.add_subcommand("bounds", "evaluate a bound pipeline over a delta grid");
    add_common(bounds_cmd, bd, true);

    std::string figure;
    auto* reproduce_cmd = app.add_subcommand("reproduce", "write the data behind a figure or example report");
    reproduce_cmd->add_option("figure", figure, "fig1..fig10, exB1, exB2 or all")->required();
    add_common(reproduce_cmd, rp, false);

    auto* validate_cmd = app.add_subcommand("validate", "run the invariant suite");
    add_common(validate_cmd, va, false);

    auto* domains_cmd = app.add_subcommand("domains", "list or export built-in domains");
    domains_cmd->require_subcommand(1);
    auto* list_cmd = domains_cmd->add_subcommand("list", "print domain names");
    std::string export_name, export_out;
    auto* export_cmd = domains_cmd->add_subcommand("export", "print a domain as command-extension JSON");
    export_cmd->add_option("name", export_name, "domain name")->required();
    export_cmd->add_option("--out", export_out, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*iterate_cmd) {
            write_sweep(udrl::run_iterate(load_config(it), it.jobs), it.out, "iterate");
        } else if (*bounds_cmd) {
            write_sweep(udrl::run_bounds(load_config(bd)), bd.out, "bounds");
        } else if (*reproduce_cmd) {
            const std::uint64_t seed = rp.seed.value_or(0);
            std::vector<std::string> figs;
            if (figure == "all") figs = udrl::figure_ids();
            else figs.push_back(figure);
            bool ok = true;
            for (const auto& f : figs) {
                const auto res = udrl::reproduce(f, rp.out, seed, rp.jobs);
                for (const auto& path : res.files) std::cout << "wrote " << path << "\n";
                if (!res.summary.empty())
                    std::cout << f << ": " << (res.passed ? "PASS" : "FAIL") << " (" << res.summary << ")\n";
                ok = ok && res.passed;
            }
            return ok ? kOk : kFailure;
        } else if (*validate_cmd) {
            const auto results = udrl::run_validation(va.seed.value_or(0), va.tolerance.value_or(1e-10));
            bool ok = true;
            for (const auto& r : results) {
                std::printf("%s  %-50s measured %.3e  tolerance %.1e%s%s\n", r.passed ? "PASS" : "FAIL",
                            r.name.c_str(), r.measured, r.tolerance, r.detail.empty() ? "" : "  ",
                            r.detail.c_str());
                ok = ok && r.passed;
            }
            return ok ? kOk : kFailure;
        } else if (*domains_cmd) {
            if (*list_cmd) {
                for (const auto& n : udrl::domain_names()) std::cout << n << "\n";
            } else if (*export_cmd) {
                const udrl::Domain d = udrl::make_domain(export_name);
                udrl::json j = udrl::ce_to_json(d.ce);
                j["name"] = d.spec.name;
                j["delta_per_alpha"] = d.spec.delta_per_alpha;
                const std::string text = j.dump(2) + "\n";
                if (export_out.empty()) std::cout << text;
                else udrl::write_text(export_out, text);
            }
        }
    } catch (const udrl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const udrl::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
