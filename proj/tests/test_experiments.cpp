#include "udrl/experiments.hpp"
#include "udrl/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace udrl;

namespace {

json small_config() {
    return json{{"domain", "bandit"},
                {"deltas", {0.01, 0.1}},
                {"n_steps", 5},
                {"seed", 3},
                {"initial_policy", {{"kind", "random"}, {"count", 3}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST(Io, FnvHash) {
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
    EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Io, RealFormatting) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(1.0), "1");
    EXPECT_EQ(format_real(std::nan("")), "nan");
}

TEST(Io, CsvTableLayout) {
    CsvTable t({{"seed", "4"}}, {"a", "b"});
    CsvTable::Row r;
    r << 0.5 << "x";
    t.add(std::move(r));
    EXPECT_EQ(t.str(), "# seed: 4\na,b\n0.5,x\n");
    CsvTable::Row bad;
    bad << 1;
    EXPECT_THROW(t.add(std::move(bad)), ShapeMismatch);
}

TEST(Io, CommandExtensionRoundTrip) {
    const Domain d = gridworld_3x3();
    const json j = ce_to_json(d.ce);
    EXPECT_EQ(j.at("N"), 4);
    EXPECT_EQ(j.at("kernel").size(), 8u);
    EXPECT_EQ(j.at("kernel")[0][0].size(), 8u);
    const auto back = ce_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.kernel().data(), d.ce.kernel().data());
    EXPECT_EQ(back.mu_bar(), d.ce.mu_bar());
    EXPECT_THROW(ce_from_json(json{{"num_states", 2}}), ShapeMismatch);
    const auto pi = PolicyTensor::uniform(d.ce);
    EXPECT_EQ(policy_from_json(policy_to_json(pi)).data(), pi.data());
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config(json{{"deltas", {0.1}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"domain", "nowhere"}, {"deltas", {0.1}}}), DomainError);
    EXPECT_THROW(parse_config(json{{"domain", "bandit"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"domain", "bandit"}, {"deltas", "x"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"domain", "bandit"}, {"deltas", {0.1}}, {"bound", "other"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"domain", "bandit"}, {"deltas", {0.1}}, {"epsilon", 1.0}}), ConfigError);
}

TEST(Config, AlphasBecomeDeltas) {
    const auto c = parse_config(json{{"domain", "z3_walk"}, {"alphas", {0.05}}});
    ASSERT_EQ(c.deltas.size(), 1u);
    EXPECT_DOUBLE_EQ(c.deltas[0], 0.1);
}

TEST(Sweeps, IterateIsIndependentOfThreadCount) {
    const auto cfg = parse_config(small_config());
    const auto one = run_iterate(cfg, 1);
    const auto four = run_iterate(cfg, 4);
    EXPECT_EQ(one.table.str(), four.table.str());
    EXPECT_EQ(one.table.size(), 2u * 3u * 6u);
    EXPECT_EQ(one.sidecar.dump(), four.sidecar.dump());
}

TEST(Sweeps, BoundsTableHasOneRowPerDelta) {
    auto j = small_config();
    j["deltas"] = {1e-4, 1e-3, 0.9};
    const auto out = run_bounds(parse_config(j));
    EXPECT_EQ(out.table.size(), 3u);
    EXPECT_NE(out.table.str().find("nan"), std::string::npos);
}

TEST(Sweeps, ParallelForRethrows) {
    EXPECT_THROW(parallel_for(8, 3, [](std::size_t i) {
                     if (i == 5) throw Error("boom");
                 }),
                 Error);
}

TEST(Reproduce, ExampleReportPasses) {
    const auto dir = std::filesystem::temp_directory_path() / "udrl_test_exb1";
    std::filesystem::create_directories(dir);
    const auto res = reproduce("exB1", dir.string(), 0, 1);
    EXPECT_TRUE(res.passed) << res.summary;
    ASSERT_FALSE(res.files.empty());
    EXPECT_NE(slurp(res.files.front()).find("# seed: 0"), std::string::npos);
    EXPECT_THROW(reproduce("fig99", dir.string(), 0, 1), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Validation, SuitePasses) {
    for (const auto& r : run_validation(5)) EXPECT_TRUE(r.passed) << r.name << " measured " << r.measured;
}

TEST(Cli, UnknownDomainIsAUsageError) {
    const auto err = std::filesystem::temp_directory_path() / "udrl_cli_err.txt";
    const std::string cmd = std::string(UDRL_LAB_PATH) + " domains export no_such_domain 2> " + err.string();
    const int status = std::system(cmd.c_str());
    ASSERT_NE(status, -1);
    EXPECT_EQ(WEXITSTATUS(status), 2);
    EXPECT_NE(slurp(err.string()).find("unknown domain"), std::string::npos);
    std::filesystem::remove(err);
}

TEST(Cli, DomainListNamesEveryDomain) {
    const auto out = std::filesystem::temp_directory_path() / "udrl_cli_list.txt";
    const std::string cmd = std::string(UDRL_LAB_PATH) + " domains list > " + out.string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const std::string text = slurp(out.string());
    for (const auto& n : domain_names()) EXPECT_NE(text.find(n), std::string::npos) << n;
    std::filesystem::remove(out);
}
