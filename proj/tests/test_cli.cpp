// Drives the brick executable as a subprocess.
#include "bricklayers/config.hpp"
#include "bricklayers/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("brick_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args, const fs::path& cwd = {})
{
    const std::string prefix = cwd.empty() ? std::string() : "cd '" + cwd.string() + "' && ";
    const std::string cmd = prefix + "'" + BRICK_CLI + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& j)
{
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
    {
        out[e.path().filename().string()] = slurp(e.path());
    }
    return out;
}

} // namespace

TEST_CASE("usage errors exit 2")
{
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    const auto d = scratch("usage");
    CHECK(run("verify --suite not_a_suite --out " + d.string()) == 2);
    const auto cfg = write_config(d, {{"unknown_key", 1}});
    CHECK(run("simulate --config " + cfg.string() + " --out " + d.string()) == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("sample-equilibrium writes a symmetric normalized pmf")
{
    const auto d = scratch("eq");
    const auto cfg = write_config(d, {{"equilibrium", {{"theta", 0.0}, {"samples", 1000000}}}});
    REQUIRE(run("sample-equilibrium --config " + cfg.string() + " --out " + d.string()) == 0);
    std::ifstream in(d / "run_marginal.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "z,pmf");
    std::map<int, double> pmf;
    double sum = 0.0;
    while (std::getline(in, line))
    {
        const auto comma = line.find(',');
        const int z = std::stoi(line.substr(0, comma));
        const double p = std::stod(line.substr(comma + 1));
        pmf[z] = p;
        sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (const auto& [z, p] : pmf)
    {
        CHECK(pmf.at(-z) == p);
    }
    const auto manifest = json::parse(slurp(d / "run_sample-equilibrium_manifest.json"));
    const double mean = manifest.at("summary").at("mean_density").get<double>();
    const double var = manifest.at("summary").at("variance").get<double>();
    const double sample_mean = manifest.at("summary").at("sample_mean").get<double>();
    CHECK(std::abs(sample_mean - mean) < 4.0 * std::sqrt(var / 1e6));
    CHECK(manifest.at("config").at("seed") == 1);
}

TEST_CASE("sample-equilibrium rejects a divergent theta")
{
    const auto d = scratch("eqbad");
    const auto cfg = write_config(
        d, {{"rate", {{"family", "zero_range_linear_capped"}, {"cap", 1.0}}}, {"equilibrium", {{"theta", 0.5}}}});
    CHECK(run("sample-equilibrium --config " + cfg.string() + " --out " + d.string()) == 3);
}

TEST_CASE("simulate is byte-identical, derives seeds and re-checks heights")
{
    const auto a = scratch("sim_a");
    const auto b = scratch("sim_b");
    const json j = {{"process", {{"kind", "boundary_driven"}, {"l", -3}, {"r", 3}}},
                    {"window", {{"lo", -4}, {"hi", 4}}},
                    {"horizon", 3.0},
                    {"snapshots", {1.0, 2.0}},
                    {"replicas", 4}};
    const auto cfg = write_config(a, j);
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 5 --out out", a) == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 5 --out out", b) == 0);
    auto ta = tree(a / "out");
    auto tb = tree(b / "out");
    CHECK(ta == tb);
    std::set<std::uint64_t> seeds;
    for (int k = 0; k < 4; ++k)
    {
        std::ifstream in(a / "out" / ("run_" + std::to_string(k) + ".jsonl"));
        REQUIRE(in);
        const auto tr = brick::io::read_trajectory_jsonl(in);
        CHECK(tr.header.at("replica") == k);
        CHECK(tr.header.at("seed") == 5);
        seeds.insert(tr.header.at("replica_seed").get<std::uint64_t>());
        CHECK(tr.snapshots.size() == 3);
        CHECK(brick::parse_config(tr.header.at("config")) == brick::parse_config(tr.header.at("config")));
    }
    CHECK(seeds.size() == 4);
}

TEST_CASE("simulate with a window limit reports failure to stabilize")
{
    const auto d = scratch("sim_wl");
    const json j = {{"initial", {{"kind", "flat"}}},
                    {"horizon", 30.0},
                    {"window_limit", {{"enabled", true}, {"a", 0}, {"b", 0}, {"max_doublings", 1}}}};
    const auto cfg = write_config(d, j);
    CHECK(run("simulate --config " + cfg.string() + " --out " + d.string()) == 1);
    const json ok = {{"initial", {{"kind", "flat"}}},
                     {"horizon", 0.5},
                     {"window_limit", {{"enabled", true}, {"a", -1}, {"b", 1}, {"max_doublings", 8}}}};
    const auto cfg2 = write_config(d, ok);
    CHECK(run("simulate --config " + cfg2.string() + " --out " + d.string()) == 0);
}

TEST_CASE("couple writes trajectories, discrepancy and census")
{
    const auto a = scratch("cpl_a");
    const auto b = scratch("cpl_b");
    const json j = {{"process", {{"kind", "monotone"}, {"l", -5}, {"r", 5}}},
                    {"window", {{"lo", -6}, {"hi", 6}}},
                    {"horizon", 2.0},
                    {"snapshots", {1.0}},
                    {"replicas", 2},
                    {"coupling",
                     {{"members",
                       {{{"label", "omega"}, {"process", {{"kind", "monotone"}, {"l", -5}, {"r", 5}}}},
                        {{"label", "zeta"},
                         {"process", {{"kind", "monotone"}, {"l", -5}, {"r", 5}}},
                         {"lay_brick", 0}}}},
                      {"pairs", {{0, 1}}},
                      {"full_recheck", true}}}};
    const auto cfg = write_config(a, j);
    REQUIRE(run("couple --config " + cfg.string() + " --out out", a) == 0);
    REQUIRE(run("couple --config " + cfg.string() + " --out out", b) == 0);
    auto ta = tree(a / "out");
    auto tb = tree(b / "out");
    CHECK(ta == tb);
    REQUIRE(ta.count("run_0_discrepancy.jsonl"));
    std::istringstream disc(ta.at("run_0_discrepancy.jsonl"));
    std::string line;
    std::getline(disc, line);
    CHECK(json::parse(line).at("type") == "header");
    std::getline(disc, line);
    const auto first = json::parse(line);
    CHECK(first.at("t") == 0.0);
    CHECK(first.at("d") == json::array({json::array({0, -1}), json::array({1, 1})}));
    CHECK(ta.at("run_0_census.csv").rfind("pair,t,particles,antiparticles\n", 0) == 0);
}

TEST_CASE("verify exit codes")
{
    const auto d = scratch("verify");
    const json good = {{"replicas", 3000}, {"suites", {{"stationarity", json::object()}}}};
    CHECK(run("verify --config " + write_config(d, good).string() + " --out " + d.string()) == 0);
    const auto results = json::parse(slurp(d / "run_verify.json"));
    CHECK(results.at("results").at(0).at("verdict") == "pass");
    CHECK(results.at("config").at("replicas") == 3000);

    const json bad = {{"replicas", 3000}, {"suites", {{"stationarity", {{"left_rate_factor", 2.0}}}}}};
    CHECK(run("verify --config " + write_config(d, bad).string() + " --out " + d.string()) == 1);
}
