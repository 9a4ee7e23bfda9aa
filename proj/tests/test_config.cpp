#include "bricklayers/config.hpp"
#include "bricklayers/io.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace brick;
using nlohmann::json;

TEST_CASE("defaults resolve and round-trip")
{
    const auto c = parse_config(json::object());
    const auto j = to_json(c);
    CHECK(parse_config(j) == c);
    CHECK(to_json(parse_config(j)) == j);
}

TEST_CASE("a full config round-trips")
{
    const json j = {
        {"rate", {{"family", "zero_range_exponential"}, {"beta", 0.8}}},
        {"process", {{"kind", "monotone"}, {"l", -2}, {"r", 4}, {"clamp", 5}}},
        {"window", {{"lo", -3}, {"hi", 5}}},
        {"initial", {{"kind", "explicit"}, {"omega", {0, 1, 2, 0, 0, 1, 0, 3, 0}}}},
        {"horizon", 2.5},
        {"snapshots", {0.5, 1.0}},
        {"replicas", 3},
        {"seed", 99},
        {"output", {{"dir", "x"}, {"prefix", "p"}, {"format", "csv"}}},
        {"coupling",
         {{"members",
           {{{"label", "a"}, {"process", {{"kind", "monotone"}, {"l", -1}, {"r", 1}}}},
            {{"label", "b"}, {"process", {{"kind", "monotone"}, {"l", -2}, {"r", 2}}}, {"lay_brick", 0}}}},
          {"pairs", {{0, 1}}}}},
        {"window_limit", {{"enabled", true}, {"a", -1}, {"b", 1}}},
        {"suites", {{"stationarity", {{"t", 2.0}}}}},
    };
    const auto c = parse_config(j);
    CHECK(c.rate.family == "zero_range_exponential");
    CHECK(c.process.clamp == 5);
    CHECK(c.coupling.members.at(1).lay_brick == 0);
    CHECK(c.suites.at("stationarity").at("t") == 2.0);
    CHECK(parse_config(to_json(c)) == c);
    const auto s = make_initial(c, make_rate(c.rate), 1);
    CHECK(s.lo == -3);
    CHECK(s.hi == 5);
    CHECK(s.at(4) == 3);
}

TEST_CASE("schema violations name the key")
{
    auto fails_with = [](const json& j, const std::string& needle) {
        try
        {
            (void)parse_config(j);
            FAIL("expected ConfigError for " << j.dump());
        }
        catch (const ConfigError& e)
        {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    fails_with({{"bogus", 1}}, "config.bogus");
    fails_with({{"rate", {{"family", "triangular"}}}}, "config.rate.family");
    fails_with({{"process", {{"l", "left"}}}}, "config.process.l");
    fails_with({{"process", {{"l", 3}, {"r", 1}}}}, "config.process");
    fails_with({{"horizon", -1.0}}, "config.horizon");
    fails_with({{"horizon", 1.0}, {"snapshots", {2.0}}}, "config.snapshots");
    fails_with({{"coupling", {{"pairs", {{0, 1}}}}}}, "config.coupling.pairs");
    fails_with({{"output", {{"format", "xml"}}}}, "config.output.format");
}

TEST_CASE("initial conditions")
{
    ExperimentConfig c;
    c.window = {-4, 4};
    const auto rate = make_rate(c.rate);
    c.initial.kind = "flat";
    CHECK(make_initial(c, rate, 1) == LatticeState::flat(-4, 4));
    c.initial.kind = "equilibrium";
    CHECK(make_initial(c, rate, 7) == make_initial(c, rate, 7));
    CHECK(make_initial(c, rate, 7).consistent());
    c.initial.kind = "step";
    CHECK(make_initial(c, rate, 7).consistent());
    c.initial.kind = "explicit";
    c.initial.omega = {1, 2};
    CHECK_THROWS_AS(make_initial(c, rate, 1), ConfigError);
}

TEST_CASE("trajectory files re-check heights on load")
{
    Trajectory tr;
    tr.initial = LatticeState::from_increments(-2, {0, 1, -1, 2, 0});
    tr.final_state = tr.initial;
    tr.final_state.lay_brick(0);
    tr.events.push_back({0.25, 0, Direction::LeftLay});
    tr.snapshots.push_back({0.1, tr.initial});
    std::stringstream ss;
    io::write_trajectory_jsonl(ss, json{{"seed", 3}}, tr);
    const auto back = io::read_trajectory_jsonl(ss);
    CHECK(back.header.at("seed") == 3);
    REQUIRE(back.events.size() == 1);
    CHECK(back.events[0] == tr.events[0]);
    REQUIRE(back.snapshots.size() == 2);
    CHECK(back.snapshots[1].state.omega == tr.final_state.omega);

    std::stringstream broken;
    broken << R"({"type":"snapshot","t":0.5,"lo":0,"omega":[1,2,3],"heights":[0,0]})" << '\n';
    CHECK_THROWS_AS(io::read_trajectory_jsonl(broken), io::FormatError);
}

TEST_CASE("atomic writes leave no partial file")
{
    const auto dir = std::filesystem::temp_directory_path() / "brick_atomic_test";
    std::filesystem::remove_all(dir);
    const auto path = dir / "out.txt";
    io::write_atomic(path, [](std::ostream& os) { os << "first\n"; });
    CHECK_THROWS(io::write_atomic(path, [](std::ostream& os) {
        os << "partial";
        throw std::runtime_error("boom");
    }));
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "first");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir))
    {
        ++files;
    }
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting round-trips")
{
    for (double x : {0.1, 1.0 / 3.0, 2.5e-17, 123456.789})
    {
        CHECK(std::stod(io::format_double(x)) == x);
    }
}
