// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "bricklayers/coupling.hpp"
#include "bricklayers/dynamics.hpp"
#include "bricklayers/equilibrium.hpp"
#include "bricklayers/io.hpp"
#include "bricklayers/random.hpp"
#include "bricklayers/verify.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace brick;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& id, const std::string& title, double limit_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
        o = body();
    }
    catch (const std::exception& e)
    {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = limit_s <= 0.0 || secs < limit_s;
    const bool pass = o.ok && in_time;
    failures += !pass;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f s", secs);
    std::cout << (pass ? "PASS " : "FAIL ") << id << " " << title << ": " << o.detail << " [" << buf;
    if (limit_s > 0.0)
    {
        std::cout << " / limit " << limit_s << " s";
    }
    std::cout << "]" << (in_time ? "" : " runtime exceeded") << std::endl;
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::string describe(const CheckResult& r)
{
    std::string s = r.statistic_name + " = " + fmt(r.statistic);
    if (r.threshold)
    {
        s += ", threshold " + fmt(*r.threshold);
    }
    if (r.interval)
    {
        s += ", interval [" + fmt(r.interval->lo) + ", " + fmt(r.interval->hi) + "]";
    }
    if (r.target)
    {
        s += ", target " + fmt(*r.target);
    }
    if (!r.note.empty())
    {
        s += " (" + r.note + ")";
    }
    return s;
}

SuiteCommon common(std::uint64_t replicas, std::uint64_t seed = 2024)
{
    SuiteCommon c;
    c.replicas = replicas;
    c.seed = seed;
    return c;
}

Outcome equilibrium_exactness(const RateFunction& rate, bool zero_range)
{
    const Marginal m = build_marginal(rate, 0.0);
    const double z_oracle = static_cast<double>(oracle::partition(1.0, 0.0, zero_range));
    const double dz = std::abs(m.Z() - z_oracle);
    EquilibriumCheckOptions o;
    const auto r = equilibrium_check(rate, o);
    return {dz < 1e-10 && r.passed(),
            "|Z(0) - oracle| = " + fmt(dz) + " (Z(0) = " + fmt(m.Z()) + "); " + describe(r)};
}

Outcome generator(const RateFunction& rate)
{
    bool ok = true;
    std::string detail;
    for (double th : {0.0, 0.5})
    {
        const auto r = generator_check(rate, th, -1, 1,
                                       {CylinderFunction::indicator_equal(0, 0), CylinderFunction::occupation(0)},
                                       {8, 10, 12}, 1e-8);
        ok = ok && r.passed();
        detail += "theta " + fmt(th) + ": max residual at M=12 " + fmt(r.statistic) + "; ";
    }
    return {ok, detail + "tolerance 1e-8"};
}

Outcome attractivity(const RateFunction& rate)
{
    AttractivityOptions o;
    o.lo = -8;
    o.hi = 8;
    o.T = 2.0;
    const auto r = attractivity_check(rate, o, common(2000));
    return {r.passed(), describe(r)};
}

Outcome stationarity(const RateFunction& rate)
{
    StationarityOptions o;
    o.t = 5.0;
    o.l = -3;
    o.r = 3;
    const auto ok = stationarity_test(rate, o, common(10'000));
    o.left_rate_factor = 2.0;
    const auto bad = stationarity_test(rate, o, common(10'000));
    return {ok.passed() && bad.verdict == CheckVerdict::Fail,
            "reference: " + describe(ok) + " -> " + to_string(ok.verdict) + "; boundary rate x2: " + describe(bad) +
                " -> " + to_string(bad.verdict)};
}

int run_cli(const std::string& cmd)
{
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
    {
        if (e.is_regular_file())
        {
            std::ifstream in(e.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            out[fs::relative(e.path(), dir).string()] = ss.str();
        }
    }
    return out;
}

std::string dump_events(const std::vector<Event>& ev)
{
    std::ostringstream os;
    for (const auto& e : ev)
    {
        os << io::format_double(e.t) << ' ' << e.column << ' ' << static_cast<int>(e.dir) << '\n';
    }
    return os.str();
}

} // namespace

int main()
{
    const RateFunction brick = RateFunction::exponential_bricklayers(1.0);
    const RateFunction zr = RateFunction::zero_range_exponential(1.0);

    criterion("1", "equilibrium exactness", 1.0, [&] { return equilibrium_exactness(brick, false); });

    criterion("2", "density monotonicity and inversion", 1.0, [&] {
        double prev = -INFINITY;
        bool monotone = true;
        for (int k = -12; k <= 12; ++k)
        {
            const double rho = build_marginal(brick, 0.25 * k).mean_density();
            monotone = monotone && rho > prev;
            prev = rho;
        }
        double worst = 0.0;
        for (std::uint64_t k = 0; k < 10; ++k)
        {
            const double theta = -3.0 + 6.0 * counter_uniform(2, k);
            const double rho = build_marginal(brick, theta).mean_density();
            const double back = invert_density(brick, rho);
            worst = std::max({worst, std::abs(back - theta),
                              std::abs(build_marginal(brick, back).mean_density() - rho)});
        }
        return Outcome{monotone && worst < 1e-6, std::string("strictly increasing: ") + (monotone ? "yes" : "no") +
                                                     "; max round-trip error " + fmt(worst)};
    });

    criterion("3", "stochastic domination", 5.0, [&] {
        const std::vector<std::pair<double, double>> pairs{{-1.0, 1.0}, {-0.5, 0.5}, {0.0, 0.3}, {0.2, 2.0}, {-2.0, -1.9}};
        std::uint64_t violations = 0;
        for (std::size_t p = 0; p < pairs.size(); ++p)
        {
            const Marginal lo = build_marginal(brick, pairs[p].first);
            const Marginal hi = build_marginal(brick, pairs[p].second);
            for (std::uint64_t k = 0; k < 100'000; ++k)
            {
                try
                {
                    const auto [a, b] = monotone_coupled_sample(lo, hi, counter_uniform(derive_seed(3, p), k));
                    violations += a > b;
                }
                catch (const std::logic_error&)
                {
                    ++violations;
                }
            }
        }
        return Outcome{violations == 0, "violations " + std::to_string(violations) + " over 5 x 1e5 draws"};
    });

    criterion("4", "generator stationarity", 30.0, [&] { return generator(brick); });

    criterion("5", "CTMC oracle equivalence", 120.0, [&] {
        auto spec = ProcessSpec::boundary_driven(brick, 0, 0, 0.0);
        spec.clamp = 3;
        const auto init = LatticeState::flat(-1, 1);
        std::vector<double> counts(7, 0.0);
        const std::uint64_t n = 100'000;
        for (std::uint64_t k = 0; k < n; ++k)
        {
            PoissonPlaneSet clocks(derive_seed(5, k));
            SimulationOptions so;
            so.record_events = false;
            const auto tr = simulate(spec, init, 0.5, clocks, so);
            counts[static_cast<std::size_t>(tr.final_state.at(0) + 3)] += 1.0;
        }
        const auto exact = oracle::single_site_transient(1.0, 0.0, false, 3, 0, 0.5);
        double mass = 0.0;
        double tv = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k)
        {
            tv += std::abs(counts[k] / static_cast<double>(n) - exact[k]);
            mass += exact[k];
        }
        tv /= 2.0;
        const double budget = std::abs(1.0 - mass);
        return Outcome{tv < 0.02 + budget, "TV " + fmt(tv) + ", oracle truncation " + fmt(budget)};
    });

    criterion("6", "attractivity and volume monotonicity", 120.0, [&] { return attractivity(brick); });

    criterion("7", "sandwich preservation", 60.0, [&] {
        SandwichOptions o;
        const auto r = sandwich_check(brick, o, common(1000));
        return Outcome{r.passed(), describe(r)};
    });

    criterion("8", "growth bound", 180.0, [&] {
        GrowthOptions eq;
        const auto a = growth_bound_check(brick, eq, common(10'000));
        GrowthOptions step;
        step.theta1 = -0.5;
        step.theta2 = 0.5;
        step.step_profile = true;
        const auto b = growth_bound_check(brick, step, common(10'000));
        return Outcome{a.passed() && b.passed(), "equal: " + describe(a) + "; step: " + describe(b)};
    });

    criterion("9", "window stabilization", 120.0, [&] {
        StabilizationOptions o;
        const auto r = stabilization_check(brick, o, common(1000));
        WindowLimitOptions wo;
        const int half = 3 << wo.max_doublings;
        const auto flat = LatticeState::flat(-half, half);
        int mismatched = 0;
        for (std::uint64_t s = 0; s < 50; ++s)
        {
            PoissonPlaneSet clocks(derive_seed(9, s));
            const auto wl = window_limit(brick, flat, -2, 2, 1.0, clocks, wo);
            if (!wl.stabilized)
            {
                ++mismatched;
                continue;
            }
            PoissonPlaneSet again(derive_seed(9, s));
            const int R = wl.radius;
            const auto x = simulate(ProcessSpec::monotone(brick, -R, R), flat, 1.0, again);
            const auto y = simulate(ProcessSpec::monotone(brick, -2 * R, 2 * R), flat, 1.0, again);
            const auto ex = dump_events(restrict_events(x.events, -2, 2));
            mismatched += ex != dump_events(restrict_events(y.events, -2, 2)) || ex != dump_events(wl.events);
        }
        return Outcome{r.passed() && mismatched == 0,
                       describe(r) + "; consecutive volumes differing: " + std::to_string(mismatched) + " of 50"};
    });

    criterion("10", "stationarity in time", 180.0, [&] { return stationarity(brick); });

    criterion("11", "block-growth decay", 300.0, [&] {
        BlockGrowthOptions o;
        const auto r = block_growth_decay(brick, o, common(1'000'000));
        return Outcome{r.passed(), describe(r)};
    });

    criterion("12", "forward equation at t = 0", 120.0, [&] {
        ForwardOptions o;
        const auto r = forward_equation_check(brick, o, common(10'000));
        return Outcome{r.passed(), describe(r)};
    });

    criterion("13", "annihilation positivity", 120.0, [&] {
        AnnihilationCheckOptions o;
        const auto r = annihilation_check(brick, o, common(10'000));
        return Outcome{r.passed(), describe(r) + "; estimates " + r.details.at("estimate").dump()};
    });

    criterion("14", "ergodic averages", 120.0, [&] {
        ErgodicOptions o;
        const auto r = ergodic_average_check(brick, o, common(1));
        const double inv_z = 1.0 / static_cast<double>(oracle::partition(1.0, 0.0, false));
        const bool target_ok = r.target && std::abs(*r.target - inv_z) < 1e-9 && std::abs(inv_z - 0.398942) < 5e-7;
        return Outcome{r.passed() && target_ok, describe(r) + "; 1/Z(0) = " + fmt(inv_z)};
    });

    criterion("15", "determinism of simulate and couple", 0.0, [&] {
        const fs::path root = fs::temp_directory_path() / "brick_acceptance_determinism";
        fs::remove_all(root);
        fs::create_directories(root);
        const json cfg = {
            {"process", {{"kind", "boundary_driven"}, {"l", -5}, {"r", 5}, {"theta", 0.2}}},
            {"window", {{"lo", -6}, {"hi", 6}}},
            {"horizon", 4.0},
            {"snapshots", {1.0, 2.0, 3.0}},
            {"replicas", 3},
            {"seed", 31},
            {"coupling",
             {{"members",
               {{{"label", "omega"}, {"process", {{"kind", "monotone"}, {"l", -5}, {"r", 5}}}},
                {{"label", "zeta"}, {"process", {{"kind", "monotone"}, {"l", -5}, {"r", 5}}}, {"lay_brick", 0}}}},
              {"pairs", {{0, 1}}}}}};
        const fs::path cfg_path = root / "config.json";
        std::ofstream(cfg_path) << cfg.dump(2);
        std::size_t files = 0;
        bool same = true;
        for (const char* fmt_name : {"jsonl", "csv"})
        {
            json c = cfg;
            c["output"] = {{"format", fmt_name}};
            const fs::path p = root / (std::string(fmt_name) + ".json");
            std::ofstream(p) << c.dump(2);
            for (const char* run : {"a", "b"})
            {
                const fs::path dir = root / fmt_name / run;
                fs::create_directories(dir);
                for (const char* cmd : {"simulate", "couple"})
                {
                    const std::string line = "cd '" + dir.string() + "' && '" + BRICK_CLI + "' " + cmd +
                                             " --config '" + p.string() + "' --out out >/dev/null 2>&1";
                    if (run_cli(line) != 0)
                    {
                        return Outcome{false, std::string(cmd) + " exited nonzero"};
                    }
                }
            }
            const auto a = tree(root / fmt_name / "a");
            const auto b = tree(root / fmt_name / "b");
            same = same && a == b && !a.empty();
            files += a.size();
        }
        fs::remove_all(root);
        return Outcome{same, std::to_string(files) + " output files per run, byte-identical: " + (same ? "yes" : "no")};
    });

    criterion("16a", "zero range: equilibrium exactness", 1.0, [&] { return equilibrium_exactness(zr, true); });
    criterion("16b", "zero range: generator stationarity", 30.0, [&] { return generator(zr); });
    criterion("16c", "zero range: attractivity", 120.0, [&] { return attractivity(zr); });
    criterion("16d", "zero range: stationarity in time", 180.0, [&] { return stationarity(zr); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
