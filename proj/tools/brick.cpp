// Experiment runner: sample-equilibrium, simulate, couple, verify.
#include "bricklayers/config.hpp"
#include "bricklayers/coupling.hpp"
#include "bricklayers/io.hpp"
#include "bricklayers/parallel.hpp"
#include "bricklayers/random.hpp"
#include "bricklayers/verify.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>

namespace {

using namespace brick;
using nlohmann::json;

enum Exit : int { kPass = 0, kCheckFail = 1, kUsage = 2, kRuntime = 3 };

struct Overrides
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicas;
    std::optional<std::string> out;
    std::vector<std::string> suites;
};

ExperimentConfig resolve(const Overrides& o)
{
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed)
    {
        c.seed = *o.seed;
    }
    if (o.replicas)
    {
        c.replicas = *o.replicas;
    }
    if (o.out)
    {
        c.output.dir = *o.out;
    }
    // Overridden config must still validate.
    return parse_config(to_json(c));
}

std::filesystem::path out_path(const ExperimentConfig& c, const std::string& stem)
{
    return std::filesystem::path(c.output.dir) / (c.output.prefix + "_" + stem);
}

json run_header(const ExperimentConfig& c, std::uint64_t replica, std::uint64_t rs)
{
    return {{"config", to_json(c)}, {"seed", c.seed}, {"replica", replica}, {"replica_seed", rs}};
}

void write_manifest(const ExperimentConfig& c, const std::string& command, const json& files, const json& extra = {})
{
    json m{{"command", command}, {"config", to_json(c)}, {"seed", c.seed}, {"files", files}};
    if (!extra.is_null())
    {
        m["summary"] = extra;
    }
    io::write_atomic(out_path(c, command + "_manifest.json"), [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

PoissonPlaneSet clocks_for(const RateFunction& rate, std::uint64_t rs)
{
    return PoissonPlaneSet(derive_seed(rs, 0), PoissonPlaneSet::default_cap(rate.beta_bound()));
}

void write_trajectory(const ExperimentConfig& c, const std::filesystem::path& path, const json& header,
                      const Trajectory& tr)
{
    io::write_atomic(path, [&](std::ostream& os) {
        if (c.output.format == "csv")
        {
            io::write_snapshots_csv(os, tr);
        }
        else
        {
            io::write_trajectory_jsonl(os, header, tr);
        }
    });
}

std::string ext(const ExperimentConfig& c) { return c.output.format == "csv" ? ".csv" : ".jsonl"; }

int cmd_sample_equilibrium(const ExperimentConfig& c)
{
    const RateFunction rate = make_rate(c.rate);
    const Marginal m = build_marginal(rate, c.equilibrium.theta, c.equilibrium.tol);
    const std::uint64_t key = derive_seed(c.seed, 0);
    std::vector<int> samples(c.equilibrium.samples);
    double sum = 0.0;
    for (std::uint64_t k = 0; k < c.equilibrium.samples; ++k)
    {
        samples[k] = m.sample(counter_uniform(key, k));
        sum += samples[k];
    }
    const auto pmf_path = out_path(c, "marginal.csv");
    const auto sample_path = out_path(c, "samples.json");
    io::write_atomic(pmf_path, [&](std::ostream& os) { io::write_marginal_csv(os, m); });
    io::write_atomic(sample_path, [&](std::ostream& os) {
        os << json{{"config", to_json(c)}, {"seed", c.seed}, {"theta", c.equilibrium.theta}, {"samples", samples}}.dump()
           << '\n';
    });
    const double n = static_cast<double>(samples.size());
    const json summary{{"Z", m.Z()},
                       {"mean_density", m.mean_density()},
                       {"variance", m.variance()},
                       {"sample_mean", n > 0 ? sum / n : 0.0},
                       {"support", {m.support_lo(), m.support_hi()}},
                       {"tail_bound", m.tail_bound()}};
    write_manifest(c, "sample-equilibrium", {pmf_path.string(), sample_path.string()}, summary);
    std::cout << summary.dump(2) << '\n';
    return kPass;
}

int cmd_simulate(const ExperimentConfig& c)
{
    const RateFunction rate = make_rate(c.rate);
    const ProcessSpec spec = make_process(c.process, rate);
    std::vector<std::string> files(c.replicas);
    std::vector<std::string> failures(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        auto clocks = clocks_for(rate, rs);
        json header = run_header(c, k, rs);
        Trajectory tr;
        if (c.window_limit.enabled)
        {
            const auto& wc = c.window_limit;
            WindowLimitOptions wo;
            wo.max_doublings = wc.max_doublings;
            const int w = std::max(std::abs(wc.a), std::abs(wc.b)) + 1;
            ExperimentConfig big = c;
            big.window = {-(w << wc.max_doublings), w << wc.max_doublings};
            const LatticeState init = make_initial(big, rate, derive_seed(rs, 1));
            const auto wl = window_limit(rate, init, wc.a, wc.b, c.horizon, clocks, wo);
            header["window_limit"] = {{"stabilized", wl.stabilized},
                                      {"radius", wl.radius},
                                      {"doublings", wl.doublings},
                                      {"tried_event_counts", wl.tried_event_counts},
                                      {"diagnostic", wl.diagnostic}};
            header["spec"] = "window_limit[" + std::to_string(wc.a) + "," + std::to_string(wc.b) + "]";
            if (!wl.stabilized)
            {
                failures[k] = wl.diagnostic;
                return;
            }
            tr.initial = wl.initial;
            tr.events = wl.events;
            tr.event_count = wl.events.size();
            for (double t : c.snapshots)
            {
                LatticeState s = tr.replay(t);
                s.time = t;
                tr.snapshots.push_back({t, s});
            }
            tr.final_state = wl.final_state;
            tr.final_state.time = c.horizon;
        }
        else
        {
            header["spec"] = spec.describe();
            const LatticeState init = make_initial(c, rate, derive_seed(rs, 1));
            SimulationOptions so;
            so.snapshot_times = c.snapshots;
            tr = simulate(spec, init, c.horizon, clocks, so);
        }
        const auto path = out_path(c, std::to_string(k) + ext(c));
        write_trajectory(c, path, header, tr);
        files[k] = path.string();
    });
    json written = json::array();
    json failed = json::array();
    for (std::size_t k = 0; k < c.replicas; ++k)
    {
        if (failures[k].empty())
        {
            written.push_back(files[k]);
        }
        else
        {
            failed.push_back({{"replica", k}, {"diagnostic", failures[k]}});
            std::cerr << "replica " << k << ": " << failures[k] << '\n';
        }
    }
    write_manifest(c, "simulate", written, json{{"not_stabilized", failed}});
    std::cout << "simulate: " << written.size() << " of " << c.replicas << " replicas written to " << c.output.dir
              << '\n';
    return failed.empty() ? kPass : kCheckFail;
}

int cmd_couple(const ExperimentConfig& c)
{
    if (c.coupling.members.empty())
    {
        throw ConfigError("config.coupling.members: couple needs at least one member");
    }
    const RateFunction rate = make_rate(c.rate);
    std::vector<json> files(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        const LatticeState init = make_initial(c, rate, derive_seed(rs, 1));
        CoupledRun run;
        for (const auto& m : c.coupling.members)
        {
            LatticeState s = init;
            if (m.lay_brick)
            {
                s.lay_brick(*m.lay_brick);
            }
            run.members.push_back({m.label, make_process(m.process, rate), s});
        }
        run.pairs = c.coupling.pairs;
        CoupledOptions co;
        co.horizon = c.horizon;
        co.snapshot_times = c.snapshots;
        co.full_recheck = c.coupling.full_recheck;
        auto clocks = clocks_for(rate, rs);
        const auto res = run_coupled(run, clocks, co);
        json list = json::array();
        const std::string stem = std::to_string(k);
        for (std::size_t j = 0; j < run.members.size(); ++j)
        {
            json header = run_header(c, k, rs);
            header["member"] = run.members[j].label;
            header["spec"] = run.members[j].spec.describe();
            const auto path = out_path(c, stem + "_" + std::to_string(j) + ext(c));
            write_trajectory(c, path, header, res.trajectories[j]);
            list.push_back(path.string());
        }
        const auto dpath = out_path(c, stem + "_discrepancy.jsonl");
        io::write_atomic(dpath, [&](std::ostream& os) {
            os << json{{"type", "header"}, {"config", to_json(c)}, {"seed", c.seed}, {"replica", k},
                       {"replica_seed", rs}}
                      .dump()
               << '\n';
            io::write_discrepancy_jsonl(os, res.history);
        });
        std::vector<io::CensusRow> rows;
        std::vector<double> times = c.snapshots;
        times.push_back(c.horizon);
        for (std::size_t p = 0; p < run.pairs.size(); ++p)
        {
            for (double t : times)
            {
                rows.push_back({p, t, second_class_census(run, res, p, t)});
            }
        }
        const auto cpath = out_path(c, stem + "_census.csv");
        io::write_atomic(cpath, [&](std::ostream& os) { io::write_census_csv(os, rows); });
        list.push_back(dpath.string());
        list.push_back(cpath.string());
        files[k] = list;
    });
    write_manifest(c, "couple", files);
    std::cout << "couple: " << c.replicas << " replicas written to " << c.output.dir << '\n';
    return kPass;
}

int cmd_verify(const ExperimentConfig& c, const std::vector<std::string>& requested)
{
    std::vector<std::string> names = requested;
    if (names.empty())
    {
        for (const auto& [k, v] : c.suites.items())
        {
            names.push_back(k);
        }
    }
    if (names.empty())
    {
        throw UnknownSuite("no suite selected (use --suite or config.suites)");
    }
    const auto& known = suite_names();
    for (const auto& n : names)
    {
        if (std::find(known.begin(), known.end(), n) == known.end())
        {
            throw UnknownSuite("unknown suite '" + n + "'");
        }
    }
    const RateFunction rate = make_rate(c.rate);
    SuiteCommon common;
    common.seed = c.seed;
    common.replicas = c.replicas;
    common.threads = c.threads;
    json results = json::array();
    bool all = true;
    std::printf("%-18s %-12s %14s  %s\n", "suite", "verdict", "statistic", "rule");
    for (const auto& n : names)
    {
        const json params = c.suites.contains(n) ? c.suites.at(n) : json::object();
        const CheckResult r = run_suite(n, rate, params, common);
        all = all && r.passed();
        results.push_back(r.to_json());
        std::printf("%-18s %-12s %14.6g  %s\n", n.c_str(), to_string(r.verdict).c_str(), r.statistic, r.rule.c_str());
    }
    const auto path = out_path(c, "verify.json");
    io::write_atomic(path, [&](std::ostream& os) {
        os << json{{"config", to_json(c)}, {"seed", c.seed}, {"results", results}}.dump(2) << '\n';
    });
    std::cout << "results: " << path.string() << '\n';
    return all ? kPass : kCheckFail;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bricklayers and zero-range simulator"};
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--replicas", o.replicas, "replica count");
    };
    auto* eq = app.add_subcommand("sample-equilibrium", "dump mu^theta and draw samples");
    auto* sim = app.add_subcommand("simulate", "run trajectories");
    auto* cpl = app.add_subcommand("couple", "run coupled trajectories");
    auto* ver = app.add_subcommand("verify", "run verification suites");
    for (auto* s : {eq, sim, cpl, ver})
    {
        add_common(s);
    }
    ver->add_option("--suite", o.suites, "suite name (repeatable)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try
    {
        const ExperimentConfig c = resolve(o);
        if (eq->parsed())
        {
            return cmd_sample_equilibrium(c);
        }
        if (sim->parsed())
        {
            return cmd_simulate(c);
        }
        if (cpl->parsed())
        {
            return cmd_couple(c);
        }
        return cmd_verify(c, o.suites);
    }
    catch (const UnknownSuite& e)
    {
        std::cerr << "error: " << e.what() << "\navailable suites:";
        for (const auto& n : suite_names())
        {
            std::cerr << ' ' << n;
        }
        std::cerr << '\n';
        return kUsage;
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
