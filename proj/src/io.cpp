#include "bricklayers/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>
#include <unistd.h>

namespace brick::io {

using nlohmann::json;

void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body)
{
    if (path.has_parent_path())
    {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    try
    {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
            {
                throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
            }
            body(out);
            out.flush();
            if (!out)
            {
                throw std::runtime_error("write to '" + tmp.string() + "' failed");
            }
        }
        std::filesystem::rename(tmp, path);
    }
    catch (...)
    {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

std::string format_double(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

json snapshot_json(const Snapshot& s, bool final)
{
    return {{"type", final ? "final" : "snapshot"},
            {"t", s.t},
            {"lo", s.state.lo},
            {"omega", s.state.omega},
            {"heights", s.state.heights}};
}

} // namespace

void write_trajectory_jsonl(std::ostream& out, const json& header, const Trajectory& tr)
{
    json h = header;
    h["type"] = "header";
    h["initial"] = {{"lo", tr.initial.lo}, {"omega", tr.initial.omega}, {"heights", tr.initial.heights}};
    h["event_count"] = tr.event_count;
    out << h.dump() << '\n';
    for (const auto& e : tr.events)
    {
        out << json{{"type", "event"}, {"t", e.t}, {"i", e.column}, {"dir", to_string(e.dir)}}.dump() << '\n';
    }
    for (const auto& s : tr.snapshots)
    {
        out << snapshot_json(s, false).dump() << '\n';
    }
    out << snapshot_json({tr.final_state.time, tr.final_state}, true).dump() << '\n';
}

void write_snapshots_csv(std::ostream& out, const Trajectory& tr)
{
    out << "t,site,omega,height\n";
    auto rows = [&](double t, const LatticeState& s) {
        for (int i = s.lo; i <= s.hi; ++i)
        {
            out << format_double(t) << ',' << i << ',' << s.at(i) << ',';
            if (s.has_column(i))
            {
                out << s.height(i);
            }
            out << '\n';
        }
    };
    for (const auto& s : tr.snapshots)
    {
        rows(s.t, s.state);
    }
    rows(tr.final_state.time, tr.final_state);
}

LoadedTrajectory read_trajectory_jsonl(std::istream& in)
{
    LoadedTrajectory out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
    {
        ++n;
        if (line.empty())
        {
            continue;
        }
        json j;
        try
        {
            j = json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "header")
            {
                out.header = j;
            }
            else if (type == "event")
            {
                const std::string d = j.at("dir").get<std::string>();
                out.events.push_back({j.at("t").get<double>(), j.at("i").get<int>(),
                                      d == "L" ? Direction::LeftLay : Direction::RightLay});
            }
            else if (type == "snapshot" || type == "final")
            {
                LatticeState s;
                s.lo = j.at("lo").get<int>();
                s.omega = j.at("omega").get<std::vector<int>>();
                s.hi = s.lo + static_cast<int>(s.omega.size()) - 1;
                s.heights = j.at("heights").get<std::vector<std::int64_t>>();
                s.time = j.at("t").get<double>();
                if (s.heights.size() + 1 != s.omega.size() || !s.consistent())
                {
                    throw FormatError("inconsistent heights in snapshot at line " + std::to_string(n));
                }
                out.snapshots.push_back({s.time, std::move(s)});
            }
            else
            {
                throw FormatError("unknown record type '" + type + "' at line " + std::to_string(n));
            }
        }
        catch (const json::exception& e)
        {
            throw FormatError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_discrepancy_jsonl(std::ostream& out, const std::vector<DiscrepancyRecord>& history)
{
    for (const auto& r : history)
    {
        json d = json::array();
        for (const auto& [site, v] : r.d)
        {
            d.push_back({site, v});
        }
        out << json{{"t", r.t}, {"pair", r.pair}, {"d", d}}.dump() << '\n';
    }
}

void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows)
{
    out << "pair,t,particles,antiparticles\n";
    for (const auto& r : rows)
    {
        out << r.pair << ',' << format_double(r.t) << ',' << r.census.particles << ',' << r.census.antiparticles << '\n';
    }
}

void write_marginal_csv(std::ostream& out, const Marginal& m)
{
    out << "z,pmf\n";
    for (int z = m.support_lo(); z <= m.support_hi(); ++z)
    {
        out << z << ',' << format_double(m.pmf(z)) << '\n';
    }
}

} // namespace brick::io
