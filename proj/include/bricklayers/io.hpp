#pragma once

#include "bricklayers/coupling.hpp"
#include "bricklayers/dynamics.hpp"
#include "bricklayers/equilibrium.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace brick::io {

class FormatError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Writes through a temporary sibling and renames it over `path`; on any exception the
/// target is left untouched and the temporary removed.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// Shortest round-trip decimal form.
std::string format_double(double x);

/// JSON lines: a header {"type":"header", ...header}, then {"type":"event","t","i","dir"} records,
/// then {"type":"snapshot","t","omega","heights","lo"} records, then a final snapshot.
void write_trajectory_jsonl(std::ostream& out, const nlohmann::json& header, const Trajectory& tr);
/// Snapshot table: t,site,omega,height (height empty at the last site).
void write_snapshots_csv(std::ostream& out, const Trajectory& tr);

struct LoadedTrajectory
{
    nlohmann::json header;
    std::vector<Event> events;
    std::vector<Snapshot> snapshots;
};

/// Parses write_trajectory_jsonl output; every snapshot is re-checked for height consistency.
LoadedTrajectory read_trajectory_jsonl(std::istream& in);

/// {"t", "pair", "d": [[site, d], ...]} per record.
void write_discrepancy_jsonl(std::ostream& out, const std::vector<DiscrepancyRecord>& history);

struct CensusRow
{
    std::size_t pair = 0;
    double t = 0.0;
    Census census;
};
void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows);

/// z,pmf table over the support.
void write_marginal_csv(std::ostream& out, const Marginal& m);

} // namespace brick::io
