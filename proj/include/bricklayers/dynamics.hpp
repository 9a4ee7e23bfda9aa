#pragma once

#include "bricklayers/clocks.hpp"
#include "bricklayers/rates.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace brick {

/// Increments omega_i on sites [lo, hi] and heights h_c on columns [lo, hi-1]; column c
/// sits between sites c and c+1, and omega_{c+1} = h_c - h_{c+1}.
struct LatticeState
{
    int lo = 0;
    int hi = 0;
    std::vector<int> omega;
    std::vector<std::int64_t> heights;
    double time = 0.0;

    int site_count() const noexcept { return hi - lo + 1; }
    bool has_site(int i) const noexcept { return i >= lo && i <= hi; }
    bool has_column(int c) const noexcept { return c >= lo && c < hi; }

    int& at(int i) { return omega[static_cast<std::size_t>(i - lo)]; }
    int at(int i) const { return omega[static_cast<std::size_t>(i - lo)]; }
    std::int64_t& height(int c) { return heights[static_cast<std::size_t>(c - lo)]; }
    std::int64_t height(int c) const { return heights[static_cast<std::size_t>(c - lo)]; }

    /// Builds a state on [lo, lo + omega.size() - 1]; the anchor column (0, clamped into the
    /// window) gets height `anchor_height`.
    static LatticeState from_increments(int lo, std::vector<int> omega, std::int64_t anchor_height = 0);
    static LatticeState flat(int lo, int hi);

    /// Applies the brick at column c: omega_c -= 1, omega_{c+1} += 1, h_c += 1.
    void lay_brick(int c);

    /// Checks omega_{c+1} = h_c - h_{c+1} on the window.
    bool consistent() const noexcept;

    friend bool operator==(const LatticeState&, const LatticeState&) = default;
};

/// Anchor column used by from_increments for a window [lo, hi].
int anchor_column(int lo, int hi) noexcept;

/// h_c for c in [lo, hi-1] from omega on [lo, hi], with h at `anchor` equal to `anchor_height`.
std::vector<std::int64_t> heights_from_increments(int lo, const std::vector<int>& omega, int anchor,
                                                  std::int64_t anchor_height);
/// omega on [lo+1, hi] from heights on [lo, hi-1].
std::vector<int> increments_from_heights(const std::vector<std::int64_t>& heights);

enum class ProcessKind : std::uint8_t { Monotone, BoundaryDriven };

class SpecError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Monotone(l, r): columns l..r-1 active, everything else frozen.
/// BoundaryDriven(l, r, theta): additionally column l-1 gets a virtual right-lay at rate e^theta
/// and column r a virtual left-lay at rate e^-theta (zero for zero range).
struct ProcessSpec
{
    ProcessKind kind = ProcessKind::Monotone;
    int l = 0;
    int r = 0;
    double theta = 0.0;
    RateFunction rate = RateFunction::exponential_bricklayers(1.0);
    /// Overrides for the virtual bricklayer rates.
    std::optional<double> left_virtual_rate;
    std::optional<double> right_virtual_rate;
    /// Optional occupancy clamp |omega_i| <= M on sites l..r (jumps leaving the box are suppressed).
    std::optional<int> clamp;

    static ProcessSpec monotone(RateFunction rate, int l, int r);
    static ProcessSpec boundary_driven(RateFunction rate, int l, int r, double theta);

    int column_lo() const noexcept { return kind == ProcessKind::Monotone ? l : l - 1; }
    /// Last active column.
    int column_hi() const noexcept { return kind == ProcessKind::Monotone ? r - 1 : r; }
    int site_lo() const noexcept { return kind == ProcessKind::Monotone ? l : l - 1; }
    int site_hi() const noexcept { return kind == ProcessKind::Monotone ? r : r + 1; }

    double left_rate() const;
    double right_rate() const;

    /// Throws SpecError on an invalid volume or a window that misses required sites.
    void validate(const LatticeState& window) const;
    std::string describe() const;
};

struct LayRates
{
    double right = 0.0;
    double left = 0.0;
    double total() const noexcept { return right + left; }
};

LayRates rate_field(const ProcessSpec& spec, const LatticeState& state, int column);
double slot_rate(const ProcessSpec& spec, const LatticeState& state, int column, Direction d);

struct Event
{
    double t = 0.0;
    int column = 0;
    Direction dir = Direction::RightLay;

    friend bool operator==(const Event&, const Event&) = default;
};

struct Snapshot
{
    double t = 0.0;
    LatticeState state;
};

struct Trajectory
{
    LatticeState initial;
    std::vector<Event> events;
    std::vector<Snapshot> snapshots;
    LatticeState final_state;
    std::uint64_t event_count = 0;

    /// Replays events from the initial state up to time t.
    LatticeState replay(double t) const;
};

class SimulationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Called after each plane point that moved at least one member; `jumped` flags which.
using EventObserver =
    std::function<void(const Event& e, std::span<const LatticeState* const> states, std::span<const bool> jumped)>;

struct SimulationOptions
{
    double horizon = 0.0;
    std::vector<double> snapshot_times;
    bool record_events = true;
    std::uint64_t max_events = 500'000'000;
    EventObserver observer;
};

/// Runs `spec` from `init` to the horizon, reading randomness only from `clocks`.
Trajectory simulate(const ProcessSpec& spec, const LatticeState& init, double T, PoissonPlaneSet& clocks,
                    const SimulationOptions& opts = {});

namespace detail {

struct EngineMember
{
    const ProcessSpec* spec = nullptr;
    Trajectory* trajectory = nullptr;
};

struct EngineStats
{
    std::uint64_t points = 0;
    std::uint64_t anomalies = 0;
};

/// Shared event loop: every point (t, y) on plane (c, d) moves each member whose slot rate is >= y.
/// Trajectories must carry their initial states; final states are written back.
EngineStats run_engine(std::span<EngineMember> members, PoissonPlaneSet& clocks, const SimulationOptions& opts);

} // namespace detail

struct WindowLimitOptions
{
    /// Base half-width w; volume k is [-2^k w, 2^k w].
    int base_half_width = 0;
    int max_doublings = 12;
    std::uint64_t max_events = 500'000'000;
};

struct WindowLimitResult
{
    bool stabilized = false;
    /// Half-width of the smaller of the two agreeing volumes.
    int radius = 0;
    /// Doublings k of the smaller agreeing volume.
    int doublings = 0;
    int target_lo = 0;
    int target_hi = 0;
    /// Events on columns [target_lo - 1, target_hi] for the accepted volume.
    std::vector<Event> events;
    LatticeState initial;
    LatticeState final_state;
    /// Restricted event counts per tried volume.
    std::vector<std::size_t> tried_event_counts;
    std::string diagnostic;
};

/// Infinite-volume approximation: monotone processes on growing volumes sharing `clocks`,
/// accepted once consecutive restricted event lists on [a, b] agree exactly.
/// `init` must cover the largest volume; sites outside it count as frozen.
WindowLimitResult window_limit(const RateFunction& rate, const LatticeState& init, int a, int b, double T,
                               PoissonPlaneSet& clocks, const WindowLimitOptions& opts = {});

std::vector<Event> restrict_events(const std::vector<Event>& events, int a, int b);
LatticeState restrict_state(const LatticeState& s, int a, int b);

} // namespace brick
