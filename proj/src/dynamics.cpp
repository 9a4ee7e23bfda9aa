#include "bricklayers/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <sstream>

namespace brick {

int anchor_column(int lo, int hi) noexcept
{
    // Columns are lo..hi-1.
    return std::clamp(0, lo, std::max(lo, hi - 1));
}

std::vector<std::int64_t> heights_from_increments(int lo, const std::vector<int>& omega, int anchor,
                                                  std::int64_t anchor_height)
{
    const int n = static_cast<int>(omega.size());
    if (n < 2)
    {
        return {};
    }
    const int hi = lo + n - 1;
    std::vector<std::int64_t> h(static_cast<std::size_t>(n - 1));
    auto H = [&](int c) -> std::int64_t& { return h[static_cast<std::size_t>(c - lo)]; };
    auto W = [&](int i) { return static_cast<std::int64_t>(omega[static_cast<std::size_t>(i - lo)]); };
    anchor = std::clamp(anchor, lo, hi - 1);
    H(anchor) = anchor_height;
    for (int c = anchor + 1; c <= hi - 1; ++c)
    {
        H(c) = H(c - 1) - W(c);
    }
    for (int c = anchor - 1; c >= lo; --c)
    {
        H(c) = H(c + 1) + W(c + 1);
    }
    return h;
}

std::vector<int> increments_from_heights(const std::vector<std::int64_t>& heights)
{
    std::vector<int> w;
    for (std::size_t k = 1; k < heights.size(); ++k)
    {
        w.push_back(static_cast<int>(heights[k - 1] - heights[k]));
    }
    return w;
}

LatticeState LatticeState::from_increments(int lo, std::vector<int> omega, std::int64_t anchor_height)
{
    LatticeState s;
    s.lo = lo;
    s.hi = lo + static_cast<int>(omega.size()) - 1;
    s.heights = heights_from_increments(lo, omega, anchor_column(s.lo, s.hi), anchor_height);
    s.omega = std::move(omega);
    return s;
}

LatticeState LatticeState::flat(int lo, int hi)
{
    return from_increments(lo, std::vector<int>(static_cast<std::size_t>(hi - lo + 1), 0));
}

void LatticeState::lay_brick(int c)
{
    at(c) -= 1;
    at(c + 1) += 1;
    std::int64_t& h = height(c);
    if (h == std::numeric_limits<std::int64_t>::max())
    {
        throw SimulationError("height overflow at column " + std::to_string(c));
    }
    h += 1;
}

bool LatticeState::consistent() const noexcept
{
    if (static_cast<int>(omega.size()) != site_count() || static_cast<int>(heights.size()) != site_count() - 1)
    {
        return false;
    }
    for (int c = lo; c + 1 < hi; ++c)
    {
        if (height(c) - height(c + 1) != at(c + 1))
        {
            return false;
        }
    }
    return true;
}

ProcessSpec ProcessSpec::monotone(RateFunction rate, int l, int r)
{
    ProcessSpec s;
    s.kind = ProcessKind::Monotone;
    s.l = l;
    s.r = r;
    s.rate = std::move(rate);
    return s;
}

ProcessSpec ProcessSpec::boundary_driven(RateFunction rate, int l, int r, double theta)
{
    ProcessSpec s;
    s.kind = ProcessKind::BoundaryDriven;
    s.l = l;
    s.r = r;
    s.theta = theta;
    s.rate = std::move(rate);
    return s;
}

double ProcessSpec::left_rate() const
{
    if (left_virtual_rate)
    {
        return *left_virtual_rate;
    }
    return std::exp(theta);
}

double ProcessSpec::right_rate() const
{
    if (right_virtual_rate)
    {
        return *right_virtual_rate;
    }
    // Zero range drops the e^-theta terms.
    return rate.regime() == Regime::ZeroRange ? 0.0 : std::exp(-theta);
}

void ProcessSpec::validate(const LatticeState& window) const
{
    if (kind == ProcessKind::Monotone ? !(l < r) : !(l <= r))
    {
        throw SpecError("invalid volume [" + std::to_string(l) + ", " + std::to_string(r) + "]");
    }
    if (!window.has_site(site_lo()) || !window.has_site(site_hi()))
    {
        throw SpecError("window [" + std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                        "] does not cover sites [" + std::to_string(site_lo()) + ", " + std::to_string(site_hi()) +
                        "] of " + describe());
    }
    if (!window.consistent())
    {
        throw SpecError("initial state heights inconsistent with increments");
    }
    for (int i = l; i <= r; ++i)
    {
        const int w = window.at(i);
        if (rate.regime() == Regime::ZeroRange && w < 0)
        {
            throw SpecError("zero-range occupancy negative at site " + std::to_string(i));
        }
        if (clamp && std::abs(w) > *clamp)
        {
            throw SpecError("initial occupancy outside clamp at site " + std::to_string(i));
        }
    }
    if (!(left_rate() >= 0.0) || !(right_rate() >= 0.0))
    {
        throw SpecError("virtual bricklayer rates must be nonnegative");
    }
}

std::string ProcessSpec::describe() const
{
    std::ostringstream os;
    if (kind == ProcessKind::Monotone)
    {
        os << "monotone[" << l << "," << r << "]";
    }
    else
    {
        os << "boundary_driven(" << l << "," << r << ",theta=" << theta << ")";
    }
    return os.str();
}

namespace {

bool clamp_blocks(const ProcessSpec& spec, const LatticeState& s, int c)
{
    if (!spec.clamp)
    {
        return false;
    }
    const int M = *spec.clamp;
    if (c >= spec.l && c <= spec.r && s.at(c) - 1 < (spec.rate.regime() == Regime::ZeroRange ? 0 : -M))
    {
        return true;
    }
    return c + 1 >= spec.l && c + 1 <= spec.r && s.at(c + 1) + 1 > M;
}

} // namespace

double slot_rate(const ProcessSpec& spec, const LatticeState& s, int c, Direction d)
{
    if (c < spec.column_lo() || c > spec.column_hi())
    {
        return 0.0;
    }
    double v = 0.0;
    if (spec.kind == ProcessKind::BoundaryDriven && c == spec.l - 1)
    {
        v = d == Direction::RightLay ? spec.left_rate() : spec.rate(-s.at(c + 1));
    }
    else if (spec.kind == ProcessKind::BoundaryDriven && c == spec.r)
    {
        v = d == Direction::RightLay ? spec.rate(s.at(c)) : spec.right_rate();
    }
    else
    {
        v = d == Direction::RightLay ? spec.rate(s.at(c)) : spec.rate(-s.at(c + 1));
    }
    if (v > 0.0 && clamp_blocks(spec, s, c))
    {
        return 0.0;
    }
    return v;
}

LayRates rate_field(const ProcessSpec& spec, const LatticeState& s, int c)
{
    if (!s.has_column(c))
    {
        return {};
    }
    return {slot_rate(spec, s, c, Direction::RightLay), slot_rate(spec, s, c, Direction::LeftLay)};
}

LatticeState Trajectory::replay(double t) const
{
    LatticeState s = initial;
    for (const auto& e : events)
    {
        if (e.t > t)
        {
            break;
        }
        s.lay_brick(e.column);
    }
    s.time = t;
    return s;
}

namespace detail {

namespace {

struct QueueEntry
{
    double t;
    double y;
    int column;
    Direction dir;
    std::uint32_t version;
};

struct Later
{
    bool operator()(const QueueEntry& a, const QueueEntry& b) const noexcept
    {
        if (a.t != b.t)
        {
            return a.t > b.t;
        }
        if (a.column != b.column)
        {
            return a.column > b.column;
        }
        return static_cast<int>(a.dir) > static_cast<int>(b.dir);
    }
};

} // namespace

EngineStats run_engine(std::span<EngineMember> members, PoissonPlaneSet& clocks, const SimulationOptions& opts)
{
    EngineStats stats;
    const double T = opts.horizon;
    if (members.empty())
    {
        return stats;
    }
    int cmin = std::numeric_limits<int>::max();
    int cmax = std::numeric_limits<int>::min();
    std::vector<LatticeState*> states;
    std::vector<const LatticeState*> cstates;
    for (auto& m : members)
    {
        m.spec->validate(m.trajectory->initial);
        cmin = std::min(cmin, m.spec->column_lo());
        cmax = std::max(cmax, m.spec->column_hi());
        m.trajectory->final_state = m.trajectory->initial;
        m.trajectory->events.clear();
        m.trajectory->snapshots.clear();
        m.trajectory->event_count = 0;
        states.push_back(&m.trajectory->final_state);
        cstates.push_back(&m.trajectory->final_state);
    }
    std::vector<double> grid = opts.snapshot_times;
    std::sort(grid.begin(), grid.end());
    std::size_t next_snap = 0;
    auto snapshot_until = [&](double t, bool inclusive) {
        while (next_snap < grid.size() && (grid[next_snap] < t || (inclusive && grid[next_snap] <= t)))
        {
            for (std::size_t k = 0; k < members.size(); ++k)
            {
                Snapshot sn{grid[next_snap], *states[k]};
                sn.state.time = grid[next_snap];
                members[k].trajectory->snapshots.push_back(std::move(sn));
            }
            ++next_snap;
        }
    };

    const int ncols = cmax - cmin + 1;
    std::vector<Plane*> planes(static_cast<std::size_t>(2 * ncols));
    std::vector<std::uint32_t> version(static_cast<std::size_t>(2 * ncols), 0);
    auto slot_index = [&](int c, Direction d) {
        return static_cast<std::size_t>(2 * (c - cmin) + static_cast<int>(d));
    };
    for (int c = cmin; c <= cmax; ++c)
    {
        planes[slot_index(c, Direction::RightLay)] = &clocks.plane(c, Direction::RightLay);
        planes[slot_index(c, Direction::LeftLay)] = &clocks.plane(c, Direction::LeftLay);
    }

    std::priority_queue<QueueEntry, std::vector<QueueEntry>, Later> queue;
    auto requery = [&](int c, Direction d, double after) {
        if (c < cmin || c > cmax)
        {
            return;
        }
        const std::size_t k = slot_index(c, d);
        ++version[k];
        double level = 0.0;
        for (std::size_t m = 0; m < members.size(); ++m)
        {
            level = std::max(level, slot_rate(*members[m].spec, *states[m], c, d));
        }
        if (!(level > 0.0))
        {
            return;
        }
        if (const auto p = planes[k]->next_point(after, level, T))
        {
            queue.push({p->t, p->y, c, d, version[k]});
        }
    };

    const std::uint64_t anomalies_before = clocks.anomalies();
    if (T > 0.0)
    {
        for (int c = cmin; c <= cmax; ++c)
        {
            requery(c, Direction::RightLay, 0.0);
            requery(c, Direction::LeftLay, 0.0);
        }
    }
    std::unique_ptr<bool[]> jumped(new bool[members.size()]);
    while (!queue.empty())
    {
        const QueueEntry e = queue.top();
        queue.pop();
        if (e.version != version[slot_index(e.column, e.dir)])
        {
            continue;
        }
        if (e.t > T)
        {
            break;
        }
        snapshot_until(e.t, false);
        bool any = false;
        for (std::size_t m = 0; m < members.size(); ++m)
        {
            const double rate = slot_rate(*members[m].spec, *states[m], e.column, e.dir);
            jumped[m] = rate > 0.0 && e.y <= rate;
            if (jumped[m])
            {
                any = true;
                states[m]->lay_brick(e.column);
                states[m]->time = e.t;
                ++members[m].trajectory->event_count;
                if (opts.record_events)
                {
                    members[m].trajectory->events.push_back({e.t, e.column, e.dir});
                }
            }
        }
        ++stats.points;
        if (stats.points > opts.max_events)
        {
            throw SimulationError("event safety limit " + std::to_string(opts.max_events) + " exceeded at t = " +
                                  std::to_string(e.t));
        }
        requery(e.column - 1, Direction::LeftLay, e.t);
        requery(e.column, Direction::RightLay, e.t);
        requery(e.column, Direction::LeftLay, e.t);
        requery(e.column + 1, Direction::RightLay, e.t);
        if (any && opts.observer)
        {
            opts.observer(Event{e.t, e.column, e.dir}, cstates, std::span<const bool>(jumped.get(), members.size()));
        }
    }
    snapshot_until(T, true);
    for (auto* s : states)
    {
        s->time = T;
    }
    stats.anomalies = clocks.anomalies() - anomalies_before;
    return stats;
}

} // namespace detail

Trajectory simulate(const ProcessSpec& spec, const LatticeState& init, double T, PoissonPlaneSet& clocks,
                    const SimulationOptions& opts)
{
    if (!(T >= 0.0))
    {
        throw SimulationError("horizon must be nonnegative");
    }
    Trajectory traj;
    traj.initial = init;
    SimulationOptions o = opts;
    o.horizon = T;
    detail::EngineMember m{&spec, &traj};
    detail::run_engine(std::span<detail::EngineMember>(&m, 1), clocks, o);
    return traj;
}

std::vector<Event> restrict_events(const std::vector<Event>& events, int a, int b)
{
    std::vector<Event> out;
    for (const auto& e : events)
    {
        if (e.column >= a - 1 && e.column <= b)
        {
            out.push_back(e);
        }
    }
    return out;
}

LatticeState restrict_state(const LatticeState& s, int a, int b)
{
    a = std::max(a, s.lo);
    b = std::min(b, s.hi);
    LatticeState out;
    out.lo = a;
    out.hi = b;
    out.time = s.time;
    out.omega.assign(s.omega.begin() + (a - s.lo), s.omega.begin() + (b - s.lo) + 1);
    out.heights.assign(s.heights.begin() + (a - s.lo), s.heights.begin() + (b - s.lo));
    return out;
}

WindowLimitResult window_limit(const RateFunction& rate, const LatticeState& init, int a, int b, double T,
                               PoissonPlaneSet& clocks, const WindowLimitOptions& opts)
{
    if (a > b)
    {
        throw SpecError("empty target window");
    }
    WindowLimitResult res;
    res.target_lo = a;
    res.target_hi = b;
    const int w = opts.base_half_width > 0 ? opts.base_half_width : std::max(std::abs(a), std::abs(b)) + 1;
    SimulationOptions so;
    so.horizon = T;
    so.max_events = opts.max_events;

    std::optional<std::vector<Event>> previous;
    Trajectory prev_traj;
    for (int k = 0; k <= opts.max_doublings; ++k)
    {
        const long half = static_cast<long>(w) << k;
        if (half > std::numeric_limits<int>::max() / 2 || !init.has_site(static_cast<int>(-half)) ||
            !init.has_site(static_cast<int>(half)))
        {
            res.diagnostic = "initial window [" + std::to_string(init.lo) + ", " + std::to_string(init.hi) +
                             "] too small for volume k=" + std::to_string(k);
            break;
        }
        const int l = static_cast<int>(-half);
        const int r = static_cast<int>(half);
        const ProcessSpec spec = ProcessSpec::monotone(rate, l, r);
        const Trajectory traj = simulate(spec, restrict_state(init, l, r), T, clocks, so);
        auto restricted = restrict_events(traj.events, a, b);
        res.tried_event_counts.push_back(restricted.size());
        if (previous && *previous == restricted)
        {
            res.stabilized = true;
            res.doublings = k - 1;
            res.radius = static_cast<int>(half / 2);
            res.events = std::move(restricted);
            res.initial = restrict_state(prev_traj.initial, a - 1, b + 1);
            res.final_state = restrict_state(prev_traj.final_state, a - 1, b + 1);
            return res;
        }
        previous = std::move(restricted);
        prev_traj = traj;
    }
    if (res.diagnostic.empty())
    {
        res.diagnostic = "not stabilized within " + std::to_string(opts.max_doublings) + " doublings";
    }
    if (previous)
    {
        res.events = *previous;
        res.initial = restrict_state(prev_traj.initial, a - 1, b + 1);
        res.final_state = restrict_state(prev_traj.final_state, a - 1, b + 1);
    }
    return res;
}

} // namespace brick
