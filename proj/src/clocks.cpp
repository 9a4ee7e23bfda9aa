#include "bricklayers/clocks.hpp"

#include "bricklayers/random.hpp"

#include <algorithm>
#include <sstream>

namespace brick {

const char* to_string(Direction d) noexcept { return d == Direction::RightLay ? "R" : "L"; }

namespace {

std::string overflow_message(double level, double cap)
{
    std::ostringstream os;
    os.precision(6);
    os << "clock envelope overflow: rate level " << level << " exceeds cap " << cap;
    return os.str();
}

double strip_lo(std::size_t k) { return k == 0 ? 0.0 : std::ldexp(1.0, static_cast<int>(k) - 1); }
double strip_hi(std::size_t k) { return std::ldexp(1.0, static_cast<int>(k)); }

} // namespace

ClockOverflow::ClockOverflow(double level, double cap)
    : std::runtime_error(overflow_message(level, cap)), level_(level), cap_(cap)
{
}

Plane::Plane(std::uint64_t key, double envelope_cap) : key_(key), cap_(envelope_cap) {}

Plane::Strip& Plane::strip_at(std::size_t k)
{
    while (strips_.size() <= k)
    {
        const std::size_t j = strips_.size();
        Strip s;
        s.y_lo = strip_lo(j);
        s.y_hi = strip_hi(j);
        s.key = hash_words(key_, j);
        strips_.push_back(std::move(s));
    }
    return strips_[k];
}

void Plane::generate_one(Strip& s)
{
    // Point n uses counters 2n (gap) and 2n+1 (level).
    const auto n = static_cast<std::uint64_t>(s.points.size());
    const double width = s.y_hi - s.y_lo;
    const double gap = -std::log(counter_uniform(s.key, 2 * n)) / width;
    const double t = (s.points.empty() ? 0.0 : s.points.back().t) + gap;
    const double y = s.y_lo + width * counter_uniform(s.key, 2 * n + 1);
    s.points.push_back({t, std::min(y, s.y_hi)});
}

void Plane::grow(Strip& s, double until)
{
    while (s.points.empty() || s.points.back().t <= until)
    {
        generate_one(s);
    }
}

void Plane::extend_envelope(double level)
{
    if (level > cap_)
    {
        throw ClockOverflow(level, cap_);
    }
    std::size_t k = 0;
    while (strip_hi(k) < level)
    {
        ++k;
    }
    strip_at(k);
}

void Plane::extend_horizon(double T)
{
    for (auto& s : strips_)
    {
        grow(s, T);
    }
}

double Plane::envelope_level() const noexcept { return strips_.empty() ? 0.0 : strips_.back().y_hi; }

double Plane::horizon() const noexcept
{
    double h = std::numeric_limits<double>::infinity();
    for (const auto& s : strips_)
    {
        h = std::min(h, s.points.empty() ? 0.0 : s.points.back().t);
    }
    return strips_.empty() ? 0.0 : h;
}

std::optional<PlanePoint> Plane::next_point(double after_t, double level, double horizon)
{
    if (!(level > 0.0))
    {
        return std::nullopt;
    }
    if (level > cap_)
    {
        throw ClockOverflow(level, cap_);
    }
    std::optional<PlanePoint> best;
    const auto by_time = [](double t, const PlanePoint& p) { return t < p.t; };
    for (std::size_t k = 0; strip_lo(k) < level; ++k)
    {
        Strip& s = strip_at(k);
        const double limit = best ? std::min(horizon, best->t) : horizon;
        grow(s, after_t);
        auto it = std::upper_bound(s.points.begin(), s.points.end(), after_t, by_time);
        if (s.y_hi <= level)
        {
            if (it->t <= limit && (!best || it->t < best->t))
            {
                best = *it;
            }
            continue;
        }
        std::size_t idx = static_cast<std::size_t>(it - s.points.begin());
        while (true)
        {
            if (idx == s.points.size())
            {
                generate_one(s);
            }
            const PlanePoint p = s.points[idx];
            if (p.t > limit)
            {
                break;
            }
            if (p.y <= level)
            {
                best = p;
                break;
            }
            ++idx;
        }
    }
    if (best && best->y == level)
    {
        ++anomalies_;
    }
    return best;
}

std::vector<PlanePoint> Plane::points_in(double t0, double t1, double y0, double y1)
{
    if (y1 > envelope_level())
    {
        extend_envelope(y1);
    }
    std::vector<PlanePoint> out;
    for (std::size_t k = 0; k < strips_.size() && strip_lo(k) < y1; ++k)
    {
        Strip& s = strips_[k];
        grow(s, t1);
        for (const auto& p : s.points)
        {
            if (p.t > t0 && p.t <= t1 && p.y > y0 && p.y <= y1)
            {
                out.push_back(p);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const PlanePoint& a, const PlanePoint& b) { return a.t < b.t; });
    return out;
}

PoissonPlaneSet::PoissonPlaneSet(std::uint64_t seed, double envelope_cap) : seed_(seed), cap_(envelope_cap) {}

Plane& PoissonPlaneSet::plane(int column, Direction d)
{
    const std::uint64_t s = slot(column, d);
    auto it = planes_.find(s);
    if (it == planes_.end())
    {
        it = planes_.emplace(s, Plane(hash_words(seed_, s), cap_)).first;
    }
    return it->second;
}

std::uint64_t PoissonPlaneSet::anomalies() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& [k, p] : planes_)
    {
        n += p.anomalies();
    }
    return n;
}

void PoissonPlaneSet::reset(std::uint64_t seed)
{
    seed_ = seed;
    planes_.clear();
}

} // namespace brick
