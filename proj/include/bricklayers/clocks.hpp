#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace brick {

/// RightLay: bricklayer i lays onto column i at rate r(omega_i).
/// LeftLay: bricklayer i+1 lays onto column i at rate r(-omega_{i+1}).
enum class Direction : std::uint8_t { RightLay = 0, LeftLay = 1 };

const char* to_string(Direction d) noexcept;

struct PlanePoint
{
    double t = 0.0;
    double y = 0.0;

    friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

class ClockOverflow : public std::runtime_error
{
public:
    ClockOverflow(double level, double cap);
    double cap() const noexcept { return cap_; }
    double level() const noexcept { return level_; }

private:
    double level_;
    double cap_;
};

/// Planar rate-1 Poisson process on R+ x (0, envelope], realized lazily as level strips
/// (0,1], (1,2], (2,4], ... Each strip is a sequential stream of exponential gaps keyed
/// by (plane key, strip index), so realized points never depend on query order.
class Plane
{
public:
    struct Strip
    {
        double y_lo = 0.0;
        double y_hi = 0.0;
        std::uint64_t key = 0;
        std::vector<PlanePoint> points;
    };

    Plane(std::uint64_t key, double envelope_cap);

    /// Earliest point with t > after_t, t <= horizon and y <= level.
    std::optional<PlanePoint> next_point(double after_t, double level,
                                         double horizon = std::numeric_limits<double>::infinity());

    /// Adds strips until the envelope covers `level`.
    void extend_envelope(double level);
    /// Realizes every existing strip up to time T.
    void extend_horizon(double T);

    double envelope_level() const noexcept;
    /// Time up to which every strip is fully realized.
    double horizon() const noexcept;
    std::size_t strip_count() const noexcept { return strips_.size(); }
    const Strip& strip(std::size_t k) const { return strips_.at(k); }

    /// Realized points in (t0, t1] x (y0, y1], sorted by time.
    std::vector<PlanePoint> points_in(double t0, double t1, double y0, double y1);

    /// Queries that accepted a point exactly at the requested level.
    std::uint64_t anomalies() const noexcept { return anomalies_; }

private:
    Strip& strip_at(std::size_t k);
    void grow(Strip& s, double until);
    static void generate_one(Strip& s);

    std::uint64_t key_;
    double cap_;
    std::vector<Strip> strips_;
    std::uint64_t anomalies_ = 0;
};

/// The family of planes N_i for every column and lay direction.
class PoissonPlaneSet
{
public:
    static double default_cap(double beta) { return std::exp(64.0 * beta); }

    explicit PoissonPlaneSet(std::uint64_t seed, double envelope_cap = default_cap(1.0));

    std::uint64_t seed() const noexcept { return seed_; }
    double envelope_cap() const noexcept { return cap_; }

    /// Stable reference; created on first use.
    Plane& plane(int column, Direction d);

    std::optional<PlanePoint> next_point(int column, Direction d, double after_t, double level,
                                         double horizon = std::numeric_limits<double>::infinity())
    {
        return plane(column, d).next_point(after_t, level, horizon);
    }

    std::uint64_t anomalies() const noexcept;
    std::size_t plane_count() const noexcept { return planes_.size(); }

    /// Drops all realized points and rekeys to `seed`.
    void reset(std::uint64_t seed);

private:
    static std::uint64_t slot(int column, Direction d) noexcept
    {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(column)) << 1) |
               static_cast<std::uint64_t>(d);
    }

    std::uint64_t seed_;
    double cap_;
    std::unordered_map<std::uint64_t, Plane> planes_;
};

} // namespace brick
