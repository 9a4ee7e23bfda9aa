#include "bricklayers/clocks.hpp"
#include "bricklayers/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace brick;

namespace {

std::vector<PlanePoint> walk(Plane& p, double level, double T)
{
    std::vector<PlanePoint> out;
    double t = 0.0;
    while (auto q = p.next_point(t, level, T))
    {
        out.push_back(*q);
        t = q->t;
    }
    return out;
}

} // namespace

TEST_CASE("queries are deterministic and order independent")
{
    PoissonPlaneSet a(99);
    PoissonPlaneSet b(99);
    const auto p1 = a.next_point(3, Direction::RightLay, 0.0, 2.5);
    const auto p2 = a.next_point(3, Direction::RightLay, 0.0, 2.5);
    REQUIRE(p1);
    CHECK(*p1 == *p2);
    // b realizes a higher strip and later times first.
    (void)b.next_point(3, Direction::RightLay, 5.0, 40.0);
    (void)b.next_point(-7, Direction::LeftLay, 0.0, 1.0);
    CHECK(*b.next_point(3, Direction::RightLay, 0.0, 2.5) == *p1);
    CHECK(walk(a.plane(3, Direction::LeftLay), 3.0, 50.0) == walk(b.plane(3, Direction::LeftLay), 3.0, 50.0));
}

TEST_CASE("extending the envelope leaves realized points untouched")
{
    Plane p(1234, 1e6);
    const auto before = walk(p, 1.5, 100.0);
    p.extend_envelope(500.0);
    p.extend_horizon(200.0);
    CHECK(walk(p, 1.5, 100.0) == before);
}

TEST_CASE("lower levels see a subset of the points")
{
    Plane p(77, 1e6);
    const auto low = walk(p, 0.8, 200.0);
    const auto high = walk(p, 3.0, 200.0);
    CHECK(low.size() < high.size());
    for (const auto& q : low)
    {
        CHECK(std::find(high.begin(), high.end(), q) != high.end());
    }
    for (const auto& q : high)
    {
        if (q.y <= 0.8)
        {
            CHECK(std::find(low.begin(), low.end(), q) != low.end());
        }
    }
}

TEST_CASE("gaps at a fixed level are exponential")
{
    const double L = 2.7;
    Plane p(2024, 1e6);
    std::vector<double> gaps;
    double t = 0.0;
    while (gaps.size() < 100'000)
    {
        const auto q = p.next_point(t, L);
        REQUIRE(q);
        gaps.push_back(q->t - t);
        t = q->t;
    }
    const auto ks = stats::ks_test(gaps, [L](double x) { return 1.0 - std::exp(-L * x); });
    CHECK(ks.p > 0.01);
}

TEST_CASE("strip counts")
{
    Plane p(5, 1e6);
    const double T = 1000.0;
    const auto unit = p.points_in(0.0, T, 0.0, 1.0);
    CHECK(std::abs(static_cast<double>(unit.size()) - T) < 4.0 * std::sqrt(T));

    // Superposition: counts per unit time cell of (0,2] against Poisson(2).
    p.extend_envelope(2.0);
    const auto two = p.points_in(0.0, T, 0.0, 2.0);
    std::vector<std::uint64_t> hist(12, 0);
    std::vector<std::uint64_t> per(static_cast<std::size_t>(T), 0);
    for (const auto& q : two)
    {
        ++per[std::min<std::size_t>(static_cast<std::size_t>(q.t), per.size() - 1)];
    }
    for (auto c : per)
    {
        ++hist[std::min<std::size_t>(c, hist.size() - 1)];
    }
    std::vector<double> probs(hist.size());
    double tail = 1.0;
    double pk = std::exp(-2.0);
    for (std::size_t k = 0; k + 1 < probs.size(); ++k)
    {
        probs[k] = pk;
        tail -= pk;
        pk *= 2.0 / static_cast<double>(k + 1);
    }
    probs.back() = tail;
    CHECK(stats::chi_square_gof(hist, probs).p > 0.01);
}

TEST_CASE("envelope cap overflow names the cap")
{
    Plane p(1, 100.0);
    try
    {
        (void)p.next_point(0.0, 1000.0);
        FAIL("expected overflow");
    }
    catch (const ClockOverflow& e)
    {
        CHECK(e.cap() == 100.0);
        CHECK(std::string(e.what()).find("100") != std::string::npos);
    }
}

TEST_CASE("reset rekeys the set")
{
    PoissonPlaneSet s(1);
    const auto a = s.next_point(0, Direction::RightLay, 0.0, 1.0);
    s.reset(2);
    CHECK(s.plane_count() == 0);
    const auto b = s.next_point(0, Direction::RightLay, 0.0, 1.0);
    s.reset(1);
    CHECK(*s.next_point(0, Direction::RightLay, 0.0, 1.0) == *a);
    CHECK_FALSE(*a == *b);
}
