#include "bricklayers/coupling.hpp"
#include "bricklayers/dynamics.hpp"
#include "bricklayers/random.hpp"
#include "bricklayers/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <json.hpp>

using namespace brick;

namespace {
const RateFunction kBrick = RateFunction::exponential_bricklayers(1.0);
}

TEST_CASE("heights from increments")
{
    const auto flat = LatticeState::flat(-5, 5);
    for (auto h : flat.heights)
    {
        CHECK(h == 0);
    }
    // omega_1 = 2, omega_2 = -1, anchored at h_0 = 0.
    const auto s = LatticeState::from_increments(-1, {0, 0, 2, -1, 0});
    CHECK(s.height(0) == 0);
    CHECK(s.height(1) == -2);
    CHECK(s.height(2) == -1);
    CHECK(s.height(-1) == 0);
    CHECK(s.consistent());

    SplitMix64 g(3);
    std::vector<int> w(40);
    for (auto& x : w)
    {
        x = static_cast<int>(g() % 9) - 4;
    }
    const auto r = LatticeState::from_increments(-20, w);
    const auto back = increments_from_heights(r.heights);
    for (std::size_t k = 1; k + 1 < w.size(); ++k)
    {
        CHECK(back[k - 1] == w[k]);
    }
    auto b = r;
    b.lay_brick(3);
    CHECK(b.consistent());
    CHECK(b.height(3) == r.height(3) + 1);
    CHECK(b.at(3) == r.at(3) - 1);
    CHECK(b.at(4) == r.at(4) + 1);
}

TEST_CASE("rate fields")
{
    const auto flat = LatticeState::flat(-4, 4);
    const auto mono = ProcessSpec::monotone(kBrick, -2, 2);
    for (int c = -2; c <= 1; ++c)
    {
        CHECK(rate_field(mono, flat, c).total() == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
    }
    CHECK(rate_field(mono, flat, 2).total() == 0.0);
    CHECK(rate_field(mono, flat, -3).total() == 0.0);

    const auto bd = ProcessSpec::boundary_driven(kBrick, -1, 1, 0.0);
    CHECK(rate_field(bd, flat, -2).right == doctest::Approx(1.0));
    CHECK(rate_field(bd, flat, -2).left == doctest::Approx(std::exp(-0.5)));
    CHECK(rate_field(bd, flat, 1).right == doctest::Approx(std::exp(-0.5)));
    CHECK(rate_field(bd, flat, 1).left == doctest::Approx(1.0));
    CHECK(rate_field(bd, flat, 2).total() == 0.0);

    const auto zr = ProcessSpec::boundary_driven(RateFunction::zero_range_exponential(1.0), -1, 1, 0.3);
    CHECK(rate_field(zr, flat, 1).left == 0.0);
    CHECK(rate_field(zr, flat, -2).right == doctest::Approx(std::exp(0.3)));
}

TEST_CASE("invalid specs are rejected")
{
    const auto flat = LatticeState::flat(-2, 2);
    CHECK_THROWS_AS(ProcessSpec::monotone(kBrick, 1, 1).validate(flat), SpecError);
    CHECK_THROWS_AS(ProcessSpec::boundary_driven(kBrick, -2, 2, 0.0).validate(flat), SpecError);
    CHECK_NOTHROW(ProcessSpec::boundary_driven(kBrick, 0, 0, 0.0).validate(flat));
}

TEST_CASE("zero horizon leaves the state unchanged")
{
    PoissonPlaneSet clocks(1);
    const auto init = LatticeState::flat(-4, 4);
    const auto tr = simulate(ProcessSpec::monotone(kBrick, -3, 3), init, 0.0, clocks);
    CHECK(tr.events.empty());
    CHECK(tr.final_state.omega == init.omega);
    CHECK(tr.final_state.heights == init.heights);
}

TEST_CASE("replay reproduces snapshots and the final state")
{
    PoissonPlaneSet clocks(11);
    const auto init = sample_product_state(build_marginal(kBrick, 0.0), -6, 6, 5);
    SimulationOptions so;
    so.snapshot_times = {0.5, 1.0, 1.5};
    const auto tr = simulate(ProcessSpec::boundary_driven(kBrick, -5, 5, 0.0), init, 2.0, clocks, so);
    REQUIRE(tr.snapshots.size() == 3);
    for (const auto& s : tr.snapshots)
    {
        const auto r = tr.replay(s.t);
        CHECK(r.omega == s.state.omega);
        CHECK(r.heights == s.state.heights);
        CHECK(s.state.consistent());
    }
    CHECK(tr.replay(2.0).omega == tr.final_state.omega);
    CHECK(tr.event_count == tr.events.size());
    for (std::size_t k = 1; k < tr.events.size(); ++k)
    {
        CHECK(tr.events[k - 1].t <= tr.events[k].t);
    }
}

TEST_CASE("single active column waits an exponential time")
{
    auto init = LatticeState::from_increments(0, {5, -5});
    const auto spec = ProcessSpec::monotone(kBrick, 0, 1);
    const double rate = kBrick(5) + kBrick(5);
    std::vector<double> first;
    for (std::uint64_t k = 0; k < 10'000; ++k)
    {
        PoissonPlaneSet clocks(derive_seed(42, k));
        SimulationOptions so;
        double t0 = -1.0;
        so.observer = [&](const Event& e, std::span<const LatticeState* const>, std::span<const bool>) {
            if (t0 < 0.0)
            {
                t0 = e.t;
            }
        };
        (void)simulate(spec, init, 1.0, clocks, so);
        REQUIRE(t0 > 0.0);
        first.push_back(t0);
    }
    const auto ks = stats::ks_test(first, [rate](double x) { return 1.0 - std::exp(-rate * x); });
    CHECK(ks.p > 0.01);
}

TEST_CASE("single-site boundary process matches the CTMC oracle")
{
    for (bool zero : {false, true})
    {
        const RateFunction rate = zero ? RateFunction::zero_range_exponential(1.0) : kBrick;
        auto spec = ProcessSpec::boundary_driven(rate, 0, 0, 0.0);
        spec.clamp = 3;
        const auto init = LatticeState::flat(-1, 1);
        const int lo = zero ? 0 : -3;
        std::vector<double> counts(static_cast<std::size_t>(3 - lo + 1), 0.0);
        const std::uint64_t n = 20'000;
        for (std::uint64_t k = 0; k < n; ++k)
        {
            PoissonPlaneSet clocks(derive_seed(9, k));
            SimulationOptions so;
            so.record_events = false;
            const auto tr = simulate(spec, init, 0.5, clocks, so);
            counts[static_cast<std::size_t>(tr.final_state.at(0) - lo)] += 1.0;
        }
        const auto exact = oracle::single_site_transient(1.0, 0.0, zero, 3, 0, 0.5);
        double tv = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k)
        {
            tv += std::abs(counts[k] / static_cast<double>(n) - exact[k]);
        }
        CHECK(tv / 2.0 < 0.02);
    }
}

TEST_CASE("clamp keeps occupancies inside the box")
{
    auto spec = ProcessSpec::boundary_driven(kBrick, -2, 2, 1.5);
    spec.clamp = 2;
    PoissonPlaneSet clocks(3);
    SimulationOptions so;
    bool ok = true;
    so.observer = [&](const Event&, std::span<const LatticeState* const> st, std::span<const bool>) {
        for (int i = -2; i <= 2; ++i)
        {
            ok = ok && std::abs(st[0]->at(i)) <= 2;
        }
    };
    (void)simulate(spec, LatticeState::flat(-3, 3), 20.0, clocks, so);
    CHECK(ok);
}

TEST_CASE("event safety limit and clock overflow")
{
    const auto init = LatticeState::flat(-10, 10);
    const auto spec = ProcessSpec::monotone(kBrick, -9, 9);
    PoissonPlaneSet clocks(1);
    SimulationOptions so;
    so.max_events = 50;
    CHECK_THROWS_AS(simulate(spec, init, 100.0, clocks, so), SimulationError);

    PoissonPlaneSet tight(1, 1.0);
    auto hot = LatticeState::from_increments(0, {4, -4});
    CHECK_THROWS_AS(simulate(ProcessSpec::monotone(kBrick, 0, 1), hot, 1.0, tight), ClockOverflow);
}

TEST_CASE("window limit stabilizes and consecutive volumes agree")
{
    WindowLimitOptions wo;
    const int half = 1 << wo.max_doublings;
    const auto flat = LatticeState::flat(-half, half);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        PoissonPlaneSet clocks(derive_seed(77, seed));
        const auto wl = window_limit(kBrick, flat, 0, 0, 0.3, clocks, wo);
        REQUIRE(wl.stabilized);
        CHECK(wl.doublings <= 4);
        // Rerun the two agreeing volumes on fresh clocks with the same seed.
        PoissonPlaneSet again(derive_seed(77, seed));
        SimulationOptions so;
        const int R = wl.radius;
        const auto a = simulate(ProcessSpec::monotone(kBrick, -R, R), flat, 0.3, again, so);
        const auto b = simulate(ProcessSpec::monotone(kBrick, -2 * R, 2 * R), flat, 0.3, again, so);
        auto dump = [](const std::vector<Event>& ev) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& e : ev)
            {
                j.push_back({e.t, e.column, static_cast<int>(e.dir)});
            }
            return j.dump();
        };
        CHECK(dump(restrict_events(a.events, 0, 0)) == dump(restrict_events(b.events, 0, 0)));
        CHECK(dump(restrict_events(a.events, 0, 0)) == dump(wl.events));
        CHECK(restrict_state(a.final_state, -1, 1).omega == wl.final_state.omega);
    }
}

TEST_CASE("window limit reports failure to stabilize")
{
    WindowLimitOptions wo;
    wo.max_doublings = 1;
    const auto flat = LatticeState::flat(-4, 4);
    PoissonPlaneSet clocks(5);
    const auto wl = window_limit(kBrick, flat, 0, 0, 20.0, clocks, wo);
    CHECK_FALSE(wl.stabilized);
    CHECK_FALSE(wl.diagnostic.empty());
    CHECK_FALSE(wl.tried_event_counts.empty());
}
