#include "bricklayers/coupling.hpp"
#include "bricklayers/random.hpp"
#include "bricklayers/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace brick;

namespace {
const RateFunction kBrick = RateFunction::exponential_bricklayers(1.0);
}

TEST_CASE("identical members never separate")
{
    const auto init = sample_product_state(build_marginal(kBrick, 0.2), -8, 8, 4);
    CoupledRun run;
    run.members.push_back({"a", ProcessSpec::boundary_driven(kBrick, -7, 7, 0.2), init});
    run.members.push_back({"b", ProcessSpec::boundary_driven(kBrick, -7, 7, 0.2), init});
    run.pairs = {{0, 1}};
    PoissonPlaneSet clocks(8);
    CoupledOptions co;
    co.horizon = 3.0;
    co.full_recheck = true;
    const auto res = run_coupled(run, clocks, co);
    CHECK(res.trajectories[0].events == res.trajectories[1].events);
    for (int d : res.discrepancy[0])
    {
        CHECK(d == 0);
    }
    CHECK(res.history.size() == 1);
    const auto c = second_class_census(res.trajectories[0].final_state, res.trajectories[1].final_state);
    CHECK(c.particles == 0);
    CHECK(c.antiparticles == 0);
    CHECK(c.particle_sites.empty());
}

TEST_CASE("single brick perturbation gives one antiparticle and one particle")
{
    const auto omega = sample_product_state(build_marginal(kBrick, 0.0), -5, 5, 2);
    auto zeta = omega;
    zeta.lay_brick(1);
    const auto c = second_class_census(omega, zeta);
    CHECK(c.antiparticles == 1);
    CHECK(c.particles == 1);
    CHECK(c.antiparticle_sites == std::vector<int>{1});
    CHECK(c.particle_sites == std::vector<int>{2});
}

TEST_CASE("nested monotone volumes stay ordered")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
        SplitMix64 g(seed);
        std::vector<int> pts;
        while (pts.size() < 4)
        {
            const int v = static_cast<int>(g() % 17) - 8;
            if (std::find(pts.begin(), pts.end(), v) == pts.end())
            {
                pts.push_back(v);
            }
        }
        std::sort(pts.begin(), pts.end());
        const auto init = sample_product_state(build_marginal(kBrick, 0.0), -9, 9, derive_seed(seed, 1));
        CoupledRun run;
        run.members.push_back({"small", ProcessSpec::monotone(kBrick, pts[1], pts[2]), init});
        run.members.push_back({"large", ProcessSpec::monotone(kBrick, pts[0], pts[3]), init});
        run.pairs = {{0, 1}};
        CoupledOptions co;
        co.horizon = 2.0;
        co.full_recheck = true;
        std::uint64_t bad = 0;
        co.observer = [&](const Event&, std::span<const LatticeState* const> st, std::span<const bool>) {
            for (int c = st[0]->lo; c < st[0]->hi; ++c)
            {
                bad += st[0]->height(c) > st[1]->height(c);
            }
        };
        PoissonPlaneSet clocks(derive_seed(seed, 0));
        (void)run_coupled(run, clocks, co);
        REQUIRE(bad == 0);
    }
}

TEST_CASE("boundary-driven pairs need ordered theta")
{
    const auto init = LatticeState::flat(-4, 4);
    CoupledRun run;
    run.members.push_back({"hi", ProcessSpec::boundary_driven(kBrick, -2, 2, 0.5), init});
    run.members.push_back({"lo", ProcessSpec::boundary_driven(kBrick, -2, 2, -0.5), init});
    run.pairs = {{0, 1}};
    PoissonPlaneSet clocks(1);
    CHECK_THROWS_AS(run_coupled(run, clocks, {}), CouplingError);
    run.pairs = {{1, 0}};
    CoupledOptions co;
    co.horizon = 1.0;
    CHECK_NOTHROW(run_coupled(run, clocks, co));
}

TEST_CASE("coupled jump frequencies follow the rate table")
{
    // Single active column 0; omega = (1, 0), zeta = (2, 1).
    const auto a = LatticeState::from_increments(0, {1, 0});
    const auto b = LatticeState::from_increments(0, {2, 1});
    const double aR = kBrick(1), bR = kBrick(2);
    const double aL = kBrick(0), bL = kBrick(-1);
    const auto tR = oracle::coupled_table(aR, bR);
    const auto tL = oracle::coupled_table(aL, bL);
    const std::vector<double> expected{tR[0] + tL[0], tR[1] + tL[1], tR[2] + tL[2]};
    const double total = expected[0] + expected[1] + expected[2];
    std::vector<std::uint64_t> counts(3, 0);
    for (std::uint64_t k = 0; k < 20'000; ++k)
    {
        CoupledRun run;
        run.members.push_back({"omega", ProcessSpec::monotone(kBrick, 0, 1), a});
        run.members.push_back({"zeta", ProcessSpec::monotone(kBrick, 0, 1), b});
        CoupledOptions co;
        co.horizon = 5.0;
        co.record_events = false;
        co.record_discrepancy = false;
        bool seen = false;
        co.observer = [&](const Event&, std::span<const LatticeState* const>, std::span<const bool> j) {
            if (seen)
            {
                return;
            }
            seen = true;
            counts[j[0] && j[1] ? 0 : (j[1] ? 1 : 2)] += 1;
        };
        PoissonPlaneSet clocks(derive_seed(31, k));
        (void)run_coupled(run, clocks, co);
        REQUIRE(seen);
    }
    std::vector<double> probs;
    for (double e : expected)
    {
        probs.push_back(e / total);
    }
    CHECK(stats::chi_square_gof(counts, probs).p > 0.01);
}

TEST_CASE("conditional coupling on a flat wall")
{
    ConditionalCouplingSetup s;
    s.omega = LatticeState::flat(-6, 6);
    s.l = -5;
    s.r = 5;
    s.theta1 = -0.5;
    s.theta2 = 0.5;
    const auto res = conditional_coupling(s, 2000, 2.0, 17);
    REQUIRE(res.accepted);
    CHECK(res.acceptance_lo > 0.0);
    CHECK(res.domination_violations == 0);
    for (int c = s.omega.lo; c < s.omega.hi; ++c)
    {
        CHECK(res.zeta.height(c) >= 0);
    }
}

TEST_CASE("conditional coupling rejects a steep wall")
{
    ConditionalCouplingSetup s;
    s.omega = LatticeState::from_increments(-6, std::vector<int>(13, 3));
    s.l = -5;
    s.r = 5;
    s.theta1 = -0.5;
    s.theta2 = 0.5;
    CHECK_THROWS_AS(s.validate(), CouplingError);
}

TEST_CASE("annihilation probability")
{
    AnnihilationOptions o;
    o.replicas = 2000;
    const auto est = annihilation_probability(kBrick, 0.0, 0, {1e-6, 0.1, 0.5, 1.0}, o);
    CHECK(est.estimate[0] == 0.0);
    for (std::size_t k = 1; k < est.estimate.size(); ++k)
    {
        CHECK(est.estimate[k] >= est.estimate[k - 1]);
    }
    CHECK(est.lo[2] > 0.0);
    CHECK(est.max_abs_discrepancy == 1);
    CHECK(est.max_pair_count == 2);
}

TEST_CASE("Cesaro slope of a window")
{
    CHECK(cesaro_slope(LatticeState::flat(-5, 5)) == 0.0);
    const auto s = LatticeState::from_increments(-2, {1, -1, 2, 0, 1});
    // Right: |w1| / 1 = 0, (|w1| + |w2|) / 2 = 0.5; left: |w0| / 1 = 2, (|w0| + |w-1|) / 2 = 1.5, 4/3.
    CHECK(cesaro_slope(s) == doctest::Approx(2.0));
}
