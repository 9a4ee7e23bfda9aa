#include "bricklayers/coupling.hpp"

#include "bricklayers/parallel.hpp"
#include "bricklayers/random.hpp"
#include "bricklayers/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace brick {

namespace {

std::vector<std::pair<int, int>> sparse(const std::vector<int>& d, int lo)
{
    std::vector<std::pair<int, int>> out;
    for (std::size_t k = 0; k < d.size(); ++k)
    {
        if (d[k] != 0)
        {
            out.emplace_back(lo + static_cast<int>(k), d[k]);
        }
    }
    return out;
}

std::vector<int> difference(const LatticeState& a, const LatticeState& b)
{
    std::vector<int> d(a.omega.size());
    for (std::size_t k = 0; k < d.size(); ++k)
    {
        d[k] = b.omega[k] - a.omega[k];
    }
    return d;
}

} // namespace

CoupledResult run_coupled(const CoupledRun& run, PoissonPlaneSet& clocks, const CoupledOptions& opts)
{
    if (run.members.empty())
    {
        throw CouplingError("coupled run without members");
    }
    const LatticeState& w0 = run.members.front().state;
    for (const auto& m : run.members)
    {
        if (m.state.lo != w0.lo || m.state.hi != w0.hi)
        {
            throw CouplingError("member '" + m.label + "' does not share the common window");
        }
    }
    for (const auto& [a, b] : run.pairs)
    {
        if (a >= run.members.size() || b >= run.members.size())
        {
            throw CouplingError("pair index out of range");
        }
        const auto& sa = run.members[a].spec;
        const auto& sb = run.members[b].spec;
        if (sa.kind == ProcessKind::BoundaryDriven && sb.kind == ProcessKind::BoundaryDriven && sa.theta > sb.theta)
        {
            throw CouplingError("boundary-driven pair needs theta of '" + run.members[a].label +
                                "' <= theta of '" + run.members[b].label + "'");
        }
    }

    CoupledResult res;
    res.trajectories.resize(run.members.size());
    std::vector<detail::EngineMember> em(run.members.size());
    for (std::size_t k = 0; k < run.members.size(); ++k)
    {
        res.trajectories[k].initial = run.members[k].state;
        em[k] = {&run.members[k].spec, &res.trajectories[k]};
    }
    for (const auto& [a, b] : run.pairs)
    {
        res.discrepancy.push_back(difference(run.members[a].state, run.members[b].state));
    }
    if (opts.record_discrepancy)
    {
        for (std::size_t p = 0; p < run.pairs.size(); ++p)
        {
            res.history.push_back({0.0, p, sparse(res.discrepancy[p], w0.lo)});
        }
    }

    SimulationOptions so;
    so.horizon = opts.horizon;
    so.snapshot_times = opts.snapshot_times;
    so.record_events = opts.record_events;
    so.max_events = opts.max_events;
    const int lo = w0.lo;
    so.observer = [&](const Event& e, std::span<const LatticeState* const> states, std::span<const bool> jumped) {
        for (std::size_t p = 0; p < run.pairs.size(); ++p)
        {
            const auto [a, b] = run.pairs[p];
            const int delta = static_cast<int>(jumped[b]) - static_cast<int>(jumped[a]);
            if (delta != 0)
            {
                auto& d = res.discrepancy[p];
                d[static_cast<std::size_t>(e.column - lo)] -= delta;
                d[static_cast<std::size_t>(e.column + 1 - lo)] += delta;
                if (opts.record_discrepancy)
                {
                    res.history.push_back({e.t, p, sparse(d, lo)});
                }
            }
            if (opts.full_recheck && difference(*states[a], *states[b]) != res.discrepancy[p])
            {
                throw SimulationError("incremental discrepancy diverged from the states at t = " +
                                      std::to_string(e.t));
            }
        }
        if (opts.observer)
        {
            opts.observer(e, states, jumped);
        }
    };
    const auto stats = detail::run_engine(em, clocks, so);
    res.points = stats.points;
    res.anomalies = stats.anomalies;
    return res;
}

Census second_class_census(const LatticeState& omega, const LatticeState& zeta)
{
    Census c;
    const int lo = std::max(omega.lo, zeta.lo);
    const int hi = std::min(omega.hi, zeta.hi);
    for (int i = lo; i <= hi; ++i)
    {
        const int d = zeta.at(i) - omega.at(i);
        if (d > 0)
        {
            c.particles += d;
            c.particle_sites.push_back(i);
        }
        else if (d < 0)
        {
            c.antiparticles -= d;
            c.antiparticle_sites.push_back(i);
        }
    }
    return c;
}

Census second_class_census(const CoupledRun& run, const CoupledResult& res, std::size_t pair, double t)
{
    const auto [a, b] = run.pairs.at(pair);
    return second_class_census(res.trajectories.at(a).replay(t), res.trajectories.at(b).replay(t));
}

LatticeState sample_product_state(const Marginal& m, int lo, int hi, std::uint64_t key)
{
    std::vector<int> w(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i)
    {
        w[static_cast<std::size_t>(i - lo)] =
            m.sample(counter_uniform(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(i))));
    }
    return LatticeState::from_increments(lo, std::move(w));
}

double cesaro_slope(const LatticeState& s)
{
    if (!s.has_site(0))
    {
        throw CouplingError("Cesaro slope needs the origin inside the window");
    }
    double K = 0.0;
    long acc = 0;
    for (int i = -1; i >= s.lo - 1; --i)
    {
        acc += std::abs(s.at(i + 1));
        K = std::max(K, static_cast<double>(acc) / static_cast<double>(-i));
    }
    acc = 0;
    for (int i = 1; i <= s.hi; ++i)
    {
        acc += std::abs(s.at(i));
        K = std::max(K, static_cast<double>(acc) / static_cast<double>(i));
    }
    return K;
}

void ConditionalCouplingSetup::validate() const
{
    if (!(theta1 < theta2))
    {
        throw CouplingError("conditional coupling needs theta1 < theta2");
    }
    if (!(omega.lo <= l - 1 && r + 1 <= omega.hi))
    {
        throw CouplingError("window must cover sites [l-1, r+1]");
    }
    const double k = K();
    const double e1 = build_marginal(rate, theta1).mean_density();
    const double e2 = build_marginal(rate, theta2).mean_density();
    if (!(e1 < -k && k < e2))
    {
        throw CouplingError("densities do not bracket the slope: need E(theta1) = " + std::to_string(e1) +
                            " < -K = " + std::to_string(-k) + " and K < E(theta2) = " + std::to_string(e2));
    }
}

ConditionalCouplingResult conditional_coupling(const ConditionalCouplingSetup& setup, std::uint64_t max_rejections,
                                               double T, std::uint64_t seed)
{
    setup.validate();
    const auto spec = GoodMeasureSpec::step_profile(setup.rate, setup.theta1, setup.theta2);
    spec.certify(setup.omega.lo, setup.omega.hi);
    const LatticeState& omega = setup.omega;

    ConditionalCouplingResult out;
    out.note = "acceptance event restricted to columns [" + std::to_string(omega.lo) + ", " +
               std::to_string(omega.hi - 1) + "]";
    std::uint64_t accepted = 0;
    for (std::uint64_t k = 0; k < max_rejections; ++k)
    {
        auto draw = sample_good_measure(spec, omega.lo, omega.hi, derive_seed(seed, 2 * k + 1));
        LatticeState zeta = LatticeState::from_increments(omega.lo, std::move(draw.zeta));
        bool ok = true;
        for (int c = omega.lo; c < omega.hi && ok; ++c)
        {
            ok = zeta.height(c) >= omega.height(c);
        }
        if (ok)
        {
            if (accepted == 0)
            {
                out.zeta = zeta;
            }
            ++accepted;
        }
    }
    out.attempts = max_rejections;
    out.acceptance = max_rejections ? static_cast<double>(accepted) / static_cast<double>(max_rejections) : 0.0;
    const auto ci = stats::wilson_interval(accepted, max_rejections);
    out.acceptance_lo = ci.lo;
    out.acceptance_hi = ci.hi;
    if (accepted == 0)
    {
        out.note += "; rejection exhausted";
        return out;
    }
    out.accepted = true;

    CoupledRun run;
    run.members.push_back({"omega", ProcessSpec::monotone(setup.rate, setup.l, setup.r), omega});
    run.members.push_back(
        {"zeta", ProcessSpec::boundary_driven(setup.rate, setup.l, setup.r, setup.theta1), out.zeta});
    run.pairs.push_back({0, 1});
    CoupledOptions co;
    co.horizon = T;
    co.record_discrepancy = false;
    co.observer = [&](const Event&, std::span<const LatticeState* const> st, std::span<const bool>) {
        for (int c = st[0]->lo; c < st[0]->hi; ++c)
        {
            if (st[0]->height(c) > st[1]->height(c))
            {
                ++out.domination_violations;
                return;
            }
        }
    };
    PoissonPlaneSet clocks(derive_seed(seed, 0), PoissonPlaneSet::default_cap(setup.rate.beta_bound()));
    out.run = run_coupled(run, clocks, co);
    return out;
}

AnnihilationEstimate annihilation_probability(const RateFunction& rate, double theta, int site,
                                              const std::vector<double>& times, const AnnihilationOptions& opts)
{
    if (!(opts.l <= site && site < opts.r))
    {
        throw CouplingError("perturbation column outside the volume");
    }
    const Marginal mu = build_marginal(rate, theta);
    const double T = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const std::size_t n = opts.replicas;
    std::vector<double> meet(n, std::numeric_limits<double>::infinity());
    std::vector<int> max_abs(n, 0);
    std::vector<int> max_pairs(n, 0);
    const ProcessSpec spec = ProcessSpec::monotone(rate, opts.l, opts.r);

    parallel_for(n, opts.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(opts.seed, k);
        CoupledRun run;
        run.members.push_back({"omega", spec, sample_product_state(mu, opts.l, opts.r, derive_seed(rs, 1))});
        LatticeState zeta = run.members[0].state;
        zeta.lay_brick(site);
        run.members.push_back({"zeta", spec, zeta});
        run.pairs.push_back({0, 1});
        max_abs[k] = 1;
        max_pairs[k] = 2;
        CoupledOptions co;
        co.horizon = T;
        co.record_events = false;
        co.record_discrepancy = false;
        co.observer = [&](const Event& e, std::span<const LatticeState* const> st, std::span<const bool>) {
            if (meet[k] < e.t)
            {
                return;
            }
            int total = 0;
            for (std::size_t j = 0; j < st[0]->omega.size(); ++j)
            {
                const int d = std::abs(st[1]->omega[j] - st[0]->omega[j]);
                total += d;
                max_abs[k] = std::max(max_abs[k], d);
            }
            max_pairs[k] = std::max(max_pairs[k], total);
            if (total == 0)
            {
                meet[k] = e.t;
            }
        };
        PoissonPlaneSet clocks(derive_seed(rs, 0), PoissonPlaneSet::default_cap(rate.beta_bound()));
        run_coupled(run, clocks, co);
    });

    AnnihilationEstimate est;
    est.times = times;
    est.replicas = n;
    for (double t : times)
    {
        std::uint64_t hits = 0;
        for (double m : meet)
        {
            hits += m <= t;
        }
        const auto ci = stats::wilson_interval(hits, n);
        est.estimate.push_back(n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0);
        est.lo.push_back(ci.lo);
        est.hi.push_back(ci.hi);
    }
    est.max_abs_discrepancy = *std::max_element(max_abs.begin(), max_abs.end());
    est.max_pair_count = *std::max_element(max_pairs.begin(), max_pairs.end());
    return est;
}

} // namespace brick
