#include "bricklayers/verify.hpp"

#include "bricklayers/parallel.hpp"
#include "bricklayers/random.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace brick {

using nlohmann::json;

std::string to_string(CheckVerdict v)
{
    switch (v)
    {
    case CheckVerdict::Pass:
        return "pass";
    case CheckVerdict::Fail:
        return "fail";
    case CheckVerdict::Inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

namespace {

json finite_or_null(double x)
{
    if (std::isfinite(x))
    {
        return x;
    }
    return nullptr;
}

class Stopwatch
{
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CheckVerdict verdict_of(bool ok) { return ok ? CheckVerdict::Pass : CheckVerdict::Fail; }

PoissonPlaneSet clocks_for(const RateFunction& rate, std::uint64_t replica_seed)
{
    return PoissonPlaneSet(derive_seed(replica_seed, 0), PoissonPlaneSet::default_cap(rate.beta_bound()));
}

std::vector<int> local_view(const LatticeState& s, int lo, int hi)
{
    std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i)
    {
        if (!s.has_site(i))
        {
            throw std::out_of_range("cylinder support site " + std::to_string(i) + " outside the state window");
        }
        v[static_cast<std::size_t>(i - lo)] = s.at(i);
    }
    return v;
}

} // namespace

json CheckResult::to_json() const
{
    json j;
    j["suite"] = suite;
    j["statistic_name"] = statistic_name;
    j["statistic"] = finite_or_null(statistic);
    j["rule"] = rule;
    j["threshold"] = threshold ? finite_or_null(*threshold) : json(nullptr);
    j["interval"] = interval ? json::array({finite_or_null(interval->lo), finite_or_null(interval->hi)}) : json(nullptr);
    j["target"] = target ? finite_or_null(*target) : json(nullptr);
    j["verdict"] = to_string(verdict);
    j["replicas"] = replicas;
    j["seed"] = seed;
    j["runtime_seconds"] = runtime_seconds;
    j["note"] = note;
    j["details"] = details;
    return j;
}

double CylinderFunction::operator()(const LatticeState& s) const
{
    const auto v = local_view(s, lo, hi);
    return f(std::span<const int>(v));
}

double CylinderFunction::eval(const std::function<int(int)>& omega) const
{
    std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i)
    {
        v[static_cast<std::size_t>(i - lo)] = omega(i);
    }
    return f(std::span<const int>(v));
}

CylinderFunction CylinderFunction::constant(double c)
{
    return {"constant", 0, 0, std::abs(c), [c](std::span<const int>) { return c; },
            json{{"kind", "constant"}, {"value", c}}};
}

CylinderFunction CylinderFunction::indicator_equal(int site, int value)
{
    return {"1{omega_" + std::to_string(site) + "=" + std::to_string(value) + "}", site, site, 1.0,
            [value](std::span<const int> w) { return w[0] == value ? 1.0 : 0.0; },
            json{{"kind", "indicator_equal"}, {"site", site}, {"value", value}}};
}

CylinderFunction CylinderFunction::indicator_at_least(int site, int value)
{
    return {"1{omega_" + std::to_string(site) + ">=" + std::to_string(value) + "}", site, site, 1.0,
            [value](std::span<const int> w) { return w[0] >= value ? 1.0 : 0.0; },
            json{{"kind", "indicator_at_least"}, {"site", site}, {"value", value}}};
}

CylinderFunction CylinderFunction::occupation(int site)
{
    return {"omega_" + std::to_string(site), site, site, std::numeric_limits<double>::infinity(),
            [](std::span<const int> w) { return static_cast<double>(w[0]); },
            json{{"kind", "occupation"}, {"site", site}}};
}

CylinderFunction cylinder_from_json(const json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant")
    {
        return CylinderFunction::constant(j.at("value").get<double>());
    }
    if (kind == "indicator_equal")
    {
        return CylinderFunction::indicator_equal(j.at("site").get<int>(), j.at("value").get<int>());
    }
    if (kind == "indicator_at_least")
    {
        return CylinderFunction::indicator_at_least(j.at("site").get<int>(), j.at("value").get<int>());
    }
    if (kind == "occupation")
    {
        return CylinderFunction::occupation(j.at("site").get<int>());
    }
    throw std::invalid_argument("unknown cylinder function kind '" + kind + "'");
}

json cylinder_to_json(const CylinderFunction& f) { return f.descriptor; }

double apply_generator(const RateFunction& rate, const std::optional<ProcessSpec>& spec, const CylinderFunction& phi,
                       const LatticeState& omega)
{
    const double base = phi(omega);
    double total = 0.0;
    for (int c = phi.lo - 1; c <= phi.hi; ++c)
    {
        if (!omega.has_site(c) || !omega.has_site(c + 1))
        {
            throw std::out_of_range("generator needs sites " + std::to_string(c) + " and " + std::to_string(c + 1));
        }
        double q = 0.0;
        if (spec)
        {
            q = rate_field(*spec, omega, c).total();
        }
        else
        {
            q = rate(omega.at(c)) + rate(-omega.at(c + 1));
        }
        if (q == 0.0)
        {
            continue;
        }
        const double moved = phi.eval([&](int i) { return omega.at(i) - (i == c) + (i == c + 1); });
        total += q * (moved - base);
    }
    return total;
}

GeneratorResidual generator_mean_zero(const RateFunction& rate, double theta, int l, int r,
                                      const CylinderFunction& phi, int M, std::uint64_t state_cap)
{
    using Real = boost::multiprecision::cpp_bin_float_50;
    if (phi.lo < l || phi.hi > r)
    {
        throw std::invalid_argument("cylinder support must lie inside [l, r]");
    }
    if (l > r || M < 0)
    {
        throw std::invalid_argument("generator_mean_zero needs l <= r and M >= 0");
    }
    const bool zr = rate.regime() == Regime::ZeroRange;
    const int zlo = zr ? 0 : -M;
    const int width = M - zlo + 1;
    const int n = r - l + 1;
    long double count = 1.0L;
    for (int k = 0; k < n; ++k)
    {
        count *= width;
    }
    if (count > static_cast<long double>(state_cap))
    {
        throw std::length_error("state space of " + std::to_string(static_cast<double>(count)) +
                                " configurations exceeds the cap " + std::to_string(state_cap));
    }

    // Single-site weights by recursion, normalized on a box of half-width 2M.
    const int big = 2 * M + 2;
    const Real eth = exp(Real(theta));
    const Real emth = exp(Real(-theta));
    std::map<int, Real> w;
    w[0] = 1;
    for (int z = 0; z < big; ++z)
    {
        w[z + 1] = w[z] * eth / rate.rate_as<Real>(z + 1);
        if (!zr)
        {
            w[-z - 1] = w[-z] * emth / rate.rate_as<Real>(z + 1);
        }
    }
    Real Zbig = 0;
    Real Zbox = 0;
    for (const auto& [z, v] : w)
    {
        Zbig += v;
        if (z >= zlo && z <= M)
        {
            Zbox += v;
        }
    }
    std::vector<Real> mu(static_cast<std::size_t>(width));
    for (int z = zlo; z <= M; ++z)
    {
        mu[static_cast<std::size_t>(z - zlo)] = w[z] / Zbig;
    }
    std::map<int, Real> rr;
    for (int z = -M - 2; z <= M + 2; ++z)
    {
        rr[z] = rate.rate_as<Real>(z);
    }
    const Real left_virtual = eth;
    const Real right_virtual = zr ? Real(0) : emth;

    // Columns whose moves can change phi.
    const int c_lo = std::max(l - 1, phi.lo - 1);
    const int c_hi = std::min(r, phi.hi);

    std::vector<int> cfg(static_cast<std::size_t>(n + 2), 0); // sites l-1 .. r+1
    auto site = [&](int i) -> int& { return cfg[static_cast<std::size_t>(i - (l - 1))]; };
    for (int i = l; i <= r; ++i)
    {
        site(i) = zlo;
    }
    GeneratorResidual out;
    Real total = 0;
    for (;;)
    {
        Real weight = 1;
        for (int i = l; i <= r; ++i)
        {
            weight *= mu[static_cast<std::size_t>(site(i) - zlo)];
        }
        const double base = phi.eval([&](int i) { return site(i); });
        Real g = 0;
        for (int c = c_lo; c <= c_hi; ++c)
        {
            Real q;
            if (c == l - 1)
            {
                q = left_virtual + rr[-site(l)];
            }
            else if (c == r)
            {
                q = rr[site(r)] + right_virtual;
            }
            else
            {
                q = rr[site(c)] + rr[-site(c + 1)];
            }
            if (q == 0)
            {
                continue;
            }
            const double moved = phi.eval([&](int i) { return site(i) - (i == c) + (i == c + 1); });
            g += q * Real(moved - base);
        }
        total += weight * g;
        ++out.states;

        int i = l;
        while (i <= r)
        {
            if (site(i) < M)
            {
                ++site(i);
                break;
            }
            site(i) = zlo;
            ++i;
        }
        if (i > r)
        {
            break;
        }
    }
    out.residual = static_cast<double>(total);
    out.tail_estimate = static_cast<double>(Real(1) - pow(Zbox / Zbig, n));
    return out;
}

CheckResult generator_check(const RateFunction& rate, double theta, int l, int r,
                            const std::vector<CylinderFunction>& phis, const std::vector<int>& Ms, double tol)
{
    Stopwatch sw;
    CheckResult res;
    res.suite = "generator";
    res.statistic_name = "max |residual| at largest M";
    res.rule = "statistic < threshold and |residual| strictly decreasing in M";
    res.threshold = tol;
    bool ok = !Ms.empty();
    json per = json::array();
    for (const auto& phi : phis)
    {
        json series = json::array();
        double prev = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        double last = 0.0;
        for (int M : Ms)
        {
            const auto g = generator_mean_zero(rate, theta, l, r, phi, M);
            // Below the 50-digit round-off floor a residual counts as zero.
            const double a = std::abs(g.residual) < 1e-40 ? 0.0 : std::abs(g.residual);
            if (!(a < prev) && !(a == 0.0 && prev == 0.0))
            {
                decreasing = false;
            }
            prev = a;
            last = a;
            series.push_back({{"M", M}, {"residual", g.residual}, {"tail_estimate", g.tail_estimate},
                              {"states", g.states}});
        }
        res.statistic = std::max(res.statistic, last);
        ok = ok && decreasing && last < tol;
        per.push_back({{"phi", phi.name}, {"decreasing", decreasing}, {"series", series}});
    }
    res.details = {{"theta", theta}, {"l", l}, {"r", r}, {"functions", per}};
    res.verdict = verdict_of(ok);
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult stationarity_test(const RateFunction& rate, const StationarityOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    std::vector<CylinderFunction> phis = o.phis;
    if (phis.empty())
    {
        phis = {CylinderFunction::occupation(0), CylinderFunction::indicator_equal(0, 0),
                CylinderFunction::occupation(o.l), CylinderFunction::occupation(o.r)};
    }
    const Marginal mu = build_marginal(rate, o.theta);
    ProcessSpec spec = ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta);
    if (o.left_rate_factor != 1.0)
    {
        spec.left_virtual_rate = o.left_rate_factor * std::exp(o.theta);
    }
    const int lo = o.l - 1;
    const int hi = o.r + 1;
    const std::size_t n = c.replicas;
    const std::size_t m = phis.size();
    std::vector<double> before(n * m);
    std::vector<double> after(n * m);
    std::vector<int> omega0(n);
    SimulationOptions so;
    so.record_events = false;
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        const LatticeState init = sample_product_state(mu, lo, hi, derive_seed(rs, 1));
        auto clocks = clocks_for(rate, rs);
        const Trajectory tr = simulate(spec, init, o.t, clocks, so);
        for (std::size_t j = 0; j < m; ++j)
        {
            before[k * m + j] = phis[j](init);
            after[k * m + j] = phis[j](tr.final_state);
        }
        omega0[k] = tr.final_state.at(0);
    });

    CheckResult res;
    res.suite = "stationarity";
    res.statistic_name = "min p-value";
    res.rule = "statistic > alpha / tests (Bonferroni)";
    const double tests = static_cast<double>(m + 1);
    res.threshold = o.alpha / tests;
    res.replicas = n;
    res.seed = c.seed;
    json per = json::array();
    double min_p = 1.0;
    for (std::size_t j = 0; j < m; ++j)
    {
        stats::Running a;
        stats::Running b;
        for (std::size_t k = 0; k < n; ++k)
        {
            a.add(before[k * m + j]);
            b.add(after[k * m + j]);
        }
        const auto w = stats::welch_test(a, b);
        min_p = std::min(min_p, w.p);
        per.push_back({{"phi", phis[j].name}, {"mean_0", a.mean()}, {"mean_t", b.mean()}, {"t", w.t}, {"p", w.p}});
    }
    std::vector<std::uint64_t> counts(mu.pmf_values().size(), 0);
    for (int z : omega0)
    {
        const int k = std::clamp(z, mu.support_lo(), mu.support_hi()) - mu.support_lo();
        ++counts[static_cast<std::size_t>(k)];
    }
    const auto chi = stats::chi_square_gof(counts, mu.pmf_values());
    min_p = std::min(min_p, chi.p);
    res.statistic = min_p;
    res.verdict = verdict_of(min_p > *res.threshold);
    res.details = {{"theta", o.theta},
                   {"volume", {o.l, o.r}},
                   {"t", o.t},
                   {"left_rate_factor", o.left_rate_factor},
                   {"two_sample", per},
                   {"marginal_chi_square", {{"statistic", chi.statistic}, {"df", chi.df}, {"p", chi.p}}}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult growth_bound_check(const RateFunction& rate, const GrowthOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    const GoodMeasureSpec gm = o.step_profile ? GoodMeasureSpec::step_profile(rate, o.theta1, o.theta2)
                                              : GoodMeasureSpec::uniform(rate, o.theta1, o.theta2, o.theta);
    const int lo = o.l - 1;
    const int hi = o.r + 1;
    gm.certify(lo, hi);
    const ProcessSpec spec = ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta1);
    std::vector<double> times = o.times;
    std::sort(times.begin(), times.end());
    const int c_lo = o.l - 1;
    const int ncols = o.r - c_lo + 1;
    const std::size_t nt = times.size();
    const std::size_t n = c.replicas;
    std::vector<double> growth(n * nt * static_cast<std::size_t>(ncols));
    SimulationOptions so;
    so.record_events = false;
    so.snapshot_times = times;
    const double T = times.empty() ? 0.0 : times.back();
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        auto draw = sample_good_measure(gm, lo, hi, derive_seed(rs, 1));
        const LatticeState init = LatticeState::from_increments(lo, std::move(draw.zeta));
        auto clocks = clocks_for(rate, rs);
        const Trajectory tr = simulate(spec, init, T, clocks, so);
        for (std::size_t ti = 0; ti < nt; ++ti)
        {
            for (int col = 0; col < ncols; ++col)
            {
                growth[(k * nt + ti) * static_cast<std::size_t>(ncols) + static_cast<std::size_t>(col)] =
                    static_cast<double>(tr.snapshots[ti].state.height(c_lo + col) - init.height(c_lo + col));
            }
        }
    });

    const bool zr = rate.regime() == Regime::ZeroRange;
    const double per_time = std::exp(o.theta2) + (zr ? 0.0 : std::exp(-o.theta1));
    const bool equality = !o.step_profile && o.theta1 == o.theta2;
    double worst = -std::numeric_limits<double>::infinity();
    json table = json::array();
    std::vector<double> second;
    for (std::size_t ti = 0; ti < nt; ++ti)
    {
        stats::Running sq;
        for (int col = 0; col < ncols; ++col)
        {
            stats::Running acc;
            for (std::size_t k = 0; k < n; ++k)
            {
                const double g = growth[(k * nt + ti) * static_cast<std::size_t>(ncols) + static_cast<std::size_t>(col)];
                acc.add(g);
                sq.add(g * g);
            }
            const double bound = per_time * times[ti];
            const double se = acc.se();
            const double z = se > 0.0 ? (acc.mean() - bound) / se
                                      : (acc.mean() > bound ? std::numeric_limits<double>::infinity() : 0.0);
            worst = std::max(worst, equality ? std::abs(z) : z);
            table.push_back({{"t", times[ti]}, {"column", c_lo + col}, {"mean", acc.mean()}, {"se", se},
                             {"bound", bound}, {"z", z}});
        }
        second.push_back(sq.mean());
    }
    // Least-squares quadratic A t^2 + B t + C through the mean second moments.
    json quad = nullptr;
    if (nt >= 3)
    {
        std::vector<std::vector<double>> X;
        std::vector<std::vector<double>> I(nt, std::vector<double>(nt, 0.0));
        for (std::size_t k = 0; k < nt; ++k)
        {
            X.push_back({times[k] * times[k], times[k], 1.0});
            I[k][k] = 1.0;
        }
        const auto fit = stats::generalized_least_squares(X, second, I);
        quad = {{"A", fit.beta[0]}, {"B", fit.beta[1]}, {"C", fit.beta[2]}};
    }
    CheckResult res;
    res.suite = "growth";
    res.statistic_name = equality ? "max |mean - bound| / SE" : "max (mean - bound) / SE";
    res.rule = "statistic <= threshold";
    res.statistic = worst;
    res.threshold = 3.0;
    res.replicas = n;
    res.seed = c.seed;
    res.verdict = verdict_of(worst <= 3.0);
    res.details = {{"theta1", o.theta1},
                   {"theta2", o.theta2},
                   {"step_profile", o.step_profile},
                   {"equality_mode", equality},
                   {"rate_per_unit_time", per_time},
                   {"columns", table},
                   {"second_moment", second},
                   {"second_moment_fit", quad}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult block_growth_decay(const RateFunction& rate, const BlockGrowthOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    if (o.sites.empty())
    {
        throw std::invalid_argument("block growth needs a site grid");
    }
    const int deepest = *std::min_element(o.sites.begin(), o.sites.end());
    if (deepest > 0)
    {
        throw std::invalid_argument("block growth sites must be <= 0");
    }
    const int l = deepest - 2;
    const int r = std::max(o.right, 1);
    const Marginal mu = build_marginal(rate, o.theta);
    const ProcessSpec spec = ProcessSpec::boundary_driven(rate, l, r, o.theta);
    const std::size_t n = c.replicas;
    // depth[k] = largest m with columns -m..0 all grown by t (-1 when column 0 did not grow).
    std::vector<std::int16_t> depth(n, -1);
    const int span = -deepest + 1;
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        const LatticeState init = sample_product_state(mu, l - 1, r + 1, derive_seed(rs, 1));
        auto clocks = clocks_for(rate, rs);
        SimulationOptions so;
        so.record_events = false;
        const Trajectory tr = simulate(spec, init, o.t, clocks, so);
        int m = -1;
        for (int j = 0; j < span; ++j)
        {
            if (tr.final_state.height(-j) > init.height(-j))
            {
                m = j;
            }
            else
            {
                break;
            }
        }
        depth[k] = static_cast<std::int16_t>(m);
    });

    CheckResult res;
    res.suite = "block_growth";
    res.statistic_name = "slope of log P(E_i) against |i|";
    res.rule = "slope < 0, 95% interval below 0, estimates nonincreasing in |i|";
    res.replicas = n;
    res.seed = c.seed;
    std::vector<int> grid = o.sites;
    std::sort(grid.begin(), grid.end(), [](int a, int b) { return std::abs(a) < std::abs(b); });
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> vs;
    json points = json::array();
    json dropped = json::array();
    bool monotone = true;
    double prev = 2.0;
    double min_p = 1.0;
    for (int i : grid)
    {
        const int need = -i;
        std::uint64_t hits = 0;
        for (auto d : depth)
        {
            hits += d >= need;
        }
        const double p = static_cast<double>(hits) / static_cast<double>(n);
        min_p = std::min(min_p, p);
        if (p > prev)
        {
            monotone = false;
        }
        prev = p;
        if (hits == 0)
        {
            dropped.push_back(i);
            continue;
        }
        xs.push_back(std::abs(i));
        ys.push_back(std::log(p));
        vs.push_back((1.0 - p) / (static_cast<double>(n) * p));
        points.push_back({{"i", i}, {"hits", hits}, {"p", p}});
    }
    res.details = {{"theta", o.theta}, {"t", o.t}, {"volume", {l, r}}, {"points", points}, {"dropped_zero", dropped}};
    if (min_p > 0.5)
    {
        res.verdict = CheckVerdict::Inconclusive;
        res.note = "inconclusive: t too large";
        res.runtime_seconds = sw.seconds();
        return res;
    }
    if (xs.size() < 2)
    {
        res.verdict = CheckVerdict::Inconclusive;
        res.note = "fewer than two nonzero estimates";
        res.runtime_seconds = sw.seconds();
        return res;
    }
    // Zero variance only when p = 1; guard the weights.
    for (auto& v : vs)
    {
        v = std::max(v, 1e-300);
    }
    const auto fit = stats::weighted_linear_fit(xs, ys, vs);
    const double z = stats::normal_quantile(0.975);
    res.statistic = fit.slope;
    res.interval = stats::Interval{fit.slope - z * fit.se_slope, fit.slope + z * fit.se_slope};
    res.threshold = 0.0;
    res.verdict = verdict_of(fit.slope < 0.0 && res.interval->hi < 0.0 && monotone);
    res.details["intercept"] = fit.intercept;
    res.details["se_slope"] = fit.se_slope;
    res.details["monotone"] = monotone;
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult forward_equation_check(const RateFunction& rate, const ForwardOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    std::vector<CylinderFunction> phis = o.phis;
    if (phis.empty())
    {
        phis = {CylinderFunction::indicator_equal(0, 0), CylinderFunction::indicator_at_least(0, 1)};
    }
    std::vector<double> times = o.times;
    if (times.empty())
    {
        for (int k = 1; k <= 10; ++k)
        {
            times.push_back(0.02 * k);
        }
    }
    std::sort(times.begin(), times.end());
    const int a = o.target_lo;
    const int b = o.target_hi;
    for (const auto& phi : phis)
    {
        if (phi.lo - 1 < a || phi.hi + 1 > b)
        {
            throw std::invalid_argument("target window must contain the sites next to the cylinder support");
        }
    }
    const double T = times.back();
    WindowLimitOptions wo;
    const int w = std::max(std::abs(a), std::abs(b)) + 1;
    const int half = w << wo.max_doublings;
    const LatticeState flat = LatticeState::flat(-half, half);
    const LatticeState flat_local = restrict_state(flat, a - 1, b + 1);
    const std::size_t n = c.replicas;
    const std::size_t m = phis.size();
    const std::size_t nt = times.size();
    std::vector<double> values(n * m * nt);
    std::vector<double> dynkin(n * m);
    std::vector<char> stabilized(n, 0);

    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        auto clocks = clocks_for(rate, rs);
        const auto wl = window_limit(rate, flat, a, b, T, clocks, wo);
        stabilized[k] = wl.stabilized ? 1 : 0;
        // Replay on [a-1, b+1]; sites a..b are exact.
        LatticeState s = restrict_state(flat, a - 1, b + 1);
        std::vector<double> integral(m, 0.0);
        std::vector<double> gen(m);
        auto refresh = [&] {
            for (std::size_t j = 0; j < m; ++j)
            {
                gen[j] = apply_generator(rate, std::nullopt, phis[j], s);
            }
        };
        refresh();
        double last = 0.0;
        std::size_t ti = 0;
        auto advance = [&](double t) {
            while (ti < nt && times[ti] < t)
            {
                for (std::size_t j = 0; j < m; ++j)
                {
                    values[(k * m + j) * nt + ti] = phis[j](s);
                }
                ++ti;
            }
            for (std::size_t j = 0; j < m; ++j)
            {
                integral[j] += gen[j] * (t - last);
            }
            last = t;
        };
        for (const auto& e : wl.events)
        {
            advance(e.t);
            s.lay_brick(e.column);
            refresh();
        }
        advance(T);
        while (ti < nt)
        {
            for (std::size_t j = 0; j < m; ++j)
            {
                values[(k * m + j) * nt + ti] = phis[j](s);
            }
            ++ti;
        }
        for (std::size_t j = 0; j < m; ++j)
        {
            dynkin[k * m + j] = phis[j](s) - phis[j](flat_local) - integral[j];
        }
    });

    CheckResult res;
    res.suite = "forward_equation";
    res.statistic_name = "max |slope - L phi| / SE";
    res.rule = "every slope interval (95%) contains L phi(flat) and every Dynkin mean interval (99%) contains 0";
    res.replicas = n;
    res.seed = c.seed;
    const std::size_t unstable = static_cast<std::size_t>(std::count(stabilized.begin(), stabilized.end(), 0));
    bool ok = unstable == 0;
    const double z95 = stats::normal_quantile(0.975);
    const double z99 = stats::normal_quantile(0.995);
    json per = json::array();
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j)
    {
        const double phi0 = phis[j](flat_local);
        const double exact = apply_generator(rate, std::nullopt, phis[j], flat_local);
        // Means and covariance of (phi(t_k) - phi0).
        std::vector<double> mean(nt, 0.0);
        for (std::size_t k = 0; k < n; ++k)
        {
            for (std::size_t ti = 0; ti < nt; ++ti)
            {
                mean[ti] += values[(k * m + j) * nt + ti] - phi0;
            }
        }
        for (auto& x : mean)
        {
            x /= static_cast<double>(n);
        }
        std::vector<std::vector<double>> cov(nt, std::vector<double>(nt, 0.0));
        for (std::size_t k = 0; k < n; ++k)
        {
            for (std::size_t p = 0; p < nt; ++p)
            {
                const double dp = values[(k * m + j) * nt + p] - phi0 - mean[p];
                for (std::size_t q = p; q < nt; ++q)
                {
                    cov[p][q] += dp * (values[(k * m + j) * nt + q] - phi0 - mean[q]);
                }
            }
        }
        for (std::size_t p = 0; p < nt; ++p)
        {
            for (std::size_t q = p; q < nt; ++q)
            {
                cov[p][q] /= static_cast<double>(n - 1) * static_cast<double>(n);
                cov[q][p] = cov[p][q];
            }
        }
        std::vector<std::vector<double>> X;
        for (double t : times)
        {
            std::vector<double> row;
            double tp = t;
            for (int d = 1; d <= o.fit_degree; ++d)
            {
                row.push_back(tp);
                tp *= t;
            }
            X.push_back(row);
        }
        bool degenerate = true;
        for (std::size_t p = 0; p < nt; ++p)
        {
            degenerate = degenerate && mean[p] == 0.0 && cov[p][p] == 0.0;
        }
        double slope = 0.0;
        double se = 0.0;
        // phi(t) = phi(0) on every replica: both sides vanish exactly.
        if (!degenerate)
        {
            const auto fit = stats::generalized_least_squares(X, mean, cov);
            slope = fit.beta[0];
            se = std::sqrt(fit.cov[0][0]);
        }
        const stats::Interval ci{slope - z95 * se, slope + z95 * se};
        stats::Running dk;
        for (std::size_t k = 0; k < n; ++k)
        {
            dk.add(dynkin[k * m + j]);
        }
        const stats::Interval dci{dk.mean() - z99 * dk.se(), dk.mean() + z99 * dk.se()};
        ok = ok && ci.contains(exact) && dci.contains(0.0);
        worst = std::max(worst, se > 0.0 ? std::abs(slope - exact) / se : 0.0);
        per.push_back({{"phi", phis[j].name},
                       {"exact_generator", exact},
                       {"slope", slope},
                       {"slope_se", se},
                       {"slope_interval", {ci.lo, ci.hi}},
                       {"dynkin_mean", dk.mean()},
                       {"dynkin_interval", {dci.lo, dci.hi}},
                       {"means", mean}});
        if (j == 0)
        {
            res.interval = ci;
            res.target = exact;
        }
    }
    res.statistic = worst;
    res.verdict = verdict_of(ok);
    res.details = {{"times", times}, {"fit_degree", o.fit_degree}, {"target_window", {a, b}},
                   {"not_stabilized", unstable}, {"functions", per}};
    res.runtime_seconds = sw.seconds();
    return res;
}

namespace {

double product_expectation(const Marginal& mu, const CylinderFunction& phi)
{
    const int n = phi.hi - phi.lo + 1;
    if (n > 3)
    {
        throw std::invalid_argument("equilibrium expectation supports cylinder functions on at most 3 sites");
    }
    const int zlo = mu.support_lo();
    const int zhi = mu.support_hi();
    std::vector<int> cfg(static_cast<std::size_t>(n), zlo);
    double total = 0.0;
    for (;;)
    {
        double w = 1.0;
        for (int v : cfg)
        {
            w *= mu.pmf(v);
        }
        if (w > 0.0)
        {
            total += w * phi.f(std::span<const int>(cfg));
        }
        int i = 0;
        while (i < n)
        {
            if (cfg[static_cast<std::size_t>(i)] < zhi)
            {
                ++cfg[static_cast<std::size_t>(i)];
                break;
            }
            cfg[static_cast<std::size_t>(i)] = zlo;
            ++i;
        }
        if (i == n)
        {
            break;
        }
    }
    return total;
}

} // namespace

CheckResult ergodic_average_check(const RateFunction& rate, const ErgodicOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    const Marginal mu = build_marginal(rate, o.theta);
    const ProcessSpec spec = ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta);
    const LatticeState init = sample_product_state(mu, o.l - 1, o.r + 1, derive_seed(c.seed, 1));
    const int B = std::max(o.batches, 2);
    const double width = o.T / B;
    std::vector<double> batch(static_cast<std::size_t>(B), 0.0);
    double last = 0.0;
    double value = o.phi(init);
    auto accumulate = [&](double t) {
        while (last < t)
        {
            const int k = std::min(B - 1, static_cast<int>(last / width));
            const double edge = k == B - 1 ? o.T : (k + 1) * width;
            const double upto = std::min(t, edge);
            batch[static_cast<std::size_t>(k)] += value * (upto - last);
            last = upto;
        }
    };
    SimulationOptions so;
    so.record_events = false;
    so.observer = [&](const Event& e, std::span<const LatticeState* const> st, std::span<const bool>) {
        accumulate(e.t);
        value = o.phi(*st[0]);
    };
    PoissonPlaneSet clocks(derive_seed(c.seed, 0), PoissonPlaneSet::default_cap(rate.beta_bound()));
    const Trajectory tr = simulate(spec, init, o.T, clocks, so);
    accumulate(o.T);
    for (auto& x : batch)
    {
        x /= width;
    }
    const auto bm = stats::batch_means(batch, o.level);
    const double target = product_expectation(mu, o.phi);

    CheckResult res;
    res.suite = "ergodic";
    res.statistic_name = "time average";
    res.rule = "batch-means interval contains the equilibrium expectation";
    res.statistic = bm.mean;
    res.interval = bm.ci;
    res.target = target;
    res.replicas = 1;
    res.seed = c.seed;
    res.verdict = verdict_of(bm.ci.contains(target));
    res.details = {{"theta", o.theta}, {"volume", {o.l, o.r}}, {"T", o.T}, {"phi", o.phi.name},
                   {"batches", batch}, {"se", bm.se}, {"level", o.level}, {"events", tr.event_count}};
    res.runtime_seconds = sw.seconds();
    return res;
}

std::vector<double> cesaro_series(const std::vector<LatticeState>& snapshots, const std::vector<int>& n_grid)
{
    std::vector<double> out;
    for (const auto& s : snapshots)
    {
        double best = 0.0;
        for (int i : n_grid)
        {
            if (i <= 0 || !s.has_site(-i) || !s.has_site(i))
            {
                throw std::out_of_range("Cesaro slope index " + std::to_string(i) + " outside the window");
            }
            long acc = 0;
            for (int j = -i; j <= i; ++j)
            {
                acc += std::abs(s.at(j));
            }
            best = std::max(best, static_cast<double>(acc) / i);
        }
        out.push_back(best);
    }
    return out;
}

CheckResult slope_bound_check(const std::vector<LatticeState>& snapshots, const std::vector<int>& n_grid, double alpha)
{
    Stopwatch sw;
    const auto series = cesaro_series(snapshots, n_grid);
    const auto mk = stats::mann_kendall(series);
    CheckResult res;
    res.suite = "slope";
    res.statistic_name = "max Cesaro slope over the time grid";
    res.rule = "Mann-Kendall one-sided p (increasing trend) > alpha";
    res.statistic = series.empty() ? 0.0 : *std::max_element(series.begin(), series.end());
    res.threshold = alpha;
    res.replicas = 1;
    res.verdict = verdict_of(mk.p_increasing > alpha);
    res.details = {{"series", series}, {"n_grid", n_grid}, {"mann_kendall_S", mk.S}, {"mann_kendall_z", mk.z},
                   {"p_increasing", mk.p_increasing}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult attractivity_check(const RateFunction& rate, const AttractivityOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    if (o.hi - o.lo < 3)
    {
        throw std::invalid_argument("attractivity needs a region with at least four sites");
    }
    const Marginal mu = build_marginal(rate, o.theta);
    const std::size_t n = c.replicas;
    std::vector<std::uint64_t> violations(n, 0);
    std::vector<std::uint64_t> checked(n, 0);
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        SplitMix64 g(derive_seed(rs, 2));
        // Four distinct sorted points L < l < r < R.
        std::vector<int> pts;
        while (pts.size() < 4)
        {
            const int v = o.lo + static_cast<int>(g() % static_cast<std::uint64_t>(o.hi - o.lo + 1));
            if (std::find(pts.begin(), pts.end(), v) == pts.end())
            {
                pts.push_back(v);
            }
        }
        std::sort(pts.begin(), pts.end());
        const int L = pts[0];
        const int l = pts[1];
        const int r = pts[2];
        const int R = pts[3];
        const LatticeState init = sample_product_state(mu, o.lo - 1, o.hi + 1, derive_seed(rs, 1));
        CoupledRun run;
        run.members.push_back({"A[l,r]", ProcessSpec::monotone(rate, l, r), init});
        run.members.push_back({"B[L,r]", ProcessSpec::monotone(rate, L, r), init});
        run.members.push_back({"C[l,R]", ProcessSpec::monotone(rate, l, R), init});
        run.members.push_back({"D[L,R]", ProcessSpec::monotone(rate, L, R), init});
        CoupledOptions co;
        co.horizon = o.T;
        co.record_events = false;
        co.record_discrepancy = false;
        co.observer = [&](const Event&, std::span<const LatticeState* const> st, std::span<const bool>) {
            ++checked[k];
            const auto& A = *st[0];
            const auto& Bv = *st[1];
            const auto& C = *st[2];
            const auto& D = *st[3];
            bool bad = false;
            for (int col = A.lo; col < A.hi && !bad; ++col)
            {
                const auto h = A.height(col);
                bad = h > Bv.height(col) || h > C.height(col) || h > D.height(col) ||
                      Bv.height(col) > D.height(col) || C.height(col) > D.height(col);
            }
            for (int i = l; i <= r && !bad; ++i)
            {
                bad = A.at(i) > Bv.at(i) || A.at(i) < C.at(i);
            }
            if (bad)
            {
                ++violations[k];
            }
        };
        auto clocks = clocks_for(rate, rs);
        run_coupled(run, clocks, co);
    });
    std::uint64_t total = 0;
    std::uint64_t events = 0;
    for (std::size_t k = 0; k < n; ++k)
    {
        total += violations[k];
        events += checked[k];
    }
    CheckResult res;
    res.suite = "attractivity";
    res.statistic_name = "events with an ordering violation";
    res.rule = "statistic == 0";
    res.statistic = static_cast<double>(total);
    res.threshold = 0.0;
    res.replicas = n;
    res.seed = c.seed;
    res.verdict = verdict_of(total == 0);
    res.details = {{"region", {o.lo, o.hi}}, {"T", o.T}, {"events_checked", events}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult sandwich_check(const RateFunction& rate, const SandwichOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    const GoodMeasureSpec gm = GoodMeasureSpec::step_profile(rate, o.theta1, o.theta2);
    const int lo = o.l - 1;
    const int hi = o.r + 1;
    gm.certify(lo, hi);
    const std::size_t n = c.replicas;
    std::vector<std::uint64_t> violations(n, 0);
    std::vector<std::uint64_t> checked(n, 0);
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        auto draw = sample_good_measure(gm, lo, hi, derive_seed(rs, 1));
        CoupledRun run;
        run.members.push_back({"eta", ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta1),
                               LatticeState::from_increments(lo, draw.eta)});
        run.members.push_back({"zeta", ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta1),
                               LatticeState::from_increments(lo, draw.zeta)});
        run.members.push_back({"xi", ProcessSpec::boundary_driven(rate, o.l, o.r, o.theta2),
                               LatticeState::from_increments(lo, draw.xi)});
        run.pairs = {{0, 1}, {1, 2}};
        CoupledOptions co;
        co.horizon = o.T;
        co.record_events = false;
        co.record_discrepancy = false;
        co.observer = [&](const Event&, std::span<const LatticeState* const> st, std::span<const bool>) {
            ++checked[k];
            for (int i = o.l; i <= o.r; ++i)
            {
                if (st[0]->at(i) > st[1]->at(i) || st[1]->at(i) > st[2]->at(i))
                {
                    ++violations[k];
                    return;
                }
            }
        };
        auto clocks = clocks_for(rate, rs);
        run_coupled(run, clocks, co);
    });
    std::uint64_t total = 0;
    std::uint64_t events = 0;
    for (std::size_t k = 0; k < n; ++k)
    {
        total += violations[k];
        events += checked[k];
    }
    CheckResult res;
    res.suite = "sandwich";
    res.statistic_name = "events with eta > zeta or zeta > xi on [l, r]";
    res.rule = "statistic == 0";
    res.statistic = static_cast<double>(total);
    res.threshold = 0.0;
    res.replicas = n;
    res.seed = c.seed;
    res.verdict = verdict_of(total == 0);
    res.details = {{"theta1", o.theta1}, {"theta2", o.theta2}, {"volume", {o.l, o.r}}, {"T", o.T},
                   {"events_checked", events}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult stabilization_check(const RateFunction& rate, const StabilizationOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    WindowLimitOptions wo;
    const int w = std::max(std::abs(o.a), std::abs(o.b)) + 1;
    const int half = w << wo.max_doublings;
    const LatticeState flat = LatticeState::flat(-half, half);
    const std::size_t n = c.replicas;
    std::vector<int> doublings(n, -1);
    std::vector<int> radius(n, -1);
    parallel_for(n, c.threads, [&](std::size_t k) {
        const std::uint64_t rs = derive_seed(c.seed, k);
        auto clocks = clocks_for(rate, rs);
        const auto wl = window_limit(rate, flat, o.a, o.b, o.T, clocks, wo);
        if (wl.stabilized)
        {
            doublings[k] = wl.doublings;
            radius[k] = wl.radius;
        }
    });
    std::uint64_t good = 0;
    std::map<int, std::uint64_t> hist;
    for (std::size_t k = 0; k < n; ++k)
    {
        ++hist[doublings[k]];
        good += doublings[k] >= 0 && doublings[k] <= o.max_doublings_allowed;
    }
    json h = json::object();
    for (const auto& [d, cnt] : hist)
    {
        h[d < 0 ? std::string("not_stabilized") : std::to_string(d)] = cnt;
    }
    CheckResult res;
    res.suite = "stabilization";
    res.statistic_name = "fraction stabilized within the allowed doublings";
    res.rule = "statistic >= threshold";
    res.statistic = n ? static_cast<double>(good) / static_cast<double>(n) : 0.0;
    res.threshold = o.required_fraction;
    res.replicas = n;
    res.seed = c.seed;
    res.verdict = verdict_of(res.statistic >= o.required_fraction);
    res.details = {{"target", {o.a, o.b}}, {"T", o.T}, {"base_half_width", w}, {"doublings_histogram", h}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult annihilation_check(const RateFunction& rate, const AnnihilationCheckOptions& o, const SuiteCommon& c)
{
    Stopwatch sw;
    AnnihilationOptions ao;
    ao.l = o.l;
    ao.r = o.r;
    ao.replicas = c.replicas;
    ao.seed = c.seed;
    ao.threads = c.threads;
    std::vector<double> times = o.times;
    if (std::find(times.begin(), times.end(), o.at) == times.end())
    {
        times.push_back(o.at);
    }
    std::sort(times.begin(), times.end());
    const auto est = annihilation_probability(rate, o.theta, o.site, times, ao);
    bool monotone = true;
    for (std::size_t k = 1; k < est.estimate.size(); ++k)
    {
        monotone = monotone && est.estimate[k] >= est.estimate[k - 1];
    }
    const auto at = static_cast<std::size_t>(std::find(times.begin(), times.end(), o.at) - times.begin());
    CheckResult res;
    res.suite = "annihilation";
    res.statistic_name = "P(omega(t) = zeta(t)) at t";
    res.rule = "95% Wilson interval at t excludes 0 and estimates nondecreasing in t";
    res.statistic = est.estimate[at];
    res.interval = stats::Interval{est.lo[at], est.hi[at]};
    res.threshold = 0.0;
    res.replicas = est.replicas;
    res.seed = c.seed;
    res.verdict = verdict_of(est.lo[at] > 0.0 && monotone && est.max_abs_discrepancy <= 1);
    res.details = {{"times", est.times},          {"estimate", est.estimate}, {"lo", est.lo},
                   {"hi", est.hi},                {"monotone", monotone},     {"site", o.site},
                   {"volume", {o.l, o.r}},        {"theta", o.theta},
                   {"max_abs_discrepancy", est.max_abs_discrepancy},
                   {"max_pair_count", est.max_pair_count}};
    res.runtime_seconds = sw.seconds();
    return res;
}

CheckResult equilibrium_check(const RateFunction& rate, const EquilibriumCheckOptions& o)
{
    Stopwatch sw;
    CheckResult res;
    res.suite = "equilibrium";
    res.statistic_name = "max mean-rate identity error";
    res.rule = "statistic < threshold";
    res.threshold = o.tol;
    json per = json::array();
    double worst = 0.0;
    const bool zr = rate.regime() == Regime::ZeroRange;
    for (double th : o.thetas)
    {
        const Marginal m = build_marginal(rate, th);
        const auto [up, down] = m.mean_rates();
        const double e1 = std::abs(up - std::exp(th));
        const double e2 = zr ? std::abs(down) : std::abs(down - std::exp(-th));
        double mass = 0.0;
        for (double p : m.pmf_values())
        {
            mass += p;
        }
        worst = std::max({worst, e1, e2});
        per.push_back({{"theta", th},
                       {"Z", m.Z()},
                       {"E_r", up},
                       {"E_r_minus", down},
                       {"mass_error", std::abs(mass - 1.0)},
                       {"tail_bound", m.tail_bound()},
                       {"support", {m.support_lo(), m.support_hi()}}});
    }
    res.statistic = worst;
    res.verdict = verdict_of(worst < o.tol);
    res.details = {{"rate", rate.name()}, {"thetas", per}};
    res.runtime_seconds = sw.seconds();
    return res;
}

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"equilibrium", "generator",     "stationarity", "growth",
                                                "block_growth", "forward_equation", "ergodic",   "slope",
                                                "attractivity", "sandwich",      "stabilization", "annihilation"};
    return names;
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<CylinderFunction> phis_from(const json& j)
{
    std::vector<CylinderFunction> out;
    if (j.contains("phis"))
    {
        for (const auto& x : j.at("phis"))
        {
            out.push_back(cylinder_from_json(x));
        }
    }
    return out;
}

} // namespace

CheckResult run_suite(const std::string& name, const RateFunction& rate, const json& p, const SuiteCommon& common)
{
    SuiteCommon c = common;
    if (p.contains("replicas"))
    {
        c.replicas = p.at("replicas").get<std::uint64_t>();
    }
    if (p.contains("seed"))
    {
        c.seed = p.at("seed").get<std::uint64_t>();
    }
    if (name == "equilibrium")
    {
        EquilibriumCheckOptions o;
        o.thetas = get_or(p, "thetas", o.thetas);
        o.tol = get_or(p, "tol", o.tol);
        return equilibrium_check(rate, o);
    }
    if (name == "generator")
    {
        auto phis = phis_from(p);
        if (phis.empty())
        {
            phis = {CylinderFunction::indicator_equal(0, 0), CylinderFunction::occupation(0)};
        }
        return generator_check(rate, get_or(p, "theta", 0.0), get_or(p, "l", -1), get_or(p, "r", 1), phis,
                               get_or(p, "Ms", std::vector<int>{6, 8, 10, 12}), get_or(p, "tol", 1e-8));
    }
    if (name == "stationarity")
    {
        StationarityOptions o;
        o.theta = get_or(p, "theta", o.theta);
        o.l = get_or(p, "l", o.l);
        o.r = get_or(p, "r", o.r);
        o.t = get_or(p, "t", o.t);
        o.left_rate_factor = get_or(p, "left_rate_factor", o.left_rate_factor);
        o.alpha = get_or(p, "alpha", o.alpha);
        o.phis = phis_from(p);
        return stationarity_test(rate, o, c);
    }
    if (name == "growth")
    {
        GrowthOptions o;
        o.theta1 = get_or(p, "theta1", o.theta1);
        o.theta2 = get_or(p, "theta2", o.theta2);
        o.theta = get_or(p, "theta", o.theta1);
        o.step_profile = get_or(p, "step_profile", o.step_profile);
        o.l = get_or(p, "l", o.l);
        o.r = get_or(p, "r", o.r);
        o.times = get_or(p, "times", o.times);
        return growth_bound_check(rate, o, c);
    }
    if (name == "block_growth")
    {
        BlockGrowthOptions o;
        o.theta = get_or(p, "theta", o.theta);
        o.t = get_or(p, "t", o.t);
        o.sites = get_or(p, "sites", o.sites);
        o.right = get_or(p, "right", o.right);
        return block_growth_decay(rate, o, c);
    }
    if (name == "forward_equation")
    {
        ForwardOptions o;
        o.phis = phis_from(p);
        o.times = get_or(p, "times", o.times);
        o.fit_degree = get_or(p, "fit_degree", o.fit_degree);
        o.target_lo = get_or(p, "target_lo", o.target_lo);
        o.target_hi = get_or(p, "target_hi", o.target_hi);
        return forward_equation_check(rate, o, c);
    }
    if (name == "ergodic")
    {
        ErgodicOptions o;
        o.theta = get_or(p, "theta", o.theta);
        o.l = get_or(p, "l", o.l);
        o.r = get_or(p, "r", o.r);
        o.T = get_or(p, "T", o.T);
        o.batches = get_or(p, "batches", o.batches);
        o.level = get_or(p, "level", o.level);
        if (p.contains("phi"))
        {
            o.phi = cylinder_from_json(p.at("phi"));
        }
        return ergodic_average_check(rate, o, c);
    }
    if (name == "slope")
    {
        const double T = get_or(p, "T", 50.0);
        const int steps = get_or(p, "snapshots", 25);
        const auto grid = get_or(p, "n_grid", std::vector<int>{2, 4, 8});
        const int nmax = *std::max_element(grid.begin(), grid.end());
        WindowLimitOptions wo;
        const int w = nmax + 1;
        const int half = w << wo.max_doublings;
        // Stationary start by default; "flat" starts from omega = 0.
        const std::string start = get_or(p, "initial", std::string("equilibrium"));
        const double theta = get_or(p, "theta", 0.0);
        const LatticeState init =
            start == "flat" ? LatticeState::flat(-half, half)
                            : sample_product_state(build_marginal(rate, theta), -half, half, derive_seed(c.seed, 1));
        auto clocks = clocks_for(rate, derive_seed(c.seed, 0));
        const auto wl = window_limit(rate, init, -nmax, nmax, T, clocks, wo);
        if (!wl.stabilized)
        {
            CheckResult res;
            res.suite = "slope";
            res.verdict = CheckVerdict::Fail;
            res.note = wl.diagnostic;
            return res;
        }
        std::vector<LatticeState> snaps;
        LatticeState s = wl.initial;
        std::size_t e = 0;
        for (int k = 0; k <= steps; ++k)
        {
            const double t = T * k / steps;
            while (e < wl.events.size() && wl.events[e].t <= t)
            {
                s.lay_brick(wl.events[e].column);
                ++e;
            }
            snaps.push_back(restrict_state(s, -nmax, nmax));
        }
        auto res = slope_bound_check(snaps, grid, get_or(p, "alpha", 0.01));
        res.seed = c.seed;
        res.details["T"] = T;
        res.details["stabilization_radius"] = wl.radius;
        res.details["initial"] = start;
        return res;
    }
    if (name == "attractivity")
    {
        AttractivityOptions o;
        o.lo = get_or(p, "lo", o.lo);
        o.hi = get_or(p, "hi", o.hi);
        o.T = get_or(p, "T", o.T);
        o.theta = get_or(p, "theta", o.theta);
        return attractivity_check(rate, o, c);
    }
    if (name == "sandwich")
    {
        SandwichOptions o;
        o.theta1 = get_or(p, "theta1", o.theta1);
        o.theta2 = get_or(p, "theta2", o.theta2);
        o.l = get_or(p, "l", o.l);
        o.r = get_or(p, "r", o.r);
        o.T = get_or(p, "T", o.T);
        return sandwich_check(rate, o, c);
    }
    if (name == "stabilization")
    {
        StabilizationOptions o;
        o.a = get_or(p, "a", o.a);
        o.b = get_or(p, "b", o.b);
        o.T = get_or(p, "T", o.T);
        o.max_doublings_allowed = get_or(p, "max_doublings_allowed", o.max_doublings_allowed);
        o.required_fraction = get_or(p, "required_fraction", o.required_fraction);
        return stabilization_check(rate, o, c);
    }
    if (name == "annihilation")
    {
        AnnihilationCheckOptions o;
        o.theta = get_or(p, "theta", o.theta);
        o.site = get_or(p, "site", o.site);
        o.times = get_or(p, "times", o.times);
        o.at = get_or(p, "at", o.at);
        o.l = get_or(p, "l", o.l);
        o.r = get_or(p, "r", o.r);
        return annihilation_check(rate, o, c);
    }
    throw UnknownSuite("unknown suite '" + name + "'");
}

} // namespace brick
