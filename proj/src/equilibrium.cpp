#include "bricklayers/equilibrium.hpp"

#include "bricklayers/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace brick {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) noexcept
{
    if (a == kNegInf)
    {
        return b;
    }
    if (b == kNegInf)
    {
        return a;
    }
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_mul(double a, double b) noexcept
{
    return (a == kNegInf || b == kNegInf) ? kNegInf : a + b;
}

// log of a geometric tail sum first / (1 - q) given log first and log q; +inf when q >= 1.
double log_geometric_tail(double log_first, double log_q) noexcept
{
    if (log_first == kNegInf)
    {
        return kNegInf;
    }
    if (!(log_q < 0.0))
    {
        return std::numeric_limits<double>::infinity();
    }
    return log_first - std::log(-std::expm1(log_q));
}

struct LogFactorials
{
    // lf[n] = log r(n)!, n = 0..size-1.
    std::vector<double> lf{0.0};

    void extend(const RateFunction& r, int n)
    {
        while (static_cast<int>(lf.size()) <= n)
        {
            const int y = static_cast<int>(lf.size());
            lf.push_back(lf.back() + r.log_rate(y));
        }
    }
};

// Certified bound on sum_{|z| > M} w(z) (1 + r(z) + r(-z)), in log scale. Ratios of successive
// terms are nonincreasing because r is nondecreasing, so each side is dominated by a geometric series.
double log_tail_weight(const RateFunction& r, double theta, int M, LogFactorials& f)
{
    f.extend(r, M + 2);
    const double lr1 = r.log_rate(M + 1);
    const double lr2 = r.log_rate(M + 2);
    const double lrm = r.log_rate(-M - 1);

    // z > M
    const double lw_right = theta * (M + 1) - f.lf[static_cast<std::size_t>(M + 1)];
    const double mass_r = log_geometric_tail(lw_right, theta - lr2);
    const double up_r = log_geometric_tail(lw_right + lr1, theta - lr1);
    double total = log_add(log_add(mass_r, up_r), log_mul(lrm, mass_r));
    if (r.regime() == Regime::ZeroRange)
    {
        return total;
    }
    // z < -M
    const double lw_left = -theta * (M + 1) - f.lf[static_cast<std::size_t>(M + 1)];
    const double mass_l = log_geometric_tail(lw_left, -theta - lr2);
    const double down_l = log_geometric_tail(lw_left + lr1, -theta - lr1);
    total = log_add(total, log_add(log_add(mass_l, down_l), log_mul(lrm, mass_l)));
    return total;
}

double log_partition(const RateFunction& r, double theta, int M, LogFactorials& f)
{
    f.extend(r, M);
    const int lo = r.regime() == Regime::ZeroRange ? 0 : -M;
    double peak = kNegInf;
    for (int z = lo; z <= M; ++z)
    {
        peak = std::max(peak, theta * z - f.lf[static_cast<std::size_t>(std::abs(z))]);
    }
    double s = 0.0;
    for (int z = lo; z <= M; ++z)
    {
        s += std::exp(theta * z - f.lf[static_cast<std::size_t>(std::abs(z))] - peak);
    }
    return peak + std::log(s);
}

double relative_tail(const RateFunction& r, double theta, int M, LogFactorials& f)
{
    const double lt = log_tail_weight(r, theta, M, f);
    if (lt == std::numeric_limits<double>::infinity())
    {
        return std::numeric_limits<double>::infinity();
    }
    return std::exp(lt - log_partition(r, theta, M, f));
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

} // namespace

double Marginal::Z() const noexcept { return std::exp(log_Z_); }

double Marginal::pmf(int z) const noexcept
{
    if (z < lo_ || z > hi_)
    {
        return 0.0;
    }
    return pmf_[static_cast<std::size_t>(z - lo_)];
}

double Marginal::log_weight(int z) const noexcept
{
    if (rate_.regime() == Regime::ZeroRange && z < 0)
    {
        return kNegInf;
    }
    try
    {
        return theta_ * z - rate_.log_factorial(std::abs(z));
    }
    catch (const RateError&)
    {
        return kNegInf;
    }
}

double Marginal::cdf(int z) const noexcept
{
    if (z < lo_)
    {
        return 0.0;
    }
    if (z >= hi_)
    {
        return 1.0;
    }
    return cdf_[static_cast<std::size_t>(z - lo_)];
}

double Marginal::mean_density() const noexcept
{
    return expect([](int z) { return static_cast<double>(z); });
}

double Marginal::variance() const noexcept
{
    const double m = mean_density();
    return expect([m](int z) { return (z - m) * (z - m); });
}

std::pair<double, double> Marginal::mean_rates() const noexcept
{
    double up = 0.0;
    double down = 0.0;
    for (int z = lo_; z <= hi_; ++z)
    {
        const double lp = std::log(pmf_[static_cast<std::size_t>(z - lo_)]);
        const double a = rate_.log_rate(z);
        const double b = rate_.log_rate(-z);
        if (a != kNegInf)
        {
            up += std::exp(lp + a);
        }
        if (b != kNegInf)
        {
            down += std::exp(lp + b);
        }
    }
    return {up, down};
}

int Marginal::sample(double u) const noexcept
{
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end())
    {
        return hi_;
    }
    return lo_ + static_cast<int>(it - cdf_.begin());
}

Marginal build_marginal(const RateFunction& r, double theta, double tol, int support_cap)
{
    if (!std::isfinite(theta))
    {
        throw EquilibriumError("theta must be finite");
    }
    if (!(tol > 0.0))
    {
        throw EquilibriumError("tail tolerance must be positive");
    }
    const bool zr = r.regime() == Regime::ZeroRange;
    if (zr && r(1) <= 0.0)
    {
        throw EquilibriumError("zero-range rate with r(1) = 0 has no equilibrium family");
    }
    if (const auto sup = r.supremum())
    {
        const double lim = std::log(*sup);
        const double edge = zr ? theta : std::abs(theta);
        if (!(edge < lim))
        {
            throw EquilibriumError("partition function diverges: need e^theta < sup r = " + fmt(*sup) +
                                   " (theta = " + fmt(theta) + ")");
        }
    }

    LogFactorials f;
    int hi = 1;
    while (!(relative_tail(r, theta, hi, f) < tol))
    {
        if (hi >= support_cap)
        {
            throw EquilibriumError("support cap " + std::to_string(support_cap) +
                                   " reached before the tail bound fell below " + fmt(tol));
        }
        hi = std::min(2 * hi, support_cap);
    }
    // Tighten: smallest M in (hi/2, hi] still certified.
    int good = hi;
    int bad = hi / 2;
    while (good - bad > 1)
    {
        const int mid = bad + (good - bad) / 2;
        if (relative_tail(r, theta, mid, f) < tol)
        {
            good = mid;
        }
        else
        {
            bad = mid;
        }
    }
    const int M = good;

    Marginal m(r, theta);
    m.lo_ = zr ? 0 : -M;
    m.hi_ = M;
    m.log_Z_ = log_partition(r, theta, M, f);
    m.tail_bound_ = relative_tail(r, theta, M, f);
    const std::size_t n = static_cast<std::size_t>(m.hi_ - m.lo_ + 1);
    m.pmf_.resize(n);
    m.cdf_.resize(n);
    double acc = 0.0;
    for (int z = m.lo_; z <= m.hi_; ++z)
    {
        const auto k = static_cast<std::size_t>(z - m.lo_);
        m.pmf_[k] = std::exp(theta * z - f.lf[static_cast<std::size_t>(std::abs(z))] - m.log_Z_);
        acc += m.pmf_[k];
        m.cdf_[k] = acc;
    }
    for (auto& c : m.cdf_)
    {
        c = std::min(c / acc, 1.0);
    }
    m.cdf_.back() = 1.0;
    return m;
}

std::pair<double, double> attainable_density(const RateFunction& r)
{
    const double inf = std::numeric_limits<double>::infinity();
    if (r.regime() == Regime::ZeroRange)
    {
        return {0.0, inf};
    }
    return {-inf, inf};
}

double invert_density(const RateFunction& r, double rho, double tol)
{
    const bool zr = r.regime() == Regime::ZeroRange;
    if (!std::isfinite(rho) || (zr && !(rho > 0.0)))
    {
        throw EquilibriumError("density " + fmt(rho) + " outside the attainable range " +
                               (zr ? std::string("(0, inf)") : std::string("(-inf, inf)")));
    }
    auto density = [&](double th) { return build_marginal(r, th).mean_density(); };

    std::optional<double> lim;
    if (const auto sup = r.supremum())
    {
        lim = std::log(*sup);
    }

    double a = -1.0;
    double b = 1.0;
    if (lim)
    {
        b = std::min(b, *lim - 0.5);
        a = std::min(a, b - 1.0);
    }
    while (density(a) > rho)
    {
        a *= 2.0;
        if (a < -1e6)
        {
            throw EquilibriumError("density " + fmt(rho) + " below the attainable range");
        }
    }
    int k = 1;
    while (density(b) < rho)
    {
        if (lim)
        {
            if (k > 50)
            {
                throw EquilibriumError("density " + fmt(rho) + " above the numerically attainable range");
            }
            b = *lim - std::ldexp(1.0, -k);
            ++k;
        }
        else
        {
            b = b < 1.0 ? 1.0 : 2.0 * b;
            if (b > 1e6)
            {
                throw EquilibriumError("density " + fmt(rho) + " above the attainable range");
            }
        }
    }
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it)
    {
        mid = 0.5 * (a + b);
        const double d = density(mid);
        if (std::abs(d - rho) < tol)
        {
            return mid;
        }
        if (mid == a || mid == b)
        {
            break;
        }
        (d < rho ? a : b) = mid;
    }
    return mid;
}

bool stochastically_dominated(const Marginal& lower, const Marginal& upper) noexcept
{
    const int lo = std::min(lower.support_lo(), upper.support_lo());
    const int hi = std::max(lower.support_hi(), upper.support_hi());
    // Truncated supports differ; mass below the certified tail bounds is not evidence.
    const double slack = lower.tail_bound() + upper.tail_bound();
    for (int z = lo; z <= hi; ++z)
    {
        if (lower.cdf(z) + slack < upper.cdf(z))
        {
            return false;
        }
    }
    return true;
}

std::pair<int, int> monotone_coupled_sample(const Marginal& lower, const Marginal& upper, double u)
{
    if (!stochastically_dominated(lower, upper))
    {
        throw std::logic_error("monotone coupling needs the lower marginal to be dominated by the upper one");
    }
    const int z1 = lower.sample(u);
    const int z2 = upper.sample(u);
    if (z1 > z2)
    {
        throw std::logic_error("monotone coupling violated: CDF ordering broken at u = " + fmt(u));
    }
    return {z1, z2};
}

ExponentialMomentReport exponential_moment(const Marginal& m, double C)
{
    ExponentialMomentReport rep;
    rep.constant = C;
    const int lo = m.support_lo();
    const int hi = m.support_hi();
    auto term = [&](int z) { return std::exp(C * std::abs(z) + std::log(m.pmf(z))); };
    for (int z = lo; z <= hi; ++z)
    {
        rep.value += term(z);
    }
    // Smallest k with terms decreasing in |z| on both sides from k to the support edge.
    const int edge = std::max(hi, -lo);
    int z_star = edge;
    for (int k = edge - 1; k >= 0; --k)
    {
        bool dec = true;
        if (k + 1 <= hi && !(term(k + 1) < term(k)))
        {
            dec = false;
        }
        if (-k - 1 >= lo && !(term(-k - 1) < term(-k)))
        {
            dec = false;
        }
        if (!dec)
        {
            break;
        }
        z_star = k;
    }
    rep.z_star = z_star;
    // Beyond the support the term ratio is e^{C + |theta|} / r(|z| + 1), nonincreasing in |z|.
    const double lr = m.rate().log_rate(edge + 1);
    const double ratio = C + std::abs(m.theta()) - lr;
    rep.decays_beyond_z_star = z_star < edge && ratio < 0.0;
    return rep;
}

GoodMeasureSpec::GoodMeasureSpec(std::shared_ptr<const Marginal> lower, std::shared_ptr<const Marginal> upper,
                                 Selector site_marginal)
    : lower_(std::move(lower)), upper_(std::move(upper)), select_(std::move(site_marginal))
{
    if (!lower_ || !upper_ || !select_)
    {
        throw EquilibriumError("good measure needs both bounding marginals and a site selector");
    }
    if (lower_->theta() > upper_->theta())
    {
        throw EquilibriumError("good measure needs theta1 <= theta2");
    }
}

GoodMeasureSpec GoodMeasureSpec::uniform(const RateFunction& r, double theta1, double theta2, double theta,
                                         double tol)
{
    if (!(theta1 <= theta && theta <= theta2))
    {
        throw EquilibriumError("theta " + fmt(theta) + " outside [" + fmt(theta1) + ", " + fmt(theta2) + "]");
    }
    auto lo = std::make_shared<const Marginal>(build_marginal(r, theta1, tol));
    auto hi = std::make_shared<const Marginal>(build_marginal(r, theta2, tol));
    auto mid = std::make_shared<const Marginal>(build_marginal(r, theta, tol));
    return GoodMeasureSpec(lo, hi, [mid](int) { return mid; });
}

GoodMeasureSpec GoodMeasureSpec::step_profile(const RateFunction& r, double theta1, double theta2, double tol)
{
    auto lo = std::make_shared<const Marginal>(build_marginal(r, theta1, tol));
    auto hi = std::make_shared<const Marginal>(build_marginal(r, theta2, tol));
    return GoodMeasureSpec(lo, hi, [lo, hi](int site) { return site <= 0 ? hi : lo; });
}

void GoodMeasureSpec::certify(int site_lo, int site_hi) const
{
    for (int i = site_lo; i <= site_hi; ++i)
    {
        const auto pi = select_(i);
        if (!pi)
        {
            throw EquilibriumError("no marginal selected at site " + std::to_string(i));
        }
        if (!stochastically_dominated(*lower_, *pi) || !stochastically_dominated(*pi, *upper_))
        {
            throw EquilibriumError("stochastic sandwich fails at site " + std::to_string(i));
        }
    }
}

GoodMeasureSample sample_good_measure(const GoodMeasureSpec& spec, int site_lo, int site_hi, std::uint64_t seed)
{
    GoodMeasureSample s;
    s.site_lo = site_lo;
    const std::size_t n = site_hi >= site_lo ? static_cast<std::size_t>(site_hi - site_lo + 1) : 0;
    s.eta.resize(n);
    s.zeta.resize(n);
    s.xi.resize(n);
    const std::uint64_t key = hash_words(seed, 0x676f6f64ULL);
    for (std::size_t k = 0; k < n; ++k)
    {
        const int site = site_lo + static_cast<int>(k);
        const double u = counter_uniform(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(site)));
        s.eta[k] = spec.lower().sample(u);
        s.zeta[k] = spec.site_marginal(site)->sample(u);
        s.xi[k] = spec.upper().sample(u);
        if (s.eta[k] > s.zeta[k] || s.zeta[k] > s.xi[k])
        {
            throw std::logic_error("good-measure sandwich violated at site " + std::to_string(site));
        }
    }
    return s;
}

} // namespace brick
