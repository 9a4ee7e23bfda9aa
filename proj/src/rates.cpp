#include "bricklayers/rates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace brick {

namespace {

std::string format_double(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace

RateFunction::RateFunction(Regime regime, RateFamily family, double beta_bound)
    : regime_(regime), family_(std::make_shared<const RateFamily>(std::move(family))), beta_bound_(beta_bound)
{
    if (!(beta_bound_ > 0.0) || !std::isfinite(beta_bound_))
    {
        throw RateError("beta bound must be a positive finite real");
    }
    auto cache = std::make_shared<std::vector<double>>(2 * kCacheRadius + 1);
    for (int z = -kCacheRadius; z <= kCacheRadius; ++z)
    {
        (*cache)[static_cast<std::size_t>(z + kCacheRadius)] = evaluate(z);
    }
    cache_ = std::move(cache);
}

RateFunction RateFunction::exponential_bricklayers(double beta)
{
    if (!(beta > 0.0))
    {
        throw RateError("exponential bricklayers rate needs beta > 0");
    }
    return RateFunction(Regime::Bricklayers, ExponentialBricklayers{beta}, beta);
}

RateFunction RateFunction::zero_range_exponential(double beta)
{
    if (!(beta > 0.0))
    {
        throw RateError("zero-range exponential rate needs beta > 0");
    }
    return RateFunction(Regime::ZeroRange, ZeroRangeBounded{beta}, beta);
}

RateFunction RateFunction::zero_range_linear_capped(double cap)
{
    if (!(cap > 0.0))
    {
        throw RateError("zero-range capped rate needs cap > 0");
    }
    // min(z, cap) <= z < e^z for z >= 1.
    return RateFunction(Regime::ZeroRange, ZeroRangeLinearCapped{cap}, 1.0);
}

RateFunction RateFunction::table(Regime regime, int z_lo, std::vector<double> values,
                                 Extrapolation extrapolation, double beta_bound)
{
    if (values.empty())
    {
        throw TableError("rate table is empty", 0);
    }
    for (std::size_t k = 0; k < values.size(); ++k)
    {
        if (!std::isfinite(values[k]) || values[k] < 0.0)
        {
            throw TableError("rate table entry at z=" + std::to_string(z_lo + static_cast<long>(k)) +
                                 " is negative or not finite",
                             static_cast<long>(k));
        }
    }
    if (z_lo > 1)
    {
        throw TableError("rate table must cover z=1 (starts at z=" + std::to_string(z_lo) + ")", 0);
    }
    if (regime == Regime::Bricklayers && extrapolation == Extrapolation::Geometric && values.size() >= 2 &&
        values[values.size() - 2] <= 0.0)
    {
        throw TableError("geometric extrapolation needs positive final entries",
                         static_cast<long>(values.size()) - 2);
    }
    return RateFunction(regime, TableDefined{z_lo, std::move(values), extrapolation}, beta_bound);
}

RateFunction RateFunction::load_table(const std::filesystem::path& path, Regime regime,
                                      Extrapolation extrapolation, double beta_bound)
{
    std::ifstream in(path);
    if (!in)
    {
        throw RateError("cannot open rate table " + path.string());
    }
    std::vector<double> values;
    int z_lo = 0;
    long expected = 0;
    std::string line;
    long row = 0;
    while (std::getline(in, line))
    {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
        {
            continue;
        }
        std::istringstream fields(line);
        long z = 0;
        double rz = 0.0;
        if (!(fields >> z >> rz))
        {
            throw TableError("malformed rate table row " + std::to_string(row) + " in " + path.string(), row);
        }
        if (row == 0)
        {
            z_lo = static_cast<int>(z);
            expected = z;
        }
        if (z != expected)
        {
            throw TableError("gap in rate table support: expected z=" + std::to_string(expected) + ", found z=" +
                                 std::to_string(z) + " at row " + std::to_string(row),
                             row);
        }
        values.push_back(rz);
        ++expected;
        ++row;
    }
    return table(regime, z_lo, std::move(values), extrapolation, beta_bound);
}

std::string RateFunction::name() const
{
    return std::visit(
        [](const auto& f) -> std::string {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ExponentialBricklayers>)
            {
                return "exponential_bricklayers(beta=" + format_double(f.beta) + ")";
            }
            else if constexpr (std::is_same_v<F, ZeroRangeBounded>)
            {
                return "zero_range_exponential(beta=" + format_double(f.beta) + ")";
            }
            else if constexpr (std::is_same_v<F, ZeroRangeLinearCapped>)
            {
                return "zero_range_linear_capped(cap=" + format_double(f.cap) + ")";
            }
            else
            {
                return "table(z_lo=" + std::to_string(f.z_lo) + ", n=" + std::to_string(f.values.size()) + ")";
            }
        },
        *family_);
}

double RateFunction::evaluate(int z) const noexcept
{
    return std::visit(
        [&](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ExponentialBricklayers>)
            {
                return std::exp(f.beta * (z - 0.5));
            }
            else if constexpr (std::is_same_v<F, ZeroRangeBounded>)
            {
                return z <= 0 ? 0.0 : std::exp(f.beta * (z - 0.5));
            }
            else if constexpr (std::is_same_v<F, ZeroRangeLinearCapped>)
            {
                return z <= 0 ? 0.0 : std::min<double>(z, f.cap);
            }
            else
            {
                return rate_as<double>(z);
            }
        },
        *family_);
}

double RateFunction::log_rate(int z) const noexcept
{
    return std::visit(
        [&](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ExponentialBricklayers>)
            {
                return f.beta * (z - 0.5);
            }
            else if constexpr (std::is_same_v<F, ZeroRangeBounded>)
            {
                return z <= 0 ? -std::numeric_limits<double>::infinity() : f.beta * (z - 0.5);
            }
            else
            {
                const double v = (*this)(z);
                return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
            }
        },
        *family_);
}

double RateFunction::log_factorial(int n) const
{
    if (n < 0)
    {
        throw RateError("rate factorial needs n >= 0");
    }
    if (const auto* e = std::get_if<ExponentialBricklayers>(family_.get()))
    {
        return e->beta * 0.5 * static_cast<double>(n) * static_cast<double>(n);
    }
    if (const auto* e = std::get_if<ZeroRangeBounded>(family_.get()))
    {
        return e->beta * 0.5 * static_cast<double>(n) * static_cast<double>(n);
    }
    double sum = 0.0;
    for (int y = 1; y <= n; ++y)
    {
        const double lr = log_rate(y);
        if (!std::isfinite(lr))
        {
            throw RateError("rate factorial undefined: r(" + std::to_string(y) + ") = 0");
        }
        sum += lr;
    }
    return sum;
}

std::optional<double> RateFunction::supremum() const noexcept
{
    return std::visit(
        [&](const auto& f) -> std::optional<double> {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ZeroRangeLinearCapped>)
            {
                return f.cap;
            }
            else if constexpr (std::is_same_v<F, TableDefined>)
            {
                const std::size_t n = f.values.size();
                const bool grows = f.extrapolation == Extrapolation::Geometric && n >= 2 &&
                                   f.values[n - 1] > f.values[n - 2];
                if (grows)
                {
                    return std::nullopt;
                }
                return *std::max_element(f.values.begin(), f.values.end());
            }
            else
            {
                return std::nullopt;
            }
        },
        *family_);
}

// ---------------------------------------------------------------------------

bool ValidationReport::usable() const noexcept
{
    return std::none_of(checks.begin(), checks.end(),
                        [](const ConditionCheck& c) { return c.mandatory && c.verdict == Verdict::Fail; });
}

const ConditionCheck& ValidationReport::check(const std::string& condition) const
{
    for (const auto& c : checks)
    {
        if (c.condition == condition)
        {
            return c;
        }
    }
    throw std::out_of_range("no condition named " + condition);
}

ValidationReport validate_rate_function(const RateFunction& r, int z_lo, int z_hi)
{
    if (z_lo > z_hi)
    {
        throw RateError("validation range is empty");
    }
    ValidationReport report;
    report.z_lo = z_lo;
    report.z_hi = z_hi;
    report.supremum = r.supremum();
    const bool zero_range = r.regime() == Regime::ZeroRange;

    // Monotonicity. Zero-range rates only need to increase strictly on z >= 0.
    {
        ConditionCheck c{"monotone", Verdict::Pass, true, std::nullopt, ""};
        std::optional<int> first_flat;
        for (int z = z_lo; z < z_hi; ++z)
        {
            const double a = r(z);
            const double b = r(z + 1);
            if (b < a)
            {
                c.verdict = Verdict::Fail;
                c.first_violation = z;
                c.note = "r decreases between z and z+1";
                break;
            }
            if (b == a && !(zero_range && z < 0) && !first_flat)
            {
                first_flat = z;
            }
        }
        if (c.verdict == Verdict::Pass && first_flat)
        {
            c.verdict = Verdict::Warn;
            c.first_violation = first_flat;
            c.note = "nondecreasing but not strictly increasing: ergodicity checks unavailable";
            report.ergodicity_available = false;
        }
        else if (c.verdict == Verdict::Fail)
        {
            report.ergodicity_available = false;
        }
        report.checks.push_back(c);
    }

    // Product condition r(z) r(1 - z) = 1, or r = 0 on z <= 0 for zero range.
    if (zero_range)
    {
        ConditionCheck c{"vanishes_nonpositive", Verdict::Pass, true, std::nullopt, ""};
        for (int z = z_lo; z <= std::min(z_hi, 0); ++z)
        {
            if (r(z) != 0.0)
            {
                c.verdict = Verdict::Fail;
                c.first_violation = z;
                c.note = "zero-range rate must vanish for z <= 0";
                break;
            }
        }
        if (c.verdict == Verdict::Pass && z_hi >= 1 && !(r(1) > 0.0))
        {
            c.verdict = Verdict::Fail;
            c.first_violation = 1;
            c.note = "r(1) = 0 leaves the equilibrium factorial undefined";
        }
        report.checks.push_back(c);
    }
    else
    {
        // The condition is symmetric under z <-> 1 - z, so z >= 1 covers the range.
        ConditionCheck c{"reciprocal", Verdict::Pass, true, std::nullopt, ""};
        const int top = std::max(z_hi, 1 - z_lo);
        for (int z = 1; z <= top; ++z)
        {
            const double s = r.log_rate(z) + r.log_rate(1 - z);
            if (!std::isfinite(s) || std::abs(s) >= 1e-12)
            {
                c.verdict = Verdict::Fail;
                c.first_violation = z;
                c.note = "r(z) r(1-z) != 1";
                break;
            }
        }
        report.checks.push_back(c);
    }

    // Divergence r(z) -> infinity.
    {
        ConditionCheck c{"unbounded", Verdict::Pass, !zero_range, std::nullopt, ""};
        if (report.supremum)
        {
            std::ostringstream note;
            note << "bounded: sup r = " << *report.supremum << ", requires e^theta < " << *report.supremum;
            c.note = note.str();
            c.verdict = zero_range ? Verdict::Warn : Verdict::Fail;
        }
        report.checks.push_back(c);
    }

    // Exponential bound r(z) < exp(beta z) for z > 0.
    {
        ConditionCheck c{"exponential_bound", Verdict::Pass, true, std::nullopt, ""};
        for (int z = std::max(1, z_lo); z <= z_hi; ++z)
        {
            if (!(r.log_rate(z) < r.beta_bound() * z))
            {
                c.verdict = Verdict::Fail;
                c.first_violation = z;
                c.note = "r(z) >= exp(beta z)";
                break;
            }
        }
        report.checks.push_back(c);
    }
    return report;
}

std::string to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::Pass:
        return "pass";
    case Verdict::Warn:
        return "warn";
    case Verdict::Fail:
        return "fail";
    }
    return "?";
}

std::string to_string(Regime r)
{
    return r == Regime::Bricklayers ? "bricklayers" : "zero_range";
}

} // namespace brick
