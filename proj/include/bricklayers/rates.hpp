#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace brick {

enum class Regime : std::uint8_t { Bricklayers, ZeroRange };

/// How a table-defined rate continues past the last tabulated value.
enum class Extrapolation : std::uint8_t { Geometric, Constant };

/// r(z) = exp(beta (z - 1/2)); satisfies r(z) r(1-z) = 1 identically.
struct ExponentialBricklayers
{
    double beta;
};

/// Tabulated values r(z_lo), ..., r(z_lo + n - 1). Bricklayers tables are
/// completed through r(z) = 1 / r(1 - z); zero-range tables vanish for z <= 0.
struct TableDefined
{
    int z_lo;
    std::vector<double> values;
    Extrapolation extrapolation;
};

/// Zero-range family with exponentially growing rates:
/// r(z) = exp(beta (z - 1/2)) for z >= 1 and r(z) = 0 for z <= 0.
struct ZeroRangeBounded
{
    double beta;
};

/// Zero-range family r(z) = min(z, cap) for z >= 1, 0 otherwise.
struct ZeroRangeLinearCapped
{
    double cap;
};

using RateFamily = std::variant<ExponentialBricklayers, TableDefined, ZeroRangeBounded, ZeroRangeLinearCapped>;

class RateError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a rate table is malformed; `index` is the offending entry.
class TableError : public RateError
{
public:
    TableError(const std::string& what, long index) : RateError(what), index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

/// Jump-rate function r : Z -> R_+ with regime metadata. Immutable; cheap to copy.
class RateFunction
{
public:
    static RateFunction exponential_bricklayers(double beta);
    static RateFunction zero_range_exponential(double beta);
    static RateFunction zero_range_linear_capped(double cap);
    static RateFunction table(Regime regime, int z_lo, std::vector<double> values,
                              Extrapolation extrapolation, double beta_bound);

    /// Loads a two-column text table "z r(z)"; rows must be consecutive in z.
    static RateFunction load_table(const std::filesystem::path& path, Regime regime,
                                   Extrapolation extrapolation, double beta_bound);

    Regime regime() const noexcept { return regime_; }
    const RateFamily& family() const noexcept { return *family_; }
    double beta_bound() const noexcept { return beta_bound_; }
    std::string name() const;

    /// r(z); total on Z.
    double operator()(int z) const noexcept
    {
        const long k = static_cast<long>(z) + kCacheRadius;
        if (k >= 0 && k < static_cast<long>(cache_->size()))
        {
            return (*cache_)[static_cast<std::size_t>(k)];
        }
        return evaluate(z);
    }

    /// log r(z); -inf where r vanishes.
    double log_rate(int z) const noexcept;

    /// log r(n)! = sum_{y=1}^{n} log r(y). Throws RateError if some r(y) = 0.
    double log_factorial(int n) const;

    /// sup r over Z when the family is bounded.
    std::optional<double> supremum() const noexcept;

    /// r evaluated in an arbitrary floating type (used by extended-precision oracles).
    template <class Real>
    Real rate_as(int z) const;

private:
    static constexpr int kCacheRadius = 96;

    RateFunction(Regime regime, RateFamily family, double beta_bound);
    double evaluate(int z) const noexcept;

    Regime regime_;
    std::shared_ptr<const RateFamily> family_;
    double beta_bound_;
    std::shared_ptr<const std::vector<double>> cache_;
};

/// Alias matching the operation name used throughout the docs.
inline double eval_rate(const RateFunction& r, int z) noexcept { return r(z); }

/// log(r(n)!) computed in log space.
inline double rate_factorial(const RateFunction& r, int n) { return r.log_factorial(n); }

enum class Verdict : std::uint8_t { Pass, Warn, Fail };

struct ConditionCheck
{
    std::string condition;
    Verdict verdict = Verdict::Pass;
    bool mandatory = true;
    std::optional<int> first_violation;
    std::string note;
};

struct ValidationReport
{
    int z_lo = 0;
    int z_hi = 0;
    std::vector<ConditionCheck> checks;
    /// False when r is only nondecreasing: ergodicity checks are then unavailable.
    bool ergodicity_available = true;
    std::optional<double> supremum;

    bool usable() const noexcept;
    const ConditionCheck& check(const std::string& condition) const;
};

/// Checks monotonicity, r(z) r(1-z) = 1 (or r = 0 on z <= 0 for zero range),
/// divergence of r and the exponential bound r(z) < exp(beta z) over [z_lo, z_hi].
ValidationReport validate_rate_function(const RateFunction& r, int z_lo = -50, int z_hi = 50);

std::string to_string(Verdict v);
std::string to_string(Regime r);

// ---------------------------------------------------------------------------

template <class Real>
Real RateFunction::rate_as(int z) const
{
    using std::exp;
    using std::pow;
    const Real half = Real(1) / Real(2);
    return std::visit(
        [&](const auto& f) -> Real {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ExponentialBricklayers>)
            {
                return exp(Real(f.beta) * (Real(z) - half));
            }
            else if constexpr (std::is_same_v<F, ZeroRangeBounded>)
            {
                return z <= 0 ? Real(0) : Real(exp(Real(f.beta) * (Real(z) - half)));
            }
            else if constexpr (std::is_same_v<F, ZeroRangeLinearCapped>)
            {
                return z <= 0 ? Real(0) : Real(std::min<double>(z, f.cap));
            }
            else
            {
                const int n = static_cast<int>(f.values.size());
                const int z_hi = f.z_lo + n - 1;
                auto above = [&](int w) -> Real {
                    const Real last = Real(f.values.back());
                    if (f.extrapolation == Extrapolation::Constant || n < 2)
                    {
                        return last;
                    }
                    const Real q = last / Real(f.values[static_cast<std::size_t>(n - 2)]);
                    return last * Real(pow(q, w - z_hi));
                };
                if (z >= f.z_lo && z <= z_hi)
                {
                    return Real(f.values[static_cast<std::size_t>(z - f.z_lo)]);
                }
                if (z > z_hi)
                {
                    return above(z);
                }
                if (regime_ == Regime::ZeroRange)
                {
                    return Real(0);
                }
                const int mirror = 1 - z;
                if (mirror <= z_hi)
                {
                    return Real(1) / Real(f.values[static_cast<std::size_t>(mirror - f.z_lo)]);
                }
                return Real(1) / above(mirror);
            }
        },
        *family_);
}

} // namespace brick
