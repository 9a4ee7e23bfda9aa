#pragma once

#include "bricklayers/rates.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace brick {

class EquilibriumError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Single-site equilibrium law mu(z) proportional to exp(theta z) / r(|z|)!,
/// truncated to a support whose discarded tail mass is certified below `tail_bound`.
class Marginal
{
public:
    double theta() const noexcept { return theta_; }
    const RateFunction& rate() const noexcept { return rate_; }

    int support_lo() const noexcept { return lo_; }
    int support_hi() const noexcept { return hi_; }

    /// log Z(theta) of the truncated sum.
    double log_Z() const noexcept { return log_Z_; }
    double Z() const noexcept;
    double tail_bound() const noexcept { return tail_bound_; }

    double pmf(int z) const noexcept;
    double log_weight(int z) const noexcept;
    double cdf(int z) const noexcept;
    const std::vector<double>& pmf_values() const noexcept { return pmf_; }

    double mean_density() const noexcept;
    double variance() const noexcept;
    /// (E[r(z)], E[r(-z)]); analytically (e^theta, e^-theta) for bricklayers.
    std::pair<double, double> mean_rates() const noexcept;
    /// E[f(z)] over the truncated support.
    template <class F>
    double expect(F&& f) const
    {
        double s = 0.0;
        for (int z = lo_; z <= hi_; ++z)
        {
            s += pmf_[static_cast<std::size_t>(z - lo_)] * f(z);
        }
        return s;
    }

    /// Inverse-CDF draw; deterministic in u in (0, 1).
    int sample(double u) const noexcept;

private:
    friend Marginal build_marginal(const RateFunction&, double, double, int);

    Marginal(RateFunction rate, double theta) : rate_(std::move(rate)), theta_(theta) {}

    RateFunction rate_;
    double theta_;
    int lo_ = 0;
    int hi_ = 0;
    double log_Z_ = 0.0;
    double tail_bound_ = 0.0;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

/// Builds mu^(theta) with support [-M, M] (zero range: [0, M]); M doubles until the
/// geometric tail bound falls below `tol`. Throws EquilibriumError when Z(theta) diverges.
Marginal build_marginal(const RateFunction& r, double theta, double tol = 1e-12, int support_cap = 1 << 16);

inline double mean_density(const Marginal& m) noexcept { return m.mean_density(); }
inline double variance(const Marginal& m) noexcept { return m.variance(); }
inline std::pair<double, double> mean_rates(const Marginal& m) noexcept { return m.mean_rates(); }
inline int sample_marginal(const Marginal& m, double u) noexcept { return m.sample(u); }

/// theta with |E^(theta)(z) - rho| < tol, by bracketing and bisection.
double invert_density(const RateFunction& r, double rho, double tol = 1e-8);

/// Density range reachable by some theta: (-inf, inf) for bricklayers, (0, inf) for zero range.
std::pair<double, double> attainable_density(const RateFunction& r);

/// True when F_lower(z) >= F_upper(z) at every support point, up to the truncated tail mass.
bool stochastically_dominated(const Marginal& lower, const Marginal& upper) noexcept;

/// Common-uniform inverse-CDF pair; z1 <= z2 whenever theta1 <= theta2.
std::pair<int, int> monotone_coupled_sample(const Marginal& lower, const Marginal& upper, double u);

struct ExponentialMomentReport
{
    double constant = 0.0;
    double value = 0.0;
    /// Beyond |z| >= z_star the summands e^{C|z|} mu(z) decrease monotonically.
    int z_star = 0;
    bool decays_beyond_z_star = false;
};

/// Truncated E[e^{C|z|}] with a check that the tail terms decay.
ExponentialMomentReport exponential_moment(const Marginal& m, double C);

/// Initial law sandwiched between mu^(theta1) and mu^(theta2) site by site.
class GoodMeasureSpec
{
public:
    using Selector = std::function<std::shared_ptr<const Marginal>(int site)>;

    GoodMeasureSpec(std::shared_ptr<const Marginal> lower, std::shared_ptr<const Marginal> upper, Selector site_marginal);

    /// pi = mu^(theta) at every site, theta in [theta1, theta2].
    static GoodMeasureSpec uniform(const RateFunction& r, double theta1, double theta2, double theta, double tol = 1e-12);
    /// pi_i = mu^(theta2) for i <= 0 and mu^(theta1) for i >= 1.
    static GoodMeasureSpec step_profile(const RateFunction& r, double theta1, double theta2, double tol = 1e-12);

    double theta1() const noexcept { return lower_->theta(); }
    double theta2() const noexcept { return upper_->theta(); }
    const Marginal& lower() const noexcept { return *lower_; }
    const Marginal& upper() const noexcept { return *upper_; }
    std::shared_ptr<const Marginal> site_marginal(int site) const { return select_(site); }

    /// Verifies the CDF sandwich at every site of [site_lo, site_hi]; throws on violation.
    void certify(int site_lo, int site_hi) const;

private:
    std::shared_ptr<const Marginal> lower_;
    std::shared_ptr<const Marginal> upper_;
    Selector select_;
};

struct GoodMeasureSample
{
    int site_lo = 0;
    std::vector<int> eta;  // ~ mu^(theta1)
    std::vector<int> zeta; // ~ pi
    std::vector<int> xi;   // ~ mu^(theta2)
};

/// Per-site common-uniform triple, eta_i <= zeta_i <= xi_i at every site.
GoodMeasureSample sample_good_measure(const GoodMeasureSpec& spec, int site_lo, int site_hi, std::uint64_t seed);

} // namespace brick
