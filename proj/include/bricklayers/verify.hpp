#pragma once

#include "bricklayers/coupling.hpp"
#include "bricklayers/dynamics.hpp"
#include "bricklayers/equilibrium.hpp"
#include "bricklayers/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brick {

enum class CheckVerdict : std::uint8_t { Pass, Fail, Inconclusive };
std::string to_string(CheckVerdict v);

/// Outcome of one verification suite; the verdict follows from statistic and threshold/interval.
struct CheckResult
{
    std::string suite;
    std::string statistic_name;
    double statistic = 0.0;
    /// "statistic < threshold", "statistic > threshold", "interval contains target", ...
    std::string rule;
    std::optional<double> threshold;
    std::optional<stats::Interval> interval;
    std::optional<double> target;
    CheckVerdict verdict = CheckVerdict::Inconclusive;
    std::uint64_t replicas = 0;
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
    std::string note;
    nlohmann::json details = nlohmann::json::object();

    bool passed() const noexcept { return verdict == CheckVerdict::Pass; }
    nlohmann::json to_json() const;
};

/// Bounded function of the increments on [lo, hi].
struct CylinderFunction
{
    std::string name;
    int lo = 0;
    int hi = 0;
    double bound = 0.0;
    std::function<double(std::span<const int> local)> f;
    nlohmann::json descriptor = nlohmann::json::object();

    double operator()(const LatticeState& s) const;
    /// Value on a configuration given as a site accessor.
    double eval(const std::function<int(int)>& omega) const;

    static CylinderFunction constant(double c);
    static CylinderFunction indicator_equal(int site, int value);
    static CylinderFunction indicator_at_least(int site, int value);
    /// omega_site itself; `bound` is reported as infinity.
    static CylinderFunction occupation(int site);
};

/// L phi(omega) = sum over columns touching the support of rate * (phi(omega^(c,c+1)) - phi(omega)).
/// Without a spec the infinite-volume rates r(omega_c) + r(-omega_{c+1}) are used; the state must
/// cover the sites next to the support.
double apply_generator(const RateFunction& rate, const std::optional<ProcessSpec>& spec, const CylinderFunction& phi,
                       const LatticeState& omega);

struct GeneratorResidual
{
    double residual = 0.0;
    /// Probability mass of the product measure outside the box (estimated against a box of width 2M).
    double tail_estimate = 0.0;
    std::uint64_t states = 0;
};

/// sum over omega in {|omega_i| <= M}^[l, r] of mu(omega) G phi(omega), G the (l, r, theta) generator.
/// Evaluated in 50-digit arithmetic. Throws std::length_error above `state_cap` configurations.
GeneratorResidual generator_mean_zero(const RateFunction& rate, double theta, int l, int r,
                                      const CylinderFunction& phi, int M, std::uint64_t state_cap = 50'000'000);

struct SuiteCommon
{
    std::uint64_t seed = 1;
    std::uint64_t replicas = 10'000;
    unsigned threads = 0;
};

CheckResult generator_check(const RateFunction& rate, double theta, int l, int r,
                            const std::vector<CylinderFunction>& phis, const std::vector<int>& Ms, double tol);

struct StationarityOptions
{
    double theta = 0.0;
    int l = -3;
    int r = 3;
    double t = 5.0;
    /// Multiplies the left virtual bricklayer rate (negative control when != 1).
    double left_rate_factor = 1.0;
    double alpha = 0.01;
    std::vector<CylinderFunction> phis;
};
CheckResult stationarity_test(const RateFunction& rate, const StationarityOptions& o, const SuiteCommon& c);

struct GrowthOptions
{
    double theta1 = 0.0;
    double theta2 = 0.0;
    /// Step profile (theta2 left of the origin, theta1 right) or mu^(theta) everywhere.
    bool step_profile = false;
    double theta = 0.0;
    int l = -3;
    int r = 3;
    std::vector<double> times{0.5, 1.0, 2.0};
};
CheckResult growth_bound_check(const RateFunction& rate, const GrowthOptions& o, const SuiteCommon& c);

struct BlockGrowthOptions
{
    double theta = 0.0;
    double t = 0.05;
    std::vector<int> sites{-2, -3, -4, -5, -6, -7, -8};
    int right = 2;
};
CheckResult block_growth_decay(const RateFunction& rate, const BlockGrowthOptions& o, const SuiteCommon& c);

struct ForwardOptions
{
    std::vector<CylinderFunction> phis;
    std::vector<double> times;
    int fit_degree = 3;
    int target_lo = -2;
    int target_hi = 2;
};
CheckResult forward_equation_check(const RateFunction& rate, const ForwardOptions& o, const SuiteCommon& c);

struct ErgodicOptions
{
    double theta = 0.0;
    int l = -3;
    int r = 3;
    double T = 2000.0;
    int batches = 20;
    double level = 0.99;
    CylinderFunction phi = CylinderFunction::indicator_equal(0, 0);
};
CheckResult ergodic_average_check(const RateFunction& rate, const ErgodicOptions& o, const SuiteCommon& c);

/// max over i in the n-grid of (1/i) sum_{j=-i}^{i} |omega_j| at each snapshot.
std::vector<double> cesaro_series(const std::vector<LatticeState>& snapshots, const std::vector<int>& n_grid);
CheckResult slope_bound_check(const std::vector<LatticeState>& snapshots, const std::vector<int>& n_grid,
                              double alpha = 0.01);

struct AttractivityOptions
{
    int lo = -8;
    int hi = 8;
    double T = 2.0;
    double theta = 0.0;
};
/// Heights ordered across nested monotone volumes and the increment orderings at the volume edges.
CheckResult attractivity_check(const RateFunction& rate, const AttractivityOptions& o, const SuiteCommon& c);

struct SandwichOptions
{
    double theta1 = -0.5;
    double theta2 = 0.5;
    int l = -5;
    int r = 5;
    double T = 2.0;
};
CheckResult sandwich_check(const RateFunction& rate, const SandwichOptions& o, const SuiteCommon& c);

struct StabilizationOptions
{
    int a = -2;
    int b = 2;
    double T = 1.0;
    int max_doublings_allowed = 6;
    double required_fraction = 0.99;
};
CheckResult stabilization_check(const RateFunction& rate, const StabilizationOptions& o, const SuiteCommon& c);

struct AnnihilationCheckOptions
{
    double theta = 0.0;
    int site = 0;
    std::vector<double> times{0.1, 0.5, 1.0};
    double at = 0.5;
    int l = -10;
    int r = 10;
};
CheckResult annihilation_check(const RateFunction& rate, const AnnihilationCheckOptions& o, const SuiteCommon& c);

struct EquilibriumCheckOptions
{
    std::vector<double> thetas{-1.0, 0.0, 0.7, 1.0};
    double tol = 1e-9;
};
/// Mean-rate identity and normalization over a theta list.
CheckResult equilibrium_check(const RateFunction& rate, const EquilibriumCheckOptions& o);

/// Names accepted by run_suite.
const std::vector<std::string>& suite_names();

class UnknownSuite : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Runs a suite by name with JSON parameters (missing keys take defaults).
CheckResult run_suite(const std::string& name, const RateFunction& rate, const nlohmann::json& params,
                      const SuiteCommon& common);

/// Parses a cylinder function descriptor such as {"kind": "indicator_equal", "site": 0, "value": 0}.
CylinderFunction cylinder_from_json(const nlohmann::json& j);
nlohmann::json cylinder_to_json(const CylinderFunction& f);

} // namespace brick
