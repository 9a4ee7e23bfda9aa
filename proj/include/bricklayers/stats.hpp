#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace brick::stats {

/// Welford accumulator.
class Running
{
public:
    void add(double x) noexcept
    {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    void merge(const Running& o) noexcept;

    std::uint64_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double se() const noexcept;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double normal_quantile(double p);
double normal_sf(double z);
double student_t_quantile(double df, double p);
double chi_square_sf(double x, double df);

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double kolmogorov_pvalue(double D, std::size_t n);

struct KsResult
{
    double D = 0.0;
    double p = 1.0;
};
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

struct WelchResult
{
    double t = 0.0;
    double df = 0.0;
    double p = 1.0; // two-sided
};
WelchResult welch_test(const Running& a, const Running& b);

struct Interval
{
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Wilson score interval for k successes out of n at two-sided confidence `level`.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double level = 0.95);

struct ChiSquareResult
{
    double statistic = 0.0;
    int df = 0;
    double p = 1.0;
    int bins = 0;
};

/// Goodness of fit of counts (index k <-> category k) against probabilities; adjacent
/// categories are pooled from both ends until every expected count is at least `min_expected`.
ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& counts, const std::vector<double>& probs,
                               double min_expected = 5.0);

struct BatchMeans
{
    double mean = 0.0;
    double se = 0.0;
    int batches = 0;
    Interval ci;
};
/// Mean of equally weighted batch values with a Student-t interval at `level`.
BatchMeans batch_means(const std::vector<double>& batch_values, double level = 0.99);

struct MannKendall
{
    double S = 0.0;
    double z = 0.0;
    double p_increasing = 1.0; // one-sided
};
MannKendall mann_kendall(const std::vector<double>& series);

struct LinearFit
{
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    int dof = 0;
};
/// Weighted least squares y ~ a + b x with weights 1/var; standard errors from the weights.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& var);

struct GlsFit
{
    std::vector<double> beta;
    std::vector<std::vector<double>> cov;
};
/// Generalized least squares y = X beta + e with Cov(e) = sigma; X rows are observations.
GlsFit generalized_least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                                 const std::vector<std::vector<double>>& sigma);

} // namespace brick::stats
