#include "bricklayers/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brick::stats {

void Running::merge(const Running& o) noexcept
{
    if (o.n_ == 0)
    {
        return;
    }
    if (n_ == 0)
    {
        *this = o;
        return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
}

double Running::se() const noexcept { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double normal_sf(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

double student_t_quantile(double df, double p) { return boost::math::quantile(boost::math::students_t(df), p); }

double chi_square_sf(double x, double df)
{
    if (x <= 0.0)
    {
        return 1.0;
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

double kolmogorov_pvalue(double D, std::size_t n)
{
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * D;
    if (lambda < 1e-3)
    {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k)
    {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-16)
        {
            break;
        }
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    KsResult r;
    if (samples.empty())
    {
        return r;
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k)
    {
        const double F = cdf(samples[k]);
        r.D = std::max({r.D, static_cast<double>(k + 1) / n - F, F - static_cast<double>(k) / n});
    }
    r.p = kolmogorov_pvalue(r.D, samples.size());
    return r;
}

WelchResult welch_test(const Running& a, const Running& b)
{
    WelchResult r;
    const double va = a.variance() / static_cast<double>(a.count());
    const double vb = b.variance() / static_cast<double>(b.count());
    const double diff = a.mean() - b.mean();
    if (va + vb <= 0.0)
    {
        r.p = diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(a.count() - 1) + vb * vb / static_cast<double>(b.count() - 1));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(r.df), std::abs(r.t)));
    return r;
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double level)
{
    if (n == 0)
    {
        return {0.0, 1.0};
    }
    const double z = normal_quantile(0.5 + level / 2.0);
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& counts, const std::vector<double>& probs,
                               double min_expected)
{
    if (counts.size() != probs.size() || counts.empty())
    {
        throw std::invalid_argument("chi-square: counts and probabilities differ in length");
    }
    double n = 0.0;
    for (auto c : counts)
    {
        n += static_cast<double>(c);
    }
    // Pool from both ends inward until the edge bins carry enough expected mass.
    std::vector<double> obs;
    std::vector<double> ex;
    std::size_t lo = 0;
    std::size_t hi = counts.size() - 1;
    double o_lo = 0.0;
    double e_lo = 0.0;
    while (lo < hi && (e_lo + n * probs[lo]) < min_expected)
    {
        o_lo += static_cast<double>(counts[lo]);
        e_lo += n * probs[lo];
        ++lo;
    }
    double o_hi = 0.0;
    double e_hi = 0.0;
    while (hi > lo && (e_hi + n * probs[hi]) < min_expected)
    {
        o_hi += static_cast<double>(counts[hi]);
        e_hi += n * probs[hi];
        --hi;
    }
    for (std::size_t k = lo; k <= hi; ++k)
    {
        double o = static_cast<double>(counts[k]);
        double e = n * probs[k];
        if (k == lo)
        {
            o += o_lo;
            e += e_lo;
        }
        if (k == hi)
        {
            o += o_hi;
            e += e_hi;
        }
        obs.push_back(o);
        ex.push_back(e);
    }
    // Interior bins below the threshold are merged into their right neighbour.
    std::vector<double> po;
    std::vector<double> pe;
    double ao = 0.0;
    double ae = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k)
    {
        ao += obs[k];
        ae += ex[k];
        if (ae >= min_expected || k + 1 == obs.size())
        {
            po.push_back(ao);
            pe.push_back(ae);
            ao = 0.0;
            ae = 0.0;
        }
    }
    if (pe.size() > 1 && pe.back() < min_expected)
    {
        pe[pe.size() - 2] += pe.back();
        po[po.size() - 2] += po.back();
        pe.pop_back();
        po.pop_back();
    }
    ChiSquareResult r;
    r.bins = static_cast<int>(pe.size());
    for (std::size_t k = 0; k < pe.size(); ++k)
    {
        r.statistic += (po[k] - pe[k]) * (po[k] - pe[k]) / pe[k];
    }
    r.df = r.bins - 1;
    r.p = r.df > 0 ? chi_square_sf(r.statistic, r.df) : 1.0;
    return r;
}

BatchMeans batch_means(const std::vector<double>& v, double level)
{
    BatchMeans b;
    b.batches = static_cast<int>(v.size());
    Running acc;
    for (double x : v)
    {
        acc.add(x);
    }
    b.mean = acc.mean();
    b.se = acc.se();
    if (v.size() < 2)
    {
        b.ci = {b.mean, b.mean};
        return b;
    }
    const double q = student_t_quantile(static_cast<double>(v.size() - 1), 0.5 + level / 2.0);
    b.ci = {b.mean - q * b.se, b.mean + q * b.se};
    return b;
}

MannKendall mann_kendall(const std::vector<double>& x)
{
    MannKendall m;
    const std::size_t n = x.size();
    if (n < 3)
    {
        return m;
    }
    double S = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
        for (std::size_t j = i + 1; j < n; ++j)
        {
            S += (x[j] > x[i]) - (x[j] < x[i]);
        }
    }
    // Tie correction.
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < n;)
    {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i])
        {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    const double nn = static_cast<double>(n);
    const double var = (nn * (nn - 1.0) * (2.0 * nn + 5.0) - ties) / 18.0;
    m.S = S;
    if (var <= 0.0)
    {
        return m;
    }
    m.z = S > 0 ? (S - 1.0) / std::sqrt(var) : (S < 0 ? (S + 1.0) / std::sqrt(var) : 0.0);
    m.p_increasing = normal_sf(m.z);
    return m;
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& var)
{
    double sw = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
    {
        const double w = 1.0 / var[k];
        sw += w;
        sx += w * x[k];
        sy += w * y[k];
        sxx += w * x[k] * x[k];
        sxy += w * x[k] * y[k];
    }
    const double det = sw * sxx - sx * sx;
    LinearFit f;
    f.dof = static_cast<int>(x.size()) - 2;
    if (det <= 0.0)
    {
        return f;
    }
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.se_slope = std::sqrt(sw / det);
    f.se_intercept = std::sqrt(sxx / det);
    return f;
}

GlsFit generalized_least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                                 const std::vector<std::vector<double>>& sigma)
{
    const auto n = static_cast<Eigen::Index>(X.size());
    const auto p = static_cast<Eigen::Index>(X.empty() ? 0 : X[0].size());
    Eigen::MatrixXd A(n, p);
    Eigen::VectorXd b(n);
    Eigen::MatrixXd S(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        for (Eigen::Index j = 0; j < p; ++j)
        {
            A(i, j) = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        b(i) = y[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j)
        {
            S(i, j) = sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
    {
        throw std::runtime_error("GLS covariance is not positive definite");
    }
    const Eigen::MatrixXd Wa = llt.solve(A);
    const Eigen::MatrixXd info = A.transpose() * Wa;
    const Eigen::MatrixXd cov = info.inverse();
    const Eigen::VectorXd beta = cov * (Wa.transpose() * b);
    GlsFit f;
    f.beta.assign(beta.data(), beta.data() + beta.size());
    f.cov.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(p)));
    for (Eigen::Index i = 0; i < p; ++i)
    {
        for (Eigen::Index j = 0; j < p; ++j)
        {
            f.cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cov(i, j);
        }
    }
    return f;
}

} // namespace brick::stats
