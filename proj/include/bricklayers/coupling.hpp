#pragma once

#include "bricklayers/dynamics.hpp"
#include "bricklayers/equilibrium.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace brick {

struct CoupledMember
{
    std::string label;
    ProcessSpec spec;
    LatticeState state;
};

/// Processes driven by one PoissonPlaneSet. Each pair (a, b) tracks d = state_b - state_a;
/// boundary-driven pairs need theta_a <= theta_b.
struct CoupledRun
{
    std::vector<CoupledMember> members;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct DiscrepancyRecord
{
    double t = 0.0;
    std::size_t pair = 0;
    /// Nonzero (site, d_site) entries after the event.
    std::vector<std::pair<int, int>> d;
};

struct CoupledOptions
{
    double horizon = 0.0;
    std::vector<double> snapshot_times;
    bool record_events = true;
    bool record_discrepancy = true;
    /// Recomputes d from the states after every event and compares with the incremental field.
    bool full_recheck = false;
    std::uint64_t max_events = 500'000'000;
    EventObserver observer;
};

struct CoupledResult
{
    std::vector<Trajectory> trajectories;
    /// Final d per pair over the common window.
    std::vector<std::vector<int>> discrepancy;
    std::vector<DiscrepancyRecord> history;
    std::uint64_t points = 0;
    std::uint64_t anomalies = 0;
};

class CouplingError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

CoupledResult run_coupled(const CoupledRun& run, PoissonPlaneSet& clocks, const CoupledOptions& opts);

struct Census
{
    int particles = 0;     // sum of d_i^+
    int antiparticles = 0; // sum of d_i^-
    std::vector<int> particle_sites;
    std::vector<int> antiparticle_sites;
};

/// Second-class particles of zeta relative to omega (d = zeta - omega) on their common window.
Census second_class_census(const LatticeState& omega, const LatticeState& zeta);
/// Census of a recorded pair at time t (replayed from the trajectories).
Census second_class_census(const CoupledRun& run, const CoupledResult& res, std::size_t pair, double t);

/// State on [lo, hi] with i.i.d. increments drawn from `m` (site i uses the i-th uniform of `key`),
/// anchored at h = 0.
LatticeState sample_product_state(const Marginal& m, int lo, int hi, std::uint64_t key);

/// Window analogue of the Cesaro slope constant: max over i in the window of the averaged |omega_j|
/// between the origin and i.
double cesaro_slope(const LatticeState& s);

struct ConditionalCouplingSetup
{
    RateFunction rate = RateFunction::exponential_bricklayers(1.0);
    /// Fixed initial configuration of the monotone process; its window is the coupling window.
    LatticeState omega;
    int l = 0;
    int r = 0;
    double theta1 = 0.0;
    double theta2 = 0.0;

    /// Throws CouplingError unless E^(theta1) < -K < K < E^(theta2).
    void validate() const;
    double K() const { return cesaro_slope(omega); }
};

struct ConditionalCouplingResult
{
    bool accepted = false;
    std::uint64_t attempts = 0;
    double acceptance = 0.0;
    double acceptance_lo = 0.0; // 95% Wilson interval
    double acceptance_hi = 0.0;
    LatticeState zeta;
    CoupledResult run;
    /// Events at which h > g somewhere on the monotone volume.
    std::uint64_t domination_violations = 0;
    std::string note;
};

/// Rejection-samples zeta from the step profile until its heights dominate omega's on the
/// window, then runs the monotone omega against the (l, r, theta1) zeta on shared clocks.
ConditionalCouplingResult conditional_coupling(const ConditionalCouplingSetup& setup, std::uint64_t max_rejections,
                                               double T, std::uint64_t seed);

/// Probability that the increments meet (on the window) by each time of the grid.
struct AnnihilationEstimate
{
    std::vector<double> times;
    std::vector<double> estimate;
    std::vector<double> lo;
    std::vector<double> hi;
    std::uint64_t replicas = 0;
    /// Largest |omega_k - zeta_k| seen; 1 for the single-brick perturbation.
    int max_abs_discrepancy = 0;
    /// Largest particle + antiparticle count seen.
    int max_pair_count = 0;
};

struct AnnihilationOptions
{
    int l = -10;
    int r = 10;
    std::uint64_t replicas = 10'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

AnnihilationEstimate annihilation_probability(const RateFunction& rate, double theta, int site,
                                              const std::vector<double>& times, const AnnihilationOptions& opts);

} // namespace brick
