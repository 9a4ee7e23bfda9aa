#pragma once

#include "bricklayers/dynamics.hpp"
#include "bricklayers/rates.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brick {

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct RateConfig
{
    /// exponential_bricklayers | zero_range_exponential | zero_range_linear_capped | table
    std::string family = "exponential_bricklayers";
    double beta = 1.0;
    double cap = 2.0;
    // table family only
    std::string table_path;
    std::string regime = "bricklayers";
    std::string extrapolation = "geometric";
    double beta_bound = 1.0;

    friend bool operator==(const RateConfig&, const RateConfig&) = default;
};

struct ProcessConfig
{
    /// monotone | boundary_driven
    std::string kind = "boundary_driven";
    int l = -3;
    int r = 3;
    double theta = 0.0;
    std::optional<double> left_virtual_rate;
    std::optional<double> right_virtual_rate;
    std::optional<int> clamp;

    friend bool operator==(const ProcessConfig&, const ProcessConfig&) = default;
};

struct InitialConfig
{
    /// equilibrium | flat | step | explicit
    std::string kind = "equilibrium";
    double theta = 0.0;
    double theta1 = -0.5;
    double theta2 = 0.5;
    std::vector<int> omega;

    friend bool operator==(const InitialConfig&, const InitialConfig&) = default;
};

struct WindowConfig
{
    int lo = -4;
    int hi = 4;

    friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct OutputConfig
{
    std::string dir = "out";
    std::string prefix = "run";
    /// jsonl | csv (snapshot table)
    std::string format = "jsonl";

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct EquilibriumConfig
{
    double theta = 0.0;
    std::uint64_t samples = 1000;
    double tol = 1e-12;

    friend bool operator==(const EquilibriumConfig&, const EquilibriumConfig&) = default;
};

struct CoupledMemberConfig
{
    std::string label;
    ProcessConfig process;
    /// Brick laid on the shared initial state before the run.
    std::optional<int> lay_brick;

    friend bool operator==(const CoupledMemberConfig&, const CoupledMemberConfig&) = default;
};

struct CouplingConfig
{
    std::vector<CoupledMemberConfig> members;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    bool full_recheck = false;

    friend bool operator==(const CouplingConfig&, const CouplingConfig&) = default;
};

struct WindowLimitConfig
{
    bool enabled = false;
    int a = -2;
    int b = 2;
    int max_doublings = 12;

    friend bool operator==(const WindowLimitConfig&, const WindowLimitConfig&) = default;
};

struct ExperimentConfig
{
    RateConfig rate;
    ProcessConfig process;
    WindowConfig window;
    InitialConfig initial;
    double horizon = 1.0;
    std::vector<double> snapshots;
    std::uint64_t replicas = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    OutputConfig output;
    EquilibriumConfig equilibrium;
    CouplingConfig coupling;
    WindowLimitConfig window_limit;
    /// Suite name -> parameters.
    nlohmann::json suites = nlohmann::json::object();

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses and validates; unknown keys and wrong types raise ConfigError naming the key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved form (every key present).
nlohmann::json to_json(const ExperimentConfig& c);

RateFunction make_rate(const RateConfig& c);
ProcessSpec make_process(const ProcessConfig& c, const RateFunction& rate);
/// Initial state on the configured window; random kinds draw from `key`.
LatticeState make_initial(const ExperimentConfig& c, const RateFunction& rate, std::uint64_t key);

} // namespace brick
