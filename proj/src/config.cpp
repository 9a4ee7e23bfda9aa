#include "bricklayers/config.hpp"

#include "bricklayers/coupling.hpp"
#include "bricklayers/equilibrium.hpp"

#include <fstream>
#include <set>

namespace brick {

using nlohmann::json;

namespace {

// Reads the keys of one object, remembering which ones were consumed.
class Section
{
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
        {
            throw ConfigError(where() + ": expected an object");
        }
    }

    template <class T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key))
        {
            return;
        }
        try
        {
            out = j_.at(key).get<T>();
        }
        catch (const json::exception& e)
        {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    template <class T>
    void read(const char* key, std::optional<T>& out)
    {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null())
        {
            return;
        }
        try
        {
            out = j_.at(key).get<T>();
        }
        catch (const json::exception& e)
        {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items())
        {
            if (!seen_.count(k))
            {
                throw ConfigError(where(k.c_str()) + ": unknown key");
            }
        }
    }

    std::string where(const char* key = nullptr) const
    {
        std::string p = path_.empty() ? "config" : path_;
        return key ? p + "." + key : p;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& where)
{
    for (const char* a : allowed)
    {
        if (value == a)
        {
            return;
        }
    }
    std::string msg = where + ": '" + value + "' is not one of";
    for (const char* a : allowed)
    {
        msg += std::string(" ") + a;
    }
    throw ConfigError(msg);
}

RateConfig parse_rate(const json& j, const std::string& path)
{
    RateConfig c;
    Section s(j, path);
    s.read("family", c.family);
    s.read("beta", c.beta);
    s.read("cap", c.cap);
    s.read("table_path", c.table_path);
    s.read("regime", c.regime);
    s.read("extrapolation", c.extrapolation);
    s.read("beta_bound", c.beta_bound);
    s.finish();
    one_of(c.family, {"exponential_bricklayers", "zero_range_exponential", "zero_range_linear_capped", "table"},
           s.where("family"));
    one_of(c.regime, {"bricklayers", "zero_range"}, s.where("regime"));
    one_of(c.extrapolation, {"geometric", "constant"}, s.where("extrapolation"));
    if (c.family == "table" && c.table_path.empty())
    {
        throw ConfigError(s.where("table_path") + ": required for the table family");
    }
    return c;
}

ProcessConfig parse_process(const json& j, const std::string& path)
{
    ProcessConfig c;
    Section s(j, path);
    s.read("kind", c.kind);
    s.read("l", c.l);
    s.read("r", c.r);
    s.read("theta", c.theta);
    s.read("left_virtual_rate", c.left_virtual_rate);
    s.read("right_virtual_rate", c.right_virtual_rate);
    s.read("clamp", c.clamp);
    s.finish();
    one_of(c.kind, {"monotone", "boundary_driven"}, s.where("kind"));
    if (c.l > c.r)
    {
        throw ConfigError(s.where() + ": need l <= r");
    }
    return c;
}

json process_json(const ProcessConfig& c)
{
    return {{"kind", c.kind},
            {"l", c.l},
            {"r", c.r},
            {"theta", c.theta},
            {"left_virtual_rate", c.left_virtual_rate ? json(*c.left_virtual_rate) : json(nullptr)},
            {"right_virtual_rate", c.right_virtual_rate ? json(*c.right_virtual_rate) : json(nullptr)},
            {"clamp", c.clamp ? json(*c.clamp) : json(nullptr)}};
}

} // namespace

ExperimentConfig parse_config(const json& j)
{
    ExperimentConfig c;
    Section s(j, "");
    if (const json* x = s.child("rate"))
    {
        c.rate = parse_rate(*x, "config.rate");
    }
    if (const json* x = s.child("process"))
    {
        c.process = parse_process(*x, "config.process");
    }
    if (const json* x = s.child("window"))
    {
        Section w(*x, "config.window");
        w.read("lo", c.window.lo);
        w.read("hi", c.window.hi);
        w.finish();
        if (c.window.lo > c.window.hi)
        {
            throw ConfigError("config.window: need lo <= hi");
        }
    }
    if (const json* x = s.child("initial"))
    {
        Section w(*x, "config.initial");
        w.read("kind", c.initial.kind);
        w.read("theta", c.initial.theta);
        w.read("theta1", c.initial.theta1);
        w.read("theta2", c.initial.theta2);
        w.read("omega", c.initial.omega);
        w.finish();
        one_of(c.initial.kind, {"equilibrium", "flat", "step", "explicit"}, w.where("kind"));
    }
    s.read("horizon", c.horizon);
    s.read("snapshots", c.snapshots);
    s.read("replicas", c.replicas);
    s.read("seed", c.seed);
    s.read("threads", c.threads);
    if (const json* x = s.child("output"))
    {
        Section w(*x, "config.output");
        w.read("dir", c.output.dir);
        w.read("prefix", c.output.prefix);
        w.read("format", c.output.format);
        w.finish();
        one_of(c.output.format, {"jsonl", "csv"}, w.where("format"));
    }
    if (const json* x = s.child("equilibrium"))
    {
        Section w(*x, "config.equilibrium");
        w.read("theta", c.equilibrium.theta);
        w.read("samples", c.equilibrium.samples);
        w.read("tol", c.equilibrium.tol);
        w.finish();
    }
    if (const json* x = s.child("coupling"))
    {
        Section w(*x, "config.coupling");
        if (const json* m = w.child("members"))
        {
            if (!m->is_array())
            {
                throw ConfigError("config.coupling.members: expected an array");
            }
            for (std::size_t k = 0; k < m->size(); ++k)
            {
                const std::string path = "config.coupling.members[" + std::to_string(k) + "]";
                Section ms(m->at(k), path);
                CoupledMemberConfig mc;
                ms.read("label", mc.label);
                ms.read("lay_brick", mc.lay_brick);
                if (const json* p = ms.child("process"))
                {
                    mc.process = parse_process(*p, path + ".process");
                }
                ms.finish();
                c.coupling.members.push_back(mc);
            }
        }
        w.read("pairs", c.coupling.pairs);
        w.read("full_recheck", c.coupling.full_recheck);
        w.finish();
        for (const auto& [a, b] : c.coupling.pairs)
        {
            if (a >= c.coupling.members.size() || b >= c.coupling.members.size())
            {
                throw ConfigError("config.coupling.pairs: member index out of range");
            }
        }
    }
    if (const json* x = s.child("window_limit"))
    {
        Section w(*x, "config.window_limit");
        w.read("enabled", c.window_limit.enabled);
        w.read("a", c.window_limit.a);
        w.read("b", c.window_limit.b);
        w.read("max_doublings", c.window_limit.max_doublings);
        w.finish();
        if (c.window_limit.a > c.window_limit.b || c.window_limit.max_doublings < 1)
        {
            throw ConfigError("config.window_limit: need a <= b and max_doublings >= 1");
        }
    }
    if (const json* x = s.child("suites"))
    {
        if (!x->is_object())
        {
            throw ConfigError("config.suites: expected an object of suite parameters");
        }
        c.suites = *x;
    }
    s.finish();
    if (!(c.horizon >= 0.0))
    {
        throw ConfigError("config.horizon: must be >= 0");
    }
    for (double t : c.snapshots)
    {
        if (!(t >= 0.0 && t <= c.horizon))
        {
            throw ConfigError("config.snapshots: times must lie in [0, horizon]");
        }
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    json j;
    try
    {
        in >> j;
    }
    catch (const json::exception& e)
    {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c)
{
    json members = json::array();
    for (const auto& m : c.coupling.members)
    {
        members.push_back({{"label", m.label},
                           {"process", process_json(m.process)},
                           {"lay_brick", m.lay_brick ? json(*m.lay_brick) : json(nullptr)}});
    }
    return {{"rate",
             {{"family", c.rate.family},
              {"beta", c.rate.beta},
              {"cap", c.rate.cap},
              {"table_path", c.rate.table_path},
              {"regime", c.rate.regime},
              {"extrapolation", c.rate.extrapolation},
              {"beta_bound", c.rate.beta_bound}}},
            {"process", process_json(c.process)},
            {"window", {{"lo", c.window.lo}, {"hi", c.window.hi}}},
            {"initial",
             {{"kind", c.initial.kind},
              {"theta", c.initial.theta},
              {"theta1", c.initial.theta1},
              {"theta2", c.initial.theta2},
              {"omega", c.initial.omega}}},
            {"horizon", c.horizon},
            {"snapshots", c.snapshots},
            {"replicas", c.replicas},
            {"seed", c.seed},
            {"threads", c.threads},
            {"output", {{"dir", c.output.dir}, {"prefix", c.output.prefix}, {"format", c.output.format}}},
            {"equilibrium",
             {{"theta", c.equilibrium.theta}, {"samples", c.equilibrium.samples}, {"tol", c.equilibrium.tol}}},
            {"coupling", {{"members", members}, {"pairs", c.coupling.pairs}, {"full_recheck", c.coupling.full_recheck}}},
            {"window_limit",
             {{"enabled", c.window_limit.enabled},
              {"a", c.window_limit.a},
              {"b", c.window_limit.b},
              {"max_doublings", c.window_limit.max_doublings}}},
            {"suites", c.suites}};
}

RateFunction make_rate(const RateConfig& c)
{
    if (c.family == "exponential_bricklayers")
    {
        return RateFunction::exponential_bricklayers(c.beta);
    }
    if (c.family == "zero_range_exponential")
    {
        return RateFunction::zero_range_exponential(c.beta);
    }
    if (c.family == "zero_range_linear_capped")
    {
        return RateFunction::zero_range_linear_capped(c.cap);
    }
    if (c.family == "table")
    {
        return RateFunction::load_table(c.table_path, c.regime == "zero_range" ? Regime::ZeroRange : Regime::Bricklayers,
                                        c.extrapolation == "constant" ? Extrapolation::Constant : Extrapolation::Geometric,
                                        c.beta_bound);
    }
    throw ConfigError("unknown rate family '" + c.family + "'");
}

ProcessSpec make_process(const ProcessConfig& c, const RateFunction& rate)
{
    ProcessSpec s = c.kind == "monotone" ? ProcessSpec::monotone(rate, c.l, c.r)
                                         : ProcessSpec::boundary_driven(rate, c.l, c.r, c.theta);
    s.left_virtual_rate = c.left_virtual_rate;
    s.right_virtual_rate = c.right_virtual_rate;
    s.clamp = c.clamp;
    return s;
}

LatticeState make_initial(const ExperimentConfig& c, const RateFunction& rate, std::uint64_t key)
{
    const int lo = c.window.lo;
    const int hi = c.window.hi;
    const auto& ic = c.initial;
    if (ic.kind == "flat")
    {
        return LatticeState::flat(lo, hi);
    }
    if (ic.kind == "explicit")
    {
        if (static_cast<int>(ic.omega.size()) != hi - lo + 1)
        {
            throw ConfigError("config.initial.omega: expected " + std::to_string(hi - lo + 1) + " entries for window [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return LatticeState::from_increments(lo, ic.omega);
    }
    if (ic.kind == "step")
    {
        const auto gm = GoodMeasureSpec::step_profile(rate, ic.theta1, ic.theta2);
        auto draw = sample_good_measure(gm, lo, hi, key);
        return LatticeState::from_increments(lo, std::move(draw.zeta));
    }
    return sample_product_state(build_marginal(rate, ic.theta), lo, hi, key);
}

} // namespace brick
