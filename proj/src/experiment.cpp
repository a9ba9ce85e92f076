#include "dnlrl/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dnlrl/errors.hpp"
#include "dnlrl/plots.hpp"

namespace dnlrl {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kAgents{"dNLRLc", "dNLRLnlc"};
const std::set<std::string> kTrainers{"SAC", "REINFORCE", "DQN", "A2C"};
const std::set<std::string> kEnvironments{"cartpole", "lunar_lander", "toy_mdp"};

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string rng_to_string(const std::mt19937_64& rng)
{
    std::ostringstream os;
    os << rng;
    return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s)
{
    std::istringstream is(s);
    is >> rng;
    if (!is) {
        throw SchemaError("checkpoint holds a malformed RNG state");
    }
}

// Reads one JSON object, remembering which keys were consumed so the rest
// can be reported as unknown.
class Section {
public:
    Section(const json& obj, std::string path, std::vector<std::string>& problems)
        : obj_(obj), path_(std::move(path)), problems_(problems)
    {
        if (!obj_.is_object()) {
            problems_.push_back(where() + "expected an object");
        }
    }

    ~Section()
    {
        if (!obj_.is_object()) {
            return;
        }
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                problems_.push_back(where() + "unknown key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return obj_.is_object() && obj_.contains(key);
    }

    const json& at(const std::string& key) const { return obj_.at(key); }

    template <typename T>
    void field(const std::string& key, T& out)
    {
        if (!has(key)) {
            return;
        }
        const json& v = obj_.at(key);
        const std::string name = path_.empty() ? key : path_ + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                problems_.push_back(name + ": expected true or false");
                return;
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0 && !v.is_number_unsigned())) {
                problems_.push_back(name + ": expected a" + (std::is_unsigned_v<T> ? " non-negative" : "n")
                                    + " integer");
                return;
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                problems_.push_back(name + ": expected a number");
                return;
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                problems_.push_back(name + ": expected a string");
                return;
            }
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); })) {
                problems_.push_back(name + ": expected an array of integers");
                return;
            }
        }
        out = v.get<T>();
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "" : path_ + ": "; }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

void read_policy(Section& s, PolicyConfig& p)
{
    s.field("rules_per_action", p.rules_per_action);
    s.field("membership_c", p.membership_c);
    s.field("boundary_c", p.boundary_c);
    s.field("init_mean", p.init.mean);
    s.field("init_stddev", p.init.stddev);
    s.field("floor", p.floor);
}

json write_policy(const PolicyConfig& p)
{
    return {{"rules_per_action", p.rules_per_action}, {"membership_c", p.membership_c}, {"boundary_c", p.boundary_c},
            {"init_mean", p.init.mean},           {"init_stddev", p.init.stddev},   {"floor", p.floor}};
}

void read_sac(Section& s, SacConfig& c)
{
    s.field("gamma", c.gamma);
    s.field("alpha", c.alpha);
    s.field("auto_alpha", c.auto_alpha);
    s.field("target_entropy_scale", c.target_entropy_scale);
    s.field("tau", c.tau);
    s.field("batch_size", c.batch_size);
    s.field("actor_lr", c.actor_lr);
    s.field("critic_lr", c.critic_lr);
    s.field("alpha_lr", c.alpha_lr);
    s.field("replay_capacity", c.replay_capacity);
    s.field("warmup_steps", c.warmup_steps);
    s.field("update_every", c.update_every);
    s.field("target_update_every", c.target_update_every);
    s.field("critic_hidden", c.critic_hidden);
    s.field("max_grad_norm", c.max_grad_norm);
}

json write_sac(const SacConfig& c)
{
    return {{"gamma", c.gamma},
            {"alpha", c.alpha},
            {"auto_alpha", c.auto_alpha},
            {"target_entropy_scale", c.target_entropy_scale},
            {"tau", c.tau},
            {"batch_size", c.batch_size},
            {"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"alpha_lr", c.alpha_lr},
            {"replay_capacity", c.replay_capacity},
            {"warmup_steps", c.warmup_steps},
            {"update_every", c.update_every},
            {"target_update_every", c.target_update_every},
            {"critic_hidden", c.critic_hidden},
            {"max_grad_norm", c.max_grad_norm}};
}

void read_dqn(Section& s, DqnConfig& c)
{
    s.field("gamma", c.gamma);
    s.field("lr", c.lr);
    s.field("batch_size", c.batch_size);
    s.field("replay_capacity", c.replay_capacity);
    s.field("warmup_steps", c.warmup_steps);
    s.field("epsilon_start", c.epsilon_start);
    s.field("epsilon_end", c.epsilon_end);
    s.field("epsilon_decay_steps", c.epsilon_decay_steps);
    s.field("target_update_every", c.target_update_every);
    s.field("hidden", c.hidden);
}

json write_dqn(const DqnConfig& c)
{
    return {{"gamma", c.gamma},
            {"lr", c.lr},
            {"batch_size", c.batch_size},
            {"replay_capacity", c.replay_capacity},
            {"warmup_steps", c.warmup_steps},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_end", c.epsilon_end},
            {"epsilon_decay_steps", c.epsilon_decay_steps},
            {"target_update_every", c.target_update_every},
            {"hidden", c.hidden}};
}

void read_a2c(Section& s, A2cConfig& c)
{
    s.field("gamma", c.gamma);
    s.field("actor_lr", c.actor_lr);
    s.field("critic_lr", c.critic_lr);
    s.field("rollout", c.rollout);
    s.field("entropy_coef", c.entropy_coef);
    s.field("critic_hidden", c.critic_hidden);
}

json write_a2c(const A2cConfig& c)
{
    return {{"gamma", c.gamma},     {"actor_lr", c.actor_lr},         {"critic_lr", c.critic_lr},
            {"rollout", c.rollout}, {"entropy_coef", c.entropy_coef}, {"critic_hidden", c.critic_hidden}};
}

void read_lander(Section& s, LanderParams& p)
{
    s.field("dt", p.dt);
    s.field("substeps", p.substeps);
    s.field("gravity", p.gravity);
    s.field("main_accel", p.main_accel);
    s.field("side_accel", p.side_accel);
    s.field("side_angular_accel", p.side_angular_accel);
    s.field("leg_dx", p.leg_dx);
    s.field("leg_dy", p.leg_dy);
    s.field("hull_dx", p.hull_dx);
    s.field("hull_dy", p.hull_dy);
    s.field("spring", p.spring);
    s.field("damping", p.damping);
    s.field("friction", p.friction);
    s.field("inertia", p.inertia);
    s.field("rest_speed", p.rest_speed);
    s.field("x_limit", p.x_limit);
    s.field("y_limit", p.y_limit);
    s.field("main_fuel", p.main_fuel);
    s.field("side_fuel", p.side_fuel);
    s.field("max_steps", p.max_steps);
}

json write_lander(const LanderParams& p)
{
    return {{"dt", p.dt},
            {"substeps", p.substeps},
            {"gravity", p.gravity},
            {"main_accel", p.main_accel},
            {"side_accel", p.side_accel},
            {"side_angular_accel", p.side_angular_accel},
            {"leg_dx", p.leg_dx},
            {"leg_dy", p.leg_dy},
            {"hull_dx", p.hull_dx},
            {"hull_dy", p.hull_dy},
            {"spring", p.spring},
            {"damping", p.damping},
            {"friction", p.friction},
            {"inertia", p.inertia},
            {"rest_speed", p.rest_speed},
            {"x_limit", p.x_limit},
            {"y_limit", p.y_limit},
            {"main_fuel", p.main_fuel},
            {"side_fuel", p.side_fuel},
            {"max_steps", p.max_steps}};
}

void check_hidden(const std::vector<int>& hidden, const std::string& name, std::vector<std::string>& problems)
{
    for (int h : hidden) {
        if (h < 1) {
            problems.push_back(name + ": layer widths must be >= 1");
            return;
        }
    }
}

void check(bool ok, const std::string& what, std::vector<std::string>& problems)
{
    if (!ok) {
        problems.push_back(what);
    }
}

} // namespace

// ---------------------------------------------------------------- config

ExperimentConfig default_config(const std::string& environment)
{
    ExperimentConfig cfg;
    cfg.environment = environment;
    cfg.schema = environment_info(environment).schema;
    return cfg;
}

void ExperimentConfig::validate() const
{
    std::vector<std::string> p;
    check(kEnvironments.count(environment) > 0, "environment: unknown '" + environment + "'", p);
    check(kAgents.count(agent) > 0, "agent: must be dNLRLc or dNLRLnlc, got '" + agent + "'", p);
    check(kTrainers.count(trainer) > 0, "trainer: must be SAC, REINFORCE, DQN or A2C, got '" + trainer + "'", p);
    if (agent == "dNLRLnlc") {
        check(!transforms.empty(), "transforms: agent dNLRLnlc needs at least one transform", p);
    }
    if (agent == "dNLRLc") {
        check(transforms.empty(), "transforms: agent dNLRLc takes no transforms", p);
    }
    try {
        schema.validate();
    } catch (const ConfigError& e) {
        p.push_back(e.what());
    }
    for (const auto& [feature, fn] : transforms) {
        const bool known = std::any_of(schema.continuous.begin(), schema.continuous.end(),
                                       [&](const ContinuousFeature& f) { return f.name == feature; });
        check(known, "transforms: unknown continuous feature '" + feature + "'", p);
        try {
            lookup_transform(fn);
        } catch (const ConfigError& e) {
            p.push_back("transforms." + feature + ": " + e.what());
        }
    }

    check(policy.rules_per_action >= 1, "policy.rules_per_action: must be >= 1", p);
    check(policy.membership_c >= 1.0, "policy.membership_c: must be >= 1", p);
    check(policy.boundary_c > 0.0, "policy.boundary_c: must be > 0", p);
    check(policy.init.stddev >= 0.0, "policy.init_stddev: must be >= 0", p);
    check(policy.floor > 0.0, "policy.floor: must be > 0", p);

    check(sac.gamma >= 0.0 && sac.gamma <= 1.0, "sac.gamma: must be in [0, 1]", p);
    check(sac.alpha > 0.0, "sac.alpha: must be > 0", p);
    check(sac.tau > 0.0 && sac.tau <= 1.0, "sac.tau: must be in (0, 1]", p);
    check(sac.batch_size >= 1, "sac.batch_size: must be >= 1", p);
    check(sac.actor_lr > 0.0 && sac.critic_lr > 0.0 && sac.alpha_lr > 0.0, "sac: learning rates must be > 0", p);
    check(sac.replay_capacity >= static_cast<std::size_t>(std::max(1, sac.batch_size)),
          "sac.replay_capacity: must be >= batch_size", p);
    check(sac.warmup_steps >= 0, "sac.warmup_steps: must be >= 0", p);
    check(sac.update_every >= 1, "sac.update_every: must be >= 1", p);
    check(sac.target_update_every >= 1, "sac.target_update_every: must be >= 1", p);
    check(sac.max_grad_norm >= 0.0, "sac.max_grad_norm: must be >= 0", p);
    check_hidden(sac.critic_hidden, "sac.critic_hidden", p);

    check(reinforce.gamma >= 0.0 && reinforce.gamma <= 1.0, "reinforce.gamma: must be in [0, 1]", p);
    check(reinforce.lr > 0.0, "reinforce.lr: must be > 0", p);
    check(reinforce.optimizer == "sgd" || reinforce.optimizer == "adam",
          "reinforce.optimizer: expected \"sgd\" or \"adam\"", p);

    check(dqn.gamma >= 0.0 && dqn.gamma <= 1.0, "dqn.gamma: must be in [0, 1]", p);
    check(dqn.lr > 0.0, "dqn.lr: must be > 0", p);
    check(dqn.batch_size >= 1, "dqn.batch_size: must be >= 1", p);
    check(dqn.replay_capacity >= static_cast<std::size_t>(std::max(1, dqn.batch_size)),
          "dqn.replay_capacity: must be >= batch_size", p);
    check(dqn.warmup_steps >= 0, "dqn.warmup_steps: must be >= 0", p);
    check(dqn.epsilon_start >= 0.0 && dqn.epsilon_start <= 1.0 && dqn.epsilon_end >= 0.0 && dqn.epsilon_end <= 1.0,
          "dqn: epsilon_start and epsilon_end must be in [0, 1]", p);
    check(dqn.epsilon_decay_steps >= 1, "dqn.epsilon_decay_steps: must be >= 1", p);
    check(dqn.target_update_every >= 1, "dqn.target_update_every: must be >= 1", p);
    check_hidden(dqn.hidden, "dqn.hidden", p);

    check(a2c.gamma >= 0.0 && a2c.gamma <= 1.0, "a2c.gamma: must be in [0, 1]", p);
    check(a2c.actor_lr > 0.0 && a2c.critic_lr > 0.0, "a2c: learning rates must be > 0", p);
    check(a2c.rollout >= 1, "a2c.rollout: must be >= 1", p);
    check(a2c.entropy_coef >= 0.0, "a2c.entropy_coef: must be >= 0", p);
    check_hidden(a2c.critic_hidden, "a2c.critic_hidden", p);

    check(lander.dt > 0.0 && lander.substeps >= 1 && lander.max_steps >= 1,
          "lander: dt > 0, substeps >= 1 and max_steps >= 1 required", p);
    check(toy_max_steps >= 1, "toy_max_steps: must be >= 1", p);

    check(extraction.keep > 0.0 && extraction.keep <= extraction.confident && extraction.confident <= 1.0,
          "extraction: need 0 < keep <= confident <= 1", p);
    check(trials >= 1, "trials: must be >= 1", p);
    check(episodes >= 0, "episodes: must be >= 0", p);
    check(checkpoint_every >= 0, "checkpoint_every: must be >= 0", p);
    check(report_window >= 1, "report_window: must be >= 1", p);
    check(fidelity_states >= 0, "fidelity_states: must be >= 0", p);
    check(!output_dir.empty(), "output_dir: must not be empty", p);
    if (!p.empty()) {
        throw ValidationError(std::move(p));
    }
}

ExperimentConfig config_from_json(const json& j)
{
    std::vector<std::string> problems;
    ExperimentConfig cfg;
    {
        Section root(j, "", problems);
        std::string env = "cartpole";
        root.field("environment", env);
        if (kEnvironments.count(env)) {
            cfg = default_config(env);
        } else {
            problems.push_back("environment: unknown '" + env + "' (known: cartpole, lunar_lander, toy_mdp)");
            cfg.environment = env;
        }
        root.field("name", cfg.name);
        root.field("agent", cfg.agent);
        root.field("trainer", cfg.trainer);
        if (root.has("transforms")) {
            const json& t = root.at("transforms");
            if (!t.is_object()) {
                problems.push_back("transforms: expected an object mapping feature to function");
            } else {
                for (const auto& [feature, fn] : t.items()) {
                    if (!fn.is_string()) {
                        problems.push_back("transforms." + feature + ": expected a function name");
                    } else {
                        cfg.transforms[feature] = fn.get<std::string>();
                    }
                }
            }
        }
        if (root.has("bins")) {
            const json& b = root.at("bins");
            if (b.is_number_integer()) {
                for (auto& f : cfg.schema.continuous) {
                    f.bins = b.get<int>();
                }
            } else if (b.is_array() && b.size() == cfg.schema.continuous.size()
                       && std::all_of(b.begin(), b.end(), [](const json& e) { return e.is_number_integer(); })) {
                for (std::size_t i = 0; i < b.size(); ++i) {
                    cfg.schema.continuous[i].bins = b[i].get<int>();
                }
            } else {
                problems.push_back("bins: expected an integer or one integer per continuous feature ("
                                   + std::to_string(cfg.schema.continuous.size()) + ")");
            }
        }
        if (root.has("features")) {
            const json& fs_json = root.at("features");
            if (!fs_json.is_object()) {
                problems.push_back("features: expected an object keyed by feature name");
            } else {
                for (const auto& [name, spec] : fs_json.items()) {
                    auto it = std::find_if(cfg.schema.continuous.begin(), cfg.schema.continuous.end(),
                                           [&](const ContinuousFeature& f) { return f.name == name; });
                    if (it == cfg.schema.continuous.end()) {
                        problems.push_back("features: unknown continuous feature '" + name + "'");
                        continue;
                    }
                    Section f(spec, "features." + name, problems);
                    f.field("low", it->low);
                    f.field("high", it->high);
                    f.field("bins", it->bins);
                }
            }
        }
        if (root.has("policy")) {
            Section s(root.at("policy"), "policy", problems);
            read_policy(s, cfg.policy);
        }
        if (root.has("sac")) {
            Section s(root.at("sac"), "sac", problems);
            read_sac(s, cfg.sac);
        }
        if (root.has("reinforce")) {
            Section s(root.at("reinforce"), "reinforce", problems);
            s.field("gamma", cfg.reinforce.gamma);
            s.field("lr", cfg.reinforce.lr);
            s.field("optimizer", cfg.reinforce.optimizer);
        }
        if (root.has("dqn")) {
            Section s(root.at("dqn"), "dqn", problems);
            read_dqn(s, cfg.dqn);
        }
        if (root.has("a2c")) {
            Section s(root.at("a2c"), "a2c", problems);
            read_a2c(s, cfg.a2c);
        }
        if (root.has("lander")) {
            Section s(root.at("lander"), "lander", problems);
            read_lander(s, cfg.lander);
        }
        if (root.has("extraction")) {
            Section s(root.at("extraction"), "extraction", problems);
            s.field("keep", cfg.extraction.keep);
            s.field("confident", cfg.extraction.confident);
        }
        root.field("toy_max_steps", cfg.toy_max_steps);
        root.field("seed", cfg.seed);
        root.field("trials", cfg.trials);
        root.field("episodes", cfg.episodes);
        root.field("checkpoint_every", cfg.checkpoint_every);
        root.field("report_window", cfg.report_window);
        root.field("fidelity_states", cfg.fidelity_states);
        root.field("output_dir", cfg.output_dir);
        root.has("inherits"); // resolved by read_config_json
    }
    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg)
{
    json features = json::object();
    for (const auto& f : cfg.schema.continuous) {
        features[f.name] = {{"low", f.low}, {"high", f.high}, {"bins", f.bins}};
    }
    json j;
    j["name"] = cfg.name;
    j["environment"] = cfg.environment;
    j["agent"] = cfg.agent;
    j["trainer"] = cfg.trainer;
    j["transforms"] = cfg.transforms;
    j["features"] = features;
    j["policy"] = write_policy(cfg.policy);
    j["sac"] = write_sac(cfg.sac);
    j["reinforce"]
        = {{"gamma", cfg.reinforce.gamma}, {"lr", cfg.reinforce.lr}, {"optimizer", cfg.reinforce.optimizer}};
    j["dqn"] = write_dqn(cfg.dqn);
    j["a2c"] = write_a2c(cfg.a2c);
    j["lander"] = write_lander(cfg.lander);
    j["toy_max_steps"] = cfg.toy_max_steps;
    j["extraction"] = {{"keep", cfg.extraction.keep}, {"confident", cfg.extraction.confident}};
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["episodes"] = cfg.episodes;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["report_window"] = cfg.report_window;
    j["fidelity_states"] = cfg.fidelity_states;
    j["output_dir"] = cfg.output_dir;
    return j;
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

json read_config_json(const std::string& path)
{
    std::vector<std::string> chain;
    std::function<json(const fs::path&)> resolve = [&](const fs::path& p) -> json {
        const std::string key = fs::weakly_canonical(p).string();
        if (std::find(chain.begin(), chain.end(), key) != chain.end()) {
            throw ConfigError("config inheritance cycle through '" + p.string() + "'");
        }
        chain.push_back(key);
        json j = read_json_file(p.string());
        if (!j.is_object()) {
            throw ConfigError("'" + p.string() + "' must hold a JSON object");
        }
        if (j.contains("inherits")) {
            if (!j["inherits"].is_string()) {
                throw ConfigError("'" + p.string() + "': inherits must be a path");
            }
            json base = resolve(p.parent_path() / j["inherits"].get<std::string>());
            j.erase("inherits");
            base.merge_patch(j);
            j = std::move(base);
        }
        chain.pop_back();
        return j;
    };
    return resolve(fs::path(path));
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_config_json(path)); }

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg)
{
    if (cfg.environment == "lunar_lander") {
        return std::make_unique<LunarLander>(cfg.lander);
    }
    if (cfg.environment == "toy_mdp") {
        return std::make_unique<ToyMdp>(cfg.toy_max_steps);
    }
    return make_environment(cfg.environment);
}

std::unique_ptr<Trainer> make_trainer(const ExperimentConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const auto actions = environment_info(cfg.environment).actions;
    std::mt19937_64 seeder(seed);
    const std::uint64_t policy_seed = seeder();
    const std::uint64_t trainer_seed = seeder();
    if (cfg.trainer == "DQN") {
        return std::make_unique<DqnTrainer>(cfg.schema, static_cast<int>(actions.size()), cfg.dqn, trainer_seed);
    }
    DnlPolicy policy(cfg.schema, cfg.kb(), actions, cfg.policy, policy_seed);
    if (cfg.trainer == "SAC") {
        return std::make_unique<SacTrainer>(std::move(policy), cfg.sac, trainer_seed);
    }
    if (cfg.trainer == "REINFORCE") {
        return std::make_unique<ReinforceTrainer>(std::move(policy), cfg.reinforce, trainer_seed);
    }
    return std::make_unique<A2cTrainer>(std::move(policy), cfg.a2c, trainer_seed);
}

// ---------------------------------------------------------------- metrics

const std::vector<std::string>& metrics_columns()
{
    static const std::vector<std::string> cols{"episode",    "reward",     "steps",   "updates",
                                               "critic_loss", "actor_loss", "entropy", "alpha"};
    return cols;
}

std::string metrics_csv(const std::vector<EpisodeRecord>& episodes)
{
    std::string out;
    for (std::size_t i = 0; i < metrics_columns().size(); ++i) {
        out += (i ? "," : "") + metrics_columns()[i];
    }
    out += "\n";
    for (const auto& e : episodes) {
        out += std::to_string(e.index) + "," + num(e.reward) + "," + std::to_string(e.steps) + ","
            + std::to_string(e.updates) + "," + num(e.critic_loss) + "," + num(e.actor_loss) + "," + num(e.entropy)
            + "," + num(e.alpha) + "\n";
    }
    return out;
}

std::vector<EpisodeRecord> parse_metrics_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("episode,reward", 0) != 0) {
        throw ConfigError("metrics file does not start with the expected header");
    }
    std::vector<EpisodeRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != metrics_columns().size()) {
            throw ConfigError("metrics row has " + std::to_string(cells.size()) + " columns: '" + line + "'");
        }
        EpisodeRecord e;
        e.index = std::stoi(cells[0]);
        e.reward = std::stod(cells[1]);
        e.steps = std::stoi(cells[2]);
        e.updates = std::stoi(cells[3]);
        e.critic_loss = std::stod(cells[4]);
        e.actor_loss = std::stod(cells[5]);
        e.entropy = std::stod(cells[6]);
        e.alpha = std::stod(cells[7]);
        out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------- runs

Run::Run(ExperimentConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      seed_(seed),
      env_(make_environment(cfg_)),
      trainer_(make_trainer(cfg_, seed)),
      env_rng_(seed ^ 0x9e3779b97f4a7c15ULL)
{
}

std::vector<double> Run::rewards() const
{
    std::vector<double> out;
    out.reserve(episodes_.size());
    for (const auto& e : episodes_) {
        out.push_back(e.reward);
    }
    return out;
}

EpisodeRecord Run::run_episode()
{
    const auto start = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.index = static_cast<int>(episodes_.size());
    Eigen::VectorXd s = env_->reset(env_rng_());
    for (;;) {
        const int a = trainer_->act(s, SampleMode::Stochastic);
        StepResult r = env_->step(a);
        trainer_->observe({s, a, r.reward, r.state, r.done, r.truncated});
        const UpdateMetrics m = trainer_->update();
        rec.reward += r.reward;
        ++rec.steps;
        if (m.updated) {
            ++rec.updates;
            rec.critic_loss += m.critic_loss;
            rec.actor_loss += m.actor_loss;
            rec.entropy += m.entropy;
            rec.alpha = m.alpha;
        }
        s = std::move(r.state);
        if (r.done || r.truncated) {
            break;
        }
    }
    if (rec.updates > 0) {
        rec.critic_loss /= rec.updates;
        rec.actor_loss /= rec.updates;
        rec.entropy /= rec.updates;
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.wall_seconds = (episodes_.empty() ? wall_offset_ : episodes_.back().wall_seconds) + elapsed;
    episodes_.push_back(rec);
    return rec;
}

void Run::train(int episodes, const std::function<void(const EpisodeRecord&)>& on_episode)
{
    for (int i = 0; i < episodes; ++i) {
        const auto rec = run_episode();
        if (on_episode) {
            on_episode(rec);
        }
    }
}

json Run::checkpoint() const
{
    json j;
    j["format"] = "dnlrl-checkpoint";
    j["version"] = 1;
    j["config"] = config_to_json(cfg_);
    j["seed"] = seed_;
    j["env_rng"] = rng_to_string(env_rng_);
    json eps = json::array();
    for (const auto& e : episodes_) {
        eps.push_back({e.reward, e.steps, e.updates, e.critic_loss, e.actor_loss, e.entropy, e.alpha, e.wall_seconds});
    }
    j["episodes"] = std::move(eps);
    j["trainer"] = trainer_->save();
    return j;
}

void Run::restore(const json& j)
{
    try {
        if (j.at("format").get<std::string>() != "dnlrl-checkpoint") {
            throw SchemaError("not a dnlrl checkpoint");
        }
        const auto saved = config_from_json(j.at("config"));
        if (saved.environment != cfg_.environment || !(saved.schema == cfg_.schema) || saved.transforms != cfg_.transforms
            || saved.trainer != cfg_.trainer) {
            throw SchemaError("checkpoint was trained on " + saved.environment + " with trainer " + saved.trainer
                              + " and a different feature schema or transform set");
        }
        trainer_->load(j.at("trainer"));
        rng_from_string(env_rng_, j.at("env_rng").get<std::string>());
        seed_ = j.at("seed").get<std::uint64_t>();
        episodes_.clear();
        for (const auto& e : j.at("episodes")) {
            EpisodeRecord r;
            r.index = static_cast<int>(episodes_.size());
            r.reward = e.at(0).get<double>();
            r.steps = e.at(1).get<int>();
            r.updates = e.at(2).get<int>();
            r.critic_loss = e.at(3).get<double>();
            r.actor_loss = e.at(4).get<double>();
            r.entropy = e.at(5).get<double>();
            r.alpha = e.at(6).get<double>();
            r.wall_seconds = e.at(7).get<double>();
            episodes_.push_back(r);
        }
        wall_offset_ = episodes_.empty() ? 0.0 : episodes_.back().wall_seconds;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed checkpoint: ") + e.what());
    }
}

std::unique_ptr<Run> run_from_checkpoint(const json& checkpoint)
{
    try {
        auto run = std::make_unique<Run>(config_from_json(checkpoint.at("config")),
                                         checkpoint.at("seed").get<std::uint64_t>());
        run->restore(checkpoint);
        return run;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed checkpoint: ") + e.what());
    }
}

std::unique_ptr<Run> load_run(const std::string& checkpoint_path)
{
    fs::path p(checkpoint_path);
    if (fs::is_directory(p)) {
        p /= "checkpoint.json";
    }
    return run_from_checkpoint(read_json_file(p.string()));
}

void write_text_file(const std::string& path, const std::string& text)
{
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) {
        throw ConfigError("cannot write '" + path + "'");
    }
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------- rollouts

Rollouts rollout(Environment& env, const ActionFn& act, int episodes, std::uint64_t seed, int max_states)
{
    std::mt19937_64 rng(seed);
    Rollouts out;
    std::vector<Eigen::VectorXd> states;
    for (int e = 0; e < episodes; ++e) {
        Eigen::VectorXd s = env.reset(rng());
        double total = 0.0;
        int steps = 0;
        for (;;) {
            if (static_cast<int>(states.size()) < max_states) {
                states.push_back(s);
            }
            StepResult r = env.step(act(s));
            total += r.reward;
            ++steps;
            s = std::move(r.state);
            if (r.done || r.truncated) {
                break;
            }
        }
        out.rewards.push_back(total);
        out.steps.push_back(steps);
    }
    const Eigen::Index width = env.info().schema.state_size();
    out.states.resize(static_cast<Eigen::Index>(states.size()), width);
    for (std::size_t i = 0; i < states.size(); ++i) {
        out.states.row(static_cast<Eigen::Index>(i)) = states[i].transpose();
    }
    return out;
}

ActionFn policy_actor(const DnlPolicy& policy, SampleMode mode, std::uint64_t seed)
{
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [&policy, mode, rng](const Eigen::VectorXd& s) {
        const auto p = policy.evaluate(s.transpose());
        return sample_action(p.probs.row(0), mode, *rng);
    };
}

ActionFn uniform_actor(int actions, std::uint64_t seed)
{
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [actions, rng](const Eigen::VectorXd&) {
        std::uniform_int_distribution<int> pick(0, actions - 1);
        return pick(*rng);
    };
}

Eigen::MatrixXd visitation_states(Environment& env, const DnlPolicy& policy, int count, std::uint64_t seed)
{
    const auto act = policy_actor(policy, SampleMode::Stochastic, seed);
    std::mt19937_64 episode_seeds(seed + 1);
    Eigen::MatrixXd out(count, env.info().schema.state_size());
    int filled = 0;
    while (filled < count) {
        const auto r = rollout(env, act, 1, episode_seeds(), count - filled);
        out.middleRows(filled, r.states.rows()) = r.states;
        filled += static_cast<int>(r.states.rows());
    }
    return out;
}

// ---------------------------------------------------------------- artifacts

std::string policy_report(const Run& run)
{
    const auto& cfg = run.config();
    const auto stats = summarize_tail(run.rewards(), cfg.report_window);
    const std::string title = "Policy rules for " + cfg.agent + " (" + cfg.trainer + ", " + cfg.environment
        + ", seed " + std::to_string(run.seed()) + ", " + std::to_string(run.episodes().size()) + " episodes)";
    const DnlPolicy* policy = run.trainer().policy();
    if (!policy) {
        std::ostringstream os;
        os << title << "\n";
        os << "mean reward: " << num(stats.mean) << " ± " << num(stats.stddev) << "\n\n";
        os << "no logic policy: " << cfg.trainer << " learns a Q-network\n";
        return os.str();
    }
    return format_policy(extract_policy(*policy, cfg.extraction), policy->actions(), stats, title);
}

RunRecord finish_run(Run& run, const std::string& dir)
{
    const auto& cfg = run.config();
    fs::create_directories(dir);
    ExperimentConfig resolved = cfg;
    resolved.seed = run.seed();
    resolved.trials = 1;
    resolved.output_dir = dir;
    write_text_file((fs::path(dir) / "config.json").string(), config_to_json(resolved).dump(2) + "\n");
    write_text_file((fs::path(dir) / "metrics.csv").string(), metrics_csv(run.episodes()));
    std::string timing = "episode,wall_seconds\n";
    for (const auto& e : run.episodes()) {
        timing += std::to_string(e.index) + "," + num(e.wall_seconds) + "\n";
    }
    write_text_file((fs::path(dir) / "timing.csv").string(), timing);
    write_text_file((fs::path(dir) / "checkpoint.json").string(), run.checkpoint().dump() + "\n");

    RunRecord rec;
    rec.dir = dir;
    rec.seed = run.seed();
    rec.episodes = run.episodes();
    rec.tail = summarize_tail(run.rewards(), cfg.report_window);
    rec.wall_seconds = run.episodes().empty() ? 0.0 : run.episodes().back().wall_seconds;
    if (const DnlPolicy* policy = run.trainer().policy()) {
        rec.rules = extract_policy(*policy, cfg.extraction);
        if (cfg.fidelity_states > 0) {
            auto env = make_environment(cfg);
            const auto states = visitation_states(*env, *policy, cfg.fidelity_states, run.seed() ^ 0xf1de11f1ULL);
            rec.fidelity = crisp_agreement(rec.rules, *policy, states);
        }
    }
    write_text_file((fs::path(dir) / "rules.txt").string(), policy_report(run));
    write_text_file((fs::path(dir) / "rules.jsonl").string(), rules_to_jsonl(rec.rules));
    write_text_file((fs::path(dir) / "curve.csv").string(), curve_csv(run.rewards()));

    double best = 0.0;
    for (std::size_t i = 0; i < rec.episodes.size(); ++i) {
        best = i == 0 ? rec.episodes[i].reward : std::max(best, rec.episodes[i].reward);
    }
    json summary{{"seed", rec.seed},
                 {"episodes", rec.episodes.size()},
                 {"tail_window", cfg.report_window},
                 {"tail_mean", rec.tail.mean},
                 {"tail_std", rec.tail.stddev},
                 {"best_episode_reward", best},
                 {"rules", rec.rules.size()},
                 {"wall_seconds", rec.wall_seconds}};
    summary["crisp_fidelity"] = rec.fidelity >= 0.0 ? json(rec.fidelity) : json(nullptr);
    write_text_file((fs::path(dir) / "summary.json").string(), summary.dump(2) + "\n");
    return rec;
}

namespace {

void train_with_checkpoints(Run& run, int total, const std::string& dir,
                            const std::function<void(const EpisodeRecord&)>& on_episode)
{
    const int every = run.config().checkpoint_every;
    while (static_cast<int>(run.episodes().size()) < total) {
        const auto rec = run.run_episode();
        if (on_episode) {
            on_episode(rec);
        }
        const int done = rec.index + 1;
        if (every > 0 && done % every == 0 && done < total) {
            write_text_file((fs::path(dir) / "checkpoint.json").string(), run.checkpoint().dump() + "\n");
            write_text_file((fs::path(dir) / "metrics.csv").string(), metrics_csv(run.episodes()));
        }
    }
}

} // namespace

RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                         const std::function<void(const EpisodeRecord&)>& on_episode)
{
    cfg.validate();
    Run run(cfg, seed);
    train_with_checkpoints(run, cfg.episodes, dir, on_episode);
    return finish_run(run, dir);
}

RunRecord resume_experiment(const std::string& dir, int total_episodes,
                            const std::function<void(const EpisodeRecord&)>& on_episode)
{
    auto run = load_run((fs::path(dir) / "checkpoint.json").string());
    train_with_checkpoints(*run, total_episodes, dir, on_episode);
    return finish_run(*run, dir);
}

std::vector<RunRecord> run_trials(const ExperimentConfig& cfg,
                                  const std::function<void(int, const EpisodeRecord&)>& on_episode)
{
    cfg.validate();
    std::vector<RunRecord> out;
    std::vector<std::vector<double>> curves;
    json trials = json::array();
    for (int t = 0; t < cfg.trials; ++t) {
        const std::string dir = (fs::path(cfg.output_dir) / ("trial_" + std::to_string(t))).string();
        auto rec = run_experiment(cfg, cfg.seed + static_cast<std::uint64_t>(t), dir,
                                  [&](const EpisodeRecord& e) {
                                      if (on_episode) {
                                          on_episode(t, e);
                                      }
                                  });
        std::vector<double> rewards;
        for (const auto& e : rec.episodes) {
            rewards.push_back(e.reward);
        }
        curves.push_back(std::move(rewards));
        trials.push_back({{"trial", t},
                          {"seed", rec.seed},
                          {"dir", rec.dir},
                          {"tail_mean", rec.tail.mean},
                          {"tail_std", rec.tail.stddev},
                          {"crisp_fidelity", rec.fidelity >= 0.0 ? json(rec.fidelity) : json(nullptr)},
                          {"wall_seconds", rec.wall_seconds}});
        out.push_back(std::move(rec));
    }
    write_text_file((fs::path(cfg.output_dir) / "config.json").string(), config_to_json(cfg).dump(2) + "\n");
    write_text_file((fs::path(cfg.output_dir) / "overlay.csv").string(), overlay_csv(overlay(curves)));
    write_text_file((fs::path(cfg.output_dir) / "trials.json").string(), json{{"trials", trials}}.dump(2) + "\n");
    return out;
}

} // namespace dnlrl
