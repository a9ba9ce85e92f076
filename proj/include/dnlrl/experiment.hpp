#pragma once

// Experiment harness: configuration files, the training loop, checkpoints,
// evaluation, and the per-run artifact directory.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dnlrl/environments.hpp"
#include "dnlrl/rules.hpp"
#include "dnlrl/trainers.hpp"

namespace dnlrl {

struct ExperimentConfig {
    std::string name = "experiment";
    std::string environment = "cartpole";
    std::string agent = "dNLRLc"; // or dNLRLnlc
    std::string trainer = "SAC";  // SAC, REINFORCE, DQN, A2C
    std::map<std::string, std::string> transforms; // feature -> function
    FeatureSchema schema; // environment defaults with overrides applied
    PolicyConfig policy;
    SacConfig sac;
    ReinforceConfig reinforce;
    DqnConfig dqn;
    A2cConfig a2c;
    LanderParams lander;
    int toy_max_steps = 20;
    ExtractionThresholds extraction;
    std::uint64_t seed = 0;
    int trials = 5;
    int episodes = 600;
    int checkpoint_every = 100; // 0 writes only the final checkpoint
    int report_window = 100;
    int fidelity_states = 10000;
    std::string output_dir = "runs/experiment";

    TransformKB kb() const { return TransformKB{transforms}; }
    /// Throws ValidationError listing every violation.
    void validate() const;
};

/// Defaults for an environment, including its feature schema.
ExperimentConfig default_config(const std::string& environment = "cartpole");

/// Reads a config object on top of the defaults; unknown keys and bad
/// values are collected and reported together.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Fully resolved form; feeding it back to config_from_json is lossless.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Reads a config file, following "inherits" (paths relative to the file).
nlohmann::json read_config_json(const std::string& path);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg);
std::unique_ptr<Trainer> make_trainer(const ExperimentConfig& cfg, std::uint64_t seed);

struct EpisodeRecord {
    int index = 0;
    double reward = 0.0;
    int steps = 0;
    int updates = 0;
    double critic_loss = 0.0; // means over the episode's updates
    double actor_loss = 0.0;
    double entropy = 0.0;
    double alpha = 0.0;
    double wall_seconds = 0.0; // cumulative since the run started
};

/// Column names of metrics.csv, in order.
const std::vector<std::string>& metrics_columns();
std::string metrics_csv(const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> parse_metrics_csv(const std::string& text);

/// One seeded training run. Checkpoints are taken between episodes.
class Run {
public:
    Run(ExperimentConfig cfg, std::uint64_t seed);

    EpisodeRecord run_episode();
    void train(int episodes, const std::function<void(const EpisodeRecord&)>& on_episode = {});

    nlohmann::json checkpoint() const;
    /// Throws SchemaError when the checkpoint does not fit this run.
    void restore(const nlohmann::json& checkpoint);

    const ExperimentConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    Trainer& trainer() { return *trainer_; }
    const Trainer& trainer() const { return *trainer_; }
    Environment& environment() { return *env_; }
    const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
    std::vector<double> rewards() const;

private:
    ExperimentConfig cfg_;
    std::uint64_t seed_;
    std::unique_ptr<Environment> env_;
    std::unique_ptr<Trainer> trainer_;
    std::mt19937_64 env_rng_;
    std::vector<EpisodeRecord> episodes_;
    double wall_offset_ = 0.0;
};

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Rebuilds the run a checkpoint was taken from.
std::unique_ptr<Run> run_from_checkpoint(const nlohmann::json& checkpoint);
std::unique_ptr<Run> load_run(const std::string& checkpoint_path);

using ActionFn = std::function<int(const Eigen::VectorXd&)>;

struct Rollouts {
    std::vector<double> rewards;
    std::vector<int> steps;
    Eigen::MatrixXd states; // visited states, one per row (when collected)
};

/// Plays `episodes` episodes with `act`; keeps up to `max_states` visited
/// states.
Rollouts rollout(Environment& env, const ActionFn& act, int episodes, std::uint64_t seed, int max_states = 0);

/// Acting function sampling (or argmaxing) the dNL policy with its own RNG.
ActionFn policy_actor(const DnlPolicy& policy, SampleMode mode, std::uint64_t seed);
ActionFn uniform_actor(int actions, std::uint64_t seed);

/// Keeps playing the policy until `count` states are collected.
Eigen::MatrixXd visitation_states(Environment& env, const DnlPolicy& policy, int count, std::uint64_t seed);

struct RunRecord {
    std::string dir;
    std::uint64_t seed = 0;
    std::vector<EpisodeRecord> episodes;
    std::vector<ExtractedRule> rules;
    RewardSummary tail;
    double fidelity = -1.0; // crisp vs fuzzy agreement; -1 without a dNL actor
    double wall_seconds = 0.0;
};

/// Writes config.json, metrics.csv, timing.csv, checkpoint.json, rules.txt,
/// rules.jsonl, curve.csv and summary.json under `dir`.
RunRecord finish_run(Run& run, const std::string& dir);

/// Trains one seed from scratch into `dir`.
RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                         const std::function<void(const EpisodeRecord&)>& on_episode = {});
/// Continues a run directory from its checkpoint up to `total_episodes`.
RunRecord resume_experiment(const std::string& dir, int total_episodes,
                            const std::function<void(const EpisodeRecord&)>& on_episode = {});
/// cfg.trials seeds (cfg.seed, cfg.seed + 1, ...) under cfg.output_dir/trial_<i>,
/// plus an overlay of their reward curves.
std::vector<RunRecord> run_trials(const ExperimentConfig& cfg,
                                  const std::function<void(int, const EpisodeRecord&)>& on_episode = {});

std::string policy_report(const Run& run);

} // namespace dnlrl
