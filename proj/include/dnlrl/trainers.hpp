#pragma once

// Discrete Soft Actor-Critic with a dNL actor, plus REINFORCE, DQN and A2C
// baselines behind one trainer interface.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dnlrl/mlp.hpp"
#include "dnlrl/optim.hpp"
#include "dnlrl/policy.hpp"
#include "dnlrl/replay.hpp"

namespace dnlrl {

struct SacConfig {
    double gamma = 0.99;
    double alpha = 0.2;
    bool auto_alpha = false;
    double target_entropy_scale = 0.98; // target entropy = scale * log |A|
    double tau = 0.005;
    int batch_size = 64;
    double actor_lr = 1e-3;
    double critic_lr = 3e-4;
    double alpha_lr = 3e-4;
    std::size_t replay_capacity = 100000;
    int warmup_steps = 1000;
    int update_every = 1;
    int target_update_every = 1;
    std::vector<int> critic_hidden{64, 64};
    double max_grad_norm = 0.0;
};

struct ReinforceConfig {
    double gamma = 0.99;
    double lr = 1e-3;
    std::string optimizer = "sgd"; // "sgd": theta += lr G_t grad log pi; "adam"
};

struct DqnConfig {
    double gamma = 0.99;
    double lr = 1e-3;
    int batch_size = 64;
    std::size_t replay_capacity = 100000;
    int warmup_steps = 1000;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_steps = 10000;
    int target_update_every = 500;
    std::vector<int> hidden{64, 64};
};

struct A2cConfig {
    double gamma = 0.99;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    int rollout = 5;
    double entropy_coef = 0.0;
    std::vector<int> critic_hidden{64, 64};
};

struct UpdateMetrics {
    bool updated = false;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double entropy = 0.0;
    double alpha = 0.0;
};

/// Common surface for every algorithm so the experiment harness can swap
/// them by configuration. observe() is called once per environment step,
/// update() right after it.
class Trainer {
public:
    virtual ~Trainer() = default;
    virtual std::string name() const = 0;
    virtual int act(const Eigen::VectorXd& state, SampleMode mode) = 0;
    virtual void observe(const Transition& t) = 0;
    virtual UpdateMetrics update() = 0;
    /// The dNL actor, when the algorithm has one.
    virtual const DnlPolicy* policy() const { return nullptr; }
    virtual DnlPolicy* mutable_policy() { return nullptr; }
    virtual nlohmann::json save() const = 0;
    virtual void load(const nlohmann::json& j) = 0;
};

// ---------------------------------------------------------------- losses

/// Mean over the batch of sum_a p (alpha log p - q). Writes d loss / d probs
/// into `d_probs` when given. Throws NumericError on a non-finite loss.
double actor_loss(const Eigen::Ref<const Eigen::MatrixXd>& probs, const Eigen::Ref<const Eigen::MatrixXd>& q,
                  double alpha, Eigen::MatrixXd* d_probs = nullptr);

/// y = r + gamma (1 - done) sum_a p'(a) (q'(a) - alpha log p'(a))
Eigen::VectorXd critic_targets(const Eigen::Ref<const Eigen::VectorXd>& rewards,
                               const Eigen::Ref<const Eigen::VectorXd>& done,
                               const Eigen::Ref<const Eigen::MatrixXd>& next_probs,
                               const Eigen::Ref<const Eigen::MatrixXd>& next_q, double alpha, double gamma);

/// Mean of -sum_a p log p over rows.
double mean_entropy(const Eigen::Ref<const Eigen::MatrixXd>& probs);

/// G_t = sum_k gamma^k r_{t+k}
Eigen::VectorXd discounted_returns(const std::vector<double>& rewards, double gamma);

/// Gradient of -sum_t log pi(a_t | s_t) G_t with respect to the actor.
PolicyGradient reinforce_gradient(const DnlPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& states,
                                  const std::vector<int>& actions, const Eigen::Ref<const Eigen::VectorXd>& returns);

/// y = r + gamma (1 - done) max_a q'(a)
Eigen::VectorXd dqn_targets(const Eigen::Ref<const Eigen::VectorXd>& rewards,
                            const Eigen::Ref<const Eigen::VectorXd>& done,
                            const Eigen::Ref<const Eigen::MatrixXd>& next_q, double gamma);

/// Bootstrapped n-step returns for a rollout; `bootstrap` is V(s_n) or 0
/// when the rollout ended in a terminal state.
Eigen::VectorXd n_step_returns(const std::vector<double>& rewards, double bootstrap, double gamma);

/// Builds a critic-shaped MLP whose inputs are standardized by the schema's
/// feature ranges.
Mlp make_critic(const FeatureSchema& schema, int outputs, const std::vector<int>& hidden, std::uint64_t seed);

// ---------------------------------------------------------------- trainers

class SacTrainer final : public Trainer {
public:
    SacTrainer(DnlPolicy policy, SacConfig cfg, std::uint64_t seed);

    std::string name() const override { return "SAC"; }
    int act(const Eigen::VectorXd& state, SampleMode mode) override;
    void observe(const Transition& t) override;
    UpdateMetrics update() override;
    const DnlPolicy* policy() const override { return &policy_; }
    DnlPolicy* mutable_policy() override { return &policy_; }
    nlohmann::json save() const override;
    void load(const nlohmann::json& j) override;

    /// One gradient step on an explicit batch.
    UpdateMetrics update_on(const TransitionBatch& batch);

    double alpha() const;
    const SacConfig& config() const { return cfg_; }
    Mlp& critic(int i) { return critics_[i]; }
    Mlp& target_critic(int i) { return targets_[i]; }
    const ReplayBuffer& replay() const { return replay_; }
    /// Element-wise min over the two critics (or targets).
    Eigen::MatrixXd min_q(const Eigen::Ref<const Eigen::MatrixXd>& states, bool target) const;
    void update_targets(double tau);

private:
    DnlPolicy policy_;
    SacConfig cfg_;
    Mlp critics_[2];
    Mlp targets_[2];
    Adam actor_opt_;
    Adam critic_opt_[2];
    Eigen::VectorXd log_alpha_;
    Adam alpha_opt_;
    ReplayBuffer replay_;
    std::mt19937_64 rng_;
    long steps_ = 0;
    long updates_ = 0;
};

class ReinforceTrainer final : public Trainer {
public:
    ReinforceTrainer(DnlPolicy policy, ReinforceConfig cfg, std::uint64_t seed);

    std::string name() const override { return "REINFORCE"; }
    int act(const Eigen::VectorXd& state, SampleMode mode) override;
    void observe(const Transition& t) override;
    UpdateMetrics update() override;
    const DnlPolicy* policy() const override { return &policy_; }
    DnlPolicy* mutable_policy() override { return &policy_; }
    nlohmann::json save() const override;
    void load(const nlohmann::json& j) override;

private:
    DnlPolicy policy_;
    ReinforceConfig cfg_;
    Adam opt_;
    std::mt19937_64 rng_;
    std::vector<Eigen::VectorXd> states_;
    std::vector<int> actions_;
    std::vector<double> rewards_;
    bool episode_complete_ = false;
};

class DqnTrainer final : public Trainer {
public:
    DqnTrainer(const FeatureSchema& schema, int actions, DqnConfig cfg, std::uint64_t seed);

    std::string name() const override { return "DQN"; }
    int act(const Eigen::VectorXd& state, SampleMode mode) override;
    void observe(const Transition& t) override;
    UpdateMetrics update() override;
    nlohmann::json save() const override;
    void load(const nlohmann::json& j) override;

    UpdateMetrics update_on(const TransitionBatch& batch);
    double epsilon() const;
    Mlp& q_network() { return q_; }
    Mlp& target_network() { return target_; }

private:
    DqnConfig cfg_;
    int actions_;
    Mlp q_;
    Mlp target_;
    Adam opt_;
    ReplayBuffer replay_;
    std::mt19937_64 rng_;
    long steps_ = 0;
    long updates_ = 0;
};

class A2cTrainer final : public Trainer {
public:
    A2cTrainer(DnlPolicy policy, A2cConfig cfg, std::uint64_t seed);

    std::string name() const override { return "A2C"; }
    int act(const Eigen::VectorXd& state, SampleMode mode) override;
    void observe(const Transition& t) override;
    UpdateMetrics update() override;
    const DnlPolicy* policy() const override { return &policy_; }
    DnlPolicy* mutable_policy() override { return &policy_; }
    nlohmann::json save() const override;
    void load(const nlohmann::json& j) override;

    /// Actor/critic step on an explicit rollout with precomputed returns.
    UpdateMetrics update_on(const Eigen::Ref<const Eigen::MatrixXd>& states, const std::vector<int>& actions,
                            const Eigen::Ref<const Eigen::VectorXd>& returns);
    Mlp& value_network() { return value_; }

private:
    DnlPolicy policy_;
    A2cConfig cfg_;
    Mlp value_;
    Adam actor_opt_;
    Adam critic_opt_;
    std::mt19937_64 rng_;
    std::vector<Transition> rollout_;
};

// ------------------------------------------------------------ serialization

nlohmann::json policy_to_json(const DnlPolicy& policy);
/// Overwrites trainable state; throws SchemaError if shapes or atom labels differ.
void policy_from_json(DnlPolicy& policy, const nlohmann::json& j);
nlohmann::json mlp_to_json(const Mlp& net);
void mlp_from_json(Mlp& net, const nlohmann::json& j);
nlohmann::json adam_to_json(const Adam& opt);
void adam_from_json(Adam& opt, const nlohmann::json& j);

} // namespace dnlrl
