#include "dnlrl/trainers.hpp"

#include <cmath>
#include <sstream>

namespace dnlrl {

using nlohmann::json;

// ---------------------------------------------------------------- losses

namespace {

// p log p with the 0 log 0 = 0 convention
Eigen::ArrayXXd xlogx(const Eigen::Ref<const Eigen::MatrixXd>& p)
{
    return p.array().unaryExpr([](double v) { return v > 0.0 ? v * std::log(v) : 0.0; });
}

} // namespace

double actor_loss(const Eigen::Ref<const Eigen::MatrixXd>& probs, const Eigen::Ref<const Eigen::MatrixXd>& q,
                  double alpha, Eigen::MatrixXd* d_probs)
{
    if (probs.rows() != q.rows() || probs.cols() != q.cols()) {
        throw DimensionError("actor_loss: probabilities and action values differ in shape");
    }
    const auto b = static_cast<double>(probs.rows());
    const double loss = (alpha * xlogx(probs) - probs.array() * q.array()).sum() / b;
    if (!std::isfinite(loss)) {
        throw NumericError("actor_loss: non-finite loss");
    }
    if (d_probs != nullptr) {
        Eigen::ArrayXXd d_entropy = Eigen::ArrayXXd::Zero(probs.rows(), probs.cols());
        if (alpha != 0.0) {
            d_entropy = alpha * (probs.array().log() + 1.0);
        }
        *d_probs = ((d_entropy - q.array()) / b).matrix();
    }
    return loss;
}

Eigen::VectorXd critic_targets(const Eigen::Ref<const Eigen::VectorXd>& rewards,
                               const Eigen::Ref<const Eigen::VectorXd>& done,
                               const Eigen::Ref<const Eigen::MatrixXd>& next_probs,
                               const Eigen::Ref<const Eigen::MatrixXd>& next_q, double alpha, double gamma)
{
    const Eigen::VectorXd soft_value
        = (next_probs.array() * next_q.array() - alpha * xlogx(next_probs)).rowwise().sum();
    return (rewards.array() + gamma * (1.0 - done.array()) * soft_value.array()).matrix();
}

double mean_entropy(const Eigen::Ref<const Eigen::MatrixXd>& probs)
{
    return -xlogx(probs).sum() / static_cast<double>(probs.rows());
}

Eigen::VectorXd discounted_returns(const std::vector<double>& rewards, double gamma)
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(rewards.size()));
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        g(static_cast<Eigen::Index>(t)) = acc;
    }
    return g;
}

Eigen::VectorXd n_step_returns(const std::vector<double>& rewards, double bootstrap, double gamma)
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(rewards.size()));
    double acc = bootstrap;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        g(static_cast<Eigen::Index>(t)) = acc;
    }
    return g;
}

PolicyGradient reinforce_gradient(const DnlPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& states,
                                  const std::vector<int>& actions, const Eigen::Ref<const Eigen::VectorXd>& returns)
{
    if (static_cast<Eigen::Index>(actions.size()) != states.rows() || returns.size() != states.rows()) {
        throw DimensionError("reinforce_gradient: trajectory lengths differ");
    }
    const auto f = policy.forward(states);
    Eigen::MatrixXd d_probs = Eigen::MatrixXd::Zero(states.rows(), policy.action_count());
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        const int a = actions[static_cast<std::size_t>(t)];
        d_probs(t, a) = -returns(t) / f.policy.probs(t, a);
    }
    return policy.backward_probs(f, d_probs);
}

Eigen::VectorXd dqn_targets(const Eigen::Ref<const Eigen::VectorXd>& rewards,
                            const Eigen::Ref<const Eigen::VectorXd>& done,
                            const Eigen::Ref<const Eigen::MatrixXd>& next_q, double gamma)
{
    return (rewards.array() + gamma * (1.0 - done.array()) * next_q.rowwise().maxCoeff().array()).matrix();
}

Mlp make_critic(const FeatureSchema& schema, int outputs, const std::vector<int>& hidden, std::uint64_t seed)
{
    const auto n = static_cast<int>(schema.state_size());
    Mlp net(n, hidden, outputs, seed);
    Eigen::RowVectorXd offset(n);
    Eigen::RowVectorXd scale(n);
    Eigen::Index i = 0;
    for (const auto& f : schema.continuous) {
        offset(i) = 0.5 * (f.low + f.high);
        scale(i) = 2.0 / (f.high - f.low);
        ++i;
    }
    for (std::size_t d = 0; d < schema.discrete.size(); ++d) {
        offset(i) = 0.5;
        scale(i) = 2.0;
        ++i;
    }
    net.set_input_normalization(offset, scale);
    return net;
}

namespace {

Eigen::MatrixXd rows_of(const std::vector<Eigen::VectorXd>& v)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), v.empty() ? 0 : v.front().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    }
    return m;
}

std::string rng_state(const std::mt19937_64& rng)
{
    std::ostringstream os;
    os << rng;
    return os.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& s)
{
    std::istringstream is(s);
    is >> rng;
}

/// MSE step on the taken-action column of a multi-output network.
double regress_taken_action(Mlp& net, Adam& opt, const TransitionBatch& batch, const Eigen::VectorXd& targets)
{
    const auto f = net.forward(batch.states);
    const Eigen::MatrixXd& out = f.activations.back();
    const auto b = static_cast<double>(batch.size());
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double diff = out(r, batch.actions(r)) - targets(r);
        loss += 0.5 * diff * diff;
        d_out(r, batch.actions(r)) = diff / b;
    }
    const auto g = net.backward(f, d_out);
    opt.step(net.parameters(), g.views());
    return loss / b;
}

} // namespace

// ---------------------------------------------------------------- SAC

SacTrainer::SacTrainer(DnlPolicy policy, SacConfig cfg, std::uint64_t seed)
    : policy_(std::move(policy)),
      cfg_(std::move(cfg)),
      actor_opt_(AdamConfig{cfg_.actor_lr, 0.9, 0.999, 1e-8, cfg_.max_grad_norm}),
      log_alpha_(Eigen::VectorXd::Constant(1, std::log(cfg_.alpha))),
      alpha_opt_(AdamConfig{cfg_.alpha_lr}),
      replay_(cfg_.replay_capacity),
      rng_(seed)
{
    if (!(cfg_.gamma >= 0.0 && cfg_.gamma <= 1.0) || !(cfg_.alpha > 0.0) || !(cfg_.tau > 0.0 && cfg_.tau <= 1.0)
        || cfg_.batch_size < 1) {
        throw ConfigError("sac: gamma in [0,1], alpha > 0, tau in (0,1], batch_size >= 1 required");
    }
    std::mt19937_64 seeder(seed ^ 0x5ac5ac5acULL);
    for (int i = 0; i < 2; ++i) {
        critics_[i] = make_critic(policy_.schema(), policy_.action_count(), cfg_.critic_hidden, seeder());
        targets_[i] = critics_[i];
        critic_opt_[i] = Adam(AdamConfig{cfg_.critic_lr, 0.9, 0.999, 1e-8, cfg_.max_grad_norm});
    }
}

double SacTrainer::alpha() const { return std::exp(log_alpha_(0)); }

int SacTrainer::act(const Eigen::VectorXd& state, SampleMode mode)
{
    if (mode == SampleMode::Stochastic && steps_ < cfg_.warmup_steps) {
        std::uniform_int_distribution<int> pick(0, policy_.action_count() - 1);
        return pick(rng_);
    }
    const auto p = policy_.evaluate(state.transpose());
    return sample_action(p.probs.row(0), mode, rng_);
}

void SacTrainer::observe(const Transition& t)
{
    replay_.add(t);
    ++steps_;
}

Eigen::MatrixXd SacTrainer::min_q(const Eigen::Ref<const Eigen::MatrixXd>& states, bool target) const
{
    const Mlp* nets = target ? targets_ : critics_;
    return nets[0].predict(states).cwiseMin(nets[1].predict(states));
}

void SacTrainer::update_targets(double tau)
{
    for (int i = 0; i < 2; ++i) {
        soft_update(targets_[i].parameters(), critics_[i].parameters(), tau);
    }
}

UpdateMetrics SacTrainer::update()
{
    if (steps_ < cfg_.warmup_steps || replay_.size() < static_cast<std::size_t>(cfg_.batch_size)
        || steps_ % cfg_.update_every != 0) {
        return {};
    }
    return update_on(replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_));
}

UpdateMetrics SacTrainer::update_on(const TransitionBatch& batch)
{
    UpdateMetrics m;
    m.updated = true;
    const double a = alpha();
    m.alpha = a;

    const auto next = policy_.evaluate(batch.next_states);
    const Eigen::VectorXd y
        = critic_targets(batch.rewards, batch.done, next.probs, min_q(batch.next_states, true), a, cfg_.gamma);
    for (int i = 0; i < 2; ++i) {
        m.critic_loss += 0.5 * regress_taken_action(critics_[i], critic_opt_[i], batch, y);
    }

    const auto f = policy_.forward(batch.states);
    Eigen::MatrixXd d_probs;
    m.actor_loss = actor_loss(f.policy.probs, min_q(batch.states, false), a, &d_probs);
    const auto g = policy_.backward_probs(f, d_probs);
    actor_opt_.step(policy_.parameters(), g.views());
    m.entropy = mean_entropy(f.policy.probs);

    if (cfg_.auto_alpha) {
        const double target = cfg_.target_entropy_scale * std::log(static_cast<double>(policy_.action_count()));
        const Eigen::VectorXd grad = Eigen::VectorXd::Constant(1, m.entropy - target);
        alpha_opt_.step({flat(log_alpha_)}, {flat(grad)});
    }
    if (++updates_ % cfg_.target_update_every == 0) {
        update_targets(cfg_.tau);
    }
    return m;
}

json SacTrainer::save() const
{
    json j;
    j["algorithm"] = name();
    j["policy"] = policy_to_json(policy_);
    j["critics"] = {mlp_to_json(critics_[0]), mlp_to_json(critics_[1])};
    j["targets"] = {mlp_to_json(targets_[0]), mlp_to_json(targets_[1])};
    j["actor_opt"] = adam_to_json(actor_opt_);
    j["critic_opt"] = {adam_to_json(critic_opt_[0]), adam_to_json(critic_opt_[1])};
    j["alpha_opt"] = adam_to_json(alpha_opt_);
    j["log_alpha"] = log_alpha_(0);
    j["steps"] = steps_;
    j["updates"] = updates_;
    j["rng"] = rng_state(rng_);
    return j;
}

void SacTrainer::load(const json& j)
{
    if (j.at("algorithm").get<std::string>() != name()) {
        throw SchemaError("checkpoint holds a " + j.at("algorithm").get<std::string>() + " trainer, not SAC");
    }
    policy_from_json(policy_, j.at("policy"));
    for (int i = 0; i < 2; ++i) {
        mlp_from_json(critics_[i], j.at("critics").at(i));
        mlp_from_json(targets_[i], j.at("targets").at(i));
        adam_from_json(critic_opt_[i], j.at("critic_opt").at(i));
    }
    adam_from_json(actor_opt_, j.at("actor_opt"));
    adam_from_json(alpha_opt_, j.at("alpha_opt"));
    log_alpha_(0) = j.at("log_alpha").get<double>();
    steps_ = j.at("steps").get<long>();
    updates_ = j.at("updates").get<long>();
    set_rng_state(rng_, j.at("rng").get<std::string>());
}

// ---------------------------------------------------------------- REINFORCE

ReinforceTrainer::ReinforceTrainer(DnlPolicy policy, ReinforceConfig cfg, std::uint64_t seed)
    : policy_(std::move(policy)), cfg_(cfg), opt_(AdamConfig{cfg.lr}), rng_(seed)
{
    if (cfg_.optimizer != "sgd" && cfg_.optimizer != "adam") {
        throw ConfigError("reinforce.optimizer: expected \"sgd\" or \"adam\", got \"" + cfg_.optimizer + "\"");
    }
}

int ReinforceTrainer::act(const Eigen::VectorXd& state, SampleMode mode)
{
    const auto p = policy_.evaluate(state.transpose());
    return sample_action(p.probs.row(0), mode, rng_);
}

void ReinforceTrainer::observe(const Transition& t)
{
    states_.push_back(t.state);
    actions_.push_back(t.action);
    rewards_.push_back(t.reward);
    episode_complete_ = t.done || t.truncated;
}

UpdateMetrics ReinforceTrainer::update()
{
    if (!episode_complete_ || states_.empty()) {
        return {};
    }
    UpdateMetrics m;
    m.updated = true;
    const Eigen::VectorXd returns = discounted_returns(rewards_, cfg_.gamma);
    const Eigen::MatrixXd states = rows_of(states_);
    const auto probs = policy_.evaluate(states).probs;
    double loss = 0.0;
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        loss -= std::log(probs(t, actions_[static_cast<std::size_t>(t)])) * returns(t);
    }
    m.actor_loss = loss;
    m.entropy = mean_entropy(probs);
    const auto g = reinforce_gradient(policy_, states, actions_, returns);
    if (cfg_.optimizer == "adam") {
        opt_.step(policy_.parameters(), g.views());
    } else {
        auto params = policy_.parameters();
        const auto grads = g.views();
        for (std::size_t k = 0; k < params.size(); ++k) {
            params[k] -= cfg_.lr * grads[k];
        }
    }
    states_.clear();
    actions_.clear();
    rewards_.clear();
    episode_complete_ = false;
    return m;
}

json ReinforceTrainer::save() const
{
    json j;
    j["algorithm"] = name();
    j["policy"] = policy_to_json(policy_);
    j["actor_opt"] = adam_to_json(opt_);
    j["rng"] = rng_state(rng_);
    return j;
}

void ReinforceTrainer::load(const json& j)
{
    if (j.at("algorithm").get<std::string>() != name()) {
        throw SchemaError("checkpoint holds a " + j.at("algorithm").get<std::string>() + " trainer, not REINFORCE");
    }
    policy_from_json(policy_, j.at("policy"));
    adam_from_json(opt_, j.at("actor_opt"));
    set_rng_state(rng_, j.at("rng").get<std::string>());
}

// ---------------------------------------------------------------- DQN

DqnTrainer::DqnTrainer(const FeatureSchema& schema, int actions, DqnConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      actions_(actions),
      q_(make_critic(schema, actions, cfg_.hidden, seed ^ 0xd9dULL)),
      target_(q_),
      opt_(AdamConfig{cfg_.lr}),
      replay_(cfg_.replay_capacity),
      rng_(seed)
{
}

double DqnTrainer::epsilon() const
{
    if (cfg_.epsilon_decay_steps <= 0) {
        return cfg_.epsilon_end;
    }
    const double frac = std::min(1.0, static_cast<double>(steps_) / cfg_.epsilon_decay_steps);
    return cfg_.epsilon_start + frac * (cfg_.epsilon_end - cfg_.epsilon_start);
}

int DqnTrainer::act(const Eigen::VectorXd& state, SampleMode mode)
{
    if (mode == SampleMode::Stochastic) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng_) < epsilon()) {
            std::uniform_int_distribution<int> pick(0, actions_ - 1);
            return pick(rng_);
        }
    }
    return argmax_lowest(q_.predict(state.transpose()).row(0));
}

void DqnTrainer::observe(const Transition& t)
{
    replay_.add(t);
    ++steps_;
}

UpdateMetrics DqnTrainer::update()
{
    if (steps_ < cfg_.warmup_steps || replay_.size() < static_cast<std::size_t>(cfg_.batch_size)) {
        return {};
    }
    return update_on(replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_));
}

UpdateMetrics DqnTrainer::update_on(const TransitionBatch& batch)
{
    UpdateMetrics m;
    m.updated = true;
    const Eigen::VectorXd y = dqn_targets(batch.rewards, batch.done, target_.predict(batch.next_states), cfg_.gamma);
    m.critic_loss = regress_taken_action(q_, opt_, batch, y);
    if (++updates_ % cfg_.target_update_every == 0) {
        soft_update(target_.parameters(), q_.parameters(), 1.0);
    }
    return m;
}

json DqnTrainer::save() const
{
    json j;
    j["algorithm"] = name();
    j["q"] = mlp_to_json(q_);
    j["target"] = mlp_to_json(target_);
    j["opt"] = adam_to_json(opt_);
    j["steps"] = steps_;
    j["updates"] = updates_;
    j["rng"] = rng_state(rng_);
    return j;
}

void DqnTrainer::load(const json& j)
{
    if (j.at("algorithm").get<std::string>() != name()) {
        throw SchemaError("checkpoint holds a " + j.at("algorithm").get<std::string>() + " trainer, not DQN");
    }
    mlp_from_json(q_, j.at("q"));
    mlp_from_json(target_, j.at("target"));
    adam_from_json(opt_, j.at("opt"));
    steps_ = j.at("steps").get<long>();
    updates_ = j.at("updates").get<long>();
    set_rng_state(rng_, j.at("rng").get<std::string>());
}

// ---------------------------------------------------------------- A2C

A2cTrainer::A2cTrainer(DnlPolicy policy, A2cConfig cfg, std::uint64_t seed)
    : policy_(std::move(policy)),
      cfg_(std::move(cfg)),
      value_(make_critic(policy_.schema(), 1, cfg_.critic_hidden, seed ^ 0xa2cULL)),
      actor_opt_(AdamConfig{cfg_.actor_lr}),
      critic_opt_(AdamConfig{cfg_.critic_lr}),
      rng_(seed)
{
    if (cfg_.rollout < 1) {
        throw ConfigError("a2c: rollout must be >= 1");
    }
}

int A2cTrainer::act(const Eigen::VectorXd& state, SampleMode mode)
{
    const auto p = policy_.evaluate(state.transpose());
    return sample_action(p.probs.row(0), mode, rng_);
}

void A2cTrainer::observe(const Transition& t) { rollout_.push_back(t); }

UpdateMetrics A2cTrainer::update()
{
    if (rollout_.empty()) {
        return {};
    }
    const Transition& last = rollout_.back();
    const bool boundary = last.done || last.truncated;
    if (!boundary && static_cast<int>(rollout_.size()) < cfg_.rollout) {
        return {};
    }
    const double bootstrap = last.done ? 0.0 : value_.predict(last.next_state.transpose())(0, 0);
    std::vector<double> rewards;
    std::vector<int> actions;
    std::vector<Eigen::VectorXd> states;
    for (const auto& t : rollout_) {
        rewards.push_back(t.reward);
        actions.push_back(t.action);
        states.push_back(t.state);
    }
    rollout_.clear();
    return update_on(rows_of(states), actions, n_step_returns(rewards, bootstrap, cfg_.gamma));
}

UpdateMetrics A2cTrainer::update_on(const Eigen::Ref<const Eigen::MatrixXd>& states, const std::vector<int>& actions,
                                    const Eigen::Ref<const Eigen::VectorXd>& returns)
{
    UpdateMetrics m;
    m.updated = true;
    const auto n = static_cast<double>(states.rows());

    const auto vf = value_.forward(states);
    const Eigen::VectorXd v = vf.activations.back().col(0);
    const Eigen::VectorXd advantage = returns - v;
    m.critic_loss = 0.5 * advantage.squaredNorm() / n;
    const Eigen::MatrixXd d_v = (-advantage / n).eval();
    critic_opt_.step(value_.parameters(), value_.backward(vf, d_v).views());

    const auto f = policy_.forward(states);
    const auto& p = f.policy.probs;
    Eigen::MatrixXd d_probs = cfg_.entropy_coef * (p.array().log() + 1.0) / n;
    double loss = 0.0;
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        const int a = actions[static_cast<std::size_t>(t)];
        loss -= std::log(p(t, a)) * advantage(t) / n;
        d_probs(t, a) -= advantage(t) / (p(t, a) * n);
    }
    m.entropy = mean_entropy(p);
    m.actor_loss = loss - cfg_.entropy_coef * m.entropy;
    const auto g = policy_.backward_probs(f, d_probs);
    actor_opt_.step(policy_.parameters(), g.views());
    return m;
}

json A2cTrainer::save() const
{
    json j;
    j["algorithm"] = name();
    j["policy"] = policy_to_json(policy_);
    j["value"] = mlp_to_json(value_);
    j["actor_opt"] = adam_to_json(actor_opt_);
    j["critic_opt"] = adam_to_json(critic_opt_);
    j["rng"] = rng_state(rng_);
    return j;
}

void A2cTrainer::load(const json& j)
{
    if (j.at("algorithm").get<std::string>() != name()) {
        throw SchemaError("checkpoint holds a " + j.at("algorithm").get<std::string>() + " trainer, not A2C");
    }
    policy_from_json(policy_, j.at("policy"));
    mlp_from_json(value_, j.at("value"));
    adam_from_json(actor_opt_, j.at("actor_opt"));
    adam_from_json(critic_opt_, j.at("critic_opt"));
    set_rng_state(rng_, j.at("rng").get<std::string>());
}

// ------------------------------------------------------------ serialization

namespace {

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from_json(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m)
{
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd mat_from_json(const json& j)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw SchemaError("matrix payload size does not match its shape");
    }
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

template <typename Target, typename Source>
void assign_same_shape(Target& dst, const Source& src, const std::string& what)
{
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
        throw SchemaError(what + ": shape " + std::to_string(src.rows()) + "x" + std::to_string(src.cols())
                          + " does not match " + std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
    }
    dst = src;
}

} // namespace

json policy_to_json(const DnlPolicy& policy)
{
    json j;
    j["actions"] = policy.actions();
    j["floor"] = policy.floor();
    json bank;
    bank["c"] = policy.bank().c;
    bank["discrete"] = policy.bank().discrete;
    bank["sources"] = json::array();
    for (const auto& s : policy.bank().sources) {
        bank["sources"].push_back({{"name", s.name},
                                   {"feature", s.feature},
                                   {"transform", s.transform},
                                   {"greater_than", vec_to_json(s.greater_than)},
                                   {"less_than", vec_to_json(s.less_than)}});
    }
    j["bank"] = bank;
    for (const auto& n : policy.networks()) {
        j["networks"].push_back({{"c", n.c}, {"conj_raw", mat_to_json(n.conj_raw)}, {"disj_raw", vec_to_json(n.disj_raw)}});
    }
    return j;
}

void policy_from_json(DnlPolicy& policy, const json& j)
{
    if (j.at("actions").get<std::vector<std::string>>() != policy.actions()) {
        throw SchemaError("checkpoint action set does not match the policy");
    }
    auto& bank = policy.bank();
    const auto& sources = j.at("bank").at("sources");
    if (sources.size() != bank.sources.size()
        || j.at("bank").at("discrete").get<std::vector<std::string>>() != bank.discrete) {
        throw SchemaError("checkpoint predicate sources do not match the policy schema");
    }
    bank.c = j.at("bank").at("c").get<double>();
    for (std::size_t s = 0; s < sources.size(); ++s) {
        auto& src = bank.sources[s];
        if (sources[s].at("name").get<std::string>() != src.name) {
            throw SchemaError("checkpoint predicate source '" + sources[s].at("name").get<std::string>()
                              + "' does not match '" + src.name + "'");
        }
        assign_same_shape(src.greater_than, vec_from_json(sources[s].at("greater_than")), src.name + " bounds");
        assign_same_shape(src.less_than, vec_from_json(sources[s].at("less_than")), src.name + " bounds");
    }
    const auto& nets = j.at("networks");
    if (nets.size() != policy.networks().size()) {
        throw SchemaError("checkpoint network count does not match the action set");
    }
    for (std::size_t a = 0; a < nets.size(); ++a) {
        auto& net = policy.networks()[a];
        net.c = nets[a].at("c").get<double>();
        assign_same_shape(net.conj_raw, mat_from_json(nets[a].at("conj_raw")), "conjunction weights");
        assign_same_shape(net.disj_raw, vec_from_json(nets[a].at("disj_raw")), "disjunction weights");
    }
}

json mlp_to_json(const Mlp& net)
{
    json j;
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        j["layers"].push_back({{"w", mat_to_json(net.weights()[l])}, {"b", vec_to_json(net.biases()[l].transpose())}});
    }
    j["offset"] = vec_to_json(net.input_offset().transpose());
    j["scale"] = vec_to_json(net.input_scale().transpose());
    return j;
}

void mlp_from_json(Mlp& net, const json& j)
{
    const auto& layers = j.at("layers");
    if (layers.size() != net.weights().size()) {
        throw SchemaError("checkpoint network depth does not match");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        assign_same_shape(net.weights()[l], mat_from_json(layers[l].at("w")), "network weights");
        const Eigen::RowVectorXd b = vec_from_json(layers[l].at("b")).transpose();
        assign_same_shape(net.biases()[l], b, "network biases");
    }
    net.set_input_normalization(vec_from_json(j.at("offset")).transpose(), vec_from_json(j.at("scale")).transpose());
}

json adam_to_json(const Adam& opt)
{
    json j;
    j["t"] = opt.steps();
    j["m"] = json::array();
    j["v"] = json::array();
    for (std::size_t k = 0; k < opt.first_moments().size(); ++k) {
        j["m"].push_back(vec_to_json(opt.first_moments()[k]));
        j["v"].push_back(vec_to_json(opt.second_moments()[k]));
    }
    return j;
}

void adam_from_json(Adam& opt, const json& j)
{
    opt.first_moments().clear();
    opt.second_moments().clear();
    for (std::size_t k = 0; k < j.at("m").size(); ++k) {
        opt.first_moments().push_back(vec_from_json(j.at("m")[k]));
        opt.second_moments().push_back(vec_from_json(j.at("v")[k]));
    }
    opt.set_steps(j.at("t").get<long>());
}

} // namespace dnlrl
