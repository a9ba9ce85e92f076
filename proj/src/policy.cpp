#include "dnlrl/policy.hpp"

namespace dnlrl {

std::vector<ConstParamView> PolicyGradient::views() const
{
    std::vector<ConstParamView> out;
    for (std::size_t s = 0; s < bank.greater_than.size(); ++s) {
        out.push_back(flat(bank.greater_than[s]));
        out.push_back(flat(bank.less_than[s]));
    }
    for (const auto& g : networks) {
        out.push_back(flat(g.conj_raw));
        out.push_back(flat(g.disj_raw));
    }
    return out;
}

DnlPolicy::DnlPolicy(FeatureSchema schema, TransformKB kb, std::vector<std::string> actions, const PolicyConfig& cfg,
                     std::uint64_t seed)
    : schema_(std::move(schema)), kb_(std::move(kb)), actions_(std::move(actions)), floor_(cfg.floor)
{
    if (actions_.empty()) {
        throw ConfigError("policy needs at least one action");
    }
    if (cfg.rules_per_action < 1) {
        throw ConfigError("rules_per_action must be >= 1");
    }
    if (cfg.membership_c < 1.0 || cfg.boundary_c <= 0.0) {
        throw ConfigError("membership c must be >= 1 and boundary c > 0");
    }
    if (!(cfg.floor > 0.0)) {
        throw ConfigError("normalization floor must be > 0");
    }
    bank_ = init_equal_width(schema_, kb_, cfg.boundary_c);
    std::mt19937_64 seeder(seed);
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        networks_.push_back(init_weights<double>(cfg.rules_per_action, bank_.atoms(), seeder(), cfg.membership_c,
                                                 cfg.init));
    }
}

DnlPolicy::Forward DnlPolicy::forward(const Eigen::Ref<const Eigen::MatrixXd>& raw_states) const
{
    return forward(process_batch(raw_states, schema_, kb_));
}

DnlPolicy::Forward DnlPolicy::forward(const ProcessedBatch& batch) const
{
    Forward f;
    f.batch = batch;
    f.input = build_input_values(f.batch, bank_);
    const Eigen::Index b = f.input.rows();
    f.policy.truth.resize(b, action_count());
    f.networks.reserve(networks_.size());
    for (std::size_t a = 0; a < networks_.size(); ++a) {
        f.networks.push_back(dnlrl::forward(networks_[a], f.input));
        f.policy.truth.col(static_cast<Eigen::Index>(a)) = f.networks.back().out;
    }
    f.policy.probs = normalize_truth(f.policy.truth, floor_);
    return f;
}

PolicyGradient DnlPolicy::backward_truth(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_truth) const
{
    if (d_truth.rows() != f.input.rows() || d_truth.cols() != action_count()) {
        throw DimensionError("policy backward: gradient shape does not match policy output");
    }
    PolicyGradient g;
    g.bank = BankGradient::zeros_like(bank_);
    g.networks.resize(networks_.size());
    Eigen::MatrixXd d_input = Eigen::MatrixXd::Zero(f.input.rows(), f.input.cols());
    for (std::size_t a = 0; a < networks_.size(); ++a) {
        g.networks[a].set_zero_like(networks_[a], f.input.rows());
        dnlrl::backward(networks_[a], f.input, f.networks[a], d_truth.col(static_cast<Eigen::Index>(a)),
                        g.networks[a]);
        d_input += g.networks[a].input;
    }
    dnlrl::backward(f.batch, bank_, d_input, g.bank);
    return g;
}

PolicyGradient DnlPolicy::backward_probs(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_probs) const
{
    // p_a = y_a / S with y = X + eps: dX_a = (dP_a - sum_j dP_j p_j) / S
    const auto& probs = f.policy.probs;
    const Eigen::VectorXd sums = (f.policy.truth.array() + floor_).rowwise().sum();
    const Eigen::VectorXd dot = (d_probs.array() * probs.array()).rowwise().sum();
    Eigen::MatrixXd d_truth = d_probs;
    d_truth.colwise() -= dot;
    d_truth.array().colwise() /= sums.array();
    return backward_truth(f, d_truth);
}

std::vector<ParamView> DnlPolicy::parameters()
{
    std::vector<ParamView> out;
    for (auto& s : bank_.sources) {
        out.push_back(flat(s.greater_than));
        out.push_back(flat(s.less_than));
    }
    for (auto& n : networks_) {
        out.push_back(flat(n.conj_raw));
        out.push_back(flat(n.disj_raw));
    }
    return out;
}

Eigen::MatrixXd normalize_truth(const Eigen::Ref<const Eigen::MatrixXd>& truth, double floor)
{
    Eigen::MatrixXd y = truth.array() + floor;
    const Eigen::VectorXd sums = y.rowwise().sum();
    y.array().colwise() /= sums.array();
    return y;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& values)
{
    int best = 0;
    for (Eigen::Index a = 1; a < values.size(); ++a) {
        if (values(a) > values(best)) {
            best = static_cast<int>(a);
        }
    }
    return best;
}

int sample_action(const Eigen::Ref<const Eigen::RowVectorXd>& probs, SampleMode mode, std::mt19937_64& rng)
{
    if (mode == SampleMode::Greedy) {
        return argmax_lowest(probs);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double target = u(rng) * probs.sum();
    double acc = 0.0;
    for (Eigen::Index a = 0; a < probs.size(); ++a) {
        acc += probs(a);
        if (target < acc) {
            return static_cast<int>(a);
        }
    }
    // rounding at the top end: last action with nonzero mass
    for (Eigen::Index a = probs.size(); a-- > 0;) {
        if (probs(a) > 0.0) {
            return static_cast<int>(a);
        }
    }
    return 0;
}

} // namespace dnlrl
