#pragma once

// Predicate action policy: one dNL network per action over a shared
// predicate bank, normalized into an action distribution.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/logic.hpp"
#include "dnlrl/optim.hpp"
#include "dnlrl/predicates.hpp"

namespace dnlrl {

struct PolicyConfig {
    int rules_per_action = 4; // N_p
    double membership_c = 6.0;
    double boundary_c = 20.0;
    WeightInit init{};
    double floor = 1e-6; // added to every truth value before normalizing
};

/// Evaluated policy for a batch: per-action truth values and the
/// normalized distribution, one row per state.
struct PredicateActionPolicy {
    Eigen::MatrixXd truth; // b x |A|
    Eigen::MatrixXd probs; // b x |A|
};

struct PolicyGradient {
    BankGradient bank;
    std::vector<DnlGradient<double>> networks;

    /// Same visiting order as DnlPolicy::parameters().
    std::vector<ConstParamView> views() const;
};

class DnlPolicy {
public:
    DnlPolicy() = default;
    DnlPolicy(FeatureSchema schema, TransformKB kb, std::vector<std::string> actions, const PolicyConfig& cfg,
              std::uint64_t seed);

    struct Forward {
        ProcessedBatch batch;
        Eigen::MatrixXd input;
        std::vector<DnlForward<double>> networks;
        PredicateActionPolicy policy;
    };

    Forward forward(const Eigen::Ref<const Eigen::MatrixXd>& raw_states) const;
    Forward forward(const ProcessedBatch& batch) const;
    PredicateActionPolicy evaluate(const Eigen::Ref<const Eigen::MatrixXd>& raw_states) const
    {
        return forward(raw_states).policy;
    }

    /// d loss / d truth values (b x |A|) -> parameter gradients.
    PolicyGradient backward_truth(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_truth) const;
    /// d loss / d probabilities (b x |A|) -> parameter gradients.
    PolicyGradient backward_probs(const Forward& f, const Eigen::Ref<const Eigen::MatrixXd>& d_probs) const;

    /// Bounds first (per source: greater_than, less_than), then per action
    /// (conjunction raw, disjunction raw).
    std::vector<ParamView> parameters();

    const FeatureSchema& schema() const { return schema_; }
    const TransformKB& kb() const { return kb_; }
    const std::vector<std::string>& actions() const { return actions_; }
    const PredicateBank& bank() const { return bank_; }
    PredicateBank& bank() { return bank_; }
    const std::vector<DnlNetwork<double>>& networks() const { return networks_; }
    std::vector<DnlNetwork<double>>& networks() { return networks_; }
    double floor() const { return floor_; }

    int action_count() const { return static_cast<int>(actions_.size()); }

private:
    FeatureSchema schema_;
    TransformKB kb_;
    std::vector<std::string> actions_;
    PredicateBank bank_;
    std::vector<DnlNetwork<double>> networks_;
    double floor_ = 1e-6;
};

/// Sum normalization with an additive floor: p_a = (X_a + eps) / sum_b (X_b + eps).
Eigen::MatrixXd normalize_truth(const Eigen::Ref<const Eigen::MatrixXd>& truth, double floor);

enum class SampleMode { Stochastic, Greedy };

/// Greedy picks the lowest index among maxima.
int sample_action(const Eigen::Ref<const Eigen::RowVectorXd>& probs, SampleMode mode, std::mt19937_64& rng);
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& values);

} // namespace dnlrl
