#pragma once

// Continuous boundary predicates, non-linear transformation predicates and
// assembly of the batch x N_e input matrix that feeds the logic layers.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/logic.hpp"

namespace dnlrl {

struct ContinuousFeature {
    std::string name;
    double low = 0.0;
    double high = 1.0;
    int bins = 1;

    bool operator==(const ContinuousFeature&) const = default;
};

struct DiscreteFeature {
    std::string name;

    bool operator==(const DiscreteFeature&) const = default;
};

/// Raw states are laid out as [continuous..., discrete...], discrete values
/// encoded 0/1.
struct FeatureSchema {
    std::vector<ContinuousFeature> continuous;
    std::vector<DiscreteFeature> discrete;

    Eigen::Index state_size() const
    {
        return static_cast<Eigen::Index>(continuous.size() + discrete.size());
    }
    /// Throws ConfigError listing every violated invariant.
    void validate() const;
    bool operator==(const FeatureSchema&) const = default;
};

/// A named unary function usable as background knowledge.
struct UnaryTransform {
    std::string name;   // "sine"
    std::string suffix; // appended to the feature name in atoms: "Sine"
    double (*apply)(double);
};

/// Registered transforms: sine, cosine, square, cube. Throws ConfigError for
/// anything else.
const UnaryTransform& lookup_transform(std::string_view name);

/// Range of f(x) for x in [low, high], used for equal-width binning of the
/// transformed value.
std::pair<double, double> transform_codomain(const UnaryTransform& f, double low, double high);

/// Maps continuous feature names to transform names.
struct TransformKB {
    std::map<std::string, std::string> entries;

    bool empty() const { return entries.empty(); }
    void validate(const FeatureSchema& schema) const;
};

/// Preprocessed state: one value per predicate source (raw continuous
/// features, then transformed values in schema order) and the Boolean
/// discrete features.
struct ProcessedState {
    Eigen::VectorXd values;
    std::vector<bool> discrete;
};

/// Row-per-state form of ProcessedState used by the batched passes.
struct ProcessedBatch {
    Eigen::MatrixXd values;   // b x sources
    Eigen::MatrixXd discrete; // b x |discrete|, entries 0/1
    Eigen::Index rows() const { return values.rows(); }
};

ProcessedState process_state(const Eigen::Ref<const Eigen::VectorXd>& raw, const FeatureSchema& schema,
                             const TransformKB& kb);
/// Batched process_state; `raw` holds one state per row.
ProcessedBatch process_batch(const Eigen::Ref<const Eigen::MatrixXd>& raw, const FeatureSchema& schema,
                             const TransformKB& kb);
ProcessedBatch stack(const std::vector<ProcessedState>& states);

inline double eval_gt(double x, double bound, double c) { return sigmoid(c * (x - bound)); }
inline double eval_lt(double x, double bound, double c) { return sigmoid(-c * (x - bound)); }

/// (F_e, F_not_e)
inline std::pair<double, double> encode_discrete(bool value)
{
    return value ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
}

enum class AtomKind { Greater, Less, True, False };

struct AtomLabel {
    std::string name; // feature name, with transform suffix when transformed
    AtomKind kind = AtomKind::Greater;
    int source = 0; // predicate source index, or discrete index for True/False
    int bin = 0;
};

/// One boundary-predicate source: a continuous feature or a transformed one.
/// Bin i owns two independent trainable bounds: greater_than(i) for the
/// "x > bound" atom and less_than(i) for the "x < bound" atom.
struct PredicateSource {
    std::string name;
    int feature = 0;       // index into schema.continuous
    std::string transform; // empty for the identity
    Eigen::VectorXd greater_than;
    Eigen::VectorXd less_than;

    Eigen::Index bins() const { return greater_than.size(); }
};

struct PredicateBank {
    std::vector<PredicateSource> sources;
    std::vector<std::string> discrete;
    double c = 20.0;

    Eigen::Index atoms() const;
    std::vector<AtomLabel> labels() const;
};

/// Bin i over [low, high] starts as (low + i w, low + (i + 1) w); transform
/// sources are binned over the transform's codomain.
PredicateBank init_equal_width(const FeatureSchema& schema, const TransformKB& kb = {}, double c = 20.0);

/// Transform predicate values for one source: (gt_1, lt_1, ..., gt_k, lt_k)
/// evaluated at f(x).
Eigen::VectorXd eval_transform_predicates(double x, const UnaryTransform& f, const PredicateSource& source,
                                          double c);

struct InputMatrix {
    Eigen::MatrixXd values; // b x N_e
    std::vector<AtomLabel> labels;
};

/// Values only; column order matches PredicateBank::labels().
Eigen::MatrixXd build_input_values(const ProcessedBatch& batch, const PredicateBank& bank);
InputMatrix build_input_matrix(const ProcessedBatch& batch, const PredicateBank& bank);

struct BankGradient {
    std::vector<Eigen::VectorXd> greater_than;
    std::vector<Eigen::VectorXd> less_than;

    static BankGradient zeros_like(const PredicateBank& bank);
};

/// Accumulates d loss / d bounds given d loss / d input matrix.
void backward(const ProcessedBatch& batch, const PredicateBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& d_input,
              BankGradient& grad);

} // namespace dnlrl
