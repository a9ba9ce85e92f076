#pragma once

// Reading first-order policy rules out of a trained predicate action policy,
// evaluating them crisply, and rendering them as text or JSON lines.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnlrl/policy.hpp"

namespace dnlrl {

struct ExtractionThresholds {
    double keep = 0.5;       // memberships below this are dropped
    double confident = 0.95; // memberships at or above this print unweighted
};

struct ExtractedAtom {
    std::string name; // feature or transformed-feature name
    AtomKind kind = AtomKind::Greater;
    int source = 0; // predicate source (or discrete index for True/False)
    int column = 0; // input-matrix column
    double bound = 0.0;
    double weight = 1.0;
    bool confident = true;
};

struct ExtractedRule {
    int action = 0;
    std::string action_name;
    int rule = 0; // disjunction neuron index
    double weight = 1.0;
    bool confident = true;
    std::vector<ExtractedAtom> atoms;
};

/// Read-only: network weights are not touched.
std::vector<ExtractedRule> extract_policy(const DnlPolicy& policy, const ExtractionThresholds& t = {});

/// "[0.81]CartPos<2.82", "PoleAngleSine>0.00", "LeftLegContactFalse"
std::string format_atom(const ExtractedAtom& atom);
/// "left() :- ([0.56]CartPos<2.83 ∧ CartVeloc>0.18)"
std::string format_rule(const ExtractedRule& rule);

/// Hard-threshold evaluation of the rules on one raw state; one 0/1 entry
/// per action. Actions without rules evaluate to 0.
Eigen::VectorXd crisp_evaluate(const std::vector<ExtractedRule>& rules, const Eigen::Ref<const Eigen::VectorXd>& state,
                               const FeatureSchema& schema, const TransformKB& kb, int action_count);

/// Fraction of states (rows) where the crisp argmax equals the argmax of the
/// fuzzy policy. Both argmaxes break ties toward the lowest index.
double crisp_agreement(const std::vector<ExtractedRule>& rules, const DnlPolicy& policy,
                       const Eigen::Ref<const Eigen::MatrixXd>& states);

struct RewardSummary {
    double mean = 0.0;
    double stddev = 0.0;
    int episodes = 0;
};

/// Mean and population standard deviation of the trailing `window` entries.
RewardSummary summarize_tail(const std::vector<double>& rewards, int window = 100);

/// Per-action text blocks under a "mean reward: m ± s" header.
std::string format_policy(const std::vector<ExtractedRule>& rules, const std::vector<std::string>& actions,
                          const RewardSummary& stats, const std::string& title = "");

/// One JSON object per rule, newline-separated.
std::string rules_to_jsonl(const std::vector<ExtractedRule>& rules);

} // namespace dnlrl
