#include "dnlrl/rules.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace dnlrl {

namespace {

std::string two_decimals(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    std::string s(buf);
    if (s == "-0.00") {
        s = "0.00";
    }
    return s;
}

std::string one_decimal(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

const char* kind_name(AtomKind k)
{
    switch (k) {
    case AtomKind::Greater:
        return "gt";
    case AtomKind::Less:
        return "lt";
    case AtomKind::True:
        return "true";
    case AtomKind::False:
        return "false";
    }
    return "";
}

} // namespace

std::vector<ExtractedRule> extract_policy(const DnlPolicy& policy, const ExtractionThresholds& t)
{
    if (!(t.keep > 0.0 && t.keep <= t.confident && t.confident <= 1.0)) {
        throw ConfigError("extraction thresholds must satisfy 0 < keep <= confident <= 1");
    }
    const auto labels = policy.bank().labels();
    std::vector<ExtractedRule> out;
    for (int a = 0; a < policy.action_count(); ++a) {
        const auto& net = policy.networks()[static_cast<std::size_t>(a)];
        const Eigen::MatrixXd conj = net.conj_membership();
        const Eigen::VectorXd disj = net.disj_membership();
        for (Eigen::Index j = 0; j < net.rules(); ++j) {
            if (disj(j) < t.keep) {
                continue;
            }
            ExtractedRule rule;
            rule.action = a;
            rule.action_name = policy.actions()[static_cast<std::size_t>(a)];
            rule.rule = static_cast<int>(j);
            rule.weight = disj(j);
            rule.confident = disj(j) >= t.confident;
            for (Eigen::Index i = 0; i < net.atoms(); ++i) {
                if (conj(j, i) < t.keep) {
                    continue;
                }
                const auto& label = labels[static_cast<std::size_t>(i)];
                ExtractedAtom atom;
                atom.name = label.name;
                atom.kind = label.kind;
                atom.source = label.source;
                atom.column = static_cast<int>(i);
                const auto& src = policy.bank().sources;
                if (label.kind == AtomKind::Greater) {
                    atom.bound = src[static_cast<std::size_t>(label.source)].greater_than(label.bin);
                } else if (label.kind == AtomKind::Less) {
                    atom.bound = src[static_cast<std::size_t>(label.source)].less_than(label.bin);
                }
                atom.weight = conj(j, i);
                atom.confident = conj(j, i) >= t.confident;
                rule.atoms.push_back(std::move(atom));
            }
            out.push_back(std::move(rule));
        }
    }
    return out;
}

std::string format_atom(const ExtractedAtom& atom)
{
    std::string s;
    if (!atom.confident) {
        s += "[" + two_decimals(atom.weight) + "]";
    }
    s += atom.name;
    switch (atom.kind) {
    case AtomKind::Greater:
        s += ">" + two_decimals(atom.bound);
        break;
    case AtomKind::Less:
        s += "<" + two_decimals(atom.bound);
        break;
    case AtomKind::True:
        s += "True";
        break;
    case AtomKind::False:
        s += "False";
        break;
    }
    return s;
}

std::string format_rule(const ExtractedRule& rule)
{
    std::string s = rule.action_name + "() :- ";
    if (!rule.confident) {
        s += "[" + two_decimals(rule.weight) + "] ";
    }
    if (rule.atoms.empty()) {
        return s + "⊤";
    }
    s += "(";
    for (std::size_t i = 0; i < rule.atoms.size(); ++i) {
        if (i > 0) {
            s += " ∧ ";
        }
        s += format_atom(rule.atoms[i]);
    }
    return s + ")";
}

Eigen::VectorXd crisp_evaluate(const std::vector<ExtractedRule>& rules, const Eigen::Ref<const Eigen::VectorXd>& state,
                               const FeatureSchema& schema, const TransformKB& kb, int action_count)
{
    const ProcessedState ps = process_state(state, schema, kb);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(action_count);
    for (const auto& rule : rules) {
        if (rule.action < 0 || rule.action >= action_count) {
            throw DimensionError("crisp_evaluate: rule action out of range");
        }
        bool holds = true;
        for (const auto& atom : rule.atoms) {
            switch (atom.kind) {
            case AtomKind::Greater:
                holds = ps.values(atom.source) > atom.bound;
                break;
            case AtomKind::Less:
                holds = ps.values(atom.source) < atom.bound;
                break;
            case AtomKind::True:
                holds = ps.discrete[static_cast<std::size_t>(atom.source)];
                break;
            case AtomKind::False:
                holds = !ps.discrete[static_cast<std::size_t>(atom.source)];
                break;
            }
            if (!holds) {
                break;
            }
        }
        if (holds) {
            out(rule.action) = 1.0;
        }
    }
    return out;
}

double crisp_agreement(const std::vector<ExtractedRule>& rules, const DnlPolicy& policy,
                       const Eigen::Ref<const Eigen::MatrixXd>& states)
{
    if (states.rows() == 0) {
        return 1.0;
    }
    const auto fuzzy = policy.evaluate(states);
    int agree = 0;
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
        const Eigen::VectorXd crisp
            = crisp_evaluate(rules, states.row(r).transpose(), policy.schema(), policy.kb(), policy.action_count());
        if (argmax_lowest(crisp.transpose()) == argmax_lowest(fuzzy.probs.row(r))) {
            ++agree;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(states.rows());
}

RewardSummary summarize_tail(const std::vector<double>& rewards, int window)
{
    RewardSummary s;
    const auto n = static_cast<int>(std::min<std::size_t>(rewards.size(), static_cast<std::size_t>(window)));
    s.episodes = n;
    if (n == 0) {
        return s;
    }
    double sum = 0.0;
    for (std::size_t i = rewards.size() - static_cast<std::size_t>(n); i < rewards.size(); ++i) {
        sum += rewards[i];
    }
    s.mean = sum / n;
    double sq = 0.0;
    for (std::size_t i = rewards.size() - static_cast<std::size_t>(n); i < rewards.size(); ++i) {
        sq += (rewards[i] - s.mean) * (rewards[i] - s.mean);
    }
    s.stddev = std::sqrt(sq / n);
    return s;
}

std::string format_policy(const std::vector<ExtractedRule>& rules, const std::vector<std::string>& actions,
                          const RewardSummary& stats, const std::string& title)
{
    std::ostringstream os;
    if (!title.empty()) {
        os << title << "\n";
    }
    os << "mean reward: " << one_decimal(stats.mean) << " ± " << one_decimal(stats.stddev) << "\n";
    for (std::size_t a = 0; a < actions.size(); ++a) {
        os << "\n";
        bool any = false;
        for (const auto& r : rules) {
            if (r.action == static_cast<int>(a)) {
                os << format_rule(r) << "\n";
                any = true;
            }
        }
        if (!any) {
            os << actions[a] << "() :- ⊥\n";
        }
    }
    return os.str();
}

std::string rules_to_jsonl(const std::vector<ExtractedRule>& rules)
{
    std::string out;
    for (const auto& r : rules) {
        nlohmann::json j;
        j["action"] = r.action_name;
        j["rule"] = r.rule;
        j["weight"] = r.weight;
        j["confident"] = r.confident;
        j["atoms"] = nlohmann::json::array();
        for (const auto& a : r.atoms) {
            nlohmann::json aj{{"name", a.name}, {"kind", kind_name(a.kind)}, {"weight", a.weight},
                              {"confident", a.confident}, {"text", format_atom(a)}};
            if (a.kind == AtomKind::Greater || a.kind == AtomKind::Less) {
                aj["bound"] = a.bound;
            }
            j["atoms"].push_back(std::move(aj));
        }
        out += j.dump() + "\n";
    }
    return out;
}

} // namespace dnlrl
