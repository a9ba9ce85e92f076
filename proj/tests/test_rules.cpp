#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dnlrl/environments.hpp"
#include "dnlrl/rules.hpp"
#include "dnlrl/trainers.hpp"

using namespace dnlrl;
using Catch::Approx;

namespace {

constexpr double kOff = -50.0;

// raw weight whose membership is m at steepness c
double raw_for(double m, double c = 6.0) { return std::log(m / (1.0 - m)) / c; }

int column_of(const DnlPolicy& p, const std::string& name, AtomKind kind, int bin)
{
    const auto labels = p.bank().labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].name == name && labels[i].kind == kind && labels[i].bin == bin) {
            return static_cast<int>(i);
        }
    }
    FAIL("no column " << name);
    return -1;
}

int source_of(const DnlPolicy& p, const std::string& name)
{
    for (std::size_t s = 0; s < p.bank().sources.size(); ++s) {
        if (p.bank().sources[s].name == name) {
            return static_cast<int>(s);
        }
    }
    return -1;
}

// CartPole policy with every membership switched off.
DnlPolicy blank_cartpole(int rules_per_action = 2, const TransformKB& kb = {})
{
    const auto info = environment_info("cartpole");
    PolicyConfig cfg;
    cfg.rules_per_action = rules_per_action;
    DnlPolicy p(info.schema, kb, info.actions, cfg, 1);
    for (auto& n : p.networks()) {
        n.conj_raw.setConstant(kOff);
        n.disj_raw.setConstant(kOff);
    }
    return p;
}

void set_atom(DnlPolicy& p, int action, int rule, const std::string& name, AtomKind kind, int bin, double bound,
              double m)
{
    const int s = source_of(p, name);
    if (kind == AtomKind::Greater) {
        p.bank().sources[s].greater_than(bin) = bound;
    } else {
        p.bank().sources[s].less_than(bin) = bound;
    }
    p.networks()[action].conj_raw(rule, column_of(p, name, kind, bin)) = raw_for(m);
}

} // namespace

TEST_CASE("atoms render in the table style")
{
    ExtractedAtom a{"CartPos", AtomKind::Less, 0, 1, 2.82, 0.81, false};
    CHECK(format_atom(a) == "[0.81]CartPos<2.82");
    a.confident = true;
    CHECK(format_atom(a) == "CartPos<2.82");
    ExtractedAtom g{"PoleAngleSine", AtomKind::Greater, 4, 0, -0.001, 1.0, true};
    CHECK(format_atom(g) == "PoleAngleSine>0.00");
    ExtractedAtom d{"LeftLegContact", AtomKind::False, 0, 0, 0.0, 1.0, true};
    CHECK(format_atom(d) == "LeftLegContactFalse");
}

TEST_CASE("extraction reads memberships, bounds and confidence")
{
    auto p = blank_cartpole();
    // left() :- ([0.81]CartPos<2.82 ∧ PoleAngle>-0.06 ∧ PoleAngleVeloc>0.08)
    p.networks()[0].disj_raw(0) = raw_for(0.99);
    set_atom(p, 0, 0, "CartPos", AtomKind::Less, 3, 2.82, 0.81);
    set_atom(p, 0, 0, "PoleAngle", AtomKind::Greater, 1, -0.06, 0.99);
    set_atom(p, 0, 0, "PoleAngleVeloc", AtomKind::Greater, 2, 0.08, 0.96);
    // left() :- [0.70] ([0.56]CartVeloc<-0.20)
    p.networks()[0].disj_raw(1) = raw_for(0.70);
    set_atom(p, 0, 1, "CartVeloc", AtomKind::Less, 0, -0.2, 0.56);

    const auto before = policy_to_json(p);
    const auto rules = extract_policy(p);
    CHECK(policy_to_json(p) == before);

    REQUIRE(rules.size() == 2);
    CHECK(rules[0].action_name == "left");
    CHECK(rules[0].confident);
    REQUIRE(rules[0].atoms.size() == 3);
    CHECK(format_rule(rules[0]) == "left() :- ([0.81]CartPos<2.82 ∧ PoleAngle>-0.06 ∧ PoleAngleVeloc>0.08)");
    CHECK(format_rule(rules[1]) == "left() :- [0.70] ([0.56]CartVeloc<-0.20)");

    const auto text = format_policy(rules, p.actions(), {290.3, 32.3, 100}, "Policy rules for dNLRLc");
    CHECK(text.find("mean reward: 290.3 ± 32.3") != std::string::npos);
    CHECK(text.find("right() :- ⊥") != std::string::npos);
    // a two-rule block has two ":-" lines for left
    std::size_t n = 0;
    for (auto pos = text.find("left() :-"); pos != std::string::npos; pos = text.find("left() :-", pos + 1)) {
        ++n;
    }
    CHECK(n == 2);

    const auto jsonl = rules_to_jsonl(rules);
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 2);
    const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(first.at("action") == "left");
    CHECK(first.at("atoms").size() == 3);
    CHECK(first.at("atoms")[0].at("text") == "[0.81]CartPos<2.82");
}

TEST_CASE("untrained-off networks give zero rules")
{
    const auto p = blank_cartpole();
    CHECK(extract_policy(p).empty());
    const auto text = format_policy({}, p.actions(), {});
    CHECK(text.find("left() :- ⊥") != std::string::npos);
    CHECK(text.find("right() :- ⊥") != std::string::npos);
    CHECK(crisp_evaluate({}, Eigen::VectorXd::Zero(4), p.schema(), p.kb(), 2) == Eigen::VectorXd::Zero(2));
}

TEST_CASE("raising the keep threshold never adds rules or atoms")
{
    const auto info = environment_info("lunar_lander");
    PolicyConfig cfg;
    cfg.init = {0.0, 0.6};
    const DnlPolicy p(info.schema, {}, info.actions, cfg, 4);
    std::size_t prev_rules = SIZE_MAX, prev_atoms = SIZE_MAX;
    for (double keep = 0.05; keep <= 0.95; keep += 0.05) {
        const auto rules = extract_policy(p, {keep, 0.95});
        std::size_t atoms = 0;
        for (const auto& r : rules) {
            atoms += r.atoms.size();
        }
        REQUIRE(rules.size() <= prev_rules);
        REQUIRE(atoms <= prev_atoms);
        prev_rules = rules.size();
        prev_atoms = atoms;
    }
    CHECK_THROWS_AS(extract_policy(p, {0.0, 0.95}), ConfigError);
    CHECK_THROWS_AS(extract_policy(p, {0.9, 0.5}), ConfigError);
}

TEST_CASE("crisp evaluation uses hard comparisons and ignores weights")
{
    auto p = blank_cartpole();
    // left() :- PoleAngleVeloc>0.08
    p.networks()[0].disj_raw(0) = raw_for(0.6);
    set_atom(p, 0, 0, "PoleAngleVeloc", AtomKind::Greater, 0, 0.08, 0.55);
    const auto rules = extract_policy(p);
    REQUIRE(rules.size() == 1);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(4);
    s(3) = 0.1;
    auto v = crisp_evaluate(rules, s, p.schema(), p.kb(), 2);
    CHECK(v(0) == 1.0);
    CHECK(v(1) == 0.0);
    s(3) = 0.07;
    v = crisp_evaluate(rules, s, p.schema(), p.kb(), 2);
    CHECK(v(0) == 0.0);
}

TEST_CASE("crisp and fuzzy policies agree when the network is nearly crisp")
{
    auto p = blank_cartpole(1);
    // left() :- PoleAngle<0.00 ; right() :- PoleAngle>0.00
    p.bank().c = 1e4;
    p.networks()[0].disj_raw(0) = 50.0;
    p.networks()[1].disj_raw(0) = 50.0;
    set_atom(p, 0, 0, "PoleAngle", AtomKind::Less, 1, 0.0, 0.9999);
    set_atom(p, 1, 0, "PoleAngle", AtomKind::Greater, 2, 0.0, 0.9999);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    Eigen::MatrixXd states(500, 4);
    for (Eigen::Index i = 0; i < states.size(); ++i) {
        states.data()[i] = u(rng);
    }
    const auto rules = extract_policy(p);
    CHECK(crisp_agreement(rules, p, states) == 1.0);
    // with no rules the crisp argmax is always action 0
    const double left_share
        = double((p.evaluate(states).probs.col(0).array() >= p.evaluate(states).probs.col(1).array()).count()) / 500.0;
    CHECK(crisp_agreement({}, p, states) == Approx(left_share));
}

TEST_CASE("transform atoms are evaluated on the transformed value")
{
    auto p = blank_cartpole(1, TransformKB{{{"PoleAngle", "sine"}}});
    p.networks()[1].disj_raw(0) = 50.0;
    set_atom(p, 1, 0, "PoleAngleSine", AtomKind::Greater, 0, 0.0, 0.99);
    const auto rules = extract_policy(p);
    REQUIRE(rules.size() == 1);
    CHECK(format_rule(rules[0]) == "right() :- (PoleAngleSine>0.00)");
    Eigen::VectorXd s = Eigen::VectorXd::Zero(4);
    s(2) = 0.1;
    CHECK(crisp_evaluate(rules, s, p.schema(), p.kb(), 2)(1) == 1.0);
    s(2) = -0.1;
    CHECK(crisp_evaluate(rules, s, p.schema(), p.kb(), 2)(1) == 0.0);
}

TEST_CASE("tail summary uses the last window with population deviation")
{
    std::vector<double> r(150, 0.0);
    for (int i = 50; i < 150; ++i) {
        r[i] = i % 2 == 0 ? 100.0 : 300.0;
    }
    const auto s = summarize_tail(r, 100);
    CHECK(s.episodes == 100);
    CHECK(s.mean == Approx(200.0));
    CHECK(s.stddev == Approx(100.0));
    const auto short_run = summarize_tail({1.0, 3.0}, 100);
    CHECK(short_run.episodes == 2);
    CHECK(short_run.mean == 2.0);
    CHECK(summarize_tail({}, 100).episodes == 0);
}
