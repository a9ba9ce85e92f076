#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "dnlrl/experiment.hpp"
#include "dnlrl/plots.hpp"

using namespace dnlrl;
using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("dnlrl_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig toy_config(const std::string& trainer = "SAC")
{
    auto cfg = default_config("toy_mdp");
    cfg.trainer = trainer;
    cfg.sac.warmup_steps = 50;
    cfg.dqn.warmup_steps = 50;
    cfg.fidelity_states = 200;
    return cfg;
}

ExperimentConfig short_cartpole()
{
    auto cfg = default_config("cartpole");
    cfg.sac.warmup_steps = 100;
    cfg.fidelity_states = 300;
    return cfg;
}

std::string errors_of(const json& j)
{
    try {
        config_from_json(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("config round trips through its resolved JSON form")
{
    for (const char* env : {"cartpole", "lunar_lander", "toy_mdp"}) {
        const auto cfg = default_config(env);
        const auto j = config_to_json(cfg);
        CHECK(config_to_json(config_from_json(j)) == j);
    }
    auto cfg = config_from_json(json{{"environment", "cartpole"},
                                     {"agent", "dNLRLnlc"},
                                     {"transforms", {{"PoleAngle", "sine"}}},
                                     {"bins", json::array({4, 3, 2, 1})},
                                     {"features", {{"CartPos", {{"low", -2.4}}}}},
                                     {"policy", {{"rules_per_action", 3}, {"floor", 0.1}}},
                                     {"sac", {{"alpha", 0.1}}}});
    CHECK(cfg.schema.continuous[1].bins == 3);
    CHECK(cfg.schema.continuous[0].low == -2.4);
    CHECK(cfg.policy.rules_per_action == 3);
    CHECK(cfg.policy.floor == 0.1);
    CHECK(cfg.sac.alpha == 0.1);
    CHECK(cfg.kb().entries.at("PoleAngle") == "sine");
    CHECK(config_from_json(config_to_json(cfg)).schema == cfg.schema);
}

TEST_CASE("config validation lists every problem")
{
    const json bad{{"environment", "cartpole"},
                   {"agent", "dNLRLnlc"},
                   {"trainer", "PPO"},
                   {"bins", 0},
                   {"sac", {{"tau", 0.0}, {"gama", 0.9}}},
                   {"episodes", -1},
                   {"policy", {{"floor", "big"}}},
                   {"colour", "red"}};
    try {
        config_from_json(bad);
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(e.problems().size() >= 7);
        CHECK(msg.find("trainer") != std::string::npos);
        CHECK(msg.find("dNLRLnlc needs at least one transform") != std::string::npos);
        CHECK(msg.find("bins must be >= 1") != std::string::npos);
        CHECK(msg.find("sac.tau") != std::string::npos);
        CHECK(msg.find("unknown key 'gama'") != std::string::npos);
        CHECK(msg.find("unknown key 'colour'") != std::string::npos);
        CHECK(msg.find("policy.floor: expected a number") != std::string::npos);
        CHECK(msg.find("episodes") != std::string::npos);
    }
    CHECK(errors_of({{"agent", "dNLRLc"}, {"transforms", {{"PoleAngle", "sine"}}}}).find("takes no transforms")
          != std::string::npos);
    CHECK(errors_of({{"environment", "mars"}}).find("unknown 'mars'") != std::string::npos);
    CHECK(errors_of({{"agent", "dNLRLnlc"}, {"transforms", {{"PoleAngle", "tanh"}}}}).find("tanh")
          != std::string::npos);
    CHECK(errors_of({{"bins", json::array({1, 2})}}).find("one integer per continuous feature") != std::string::npos);
}

TEST_CASE("config files inherit from their base")
{
    const auto dir = scratch("inherit");
    write_text_file((dir / "base.json").string(), R"({"environment": "cartpole", "episodes": 50, "sac": {"alpha": 0.3}})");
    fs::create_directories(dir / "sub");
    write_text_file((dir / "sub" / "child.json").string(),
                    R"({"inherits": "../base.json", "sac": {"tau": 0.01}, "episodes": 70})");
    const auto cfg = load_config((dir / "sub" / "child.json").string());
    CHECK(cfg.episodes == 70);
    CHECK(cfg.sac.alpha == 0.3);
    CHECK(cfg.sac.tau == 0.01);

    write_text_file((dir / "a.json").string(), R"({"inherits": "b.json"})");
    write_text_file((dir / "b.json").string(), R"({"inherits": "a.json"})");
    CHECK_THROWS_AS(load_config((dir / "a.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
    write_text_file((dir / "broken.json").string(), "{ not json");
    CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
}

TEST_CASE("shipped configs load")
{
    const fs::path configs = fs::path(DNLRL_SOURCE_DIR) / "configs";
    int n = 0;
    for (const auto& entry : fs::directory_iterator(configs)) {
        if (entry.path().extension() == ".json") {
            INFO(entry.path().string());
            CHECK_NOTHROW(load_config(entry.path().string()));
            ++n;
        }
    }
    CHECK(n >= 5);
}

TEST_CASE("metrics CSV is stable and parses back")
{
    Run run(toy_config(), 3);
    run.train(5);
    const auto csv = metrics_csv(run.episodes());
    CHECK(csv.rfind("episode,reward,steps,updates,critic_loss,actor_loss,entropy,alpha\n", 0) == 0);
    const auto parsed = parse_metrics_csv(csv);
    REQUIRE(parsed.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(parsed[i].index == static_cast<int>(i));
        CHECK(parsed[i].reward == run.episodes()[i].reward);
        CHECK(parsed[i].steps == run.episodes()[i].steps);
    }
    CHECK(metrics_csv(parsed) == csv);
}

TEST_CASE("identical config and seed give byte-identical metrics")
{
    for (const char* trainer : {"SAC", "REINFORCE", "DQN", "A2C"}) {
        auto cfg = short_cartpole();
        cfg.trainer = trainer;
        Run a(cfg, 11), b(cfg, 11), c(cfg, 12);
        a.train(12);
        b.train(12);
        c.train(12);
        INFO(trainer);
        CHECK(metrics_csv(a.episodes()) == metrics_csv(b.episodes()));
        CHECK(metrics_csv(a.episodes()) != metrics_csv(c.episodes()));
    }
}

TEST_CASE("checkpoints reproduce the policy exactly")
{
    auto cfg = short_cartpole();
    Run run(cfg, 5);
    run.train(15);
    const auto ckpt = run.checkpoint();
    const auto restored = run_from_checkpoint(json::parse(ckpt.dump()));

    Eigen::MatrixXd probe(64, 4);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.5);
    for (Eigen::Index i = 0; i < probe.size(); ++i) {
        probe.data()[i] = g(rng);
    }
    const auto a = run.trainer().policy()->evaluate(probe);
    const auto b = restored->trainer().policy()->evaluate(probe);
    CHECK(a.probs == b.probs);
    CHECK(a.truth == b.truth);
    CHECK(restored->checkpoint() == ckpt);
    CHECK(metrics_csv(restored->episodes()) == metrics_csv(run.episodes()));
    CHECK(restored->seed() == 5);
}

TEST_CASE("checkpoint mismatches raise schema errors")
{
    Run cart(short_cartpole(), 1);
    const auto cart_ckpt = cart.checkpoint();

    Run lander(default_config("lunar_lander"), 1);
    CHECK_THROWS_AS(lander.restore(cart_ckpt), SchemaError);

    auto rebinned = short_cartpole();
    rebinned.schema.continuous[0].bins = 3;
    Run other(rebinned, 1);
    CHECK_THROWS_AS(other.restore(cart_ckpt), SchemaError);

    auto reinforce = short_cartpole();
    reinforce.trainer = "REINFORCE";
    Run r(reinforce, 1);
    CHECK_THROWS_AS(r.restore(cart_ckpt), SchemaError);

    CHECK_THROWS_AS(cart.restore(json{{"format", "something-else"}}), SchemaError);
    CHECK_THROWS_AS(cart.restore(json::object()), SchemaError);
    CHECK_THROWS_AS(run_from_checkpoint(json{{"config", 3}}), SchemaError);
}

TEST_CASE("resumed training continues the run")
{
    const auto dir = scratch("resume");
    auto cfg = toy_config();
    cfg.episodes = 30;
    cfg.checkpoint_every = 0;
    const auto first = run_experiment(cfg, 2, (dir / "a").string());
    REQUIRE(first.episodes.size() == 30);
    const auto resumed = resume_experiment((dir / "a").string(), 60);
    REQUIRE(resumed.episodes.size() == 60);
    for (int i = 0; i < 30; ++i) {
        CHECK(resumed.episodes[i].reward == first.episodes[i].reward);
    }
    for (int i = 0; i < 60; ++i) {
        CHECK(resumed.episodes[i].index == i);
    }

    cfg.episodes = 60;
    const auto straight = run_experiment(cfg, 2, (dir / "b").string());
    // paired comparison over the second half: same mean within sampling noise
    auto tail = [](const RunRecord& r) {
        std::vector<double> x;
        for (int i = 30; i < 60; ++i) {
            x.push_back(r.episodes[i].reward);
        }
        return x;
    };
    const auto x = tail(resumed), y = tail(straight);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 30.0;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / 30.0;
    double vx = 0.0, vy = 0.0;
    for (int i = 0; i < 30; ++i) {
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    const double se = std::sqrt((vx + vy) / 29.0 / 30.0);
    CHECK(std::abs(mx - my) <= 4.0 * se + 2.0);
}

TEST_CASE("a zero-episode budget writes an untrained report")
{
    const auto dir = scratch("budget0");
    auto cfg = short_cartpole();
    cfg.episodes = 0;
    const auto rec = run_experiment(cfg, 1, dir.string());
    CHECK(rec.episodes.empty());
    CHECK(rec.tail.episodes == 0);
    for (const char* f : {"config.json", "metrics.csv", "timing.csv", "checkpoint.json", "rules.txt", "rules.jsonl",
                          "curve.csv", "summary.json"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK(read_text_file((dir / "metrics.csv").string())
          == "episode,reward,steps,updates,critic_loss,actor_loss,entropy,alpha\n");
    CHECK(read_text_file((dir / "rules.txt").string()).find("mean reward: 0.0 ± 0.0") != std::string::npos);
    // the directory documents the exact resolved config
    const auto saved = config_from_json(read_json_file((dir / "config.json").string()));
    CHECK(saved.schema == cfg.schema);
    CHECK(saved.seed == 1);
}

TEST_CASE("trials write per-seed directories and an overlay")
{
    const auto dir = scratch("trials");
    auto cfg = toy_config("A2C");
    cfg.trials = 2;
    cfg.episodes = 4;
    cfg.output_dir = dir.string();
    const auto recs = run_trials(cfg);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].seed == cfg.seed);
    CHECK(recs[1].seed == cfg.seed + 1);
    CHECK(fs::exists(dir / "trial_0" / "metrics.csv"));
    CHECK(fs::exists(dir / "trial_1" / "rules.txt"));
    CHECK(fs::exists(dir / "overlay.csv"));
    const auto trials = read_json_file((dir / "trials.json").string());
    CHECK(trials.at("trials").size() == 2);
}

TEST_CASE("DQN runs report that they carry no logic policy")
{
    Run run(toy_config("DQN"), 1);
    run.train(3);
    CHECK(run.trainer().policy() == nullptr);
    CHECK(policy_report(run).find("no logic policy") != std::string::npos);
}

TEST_CASE("rollouts and actors")
{
    CartPole env;
    const auto r = rollout(env, uniform_actor(2, 1), 20, 7, 100);
    CHECK(r.rewards.size() == 20);
    CHECK(r.states.rows() == 100);
    const double mean = std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0) / 20.0;
    CHECK(mean > 8.0);
    CHECK(mean < 40.0);
    const auto again = rollout(env, uniform_actor(2, 1), 20, 7, 100);
    CHECK(again.rewards == r.rewards);

    const auto info = environment_info("cartpole");
    const DnlPolicy p(info.schema, {}, info.actions, PolicyConfig{}, 3);
    const auto states = visitation_states(env, p, 500, 4);
    CHECK(states.rows() == 500);
    CHECK(states.cols() == 4);
}

TEST_CASE("moving statistics")
{
    const std::vector<double> flat(120, 7.0);
    for (const double s : moving_std(flat, 20)) {
        REQUIRE(s == 0.0);
    }
    for (const double m : moving_average(flat, 50)) {
        REQUIRE(m == Approx(7.0));
    }

    std::vector<double> step(200, 0.0);
    std::fill(step.begin() + 100, step.end(), 300.0);
    const auto ma = moving_average(step, 50);
    CHECK(ma[99] == 0.0);
    CHECK(ma[100] == Approx(6.0));
    CHECK(ma[148] == Approx(294.0));
    CHECK(ma[149] == Approx(300.0));
    int ramp = 0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (ma[i] > 0.0 && ma[i] < 300.0) {
            ++ramp;
        }
    }
    CHECK(ramp == 49); // the plateau is reached on the 50th episode after the step
    CHECK(moving_average({1.0, 3.0}, 50)[1] == Approx(2.0));

    const auto sd = moving_std({0.0, 2.0, 0.0, 2.0}, 2);
    CHECK(sd[0] == 0.0);
    CHECK(sd[1] == Approx(1.0));
    CHECK(sd[3] == Approx(1.0));

    const auto csv = curve_csv({1.0, 2.0, 3.0});
    CHECK(csv.rfind("episode,reward,moving_average_50,moving_std_20\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("overlay bands across seeds")
{
    const auto o = overlay({{0, 0, 0, 0}, {2, 2, 2}}, 1);
    REQUIRE(o.mean.size() == 4);
    CHECK(o.mean[0] == Approx(1.0));
    CHECK(o.stddev[0] == Approx(1.0));
    CHECK(o.runs[0] == 2);
    CHECK(o.runs[3] == 1);
    CHECK(o.mean[3] == Approx(0.0));
    CHECK(o.stddev[3] == 0.0);
    const auto csv = overlay_csv(o);
    CHECK(csv.rfind("episode,mean,std,lower,upper,runs\n", 0) == 0);
}
