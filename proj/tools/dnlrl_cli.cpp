// dnlrl: train, evaluate, extract and plot dNL reinforcement-learning agents.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnlrl/errors.hpp"
#include "dnlrl/experiment.hpp"
#include "dnlrl/plots.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dnlrl;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kSchema = 3, kUsage = 64 };

int fail(const std::string& kind, const std::string& message, int code, const std::vector<std::string>& problems = {})
{
    json err{{"error", kind}, {"message", message}};
    if (!problems.empty()) {
        err["problems"] = problems;
    }
    std::cerr << err.dump() << "\n";
    return code;
}

json reward_stats(const std::vector<double>& rewards)
{
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean = rewards.empty() ? 0.0 : mean / static_cast<double>(rewards.size());
    double sq = 0.0;
    for (double r : rewards) {
        sq += (r - mean) * (r - mean);
    }
    json j{{"episodes", rewards.size()},
           {"mean", mean},
           {"std", rewards.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(rewards.size()))}};
    if (!rewards.empty()) {
        j["min"] = *std::min_element(rewards.begin(), rewards.end());
        j["max"] = *std::max_element(rewards.begin(), rewards.end());
    }
    return j;
}

struct TrainArgs {
    std::string config;
    int trials = -1;
    int episodes = -1;
    long long seed = -1;
    std::string output;
    bool resume = false;
    int log_every = 50;
};

int cmd_train(const TrainArgs& a)
{
    ExperimentConfig cfg = load_config(a.config);
    if (a.trials >= 0) {
        cfg.trials = a.trials;
    }
    if (a.episodes >= 0) {
        cfg.episodes = a.episodes;
    }
    if (a.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(a.seed);
    }
    if (!a.output.empty()) {
        cfg.output_dir = a.output;
    }
    cfg.validate();
    auto log = [&](int trial, const EpisodeRecord& e) {
        if (a.log_every > 0 && (e.index + 1) % a.log_every == 0) {
            std::fprintf(stderr, "trial %d episode %d reward %.1f steps %d entropy %.3f (%.1fs)\n", trial, e.index + 1,
                         e.reward, e.steps, e.entropy, e.wall_seconds);
        }
    };
    json out = json::array();
    if (a.resume) {
        for (int t = 0; t < cfg.trials; ++t) {
            const std::string dir = (fs::path(cfg.output_dir) / ("trial_" + std::to_string(t))).string();
            const auto rec = resume_experiment(dir, cfg.episodes, [&](const EpisodeRecord& e) { log(t, e); });
            out.push_back({{"dir", rec.dir}, {"seed", rec.seed}, {"tail_mean", rec.tail.mean}, {"tail_std", rec.tail.stddev}});
        }
    } else {
        for (const auto& rec : run_trials(cfg, log)) {
            out.push_back({{"dir", rec.dir},
                           {"seed", rec.seed},
                           {"tail_mean", rec.tail.mean},
                           {"tail_std", rec.tail.stddev},
                           {"crisp_fidelity", rec.fidelity >= 0.0 ? json(rec.fidelity) : json(nullptr)},
                           {"wall_seconds", rec.wall_seconds}});
        }
    }
    std::cout << json{{"output_dir", cfg.output_dir}, {"runs", out}}.dump(2) << "\n";
    return kOk;
}

int cmd_evaluate(const std::string& checkpoint, int episodes, bool greedy, long long seed)
{
    auto run = load_run(checkpoint);
    const SampleMode mode = greedy ? SampleMode::Greedy : SampleMode::Stochastic;
    Trainer& trainer = run->trainer();
    auto env = make_environment(run->config());
    const auto r = rollout(
        *env, [&](const Eigen::VectorXd& s) { return trainer.act(s, mode); }, episodes,
        static_cast<std::uint64_t>(seed));
    json j = reward_stats(r.rewards);
    j["mode"] = greedy ? "greedy" : "stochastic";
    j["rewards"] = r.rewards;
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int cmd_extract(const std::string& checkpoint, double keep, double confident, bool jsonl, int fidelity_states)
{
    auto run = load_run(checkpoint);
    ExperimentConfig cfg = run->config();
    const DnlPolicy* policy = run->trainer().policy();
    if (!policy) {
        return fail("config", cfg.trainer + " checkpoints hold no logic policy to extract", kConfig);
    }
    ExtractionThresholds t{keep, confident};
    const auto rules = extract_policy(*policy, t);
    if (jsonl) {
        std::cout << rules_to_jsonl(rules);
        return kOk;
    }
    const auto stats = summarize_tail(run->rewards(), cfg.report_window);
    std::cout << format_policy(rules, policy->actions(), stats,
                               "Policy rules for " + cfg.agent + " (" + cfg.trainer + ", " + cfg.environment + ")");
    if (fidelity_states > 0) {
        auto env = make_environment(cfg);
        const auto states = visitation_states(*env, *policy, fidelity_states, run->seed() ^ 0xf1de11f1ULL);
        std::printf("\ncrisp agreement: %.4f over %d visited states\n", crisp_agreement(rules, *policy, states),
                    fidelity_states);
    }
    return kOk;
}

int cmd_plot(const std::vector<std::string>& dirs, std::string output, int avg_window, int std_window)
{
    std::vector<std::string> runs;
    for (const auto& d : dirs) {
        if (fs::exists(fs::path(d) / "metrics.csv")) {
            runs.push_back(d);
            continue;
        }
        std::vector<std::string> nested;
        if (fs::is_directory(d)) {
            for (const auto& entry : fs::directory_iterator(d)) {
                if (fs::exists(entry.path() / "metrics.csv")) {
                    nested.push_back(entry.path().string());
                }
            }
        }
        if (nested.empty()) {
            return fail("config", "'" + d + "' holds no metrics.csv (directly or one level down)", kConfig);
        }
        std::sort(nested.begin(), nested.end());
        runs.insert(runs.end(), nested.begin(), nested.end());
    }
    std::vector<std::vector<double>> curves;
    for (const auto& d : runs) {
        std::vector<double> rewards;
        for (const auto& e : parse_metrics_csv(read_text_file((fs::path(d) / "metrics.csv").string()))) {
            rewards.push_back(e.reward);
        }
        write_text_file((fs::path(d) / "curve.csv").string(), curve_csv(rewards, avg_window, std_window));
        curves.push_back(std::move(rewards));
    }
    if (output.empty()) {
        output = dirs.size() == 1 && runs.size() > 1 ? dirs.front() : fs::path(runs.front()).parent_path().string();
        if (output.empty()) {
            output = ".";
        }
    }
    const std::string overlay_path = (fs::path(output) / "overlay.csv").string();
    write_text_file(overlay_path, overlay_csv(overlay(curves, avg_window)));
    json j{{"runs", runs}, {"overlay", overlay_path}};
    std::cout << j.dump(2) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Interpretable RL with differentiable neural logic policies"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train one or more seeds from a config file");
    t->add_option("config", train.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    t->add_option("--trials", train.trials, "override the number of seeds");
    t->add_option("--episodes", train.episodes, "override the episode budget");
    t->add_option("--seed", train.seed, "override the base seed");
    t->add_option("--output", train.output, "override the output directory");
    t->add_flag("--resume", train.resume, "continue each trial from its checkpoint up to the budget");
    t->add_option("--log-every", train.log_every, "progress line interval in episodes (0 = silent)");

    std::string checkpoint;
    int episodes = 100;
    bool greedy = false;
    long long eval_seed = 12345;
    auto* e = app.add_subcommand("evaluate", "play episodes with a trained checkpoint");
    e->add_option("checkpoint", checkpoint, "checkpoint.json or a run directory")->required();
    e->add_option("--episodes", episodes, "episodes to play")->check(CLI::PositiveNumber);
    e->add_flag("--greedy", greedy, "take the most probable action instead of sampling");
    e->add_option("--seed", eval_seed, "episode seed")->check(CLI::NonNegativeNumber);

    double keep = 0.5;
    double confident = 0.95;
    bool jsonl = false;
    int fidelity_states = 0;
    auto* x = app.add_subcommand("extract", "print the policy rules of a checkpoint");
    x->add_option("checkpoint", checkpoint, "checkpoint.json or a run directory")->required();
    x->add_option("--keep", keep, "membership floor for listing a rule or atom");
    x->add_option("--confident", confident, "membership above which weights are omitted");
    x->add_flag("--jsonl", jsonl, "one JSON object per rule instead of text");
    x->add_option("--fidelity-states", fidelity_states, "also report crisp/fuzzy agreement over N visited states");

    std::vector<std::string> dirs;
    std::string output;
    int avg_window = 50;
    int std_window = 20;
    auto* p = app.add_subcommand("plot", "write reward-curve CSVs for run directories");
    p->add_option("run-dir", dirs, "run directories (or a trials directory)")->required();
    p->add_option("--output", output, "where to write overlay.csv");
    p->add_option("--avg-window", avg_window, "moving-average window")->check(CLI::PositiveNumber);
    p->add_option("--std-window", std_window, "moving-std window")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForAllHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        return fail("usage", err.what(), kUsage);
    }

    try {
        if (t->parsed()) {
            return cmd_train(train);
        }
        if (e->parsed()) {
            return cmd_evaluate(checkpoint, episodes, greedy, eval_seed);
        }
        if (x->parsed()) {
            return cmd_extract(checkpoint, keep, confident, jsonl, fidelity_states);
        }
        return cmd_plot(dirs, output, avg_window, std_window);
    } catch (const ValidationError& err) {
        return fail("validation", "invalid configuration", kConfig, err.problems());
    } catch (const ConfigError& err) {
        return fail("config", err.what(), kConfig);
    } catch (const SchemaError& err) {
        return fail("schema", err.what(), kSchema);
    } catch (const std::exception& err) {
        return fail("runtime", err.what(), kFailure);
    }
}
