// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any fails.
// Usage: rplan_acceptance [criterion numbers...]
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "rplan/datagen.hpp"
#include "rplan/game24.hpp"
#include "rplan/harness.hpp"
#include "rplan/planners.hpp"
#include "rplan/reward.hpp"
#include "rplan/rng.hpp"

using namespace rplan;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RPLAN_DATA_DIR;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
};

// Collects failed sub-checks so one criterion can report all of them.
struct Checks {
    std::vector<std::string> failures;
    std::size_t count = 0;

    void expect(bool ok, const std::string& what)
    {
        ++count;
        if (!ok && failures.size() < 8)
            failures.push_back(what);
        else if (!ok)
            failures.emplace_back();
    }
    Verdict verdict(const std::string& summary) const
    {
        if (failures.empty())
            return {true, fmt::format("{} ({} checks)", summary, count)};
        std::string first;
        for (const auto& f : failures)
            if (!f.empty())
                first += (first.empty() ? "" : "; ") + f;
        return {false, fmt::format("{} of {} checks failed: {}", failures.size(), count, first)};
    }
};

planners::SummaryRow run_suite(const harness::Config& config)
{
    const auto tasks = harness::make_suite(config);
    const auto policy = harness::make_policy(config);
    std::string label;
    const auto reward = harness::make_reward(config, &label);
    const auto planner = harness::make_planner(config);
    const auto suite = planners::evaluate_suite(tasks, planner, *policy, *reward, label, config.seeds());
    return planners::summarize(suite.rows).at(0);
}

std::string seeds_toml(std::uint64_t n)
{
    std::string s = "seeds = [";
    for (std::uint64_t i = 0; i < n; ++i)
        s += (i ? ", " : "") + std::to_string(i);
    return s + "]\n";
}

// ---- 1 ----

Verdict oracle_fidelity()
{
    Checks c;
    const int example[4] = {3, 5, 7, 11};
    const auto sol = game24::oracle_solve(game24::make_puzzle(example));
    c.expect(sol.solvable, "3 5 7 11 reported unsolvable");
    if (sol.solvable) {
        std::vector<Action> steps;
        for (const auto& s : sol.witness)
            steps.push_back(Action{game24::render_step(s)});
        game24::Game24Environment env;
        const auto t = replay(env, {"w", "Input: 3 5 7 11"}, steps);
        c.expect(t.terminal && t.oracle_reward == 1.0, "witness does not replay to 24");
        c.expect(sol.witness.back().result == game24::Rational(24), "witness ends off 24");
    }

    const auto play = [](const std::vector<std::string>& steps) {
        game24::Game24Environment env;
        std::vector<Action> actions;
        for (const auto& s : steps)
            actions.push_back(Action{s});
        return replay(env, {"a", "Input: 12 10 8 4"}, actions);
    };
    const auto pos = play({"10 - 8 = 2 (left: 2 4 12)", "12 / 2 = 6 (left: 4 6)", "6 * 4 = 24 (left: 24)"});
    // As printed, the last step of the negative claims -2 * 2 = 4; the environment rejects it and the
    // episode never reaches a terminal 24. The arithmetically honest version ends on -4.
    const auto neg = play({"10 - 12 = -2 (left: -2 4 8)", "8 / 4 = 2 (left: -2 2)", "-2 * 2 = 4 (left: 4)"});
    const auto neg_fixed = play({"10 - 12 = -2 (left: -2 4 8)", "8 / 4 = 2 (left: -2 2)", "-2 * 2 = -4 (left: -4)"});
    c.expect(pos.terminal && pos.oracle_reward == 1.0, "positive example does not score 1");
    c.expect(neg.oracle_reward == 0.0, "negative example as printed does not score 0");
    c.expect(neg_fixed.terminal && neg_fixed.oracle_reward == 0.0, "corrected negative does not score 0");
    return c.verdict("3 5 7 11 solved and replayed; 12 10 8 4 pair scores (1, 0)");
}

// ---- 2 ----

Verdict gradient_check()
{
    constexpr std::size_t kInstances = 100;
    constexpr std::size_t kDimension = 1024;
    constexpr double kStep = 1e-5;
    constexpr double kRelTol = 1e-5;
    // Coordinates where the analytic gradient is exactly zero (features present on both sides in
    // equal counts) only pick up rounding noise from the difference quotient.
    constexpr double kZeroTol = 1e-5;
    constexpr double kLn2Tol = 1e-12;

    Checks c;
    Rng rng(20240601);
    double worst = 0.0;
    std::size_t coords = 0;
    for (std::size_t n = 0; n < kInstances; ++n) {
        reward::SyntheticConfig sc;
        sc.pairs = 1;
        sc.context_vocab = 60;
        sc.seed = rng.next();
        auto pair = reward::synthetic_pairs(sc).front();
        if (n % 2 == 1) {
            // Game of 24 flavoured text too.
            pair.instruction.text = "Input: 12 10 8 4";
            pair.positive.actions[0].text = fmt::format("{} - {} = {}", rng.index(13) + 1, rng.index(13), n);
        }
        auto params = reward::RewardParams::zeros(kDimension);
        for (auto& w : params.weights)
            w = rng.uniform() - 0.5;
        params.bias = 2.0 * rng.uniform() - 1.0;

        const auto g = reward::pairwise_grad(params, pair);
        std::map<std::uint32_t, double> analytic(g.weights.entries.begin(), g.weights.entries.end());
        std::set<std::uint32_t> support;
        for (const auto& side : {pair.positive, pair.negative})
            for (const auto& [i, v] : reward::featurize(pair.instruction, side, kDimension).entries)
                support.insert(i);
        for (int extra = 0; extra < 4; ++extra)
            support.insert(static_cast<std::uint32_t>(rng.index(kDimension)));

        for (std::uint32_t i : support) {
            const double keep = params.weights[i];
            params.weights[i] = keep + kStep;
            const double up = reward::pairwise_loss(params, pair);
            params.weights[i] = keep - kStep;
            const double down = reward::pairwise_loss(params, pair);
            params.weights[i] = keep;
            const double numeric = (up - down) / (2.0 * kStep);
            const double a = analytic.count(i) ? analytic[i] : 0.0;
            ++coords;
            if (a == 0.0) {
                c.expect(std::abs(numeric) <= kZeroTol, fmt::format("instance {} coord {}: numeric {:.3e} vs 0", n, i, numeric));
                continue;
            }
            const double rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
            worst = std::max(worst, rel);
            c.expect(rel <= kRelTol, fmt::format("instance {} coord {}: rel err {:.3e}", n, i, rel));
        }
        const double b_up = [&] {
            params.bias += kStep;
            const double v = reward::pairwise_loss(params, pair);
            params.bias -= kStep;
            return v;
        }();
        c.expect(g.bias == 0.0 && std::abs(b_up - reward::pairwise_loss(params, pair)) <= 1e-12,
                 "bias does not cancel");
        c.expect(std::abs(reward::pairwise_loss(reward::RewardParams::zeros(kDimension), pair) - std::log(2.0)) <=
                     kLn2Tol,
                 "zero-model loss is not ln 2");
    }
    c.expect(std::abs(reward::pairwise_loss(0.0) - std::log(2.0)) <= kLn2Tol, "loss(0) is not ln 2");
    return c.verdict(fmt::format("{} instances, {} coordinates, worst relative error {:.2e}", kInstances, coords,
                                 worst));
}

// ---- 3 ----

Verdict learnability()
{
    constexpr std::size_t kTrainPairs = 600;
    constexpr std::size_t kHeldPairs = 200;
    constexpr double kMinAccuracy = 0.99;

    Checks c;
    reward::SyntheticConfig train_cfg;
    train_cfg.pairs = kTrainPairs;
    train_cfg.seed = 11;
    reward::SyntheticConfig held_cfg = train_cfg;
    held_cfg.pairs = kHeldPairs;
    held_cfg.seed = 12;
    const auto train_set = reward::synthetic_pairs(train_cfg);
    const auto held = reward::synthetic_pairs(held_cfg);

    reward::TrainConfig tc;
    tc.epochs = 10;
    tc.seed = 5;
    const auto a = reward::train(train_set, tc);
    const auto b = reward::train(train_set, tc);
    const double acc = reward::eval_pairwise_accuracy(a.params, held);
    c.expect(acc >= kMinAccuracy, fmt::format("held-out accuracy {:.4f}", acc));

    const auto dir = fs::temp_directory_path() / "rplan_acceptance_c3";
    fs::create_directories(dir);
    reward::save_model(a.params, dir / "a.json");
    reward::save_model(b.params, dir / "b.json");
    const auto bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    c.expect(!bytes(dir / "a.json").empty() && bytes(dir / "a.json") == bytes(dir / "b.json"),
             "same seed gave different model files");
    fs::remove_all(dir);
    return c.verdict(fmt::format("{} pairs, {} epochs, held-out accuracy {:.4f}, model files identical", kTrainPairs,
                                 tc.epochs, acc));
}

// ---- 4 ----

Verdict pairwise_vs_classification()
{
    constexpr std::size_t kSeeds = 5;
    constexpr double kNoise = 0.10;

    double pairwise = 0.0;
    double classification = 0.0;
    std::string per_seed;
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
        // Graded levels: which side is better is only visible relative to the other side.
        reward::SyntheticConfig sc;
        sc.pairs = 1000;
        sc.graded_levels = 8;
        sc.label_noise = kNoise;
        sc.seed = 100 + s;
        const auto train_set = reward::synthetic_pairs(sc);
        // Accuracy is measured against clean labels.
        sc.pairs = 300;
        sc.label_noise = 0.0;
        sc.seed = 200 + s;
        const auto held = reward::synthetic_pairs(sc);

        reward::TrainConfig tc;
        tc.seed = s;
        tc.target = reward::Target::Pairwise;
        const double p = reward::eval_pairwise_accuracy(reward::train(train_set, tc).params, held);
        tc.target = reward::Target::Classification;
        const double k = reward::eval_pairwise_accuracy(reward::train(train_set, tc).params, held);
        pairwise += p / kSeeds;
        classification += k / kSeeds;
        per_seed += fmt::format(" {:.3f}/{:.3f}", p, k);
    }
    return {pairwise >= classification,
            fmt::format("mean accuracy pairwise {:.4f} vs classification {:.4f}; per seed{}", pairwise,
                        classification, per_seed)};
}

// ---- 5 ----

Verdict planner_dominance()
{
    constexpr std::uint64_t kSeeds = 30;
    constexpr double kMinGap = 0.10;
    const std::string base = seeds_toml(kSeeds) + R"(
[environment]
kind = "game24"
generate = 100
solvable_only = true
suite_seed = 7
[policy]
backend = "solver"
exhaustive = true
other_weight = 0.05
[reward]
backend = "oracle"
)";
    const auto mcts = run_suite(harness::Config::parse(base + "[planner]\nkind = \"mcts\"\n[budget]\nmax_trajectories = 100\n"));
    const auto bon = run_suite(harness::Config::parse(base + "[planner]\nkind = \"bon\"\nn = 10\n[budget]\nmax_trajectories = 10\n"));
    const auto sampling = run_suite(harness::Config::parse(base + "[planner]\nkind = \"sampling\"\n"));
    const bool ok = mcts.success >= bon.success && bon.success >= sampling.success &&
                    bon.success - sampling.success >= kMinGap;
    return {ok, fmt::format("success over {} tasks x {} seeds: MCTS(100) {:.3f}, BoN(10) {:.3f}, Sampling {:.3f}",
                            bon.tasks, kSeeds, mcts.success, bon.success, sampling.success)};
}

// ---- 6 ----

Verdict learned_reward()
{
    constexpr std::uint64_t kSeeds = 30;
    constexpr std::size_t kMinPairs = 1000;
    constexpr double kMinGap = 0.05;

    const auto dir = fs::temp_directory_path() / "rplan_acceptance_c6";
    fs::remove_all(dir);
    const auto synth = harness::Config::parse(R"(
seed = 11
[environment]
kind = "game24"
[policy]
backend = "solver"
exhaustive = true
other_weight = 0.05
[synthesize]
instructions = 1500
repeats = 4
)");
    harness::cmd_synthesize(synth, harness::CommandOptions{std::nullopt, dir / "data"});
    const auto data = reward::load_dataset(dir / "data" / "dataset.jsonl");
    if (data.size() < kMinPairs) {
        fs::remove_all(dir);
        return {false, fmt::format("dataset has {} pairs, need {}", data.size(), kMinPairs)};
    }
    const auto tc = harness::make_train_config(harness::Config::parse("seed = 11"));
    const auto trained = reward::train(data, tc);
    reward::save_model(trained.params, dir / "model.json");

    const std::string base = seeds_toml(kSeeds) + R"(
[environment]
kind = "game24"
generate = 100
solvable_only = true
suite_seed = 99
exclude_dataset = "data/dataset.jsonl"
[policy]
backend = "solver"
exhaustive = true
other_weight = 0.05
[reward]
backend = "learned:model.json"
)";
    const auto bon = run_suite(harness::Config::parse(base + "[planner]\nkind = \"bon\"\nn = 10\n", dir));
    const auto sampling = run_suite(harness::Config::parse(base + "[planner]\nkind = \"sampling\"\n", dir));
    fs::remove_all(dir);
    return {bon.success - sampling.success >= kMinGap,
            fmt::format("{} pairs; held-out success BoN(10, learned) {:.3f} vs Sampling {:.3f}", data.size(),
                        bon.success, sampling.success)};
}

// ---- 7 ----

Verdict controllable_generation()
{
    constexpr double kMaxRewardDrop = 0.05;
    const std::string base = seeds_toml(5) + R"(
[environment]
kind = "shop"
catalog = "shop/catalog.json"
goals = "shop/goals.json"
[policy]
backend = "scripted"
script = "shop/routes.json"
[planner]
kind = "bon"
n = 10
)";
    const auto plain = run_suite(harness::Config::parse(base, kData));
    const auto shorter = run_suite(harness::Config::parse(base + "[reward]\nlength_penalty = 0.01\n", kData));
    const auto cheaper = run_suite(harness::Config::parse(base + "[reward]\nprice_penalty = 0.01\n", kData));
    const bool ok = shorter.actions < plain.actions && plain.reward - shorter.reward <= kMaxRewardDrop &&
                    cheaper.price < plain.price;
    return {ok, fmt::format("actions {:.2f} -> {:.2f} (reward {:.3f} -> {:.3f}); price {:.2f} -> {:.2f}",
                            plain.actions, shorter.actions, plain.reward, shorter.reward, plain.price, cheaper.price)};
}

// ---- 8 ----

struct EnvCase {
    std::string name;
    std::vector<planners::SuiteTask> tasks;
    std::shared_ptr<const policy::Policy> policy;
};

std::vector<EnvCase> invariant_envs()
{
    std::vector<EnvCase> out;
    const auto g24 = harness::Config::parse(
        "[environment]\ngenerate = 6\nsuite_seed = 3\n[policy]\nbackend = \"solver\"\nexhaustive = true\n"
        "other_weight = 0.2");
    out.push_back({"game24", harness::make_suite(g24), harness::make_policy(g24)});
    const auto g24r = harness::Config::parse("[environment]\ngenerate = 4\nsuite_seed = 4\n");
    out.push_back({"game24/random", harness::make_suite(g24r), harness::make_policy(g24r)});
    const auto shop = harness::Config::parse(
        "[environment]\nkind = \"shop\"\ncatalog = \"shop/catalog.json\"\ngoals = \"shop/goals.json\"\nlimit = 4\n"
        "[policy]\nbackend = \"scripted\"\nscript = \"shop/routes.json\"",
        kData);
    out.push_back({"shop", harness::make_suite(shop), harness::make_policy(shop)});
    const auto shopr = harness::Config::parse(
        "[environment]\nkind = \"shop\"\ncatalog = \"shop/catalog.json\"\ngoals = \"shop/goals.json\"\nlimit = 3\n",
        kData);
    out.push_back({"shop/random", harness::make_suite(shopr), harness::make_policy(shopr)});
    return out;
}

Verdict invariants()
{
    Checks c;
    const reward::OracleReward oracle;
    const auto envs = invariant_envs();
    const std::vector<planners::PlannerKind> kinds{planners::PlannerKind::Sampling, planners::PlannerKind::Greedy,
                                                   planners::PlannerKind::BestOfN, planners::PlannerKind::Reflexion,
                                                   planners::PlannerKind::Mcts};

    const auto check_trajectory = [&](const Trajectory& t, const std::string& where) {
        c.expect(t.size() <= kDefaultMaxActions, where + ": trajectory longer than 10");
        c.expect(!validate_trajectory(t).has_value(), where + ": invalid trajectory");
        c.expect(deserialize_trajectory(serialize_trajectory(t)) == t, where + ": serialization round trip");
    };

    std::size_t runs = 0;
    for (const auto& e : envs) {
        for (auto kind : kinds) {
            for (std::size_t budget : {1, 3, 10}) {
                planners::PlannerConfig pc;
                pc.kind = kind;
                pc.n = budget;
                pc.budget.max_trajectories = budget;
                for (std::size_t t = 0; t < e.tasks.size(); ++t) {
                    for (std::uint64_t seed : {0, 1}) {
                        const planners::PlanRequest req{*e.tasks[t].prototype, e.tasks[t].instruction, *e.policy,
                                                        oracle, pc.budget, seed};
                        const auto r = planners::run_planner(pc, req);
                        const auto where = fmt::format("{}/{}/b{}/t{}/s{}", e.name, planners::planner_name(kind),
                                                       budget, t, seed);
                        ++runs;
                        c.expect(r.trajectories_used <= budget, where + ": budget exceeded");
                        c.expect(r.explored.size() <= budget, where + ": explored more than budget");
                        check_trajectory(r.best, where);
                        for (const auto& s : r.explored)
                            check_trajectory(s.trajectory, where);
                    }
                }
            }
        }

        // Best-of-N never gets worse with more samples.
        for (std::size_t t = 0; t < e.tasks.size(); ++t) {
            double prev = -1e300;
            for (std::size_t n = 1; n <= 10; ++n) {
                const planners::PlanRequest req{*e.tasks[t].prototype, e.tasks[t].instruction, *e.policy, oracle,
                                                planners::Budget{10, kDefaultMaxActions, 10}, 7};
                const double best = planners::run_best_of_n(req, n).best_score;
                c.expect(best >= prev, fmt::format("{}: BoN({}) worse than BoN({})", e.name, n, n - 1));
                prev = best;
            }
        }

        // Backed-up values are the max over the simulations through each node.
        for (std::size_t t = 0; t < e.tasks.size(); ++t) {
            const planners::PlanRequest req{*e.tasks[t].prototype, e.tasks[t].instruction, *e.policy, oracle,
                                            planners::Budget{30, kDefaultMaxActions, 4}, t};
            planners::MctsSearch search(req, planners::MctsOptions{});
            search.run();
            const auto& nodes = search.nodes();
            const auto& paths = search.paths();
            const auto& sims = search.simulations();
            c.expect(paths.size() == sims.size(), e.name + ": paths and simulations differ");
            std::map<std::size_t, std::size_t> visits;
            std::map<std::size_t, double> best;
            for (std::size_t s = 0; s < paths.size() && s < sims.size(); ++s)
                for (std::size_t n : paths[s]) {
                    best[n] = ++visits[n] == 1 ? sims[s].score : std::max(best[n], sims[s].score);
                }
            for (std::size_t n = 0; n < nodes.size(); ++n) {
                c.expect(nodes[n].visits == visits[n], fmt::format("{}: node {} visit count", e.name, n));
                if (nodes[n].visits > 0)
                    c.expect(nodes[n].value == best[n], fmt::format("{}: node {} value is not the max", e.name, n));
            }
        }
    }

    // Reflexion stops only on a score strictly above the threshold.
    {
        const auto cfg = harness::Config::parse("[policy]\nbackend = \"solver\"\nexhaustive = true\nother_weight = 0.05");
        const auto policy = harness::make_policy(cfg);
        const game24::Game24Environment proto;
        const int numbers[4] = {12, 10, 8, 4};
        const Instruction x{"r", game24::puzzle_instruction(game24::make_puzzle(numbers))};
        std::size_t late_successes = 0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const planners::PlanRequest req{proto, x, *policy, oracle, planners::Budget{10, kDefaultMaxActions, 10},
                                            seed};
            planners::ReflexionOptions at_one;
            at_one.threshold = 1.0;
            const auto never = planners::run_reflexion(req, at_one);
            c.expect(never.trajectories_used == at_one.max_trials, "threshold 1.0 stopped early");
            planners::ReflexionOptions below;
            below.threshold = 0.99;
            const auto stops = planners::run_reflexion(req, below);
            std::size_t first = 0;
            while (first < never.explored.size() && !(never.explored[first].score > 0.99))
                ++first;
            const std::size_t expected = first < never.explored.size() ? first + 1 : below.max_trials;
            c.expect(stops.trajectories_used == expected,
                     fmt::format("seed {}: threshold 0.99 used {} trials, expected {}", seed, stops.trajectories_used,
                                 expected));
            late_successes += first > 0 && first < never.explored.size() ? 1 : 0;
        }
        c.expect(late_successes > 0, "no seed had a success after a failed trial");
    }

    // Pairs and models survive their file formats.
    {
        reward::SyntheticConfig sc;
        sc.pairs = 50;
        for (const auto& p : reward::synthetic_pairs(sc)) {
            const auto back = reward::deserialize_pair(reward::serialize_pair(p));
            c.expect(back.instruction == p.instruction && back.positive == p.positive && back.negative == p.negative,
                     "pair round trip");
        }
        reward::TrainConfig tc;
        tc.dimension = 1024;
        tc.epochs = 2;
        const auto params = reward::train(reward::synthetic_pairs(sc), tc).params;
        const auto back = reward::parse_model(reward::model_json(params));
        c.expect(back.weights == params.weights && back.bias == params.bias && back.digest == params.digest,
                 "model round trip");
    }
    return c.verdict(fmt::format("{} planner runs over {} environment setups", runs, envs.size()));
}

// ---- 9 ----

Verdict judge_parsing()
{
    Checks c;
    std::ostringstream captured;
    auto logger = std::make_shared<spdlog::logger>("acceptance",
                                                   std::make_shared<spdlog::sinks::ostream_sink_mt>(captured));
    const auto previous = spdlog::default_logger();
    spdlog::set_default_logger(logger);

    c.expect(reward::parse_judge_score("The agent bought the right item. <0.750>") == 0.75, "<0.750> did not give 0.75");
    for (const char* reply : {"no score at all", "score: 0.8", "<>", "<high>"}) {
        bool raised = false;
        try {
            reward::parse_judge_score(reply);
        } catch (const Error& e) {
            raised = e.code() == ErrorCode::ScoreParseError;
        }
        c.expect(raised, fmt::format("'{}' did not raise ScoreParseError", reply));
    }
    const auto before = captured.str().size();
    c.expect(reward::parse_judge_score("<0.5>") == 0.5 && captured.str().size() == before, "in-range score logged");
    c.expect(reward::parse_judge_score("<1.4>") == 1.0, "1.4 not clamped to 1");
    c.expect(reward::parse_judge_score("<-0.2>") == 0.0, "-0.2 not clamped to 0");
    logger->flush();
    const auto log = captured.str();
    c.expect(log.find("1.4") != std::string::npos && log.find("-0.2") != std::string::npos,
             "clamping was not logged");

    spdlog::set_default_logger(previous);
    return c.verdict("<0.750> -> 0.75, missing scores raise ScoreParseError, clamps logged");
}

} // namespace

int main(int argc, char** argv)
{
    spdlog::set_level(spdlog::level::warn);
    const std::vector<Criterion> criteria{
        {1, "game24 oracle fidelity", 1.0, oracle_fidelity},
        {2, "pairwise gradient check", 5.0, gradient_check},
        {3, "reward model learnability", 30.0, learnability},
        {4, "pairwise >= classification", 120.0, pairwise_vs_classification},
        {5, "planner dominance on game24", 300.0, planner_dominance},
        {6, "learned reward end to end", 600.0, learned_reward},
        {7, "controllable generation on shop", 120.0, controllable_generation},
        {8, "budget and invariant suite", 120.0, invariants},
        {9, "judge score parsing", 1.0, judge_parsing},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& cr : criteria) {
        if (!only.empty() && !only.count(cr.id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = cr.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= cr.limit_s;
        const bool pass = v.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", cr.id, cr.name,
                    v.detail.c_str(), secs, cr.limit_s, in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
