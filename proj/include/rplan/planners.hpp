#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rplan/core.hpp"
#include "rplan/policy.hpp"
#include "rplan/reward.hpp"

namespace rplan::planners {

struct Budget {
    std::size_t max_trajectories = 10;
    std::size_t max_actions = kDefaultMaxActions;
    std::size_t top_k = 10;
};

void validate_budget(const Budget& b); // throws ConfigError

struct Scored {
    Trajectory trajectory;
    double score = 0.0;
    reward::EnvExtras extras;
};

struct PlanResult {
    Trajectory best;
    double best_score = 0.0;
    reward::EnvExtras best_extras;
    std::vector<Scored> explored;
    std::size_t trajectories_used = 0;
};

// Environment facts after a rollout: oracle reward and, where the environment has one, price.
reward::EnvExtras extras_of(const Environment& env);

// Continues `start` (which must describe env's current state) by proposing with k = 1 at
// `temperature` until the environment is terminal or budget.max_actions is reached.
Trajectory rollout(Environment& env, Trajectory start, const policy::Policy& policy, const Budget& budget,
                   double temperature, std::uint64_t seed, const std::vector<std::string>* reflections = nullptr);

// Clones and resets `prototype`, then rolls out from the initial observation. The environment
// used is handed back through `used` when non-null, for extras.
Trajectory rollout(const Environment& prototype, const Instruction& instruction, const policy::Policy& policy,
                   const Budget& budget, double temperature, std::uint64_t seed,
                   const std::vector<std::string>* reflections = nullptr,
                   std::unique_ptr<Environment>* used = nullptr);

struct PlanRequest {
    const Environment& prototype;
    const Instruction& instruction;
    const policy::Policy& policy;
    const reward::RewardModel& reward;
    Budget budget;
    std::uint64_t seed = 0;
};

PlanResult run_greedy(const PlanRequest& req);
// n temperature-1 rollouts seeded seed + i; highest score wins, ties to the lowest i.
PlanResult run_best_of_n(const PlanRequest& req, std::size_t n);
PlanResult run_sampling(const PlanRequest& req);

enum class SelectionRule { Last, First, Best };
SelectionRule parse_selection_rule(std::string_view text);
std::string_view selection_rule_name(SelectionRule r);

struct ReflexionOptions {
    std::size_t max_trials = 10;
    double threshold = 0.99;
    SelectionRule selection = SelectionRule::Last;
    double temperature = 1.0;
};

struct ReflexionTrial {
    std::uint64_t digest = 0;
    std::string reflection;
    double score = 0.0;
};

// Stops at the first trial whose score is strictly greater than the threshold. Otherwise
// the trial is reflected on and the reflection joins the memory shown to later trials.
// `memory_out`, when non-null, receives the episodic memory.
PlanResult run_reflexion(const PlanRequest& req, const ReflexionOptions& options,
                         std::vector<ReflexionTrial>* memory_out = nullptr);

struct MctsOptions {
    double exploration_c = 1.4142135623730951;
};

struct SearchNode {
    std::uint64_t key = 0;
    std::string action; // incoming
    std::size_t parent = 0;
    std::size_t depth = 0;
    std::size_t visits = 0;
    double value = 0.0; // max backed-up score; meaningful once visits > 0
    std::vector<std::size_t> children;
    std::vector<Action> untried;
    bool untried_ready = false;
    bool leaf = false;
    bool exhausted = false;
};

// One search tree. Exposed so tests can inspect nodes and simulation paths.
class MctsSearch {
public:
    MctsSearch(const PlanRequest& req, MctsOptions options);

    // Runs one select/expand/simulate/backup cycle. False when the tree is exhausted.
    bool iterate();
    PlanResult run();

    const std::vector<SearchNode>& nodes() const noexcept { return nodes_; }
    // Node indices (root first) visited by each simulation.
    const std::vector<std::vector<std::size_t>>& paths() const noexcept { return paths_; }
    const std::vector<Scored>& simulations() const noexcept { return sims_; }
    PlanResult result() const;

private:
    void prepare(std::size_t node, Environment& env, const Trajectory& t);
    double uct(std::size_t parent, std::size_t child) const;

    const PlanRequest& req_;
    MctsOptions options_;
    std::vector<SearchNode> nodes_;
    std::vector<std::vector<std::size_t>> paths_;
    std::vector<Scored> sims_;
};

std::uint64_t state_key(const Trajectory& t);

PlanResult run_mcts(const PlanRequest& req, const MctsOptions& options = {});

// ---- suite evaluation ----

enum class PlannerKind { Sampling, Greedy, BestOfN, Reflexion, Mcts };
PlannerKind parse_planner(std::string_view text);
std::string_view planner_name(PlannerKind k);

struct PlannerConfig {
    PlannerKind kind = PlannerKind::Sampling;
    std::size_t n = 10;
    ReflexionOptions reflexion;
    MctsOptions mcts;
    Budget budget;
};

PlanResult run_planner(const PlannerConfig& config, const PlanRequest& req);

struct SuiteTask {
    Instruction instruction;
    std::shared_ptr<const Environment> prototype;
};

struct MetricsRow {
    std::string task_id;
    std::string planner;
    std::string reward_backend;
    std::uint64_t seed = 0;
    double reward = 0.0;
    bool success = false;
    std::size_t actions = 0;
    double price = 0.0;
    std::size_t trajectories_used = 0;
};

struct SuiteResult {
    std::vector<MetricsRow> rows;              // task-major, then seed
    std::vector<std::vector<Trajectory>> best; // per task, per seed
};

// Seed for one task under one run seed, from the run seed's "planner" stream.
std::uint64_t task_seed(std::uint64_t run_seed, std::size_t task_index);

// Every task under every seed. Tasks are spread over `workers` threads and merged in order.
SuiteResult evaluate_suite(const std::vector<SuiteTask>& tasks, const PlannerConfig& config,
                           const policy::Policy& policy, const reward::RewardModel& reward,
                           std::string_view reward_backend, const std::vector<std::uint64_t>& seeds,
                           std::size_t workers = 1);

inline constexpr std::string_view kMetricsHeader =
    "task_id,planner,reward_backend,seed,reward,success,actions,price,trajectories_used";

std::string metrics_csv(const std::vector<MetricsRow>& rows);
// Throws ParseError / SchemaError.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);

struct SummaryRow {
    std::string planner;
    std::string reward_backend;
    std::size_t tasks = 0;
    std::size_t runs = 0;
    double reward = 0.0;
    double success = 0.0;
    double actions = 0.0;
    double price = 0.0;
    double trajectories_used = 0.0;
};

// Means per (planner, reward backend), in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);
// Aligned text table; a pure function of the rows.
std::string render_table(const std::vector<MetricsRow>& rows);

} // namespace rplan::planners
