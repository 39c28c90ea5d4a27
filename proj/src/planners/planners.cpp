#include "rplan/planners.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rplan/rng.hpp"

namespace rplan::planners {

void validate_budget(const Budget& b)
{
    if (b.max_trajectories < 1 || b.max_actions < 1 || b.top_k < 1)
        throw Error(ErrorCode::ConfigError, "budget fields must all be at least 1");
}

reward::EnvExtras extras_of(const Environment& env)
{
    reward::EnvExtras e;
    e.oracle_reward = env.oracle_outcome().oracle_reward;
    e.price = env.price();
    return e;
}

Trajectory rollout(Environment& env, Trajectory t, const policy::Policy& policy, const Budget& budget,
                   double temperature, std::uint64_t seed, const std::vector<std::string>* reflections)
{
    while (!env.is_terminal() && t.size() < budget.max_actions) {
        const auto valid = env.valid_actions();
        const policy::PolicyContext ctx{t, valid, temperature, seed, reflections, env.free_form_actions()};
        auto proposals = policy.propose(ctx, 1);
        if (proposals.empty())
            throw Error(ErrorCode::PolicyError, policy.name() + " proposed nothing");
        Action a = std::move(proposals.front().action);
        Observation o = env.step(a);
        t.push(std::move(a), std::move(o), budget.max_actions);
    }
    t.terminal = env.is_terminal();
    t.oracle_reward = env.oracle_outcome().oracle_reward;
    return t;
}

Trajectory rollout(const Environment& prototype, const Instruction& instruction, const policy::Policy& policy,
                   const Budget& budget, double temperature, std::uint64_t seed,
                   const std::vector<std::string>* reflections, std::unique_ptr<Environment>* used)
{
    auto env = prototype.clone();
    Trajectory t = Trajectory::start(instruction, env->reset(instruction));
    t = rollout(*env, std::move(t), policy, budget, temperature, seed, reflections);
    if (used)
        *used = std::move(env);
    return t;
}

namespace {

Scored scored_rollout(const PlanRequest& req, double temperature, std::uint64_t seed,
                      const std::vector<std::string>* reflections = nullptr)
{
    std::unique_ptr<Environment> env;
    Scored s;
    s.trajectory = rollout(req.prototype, req.instruction, req.policy, req.budget, temperature, seed, reflections, &env);
    s.extras = extras_of(*env);
    s.score = req.reward.score(req.instruction, s.trajectory, s.extras);
    return s;
}

// Highest score, ties to the earliest.
std::size_t argmax(const std::vector<Scored>& explored)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < explored.size(); ++i)
        if (explored[i].score > explored[best].score)
            best = i;
    return best;
}

PlanResult finish(std::vector<Scored> explored, std::size_t chosen)
{
    PlanResult r;
    r.best = explored[chosen].trajectory;
    r.best_score = explored[chosen].score;
    r.best_extras = explored[chosen].extras;
    r.trajectories_used = explored.size();
    r.explored = std::move(explored);
    return r;
}

} // namespace

PlanResult run_greedy(const PlanRequest& req)
{
    validate_budget(req.budget);
    std::vector<Scored> explored;
    explored.push_back(scored_rollout(req, 0.0, req.seed));
    return finish(std::move(explored), 0);
}

PlanResult run_best_of_n(const PlanRequest& req, std::size_t n)
{
    validate_budget(req.budget);
    if (n < 1 || n > req.budget.max_trajectories)
        throw Error(ErrorCode::ConfigError,
                    fmt::format("best-of-n needs 1 <= n <= {} (got {})", req.budget.max_trajectories, n));
    std::vector<Scored> explored;
    explored.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        explored.push_back(scored_rollout(req, 1.0, req.seed + i));
    const auto best = argmax(explored);
    return finish(std::move(explored), best);
}

PlanResult run_sampling(const PlanRequest& req)
{
    return run_best_of_n(req, 1);
}

SelectionRule parse_selection_rule(std::string_view text)
{
    if (text == "last")
        return SelectionRule::Last;
    if (text == "first")
        return SelectionRule::First;
    if (text == "best")
        return SelectionRule::Best;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown selection rule '{}'", text));
}

std::string_view selection_rule_name(SelectionRule r)
{
    switch (r) {
    case SelectionRule::Last:
        return "last";
    case SelectionRule::First:
        return "first";
    case SelectionRule::Best:
        return "best";
    }
    return "?";
}

PlanResult run_reflexion(const PlanRequest& req, const ReflexionOptions& options, std::vector<ReflexionTrial>* memory_out)
{
    validate_budget(req.budget);
    if (options.max_trials < 1)
        throw Error(ErrorCode::ConfigError, "reflexion needs at least one trial");
    const std::size_t trials = std::min(options.max_trials, req.budget.max_trajectories);

    std::vector<Scored> explored;
    std::vector<ReflexionTrial> memory;
    std::vector<std::string> reflections;
    std::optional<std::size_t> chosen;
    for (std::size_t i = 0; i < trials; ++i) {
        explored.push_back(scored_rollout(req, options.temperature, derive_seed(req.seed, i), &reflections));
        const Scored& s = explored.back();
        if (s.score > options.threshold) {
            chosen = i;
            break;
        }
        if (i + 1 == trials)
            break;
        std::string text = req.policy.reflect(s.trajectory, s.score, reflections);
        memory.push_back({fnv1a64(serialize_trajectory(s.trajectory)), text, s.score});
        reflections.push_back(std::move(text));
    }
    if (!chosen) {
        switch (options.selection) {
        case SelectionRule::Last:
            chosen = explored.size() - 1;
            break;
        case SelectionRule::First:
            chosen = 0;
            break;
        case SelectionRule::Best:
            chosen = argmax(explored);
            break;
        }
    }
    if (memory_out)
        *memory_out = std::move(memory);
    return finish(std::move(explored), *chosen);
}

// ---- MCTS ----

std::uint64_t state_key(const Trajectory& t)
{
    std::uint64_t h = fnv1a64(t.instruction.text);
    for (const auto& o : t.observations) {
        h = fnv1a64("\x1e", h);
        h = fnv1a64(o.text, h);
    }
    return h;
}

MctsSearch::MctsSearch(const PlanRequest& req, MctsOptions options)
    : req_(req)
    , options_(options)
{
    validate_budget(req.budget);
    if (!(options_.exploration_c >= 0.0))
        throw Error(ErrorCode::ConfigError, "exploration constant must be non-negative");
    SearchNode root;
    nodes_.push_back(std::move(root));
}

void MctsSearch::prepare(std::size_t index, Environment& env, const Trajectory& t)
{
    SearchNode& node = nodes_[index];
    if (node.untried_ready)
        return;
    node.untried_ready = true;
    node.key = state_key(t);
    if (env.is_terminal() || node.depth >= req_.budget.max_actions) {
        node.leaf = true;
        return;
    }
    const auto valid = env.valid_actions();
    // Untried actions in the policy's own ranking order.
    const policy::PolicyContext ctx{t, valid, 0.0, derive_seed(req_.seed, node.key), nullptr, env.free_form_actions()};
    for (auto& p : req_.policy.propose(ctx, req_.budget.top_k))
        node.untried.push_back(std::move(p.action));
    if (node.untried.empty())
        throw Error(ErrorCode::PolicyError, req_.policy.name() + " proposed nothing");
}

double MctsSearch::uct(std::size_t parent, std::size_t child) const
{
    const SearchNode& p = nodes_[parent];
    const SearchNode& c = nodes_[child];
    return c.value + options_.exploration_c * std::sqrt(std::log(static_cast<double>(p.visits)) / static_cast<double>(c.visits));
}

bool MctsSearch::iterate()
{
    if (nodes_[0].exhausted || sims_.size() >= req_.budget.max_trajectories)
        return false;

    auto env = req_.prototype.clone();
    Trajectory t = Trajectory::start(req_.instruction, env->reset(req_.instruction));
    std::vector<std::size_t> path{0};
    std::size_t current = 0;
    bool expanded = false;

    while (!expanded) {
        prepare(current, *env, t);
        if (nodes_[current].leaf)
            break;
        // Expand the next untried action whose state is new among the siblings.
        while (!nodes_[current].untried.empty()) {
            Action a = std::move(nodes_[current].untried.front());
            nodes_[current].untried.erase(nodes_[current].untried.begin());
            auto next_env = env->clone();
            Observation o = next_env->step(a);
            Trajectory next = trajectory_append(t, a, std::move(o), req_.budget.max_actions);
            const std::uint64_t key = state_key(next);
            const bool seen = std::any_of(nodes_[current].children.begin(), nodes_[current].children.end(),
                                          [&](std::size_t c) { return nodes_[c].key == key; });
            if (seen)
                continue;
            SearchNode child;
            child.key = key;
            child.action = a.text;
            child.parent = current;
            child.depth = nodes_[current].depth + 1;
            nodes_.push_back(std::move(child));
            const std::size_t index = nodes_.size() - 1;
            nodes_[current].children.push_back(index);
            env = std::move(next_env);
            t = std::move(next);
            current = index;
            path.push_back(index);
            prepare(current, *env, t);
            expanded = true;
            break;
        }
        if (expanded)
            break;
        // Fully expanded: descend by UCT among children that still have something to explore.
        std::optional<std::size_t> pick;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c : nodes_[current].children) {
            if (nodes_[c].exhausted)
                continue;
            const double u = uct(current, c);
            if (!pick || u > best) {
                pick = c;
                best = u;
            }
        }
        if (!pick) {
            nodes_[current].exhausted = true;
            break;
        }
        Observation o = env->step(Action{nodes_[*pick].action});
        t.push(Action{nodes_[*pick].action}, std::move(o), req_.budget.max_actions);
        current = *pick;
        path.push_back(current);
    }

    if (!expanded && !nodes_[current].leaf) {
        // Nothing new below an apparently open node; propagate exhaustion and retry later.
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            SearchNode& n = nodes_[*it];
            n.exhausted = n.untried_ready && n.untried.empty()
                && std::all_of(n.children.begin(), n.children.end(), [&](std::size_t c) { return nodes_[c].exhausted; });
            if (!n.exhausted)
                break;
        }
        return !nodes_[0].exhausted;
    }

    Scored s;
    s.trajectory = rollout(*env, std::move(t), req_.policy, req_.budget, 1.0, derive_seed(req_.seed, sims_.size()));
    s.extras = extras_of(*env);
    s.score = req_.reward.score(req_.instruction, s.trajectory, s.extras);

    for (std::size_t i : path) {
        SearchNode& n = nodes_[i];
        n.value = n.visits == 0 ? s.score : std::max(n.value, s.score);
        n.visits += 1;
    }
    if (nodes_[current].leaf)
        nodes_[current].exhausted = true;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        SearchNode& n = nodes_[*it];
        if (!n.exhausted)
            n.exhausted = n.untried_ready && !n.leaf && n.untried.empty()
                && std::all_of(n.children.begin(), n.children.end(), [&](std::size_t c) { return nodes_[c].exhausted; });
        if (!n.exhausted)
            break;
    }
    paths_.push_back(std::move(path));
    sims_.push_back(std::move(s));
    return true;
}

PlanResult MctsSearch::result() const
{
    if (sims_.empty())
        throw Error(ErrorCode::PolicyError, "search produced no simulation");
    return finish(sims_, argmax(sims_));
}

PlanResult MctsSearch::run()
{
    while (sims_.size() < req_.budget.max_trajectories && iterate()) {
    }
    return result();
}

PlanResult run_mcts(const PlanRequest& req, const MctsOptions& options)
{
    MctsSearch search(req, options);
    return search.run();
}

// ---- suite evaluation ----

PlannerKind parse_planner(std::string_view text)
{
    if (text == "sampling")
        return PlannerKind::Sampling;
    if (text == "greedy")
        return PlannerKind::Greedy;
    if (text == "bon" || text == "best_of_n")
        return PlannerKind::BestOfN;
    if (text == "reflexion")
        return PlannerKind::Reflexion;
    if (text == "mcts")
        return PlannerKind::Mcts;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown planner '{}'", text));
}

std::string_view planner_name(PlannerKind k)
{
    switch (k) {
    case PlannerKind::Sampling:
        return "sampling";
    case PlannerKind::Greedy:
        return "greedy";
    case PlannerKind::BestOfN:
        return "bon";
    case PlannerKind::Reflexion:
        return "reflexion";
    case PlannerKind::Mcts:
        return "mcts";
    }
    return "?";
}

PlanResult run_planner(const PlannerConfig& config, const PlanRequest& req)
{
    switch (config.kind) {
    case PlannerKind::Sampling:
        return run_sampling(req);
    case PlannerKind::Greedy:
        return run_greedy(req);
    case PlannerKind::BestOfN:
        return run_best_of_n(req, config.n);
    case PlannerKind::Reflexion:
        return run_reflexion(req, config.reflexion);
    case PlannerKind::Mcts:
        return run_mcts(req, config.mcts);
    }
    throw Error(ErrorCode::ConfigError, "unknown planner");
}

std::uint64_t task_seed(std::uint64_t run_seed, std::size_t task_index)
{
    return derive_seed(named_stream(run_seed, "planner"), task_index);
}

SuiteResult evaluate_suite(const std::vector<SuiteTask>& tasks, const PlannerConfig& config,
                           const policy::Policy& policy, const reward::RewardModel& reward,
                           std::string_view reward_backend, const std::vector<std::uint64_t>& seeds,
                           std::size_t workers)
{
    if (tasks.empty())
        throw Error(ErrorCode::ConfigError, "empty task suite");
    if (seeds.empty())
        throw Error(ErrorCode::ConfigError, "no seeds");
    validate_budget(config.budget);

    const std::size_t total = tasks.size() * seeds.size();
    std::vector<MetricsRow> rows(total);
    std::vector<Trajectory> best(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto work = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t ti = job / seeds.size();
            const std::size_t si = job % seeds.size();
            try {
                const SuiteTask& task = tasks[ti];
                const PlanRequest req{*task.prototype, task.instruction, policy, reward, config.budget,
                                      task_seed(seeds[si], ti)};
                const PlanResult r = run_planner(config, req);
                MetricsRow& row = rows[job];
                row.task_id = task.instruction.id;
                row.planner = std::string(planner_name(config.kind));
                row.reward_backend = std::string(reward_backend);
                row.seed = seeds[si];
                row.reward = r.best_extras.oracle_reward.value_or(0.0);
                row.success = r.best_extras.oracle_reward && *r.best_extras.oracle_reward >= 1.0;
                row.actions = r.best.size();
                row.price = r.best_extras.price.value_or(0.0);
                row.trajectories_used = r.trajectories_used;
                best[job] = r.best;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = total;
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, total));
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    SuiteResult out;
    out.rows = std::move(rows);
    out.best.resize(tasks.size());
    for (std::size_t job = 0; job < total; ++job)
        out.best[job / seeds.size()].push_back(std::move(best[job]));
    return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows)
{
    std::string out(kMetricsHeader);
    out += '\n';
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{:.6f},{},{},{:.2f},{}\n", r.task_id, r.planner, r.reward_backend, r.seed,
                           r.reward, r.success ? 1 : 0, r.actions, r.price, r.trajectories_used);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& field, std::size_t line)
{
    try {
        std::size_t used = 0;
        T v;
        if constexpr (std::is_same_v<T, double>)
            v = std::stod(field, &used);
        else
            v = static_cast<T>(std::stoull(field, &used));
        if (used != field.size())
            throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaError, fmt::format("metrics line {}: bad number '{}'", line, field));
    }
}

} // namespace

std::vector<MetricsRow> parse_metrics_csv(std::string_view text)
{
    std::vector<MetricsRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (header) {
            if (line != kMetricsHeader)
                throw Error(ErrorCode::ParseError, "metrics header does not match");
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9)
            throw Error(ErrorCode::SchemaError, fmt::format("metrics line {}: expected 9 fields", line_no));
        MetricsRow r;
        r.task_id = f[0];
        r.planner = f[1];
        r.reward_backend = f[2];
        r.seed = parse_number<std::uint64_t>(f[3], line_no);
        r.reward = parse_number<double>(f[4], line_no);
        r.success = parse_number<std::uint64_t>(f[5], line_no) != 0;
        r.actions = parse_number<std::size_t>(f[6], line_no);
        r.price = parse_number<double>(f[7], line_no);
        r.trajectories_used = parse_number<std::size_t>(f[8], line_no);
        rows.push_back(std::move(r));
    }
    if (header)
        throw Error(ErrorCode::ParseError, "metrics file is empty");
    return rows;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows)
{
    std::vector<SummaryRow> out;
    std::vector<std::vector<std::string>> task_ids;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.planner == r.planner && s.reward_backend == r.reward_backend;
        });
        if (it == out.end()) {
            out.push_back(SummaryRow{r.planner, r.reward_backend});
            task_ids.emplace_back();
            it = out.end() - 1;
        }
        auto& ids = task_ids[static_cast<std::size_t>(it - out.begin())];
        if (std::find(ids.begin(), ids.end(), r.task_id) == ids.end())
            ids.push_back(r.task_id);
        it->runs += 1;
        it->reward += r.reward;
        it->success += r.success ? 1.0 : 0.0;
        it->actions += static_cast<double>(r.actions);
        it->price += r.price;
        it->trajectories_used += static_cast<double>(r.trajectories_used);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& s = out[i];
        const double n = static_cast<double>(s.runs);
        s.tasks = task_ids[i].size();
        s.reward /= n;
        s.success /= n;
        s.actions /= n;
        s.price /= n;
        s.trajectories_used /= n;
    }
    return out;
}

std::string render_table(const std::vector<MetricsRow>& rows)
{
    const auto summary = summarize(rows);
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"planner", "reward_backend", "tasks", "runs", "Reward", "Success%", "Action", "Price",
                     "Trajectories"});
    for (const auto& s : summary)
        cells.push_back({s.planner, s.reward_backend, std::to_string(s.tasks), std::to_string(s.runs),
                         fmt::format("{:.4f}", s.reward), fmt::format("{:.1f}", 100.0 * s.success),
                         fmt::format("{:.2f}", s.actions), fmt::format("{:.2f}", s.price),
                         fmt::format("{:.2f}", s.trajectories_used)});
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            const bool left = c < 2;
            const std::string& v = cells[r][c];
            const std::string pad(width[c] - v.size(), ' ');
            out += left ? v + pad : pad + v;
            out += c + 1 < cells[r].size() ? "  " : "\n";
        }
        if (r == 0) {
            for (std::size_t c = 0; c < width.size(); ++c)
                out += std::string(width[c], '-') + (c + 1 < width.size() ? "  " : "\n");
        }
    }
    return out;
}

} // namespace rplan::planners
