#include "rplan/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rplan/game24.hpp"
#include "rplan/rng.hpp"

namespace rplan::datagen {

namespace {

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fill(std::string text, std::string_view key, const std::string& value)
{
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
        text.replace(pos, key.size(), value);
    return text;
}

std::string ask(const Llm& llm, const std::string& prompt, std::uint64_t seed, TokenUsage* usage)
{
    const auto c = llm.client->complete({{"user", prompt}}, 1.0, seed);
    if (usage) {
        usage->prompt += c.prompt_tokens;
        usage->completion += c.completion_tokens;
        usage->requests += 1;
    }
    return trim(c.text);
}

std::string product_blurb(const shop::Product& p)
{
    std::string s = p.title + " [SEP] Price: $" + shop::format_price(p.price) + " [SEP] Features:";
    for (const auto& a : p.attributes)
        s += " " + a;
    for (const auto& [group, values] : p.options) {
        s += " [SEP] " + group + ":";
        for (const auto& v : values)
            s += " " + v;
    }
    return s;
}

// Plays `actions` from a fresh reset, building the trajectory alongside.
Trajectory play_prefix(Environment& env, const Instruction& instruction, const std::vector<Action>& actions,
                       std::size_t count, std::size_t max_actions)
{
    Trajectory t = Trajectory::start(instruction, env.reset(instruction));
    for (std::size_t i = 0; i < count && !env.is_terminal(); ++i)
        t.push(actions[i], env.step(actions[i]), max_actions);
    return t;
}

void close(Trajectory& t, const Environment& env)
{
    t.terminal = env.is_terminal();
    t.oracle_reward = env.oracle_outcome().oracle_reward;
}

std::string pair_key(const reward::PreferencePair& p)
{
    return p.instruction.text + '\x1f' + serialize_trajectory(p.positive) + '\x1f' + serialize_trajectory(p.negative);
}

} // namespace

EnvKind parse_env_kind(std::string_view text)
{
    if (text == "game24")
        return EnvKind::Game24;
    if (text == "shop")
        return EnvKind::Shop;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown environment '{}'", text));
}

std::string_view env_kind_name(EnvKind k)
{
    return k == EnvKind::Game24 ? "game24" : "shop";
}

Mode parse_mode(std::string_view text)
{
    if (text == "template")
        return Mode::Template;
    if (text == "llm")
        return Mode::Llm;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown generator mode '{}'", text));
}

std::unique_ptr<Environment> World::make(const Instruction& instruction, const std::optional<shop::UserGoal>& goal) const
{
    if (custom)
        return custom(instruction);
    if (kind == EnvKind::Game24)
        return std::make_unique<game24::Game24Environment>();
    if (!catalog)
        throw Error(ErrorCode::ConfigError, "shop environment without a catalog");
    return std::make_unique<shop::ShopEnvironment>(catalog, goal.value_or(shop::UserGoal{}));
}

Prompts Prompts::defaults(EnvKind kind)
{
    Prompts p;
    if (kind == EnvKind::Game24) {
        p.synthesize = "Invent a Game of 24 puzzle: four whole numbers from 1 to 13 that can be combined with "
                       "+, -, * and / into 24. Here is a puzzle for inspiration: {observation}\n"
                       "Reply with a single line of the form 'Input: a b c d'.";
    } else {
        p.synthesize = "You are writing shopping requests for an online store. Here is one product page:\n"
                       "{observation}\n"
                       "Write one short request a shopper might type when looking for a product like this. "
                       "Mention two of its features, one option and a price limit. Reply with the request only.";
    }
    p.refine = "An agent was given this task:\n{instruction}\n\nThis is what it did:\n{transcript}\n"
               "Write the task that the agent actually completed, in the same style as the original. "
               "Reply with the task only.";
    return p;
}

Prompts Prompts::load(EnvKind kind, const std::optional<std::filesystem::path>& synthesize_path,
                      const std::optional<std::filesystem::path>& refine_path)
{
    Prompts p = defaults(kind);
    if (synthesize_path)
        p.synthesize = read_text(*synthesize_path);
    if (refine_path)
        p.refine = read_text(*refine_path);
    return p;
}

std::vector<RawInstruction> synthesize_instructions(const World& world, Mode mode, std::size_t m, std::uint64_t seed,
                                                    const Llm* llm, TokenUsage* usage)
{
    std::vector<RawInstruction> out;
    if (m == 0)
        return out;
    if (mode == Mode::Llm && (!llm || !llm->client))
        throw Error(ErrorCode::ConfigError, "LLM synthesis needs a chat endpoint");
    if (world.kind == EnvKind::Shop && !world.catalog)
        throw Error(ErrorCode::ConfigError, "shop synthesis needs a catalog");

    if (mode == Mode::Template) {
        if (world.kind == EnvKind::Game24) {
            Rng rng(seed);
            for (std::size_t i = 0; i < m; ++i) {
                const auto puzzle = game24::random_puzzle(rng);
                out.push_back({{fmt::format("g24-{:05}", i), game24::puzzle_instruction(puzzle)}, "template", {}});
            }
        } else {
            for (auto& task : shop::generate_goals(*world.catalog, seed, m))
                out.push_back({std::move(task.instruction), "template", std::move(task.goal)});
        }
        return out;
    }

    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        std::string observation;
        if (world.kind == EnvKind::Game24) {
            observation = game24::puzzle_text(game24::random_puzzle(rng));
        } else {
            const auto& products = world.catalog->products();
            observation = product_blurb(products[rng.index(products.size())]);
        }
        const std::string text = ask(*llm, fill(llm->prompts.synthesize, "{observation}", observation),
                                     derive_seed(seed, i), usage);
        if (text.empty())
            throw Error(ErrorCode::RemoteError, "model returned an empty instruction");
        out.push_back({{fmt::format("llm-{:05}", i), text}, "llm", std::nullopt});
    }
    return out;
}

std::vector<Collected> collect_trajectories(const std::vector<RawInstruction>& instructions,
                                            const policy::Policy& policy, const World& world,
                                            const planners::Budget& budget, std::uint64_t seed, std::size_t repeats,
                                            CollectStats* stats)
{
    std::vector<Collected> out;
    CollectStats local;
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        for (std::size_t r = 0; r < repeats; ++r) {
            ++local.attempted;
            const auto& raw = instructions[i];
            try {
                const auto prototype = world.make(raw.instruction, raw.goal);
                Trajectory t = planners::rollout(*prototype, raw.instruction, policy, budget, 1.0,
                                                 derive_seed(seed, i * repeats + r));
                if (auto problem = validate_trajectory(t, budget.max_actions))
                    throw Error(ErrorCode::SchemaError, *problem);
                if (t.oracle_reward && *t.oracle_reward >= 1.0)
                    ++local.oracle_positive;
                out.push_back({raw, std::move(t)});
            } catch (const Error& e) {
                ++local.failures;
                spdlog::debug("collection of {} failed: {}", raw.instruction.id, e.what());
            }
        }
    }
    if (stats)
        *stats = local;
    return out;
}

std::optional<shop::UserGoal> goal_from_purchase(const shop::Catalog& catalog, const shop::ShopState& final_state,
                                                 const std::optional<shop::UserGoal>& raw_goal)
{
    if (final_state.phase != shop::Phase::Done)
        return std::nullopt;
    const shop::Product* p = catalog.find(final_state.product_id);
    if (!p)
        return std::nullopt;
    shop::UserGoal g;
    if (raw_goal)
        for (const auto& a : raw_goal->required_attributes)
            if (p->attributes.count(a))
                g.required_attributes.insert(a);
    for (auto it = p->attributes.begin(); g.required_attributes.size() < 2 && it != p->attributes.end(); ++it)
        g.required_attributes.insert(*it);
    g.required_options = final_state.chosen_options;
    if (raw_goal && raw_goal->price_cap && p->price <= *raw_goal->price_cap)
        g.price_cap = raw_goal->price_cap;
    else
        g.price_cap = ((p->price / 1000) + 1) * 1000;
    return g;
}

std::optional<RefinedInstruction> refine_instruction(const RawInstruction& raw, const Trajectory& h,
                                                     const World& world, Mode mode, const Llm* llm, TokenUsage* usage)
{
    RefinedInstruction out;
    out.source_id = raw.instruction.id;

    std::optional<shop::UserGoal> goal;
    if (world.kind == EnvKind::Shop && !world.custom) {
        auto env = world.make(raw.instruction, raw.goal);
        replay(*env, raw.instruction, h.actions, std::max(h.size(), std::size_t{1}));
        const auto& state = static_cast<const shop::ShopEnvironment&>(*env).state();
        goal = goal_from_purchase(*world.catalog, state, raw.goal);
        if (!goal)
            return std::nullopt;
    } else if (!h.oracle_reward || *h.oracle_reward < 1.0) {
        // Nothing was achieved that a rewritten puzzle instruction could describe.
        return std::nullopt;
    }

    if (mode == Mode::Llm) {
        if (!llm || !llm->client)
            throw Error(ErrorCode::ConfigError, "LLM refinement needs a chat endpoint");
        std::string prompt = fill(llm->prompts.refine, "{transcript}", policy::render_transcript(h));
        prompt = fill(std::move(prompt), "{instruction}", raw.instruction.text);
        std::string text = ask(*llm, prompt, fnv1a64(raw.instruction.id), usage);
        if (text.empty())
            return std::nullopt;
        if (goal) {
            // Keep the attributes the text actually names, when it names any.
            const auto words = shop::tokenize(text);
            const std::set<std::string> mentioned(words.begin(), words.end());
            std::set<std::string> named;
            for (const auto& a : goal->required_attributes) {
                const auto parts = shop::tokenize(a);
                if (!parts.empty() && std::all_of(parts.begin(), parts.end(),
                                                  [&](const std::string& w) { return mentioned.count(w) != 0; }))
                    named.insert(a);
            }
            if (!named.empty())
                goal->required_attributes = std::move(named);
        }
        out.instruction = {raw.instruction.id + "-r", std::move(text)};
    } else if (goal) {
        out.instruction = {raw.instruction.id + "-r", shop::goal_instruction_text(*goal)};
    } else {
        out.instruction = raw.instruction;
    }
    out.goal = std::move(goal);
    return out;
}

std::string_view strategy_name(Strategy s)
{
    switch (s) {
    case Strategy::PerturbAction:
        return "perturb_action";
    case Strategy::Truncate:
        return "truncate";
    case Strategy::DivergeRandom:
        return "diverge_random";
    }
    return "?";
}

Strategy parse_strategy(std::string_view text)
{
    if (text == "perturb_action")
        return Strategy::PerturbAction;
    if (text == "truncate")
        return Strategy::Truncate;
    if (text == "diverge_random")
        return Strategy::DivergeRandom;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown negative strategy '{}'", text));
}

Strategy StrategyMix::draw(std::uint64_t seed) const
{
    const double total = perturb_action + truncate + diverge_random;
    if (!(total > 0.0) || perturb_action < 0.0 || truncate < 0.0 || diverge_random < 0.0)
        throw Error(ErrorCode::ConfigError, "negative strategy weights must be non-negative with a positive sum");
    const double u = Rng(seed).uniform() * total;
    if (u < perturb_action)
        return Strategy::PerturbAction;
    if (u < perturb_action + truncate)
        return Strategy::Truncate;
    return Strategy::DivergeRandom;
}

Trajectory make_negative(const NegativeRequest& req)
{
    const Trajectory& pos = req.positive;
    const Instruction& x = req.refined.instruction;
    const double pos_reward = pos.oracle_reward.value_or(1.0);
    const std::size_t n = pos.size();
    const std::string pos_text = serialize_trajectory(pos);
    const policy::RandomPolicy random;
    std::string last_problem = "no attempt";

    for (std::size_t attempt = 0; attempt <= req.max_retries; ++attempt) {
        const std::uint64_t seed = derive_seed(req.seed, attempt);
        Rng rng(seed);
        auto env = req.world.make(x, req.refined.goal);
        Trajectory neg;
        switch (req.strategy) {
        case Strategy::Truncate: {
            const std::size_t k = req.truncate_k + attempt;
            if (k > n) {
                last_problem = fmt::format("cannot drop {} of {} steps", k, n);
                continue;
            }
            neg = play_prefix(*env, x, pos.actions, n - k, req.budget.max_actions);
            close(neg, *env);
            break;
        }
        case Strategy::PerturbAction: {
            if (n == 0) {
                last_problem = "positive has no actions to perturb";
                continue;
            }
            const std::size_t i = rng.index(n);
            neg = play_prefix(*env, x, pos.actions, i, req.budget.max_actions);
            if (env->is_terminal()) {
                last_problem = "prefix already terminal";
                continue;
            }
            std::vector<Action> alternatives;
            for (auto& a : env->valid_actions())
                if (a != pos.actions[i])
                    alternatives.push_back(std::move(a));
            if (alternatives.empty()) {
                last_problem = fmt::format("no alternative to action {}", i + 1);
                continue;
            }
            const Action a = alternatives[rng.index(alternatives.size())];
            neg.push(a, env->step(a), req.budget.max_actions);
            neg = planners::rollout(*env, std::move(neg), req.continuation, req.budget, 1.0, derive_seed(seed, 1));
            break;
        }
        case Strategy::DivergeRandom: {
            const std::size_t i = n == 0 ? 0 : rng.index(n);
            neg = play_prefix(*env, x, pos.actions, i, req.budget.max_actions);
            neg = planners::rollout(*env, std::move(neg), random, req.budget, 1.0, derive_seed(seed, 2));
            break;
        }
        }
        if (serialize_trajectory(neg) == pos_text) {
            last_problem = "negative equals the positive";
            continue;
        }
        if (neg.oracle_reward && *neg.oracle_reward >= pos_reward) {
            last_problem = fmt::format("negative still scores {}", *neg.oracle_reward);
            continue;
        }
        return neg;
    }
    throw Error(ErrorCode::NegativeConstructionFailed,
                fmt::format("{} for {} after {} attempts: {}", strategy_name(req.strategy), x.id, req.max_retries + 1,
                            last_problem));
}

nlohmann::ordered_json SynthesisReport::to_json() const
{
    nlohmann::ordered_json j;
    j["instructions"] = instructions;
    j["collected"] = collected;
    j["collection_failures"] = collection_failures;
    j["refined"] = refined;
    j["refinement_failures"] = refinement_failures;
    j["negative_failures"] = negative_failures;
    j["dedups"] = dedups;
    j["validation_rejects"] = validation_rejects;
    j["pairs"] = pairs;
    j["strategies"] = strategies;
    j["tokens"] = {{"prompt", tokens.prompt}, {"completion", tokens.completion}, {"requests", tokens.requests}};
    return j;
}

std::vector<reward::PreferencePair> build_dataset(const std::vector<reward::PreferencePair>& items,
                                                  const std::optional<std::filesystem::path>& out,
                                                  SynthesisReport& report)
{
    std::vector<reward::PreferencePair> kept;
    std::set<std::string> seen;
    for (const auto& p : items) {
        const bool valid = !validate_trajectory(p.positive) && !validate_trajectory(p.negative)
            && serialize_trajectory(p.positive) != serialize_trajectory(p.negative)
            && !(p.positive.oracle_reward && p.negative.oracle_reward
                 && !(*p.positive.oracle_reward > *p.negative.oracle_reward));
        if (!valid) {
            ++report.validation_rejects;
            continue;
        }
        if (!seen.insert(pair_key(p)).second) {
            ++report.dedups;
            continue;
        }
        kept.push_back(p);
    }
    report.pairs = kept.size();
    if (out)
        reward::write_dataset(kept, *out);
    return kept;
}

PipelineResult run_pipeline(const PipelineConfig& config, const policy::Policy& collector,
                            const std::optional<std::filesystem::path>& out, const Llm* llm)
{
    PipelineResult result;
    SynthesisReport& report = result.report;
    const std::uint64_t base = named_stream(config.seed, "datagen");

    const auto raw = synthesize_instructions(config.world, config.mode, config.instructions,
                                             derive_seed(base, 0), llm, &report.tokens);
    report.instructions = raw.size();

    CollectStats stats;
    const auto collected = collect_trajectories(raw, collector, config.world, config.budget, derive_seed(base, 1),
                                                config.repeats, &stats);
    report.collected = collected.size();
    report.collection_failures = stats.failures;

    std::vector<reward::PreferencePair> items;
    for (std::size_t j = 0; j < collected.size(); ++j) {
        const auto& c = collected[j];
        std::optional<RefinedInstruction> refined;
        Trajectory positive;
        try {
            refined = refine_instruction(c.raw, c.trajectory, config.world, config.mode, llm, &report.tokens);
            if (refined) {
                auto env = config.world.make(refined->instruction, refined->goal);
                positive = replay(*env, refined->instruction, c.trajectory.actions, config.budget.max_actions);
                if (!positive.oracle_reward || *positive.oracle_reward < 1.0)
                    refined.reset();
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::RemoteError || e.code() == ErrorCode::TimeoutError)
                throw;
            spdlog::debug("refinement of {} failed: {}", c.raw.instruction.id, e.what());
            refined.reset();
        }
        if (!refined) {
            ++report.refinement_failures;
            continue;
        }
        ++report.refined;

        const std::uint64_t neg_seed = derive_seed(derive_seed(base, 2), j);
        const Strategy strategy = config.mix.draw(neg_seed);
        const NegativeRequest req{*refined, positive, strategy, config.world, collector, config.budget,
                                  derive_seed(neg_seed, 1), config.max_retries};
        try {
            reward::PreferencePair pair;
            pair.instruction = refined->instruction;
            pair.negative = make_negative(req);
            pair.positive = std::move(positive);
            pair.meta = {{"strategy", strategy_name(strategy)}, {"source_id", refined->source_id},
                         {"provenance", c.raw.provenance}};
            ++report.strategies[std::string(strategy_name(strategy))];
            items.push_back(std::move(pair));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NegativeConstructionFailed)
                throw;
            ++report.negative_failures;
            spdlog::debug("{}", e.what());
        }
    }
    result.pairs = build_dataset(items, out, report);
    return result;
}

} // namespace rplan::datagen
