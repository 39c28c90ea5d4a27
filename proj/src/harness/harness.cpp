#include "rplan/harness.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "rplan/game24.hpp"
#include "rplan/rng.hpp"
#include "rplan/shop.hpp"

#ifndef RPLAN_VERSION
#define RPLAN_VERSION "0.0.0"
#endif

namespace rplan::harness {

namespace fs = std::filesystem;

std::string_view version()
{
    return RPLAN_VERSION;
}

namespace {

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<std::string> split_key(std::string_view dotted)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        parts.emplace_back(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (parts.back().empty())
            throw Error(ErrorCode::ConfigError, fmt::format("malformed key '{}'", dotted));
        if (dot == std::string_view::npos)
            break;
        start = dot + 1;
    }
    return parts;
}

bool secret_like(std::string_view dotted)
{
    const auto last = dotted.substr(dotted.rfind('.') == std::string_view::npos ? 0 : dotted.rfind('.') + 1);
    for (std::string_view s : {"api_key", "token", "secret", "password"})
        if (last == s || (last.size() > s.size() && last.substr(last.size() - s.size()) == s))
            return true;
    return false;
}

std::string interpolate(std::string_view key, std::string text)
{
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("${", pos);
        if (open == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        const auto close = text.find('}', open);
        if (close == std::string::npos)
            throw Error(ErrorCode::ConfigError, fmt::format("unterminated ${{ in {}", key));
        out += text.substr(pos, open - pos);
        const std::string var = text.substr(open + 2, close - open - 2);
        const char* value = std::getenv(var.c_str());
        if (!value)
            throw Error(ErrorCode::ConfigError, fmt::format("{} refers to unset environment variable {}", key, var));
        out += value;
        pos = close + 1;
    }
    return out;
}

std::string hex64(std::uint64_t v)
{
    return fmt::format("{:016x}", v);
}

fs::path output_dir(const Config& config, const CommandOptions& options, std::string_view fallback)
{
    // --out is relative to the working directory; an `out` key, like every other path, to base_dir.
    fs::path out = options.out ? *options.out : config.has("out") ? config.path("out") : fs::path(fallback);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec)
        throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", out.string(), ec.message()));
    return out;
}

void apply_options(Config& config, const CommandOptions& options)
{
    if (options.seed)
        config.set("seeds", fmt::format("[{}]", *options.seed));
    if (options.out)
        config.set_string("out", fs::absolute(*options.out).lexically_normal().string());
}

void write_provenance(const Config& config, const fs::path& dir)
{
    write_file(dir / "config.toml", config.snapshot());
    std::string seeds;
    for (auto s : config.seeds())
        seeds += std::to_string(s) + "\n";
    write_file(dir / "seeds.txt", seeds);
    write_file(dir / "VERSION", std::string(version()) + "\n");
}

policy::ChatConfig chat_config(const Config& c, std::string_view section)
{
    const auto key = [&](std::string_view k) { return fmt::format("{}.{}", section, k); };
    policy::ChatConfig cfg;
    cfg.base_url = c.get_string(key("base_url"), "");
    cfg.model = c.get_string(key("model"), "");
    cfg.auth_env = c.get_string(key("auth_env"), "");
    cfg.api_key = c.get_string(key("api_key"), "");
    cfg.max_tokens = static_cast<int>(c.get_int(key("max_tokens"), cfg.max_tokens));
    cfg.parallelism = static_cast<int>(c.get_int(key("parallelism"), cfg.parallelism));
    cfg.retry.max_retries = static_cast<int>(c.get_int(key("max_retries"), cfg.retry.max_retries));
    cfg.retry.timeout = std::chrono::seconds(c.get_int(key("timeout_s"), cfg.retry.timeout.count()));
    cfg.retry.initial_backoff = std::chrono::milliseconds(c.get_int(key("backoff_ms"), cfg.retry.initial_backoff.count()));
    if (cfg.base_url.empty())
        throw Error(ErrorCode::ConfigError, fmt::format("{}.base_url is required", section));
    return cfg;
}

std::size_t positive(std::int64_t v, std::string_view what)
{
    if (v < 1)
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be at least 1", what));
    return static_cast<std::size_t>(v);
}

fs::path existing(const Config& c, std::string_view key)
{
    if (!c.has(key))
        throw Error(ErrorCode::ConfigError, fmt::format("{} is required", key));
    const fs::path p = c.path(key);
    if (!fs::exists(p))
        throw Error(ErrorCode::ConfigError, fmt::format("{} = {} does not exist", key, p.string()));
    return p;
}

std::shared_ptr<const shop::Catalog> load_catalog(const Config& c)
{
    return std::make_shared<const shop::Catalog>(shop::load_catalog(existing(c, "environment.catalog")));
}

std::string safe_file_name(std::string name)
{
    for (auto& ch : name)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
            ch = '_';
    return name;
}

} // namespace

// ---- Config ----

struct Config::Impl {
    toml::table table;
    fs::path base_dir;

    const toml::node* find(std::string_view dotted) const
    {
        const toml::node* node = &table;
        for (const auto& part : split_key(dotted)) {
            const auto* t = node->as_table();
            if (!t)
                return nullptr;
            node = t->get(part);
            if (!node)
                return nullptr;
        }
        return node;
    }
};

Config::Config()
    : impl_(std::make_unique<Impl>())
{
}

Config::Config(const Config& other)
    : impl_(std::make_unique<Impl>(*other.impl_))
{
}

Config& Config::operator=(const Config& other)
{
    if (this != &other)
        impl_ = std::make_unique<Impl>(*other.impl_);
    return *this;
}

Config::~Config() = default;

Config Config::load(const fs::path& path)
{
    if (!fs::exists(path))
        throw Error(ErrorCode::ConfigError, "config file " + path.string() + " does not exist");
    return parse(read_file(path), fs::absolute(path).parent_path());
}

Config Config::parse(std::string_view text, const fs::path& base_dir)
{
    Config c;
    try {
        c.impl_->table = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorCode::ConfigError, fmt::format("line {} column {}: {}", e.source().begin.line,
                                                        e.source().begin.column, e.description()));
    }
    c.impl_->base_dir = base_dir;
    if (auto b = c.get_string("base_dir")) {
        // A relative base_dir is taken from where the text came from, then pinned in the table.
        fs::path resolved(*b);
        if (resolved.is_relative() && !base_dir.empty()) {
            resolved = (base_dir / resolved).lexically_normal();
            c.impl_->table.insert_or_assign("base_dir", resolved.string());
        }
        c.impl_->base_dir = resolved;
    } else if (!base_dir.empty())
        c.impl_->table.insert_or_assign("base_dir", base_dir.string());
    return c;
}

void Config::set(std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw Error(ErrorCode::ConfigError, fmt::format("override '{}' is not key=value", assignment));
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

static toml::table& parent_of(toml::table& root, const std::vector<std::string>& parts)
{
    toml::table* t = &root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        toml::node* n = t->get(parts[i]);
        if (!n) {
            t->insert_or_assign(parts[i], toml::table{});
            n = t->get(parts[i]);
        }
        t = n->as_table();
        if (!t)
            throw Error(ErrorCode::ConfigError, fmt::format("{} is not a table", parts[i]));
    }
    return *t;
}

void Config::set(std::string_view dotted_key, std::string_view value)
{
    const auto parts = split_key(dotted_key);
    toml::table& t = parent_of(impl_->table, parts);
    toml::table parsed;
    try {
        parsed = toml::parse("v = " + std::string(value));
    } catch (const toml::parse_error&) {
        t.insert_or_assign(parts.back(), std::string(value));
        return;
    }
    parsed.get("v")->visit([&](auto&& v) { t.insert_or_assign(parts.back(), v); });
}

void Config::set_string(std::string_view dotted_key, std::string value)
{
    const auto parts = split_key(dotted_key);
    parent_of(impl_->table, parts).insert_or_assign(parts.back(), std::move(value));
}

bool Config::has(std::string_view dotted_key) const
{
    return impl_->find(dotted_key) != nullptr;
}

std::optional<std::string> Config::get_string(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    const auto v = n->value<std::string>();
    if (!v)
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be a string", key));
    return secret_like(key) ? interpolate(key, *v) : *v;
}

std::optional<std::int64_t> Config::get_int(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    if (!n->is_integer())
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be an integer", key));
    return n->value<std::int64_t>();
}

std::optional<double> Config::get_double(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    if (!n->is_number())
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be a number", key));
    return n->value<double>();
}

std::optional<bool> Config::get_bool(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    if (!n->is_boolean())
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be true or false", key));
    return n->value<bool>();
}

std::optional<std::vector<std::string>> Config::get_strings(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr)
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be an array of strings", key));
    std::vector<std::string> out;
    for (const auto& e : *arr) {
        auto v = e.value<std::string>();
        if (!v)
            throw Error(ErrorCode::ConfigError, fmt::format("{} must be an array of strings", key));
        out.push_back(*v);
    }
    return out;
}

std::optional<std::vector<std::int64_t>> Config::get_ints(std::string_view key) const
{
    const auto* n = impl_->find(key);
    if (!n)
        return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr)
        throw Error(ErrorCode::ConfigError, fmt::format("{} must be an array of integers", key));
    std::vector<std::int64_t> out;
    for (const auto& e : *arr) {
        if (!e.is_integer())
            throw Error(ErrorCode::ConfigError, fmt::format("{} must be an array of integers", key));
        out.push_back(*e.value<std::int64_t>());
    }
    return out;
}

std::string Config::get_string(std::string_view key, std::string fallback) const
{
    return get_string(key).value_or(std::move(fallback));
}

std::int64_t Config::get_int(std::string_view key, std::int64_t fallback) const
{
    return get_int(key).value_or(fallback);
}

double Config::get_double(std::string_view key, double fallback) const
{
    return get_double(key).value_or(fallback);
}

bool Config::get_bool(std::string_view key, bool fallback) const
{
    return get_bool(key).value_or(fallback);
}

fs::path Config::path(std::string_view key) const
{
    const auto v = get_string(key);
    if (!v)
        throw Error(ErrorCode::ConfigError, fmt::format("{} is required", key));
    fs::path p(*v);
    if (p.is_relative() && !impl_->base_dir.empty())
        p = impl_->base_dir / p;
    return p.lexically_normal();
}

std::optional<fs::path> Config::optional_path(std::string_view key) const
{
    if (!has(key))
        return std::nullopt;
    return path(key);
}

std::vector<std::uint64_t> Config::seeds() const
{
    if (auto list = get_ints("seeds")) {
        if (list->empty())
            throw Error(ErrorCode::ConfigError, "seeds must not be empty");
        std::vector<std::uint64_t> out;
        for (auto s : *list) {
            if (s < 0)
                throw Error(ErrorCode::ConfigError, "seeds must be non-negative");
            out.push_back(static_cast<std::uint64_t>(s));
        }
        return out;
    }
    const auto s = get_int("seed", 0);
    if (s < 0)
        throw Error(ErrorCode::ConfigError, "seed must be non-negative");
    return {static_cast<std::uint64_t>(s)};
}

std::string Config::snapshot() const
{
    std::ostringstream out;
    out << impl_->table << "\n";
    return out.str();
}

const fs::path& Config::base_dir() const noexcept
{
    return impl_->base_dir;
}

// ---- builders ----

std::shared_ptr<const policy::Policy> make_policy(const Config& c)
{
    const std::string backend = c.get_string("policy.backend", "random");
    if (backend == "random")
        return std::make_shared<policy::RandomPolicy>();
    if (backend == "solver")
        return std::make_shared<policy::Game24SolverPolicy>(c.get_bool("policy.exhaustive", false),
                                                            c.get_double("policy.other_weight", 0.01));
    if (backend == "scripted")
        return std::make_shared<policy::ScriptedPolicy>(
            policy::ScriptedPolicy::from_json(read_file(existing(c, "policy.script"))));
    if (backend == "remote") {
        auto client = std::make_shared<const policy::ChatClient>(chat_config(c, "policy"));
        auto prompt = c.has("policy.prompt") ? policy::PromptTemplate::load(existing(c, "policy.prompt").string())
                                             : policy::PromptTemplate::defaults();
        return std::make_shared<policy::RemotePolicy>(std::move(client), std::move(prompt));
    }
    throw Error(ErrorCode::ConfigError, fmt::format("unknown policy backend '{}'", backend));
}

std::shared_ptr<const reward::RewardModel> make_reward(const Config& c, std::string* backend_label)
{
    const std::string choice = c.get_string("reward.backend", "oracle");
    const auto colon = choice.find(':');
    const std::string kind = choice.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : choice.substr(colon + 1);

    std::shared_ptr<const reward::RewardModel> base;
    if (kind == "oracle") {
        base = std::make_shared<reward::OracleReward>();
    } else if (kind == "learned") {
        if (arg.empty())
            throw Error(ErrorCode::ConfigError, "learned reward needs a model path (learned:<path>)");
        fs::path p(arg);
        if (p.is_relative())
            p = c.base_dir() / p;
        if (!fs::exists(p))
            throw Error(ErrorCode::ConfigError, "reward model " + p.string() + " does not exist");
        base = std::make_shared<reward::LinearReward>(reward::load_model(p));
    } else if (kind == "judge") {
        if (arg.empty())
            throw Error(ErrorCode::ConfigError, "judge reward needs an endpoint (judge:<base url>)");
        Config copy = c;
        copy.set_string("reward.base_url", arg);
        auto client = std::make_shared<const policy::ChatClient>(chat_config(copy, "reward"));
        const std::string tmpl = c.has("reward.judge_template") ? read_file(existing(c, "reward.judge_template"))
                                                                : reward::default_judge_template();
        base = std::make_shared<reward::JudgeReward>(std::move(client), tmpl);
    } else if (kind == "remote") {
        if (arg.empty())
            throw Error(ErrorCode::ConfigError, "remote reward needs a URL (remote:<url>)");
        base = std::make_shared<reward::RemoteReward>(arg, static_cast<int>(c.get_int("reward.max_retries", 2)),
                                                      static_cast<int>(c.get_int("reward.timeout_s", 60)));
    } else {
        throw Error(ErrorCode::ConfigError, fmt::format("unknown reward backend '{}'", choice));
    }

    const double lambda = c.get_double("reward.length_penalty", 0.0);
    const double mu = c.get_double("reward.price_penalty", 0.0);
    std::string label = kind;
    if (lambda != 0.0 || mu != 0.0) {
        base = std::make_shared<reward::CompositeReward>(std::move(base), lambda, mu);
        if (lambda != 0.0)
            label += fmt::format("+len{:g}", lambda);
        if (mu != 0.0)
            label += fmt::format("+price{:g}", mu);
    }
    if (backend_label)
        *backend_label = label;
    return base;
}

planners::Budget make_budget(const Config& c)
{
    planners::Budget b;
    b.max_trajectories = positive(c.get_int("budget.max_trajectories", 10), "budget.max_trajectories");
    b.max_actions = positive(c.get_int("budget.max_actions", 10), "budget.max_actions");
    b.top_k = positive(c.get_int("budget.top_k", 10), "budget.top_k");
    return b;
}

planners::PlannerConfig make_planner(const Config& c)
{
    planners::PlannerConfig p;
    p.kind = planners::parse_planner(c.get_string("planner.kind", "sampling"));
    p.budget = make_budget(c);
    p.n = positive(c.get_int("planner.n", static_cast<std::int64_t>(p.budget.max_trajectories)), "planner.n");
    const std::string env = c.get_string("environment.kind", "game24");
    p.reflexion.max_trials = positive(c.get_int("planner.max_trials", 10), "planner.max_trials");
    p.reflexion.threshold = c.get_double("planner.threshold", env == "shop" ? 0.7 : 0.99);
    p.reflexion.selection = planners::parse_selection_rule(c.get_string("planner.selection_rule", "last"));
    p.reflexion.temperature = c.get_double("planner.temperature", 1.0);
    p.mcts.exploration_c = c.get_double("planner.exploration_c", p.mcts.exploration_c);
    return p;
}

std::vector<planners::SuiteTask> make_suite(const Config& c)
{
    const auto kind = datagen::parse_env_kind(c.get_string("environment.kind", "game24"));
    std::vector<planners::SuiteTask> tasks;
    if (kind == datagen::EnvKind::Game24) {
        std::vector<game24::Puzzle> puzzles;
        if (auto list = c.get_strings("environment.puzzles"))
            for (const auto& s : *list)
                puzzles.push_back(game24::parse_puzzle(s));
        if (c.has("environment.puzzle_file")) {
            std::istringstream in(read_file(existing(c, "environment.puzzle_file")));
            std::string line;
            while (std::getline(in, line))
                if (!trim(line).empty() && trim(line)[0] != '#')
                    puzzles.push_back(game24::parse_puzzle(line));
        }
        if (c.has("environment.generate")) {
            const auto n = positive(c.get_int("environment.generate", 1), "environment.generate");
            const bool solvable_only = c.get_bool("environment.solvable_only", false);
            // Held-out suites skip any multiset that a training dataset already covers.
            std::set<std::array<int, 4>> excluded;
            if (c.has("environment.exclude_dataset")) {
                for (const auto& pair : reward::load_dataset(existing(c, "environment.exclude_dataset"))) {
                    auto nums = game24::parse_puzzle(pair.instruction.text).numbers;
                    std::sort(nums.begin(), nums.end());
                    excluded.insert(nums);
                }
            }
            Rng rng(named_stream(static_cast<std::uint64_t>(c.get_int("environment.suite_seed", 0)), "suite"));
            std::size_t draws = 0;
            while (puzzles.size() < n) {
                if (++draws > 1000000)
                    throw Error(ErrorCode::ConfigError, "environment.generate: too few puzzles left after exclusions");
                const auto p = game24::random_puzzle(rng);
                auto key = p.numbers;
                std::sort(key.begin(), key.end());
                if (excluded.count(key))
                    continue;
                if (!solvable_only || game24::oracle_solve(p).solvable)
                    puzzles.push_back(p);
            }
        }
        auto proto = std::make_shared<const game24::Game24Environment>();
        for (std::size_t i = 0; i < puzzles.size(); ++i)
            tasks.push_back({{fmt::format("g24-{:03}", i), game24::puzzle_instruction(puzzles[i])}, proto});
    } else {
        const auto catalog = load_catalog(c);
        auto goals = shop::load_goals(existing(c, "environment.goals"));
        if (auto limit = c.get_int("environment.limit"))
            goals.resize(std::min(goals.size(), static_cast<std::size_t>(std::max<std::int64_t>(0, *limit))));
        for (auto& g : goals)
            tasks.push_back({g.instruction, std::make_shared<const shop::ShopEnvironment>(catalog, g.goal)});
    }
    if (tasks.empty())
        throw Error(ErrorCode::ConfigError, "the environment section defines no tasks");
    return tasks;
}

reward::TrainConfig make_train_config(const Config& c)
{
    reward::TrainConfig t;
    t.epochs = positive(c.get_int("train.epochs", 10), "train.epochs");
    t.batch_size = positive(c.get_int("train.batch_size", 32), "train.batch_size");
    t.learning_rate = c.get_double("train.learning_rate", 0.1);
    if (!(t.learning_rate > 0.0))
        throw Error(ErrorCode::ConfigError, "train.learning_rate must be positive");
    t.target = reward::parse_target(c.get_string("train.target", "pairwise"));
    t.dimension = positive(c.get_int("train.dimension", static_cast<std::int64_t>(reward::kDefaultDimension)),
                           "train.dimension");
    if ((t.dimension & (t.dimension - 1)) != 0)
        throw Error(ErrorCode::ConfigError, "train.dimension must be a power of two");
    t.seed = named_stream(c.seeds().front(), "train");
    return t;
}

// ---- commands ----

CommandResult cmd_synthesize(Config config, const CommandOptions& options)
{
    apply_options(config, options);
    datagen::PipelineConfig p;
    p.world.kind = datagen::parse_env_kind(config.get_string("environment.kind", "game24"));
    if (p.world.kind == datagen::EnvKind::Shop)
        p.world.catalog = load_catalog(config);
    p.mode = datagen::parse_mode(config.get_string("synthesize.mode", "template"));
    p.instructions = static_cast<std::size_t>(std::max<std::int64_t>(0, config.get_int("synthesize.instructions", 100)));
    p.repeats = positive(config.get_int("synthesize.repeats", 1), "synthesize.repeats");
    p.mix.perturb_action = config.get_double("synthesize.strategies.perturb_action", p.mix.perturb_action);
    p.mix.truncate = config.get_double("synthesize.strategies.truncate", p.mix.truncate);
    p.mix.diverge_random = config.get_double("synthesize.strategies.diverge_random", p.mix.diverge_random);
    (void)p.mix.draw(0); // validates the weights
    p.max_retries = static_cast<std::size_t>(std::max<std::int64_t>(0, config.get_int("synthesize.max_retries", 5)));
    p.budget = make_budget(config);
    p.seed = config.seeds().front();
    const auto collector = make_policy(config);

    std::optional<datagen::Llm> llm;
    if (p.mode == datagen::Mode::Llm) {
        llm.emplace();
        llm->client = std::make_shared<const policy::ChatClient>(chat_config(config, "synthesize"));
        llm->prompts = datagen::Prompts::load(p.world.kind, config.optional_path("synthesize.synthesize_prompt"),
                                              config.optional_path("synthesize.refine_prompt"));
    }

    const fs::path dir = output_dir(config, options, "runs/synthesize");
    const fs::path dataset = dir / "dataset.jsonl";
    spdlog::info("synthesize: {} instructions x {} repeats, collector {}", p.instructions, p.repeats, collector->name());
    const auto result = datagen::run_pipeline(p, *collector, dataset, llm ? &*llm : nullptr);
    write_provenance(config, dir);
    auto report = result.report.to_json();
    const std::string digest = hex64(fnv1a64(read_file(dataset)));
    report["dataset_digest"] = digest;
    write_file(dir / "report.json", report.dump(2) + "\n");

    CommandResult r;
    r.out_dir = dir;
    r.summary = fmt::format("pairs: {}\ndataset: {}\ndigest: {}\nreport: {}\n", result.report.pairs, dataset.string(),
                            digest, result.report.to_json().dump());
    return r;
}

CommandResult cmd_train(Config config, const CommandOptions& options)
{
    apply_options(config, options);
    const auto tc = make_train_config(config);
    auto data = reward::load_dataset(existing(config, "train.dataset"));
    if (data.empty())
        throw Error(ErrorCode::EmptyDataset, "training dataset is empty");

    std::vector<reward::PreferencePair> train_set;
    std::vector<reward::PreferencePair> heldout;
    if (config.has("train.eval_dataset")) {
        train_set = std::move(data);
        heldout = reward::load_dataset(existing(config, "train.eval_dataset"));
    } else {
        const double fraction = config.get_double("train.holdout_fraction", 0.2);
        if (fraction < 0.0 || fraction >= 1.0)
            throw Error(ErrorCode::ConfigError, "train.holdout_fraction must be in [0, 1)");
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        Rng rng(derive_seed(tc.seed, 0x401d));
        rng.shuffle(order.begin(), order.end());
        const auto n_held = static_cast<std::size_t>(fraction * static_cast<double>(data.size()));
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < n_held ? heldout : train_set).push_back(data[order[i]]);
        if (train_set.empty())
            throw Error(ErrorCode::EmptyDataset, "nothing left to train on after the hold-out split");
    }

    spdlog::info("train: {} pairs ({} held out), D={}", train_set.size(), heldout.size(), tc.dimension);
    const auto result = reward::train(train_set, tc);
    const fs::path dir = output_dir(config, options, "runs/train");
    reward::save_model(result.params, dir / "model.json");
    std::string curve = "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
        curve += fmt::format("{},{:.9f}\n", e + 1, result.epoch_loss[e]);
    write_file(dir / "loss.csv", curve);
    write_provenance(config, dir);

    const double train_acc = reward::eval_pairwise_accuracy(result.params, train_set);
    const double held_acc = heldout.empty() ? train_acc : reward::eval_pairwise_accuracy(result.params, heldout);
    nlohmann::ordered_json report;
    report["target"] = reward::target_name(tc.target);
    report["train_pairs"] = train_set.size();
    report["heldout_pairs"] = heldout.size();
    report["train_accuracy"] = train_acc;
    report["heldout_accuracy"] = held_acc;
    report["final_loss"] = result.epoch_loss.back();
    report["digest"] = result.params.digest;
    write_file(dir / "train_report.json", report.dump(2) + "\n");

    CommandResult r;
    r.out_dir = dir;
    r.summary = fmt::format("target: {}\ntrain pairs: {}\nheld-out pairs: {}\ntrain pairwise accuracy: {:.4f}\n"
                            "held-out pairwise accuracy: {:.4f}\nmodel: {}\n",
                            reward::target_name(tc.target), train_set.size(), heldout.size(), train_acc, held_acc,
                            (dir / "model.json").string());
    return r;
}

CommandResult cmd_eval_rm(Config config, const CommandOptions& options)
{
    apply_options(config, options);
    const auto params = reward::load_model(existing(config, "eval.model"));
    if (auto d = config.get_int("eval.dimension"); d && static_cast<std::size_t>(*d) != params.dimension)
        throw Error(ErrorCode::DimensionMismatch,
                    fmt::format("dataset recipe uses D={}, model has D={}", *d, params.dimension));
    const auto data = reward::load_dataset(existing(config, "eval.dataset"));
    const double acc = reward::eval_pairwise_accuracy(params, data);

    const fs::path dir = output_dir(config, options, "runs/eval");
    nlohmann::ordered_json report;
    report["pairs"] = data.size();
    report["pairwise_accuracy"] = acc;
    report["model_digest"] = params.digest;
    write_file(dir / "eval.json", report.dump(2) + "\n");
    write_provenance(config, dir);

    CommandResult r;
    r.out_dir = dir;
    r.summary = fmt::format("pairs: {}\npairwise accuracy: {:.4f}\n", data.size(), acc);
    return r;
}

CommandResult cmd_plan(Config config, const CommandOptions& options)
{
    apply_options(config, options);
    const auto tasks = make_suite(config);
    const auto policy = make_policy(config);
    std::string label;
    const auto reward = make_reward(config, &label);
    const auto planner = make_planner(config);
    const auto seeds = config.seeds();
    const auto workers = positive(config.get_int("workers", 1), "workers");

    spdlog::info("plan: {} tasks, {} seeds, planner {}, policy {}, reward {}", tasks.size(), seeds.size(),
                 planners::planner_name(planner.kind), policy->name(), label);
    const auto suite = planners::evaluate_suite(tasks, planner, *policy, *reward, label, seeds, workers);

    const fs::path dir = output_dir(config, options, "runs/plan");
    write_provenance(config, dir);
    const std::string snapshot = config.snapshot();
    write_file(dir / "run_id.txt", hex64(fnv1a64(snapshot + std::string(version()))) + "\n");
    const std::string csv = planners::metrics_csv(suite.rows);
    write_file(dir / "metrics.csv", csv);
    const std::string table = planners::render_table(planners::parse_metrics_csv(csv));
    write_file(dir / "table.txt", table);
    fs::create_directories(dir / "trajectories");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        std::string lines;
        for (const auto& t : suite.best[i])
            lines += serialize_trajectory(t) + "\n";
        write_file(dir / "trajectories" / (safe_file_name(tasks[i].instruction.id) + ".jsonl"), lines);
    }

    CommandResult r;
    spdlog::info("plan: wrote {}", dir.string());
    r.out_dir = dir;
    r.summary = table;
    return r;
}

CommandResult cmd_report(const std::vector<fs::path>& run_dirs, const CommandOptions& options)
{
    if (run_dirs.empty())
        throw Error(ErrorCode::ConfigError, "report needs at least one run directory");
    std::vector<planners::MetricsRow> rows;
    std::set<std::string> seen;
    for (const auto& dir : run_dirs) {
        const fs::path metrics = dir / "metrics.csv";
        if (!fs::exists(metrics))
            throw Error(ErrorCode::IoError, fmt::format("{} has no metrics.csv", dir.string()));
        const std::string text = read_file(metrics);
        std::string run_id = fs::exists(dir / "run_id.txt") ? trim(read_file(dir / "run_id.txt")) : hex64(fnv1a64(text));
        if (!seen.insert(run_id).second) {
            spdlog::info("{}: run {} already merged", dir.string(), run_id);
            continue;
        }
        auto part = planners::parse_metrics_csv(text);
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    const std::string table = planners::render_table(rows);
    CommandResult r;
    r.summary = table;
    if (options.out) {
        fs::create_directories(*options.out);
        write_file(*options.out / "report.txt", table);
        write_file(*options.out / "metrics.csv", planners::metrics_csv(rows));
        r.out_dir = *options.out;
    }
    return r;
}

int exit_code_for(ErrorCode code)
{
    return code == ErrorCode::ConfigError ? 2 : 3;
}

} // namespace rplan::harness
