#include "rplan/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rplan/game24.hpp"
#include "rplan/rng.hpp"

namespace rplan::policy {

std::vector<Proposal> select(std::vector<Proposal> candidates, double temperature, std::uint64_t seed, std::size_t k)
{
    if (k == 0 || candidates.empty())
        return {};
    if (temperature <= 0.0) {
        std::stable_sort(candidates.begin(), candidates.end(), [](const Proposal& a, const Proposal& b) {
            if (a.weight != b.weight)
                return a.weight > b.weight;
            return a.action.text < b.action.text;
        });
        candidates.resize(std::min(k, candidates.size()));
        return candidates;
    }

    // log w / T, shifted by the max for stability.
    std::vector<double> logits;
    logits.reserve(candidates.size());
    for (const auto& c : candidates)
        logits.push_back(std::log(std::max(c.weight, 1e-300)) / temperature);
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> mass;
    mass.reserve(logits.size());
    for (double l : logits)
        mass.push_back(std::exp(l - top));

    Rng rng(seed);
    std::vector<Proposal> out;
    const std::size_t take = std::min(k, candidates.size());
    while (out.size() < take) {
        double total = 0.0;
        for (double m : mass)
            total += m;
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        for (; pick + 1 < mass.size(); ++pick) {
            if (u < mass[pick])
                break;
            u -= mass[pick];
        }
        out.push_back(std::move(candidates[pick]));
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
        mass.erase(mass.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

std::string Policy::reflect(const Trajectory& failed, double score, const std::vector<std::string>&) const
{
    std::ostringstream out;
    out << "Trial " << "scored " << score << ".";
    if (!failed.actions.empty())
        out << " Avoid repeating the plan that ended with '" << failed.actions.back().text << "'.";
    return out.str();
}

std::vector<Proposal> RandomPolicy::propose(const PolicyContext& ctx, std::size_t k) const
{
    if (ctx.valid_actions.empty())
        throw Error(ErrorCode::NoValidActions, "random policy needs valid actions");
    std::vector<Proposal> candidates;
    candidates.reserve(ctx.valid_actions.size());
    for (const auto& a : ctx.valid_actions)
        candidates.push_back(Proposal{a, 1.0, std::nullopt, false});
    return select(std::move(candidates), ctx.temperature, derive_seed(ctx.seed, ctx.trajectory.size()), k);
}

std::string ScriptedPolicy::history_key(std::string_view instruction_id, const std::vector<Action>& actions)
{
    std::string key(instruction_id);
    key += '\x1f';
    for (const auto& a : actions) {
        key += a.text;
        key += '\x1e';
    }
    return key;
}

ScriptedPolicy::Script& ScriptedPolicy::script(std::size_t index)
{
    if (scripts_.size() <= index)
        scripts_.resize(index + 1);
    return scripts_[index];
}

void ScriptedPolicy::add_route(std::string_view instruction_id, const std::vector<std::string>& actions,
                               double weight, std::size_t script_index)
{
    auto& table = script(script_index).by_history;
    std::vector<Action> prefix;
    for (const auto& a : actions) {
        auto& entries = table[history_key(instruction_id, prefix)];
        auto it = std::find_if(entries.begin(), entries.end(), [&](const Proposal& p) { return p.action.text == a; });
        if (it == entries.end())
            entries.push_back(Proposal{Action{a}, weight, std::nullopt, false});
        else
            it->weight += weight;
        prefix.push_back(Action{a});
    }
}

void ScriptedPolicy::add_observation_rule(std::string observation, std::string action, double weight,
                                          std::size_t script_index)
{
    script(script_index).by_observation[std::move(observation)].push_back(
        Proposal{Action{std::move(action)}, weight, std::nullopt, false});
}

std::vector<Proposal> ScriptedPolicy::propose(const PolicyContext& ctx, std::size_t k) const
{
    const std::size_t memory = ctx.reflections ? ctx.reflections->size() : 0;
    if (!scripts_.empty()) {
        const Script& s = scripts_[std::min(memory, scripts_.size() - 1)];
        const auto seed = derive_seed(ctx.seed, ctx.trajectory.size());
        if (auto it = s.by_history.find(history_key(ctx.instruction().id, ctx.trajectory.actions));
            it != s.by_history.end())
            return select(it->second, ctx.temperature, seed, k);
        if (auto it = s.by_observation.find(ctx.trajectory.last_observation().text); it != s.by_observation.end())
            return select(it->second, ctx.temperature, seed, k);
    }
    if (fallback_)
        return {Proposal{Action{*fallback_}, 1.0, std::nullopt, true}};
    if (ctx.valid_actions.empty())
        throw Error(ErrorCode::NoValidActions, "scripted policy has no rule and no valid action");
    return {Proposal{ctx.valid_actions.front(), 1.0, std::nullopt, false}};
}

std::string ScriptedPolicy::reflect(const Trajectory&, double, const std::vector<std::string>&) const
{
    return reflection_;
}

ScriptedPolicy ScriptedPolicy::from_json(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text.begin(), json_text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("script: ") + e.what());
    }
    ScriptedPolicy p;
    try {
        for (const auto& r : doc.value("routes", nlohmann::json::array()))
            p.add_route(r.at("instruction_id").get<std::string>(), r.at("actions").get<std::vector<std::string>>(),
                        r.value("weight", 1.0), r.value("script", std::size_t{0}));
        for (const auto& r : doc.value("observations", nlohmann::json::array()))
            p.add_observation_rule(r.at("observation").get<std::string>(), r.at("action").get<std::string>(),
                                   r.value("weight", 1.0), r.value("script", std::size_t{0}));
        if (doc.contains("fallback"))
            p.set_fallback(doc.at("fallback").get<std::string>());
        if (doc.contains("reflection"))
            p.set_reflection(doc.at("reflection").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("script: ") + e.what());
    }
    return p;
}

std::vector<Proposal> Game24SolverPolicy::propose(const PolicyContext& ctx, std::size_t k) const
{
    std::optional<game24::NumberPool> pool;
    for (auto it = ctx.trajectory.observations.rbegin(); it != ctx.trajectory.observations.rend() && !pool; ++it)
        pool = game24::parse_pool(it->text);
    if (!pool || pool->size() < 2)
        throw Error(ErrorCode::NoValidActions, "no number pool to play from");

    std::vector<Proposal> candidates;
    const auto solution = game24::oracle_solve(*pool);
    std::string witness_text;
    if (solution.solvable) {
        const auto& first = solution.witness.front();
        witness_text = game24::render_step(first, game24::apply_step(*pool, first));
        candidates.push_back(Proposal{Action{witness_text}, 1.0, std::nullopt, false});
    }
    if (exhaustive_ || !solution.solvable) {
        const double w = solution.solvable ? other_weight_ : 1.0;
        if (w > 0.0)
            for (auto& a : game24::enumerate_actions(*pool))
                if (a.text != witness_text)
                    candidates.push_back(Proposal{std::move(a), w, std::nullopt, false});
    }
    return select(std::move(candidates), ctx.temperature, derive_seed(ctx.seed, ctx.trajectory.size()), k);
}

ReactReply parse_react(std::string_view text)
{
    constexpr std::string_view kAction = "Action:";
    constexpr std::string_view kThought = "Thought:";
    const auto apos = text.rfind(kAction);
    if (apos == std::string_view::npos)
        throw Error(ErrorCode::MissingAction, "no 'Action:' in reply");
    std::string_view rest = text.substr(apos + kAction.size());
    // Skip leading blank lines, then cut at the first newline.
    std::string action;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        action = trim(rest.substr(0, nl));
        if (!action.empty() || nl == std::string_view::npos)
            break;
        rest = rest.substr(nl + 1);
    }
    if (action.empty())
        throw Error(ErrorCode::MissingAction, "empty 'Action:' in reply");

    ReactReply reply;
    reply.action = Action{action};
    const auto tpos = text.substr(0, apos).rfind(kThought);
    if (tpos != std::string_view::npos)
        reply.thought = trim(text.substr(tpos + kThought.size(), apos - tpos - kThought.size()));
    return reply;
}

std::string render_react(std::string_view thought, const Action& action)
{
    if (thought.empty())
        return "Action: " + action.text;
    return "Thought: " + std::string(thought) + "\nAction: " + action.text;
}

ChatClient::ChatClient(ChatConfig config)
    : config_(std::move(config))
    , in_flight_(std::clamp(config_.parallelism, 1, 1024))
{
    if (config_.base_url.empty())
        throw Error(ErrorCode::ConfigError, "chat endpoint needs a base_url");
    if (!config_.api_key.empty())
        token_ = config_.api_key;
    else if (!config_.auth_env.empty())
        if (const char* v = std::getenv(config_.auth_env.c_str()))
            token_ = v;
}

Completion ChatClient::complete(const std::vector<ChatMessage>& messages, double temperature,
                                std::optional<std::uint64_t> seed) const
{
    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array();
    std::size_t prompt_chars = 0;
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        prompt_chars += m.content.size();
    }
    body["temperature"] = temperature;
    if (seed)
        body["seed"] = *seed;
    body["max_tokens"] = config_.max_tokens;

    in_flight_.acquire();
    nlohmann::json reply;
    try {
        reply = http::post_json(http::join_url(config_.base_url, "/chat/completions"), body, config_.retry, token_);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();

    Completion c;
    try {
        c.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw RemoteError(200, reply.dump().substr(0, 200),
                          std::string("response lacks choices[0].message.content: ") + e.what());
    }
    if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
        c.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
        c.completion_tokens = u->value("completion_tokens", std::size_t{0});
        c.usage_reported = true;
    } else {
        c.prompt_tokens = prompt_chars / 4;
        c.completion_tokens = c.text.size() / 4;
    }
    return c;
}

std::string render_transcript(const Trajectory& t)
{
    std::string out = "Observation: " + (t.observations.empty() ? std::string() : t.observations.front().text) + "\n";
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        out += "Action: " + t.actions[i].text + "\n";
        if (i + 1 < t.observations.size())
            out += "Observation: " + t.observations[i + 1].text + "\n";
    }
    return out;
}

PromptTemplate PromptTemplate::defaults()
{
    PromptTemplate p;
    p.system = "You are an agent that completes tasks in a text environment. At every turn you see the task, "
               "the interaction so far and the actions you may take. Think briefly, then choose exactly one "
               "action. Answer with one line starting with 'Thought:' and one line starting with 'Action:'.";
    p.reflection_system = "You review a failed attempt at a task. In two or three sentences, say what went "
                          "wrong and what to do differently next time. Do not repeat the transcript.";
    return p;
}

PromptTemplate PromptTemplate::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open prompt template " + path);
    PromptTemplate p = defaults();
    std::string line;
    std::string section;
    std::string buffer;
    bool touched_system = false;
    bool touched_reflection = false;
    const auto flush = [&] {
        std::string text = trim(buffer);
        if (section == "system") {
            p.system = text;
            touched_system = true;
        } else if (section == "few-shot" && !text.empty()) {
            p.few_shot.push_back(text);
        } else if (section == "reflection") {
            p.reflection_system = text;
            touched_reflection = true;
        }
        buffer.clear();
    };
    while (std::getline(in, line)) {
        if (line.rfind("### ", 0) == 0) {
            flush();
            section = trim(line.substr(4));
            continue;
        }
        buffer += line + "\n";
    }
    flush();
    (void)touched_system;
    (void)touched_reflection;
    return p;
}

std::vector<ChatMessage> PromptTemplate::render(const PolicyContext& ctx) const
{
    std::string user;
    for (const auto& shot : few_shot)
        user += shot + "\n\n";
    user += "Task: " + ctx.instruction().text + "\n";
    if (ctx.reflections && !ctx.reflections->empty()) {
        user += "Lessons from earlier attempts:\n";
        for (const auto& r : *ctx.reflections)
            user += "- " + r + "\n";
    }
    user += render_transcript(ctx.trajectory);
    if (!ctx.valid_actions.empty()) {
        user += "Available actions:\n";
        for (const auto& a : ctx.valid_actions)
            user += "- " + a.text + "\n";
    }
    user += "Respond with 'Thought: ...' and 'Action: ...'.";
    return {{"system", system}, {"user", user}};
}

std::vector<ChatMessage> PromptTemplate::render_reflection(const Trajectory& failed, double score,
                                                           const std::vector<std::string>& memory) const
{
    std::ostringstream user;
    user << "Task: " << failed.instruction.text << "\n" << render_transcript(failed);
    user << "The attempt received a score of " << score << ".\n";
    if (!memory.empty()) {
        user << "Earlier lessons:\n";
        for (const auto& m : memory)
            user << "- " << m << "\n";
    }
    user << "Reflection:";
    return {{"system", reflection_system}, {"user", user.str()}};
}

RemotePolicy::RemotePolicy(std::shared_ptr<const ChatClient> client, PromptTemplate prompt)
    : client_(std::move(client))
    , prompt_(std::move(prompt))
{
}

Proposal RemotePolicy::ask(const PolicyContext& ctx, std::uint64_t seed) const
{
    auto messages = prompt_.render(ctx);
    for (int attempt = 0; attempt <= kFormatRetries; ++attempt) {
        const Completion c = client_->complete(messages, ctx.temperature, seed);
        std::string problem;
        try {
            ReactReply r = parse_react(c.text);
            const bool listed = std::any_of(ctx.valid_actions.begin(), ctx.valid_actions.end(),
                                            [&](const Action& a) { return a.text == r.action.text; });
            if (listed || ctx.free_form)
                return Proposal{std::move(r.action), 1.0, r.thought.empty() ? std::nullopt : std::optional(r.thought),
                                !listed};
            problem = "'" + r.action.text + "' is not one of the available actions";
        } catch (const Error& e) {
            problem = e.what();
        }
        messages.push_back({"assistant", c.text});
        messages.push_back({"user", "That reply could not be used (" + problem
                                        + "). Answer again with 'Thought: ...' and 'Action: ...'."});
    }
    return Proposal{Action{"<unparseable reply>"}, 1.0, std::nullopt, true};
}

std::vector<Proposal> RemotePolicy::propose(const PolicyContext& ctx, std::size_t k) const
{
    if (!ctx.free_form && ctx.valid_actions.empty())
        throw Error(ErrorCode::NoValidActions, "remote policy queried without valid actions");
    std::vector<Proposal> out;
    const std::size_t asks = ctx.temperature <= 0.0 ? 1 : k;
    for (std::size_t i = 0; i < asks && out.size() < k; ++i) {
        Proposal p = ask(ctx, derive_seed(ctx.seed, i));
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Proposal& q) { return q.action == p.action; });
        if (!dup)
            out.push_back(std::move(p));
    }
    return out;
}

std::string RemotePolicy::reflect(const Trajectory& failed, double score, const std::vector<std::string>& memory) const
{
    return trim(client_->complete(prompt_.render_reflection(failed, score, memory), 0.0).text);
}

} // namespace rplan::policy
