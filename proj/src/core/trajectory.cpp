#include "rplan/core.hpp"

#include <nlohmann/json.hpp>

namespace rplan {

using ordered_json = nlohmann::ordered_json;

std::string_view error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AppendToTerminal: return "AppendToTerminal";
    case ErrorCode::MaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidPuzzle: return "InvalidPuzzle";
    case ErrorCode::OperandMissing: return "OperandMissing";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ResultMismatch: return "ResultMismatch";
    case ErrorCode::TerminalPool: return "TerminalPool";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::UnknownProduct: return "UnknownProduct";
    case ErrorCode::NoValidActions: return "NoValidActions";
    case ErrorCode::MissingAction: return "MissingAction";
    case ErrorCode::PolicyError: return "PolicyError";
    case ErrorCode::RemoteError: return "RemoteError";
    case ErrorCode::TimeoutError: return "TimeoutError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::MissingPrice: return "MissingPrice";
    case ErrorCode::ScoreParseError: return "ScoreParseError";
    case ErrorCode::ContractError: return "ContractError";
    case ErrorCode::NegativeConstructionFailed: return "NegativeConstructionFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

std::string trim(std::string_view text)
{
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(text[b]))
        ++b;
    while (e > b && is_space(text[e - 1]))
        --e;
    return std::string(text.substr(b, e - b));
}

Trajectory Trajectory::start(Instruction instruction, Observation initial)
{
    Trajectory t;
    t.instruction = std::move(instruction);
    t.observations.push_back(std::move(initial));
    return t;
}

void Trajectory::push(Action action, Observation observation, std::size_t max_actions)
{
    if (terminal)
        throw Error(ErrorCode::AppendToTerminal, "trajectory already terminal");
    if (actions.size() >= max_actions)
        throw Error(ErrorCode::MaxLengthExceeded,
                    "trajectory already has " + std::to_string(actions.size()) + " actions");
    actions.push_back(std::move(action));
    observations.push_back(std::move(observation));
}

Trajectory trajectory_append(const Trajectory& t, Action action, Observation observation, std::size_t max_actions)
{
    Trajectory out = t;
    out.push(std::move(action), std::move(observation), max_actions);
    return out;
}

std::optional<std::string> validate_trajectory(const Trajectory& t, std::size_t max_actions)
{
    if (trim(t.instruction.text).empty())
        return "instruction: text is empty";
    if (t.observations.size() != t.actions.size() + 1)
        return "observation count: " + std::to_string(t.observations.size()) + " observations for "
            + std::to_string(t.actions.size()) + " actions (expected actions + 1)";
    if (t.actions.size() > max_actions)
        return "max length: " + std::to_string(t.actions.size()) + " actions exceeds " + std::to_string(max_actions);
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        const auto& a = t.actions[i].text;
        if (a.empty())
            return "action " + std::to_string(i + 1) + ": empty";
        if (a.find_first_of("\r\n") != std::string::npos)
            return "action " + std::to_string(i + 1) + ": contains a newline";
    }
    if (t.oracle_reward && !(*t.oracle_reward >= 0.0 && *t.oracle_reward <= 1.0))
        return "oracle_reward: outside [0, 1]";
    return std::nullopt;
}

namespace {

void put_observation(ordered_json& obj, const char* key, const char* attachment_key, const Observation& o)
{
    obj[key] = o.text;
    if (o.attachment)
        obj[attachment_key] = *o.attachment;
}

Observation get_observation(const nlohmann::json& obj, const char* key, const char* attachment_key)
{
    Observation o;
    o.text = obj.at(key).get<std::string>();
    if (auto it = obj.find(attachment_key); it != obj.end() && !it->is_null())
        o.attachment = it->get<std::string>();
    return o;
}

} // namespace

std::string serialize_trajectory(const Trajectory& t)
{
    ordered_json j;
    j["instruction"] = t.instruction.text;
    j["instruction_id"] = t.instruction.id;
    put_observation(j, "o0", "o0_attachment", t.observations.empty() ? Observation{} : t.observations.front());
    ordered_json steps = ordered_json::array();
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        ordered_json s;
        s["a"] = t.actions[i].text;
        put_observation(s, "o", "o_attachment", i + 1 < t.observations.size() ? t.observations[i + 1] : Observation{});
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    j["terminal"] = t.terminal;
    j["oracle_reward"] = t.oracle_reward ? ordered_json(*t.oracle_reward) : ordered_json(nullptr);
    return j.dump();
}

Trajectory deserialize_trajectory(std::string_view line, std::size_t line_number)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_number) + " offset " + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        Trajectory t;
        t.instruction.text = j.at("instruction").get<std::string>();
        t.instruction.id = j.value("instruction_id", std::string());
        t.observations.push_back(get_observation(j, "o0", "o0_attachment"));
        for (const auto& s : j.at("steps")) {
            t.actions.push_back(Action{s.at("a").get<std::string>()});
            t.observations.push_back(get_observation(s, "o", "o_attachment"));
        }
        t.terminal = j.value("terminal", false);
        if (auto it = j.find("oracle_reward"); it != j.end() && !it->is_null())
            t.oracle_reward = it->get<double>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_number) + " offset 0: " + e.what());
    }
}

Trajectory replay(Environment& env, const Instruction& instruction, const std::vector<Action>& actions,
                  std::size_t max_actions)
{
    Trajectory t = Trajectory::start(instruction, env.reset(instruction));
    for (const auto& a : actions) {
        if (env.is_terminal() || t.size() >= max_actions)
            break;
        t.push(a, env.step(a), max_actions);
    }
    t.terminal = env.is_terminal();
    t.oracle_reward = env.oracle_outcome().oracle_reward;
    return t;
}

} // namespace rplan
