#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "rplan/core.hpp"
#include "rplan/http.hpp"

namespace rplan::policy {

// What a planner shows the policy at one decision point. Views only; valid for the call.
struct PolicyContext {
    const Trajectory& trajectory;
    const std::vector<Action>& valid_actions;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    // Reflexion memory, oldest first.
    const std::vector<std::string>* reflections = nullptr;
    // Environment accepts actions outside valid_actions (checked by the environment itself).
    bool free_form = false;

    const Instruction& instruction() const { return trajectory.instruction; }
};

struct Proposal {
    Action action;
    double weight = 1.0;
    std::optional<std::string> thought;
    bool free_form = false;
};

// Picks up to k candidates. temperature 0: descending weight, ties to the lexicographically
// smaller action. Otherwise: sequential sampling without replacement with probability
// proportional to weight^(1/temperature).
std::vector<Proposal> select(std::vector<Proposal> candidates, double temperature, std::uint64_t seed, std::size_t k);

class Policy {
public:
    virtual ~Policy() = default;

    // Ordered, at most k entries. Must be safe to call concurrently.
    virtual std::vector<Proposal> propose(const PolicyContext& ctx, std::size_t k) const = 0;

    // Verbal feedback on a failed trial, stored in Reflexion memory.
    virtual std::string reflect(const Trajectory& failed, double score,
                                const std::vector<std::string>& memory) const;

    virtual std::string name() const = 0;
};

// Uniform base scores over the valid actions.
class RandomPolicy final : public Policy {
public:
    std::vector<Proposal> propose(const PolicyContext& ctx, std::size_t k) const override;
    std::string name() const override { return "random"; }
};

// Table-driven policy. A script maps a state to weighted candidate actions; the state is
// looked up first by action history (instruction id + actions so far), then by the current
// observation text. Which script applies is chosen by the number of reflections in memory,
// so a later script can encode what a reflection "taught".
class ScriptedPolicy final : public Policy {
public:
    struct Script {
        std::map<std::string, std::vector<Proposal>> by_history;
        std::map<std::string, std::vector<Proposal>> by_observation;
    };

    static std::string history_key(std::string_view instruction_id, const std::vector<Action>& actions);

    // Registers every prefix of `actions` as a state whose next action follows the route.
    void add_route(std::string_view instruction_id, const std::vector<std::string>& actions,
                   double weight = 1.0, std::size_t script = 0);
    void add_observation_rule(std::string observation, std::string action, double weight = 1.0,
                              std::size_t script = 0);

    // Emitted when no rule matches; otherwise the first valid action is used.
    void set_fallback(std::string action) { fallback_ = std::move(action); }
    void set_reflection(std::string text) { reflection_ = std::move(text); }

    std::vector<Proposal> propose(const PolicyContext& ctx, std::size_t k) const override;
    std::string reflect(const Trajectory& failed, double score,
                        const std::vector<std::string>& memory) const override;
    std::string name() const override { return "scripted"; }

    // JSON: {"routes":[{"instruction_id","actions":[...],"weight","script"}],
    //        "observations":[{"observation","action","weight","script"}], "fallback", "reflection"}
    static ScriptedPolicy from_json(std::string_view json_text);

private:
    Script& script(std::size_t index);

    std::vector<Script> scripts_;
    std::optional<std::string> fallback_;
    std::string reflection_ = "The previous attempt failed. Try a different sequence of actions.";
};

// Game of 24 solver: proposes the first step of an exact solution from the current pool.
// With `exhaustive`, every other legal step follows at `other_weight`.
class Game24SolverPolicy final : public Policy {
public:
    explicit Game24SolverPolicy(bool exhaustive = false, double other_weight = 0.01)
        : exhaustive_(exhaustive)
        , other_weight_(other_weight)
    {
    }

    std::vector<Proposal> propose(const PolicyContext& ctx, std::size_t k) const override;
    std::string name() const override { return exhaustive_ ? "solver-exhaustive" : "solver"; }

private:
    bool exhaustive_;
    double other_weight_;
};

// ---- ReAct text format ----

struct ReactReply {
    std::string thought;
    Action action;
};

// Last "Thought:" and last "Action:" segments; the action is cut at the first newline.
// Throws MissingAction.
ReactReply parse_react(std::string_view text);
std::string render_react(std::string_view thought, const Action& action);

// ---- chat completions ----

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatConfig {
    std::string base_url;             // e.g. http://localhost:8000/v1
    std::string model;
    std::string auth_env;             // name of the environment variable holding the token
    std::string api_key;              // used instead of auth_env when set
    int max_tokens = 512;
    int parallelism = 4;
    http::RetryPolicy retry;
};

struct Completion {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool usage_reported = false;
};

class ChatClient {
public:
    explicit ChatClient(ChatConfig config);

    // Throws RemoteError / TimeoutError after retries.
    Completion complete(const std::vector<ChatMessage>& messages, double temperature,
                        std::optional<std::uint64_t> seed = std::nullopt) const;

    const ChatConfig& config() const noexcept { return config_; }

private:
    ChatConfig config_;
    std::string token_;
    mutable std::counting_semaphore<1024> in_flight_;
};

// Prompt text as a pure function of (instruction, history, valid actions, reflections).
struct PromptTemplate {
    std::string system;
    std::vector<std::string> few_shot;
    std::string reflection_system;

    static PromptTemplate defaults();
    static PromptTemplate load(const std::string& path);

    std::vector<ChatMessage> render(const PolicyContext& ctx) const;
    std::vector<ChatMessage> render_reflection(const Trajectory& failed, double score,
                                               const std::vector<std::string>& memory) const;
};

std::string render_transcript(const Trajectory& t);

class RemotePolicy final : public Policy {
public:
    static constexpr int kFormatRetries = 3;

    RemotePolicy(std::shared_ptr<const ChatClient> client, PromptTemplate prompt);

    std::vector<Proposal> propose(const PolicyContext& ctx, std::size_t k) const override;
    std::string reflect(const Trajectory& failed, double score,
                        const std::vector<std::string>& memory) const override;
    std::string name() const override { return "remote"; }

private:
    Proposal ask(const PolicyContext& ctx, std::uint64_t seed) const;

    std::shared_ptr<const ChatClient> client_;
    PromptTemplate prompt_;
};

} // namespace rplan::policy
