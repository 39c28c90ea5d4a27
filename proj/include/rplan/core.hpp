#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rplan/error.hpp"

namespace rplan {

inline constexpr std::size_t kDefaultMaxActions = 10;

// Returned by every environment for an action it does not recognise. State is left untouched.
inline constexpr std::string_view kNoMatchObservation = "No known action matches that input.";

struct Instruction {
    std::string id;
    std::string text;

    bool operator==(const Instruction&) const = default;
};

struct Action {
    std::string text;

    bool operator==(const Action&) const = default;
};

struct Observation {
    std::string text;
    // Opaque payload (e.g. an encoded screenshot). Carried, never interpreted.
    std::optional<std::string> attachment;

    bool operator==(const Observation&) const = default;
};

// h = {a_1..a_N, o_0..o_N}. Kept as two parallel lists so a malformed history is representable
// and can be reported by validate_trajectory.
struct Trajectory {
    Instruction instruction;
    std::vector<Action> actions;
    std::vector<Observation> observations;
    bool terminal = false;
    std::optional<double> oracle_reward;

    static Trajectory start(Instruction instruction, Observation initial);

    std::size_t size() const noexcept { return actions.size(); }
    const Observation& initial_observation() const { return observations.front(); }
    const Observation& last_observation() const { return observations.back(); }

    // In-place append with the same checks as trajectory_append.
    void push(Action action, Observation observation, std::size_t max_actions = kDefaultMaxActions);

    bool operator==(const Trajectory&) const = default;
};

// Value-semantics append; `t` is not modified.
Trajectory trajectory_append(const Trajectory& t, Action action, Observation observation,
                             std::size_t max_actions = kDefaultMaxActions);

// Empty optional when every invariant holds, otherwise a description of the first violation.
std::optional<std::string> validate_trajectory(const Trajectory& t,
                                               std::size_t max_actions = kDefaultMaxActions);

// One JSON object, no trailing newline, fixed key order.
std::string serialize_trajectory(const Trajectory& t);

// Throws Error{ParseError} naming the line and byte offset. Unknown keys are ignored.
Trajectory deserialize_trajectory(std::string_view line, std::size_t line_number = 1);

struct TaskOutcome {
    double oracle_reward = 0.0;
    bool success = false;
};

// A deterministic text environment. Instances are single-owner; clone() for parallel use.
class Environment {
public:
    virtual ~Environment() = default;

    virtual Observation reset(const Instruction& instruction) = 0;
    virtual std::vector<Action> valid_actions() const = 0;
    virtual Observation step(const Action& action) = 0;
    virtual bool is_terminal() const = 0;
    // Meaningful at terminal states; non-terminal states score as failures.
    virtual TaskOutcome oracle_outcome() const = 0;
    virtual std::unique_ptr<Environment> clone() const = 0;

    // True when actions outside valid_actions() may still be legal (Game of 24 steps).
    virtual bool free_form_actions() const { return false; }
    // Price of the purchased item, for environments that have one.
    virtual std::optional<double> price() const { return std::nullopt; }
};

// Builds a fresh environment able to serve `instruction`; the caller resets it.
using EnvironmentFactory = std::function<std::unique_ptr<Environment>(const Instruction&)>;

// Resets `env` to `instruction` and plays `actions`, recording what the environment returns.
// Stops early once the environment is terminal. The oracle reward of the final state is recorded.
Trajectory replay(Environment& env, const Instruction& instruction, const std::vector<Action>& actions,
                  std::size_t max_actions = kDefaultMaxActions);

std::string trim(std::string_view text);

} // namespace rplan
