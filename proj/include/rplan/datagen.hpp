#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rplan/core.hpp"
#include "rplan/planners.hpp"
#include "rplan/policy.hpp"
#include "rplan/reward.hpp"
#include "rplan/shop.hpp"

namespace rplan::datagen {

enum class EnvKind { Game24, Shop };
enum class Mode { Template, Llm };

EnvKind parse_env_kind(std::string_view text);
std::string_view env_kind_name(EnvKind k);
Mode parse_mode(std::string_view text);

// The environment family the pipeline runs against, plus what is needed to build instances.
struct World {
    EnvKind kind = EnvKind::Game24;
    std::shared_ptr<const shop::Catalog> catalog; // shop only
    // Overrides both kinds when set (test fixtures).
    EnvironmentFactory custom;

    // Shop environments need a goal; without one every purchase scores 0.
    std::unique_ptr<Environment> make(const Instruction& instruction,
                                      const std::optional<shop::UserGoal>& goal = std::nullopt) const;
};

struct RawInstruction {
    Instruction instruction;
    std::string provenance; // "template" or "llm"
    std::optional<shop::UserGoal> goal;
};

struct TokenUsage {
    std::size_t prompt = 0;
    std::size_t completion = 0;
    std::size_t requests = 0;
};

// Text prompts used in LLM mode. Placeholders: {observation}, {instruction}, {transcript}.
struct Prompts {
    std::string synthesize;
    std::string refine;

    static Prompts defaults(EnvKind kind);
    static Prompts load(EnvKind kind, const std::optional<std::filesystem::path>& synthesize_path,
                        const std::optional<std::filesystem::path>& refine_path);
};

struct Llm {
    std::shared_ptr<const policy::ChatClient> client;
    Prompts prompts;
};

// Throws RemoteError in LLM mode.
std::vector<RawInstruction> synthesize_instructions(const World& world, Mode mode, std::size_t m, std::uint64_t seed,
                                                    const Llm* llm = nullptr, TokenUsage* usage = nullptr);

struct Collected {
    RawInstruction raw;
    Trajectory trajectory;
};

struct CollectStats {
    std::size_t attempted = 0;
    std::size_t failures = 0;
    std::size_t oracle_positive = 0;
};

// `repeats` temperature-1 rollouts per instruction. Failed rollouts are skipped and counted.
std::vector<Collected> collect_trajectories(const std::vector<RawInstruction>& instructions,
                                            const policy::Policy& policy, const World& world,
                                            const planners::Budget& budget, std::uint64_t seed,
                                            std::size_t repeats = 1, CollectStats* stats = nullptr);

struct RefinedInstruction {
    Instruction instruction;
    std::string source_id;
    std::optional<shop::UserGoal> goal;
};

// Deterministic mode: Game of 24 keeps the text (the trajectory must solve it); shop rewrites the
// goal to what was bought. LLM mode asks the model for the text. nullopt when the trajectory
// achieved nothing that can be described as a goal.
std::optional<RefinedInstruction> refine_instruction(const RawInstruction& raw, const Trajectory& h,
                                                     const World& world, Mode mode, const Llm* llm = nullptr,
                                                     TokenUsage* usage = nullptr);

// Shop goal that exactly matches the final state of a purchase.
std::optional<shop::UserGoal> goal_from_purchase(const shop::Catalog& catalog, const shop::ShopState& final_state,
                                                 const std::optional<shop::UserGoal>& raw_goal);

enum class Strategy { PerturbAction, Truncate, DivergeRandom };
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view text);

struct StrategyMix {
    double perturb_action = 0.5;
    double truncate = 0.25;
    double diverge_random = 0.25;

    Strategy draw(std::uint64_t seed) const;
};

struct NegativeRequest {
    const RefinedInstruction& refined;
    const Trajectory& positive;
    Strategy strategy = Strategy::PerturbAction;
    const World& world;
    const policy::Policy& continuation; // regenerates the suffix after a perturbation
    planners::Budget budget;
    std::uint64_t seed = 0;
    std::size_t max_retries = 5;
    std::size_t truncate_k = 1;
};

// Throws NegativeConstructionFailed.
Trajectory make_negative(const NegativeRequest& req);

struct SynthesisReport {
    std::size_t instructions = 0;
    std::size_t collected = 0;
    std::size_t collection_failures = 0;
    std::size_t refined = 0;
    std::size_t refinement_failures = 0;
    std::size_t negative_failures = 0;
    std::size_t dedups = 0;
    std::size_t validation_rejects = 0;
    std::size_t pairs = 0;
    std::map<std::string, std::size_t> strategies;
    TokenUsage tokens;

    nlohmann::ordered_json to_json() const;
};

// Drops exact duplicates (serialized triple) and pairs that fail validation, then writes JSONL
// when `out` is given. Throws IoError.
std::vector<reward::PreferencePair> build_dataset(const std::vector<reward::PreferencePair>& items,
                                                  const std::optional<std::filesystem::path>& out,
                                                  SynthesisReport& report);

struct PipelineConfig {
    World world;
    Mode mode = Mode::Template;
    std::size_t instructions = 100;
    std::size_t repeats = 1;
    StrategyMix mix;
    std::size_t max_retries = 5;
    planners::Budget budget;
    std::uint64_t seed = 0;
};

struct PipelineResult {
    std::vector<reward::PreferencePair> pairs;
    SynthesisReport report;
};

// synthesize -> collect -> refine -> negatives -> dataset.
PipelineResult run_pipeline(const PipelineConfig& config, const policy::Policy& collector,
                            const std::optional<std::filesystem::path>& out = std::nullopt, const Llm* llm = nullptr);

} // namespace rplan::datagen
