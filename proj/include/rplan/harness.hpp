#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rplan/datagen.hpp"
#include "rplan/planners.hpp"
#include "rplan/policy.hpp"
#include "rplan/reward.hpp"

namespace rplan::harness {

std::string_view version();

// TOML run configuration. Overrides edit the tree before anything reads it; `${VAR}` is expanded
// only in secret-like keys (api_key, token, secret, password) and only when a value is read.
class Config {
public:
    Config();
    Config(const Config& other);
    Config& operator=(const Config& other);
    ~Config();

    // Throws ConfigError (with the parser's line/column) or IoError.
    static Config load(const std::filesystem::path& path);
    static Config parse(std::string_view text, const std::filesystem::path& base_dir = {});

    // "planner.n=20", "reward.backend=\"oracle\"", "seeds=[1,2]". A value that is not valid TOML
    // is stored as a string.
    void set(std::string_view assignment);
    void set(std::string_view dotted_key, std::string_view value);
    void set_string(std::string_view dotted_key, std::string value);

    bool has(std::string_view dotted_key) const;
    std::optional<std::string> get_string(std::string_view dotted_key) const;
    std::optional<std::int64_t> get_int(std::string_view dotted_key) const;
    std::optional<double> get_double(std::string_view dotted_key) const;
    std::optional<bool> get_bool(std::string_view dotted_key) const;
    std::optional<std::vector<std::string>> get_strings(std::string_view dotted_key) const;
    std::optional<std::vector<std::int64_t>> get_ints(std::string_view dotted_key) const;

    std::string get_string(std::string_view dotted_key, std::string fallback) const;
    std::int64_t get_int(std::string_view dotted_key, std::int64_t fallback) const;
    double get_double(std::string_view dotted_key, double fallback) const;
    bool get_bool(std::string_view dotted_key, bool fallback) const;

    // Relative paths resolve against the config file's directory.
    std::filesystem::path path(std::string_view dotted_key) const;
    std::optional<std::filesystem::path> optional_path(std::string_view dotted_key) const;

    // Seeds from `seeds = [...]` or `seed = n` (default [0]).
    std::vector<std::uint64_t> seeds() const;

    // The tree as TOML, uninterpolated.
    std::string snapshot() const;
    const std::filesystem::path& base_dir() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct CommandOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct CommandResult {
    std::filesystem::path out_dir;
    std::string summary; // human-readable, printed by the CLI
};

// Builders shared by the commands and the tests.
std::shared_ptr<const policy::Policy> make_policy(const Config& config);
std::shared_ptr<const reward::RewardModel> make_reward(const Config& config, std::string* backend_label = nullptr);
planners::Budget make_budget(const Config& config);
planners::PlannerConfig make_planner(const Config& config);
std::vector<planners::SuiteTask> make_suite(const Config& config);
reward::TrainConfig make_train_config(const Config& config);

CommandResult cmd_synthesize(Config config, const CommandOptions& options);
CommandResult cmd_train(Config config, const CommandOptions& options);
CommandResult cmd_eval_rm(Config config, const CommandOptions& options);
CommandResult cmd_plan(Config config, const CommandOptions& options);
// Merges run directories; rows of directories sharing a run id are kept once.
CommandResult cmd_report(const std::vector<std::filesystem::path>& run_dirs, const CommandOptions& options);

// Exit code for an error: 2 for configuration problems, 3 for everything else.
int exit_code_for(ErrorCode code);

} // namespace rplan::harness
