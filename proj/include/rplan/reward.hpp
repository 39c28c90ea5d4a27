#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rplan/core.hpp"

namespace rplan::policy {
class ChatClient;
}

namespace rplan::reward {

inline constexpr std::size_t kDefaultDimension = std::size_t{1} << 16;
inline constexpr int kRecipeVersion = 1;

// Sparse hashed features, sorted by index, counts > 0.
struct FeatureVector {
    std::size_t dimension = kDefaultDimension;
    std::vector<std::pair<std::uint32_t, double>> entries;

    bool operator==(const FeatureVector&) const = default;
};

// Lowercased tokens of `text`; anything that is not a letter or digit separates tokens.
std::vector<std::string> feature_tokens(std::string_view text);

// Unigrams and within-field bigrams of the instruction ("x|"), each action ("a|") and each
// observation ("o|"), hashed with FNV-1a into [0, dimension). dimension must be a power of two.
FeatureVector featurize(const Instruction& x, const Trajectory& h, std::size_t dimension = kDefaultDimension);

// a - b, both over the same dimension.
FeatureVector difference(const FeatureVector& a, const FeatureVector& b);

struct RewardParams {
    std::size_t dimension = kDefaultDimension;
    int recipe_version = kRecipeVersion;
    std::vector<double> weights;
    double bias = 0.0;
    std::string digest;

    static RewardParams zeros(std::size_t dimension = kDefaultDimension);
};

// dot(w, phi) + bias. Throws DimensionMismatch.
double score(const RewardParams& params, const FeatureVector& phi);
double score(const RewardParams& params, const Instruction& x, const Trajectory& h);

struct PreferencePair {
    Instruction instruction;
    Trajectory positive;
    Trajectory negative;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

// -log sigmoid(delta), computed without overflow.
double pairwise_loss(double delta);
double pairwise_loss(const RewardParams& params, const PreferencePair& pair);

struct Gradient {
    FeatureVector weights; // sparse
    double bias = 0.0;
};

// dL/dw = (sigmoid(delta) - 1) (phi+ - phi-); dL/db = 0.
Gradient pairwise_grad(const RewardParams& params, const PreferencePair& pair);

// Binary cross-entropy of sigmoid(score) against label, computed without overflow.
double classification_loss(double score, int label);
double classification_loss(const RewardParams& params, const Instruction& x, const Trajectory& h, int label);
Gradient classification_grad(const RewardParams& params, const Instruction& x, const Trajectory& h, int label);

double sigmoid(double z);

enum class Target { Pairwise, Classification };

std::string_view target_name(Target t);
Target parse_target(std::string_view text); // throws ConfigError

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    Target target = Target::Pairwise;
    std::size_t dimension = kDefaultDimension;
};

struct TrainResult {
    RewardParams params;
    // Mean loss per epoch, each example measured before the update of its batch.
    std::vector<double> epoch_loss;
};

// Mini-batch SGD with a seeded shuffle per epoch. Throws EmptyDataset, DivergenceDetected, InvalidArgument.
TrainResult train(const std::vector<PreferencePair>& dataset, const TrainConfig& config);

// Fraction of pairs with score+ > score-. Ties count as wrong. Throws EmptyDataset.
double eval_pairwise_accuracy(const RewardParams& params, const std::vector<PreferencePair>& dataset);

// ---- files ----

std::string model_json(const RewardParams& params);
RewardParams parse_model(std::string_view json_text);
void save_model(const RewardParams& params, const std::filesystem::path& path);
RewardParams load_model(const std::filesystem::path& path);

std::string serialize_pair(const PreferencePair& pair);
PreferencePair deserialize_pair(std::string_view line, std::size_t line_number = 1);
std::vector<PreferencePair> load_dataset(const std::filesystem::path& path);
void write_dataset(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path);

// ---- synthetic benchmark ----

// Each pair shares a random context between its two sides; positives carry "good" signal
// tokens, negatives "bad" ones. With label_noise, that fraction of pairs is swapped.
struct SyntheticConfig {
    std::size_t pairs = 600;
    std::size_t context_vocab = 400;
    std::size_t context_tokens = 12;
    std::size_t signal_vocab = 8;
    std::size_t signal_tokens = 2;
    double label_noise = 0.0;
    std::uint64_t seed = 0;
    // When >= 2, the signal is a single "level<g>" token instead: the negative sits at a random
    // level g and the positive at g + 1, so quality only makes sense relative to the other side.
    std::size_t graded_levels = 0;
};

std::vector<PreferencePair> synthetic_pairs(const SyntheticConfig& config);

// ---- scorers ----

// Facts read off the environment after a rollout.
struct EnvExtras {
    std::optional<double> price;
    std::optional<double> oracle_reward;
};

class RewardModel {
public:
    virtual ~RewardModel() = default;
    // Thread-safe.
    virtual double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const = 0;
    virtual std::string name() const = 0;
};

class LinearReward final : public RewardModel {
public:
    explicit LinearReward(RewardParams params);
    double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const override;
    std::string name() const override { return "learned"; }
    const RewardParams& params() const noexcept { return params_; }

private:
    RewardParams params_;
};

// Ground-truth environment score. Uses extras.oracle_reward, then h.oracle_reward.
class OracleReward final : public RewardModel {
public:
    double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const override;
    std::string name() const override { return "oracle"; }
};

// Prompt with "{instruction}" and "{transcript}" placeholders.
std::string default_judge_template();
std::string render_judge_prompt(std::string_view judge_template, const Instruction& x, const Trajectory& h);

// First "<number>" in the reply, clamped to [0, 1] with a warning. Throws ScoreParseError.
double parse_judge_score(std::string_view reply);

class JudgeReward final : public RewardModel {
public:
    JudgeReward(std::shared_ptr<const policy::ChatClient> client, std::string judge_template);
    double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const override;
    std::string name() const override { return "judge"; }

private:
    std::shared_ptr<const policy::ChatClient> client_;
    std::string template_;
};

// POST {"instruction","o0","steps":[{"a","o"}]} -> {"score": number}.
nlohmann::json remote_score_request(const Instruction& x, const Trajectory& h);

class RemoteReward final : public RewardModel {
public:
    explicit RemoteReward(std::string url, int max_retries = 2, int timeout_seconds = 60);
    // Throws RemoteError, TimeoutError or ContractError.
    double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const override;
    std::string name() const override { return "remote"; }

private:
    std::string url_;
    int max_retries_;
    int timeout_seconds_;
};

// base - lambda * actions - mu * price. Throws MissingPrice when mu > 0 and no price is known.
double composite_score(double base, const Trajectory& h, const EnvExtras& extras, double lambda_length,
                       double mu_price);

class CompositeReward final : public RewardModel {
public:
    CompositeReward(std::shared_ptr<const RewardModel> base, double lambda_length, double mu_price);
    double score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const override;
    std::string name() const override;

    const RewardModel& base() const noexcept { return *base_; }

private:
    std::shared_ptr<const RewardModel> base_;
    double lambda_;
    double mu_;
};

} // namespace rplan::reward
