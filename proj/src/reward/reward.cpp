#include "rplan/reward.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rplan/http.hpp"
#include "rplan/policy.hpp"
#include "rplan/rng.hpp"

namespace rplan::reward {

namespace {

void check_dimension(std::size_t dimension)
{
    if (dimension == 0 || !std::has_single_bit(dimension) || dimension > (std::size_t{1} << 31))
        throw Error(ErrorCode::InvalidArgument, fmt::format("feature dimension {} is not a power of two", dimension));
}

void add_field(std::map<std::uint32_t, double>& counts, std::string_view ns, std::string_view text, std::uint64_t mask)
{
    const auto tokens = feature_tokens(text);
    std::string key;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        key.assign(ns);
        key += tokens[i];
        counts[static_cast<std::uint32_t>(fnv1a64(key) & mask)] += 1.0;
        if (i + 1 < tokens.size()) {
            key += ' ';
            key += tokens[i + 1];
            counts[static_cast<std::uint32_t>(fnv1a64(key) & mask)] += 1.0;
        }
    }
}

double softplus(double z)
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double dot(const RewardParams& params, const FeatureVector& phi)
{
    double s = 0.0;
    for (const auto& [i, c] : phi.entries)
        s += params.weights[i] * c;
    return s;
}

void require_match(const RewardParams& params, const FeatureVector& phi)
{
    if (params.dimension != phi.dimension || params.weights.size() != params.dimension)
        throw Error(ErrorCode::DimensionMismatch,
                    fmt::format("model has D={} ({} weights), features have D={}", params.dimension,
                                params.weights.size(), phi.dimension));
}

std::string config_digest(const TrainConfig& c, std::size_t dataset_size)
{
    const std::string canon = fmt::format("recipe={};D={};target={};epochs={};batch={};lr={:.17g};seed={};n={}",
                                          kRecipeVersion, c.dimension, target_name(c.target), c.epochs,
                                          c.batch_size, c.learning_rate, c.seed, dataset_size);
    return fmt::format("{:016x}", fnv1a64(canon));
}

struct Example {
    FeatureVector phi; // difference for pairwise, raw features for classification
    int label = 1;
};

} // namespace

std::vector<std::string> feature_tokens(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

FeatureVector featurize(const Instruction& x, const Trajectory& h, std::size_t dimension)
{
    check_dimension(dimension);
    const std::uint64_t mask = dimension - 1;
    std::map<std::uint32_t, double> counts;
    add_field(counts, "x|", x.text, mask);
    for (const auto& a : h.actions)
        add_field(counts, "a|", a.text, mask);
    for (const auto& o : h.observations)
        add_field(counts, "o|", o.text, mask);
    FeatureVector fv;
    fv.dimension = dimension;
    fv.entries.assign(counts.begin(), counts.end());
    return fv;
}

FeatureVector difference(const FeatureVector& a, const FeatureVector& b)
{
    if (a.dimension != b.dimension)
        throw Error(ErrorCode::DimensionMismatch, "feature vectors of different dimension");
    FeatureVector out;
    out.dimension = a.dimension;
    auto i = a.entries.begin();
    auto j = b.entries.begin();
    while (i != a.entries.end() || j != b.entries.end()) {
        if (j == b.entries.end() || (i != a.entries.end() && i->first < j->first)) {
            out.entries.push_back(*i++);
        } else if (i == a.entries.end() || j->first < i->first) {
            out.entries.emplace_back(j->first, -j->second);
            ++j;
        } else {
            const double v = i->second - j->second;
            if (v != 0.0)
                out.entries.emplace_back(i->first, v);
            ++i;
            ++j;
        }
    }
    return out;
}

RewardParams RewardParams::zeros(std::size_t dimension)
{
    check_dimension(dimension);
    RewardParams p;
    p.dimension = dimension;
    p.weights.assign(dimension, 0.0);
    return p;
}

double score(const RewardParams& params, const FeatureVector& phi)
{
    require_match(params, phi);
    return dot(params, phi) + params.bias;
}

double score(const RewardParams& params, const Instruction& x, const Trajectory& h)
{
    return score(params, featurize(x, h, params.dimension));
}

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double pairwise_loss(double delta)
{
    return softplus(-delta);
}

double pairwise_loss(const RewardParams& params, const PreferencePair& pair)
{
    const double delta = score(params, pair.instruction, pair.positive) - score(params, pair.instruction, pair.negative);
    return pairwise_loss(delta);
}

Gradient pairwise_grad(const RewardParams& params, const PreferencePair& pair)
{
    const auto diff = difference(featurize(pair.instruction, pair.positive, params.dimension),
                                 featurize(pair.instruction, pair.negative, params.dimension));
    require_match(params, diff);
    const double coef = sigmoid(dot(params, diff)) - 1.0;
    Gradient g;
    g.weights.dimension = params.dimension;
    for (const auto& [i, v] : diff.entries)
        g.weights.entries.emplace_back(i, coef * v);
    return g;
}

double classification_loss(double s, int label)
{
    return softplus(s) - (label ? s : 0.0);
}

double classification_loss(const RewardParams& params, const Instruction& x, const Trajectory& h, int label)
{
    return classification_loss(score(params, x, h), label);
}

Gradient classification_grad(const RewardParams& params, const Instruction& x, const Trajectory& h, int label)
{
    const auto phi = featurize(x, h, params.dimension);
    const double coef = sigmoid(score(params, phi)) - (label ? 1.0 : 0.0);
    Gradient g;
    g.weights.dimension = params.dimension;
    for (const auto& [i, v] : phi.entries)
        g.weights.entries.emplace_back(i, coef * v);
    g.bias = coef;
    return g;
}

std::string_view target_name(Target t)
{
    return t == Target::Pairwise ? "pairwise" : "classification";
}

Target parse_target(std::string_view text)
{
    if (text == "pairwise")
        return Target::Pairwise;
    if (text == "classification")
        return Target::Classification;
    throw Error(ErrorCode::ConfigError, fmt::format("unknown training target '{}'", text));
}

TrainResult train(const std::vector<PreferencePair>& dataset, const TrainConfig& config)
{
    if (dataset.empty())
        throw Error(ErrorCode::EmptyDataset, "no training pairs");
    if (!(config.learning_rate > 0.0) || config.epochs < 1 || config.batch_size < 1)
        throw Error(ErrorCode::InvalidArgument, "learning rate, epochs and batch size must be positive");

    std::vector<Example> examples;
    const bool pairwise = config.target == Target::Pairwise;
    examples.reserve(pairwise ? dataset.size() : 2 * dataset.size());
    for (const auto& p : dataset) {
        auto pos = featurize(p.instruction, p.positive, config.dimension);
        auto neg = featurize(p.instruction, p.negative, config.dimension);
        if (pairwise) {
            examples.push_back({difference(pos, neg), 1});
        } else {
            examples.push_back({std::move(pos), 1});
            examples.push_back({std::move(neg), 0});
        }
    }

    TrainResult result;
    result.params = RewardParams::zeros(config.dimension);
    result.params.digest = config_digest(config, dataset.size());
    auto& w = result.params.weights;
    auto& bias = result.params.bias;

    std::vector<std::size_t> order(examples.size());
    std::map<std::uint32_t, double> grad;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, epoch));
        rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            grad.clear();
            double bias_grad = 0.0;
            for (std::size_t n = start; n < end; ++n) {
                const Example& ex = examples[order[n]];
                double s = 0.0;
                for (const auto& [i, v] : ex.phi.entries)
                    s += w[i] * v;
                double coef;
                if (pairwise) {
                    loss_sum += pairwise_loss(s);
                    coef = sigmoid(s) - 1.0;
                } else {
                    s += bias;
                    loss_sum += classification_loss(s, ex.label);
                    coef = sigmoid(s) - ex.label;
                    bias_grad += coef;
                }
                for (const auto& [i, v] : ex.phi.entries)
                    grad[i] += coef * v;
            }
            const double step = config.learning_rate / static_cast<double>(end - start);
            for (const auto& [i, g] : grad)
                w[i] -= step * g;
            if (!pairwise)
                bias -= step * bias_grad;
        }
        const double mean = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(mean) || !std::isfinite(bias))
            throw Error(ErrorCode::DivergenceDetected, fmt::format("epoch {} loss is {}", epoch + 1, mean));
        result.epoch_loss.push_back(mean);
        spdlog::debug("epoch {} mean {} loss {:.6f}", epoch + 1, target_name(config.target), mean);
    }
    return result;
}

double eval_pairwise_accuracy(const RewardParams& params, const std::vector<PreferencePair>& dataset)
{
    if (dataset.empty())
        throw Error(ErrorCode::EmptyDataset, "no evaluation pairs");
    std::size_t correct = 0;
    for (const auto& p : dataset)
        if (score(params, p.instruction, p.positive) > score(params, p.instruction, p.negative))
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

// ---- files ----

std::string model_json(const RewardParams& params)
{
    nlohmann::ordered_json doc;
    doc["dimension"] = params.dimension;
    doc["recipe_version"] = params.recipe_version;
    doc["digest"] = params.digest;
    doc["bias"] = params.bias;
    auto weights = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params.weights.size(); ++i)
        if (params.weights[i] != 0.0)
            weights.push_back({i, params.weights[i]});
    doc["weights"] = std::move(weights);
    return doc.dump() + "\n";
}

RewardParams parse_model(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text.begin(), json_text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
    }
    try {
        RewardParams p = RewardParams::zeros(doc.at("dimension").get<std::size_t>());
        p.recipe_version = doc.at("recipe_version").get<int>();
        if (p.recipe_version != kRecipeVersion)
            throw Error(ErrorCode::DimensionMismatch,
                        fmt::format("model feature recipe {} differs from {}", p.recipe_version, kRecipeVersion));
        p.digest = doc.value("digest", std::string());
        p.bias = doc.at("bias").get<double>();
        for (const auto& entry : doc.at("weights")) {
            const auto i = entry.at(0).get<std::size_t>();
            const auto v = entry.at(1).get<double>();
            if (i >= p.dimension || !std::isfinite(v))
                throw Error(ErrorCode::SchemaError, fmt::format("bad weight entry {}", entry.dump()));
            p.weights[i] = v;
        }
        if (!std::isfinite(p.bias))
            throw Error(ErrorCode::SchemaError, "non-finite bias");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("model file: ") + e.what());
    }
}

void save_model(const RewardParams& params, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << model_json(params);
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

RewardParams load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open model " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string serialize_pair(const PreferencePair& pair)
{
    nlohmann::ordered_json doc;
    doc["instruction"] = pair.instruction.text;
    doc["instruction_id"] = pair.instruction.id;
    doc["positive"] = nlohmann::ordered_json::parse(serialize_trajectory(pair.positive));
    doc["negative"] = nlohmann::ordered_json::parse(serialize_trajectory(pair.negative));
    doc["meta"] = pair.meta;
    return doc.dump();
}

PreferencePair deserialize_pair(std::string_view line, std::size_t line_number)
{
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, fmt::format("line {} offset {}: {}", line_number, e.byte, e.what()));
    }
    try {
        PreferencePair p;
        p.instruction.text = doc.at("instruction").get<std::string>();
        p.instruction.id = doc.value("instruction_id", std::string());
        p.positive = deserialize_trajectory(doc.at("positive").dump(), line_number);
        p.negative = deserialize_trajectory(doc.at("negative").dump(), line_number);
        if (auto m = doc.find("meta"); m != doc.end() && m->is_object())
            p.meta = *m;
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("line {}: {}", line_number, e.what()));
    }
}

std::vector<PreferencePair> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
    std::vector<PreferencePair> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty())
            continue;
        out.push_back(deserialize_pair(line, n));
    }
    return out;
}

void write_dataset(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& p : pairs)
        out << serialize_pair(p) << '\n';
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---- synthetic benchmark ----

std::vector<PreferencePair> synthetic_pairs(const SyntheticConfig& config)
{
    if (config.context_vocab == 0 || config.signal_vocab == 0)
        throw Error(ErrorCode::InvalidArgument, "synthetic vocabularies must be non-empty");
    Rng rng(config.seed);
    std::vector<PreferencePair> out;
    out.reserve(config.pairs);
    const auto words = [&](std::string_view stem, std::size_t vocab, std::size_t count) {
        std::string s;
        for (std::size_t i = 0; i < count; ++i) {
            if (!s.empty())
                s += ' ';
            s += fmt::format("{}{}", stem, rng.index(vocab));
        }
        return s;
    };
    for (std::size_t n = 0; n < config.pairs; ++n) {
        PreferencePair p;
        p.instruction = {fmt::format("syn-{:05}", n), "task " + words("topic", config.context_vocab, 2)};
        const Observation o0{words("ctx", config.context_vocab, config.context_tokens), std::nullopt};
        const std::string shared = words("ctx", config.context_vocab, config.context_tokens / 2);
        std::string good;
        std::string bad;
        if (config.graded_levels >= 2) {
            const auto g = rng.index(config.graded_levels - 1);
            good = fmt::format("level{}", g + 1);
            bad = fmt::format("level{}", g);
        } else {
            good = words("good", config.signal_vocab, config.signal_tokens);
            bad = words("bad", config.signal_vocab, config.signal_tokens);
        }
        p.positive = Trajectory::start(p.instruction, o0);
        p.positive.push(Action{"pick " + shared + " " + good}, Observation{"done", std::nullopt});
        p.positive.terminal = true;
        p.negative = Trajectory::start(p.instruction, o0);
        p.negative.push(Action{"pick " + shared + " " + bad}, Observation{"done", std::nullopt});
        p.negative.terminal = true;
        const bool swapped = config.label_noise > 0.0 && rng.bernoulli(config.label_noise);
        if (swapped)
            std::swap(p.positive, p.negative);
        p.meta = {{"source", "synthetic"}, {"swapped", swapped}};
        out.push_back(std::move(p));
    }
    return out;
}

// ---- scorers ----

LinearReward::LinearReward(RewardParams params)
    : params_(std::move(params))
{
    if (params_.weights.size() != params_.dimension)
        throw Error(ErrorCode::DimensionMismatch, "weight vector length differs from dimension");
}

double LinearReward::score(const Instruction& x, const Trajectory& h, const EnvExtras&) const
{
    return reward::score(params_, x, h);
}

double OracleReward::score(const Instruction&, const Trajectory& h, const EnvExtras& extras) const
{
    if (extras.oracle_reward)
        return *extras.oracle_reward;
    if (h.oracle_reward)
        return *h.oracle_reward;
    throw Error(ErrorCode::ContractError, "oracle reward requested for a trajectory without one");
}

std::string default_judge_template()
{
    return "You grade an agent's attempt at a task. Read the task and the transcript of what the agent "
           "did, decide how completely the task was accomplished, and finish with a score between 0 and 1 "
           "inside angle brackets, like <0.500>.\n\n"
           "Task: {instruction}\n\n"
           "Transcript:\n{transcript}\n"
           "Score:";
}

std::string render_judge_prompt(std::string_view judge_template, const Instruction& x, const Trajectory& h)
{
    std::string out(judge_template);
    const auto replace = [&](std::string_view key, const std::string& value) {
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
            out.replace(pos, key.size(), value);
    };
    replace("{transcript}", policy::render_transcript(h));
    replace("{instruction}", x.text);
    return out;
}

double parse_judge_score(std::string_view reply)
{
    static const std::regex kScore(R"(<\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*>)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(reply.begin(), reply.end(), m, kScore))
        throw Error(ErrorCode::ScoreParseError, "no <number> in judge reply");
    const double v = std::stod(m[1].str());
    if (v < 0.0 || v > 1.0) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        spdlog::warn("judge score {} outside [0, 1], clamped to {}", v, clamped);
        return clamped;
    }
    return v;
}

JudgeReward::JudgeReward(std::shared_ptr<const policy::ChatClient> client, std::string judge_template)
    : client_(std::move(client))
    , template_(std::move(judge_template))
{
}

double JudgeReward::score(const Instruction& x, const Trajectory& h, const EnvExtras&) const
{
    const auto reply = client_->complete({{"user", render_judge_prompt(template_, x, h)}}, 0.0);
    return parse_judge_score(reply.text);
}

nlohmann::json remote_score_request(const Instruction& x, const Trajectory& h)
{
    nlohmann::json body;
    body["instruction"] = x.text;
    body["o0"] = h.observations.empty() ? std::string() : h.observations.front().text;
    body["steps"] = nlohmann::json::array();
    for (std::size_t i = 0; i < h.actions.size(); ++i)
        body["steps"].push_back(
            {{"a", h.actions[i].text}, {"o", i + 1 < h.observations.size() ? h.observations[i + 1].text : ""}});
    return body;
}

RemoteReward::RemoteReward(std::string url, int max_retries, int timeout_seconds)
    : url_(std::move(url))
    , max_retries_(max_retries)
    , timeout_seconds_(timeout_seconds)
{
}

double RemoteReward::score(const Instruction& x, const Trajectory& h, const EnvExtras&) const
{
    http::RetryPolicy retry;
    retry.max_retries = max_retries_;
    retry.timeout = std::chrono::seconds(timeout_seconds_);
    const auto reply = http::post_json(url_, remote_score_request(x, h), retry);
    const auto it = reply.find("score");
    if (it == reply.end() || !it->is_number())
        throw Error(ErrorCode::ContractError, "scoring reply lacks a numeric \"score\": " + reply.dump().substr(0, 200));
    const double v = it->get<double>();
    if (!std::isfinite(v))
        throw Error(ErrorCode::ContractError, "scoring reply is not finite");
    return v;
}

double composite_score(double base, const Trajectory& h, const EnvExtras& extras, double lambda_length,
                       double mu_price)
{
    double value = base - lambda_length * static_cast<double>(h.size());
    if (mu_price > 0.0) {
        if (!extras.price)
            throw Error(ErrorCode::MissingPrice, "price penalty needs a purchase price");
        value -= mu_price * *extras.price;
    }
    return value;
}

CompositeReward::CompositeReward(std::shared_ptr<const RewardModel> base, double lambda_length, double mu_price)
    : base_(std::move(base))
    , lambda_(lambda_length)
    , mu_(mu_price)
{
    if (lambda_ < 0.0 || mu_ < 0.0 || !std::isfinite(lambda_) || !std::isfinite(mu_))
        throw Error(ErrorCode::ConfigError, "composite penalties must be finite and non-negative");
}

double CompositeReward::score(const Instruction& x, const Trajectory& h, const EnvExtras& extras) const
{
    return composite_score(base_->score(x, h, extras), h, extras, lambda_, mu_);
}

std::string CompositeReward::name() const
{
    return fmt::format("{}+composite(l={:g},m={:g})", base_->name(), lambda_, mu_);
}

} // namespace rplan::reward
