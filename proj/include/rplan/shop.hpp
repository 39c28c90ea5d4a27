#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rplan/core.hpp"

namespace rplan::shop {

inline constexpr std::size_t kPageSize = 10;
inline constexpr std::size_t kMaxResults = 50;

// Prices are kept in integer cents.
using Cents = std::int64_t;

std::string format_price(Cents cents); // "28.36"
Cents parse_price(double dollars);

struct Product {
    std::string id;
    std::string title;
    std::set<std::string> attributes;
    std::map<std::string, std::vector<std::string>> options;
    Cents price = 0;
    std::string description;
};

// Lowercase tokens; splits on anything that is not alphanumeric or '-'.
std::vector<std::string> tokenize(std::string_view text);

class Catalog {
public:
    explicit Catalog(std::vector<Product> products);

    const std::vector<Product>& products() const noexcept { return products_; }
    const Product* find(std::string_view id) const;
    const std::map<std::string, std::vector<std::string>>& index() const noexcept { return index_; }
    bool index_consistent() const;
    bool in_vocabulary(const std::string& token) const { return index_.count(token) != 0; }

private:
    static std::map<std::string, std::vector<std::string>> build_index(const std::vector<Product>& products);

    std::vector<Product> products_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, std::vector<std::string>> index_;
};

// Throws IoError or SchemaError.
Catalog load_catalog(const std::filesystem::path& path);
Catalog parse_catalog(std::string_view json_text);
std::string catalog_json(const Catalog& catalog);

// Ranked by distinct query-token overlap with title + attributes, then ascending id.
// Products with no overlap are not returned. Throws EmptyQuery.
std::vector<std::string> search(const Catalog& catalog, std::string_view query, std::size_t k);

struct UserGoal {
    std::set<std::string> required_attributes;
    std::map<std::string, std::string> required_options;
    std::optional<Cents> price_cap;

    bool operator==(const UserGoal&) const = default;
};

struct ShopTask {
    Instruction instruction;
    UserGoal goal;
};

std::string goal_instruction_text(const UserGoal& goal);
std::vector<ShopTask> load_goals(const std::filesystem::path& path);
std::vector<ShopTask> parse_goals(std::string_view json_text);
std::string goals_json(const std::vector<ShopTask>& tasks);

enum class Phase { Search, Results, ProductPage, Done };

struct ShopState {
    Phase phase = Phase::Search;
    std::size_t page = 0;
    std::vector<std::string> results;
    std::string product_id;
    std::map<std::string, std::string> chosen_options;
    std::string last_query;

    bool operator==(const ShopState&) const = default;
};

struct StepResult {
    ShopState state;
    Observation observation;
};

// Page machine. Unknown or inapplicable actions return the no-match observation and the same state.
StepResult step(const Catalog& catalog, const ShopState& state, std::string_view action);
Observation render(const Catalog& catalog, const ShopState& state, const Instruction& instruction);
std::vector<Action> page_actions(const Catalog& catalog, const ShopState& state, const Instruction& instruction);

// Fraction of satisfied requirement terms of a purchase; 0 without one. Throws UnknownProduct.
double matching_reward(const UserGoal& goal, const ShopState& final_state, const Catalog& catalog);
// Purchased price in dollars; 0 without a purchase. Throws UnknownProduct.
double price_of(const ShopState& final_state, const Catalog& catalog);

class ShopEnvironment final : public Environment {
public:
    ShopEnvironment(std::shared_ptr<const Catalog> catalog, UserGoal goal);

    Observation reset(const Instruction& instruction) override;
    std::vector<Action> valid_actions() const override;
    Observation step(const Action& action) override;
    bool is_terminal() const override;
    TaskOutcome oracle_outcome() const override;
    std::unique_ptr<Environment> clone() const override;
    std::optional<double> price() const override;

    const ShopState& state() const noexcept { return state_; }
    const UserGoal& goal() const noexcept { return goal_; }

private:
    std::shared_ptr<const Catalog> catalog_;
    UserGoal goal_;
    Instruction instruction_;
    ShopState state_;
};

// Looks tasks up by instruction id, falling back to instruction text.
EnvironmentFactory make_factory(std::shared_ptr<const Catalog> catalog, std::vector<ShopTask> tasks);

// Deterministic toy catalog: products come in families of two listings that share title,
// attributes and options but differ in price. Always contains B09STMXYR5 at 28.36.
Catalog generate_catalog(std::uint64_t seed, std::size_t families);
// Goals sampled from catalog products, so each is satisfiable by at least one listing.
std::vector<ShopTask> generate_goals(const Catalog& catalog, std::uint64_t seed, std::size_t count);

} // namespace rplan::shop
