#include "rplan/shop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rplan/rng.hpp"

namespace rplan::shop {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void schema_error(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::SchemaError, where + ": " + what);
}

json parse_json(std::string_view text, const char* what)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        schema_error(what, std::string("invalid JSON at byte ") + std::to_string(e.byte));
    }
}

std::set<std::string> product_tokens(const Product& p)
{
    std::set<std::string> tokens;
    for (auto& t : tokenize(p.title))
        tokens.insert(t);
    for (const auto& a : p.attributes)
        for (auto& t : tokenize(a))
            tokens.insert(t);
    return tokens;
}

const Product& require_product(const Catalog& catalog, const std::string& id)
{
    const Product* p = catalog.find(id);
    if (!p)
        throw Error(ErrorCode::UnknownProduct, "product " + id + " is not in the catalog");
    return *p;
}

std::size_t page_count(const ShopState& s)
{
    return (s.results.size() + kPageSize - 1) / kPageSize;
}

std::vector<std::string> current_page(const ShopState& s)
{
    const std::size_t b = std::min(s.page * kPageSize, s.results.size());
    const std::size_t e = std::min(b + kPageSize, s.results.size());
    return {s.results.begin() + static_cast<std::ptrdiff_t>(b), s.results.begin() + static_cast<std::ptrdiff_t>(e)};
}

std::string search_query_for(const Catalog& catalog, const Instruction& instruction)
{
    std::vector<std::string> picked;
    for (auto& t : tokenize(instruction.text))
        if (catalog.in_vocabulary(t) && std::find(picked.begin(), picked.end(), t) == picked.end())
            picked.push_back(t);
    if (picked.empty())
        return lower(trim(instruction.text));
    std::string q;
    for (std::size_t i = 0; i < picked.size(); ++i)
        q += (i ? " " : "") + picked[i];
    return q;
}

std::string join_sep(const std::vector<std::string>& parts)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += " [SEP] ";
        out += parts[i];
    }
    return out;
}

} // namespace

std::string format_price(Cents cents)
{
    const bool neg = cents < 0;
    const Cents a = neg ? -cents : cents;
    std::string frac = std::to_string(a % 100);
    if (frac.size() < 2)
        frac = "0" + frac;
    return (neg ? "-" : "") + std::to_string(a / 100) + "." + frac;
}

Cents parse_price(double dollars)
{
    return static_cast<Cents>(std::llround(dollars * 100.0));
}

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '-') {
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

Catalog::Catalog(std::vector<Product> products) : products_(std::move(products))
{
    if (products_.empty())
        schema_error("products", "catalog must be non-empty");
    for (std::size_t i = 0; i < products_.size(); ++i) {
        if (!by_id_.emplace(products_[i].id, i).second)
            schema_error("products[" + std::to_string(i) + "].id", "duplicate id " + products_[i].id);
        if (products_[i].price < 0)
            schema_error("products[" + std::to_string(i) + "].price", "negative price");
    }
    index_ = build_index(products_);
}

std::map<std::string, std::vector<std::string>> Catalog::build_index(const std::vector<Product>& products)
{
    std::map<std::string, std::vector<std::string>> index;
    for (const auto& p : products)
        for (const auto& t : product_tokens(p))
            index[t].push_back(p.id);
    for (auto& [_, ids] : index)
        std::sort(ids.begin(), ids.end());
    return index;
}

const Product* Catalog::find(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &products_[it->second];
}

bool Catalog::index_consistent() const
{
    return build_index(products_) == index_;
}

Catalog parse_catalog(std::string_view json_text)
{
    const json doc = parse_json(json_text, "catalog");
    if (!doc.is_array())
        schema_error("catalog", "expected a JSON array of products");
    std::vector<Product> products;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const std::string where = "products[" + std::to_string(i) + "]";
        try {
            Product p;
            p.id = item.at("id").get<std::string>();
            p.title = item.at("title").get<std::string>();
            for (const auto& a : item.at("attributes"))
                p.attributes.insert(lower(a.get<std::string>()));
            if (auto it = item.find("options"); it != item.end())
                for (const auto& [group, values] : it->items())
                    for (const auto& v : values)
                        p.options[lower(group)].push_back(lower(v.get<std::string>()));
            p.price = parse_price(item.at("price").get<double>());
            p.description = item.value("description", std::string());
            if (p.id.empty())
                schema_error(where + ".id", "empty id");
            products.push_back(std::move(p));
        } catch (const json::exception& e) {
            schema_error(where, e.what());
        }
    }
    return Catalog(std::move(products));
}

Catalog load_catalog(const std::filesystem::path& path)
{
    return parse_catalog(read_file(path));
}

std::string catalog_json(const Catalog& catalog)
{
    ordered_json doc = ordered_json::array();
    for (const auto& p : catalog.products()) {
        ordered_json o;
        o["id"] = p.id;
        o["title"] = p.title;
        o["attributes"] = p.attributes;
        ordered_json opts = ordered_json::object();
        for (const auto& [g, vs] : p.options)
            opts[g] = vs;
        o["options"] = opts;
        o["price"] = static_cast<double>(p.price) / 100.0;
        o["description"] = p.description;
        doc.push_back(std::move(o));
    }
    return doc.dump(1);
}

std::vector<std::string> search(const Catalog& catalog, std::string_view query, std::size_t k)
{
    const auto tokens = tokenize(query);
    if (tokens.empty())
        throw Error(ErrorCode::EmptyQuery, "search query has no tokens");
    std::map<std::string, std::size_t> overlap;
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    for (const auto& t : distinct) {
        auto it = catalog.index().find(t);
        if (it == catalog.index().end())
            continue;
        for (const auto& id : it->second)
            ++overlap[id];
    }
    std::vector<std::pair<std::size_t, std::string>> ranked;
    ranked.reserve(overlap.size());
    for (auto& [id, n] : overlap)
        ranked.emplace_back(n, id);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
        out.push_back(ranked[i].second);
    return out;
}

std::string goal_instruction_text(const UserGoal& goal)
{
    std::string text = "i am looking for";
    for (const auto& a : goal.required_attributes)
        text += " " + a;
    bool first = true;
    for (const auto& [g, v] : goal.required_options) {
        text += first ? " with " : " and ";
        text += g + ": " + v;
        first = false;
    }
    if (goal.price_cap)
        text += ", and price lower than " + format_price(*goal.price_cap) + " dollars";
    return text;
}

std::vector<ShopTask> parse_goals(std::string_view json_text)
{
    const json doc = parse_json(json_text, "goals");
    if (!doc.is_array())
        schema_error("goals", "expected a JSON array");
    std::vector<ShopTask> tasks;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const std::string where = "goals[" + std::to_string(i) + "]";
        try {
            ShopTask t;
            for (const auto& a : item.at("required_attributes"))
                t.goal.required_attributes.insert(lower(a.get<std::string>()));
            if (auto it = item.find("required_options"); it != item.end() && !it->is_null())
                for (const auto& [g, v] : it->items())
                    t.goal.required_options[lower(g)] = lower(v.get<std::string>());
            if (auto it = item.find("price_cap"); it != item.end() && !it->is_null())
                t.goal.price_cap = parse_price(it->get<double>());
            if (t.goal.required_attributes.empty() && t.goal.required_options.empty() && !t.goal.price_cap)
                schema_error(where, "goal has no requirement");
            t.instruction.text = item.contains("instruction") ? item.at("instruction").get<std::string>()
                                                               : goal_instruction_text(t.goal);
            char buf[32];
            std::snprintf(buf, sizeof buf, "shop-%03zu", i);
            t.instruction.id = item.value("id", std::string(buf));
            tasks.push_back(std::move(t));
        } catch (const json::exception& e) {
            schema_error(where, e.what());
        }
    }
    return tasks;
}

std::vector<ShopTask> load_goals(const std::filesystem::path& path)
{
    return parse_goals(read_file(path));
}

std::string goals_json(const std::vector<ShopTask>& tasks)
{
    ordered_json doc = ordered_json::array();
    for (const auto& t : tasks) {
        ordered_json o;
        o["id"] = t.instruction.id;
        o["instruction"] = t.instruction.text;
        o["required_attributes"] = t.goal.required_attributes;
        ordered_json opts = ordered_json::object();
        for (const auto& [g, v] : t.goal.required_options)
            opts[g] = v;
        o["required_options"] = opts;
        o["price_cap"] = t.goal.price_cap ? ordered_json(static_cast<double>(*t.goal.price_cap) / 100.0)
                                          : ordered_json(nullptr);
        doc.push_back(std::move(o));
    }
    return doc.dump(1);
}

Observation render(const Catalog& catalog, const ShopState& state, const Instruction& instruction)
{
    std::vector<std::string> parts;
    switch (state.phase) {
    case Phase::Search:
        parts = {"WebShop", "Instruction:", instruction.text, "Search"};
        break;
    case Phase::Results: {
        parts = {"Back to Search",
                 "Page " + std::to_string(state.page + 1) + " (Total results: " + std::to_string(state.results.size()) + ")"};
        if (state.page > 0)
            parts.emplace_back("< Prev");
        if (state.page + 1 < page_count(state))
            parts.emplace_back("Next >");
        for (const auto& id : current_page(state)) {
            const Product& p = require_product(catalog, id);
            parts.push_back(p.id);
            parts.push_back(p.title);
            parts.push_back("$" + format_price(p.price));
        }
        break;
    }
    case Phase::ProductPage: {
        const Product& p = require_product(catalog, state.product_id);
        parts = {"Back to Search", "< Prev"};
        for (const auto& [g, vs] : p.options) {
            parts.push_back(g);
            for (const auto& v : vs)
                parts.push_back(v);
        }
        parts.push_back(p.title);
        parts.push_back("Price: $" + format_price(p.price));
        parts.insert(parts.end(), {"Rating: N.A.", "Description", "Features", "Reviews", "Buy Now"});
        break;
    }
    case Phase::Done: {
        const Product& p = require_product(catalog, state.product_id);
        parts = {"Thank you for shopping with us!", "Purchased", p.id, p.title, "Options"};
        std::string opts;
        for (const auto& [g, v] : state.chosen_options)
            opts += (opts.empty() ? "" : ", ") + g + ": " + v;
        parts.push_back(opts.empty() ? "none" : opts);
        parts.push_back("Price: $" + format_price(p.price));
        break;
    }
    }
    return Observation{join_sep(parts), std::nullopt};
}

std::vector<Action> page_actions(const Catalog& catalog, const ShopState& state, const Instruction& instruction)
{
    std::vector<Action> out;
    switch (state.phase) {
    case Phase::Search:
        out.push_back(Action{"search[" + search_query_for(catalog, instruction) + "]"});
        break;
    case Phase::Results:
        out.push_back(Action{"click[back to search]"});
        if (state.page + 1 < page_count(state))
            out.push_back(Action{"click[next >]"});
        if (state.page > 0)
            out.push_back(Action{"click[< prev]"});
        for (const auto& id : current_page(state))
            out.push_back(Action{"click[" + id + "]"});
        break;
    case Phase::ProductPage: {
        out.push_back(Action{"click[back to search]"});
        out.push_back(Action{"click[< prev]"});
        const Product& p = require_product(catalog, state.product_id);
        for (const auto& [g, vs] : p.options)
            for (const auto& v : vs)
                out.push_back(Action{"click[" + v + "]"});
        out.push_back(Action{"click[buy now]"});
        break;
    }
    case Phase::Done:
        break;
    }
    return out;
}

StepResult step(const Catalog& catalog, const ShopState& state, std::string_view action)
{
    // Instruction text only matters for the search page rendering; callers re-render when needed.
    const Instruction none;
    const auto no_match = [&] {
        return StepResult{state, Observation{std::string(kNoMatchObservation), std::nullopt}};
    };
    const std::string a = lower(trim(action));
    const auto bracket = [&](std::string_view verb) -> std::optional<std::string> {
        if (a.size() < verb.size() + 2 || a.compare(0, verb.size(), verb) != 0 || a[verb.size()] != '['
            || a.back() != ']')
            return std::nullopt;
        return trim(std::string_view(a).substr(verb.size() + 1, a.size() - verb.size() - 2));
    };

    ShopState next = state;
    if (state.phase == Phase::Done)
        return no_match();

    if (auto q = bracket("search")) {
        if (state.phase != Phase::Search || q->empty() || tokenize(*q).empty())
            return no_match();
        next.phase = Phase::Results;
        next.page = 0;
        next.last_query = *q;
        next.results = search(catalog, *q, kMaxResults);
        return {next, render(catalog, next, none)};
    }
    auto target = bracket("click");
    if (!target)
        return no_match();

    if (*target == "back to search" && state.phase != Phase::Search) {
        next = ShopState{};
        next.last_query = state.last_query;
        return {next, render(catalog, next, none)};
    }
    if (state.phase == Phase::Results) {
        if (*target == "next >" && state.page + 1 < page_count(state)) {
            ++next.page;
            return {next, render(catalog, next, none)};
        }
        if (*target == "< prev" && state.page > 0) {
            --next.page;
            return {next, render(catalog, next, none)};
        }
        for (const auto& id : current_page(state)) {
            if (lower(id) == *target) {
                next.phase = Phase::ProductPage;
                next.product_id = id;
                next.chosen_options.clear();
                return {next, render(catalog, next, none)};
            }
        }
        return no_match();
    }
    if (state.phase == Phase::ProductPage) {
        if (*target == "< prev") {
            next.phase = Phase::Results;
            next.product_id.clear();
            next.chosen_options.clear();
            return {next, render(catalog, next, none)};
        }
        if (*target == "buy now") {
            next.phase = Phase::Done;
            return {next, render(catalog, next, none)};
        }
        const Product& p = require_product(catalog, state.product_id);
        for (const auto& [g, vs] : p.options) {
            if (std::find(vs.begin(), vs.end(), *target) != vs.end()) {
                next.chosen_options[g] = *target;
                return {next, render(catalog, next, none)};
            }
        }
    }
    return no_match();
}

double matching_reward(const UserGoal& goal, const ShopState& final_state, const Catalog& catalog)
{
    if (final_state.phase != Phase::Done)
        return 0.0;
    const Product& p = require_product(catalog, final_state.product_id);
    double hit = 0.0;
    double total = 0.0;
    for (const auto& a : goal.required_attributes) {
        total += 1.0;
        if (p.attributes.count(a))
            hit += 1.0;
    }
    for (const auto& [g, v] : goal.required_options) {
        total += 1.0;
        auto it = final_state.chosen_options.find(g);
        if (it != final_state.chosen_options.end() && it->second == v)
            hit += 1.0;
    }
    if (goal.price_cap) {
        total += 1.0;
        if (p.price <= *goal.price_cap)
            hit += 1.0;
    }
    return total > 0.0 ? hit / total : 0.0;
}

double price_of(const ShopState& final_state, const Catalog& catalog)
{
    if (final_state.phase != Phase::Done)
        return 0.0;
    return static_cast<double>(require_product(catalog, final_state.product_id).price) / 100.0;
}

ShopEnvironment::ShopEnvironment(std::shared_ptr<const Catalog> catalog, UserGoal goal)
    : catalog_(std::move(catalog))
    , goal_(std::move(goal))
{
}

Observation ShopEnvironment::reset(const Instruction& instruction)
{
    instruction_ = instruction;
    state_ = ShopState{};
    return render(*catalog_, state_, instruction_);
}

std::vector<Action> ShopEnvironment::valid_actions() const
{
    return page_actions(*catalog_, state_, instruction_);
}

Observation ShopEnvironment::step(const Action& action)
{
    auto r = shop::step(*catalog_, state_, action.text);
    state_ = std::move(r.state);
    if (state_.phase == Phase::Search && r.observation.text != kNoMatchObservation)
        return render(*catalog_, state_, instruction_);
    return std::move(r.observation);
}

bool ShopEnvironment::is_terminal() const
{
    return state_.phase == Phase::Done;
}

TaskOutcome ShopEnvironment::oracle_outcome() const
{
    const double r = matching_reward(goal_, state_, *catalog_);
    return TaskOutcome{r, r >= 1.0};
}

std::unique_ptr<Environment> ShopEnvironment::clone() const
{
    return std::make_unique<ShopEnvironment>(*this);
}

std::optional<double> ShopEnvironment::price() const
{
    return price_of(state_, *catalog_);
}

EnvironmentFactory make_factory(std::shared_ptr<const Catalog> catalog, std::vector<ShopTask> tasks)
{
    auto shared = std::make_shared<const std::vector<ShopTask>>(std::move(tasks));
    return [catalog, shared](const Instruction& instruction) -> std::unique_ptr<Environment> {
        for (const auto& t : *shared)
            if (!instruction.id.empty() && t.instruction.id == instruction.id)
                return std::make_unique<ShopEnvironment>(catalog, t.goal);
        for (const auto& t : *shared)
            if (t.instruction.text == instruction.text)
                return std::make_unique<ShopEnvironment>(catalog, t.goal);
        throw Error(ErrorCode::InvalidArgument, "no shop goal for instruction '" + instruction.id + "'");
    };
}

namespace {

struct Category {
    const char* noun;
    std::vector<const char*> attributes;
    std::vector<std::pair<const char*, std::vector<const char*>>> options;
};

const std::vector<Category>& categories()
{
    static const std::vector<Category> cats = {
        {"sneaker",
         {"canvas", "sport", "fashion", "lace-up", "rubber-sole", "slip-resistant", "lightweight", "breathable"},
         {{"color", {"black", "white", "navy", "red"}}, {"size", {"7", "8", "9", "10"}}}},
        {"deodorant",
         {"aluminum-free", "natural", "citrus", "sensitive-skin", "long-lasting", "vegan", "travel-size"},
         {{"scent", {"citrus", "lavender", "unscented"}}, {"size", {"3 ounce", "2 pack"}}}},
        {"headphones",
         {"wireless", "bluetooth", "noise-cancelling", "over-ear", "foldable", "waterproof"},
         {{"color", {"black", "silver", "blue"}}}},
        {"mug",
         {"ceramic", "insulated", "dishwasher-safe", "microwave-safe", "12-ounce", "travel"},
         {{"color", {"white", "black", "green"}}}},
        {"t-shirt",
         {"cotton", "slim-fit", "crew-neck", "short-sleeve", "machine-wash", "v-neck"},
         {{"color", {"gray", "black", "white", "blue"}}, {"size", {"small", "medium", "large", "x-large"}}}},
        {"backpack",
         {"water-resistant", "laptop", "anti-theft", "lightweight", "usb-charging"},
         {{"color", {"black", "gray", "navy"}}}},
        {"lamp", {"led", "dimmable", "usb", "bedside", "touch-control"}, {{"color", {"white", "black"}}}},
        {"pillow",
         {"memory-foam", "hypoallergenic", "cooling", "adjustable", "washable"},
         {{"size", {"queen", "king", "standard"}}}},
    };
    return cats;
}

const std::vector<const char*>& brands()
{
    static const std::vector<const char*> b = {"Vexa", "Nordell", "Quill", "Orbisk", "Tamaro", "Lumen",
                                               "Kestrel", "Brio", "Halden", "Sorrel", "Makoa", "Ferro"};
    return b;
}

std::string random_id(Rng& rng)
{
    static constexpr char kAlphabet[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::string id = "B0";
    for (int i = 0; i < 8; ++i)
        id += kAlphabet[rng.index(36)];
    return id;
}

std::string capitalize(std::string s)
{
    if (!s.empty())
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

} // namespace

Catalog generate_catalog(std::uint64_t seed, std::size_t families)
{
    Rng rng(derive_seed(seed, 0x5107));
    std::vector<Product> products;
    std::set<std::string> used_ids;
    for (std::size_t f = 0; f < families; ++f) {
        const Category& cat = categories()[rng.index(categories().size())];
        std::vector<const char*> attrs = cat.attributes;
        rng.shuffle(attrs.begin(), attrs.end());
        const std::size_t n_attr = 3 + rng.index(2);
        Product base;
        base.title = brands()[rng.index(brands().size())];
        for (std::size_t i = 0; i < n_attr && i < attrs.size(); ++i) {
            base.attributes.insert(attrs[i]);
            base.title += " " + capitalize(attrs[i]);
        }
        base.attributes.insert(cat.noun);
        base.title += " " + capitalize(cat.noun);
        for (const auto& [group, values] : cat.options) {
            std::vector<const char*> vs = values;
            rng.shuffle(vs.begin(), vs.end());
            const std::size_t n = std::min<std::size_t>(vs.size(), 2 + rng.index(2));
            std::vector<std::string> chosen(vs.begin(), vs.begin() + static_cast<std::ptrdiff_t>(n));
            std::sort(chosen.begin(), chosen.end());
            base.options[group] = std::move(chosen);
        }
        base.description = "A " + std::string(cat.noun) + " from " + base.title.substr(0, base.title.find(' ')) + ".";

        for (int listing = 0; listing < 2; ++listing) {
            Product p = base;
            do {
                p.id = random_id(rng);
            } while (!used_ids.insert(p.id).second);
            p.price = 500 + static_cast<Cents>(rng.index(14501));
            if (f == 0) {
                p.id = listing == 0 ? "B09STMXYR5" : "B09QKP7XQL";
                p.price = listing == 0 ? 2836 : 4266;
                used_ids.insert(p.id);
            }
            products.push_back(std::move(p));
        }
    }
    return Catalog(std::move(products));
}

std::vector<ShopTask> generate_goals(const Catalog& catalog, std::uint64_t seed, std::size_t count)
{
    Rng rng(derive_seed(seed, 0x90a1));
    std::vector<ShopTask> tasks;
    for (std::size_t i = 0; i < count; ++i) {
        const Product& p = catalog.products()[rng.index(catalog.products().size())];
        ShopTask t;
        std::vector<std::string> attrs(p.attributes.begin(), p.attributes.end());
        rng.shuffle(attrs.begin(), attrs.end());
        for (std::size_t a = 0; a < 2 && a < attrs.size(); ++a)
            t.goal.required_attributes.insert(attrs[a]);
        if (!p.options.empty()) {
            auto it = p.options.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng.index(p.options.size())));
            t.goal.required_options[it->first] = it->second[rng.index(it->second.size())];
        }
        // Cap above every listing with the same title so both family members qualify.
        Cents family_max = p.price;
        for (const auto& q : catalog.products())
            if (q.title == p.title)
                family_max = std::max(family_max, q.price);
        t.goal.price_cap = ((family_max / 1000) + 1) * 1000;
        char buf[32];
        std::snprintf(buf, sizeof buf, "shop-%03zu", i);
        t.instruction = Instruction{buf, goal_instruction_text(t.goal)};
        tasks.push_back(std::move(t));
    }
    return tasks;
}

} // namespace rplan::shop
