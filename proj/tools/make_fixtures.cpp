// Regenerates the toy-shop fixture under data/shop: catalog, goals and a scripted route table.
// Every goal gets a short route to the dearer listing of its family, a detour route to the
// cheaper one, and (when the search shows one) a short route that buys something else.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rplan/error.hpp"
#include "rplan/shop.hpp"

using namespace rplan;

namespace {

constexpr std::uint64_t kCatalogSeed = 2024;
constexpr std::size_t kFamilies = 40;
constexpr std::uint64_t kGoalSeed = 7;
constexpr std::size_t kGoalDraws = 40;
constexpr std::size_t kGoalsKept = 20;

struct Route {
    std::vector<std::string> actions;
    double reward = 0.0;
    double price = 0.0;
};

// Plays the actions; nullopt when any of them is rejected by the page machine.
std::optional<Route> play(const std::shared_ptr<const shop::Catalog>& catalog, const shop::ShopTask& task,
                          const std::vector<std::string>& actions)
{
    shop::ShopEnvironment env(catalog, task.goal);
    env.reset(task.instruction);
    for (const auto& a : actions) {
        const auto o = env.step(Action{a});
        if (o.text == kNoMatchObservation)
            return std::nullopt;
    }
    if (!env.is_terminal())
        return std::nullopt;
    return Route{actions, env.oracle_outcome().oracle_reward, env.price().value_or(0.0)};
}

// Actions from the search box to the product page of `id`, or empty when the search never lists it.
std::vector<std::string> open_product(const std::shared_ptr<const shop::Catalog>& catalog, const shop::ShopTask& task,
                                      const std::string& id)
{
    shop::ShopEnvironment env(catalog, task.goal);
    env.reset(task.instruction);
    std::vector<std::string> path{env.valid_actions().front().text};
    env.step(Action{path.back()});
    for (;;) {
        const auto& page_ids = env.valid_actions();
        for (const auto& a : page_ids)
            if (a.text == "click[" + id + "]") {
                path.push_back(a.text);
                return path;
            }
        bool more = false;
        for (const auto& a : page_ids)
            more = more || a.text == "click[next >]";
        if (!more)
            return {};
        path.push_back("click[next >]");
        env.step(Action{path.back()});
    }
}

void write(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    const std::string dir = argc > 1 ? argv[1] : "data/shop";
    try {
        auto catalog = std::make_shared<const shop::Catalog>(shop::generate_catalog(kCatalogSeed, kFamilies));
        const auto drawn = shop::generate_goals(*catalog, kGoalSeed, kGoalDraws);

        std::vector<shop::ShopTask> kept;
        nlohmann::ordered_json routes = nlohmann::ordered_json::array();
        for (const auto& task : drawn) {
            if (kept.size() == kGoalsKept)
                break;
            // Listings that fully satisfy the goal.
            std::vector<const shop::Product*> family;
            for (const auto& p : catalog->products()) {
                bool ok = true;
                for (const auto& a : task.goal.required_attributes)
                    ok = ok && p.attributes.count(a);
                for (const auto& [g, v] : task.goal.required_options) {
                    const auto it = p.options.find(g);
                    ok = ok && it != p.options.end()
                        && std::find(it->second.begin(), it->second.end(), v) != it->second.end();
                }
                ok = ok && (!task.goal.price_cap || p.price <= *task.goal.price_cap);
                if (ok)
                    family.push_back(&p);
            }
            if (family.size() < 2)
                continue;
            std::sort(family.begin(), family.end(), [](auto* a, auto* b) { return a->price < b->price; });
            const auto* cheap = family.front();
            const auto* dear = family.back();
            if (cheap->price == dear->price)
                continue;

            std::vector<std::string> pick;
            for (const auto& [g, v] : task.goal.required_options)
                pick.push_back("click[" + v + "]");

            auto to_dear = open_product(catalog, task, dear->id);
            auto to_cheap = open_product(catalog, task, cheap->id);
            if (to_dear.empty() || to_cheap.empty())
                continue;
            std::vector<std::string> short_route = to_dear;
            short_route.insert(short_route.end(), pick.begin(), pick.end());
            short_route.push_back("click[buy now]");
            std::vector<std::string> long_route = to_cheap;
            long_route.push_back("click[< prev]");
            long_route.push_back(to_cheap.back());
            long_route.insert(long_route.end(), pick.begin(), pick.end());
            long_route.push_back("click[buy now]");

            const auto a = play(catalog, task, short_route);
            const auto b = play(catalog, task, long_route);
            if (!a || !b || a->reward != 1.0 || b->reward != 1.0 || a->actions.size() >= b->actions.size())
                continue;

            const std::string id = task.instruction.id;
            routes.push_back({{"instruction_id", id}, {"actions", short_route}, {"weight", 1.0}});
            routes.push_back({{"instruction_id", id}, {"actions", long_route}, {"weight", 1.0}});

            // A quick wrong purchase, when the first results page offers an unrelated listing.
            shop::ShopEnvironment env(catalog, task.goal);
            env.reset(task.instruction);
            env.step(Action{to_dear.front()});
            for (const auto& act : env.valid_actions()) {
                if (act.text.rfind("click[B", 0) != 0)
                    continue;
                const std::string other = act.text.substr(6, act.text.size() - 7);
                if (other == cheap->id || other == dear->id)
                    continue;
                const auto c = play(catalog, task, {to_dear.front(), act.text, "click[buy now]"});
                if (c && c->reward < 1.0) {
                    routes.push_back({{"instruction_id", id}, {"actions", c->actions}, {"weight", 1.0}});
                    break;
                }
            }
            kept.push_back(task);
        }
        if (kept.size() < kGoalsKept)
            throw Error(ErrorCode::SchemaError, "not enough goals with two reachable listings");

        nlohmann::ordered_json script;
        script["routes"] = routes;
        write(dir + "/catalog.json", shop::catalog_json(*catalog));
        write(dir + "/goals.json", shop::goals_json(kept));
        write(dir + "/routes.json", script.dump(2) + "\n");
        std::cout << kept.size() << " goals, " << routes.size() << " routes written to " << dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
