#include <doctest.h>

#include "rplan/core.hpp"
#include "rplan/game24.hpp"
#include "rplan/rng.hpp"
#include "rplan/shop.hpp"
#include "support.hpp"

using namespace rplan;

namespace {

Trajectory sample(std::size_t steps)
{
    Trajectory t = Trajectory::start({"t-1", "Input: 12 10 8 4"}, Observation{"12 10 8 4", std::nullopt});
    for (std::size_t i = 0; i < steps; ++i)
        t.push(Action{"a" + std::to_string(i)}, Observation{"o" + std::to_string(i), std::nullopt});
    return t;
}

std::string random_text(Rng& rng)
{
    static const std::vector<std::string> pieces = {"a", "Z", "7", " ", "\"", "\\", "/", "\t", "{", "]", ":", ",", "\xc3\xa9"};
    std::string s;
    const auto n = rng.index(12);
    for (std::size_t i = 0; i < n; ++i)
        s += pieces[rng.index(pieces.size())];
    return s;
}

} // namespace

TEST_CASE("append grows the trajectory and leaves the original alone")
{
    const Trajectory t = sample(0);
    const Trajectory u = trajectory_append(t, Action{"10 - 8 = 2 (left: 2 4 12)"}, Observation{"2 4 12", std::nullopt});
    CHECK(t.size() == 0);
    CHECK(t.observations.size() == 1);
    CHECK(u.size() == 1);
    const Trajectory v = trajectory_append(u, Action{"x"}, Observation{"y", std::nullopt});
    CHECK(v.actions.size() == 2);
    CHECK(v.observations.size() == 3);
}

TEST_CASE("append errors")
{
    CHECK_ERROR_CODE(trajectory_append(sample(10), Action{"x"}, Observation{}), ErrorCode::MaxLengthExceeded);
    Trajectory done = sample(2);
    done.terminal = true;
    CHECK_ERROR_CODE(trajectory_append(done, Action{"x"}, Observation{}), ErrorCode::AppendToTerminal);
}

TEST_CASE("validate")
{
    CHECK_FALSE(validate_trajectory(sample(3)).has_value());
    Trajectory bad = sample(2);
    bad.observations.pop_back();
    const auto issue = validate_trajectory(bad);
    REQUIRE(issue.has_value());
    CHECK(issue->find("observation count") != std::string::npos);

    Trajectory longer = sample(10);
    longer.actions.push_back(Action{"x"});
    longer.observations.push_back(Observation{"y", std::nullopt});
    const auto too_long = validate_trajectory(longer);
    REQUIRE(too_long.has_value());
    CHECK(too_long->find("max length") != std::string::npos);

    Trajectory newline = sample(1);
    newline.actions[0].text = "a\nb";
    CHECK(validate_trajectory(newline).has_value());
    Trajectory blank = sample(1);
    blank.instruction.text = "   ";
    CHECK(validate_trajectory(blank).has_value());
}

TEST_CASE("serialization round trip on random trajectories")
{
    Rng rng(42);
    for (int round = 0; round < 300; ++round) {
        Trajectory t = Trajectory::start({"id-" + std::to_string(round), "x" + random_text(rng)},
                                         Observation{random_text(rng), std::nullopt});
        const auto n = rng.index(11);
        for (std::size_t i = 0; i < n; ++i) {
            std::string a = "a" + random_text(rng);
            t.push(Action{a}, Observation{random_text(rng), std::nullopt});
        }
        t.terminal = rng.index(2) == 1;
        if (rng.index(2))
            t.oracle_reward = static_cast<double>(rng.index(5)) / 4.0;
        const std::string line = serialize_trajectory(t);
        CHECK(line.find('\n') == std::string::npos);
        const Trajectory back = deserialize_trajectory(line);
        CHECK(back == t);
        CHECK(serialize_trajectory(back) == line);
    }
}

TEST_CASE("serialized layout")
{
    Trajectory t = sample(1);
    t.terminal = true;
    t.oracle_reward = 1.0;
    CHECK(serialize_trajectory(t)
          == R"({"instruction":"Input: 12 10 8 4","instruction_id":"t-1","o0":"12 10 8 4","steps":[{"a":"a0","o":"o0"}],"terminal":true,"oracle_reward":1.0})");
    t.oracle_reward.reset();
    CHECK(serialize_trajectory(t).find(R"("oracle_reward":null)") != std::string::npos);
}

TEST_CASE("deserialize errors and forward compatibility")
{
    const std::string line = serialize_trajectory(sample(2));
    CHECK_ERROR_CODE(deserialize_trajectory(line.substr(0, line.size() / 2)), ErrorCode::ParseError);
    try {
        deserialize_trajectory("{\"instruction\": 3", 17);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
    std::string extra = line;
    extra.insert(1, R"("screenshot_digest":"ab12",)");
    CHECK(deserialize_trajectory(extra) == sample(2));
}

TEST_CASE("attachments travel with observations")
{
    Trajectory t = sample(1);
    t.observations[1].attachment = "iVBORw0KGgo=";
    CHECK(deserialize_trajectory(serialize_trajectory(t)) == t);
}

TEST_CASE("environment determinism and clone independence")
{
    Rng rng(7);
    auto catalog = std::make_shared<const shop::Catalog>(shop::generate_catalog(3, 12));
    const auto goals = shop::generate_goals(*catalog, 3, 4);
    for (int round = 0; round < 40; ++round) {
        std::unique_ptr<Environment> env;
        Instruction x;
        if (round % 2 == 0) {
            auto p = game24::random_puzzle(rng);
            x = {"g", game24::puzzle_instruction(p)};
            env = std::make_unique<game24::Game24Environment>();
        } else {
            const auto& g = goals[rng.index(goals.size())];
            x = g.instruction;
            env = std::make_unique<shop::ShopEnvironment>(catalog, g.goal);
        }
        env->reset(x);
        std::vector<Action> actions;
        while (!env->is_terminal() && actions.size() < 8) {
            const auto valid = env->valid_actions();
            if (valid.empty())
                break;
            actions.push_back(rng.index(6) == 0 ? Action{"nonsense"} : valid[rng.index(valid.size())]);
            env->step(actions.back());
        }
        const Trajectory first = replay(*env, x, actions);
        const Trajectory second = replay(*env, x, actions);
        CHECK(first == second);

        env->reset(x);
        const auto before_actions = env->valid_actions();
        const bool before_terminal = env->is_terminal();
        auto copy = env->clone();
        for (int i = 0; i < 4 && !copy->is_terminal(); ++i)
            copy->step(copy->valid_actions().back());
        CHECK(env->valid_actions() == before_actions);
        CHECK(env->is_terminal() == before_terminal);
    }
}

TEST_CASE("invalid actions leave the state alone but count toward length")
{
    game24::Game24Environment env;
    const Instruction x{"g", "Input: 4 6 1 1"};
    env.reset(x);
    const auto before = env.valid_actions();
    const auto o = env.step(Action{"jump"});
    CHECK(o.text == kNoMatchObservation);
    CHECK(env.valid_actions() == before);
    const Trajectory t = replay(env, x, {Action{"jump"}, Action{"jump"}});
    CHECK(t.size() == 2);
}
