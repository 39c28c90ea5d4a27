#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <thread>

#include "rplan/game24.hpp"
#include "rplan/policy.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace rplan;
using namespace rplan::policy;

namespace {

std::vector<Action> actions_of(std::initializer_list<const char*> xs)
{
    std::vector<Action> out;
    for (auto* x : xs)
        out.push_back(Action{x});
    return out;
}

Trajectory fresh(const std::string& id = "t", const std::string& obs = "start")
{
    return Trajectory::start({id, "do the thing"}, Observation{obs, std::nullopt});
}

ChatConfig quick_config(const std::string& url)
{
    ChatConfig c;
    c.base_url = url;
    c.model = "stub";
    c.retry.max_retries = 2;
    c.retry.initial_backoff = std::chrono::milliseconds(1);
    c.retry.timeout = std::chrono::seconds(5);
    return c;
}

} // namespace

TEST_CASE("select at temperature 0 orders by weight then text")
{
    std::vector<Proposal> c{{Action{"b"}, 1.0}, {Action{"a"}, 1.0}, {Action{"z"}, 2.0}, {Action{"c"}, 0.5}};
    const auto out = select(c, 0.0, 99, 3);
    REQUIRE(out.size() == 3);
    CHECK(out[0].action.text == "z");
    CHECK(out[1].action.text == "a");
    CHECK(out[2].action.text == "b");
    CHECK(select(c, 0.0, 1, 0).empty());
    CHECK(select({}, 1.0, 1, 4).empty());
}

TEST_CASE("select samples without replacement and follows the weights")
{
    std::vector<Proposal> c{{Action{"heavy"}, 9.0}, {Action{"light"}, 1.0}};
    int heavy_first = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto out = select(c, 1.0, s, 2);
        REQUIRE(out.size() == 2);
        CHECK(out[0].action.text != out[1].action.text);
        heavy_first += out[0].action.text == "heavy";
    }
    // 0.9 expected; a wide band keeps this a sanity check rather than a flake.
    CHECK(heavy_first > 1700);
    CHECK(heavy_first < 1900);

    // Low temperature sharpens toward the heavier entry.
    int sharp = 0;
    for (std::uint64_t s = 0; s < 500; ++s)
        sharp += select(c, 0.1, s, 1)[0].action.text == "heavy";
    CHECK(sharp == 500);
}

TEST_CASE("random policy is a function of its seed")
{
    const auto t = fresh();
    const auto valid = actions_of({"d", "b", "a", "c"});
    RandomPolicy p;
    const PolicyContext ctx{t, valid, 1.0, 42};
    const auto a = p.propose(ctx, 4);
    const auto b = p.propose(ctx, 4);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].action == b[i].action);
    std::set<std::string> seen;
    for (const auto& x : a)
        seen.insert(x.action.text);
    CHECK(seen.size() == 4);

    const PolicyContext greedy{t, valid, 0.0, 7};
    const auto g = p.propose(greedy, 1);
    REQUIRE(g.size() == 1);
    CHECK(g[0].action.text == "a");

    std::set<std::string> firsts;
    for (std::uint64_t s = 0; s < 64; ++s)
        firsts.insert(p.propose(PolicyContext{t, valid, 1.0, s}, 1)[0].action.text);
    CHECK(firsts.size() == 4);

    const std::vector<Action> none;
    CHECK_ERROR_CODE(p.propose(PolicyContext{t, none, 1.0, 1}, 1), ErrorCode::NoValidActions);
}

TEST_CASE("scripted policy follows routes, observations and memory")
{
    ScriptedPolicy p;
    p.add_route("t", {"search[x]", "click[a]"}, 1.0, 0);
    p.add_route("t", {"search[x]", "click[b]"}, 3.0, 0);
    p.add_route("t", {"search[y]"}, 1.0, 1);
    p.add_observation_rule("stuck", "click[back to search]");
    p.set_reflection("try y");

    const auto valid = actions_of({"search[x]", "search[y]"});
    auto t = fresh();
    auto first = p.propose(PolicyContext{t, valid, 0.0, 1}, 5);
    REQUIRE(first.size() == 1);
    CHECK(first[0].action.text == "search[x]");
    CHECK(first[0].weight == 2.0 * 2.0);

    t.push(Action{"search[x]"}, Observation{"results", std::nullopt});
    auto second = p.propose(PolicyContext{t, valid, 0.0, 1}, 5);
    REQUIRE(second.size() == 2);
    CHECK(second[0].action.text == "click[b]");
    CHECK(second[1].action.text == "click[a]");

    const std::vector<std::string> memory{"one lesson"};
    auto later = p.propose(PolicyContext{fresh(), valid, 0.0, 1, &memory}, 5);
    REQUIRE(later.size() == 1);
    CHECK(later[0].action.text == "search[y]");
    CHECK(p.reflect(t, 0.0, {}) == "try y");

    auto stuck = fresh("other", "stuck");
    auto rule = p.propose(PolicyContext{stuck, valid, 0.0, 1}, 5);
    REQUIRE(rule.size() == 1);
    CHECK(rule[0].action.text == "click[back to search]");

    // No rule: first valid action.
    auto unknown = fresh("other", "elsewhere");
    CHECK(p.propose(PolicyContext{unknown, valid, 0.0, 1}, 5)[0].action.text == "search[x]");
    p.set_fallback("noop");
    const auto fb = p.propose(PolicyContext{unknown, valid, 0.0, 1}, 5);
    CHECK(fb[0].action.text == "noop");
    CHECK(fb[0].free_form);
}

TEST_CASE("scripted policy from JSON")
{
    const auto p = ScriptedPolicy::from_json(
        R"({"routes":[{"instruction_id":"t","actions":["a","b"]}],"fallback":"f","reflection":"r"})");
    const auto valid = actions_of({"a"});
    auto t = fresh();
    CHECK(p.propose(PolicyContext{t, valid, 0.0, 0}, 1)[0].action.text == "a");
    t.push(Action{"a"}, Observation{"o", std::nullopt});
    CHECK(p.propose(PolicyContext{t, valid, 0.0, 0}, 1)[0].action.text == "b");
    CHECK(p.reflect(t, 0.0, {}) == "r");
    CHECK_ERROR_CODE(ScriptedPolicy::from_json("{"), ErrorCode::ParseError);
    CHECK_ERROR_CODE(ScriptedPolicy::from_json(R"({"routes":[{"actions":["a"]}]})"), ErrorCode::SchemaError);
}

TEST_CASE("solver policy reaches 24 on solvable puzzles")
{
    game24::Game24Environment env;
    Game24SolverPolicy policy;
    for (const auto& numbers : std::vector<std::array<int, 4>>{{12, 10, 8, 4}, {1, 1, 11, 11}, {3, 3, 8, 8}}) {
        const auto puzzle = game24::make_puzzle(std::span<const int>(numbers));
        const Instruction ins{"g", game24::puzzle_instruction(puzzle)};
        auto t = Trajectory::start(ins, env.reset(ins));
        while (!env.is_terminal()) {
            const auto valid = env.valid_actions();
            const auto p = policy.propose(PolicyContext{t, valid, 0.0, 0, nullptr, true}, 1);
            REQUIRE(p.size() == 1);
            t.push(p[0].action, env.step(p[0].action));
        }
        CHECK(env.oracle_outcome().success);
    }

    // Exhaustive mode ranks the witness first and keeps every other legal step.
    const int n[4] = {12, 10, 8, 4};
    const auto puzzle = game24::make_puzzle(n);
    const Instruction ins{"g", game24::puzzle_instruction(puzzle)};
    const auto t = Trajectory::start(ins, env.reset(ins));
    const auto valid = env.valid_actions();
    const Game24SolverPolicy wide(true, 0.05);
    const auto all = wide.propose(PolicyContext{t, valid, 0.0, 0, nullptr, true}, 1000);
    CHECK(all.size() == valid.size());
    CHECK(all[0].weight == 1.0);
    for (std::size_t i = 1; i < all.size(); ++i)
        CHECK(all[i].weight == 0.05);
}

TEST_CASE("ReAct parsing")
{
    auto r = parse_react("Thought: think first\nAction: search[red mug]\n");
    CHECK(r.thought == "think first");
    CHECK(r.action.text == "search[red mug]");

    r = parse_react("Thought: a\nAction: x\nThought: b\nAction: y\ntrailing words");
    CHECK(r.thought == "b");
    CHECK(r.action.text == "y");

    r = parse_react("Action:\n\n  click[buy now]  \n");
    CHECK(r.thought.empty());
    CHECK(r.action.text == "click[buy now]");

    CHECK_ERROR_CODE(parse_react("I would buy the mug."), ErrorCode::MissingAction);
    CHECK_ERROR_CODE(parse_react("Thought: x\nAction:   \n"), ErrorCode::MissingAction);

    for (const auto& [thought, action] : std::vector<std::pair<std::string, std::string>>{
             {"", "search[a b]"}, {"plan it", "12 / 4 = 3 (left: 3 8 10)"}, {"multi word thought", "click[< prev]"}}) {
        const auto back = parse_react(render_react(thought, Action{action}));
        CHECK(back.thought == thought);
        CHECK(back.action.text == action);
    }
}

TEST_CASE("prompt rendering is a pure function of its inputs")
{
    auto t = fresh();
    t.push(Action{"search[x]"}, Observation{"results", std::nullopt});
    const auto valid = actions_of({"click[a]", "click[b]"});
    const std::vector<std::string> memory{"look at page two"};
    const auto prompt = PromptTemplate::defaults();
    const PolicyContext ctx{t, valid, 1.0, 3, &memory};
    const auto a = prompt.render(ctx);
    const auto b = prompt.render(PolicyContext{t, valid, 0.0, 999, &memory});
    REQUIRE(a.size() == 2);
    CHECK(a[0].role == "system");
    CHECK(a[1].content == b[1].content);
    CHECK(a[1].content.find("look at page two") != std::string::npos);
    CHECK(a[1].content.find("- click[b]") != std::string::npos);
    CHECK(a[1].content.find("Action: search[x]") != std::string::npos);

    const auto path = std::filesystem::temp_directory_path() / "rplan_prompt_test.txt";
    {
        std::ofstream out(path);
        out << "### system\nBe brief.\n### few-shot\nExample one\n### few-shot\nExample two\n";
    }
    const auto loaded = PromptTemplate::load(path.string());
    CHECK(loaded.system == "Be brief.");
    REQUIRE(loaded.few_shot.size() == 2);
    CHECK(loaded.reflection_system == prompt.reflection_system);
    CHECK(loaded.render(ctx)[1].content.rfind("Example one", 0) == 0);
    std::filesystem::remove(path);
    CHECK_ERROR_CODE(PromptTemplate::load("/nonexistent/prompt.txt"), ErrorCode::IoError);
}

TEST_CASE("chat client returns the completion text and usage")
{
    StubServer server([](const nlohmann::json& body) {
        return std::pair{200, StubServer::chat_reply("echo: " + body["messages"].back()["content"].get<std::string>())};
    });
    auto cfg = quick_config(server.url("/v1"));
    cfg.api_key = "sekrit";
    ChatClient client(cfg);
    const auto c = client.complete({{"system", "s"}, {"user", "hello"}}, 0.5, 17);
    CHECK(c.text == "echo: hello");
    CHECK(c.prompt_tokens == 11);
    CHECK(c.completion_tokens == 5);
    CHECK(c.usage_reported);
    REQUIRE(server.hits() == 1);
    CHECK(server.paths()[0] == "/v1/chat/completions");
    CHECK(server.auth()[0] == "Bearer sekrit");
    const auto body = server.bodies()[0];
    CHECK(body["model"] == "stub");
    CHECK(body["temperature"] == 0.5);
    CHECK(body["seed"] == 17);
    CHECK(body["messages"].size() == 2);
}

TEST_CASE("chat client estimates usage when the server omits it")
{
    StubServer server([](const nlohmann::json&) {
        return std::pair{200, std::string(R"({"choices":[{"message":{"content":"abcdefgh"}}]})")};
    });
    ChatClient client(quick_config(server.url()));
    const auto c = client.complete({{"user", "0123456789abcdef"}}, 1.0);
    CHECK_FALSE(c.usage_reported);
    CHECK(c.prompt_tokens == 4);
    CHECK(c.completion_tokens == 2);
}

TEST_CASE("chat client retries server errors, then gives up")
{
    StubServer server([](const nlohmann::json&) { return std::pair{500, std::string(R"({"error":"boom"})")}; });
    ChatClient client(quick_config(server.url()));
    bool thrown = false;
    try {
        client.complete({{"user", "x"}}, 1.0);
    } catch (const RemoteError& e) {
        thrown = true;
        CHECK(e.status() == 500);
        CHECK(e.body_excerpt().find("boom") != std::string::npos);
    }
    CHECK(thrown);
    CHECK(server.hits() == 3);
}

TEST_CASE("chat client does not retry client errors")
{
    StubServer server([](const nlohmann::json&) { return std::pair{400, std::string("{}")}; });
    ChatClient client(quick_config(server.url()));
    CHECK_ERROR_CODE(client.complete({{"user", "x"}}, 1.0), ErrorCode::RemoteError);
    CHECK(server.hits() == 1);
}

TEST_CASE("chat client rejects malformed replies")
{
    StubServer garbage([](const nlohmann::json&) { return std::pair{200, std::string("not json at all")}; });
    CHECK_ERROR_CODE(ChatClient(quick_config(garbage.url())).complete({{"user", "x"}}, 1.0), ErrorCode::RemoteError);
    StubServer shapeless([](const nlohmann::json&) { return std::pair{200, std::string(R"({"choices":[]})")}; });
    CHECK_ERROR_CODE(ChatClient(quick_config(shapeless.url())).complete({{"user", "x"}}, 1.0),
                     ErrorCode::RemoteError);
    CHECK_ERROR_CODE(ChatClient(ChatConfig{}), ErrorCode::ConfigError);
}

TEST_CASE("chat client times out")
{
    StubServer slow([](const nlohmann::json&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        return std::pair{200, StubServer::chat_reply("late")};
    });
    auto cfg = quick_config(slow.url());
    cfg.retry.max_retries = 0;
    cfg.retry.timeout = std::chrono::seconds(1);
    CHECK_ERROR_CODE(ChatClient(cfg).complete({{"user", "x"}}, 1.0), ErrorCode::TimeoutError);
}

TEST_CASE("remote policy asks again on bad replies and falls back")
{
    std::atomic<int> calls{0};
    StubServer server([&](const nlohmann::json&) {
        const int n = calls++;
        if (n == 0)
            return std::pair{200, StubServer::chat_reply("no idea")};
        if (n == 1)
            return std::pair{200, StubServer::chat_reply("Thought: t\nAction: click[zzz]")};
        return std::pair{200, StubServer::chat_reply("Thought: pick b\nAction: click[b]")};
    });
    auto client = std::make_shared<ChatClient>(quick_config(server.url()));
    RemotePolicy policy(client, PromptTemplate::defaults());
    const auto t = fresh();
    const auto valid = actions_of({"click[a]", "click[b]"});
    const auto out = policy.propose(PolicyContext{t, valid, 0.0, 5}, 3);
    REQUIRE(out.size() == 1);
    CHECK(out[0].action.text == "click[b]");
    CHECK(out[0].thought == std::optional<std::string>("pick b"));
    CHECK_FALSE(out[0].free_form);
    CHECK(server.hits() == 3);
    // The corrective turns are appended to the conversation.
    CHECK(server.bodies()[2]["messages"].size() == 6);

    StubServer mute([](const nlohmann::json&) { return std::pair{200, StubServer::chat_reply("nothing")}; });
    RemotePolicy stubborn(std::make_shared<ChatClient>(quick_config(mute.url())), PromptTemplate::defaults());
    const auto fb = stubborn.propose(PolicyContext{t, valid, 0.0, 5}, 1);
    REQUIRE(fb.size() == 1);
    CHECK(fb[0].free_form);
    CHECK(fb[0].action.text == "<unparseable reply>");
    CHECK(mute.hits() == RemotePolicy::kFormatRetries + 1);
}

TEST_CASE("remote policy samples k replies with distinct seeds")
{
    StubServer server([](const nlohmann::json& body) {
        const auto seed = body.value("seed", std::uint64_t{0});
        return std::pair{200, StubServer::chat_reply(seed % 2 ? "Action: click[a]" : "Action: click[b]")};
    });
    RemotePolicy policy(std::make_shared<ChatClient>(quick_config(server.url())), PromptTemplate::defaults());
    const auto t = fresh();
    const auto valid = actions_of({"click[a]", "click[b]"});
    const auto out = policy.propose(PolicyContext{t, valid, 1.0, 11}, 4);
    CHECK(server.hits() == 4);
    std::set<std::uint64_t> seeds;
    for (const auto& b : server.bodies())
        seeds.insert(b["seed"].get<std::uint64_t>());
    CHECK(seeds.size() == 4);
    CHECK(out.size() <= 2);
    CHECK(policy.reflect(t, 0.0, {}).size() > 0);
}
