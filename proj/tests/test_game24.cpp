#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "rplan/game24.hpp"
#include "rplan/rng.hpp"
#include "support.hpp"

using namespace rplan;
using namespace rplan::game24;

namespace {

NumberPool pool_of(std::initializer_list<int> xs)
{
    std::vector<Rational> v;
    for (int x : xs)
        v.emplace_back(x);
    return NumberPool(v);
}

Trajectory play(const Puzzle& p, const std::vector<std::string>& steps)
{
    Game24Environment env;
    std::vector<Action> actions;
    for (const auto& s : steps)
        actions.push_back(Action{s});
    return replay(env, {"g", puzzle_instruction(p)}, actions);
}

// Count of the 1820 multisets of four numbers from 1..13 that reach 24, computed separately
// by an exhaustive search over exact fractions.
constexpr int kSolvableMultisets = 1362;

} // namespace

TEST_CASE("reset shows the numbers in the given order")
{
    Game24Environment env;
    const int n[4] = {3, 5, 7, 11};
    const auto p = make_puzzle(n);
    const auto o = env.reset({"g", puzzle_instruction(p)});
    CHECK(o.text == "3 5 7 11");
    CHECK(env.valid_actions().size() == 36);
    CHECK(parse_puzzle("12 10 8 4").numbers == std::array<int, 4>{12, 10, 8, 4});
    CHECK(parse_puzzle("Input: 12 10 8 4").numbers == std::array<int, 4>{12, 10, 8, 4});
}

TEST_CASE("puzzle validation")
{
    const int bad[4] = {1, 1, 1, 14};
    CHECK_ERROR_CODE(make_puzzle(bad), ErrorCode::InvalidPuzzle);
    const int zero[4] = {0, 1, 1, 1};
    CHECK_ERROR_CODE(make_puzzle(zero), ErrorCode::InvalidPuzzle);
    CHECK_ERROR_CODE(parse_puzzle("1 2 3"), ErrorCode::InvalidPuzzle);
}

TEST_CASE("apply_step")
{
    CHECK(apply_step(pool_of({12, 10, 8, 4}), parse_step("10 - 8 = 2").step) == pool_of({2, 4, 12}));
    CHECK(apply_step(pool_of({4, 6}), parse_step("6 * 4 = 24").step).is_target());
    CHECK_ERROR_CODE(apply_step(pool_of({5, 3}), ArithStep{5, Op::Div, 0, 0}), ErrorCode::OperandMissing);
    CHECK_ERROR_CODE(apply_step(pool_of({5, 0}), ArithStep{5, Op::Div, 0, 0}), ErrorCode::DivisionByZero);
    CHECK_ERROR_CODE(apply_step(pool_of({5, 3}), ArithStep{5, Op::Add, 3, 9}), ErrorCode::ResultMismatch);
    // equal operands need two copies
    CHECK_ERROR_CODE(apply_step(pool_of({6, 4}), ArithStep{6, Op::Mul, 6, 36}), ErrorCode::OperandMissing);
    CHECK(apply_step(pool_of({6, 6, 1}), ArithStep{6, Op::Mul, 6, 36}) == pool_of({1, 36}));
}

TEST_CASE("parse_step")
{
    const auto a = parse_step("12 / 2 = 6 (left: 4 6)");
    CHECK(a.step == ArithStep{12, Op::Div, 2, 6});
    REQUIRE(a.left.has_value());
    CHECK(a.left->size() == 2);
    CHECK(parse_step("9 - 3 = 6 (left: 2 6 6)").step == ArithStep{9, Op::Sub, 3, 6});
    CHECK(parse_step("10 - 12 = -2 (left: -2 4 8)").step.result == Rational(-2));
    CHECK(parse_step("11 / 4 = 11/4").step.result == Rational(11, 4));
    CHECK_ERROR_CODE(parse_step("hello"), ErrorCode::ParseError);
    CHECK_ERROR_CODE(parse_step("1 + = 2"), ErrorCode::ParseError);

    const auto stale = parse_step("10 - 8 = 2 (left: 2 4 13)");
    const auto next = apply_step(pool_of({12, 10, 8, 4}), stale.step);
    CHECK(annotation_warning(stale, next).has_value());
    CHECK_FALSE(annotation_warning(parse_step("10 - 8 = 2 (left: 2 4 12)"), next).has_value());
}

TEST_CASE("oracle_solve")
{
    const int a[4] = {3, 5, 7, 11};
    const auto s = oracle_solve(make_puzzle(a));
    REQUIRE(s.solvable);
    REQUIRE(s.witness.size() == 3);
    NumberPool pool = NumberPool::from_puzzle(make_puzzle(a));
    for (const auto& step : s.witness)
        pool = apply_step(pool, step);
    CHECK(pool.is_target());

    const int b[4] = {1, 1, 1, 1};
    CHECK_FALSE(oracle_solve(make_puzzle(b)).solvable);
    CHECK(oracle_solve(make_puzzle(b)).witness.empty());
    const int c[4] = {2, 3, 6, 9};
    CHECK(oracle_solve(make_puzzle(c)).solvable);
}

TEST_CASE("solvable count over every multiset")
{
    int solvable = 0;
    for (int a = 1; a <= 13; ++a)
        for (int b = a; b <= 13; ++b)
            for (int c = b; c <= 13; ++c)
                for (int d = c; d <= 13; ++d) {
                    const int n[4] = {a, b, c, d};
                    solvable += oracle_solve(make_puzzle(n)).solvable ? 1 : 0;
                }
    CHECK(solvable == kSolvableMultisets);
}

TEST_CASE("oracle outcome of replayed trajectories")
{
    const int n[4] = {12, 10, 8, 4};
    const auto p = make_puzzle(n);
    const auto good = play(p, {"10 - 8 = 2 (left: 2 4 12)", "12 / 2 = 6 (left: 4 6)", "6 * 4 = 24 (left: 24)"});
    CHECK(good.terminal);
    CHECK(good.oracle_reward == 1.0);
    CHECK(oracle_outcome(good).outcome.oracle_reward == 1.0);

    const auto bad = play(p, {"10 - 12 = -2 (left: -2 4 8)", "8 / 4 = 2 (left: -2 2)", "-2 * 2 = -4 (left: -4)"});
    CHECK(bad.terminal);
    CHECK(bad.oracle_reward == 0.0);
    const auto four = play(p, {"10 - 12 = -2 (left: -2 4 8)", "8 / 4 = 2 (left: -2 2)", "2 - -2 = 4 (left: 4)"});
    CHECK(four.last_observation().text == "4");
    CHECK(four.oracle_reward == 0.0);

    CHECK(play(p, {}).oracle_reward == 0.0);
    CHECK(oracle_outcome(play(p, {})).outcome.oracle_reward == 0.0);
}

TEST_CASE("enumerate_actions")
{
    CHECK_ERROR_CODE(enumerate_actions(pool_of({24})), ErrorCode::TerminalPool);
    const auto two = enumerate_actions(pool_of({2, 3}));
    const std::vector<std::string> expected = {"2 + 3 = 5 (left: 5)", "3 - 2 = 1 (left: 1)", "2 - 3 = -1 (left: -1)",
                                               "2 * 3 = 6 (left: 6)", "3 / 2 = 3/2 (left: 3/2)",
                                               "2 / 3 = 2/3 (left: 2/3)"};
    REQUIRE(two.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(two[i].text == expected[i]);
    const auto k2 = enumerate_actions(pool_of({4, 6}), 2);
    REQUIRE(k2.size() == 2);
    CHECK(k2[0].text == "4 + 6 = 10 (left: 10)");
    CHECK(k2[1].text == "6 - 4 = 2 (left: 2)");
}

TEST_CASE("parse and render agree on every enumerated action")
{
    Rng rng(5);
    for (int round = 0; round < 50; ++round) {
        NumberPool pool = NumberPool::from_puzzle(random_puzzle(rng));
        while (pool.size() > 1) {
            const auto actions = enumerate_actions(pool);
            for (const auto& a : actions) {
                const auto parsed = parse_step(a.text);
                const auto after = apply_step(pool, parsed.step);
                CHECK(render_step(parsed.step, after) == a.text);
                CHECK_FALSE(annotation_warning(parsed, after).has_value());
            }
            pool = apply_step(pool, parse_step(actions[rng.index(actions.size())].text).step);
        }
    }
}

TEST_CASE("three steps always end the game")
{
    Rng rng(9);
    for (int round = 0; round < 100; ++round) {
        Game24Environment env;
        const auto p = random_puzzle(rng);
        env.reset({"g", puzzle_instruction(p)});
        for (int step = 0; step < 3; ++step) {
            CHECK_FALSE(env.is_terminal());
            const auto valid = env.valid_actions();
            env.step(valid[rng.index(valid.size())]);
        }
        CHECK(env.is_terminal());
        CHECK(env.valid_actions().empty());
    }
}

TEST_CASE("multiplying then dividing by the same value is exact")
{
    Rng rng(11);
    for (int round = 0; round < 200; ++round) {
        std::vector<Rational> values;
        for (int i = 0; i < 3; ++i)
            values.emplace_back(static_cast<std::int64_t>(rng.index(25)) - 12, static_cast<std::int64_t>(1 + rng.index(9)));
        const Rational m(static_cast<std::int64_t>(1 + rng.index(12)), static_cast<std::int64_t>(1 + rng.index(7)));
        if (values[0].is_zero())
            continue;
        auto with_m = values;
        with_m.push_back(m);
        const NumberPool start(with_m);
        const Rational product = values[0] * m;
        NumberPool mid = apply_step(start, ArithStep{values[0], Op::Mul, m, product});
        std::vector<Rational> v2 = mid.values();
        v2.push_back(m);
        NumberPool back = apply_step(NumberPool(v2), ArithStep{product, Op::Div, m, values[0]});
        // m was supplied twice and consumed twice, so what is left is the original values
        std::vector<Rational> expect = values;
        auto got = back.values();
        std::sort(got.begin(), got.end());
        std::sort(expect.begin(), expect.end());
        CHECK(got == expect);
    }
}

TEST_CASE("witness replay wins; unsolvable puzzles never win")
{
    Rng rng(13);
    for (int round = 0; round < 60; ++round) {
        const auto p = random_puzzle(rng);
        const auto s = oracle_solve(p);
        if (s.solvable) {
            std::vector<std::string> steps;
            NumberPool pool = NumberPool::from_puzzle(p);
            for (const auto& st : s.witness) {
                pool = apply_step(pool, st);
                steps.push_back(render_step(st, pool));
            }
            CHECK(play(p, steps).oracle_reward == 1.0);
            continue;
        }
        // every trajectory through the full action tree scores 0
        Game24Environment root;
        root.reset({"g", puzzle_instruction(p)});
        std::vector<std::unique_ptr<Environment>> frontier;
        frontier.push_back(root.clone());
        int wins = 0;
        while (!frontier.empty()) {
            auto env = std::move(frontier.back());
            frontier.pop_back();
            if (env->is_terminal()) {
                wins += env->oracle_outcome().oracle_reward > 0.0;
                continue;
            }
            for (const auto& a : env->valid_actions()) {
                auto next = env->clone();
                next->step(a);
                frontier.push_back(std::move(next));
            }
        }
        CHECK(wins == 0);
    }
}

TEST_CASE("rationals stay canonical")
{
    CHECK(Rational(4, -6) == Rational(-2, 3));
    CHECK(Rational(4, -6).str() == "-2/3");
    CHECK(Rational(6, 3).str() == "2");
    CHECK(Rational::parse("11/4") == Rational(11, 4));
    CHECK_FALSE(Rational::parse("1/0").has_value());
    CHECK_FALSE(Rational::parse("x").has_value());
}
