#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rplan/core.hpp"

namespace rplan {
class Rng;
}

namespace rplan::game24 {

inline constexpr int kMinNumber = 1;
inline constexpr int kMaxNumber = 13;
inline constexpr int kTarget = 24;

// Exact rational, always reduced with a positive denominator.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    bool is_zero() const noexcept { return num_ == 0; }

    // "7", "-2", "11/4"
    std::string str() const;
    static std::optional<Rational> parse(std::string_view token);

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

struct Puzzle {
    std::array<int, 4> numbers{};

    bool operator==(const Puzzle&) const = default;
};

// Throws InvalidPuzzle unless there are exactly four numbers in [1, 13].
Puzzle make_puzzle(std::span<const int> numbers);
// Accepts "12 10 8 4", "Input: 12 10 8 4" or comma separated forms.
Puzzle parse_puzzle(std::string_view text);
std::string puzzle_text(const Puzzle& p);
std::string puzzle_instruction(const Puzzle& p);
Puzzle random_puzzle(Rng& rng);

// Multiset of rationals, stored ascending.
class NumberPool {
public:
    NumberPool() = default;
    explicit NumberPool(std::vector<Rational> values);
    static NumberPool from_puzzle(const Puzzle& p);

    const std::vector<Rational>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t count(const Rational& r) const;
    bool is_target() const;
    // Space separated, ascending: "2 4 12".
    std::string str() const;

    bool operator==(const NumberPool&) const = default;

private:
    std::vector<Rational> values_;
};

enum class Op { Add, Sub, Mul, Div };

char op_symbol(Op op) noexcept;
Rational apply_op(Op op, const Rational& lhs, const Rational& rhs);

struct ArithStep {
    Rational lhs;
    Op op = Op::Add;
    Rational rhs;
    Rational result;

    bool operator==(const ArithStep&) const = default;
};

struct ParsedStep {
    ArithStep step;
    // The "(left: ...)" annotation when present.
    std::optional<std::vector<Rational>> left;
};

// Throws OperandMissing, DivisionByZero or ResultMismatch.
NumberPool apply_step(const NumberPool& pool, const ArithStep& step);

// "A op B = C" with an optional " (left: ...)" suffix. Throws ParseError otherwise.
ParsedStep parse_step(std::string_view text);
// Non-empty when the annotation disagrees with the actual pool after the step.
std::optional<std::string> annotation_warning(const ParsedStep& parsed, const NumberPool& after);

// "10 - 8 = 2" or, with a pool, "10 - 8 = 2 (left: 2 4 12)".
std::string render_step(const ArithStep& step);
std::string render_step(const ArithStep& step, const NumberPool& after);

// Legal steps from `pool`: operand pairs in ascending index order, then
// a+b, b-a, a-b, a*b, b/a, a/b (a before b in the pool). Duplicated renderings are dropped.
// Throws TerminalPool when fewer than two numbers remain.
std::vector<Action> enumerate_actions(const NumberPool& pool,
                                      std::size_t k = std::numeric_limits<std::size_t>::max());

struct Solution {
    bool solvable = false;
    std::vector<ArithStep> witness;
};

// Exhaustive search in enumerate_actions order; the first witness found is returned.
Solution oracle_solve(const Puzzle& p);
Solution oracle_solve(const NumberPool& pool);
// Parses a rendered pool such as "2 4 12" or "-2 11/4"; nullopt for anything else.
std::optional<NumberPool> parse_pool(std::string_view text);

struct OutcomeReport {
    TaskOutcome outcome;
    std::optional<std::string> diagnostic;
};

// Replays the trajectory's actions from the puzzle in its instruction. Any replay problem scores 0.
OutcomeReport oracle_outcome(const Trajectory& t);

class Game24Environment final : public Environment {
public:
    Observation reset(const Instruction& instruction) override;
    std::vector<Action> valid_actions() const override;
    Observation step(const Action& action) override;
    bool is_terminal() const override;
    TaskOutcome oracle_outcome() const override;
    std::unique_ptr<Environment> clone() const override;
    bool free_form_actions() const override { return true; }

    const NumberPool& pool() const noexcept { return pool_; }

private:
    NumberPool pool_;
    bool started_ = false;
};

EnvironmentFactory make_factory();

} // namespace rplan::game24
