#include "rplan/game24.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rplan/rng.hpp"

namespace rplan::game24 {

namespace {

std::int64_t checked(__int128 v)
{
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw Error(ErrorCode::InvalidArgument, "rational overflow");
    return static_cast<std::int64_t>(v);
}

Rational make(__int128 num, __int128 den)
{
    return Rational(checked(num), checked(den));
}

std::vector<std::string_view> split_ws(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ' && text[j] != '\t')
            ++j;
        if (j > i)
            out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<Op> parse_op(std::string_view token)
{
    if (token.size() != 1)
        return std::nullopt;
    switch (token[0]) {
    case '+': return Op::Add;
    case '-': return Op::Sub;
    case '*': return Op::Mul;
    case '/': return Op::Div;
    default: return std::nullopt;
    }
}

[[noreturn]] void parse_fail(std::string_view text, const std::string& why)
{
    throw Error(ErrorCode::ParseError, "cannot parse step '" + std::string(text) + "': " + why);
}

std::string render_values(const std::vector<Rational>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ' ';
        out += values[i].str();
    }
    return out;
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den)
{
    if (den == 0)
        throw Error(ErrorCode::DivisionByZero, "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = g ? num / g : 0;
    den_ = g ? den / g : 1;
}

std::string Rational::str() const
{
    if (den_ == 1)
        return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<Rational> Rational::parse(std::string_view token)
{
    const auto parse_int = [](std::string_view s, bool allow_sign) -> std::optional<std::int64_t> {
        if (s.empty() || s.size() > 15)
            return std::nullopt;
        std::size_t start = 0;
        if (allow_sign && s[0] == '-')
            start = 1;
        if (start == s.size())
            return std::nullopt;
        for (std::size_t i = start; i < s.size(); ++i)
            if (s[i] < '0' || s[i] > '9')
                return std::nullopt;
        std::int64_t v = 0;
        std::from_chars(s.data() + start, s.data() + s.size(), v);
        return start ? -v : v;
    };
    const auto slash = token.find('/');
    if (slash == std::string_view::npos) {
        auto n = parse_int(token, true);
        if (!n)
            return std::nullopt;
        return Rational(*n);
    }
    auto n = parse_int(token.substr(0, slash), true);
    auto d = parse_int(token.substr(slash + 1), false);
    if (!n || !d || *d == 0)
        return std::nullopt;
    return Rational(*n, *d);
}

Rational operator+(const Rational& a, const Rational& b)
{
    return make(__int128(a.num_) * b.den_ + __int128(b.num_) * a.den_, __int128(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b)
{
    return make(__int128(a.num_) * b.den_ - __int128(b.num_) * a.den_, __int128(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b)
{
    return make(__int128(a.num_) * b.num_, __int128(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b)
{
    if (b.num_ == 0)
        throw Error(ErrorCode::DivisionByZero, a.str() + " / 0");
    return make(__int128(a.num_) * b.den_, __int128(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b)
{
    const __int128 l = __int128(a.num_) * b.den_;
    const __int128 r = __int128(b.num_) * a.den_;
    if (l < r)
        return std::strong_ordering::less;
    if (l > r)
        return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Puzzle make_puzzle(std::span<const int> numbers)
{
    if (numbers.size() != 4)
        throw Error(ErrorCode::InvalidPuzzle, "expected 4 numbers, got " + std::to_string(numbers.size()));
    Puzzle p;
    for (std::size_t i = 0; i < 4; ++i) {
        if (numbers[i] < kMinNumber || numbers[i] > kMaxNumber)
            throw Error(ErrorCode::InvalidPuzzle, "number " + std::to_string(numbers[i]) + " outside [1, 13]");
        p.numbers[i] = numbers[i];
    }
    return p;
}

Puzzle parse_puzzle(std::string_view text)
{
    std::string s = trim(text);
    if (s.rfind("Input:", 0) == 0)
        s = s.substr(6);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::vector<int> numbers;
    for (auto tok : split_ws(s)) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw Error(ErrorCode::InvalidPuzzle, "not an integer: '" + std::string(tok) + "'");
        numbers.push_back(v);
    }
    return make_puzzle(numbers);
}

std::string puzzle_text(const Puzzle& p)
{
    std::string out;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i)
            out += ' ';
        out += std::to_string(p.numbers[i]);
    }
    return out;
}

std::string puzzle_instruction(const Puzzle& p)
{
    return "Input: " + puzzle_text(p);
}

Puzzle random_puzzle(Rng& rng)
{
    Puzzle p;
    for (auto& n : p.numbers)
        n = kMinNumber + static_cast<int>(rng.index(kMaxNumber - kMinNumber + 1));
    return p;
}

NumberPool::NumberPool(std::vector<Rational> values) : values_(std::move(values))
{
    std::sort(values_.begin(), values_.end());
}

NumberPool NumberPool::from_puzzle(const Puzzle& p)
{
    std::vector<Rational> v;
    for (int n : p.numbers)
        v.emplace_back(n);
    return NumberPool(std::move(v));
}

std::size_t NumberPool::count(const Rational& r) const
{
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), r));
}

bool NumberPool::is_target() const
{
    return values_.size() == 1 && values_.front() == Rational(kTarget);
}

std::string NumberPool::str() const
{
    return render_values(values_);
}

char op_symbol(Op op) noexcept
{
    switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    }
    return '?';
}

Rational apply_op(Op op, const Rational& lhs, const Rational& rhs)
{
    switch (op) {
    case Op::Add: return lhs + rhs;
    case Op::Sub: return lhs - rhs;
    case Op::Mul: return lhs * rhs;
    case Op::Div: return lhs / rhs;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown operator");
}

NumberPool apply_step(const NumberPool& pool, const ArithStep& step)
{
    const std::size_t needed_lhs = step.lhs == step.rhs ? 2 : 1;
    if (pool.count(step.lhs) < needed_lhs)
        throw Error(ErrorCode::OperandMissing, step.lhs.str() + " not in pool " + pool.str());
    if (pool.count(step.rhs) < needed_lhs)
        throw Error(ErrorCode::OperandMissing, step.rhs.str() + " not in pool " + pool.str());
    if (step.op == Op::Div && step.rhs.is_zero())
        throw Error(ErrorCode::DivisionByZero, step.lhs.str() + " / 0");
    const Rational actual = apply_op(step.op, step.lhs, step.rhs);
    if (actual != step.result)
        throw Error(ErrorCode::ResultMismatch,
                    render_step(step) + " but the exact result is " + actual.str());

    std::vector<Rational> rest = pool.values();
    rest.erase(std::find(rest.begin(), rest.end(), step.lhs));
    rest.erase(std::find(rest.begin(), rest.end(), step.rhs));
    rest.push_back(actual);
    return NumberPool(std::move(rest));
}

ParsedStep parse_step(std::string_view text)
{
    const std::string body = trim(text);
    std::string_view view(body);
    std::string_view head = view;
    std::string_view annotation;
    if (const auto paren = view.find('('); paren != std::string_view::npos) {
        head = view.substr(0, paren);
        annotation = view.substr(paren);
    }

    const auto tokens = split_ws(head);
    if (tokens.size() != 5 || tokens[3] != "=")
        parse_fail(text, "expected '<a> <op> <b> = <c>'");
    const auto lhs = Rational::parse(tokens[0]);
    const auto op = parse_op(tokens[1]);
    const auto rhs = Rational::parse(tokens[2]);
    const auto result = Rational::parse(tokens[4]);
    if (!lhs || !op || !rhs || !result)
        parse_fail(text, "bad operand or operator");

    ParsedStep parsed{ArithStep{*lhs, *op, *rhs, *result}, std::nullopt};
    if (!annotation.empty()) {
        constexpr std::string_view prefix = "(left:";
        if (annotation.substr(0, prefix.size()) != prefix || annotation.back() != ')')
            parse_fail(text, "malformed '(left: ...)' annotation");
        const auto inner = annotation.substr(prefix.size(), annotation.size() - prefix.size() - 1);
        std::vector<Rational> left;
        for (auto tok : split_ws(inner)) {
            auto r = Rational::parse(tok);
            if (!r)
                parse_fail(text, "bad number in annotation");
            left.push_back(*r);
        }
        if (left.empty())
            parse_fail(text, "empty annotation");
        parsed.left = std::move(left);
    }
    return parsed;
}

std::optional<std::string> annotation_warning(const ParsedStep& parsed, const NumberPool& after)
{
    if (!parsed.left)
        return std::nullopt;
    NumberPool claimed(*parsed.left);
    if (claimed == after)
        return std::nullopt;
    return "annotation lists (" + claimed.str() + ") but the pool is (" + after.str() + ")";
}

std::string render_step(const ArithStep& step)
{
    std::string out = step.lhs.str();
    out += ' ';
    out += op_symbol(step.op);
    out += ' ';
    out += step.rhs.str();
    out += " = ";
    out += step.result.str();
    return out;
}

std::string render_step(const ArithStep& step, const NumberPool& after)
{
    return render_step(step) + " (left: " + after.str() + ")";
}

namespace {

// (lhs, op, rhs) candidates for operands a (earlier) and b (later), in the fixed order.
template <typename Fn>
void for_each_candidate(const Rational& a, const Rational& b, Fn&& fn)
{
    fn(a, Op::Add, b);
    fn(b, Op::Sub, a);
    fn(a, Op::Sub, b);
    fn(a, Op::Mul, b);
    if (!a.is_zero())
        fn(b, Op::Div, a);
    if (!b.is_zero())
        fn(a, Op::Div, b);
}

NumberPool combine(const std::vector<Rational>& values, std::size_t i, std::size_t j, const Rational& r)
{
    std::vector<Rational> rest;
    rest.reserve(values.size() - 1);
    for (std::size_t m = 0; m < values.size(); ++m)
        if (m != i && m != j)
            rest.push_back(values[m]);
    rest.push_back(r);
    return NumberPool(std::move(rest));
}

bool solve(const NumberPool& pool, std::vector<ArithStep>& path)
{
    if (pool.size() == 1)
        return pool.is_target();
    const auto& v = pool.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            bool found = false;
            for_each_candidate(v[i], v[j], [&](const Rational& l, Op op, const Rational& r) {
                if (found)
                    return;
                const Rational res = apply_op(op, l, r);
                path.push_back(ArithStep{l, op, r, res});
                if (solve(combine(v, i, j, res), path))
                    found = true;
                else
                    path.pop_back();
            });
            if (found)
                return true;
        }
    }
    return false;
}

} // namespace

std::vector<Action> enumerate_actions(const NumberPool& pool, std::size_t k)
{
    if (pool.size() < 2)
        throw Error(ErrorCode::TerminalPool, "pool " + pool.str() + " has no legal step");
    std::vector<Action> out;
    const auto& v = pool.values();
    for (std::size_t i = 0; i < v.size() && out.size() < k; ++i) {
        for (std::size_t j = i + 1; j < v.size() && out.size() < k; ++j) {
            for_each_candidate(v[i], v[j], [&](const Rational& l, Op op, const Rational& r) {
                if (out.size() >= k)
                    return;
                const ArithStep step{l, op, r, apply_op(op, l, r)};
                std::string text = render_step(step, combine(v, i, j, step.result));
                const bool seen = std::any_of(out.begin(), out.end(),
                                              [&](const Action& a) { return a.text == text; });
                if (!seen)
                    out.push_back(Action{std::move(text)});
            });
        }
    }
    return out;
}

Solution oracle_solve(const NumberPool& pool)
{
    Solution s;
    s.solvable = solve(pool, s.witness);
    if (!s.solvable)
        s.witness.clear();
    return s;
}

Solution oracle_solve(const Puzzle& p)
{
    return oracle_solve(NumberPool::from_puzzle(p));
}

std::optional<NumberPool> parse_pool(std::string_view text)
{
    std::vector<Rational> values;
    for (auto tok : split_ws(text)) {
        auto r = Rational::parse(tok);
        if (!r)
            return std::nullopt;
        values.push_back(*r);
    }
    if (values.empty() || values.size() > 4)
        return std::nullopt;
    return NumberPool(std::move(values));
}

OutcomeReport oracle_outcome(const Trajectory& t)
{
    OutcomeReport report;
    Puzzle puzzle;
    try {
        puzzle = parse_puzzle(t.instruction.text);
    } catch (const Error& e) {
        report.diagnostic = e.what();
        return report;
    }
    NumberPool pool = NumberPool::from_puzzle(puzzle);
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        try {
            pool = apply_step(pool, parse_step(t.actions[i].text).step);
        } catch (const Error& e) {
            report.diagnostic = "step " + std::to_string(i + 1) + ": " + e.what();
            return report;
        }
    }
    report.outcome.success = pool.is_target();
    report.outcome.oracle_reward = report.outcome.success ? 1.0 : 0.0;
    return report;
}

Observation Game24Environment::reset(const Instruction& instruction)
{
    const Puzzle p = parse_puzzle(instruction.text);
    pool_ = NumberPool::from_puzzle(p);
    started_ = true;
    return Observation{puzzle_text(p), std::nullopt};
}

std::vector<Action> Game24Environment::valid_actions() const
{
    if (is_terminal())
        return {};
    return enumerate_actions(pool_);
}

Observation Game24Environment::step(const Action& action)
{
    const Observation no_match{std::string(kNoMatchObservation), std::nullopt};
    if (is_terminal())
        return no_match;
    try {
        const ParsedStep parsed = parse_step(action.text);
        NumberPool next = apply_step(pool_, parsed.step);
        if (auto warning = annotation_warning(parsed, next))
            spdlog::warn("game24: {}", *warning);
        pool_ = std::move(next);
    } catch (const Error&) {
        return no_match;
    }
    return Observation{pool_.str(), std::nullopt};
}

bool Game24Environment::is_terminal() const
{
    return started_ && pool_.size() <= 1;
}

TaskOutcome Game24Environment::oracle_outcome() const
{
    const bool ok = started_ && pool_.is_target();
    return TaskOutcome{ok ? 1.0 : 0.0, ok};
}

std::unique_ptr<Environment> Game24Environment::clone() const
{
    return std::make_unique<Game24Environment>(*this);
}

EnvironmentFactory make_factory()
{
    return [](const Instruction&) { return std::make_unique<Game24Environment>(); };
}

} // namespace rplan::game24
