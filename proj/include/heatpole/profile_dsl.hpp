#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "error.hpp"
#include "profiles.hpp"

namespace heatpole::dsl {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class UnaryOp { Neg, Abs, Log, Exp, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Constant {
    double value; // always >= 0; negative literals are Neg(Constant)
};
struct Variable {};
struct Unary {
    UnaryOp op;
    ExprPtr arg;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs, rhs;
};
struct LogK {
    int k; // >= 1
    ExprPtr arg;
};

struct Expr {
    std::variant<Constant, Variable, Unary, Binary, LogK> node;
};

inline ExprPtr make_constant(double v) { return std::make_shared<const Expr>(Expr{Constant{v}}); }
inline ExprPtr make_variable() { return std::make_shared<const Expr>(Expr{Variable{}}); }
inline ExprPtr make_unary(UnaryOp op, ExprPtr a) { return std::make_shared<const Expr>(Expr{Unary{op, std::move(a)}}); }
inline ExprPtr make_binary(BinaryOp op, ExprPtr a, ExprPtr b)
{
    return std::make_shared<const Expr>(Expr{Binary{op, std::move(a), std::move(b)}});
}
inline ExprPtr make_logk(int k, ExprPtr a) { return std::make_shared<const Expr>(Expr{LogK{k, std::move(a)}}); }

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& what, size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset), reason_(what)
    {
    }
    size_t offset() const { return offset_; }
    const std::string& reason() const { return reason_; }

private:
    size_t offset_;
    std::string reason_;
};

class EvalDomainError : public DomainError {
public:
    EvalDomainError(const std::string& what, std::string sub)
        : DomainError(what + " in " + sub), subexpression_(std::move(sub))
    {
    }
    const std::string& subexpression() const { return subexpression_; }

private:
    std::string subexpression_;
};

inline std::string format_number(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string print(const Expr& e)
{
    struct V {
        std::string operator()(const Constant& c) const { return format_number(c.value); }
        std::string operator()(const Variable&) const { return "t"; }
        std::string operator()(const Unary& u) const
        {
            switch (u.op) {
            case UnaryOp::Neg: return "(-" + print(*u.arg) + ")";
            case UnaryOp::Abs: return "abs(" + print(*u.arg) + ")";
            case UnaryOp::Log: return "log(" + print(*u.arg) + ")";
            case UnaryOp::Exp: return "exp(" + print(*u.arg) + ")";
            default: return "sqrt(" + print(*u.arg) + ")";
            }
        }
        std::string operator()(const Binary& b) const
        {
            const char* op = " + ";
            switch (b.op) {
            case BinaryOp::Add: op = " + "; break;
            case BinaryOp::Sub: op = " - "; break;
            case BinaryOp::Mul: op = " * "; break;
            case BinaryOp::Div: op = " / "; break;
            case BinaryOp::Pow: op = " ^ "; break;
            }
            return "(" + print(*b.lhs) + op + print(*b.rhs) + ")";
        }
        std::string operator()(const LogK& l) const
        {
            return "logk(" + std::to_string(l.k) + ", " + print(*l.arg) + ")";
        }
    };
    return std::visit(V{}, e.node);
}

inline bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a.node.index() != b.node.index()) return false;
    if (auto* c = std::get_if<Constant>(&a.node)) return c->value == std::get<Constant>(b.node).value;
    if (std::holds_alternative<Variable>(a.node)) return true;
    if (auto* u = std::get_if<Unary>(&a.node)) {
        const auto& v = std::get<Unary>(b.node);
        return u->op == v.op && structurally_equal(*u->arg, *v.arg);
    }
    if (auto* x = std::get_if<Binary>(&a.node)) {
        const auto& y = std::get<Binary>(b.node);
        return x->op == y.op && structurally_equal(*x->lhs, *y.lhs) && structurally_equal(*x->rhs, *y.rhs);
    }
    const auto& l = std::get<LogK>(a.node);
    const auto& m = std::get<LogK>(b.node);
    return l.k == m.k && structurally_equal(*l.arg, *m.arg);
}

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    ExprPtr parse_all()
    {
        auto e = expr();
        skip();
        if (pos_ < s_.size()) {
            if (s_[pos_] == ')') fail("unbalanced ')'");
            fail("unexpected token '" + std::string(1, s_[pos_]) + "'");
        }
        return e;
    }

private:
    static constexpr int kMaxDepth = 256;

    std::string_view s_;
    size_t pos_ = 0;
    int depth_ = 0;

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& pp) : p(pp)
        {
            if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
        }
        ~DepthGuard() { --p.depth_; }
    };

    [[noreturn]] void fail(const std::string& why) const { throw SyntaxError(why, pos_); }

    void skip()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        skip();
        if (pos_ >= s_.size()) {
            if (c == ')') fail("unbalanced '(': expected ')' before end of input");
            fail(std::string("expected '") + c + "' before end of input");
        }
        if (s_[pos_] != c) fail(std::string("expected '") + c + "', found '" + s_[pos_] + "'");
        ++pos_;
    }

    ExprPtr expr()
    {
        DepthGuard g(*this);
        auto lhs = term();
        for (;;) {
            if (accept('+')) lhs = make_binary(BinaryOp::Add, lhs, term());
            else if (accept('-')) lhs = make_binary(BinaryOp::Sub, lhs, term());
            else return lhs;
        }
    }

    ExprPtr term()
    {
        DepthGuard g(*this);
        auto lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make_binary(BinaryOp::Mul, lhs, unary());
            else if (accept('/')) lhs = make_binary(BinaryOp::Div, lhs, unary());
            else return lhs;
        }
    }

    ExprPtr unary()
    {
        DepthGuard g(*this);
        if (accept('-')) return make_unary(UnaryOp::Neg, unary());
        return power();
    }

    ExprPtr power()
    {
        DepthGuard g(*this);
        auto base = primary();
        if (accept('^')) return make_binary(BinaryOp::Pow, base, unary());
        return base;
    }

    ExprPtr primary()
    {
        DepthGuard g(*this);
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            expect(')');
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (c == ')') fail("unbalanced ')'");
        fail(std::string("unexpected token '") + c + "'");
    }

    ExprPtr number()
    {
        size_t start = pos_;
        double v = 0.0;
        auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v, std::chars_format::general);
        if (r.ec == std::errc::result_out_of_range) fail("numeric literal out of range");
        if (r.ec != std::errc()) fail("malformed number");
        pos_ = static_cast<size_t>(r.ptr - s_.data());
        if (!std::isfinite(v) || v < 0.0) {
            pos_ = start;
            fail("malformed number");
        }
        return make_constant(v);
    }

    ExprPtr identifier()
    {
        size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        std::string_view id = s_.substr(start, pos_ - start);
        if (id == "t") return make_variable();
        if (id == "logk") {
            expect('(');
            skip();
            size_t kpos = pos_;
            int k = 0;
            auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), k);
            if (r.ec != std::errc() || k < 1) {
                pos_ = kpos;
                fail("logk order must be an integer >= 1");
            }
            pos_ = static_cast<size_t>(r.ptr - s_.data());
            if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
                fail("logk order must be an integer >= 1");
            expect(',');
            auto arg = expr();
            expect(')');
            return make_logk(k, arg);
        }
        UnaryOp op;
        if (id == "abs") op = UnaryOp::Abs;
        else if (id == "log") op = UnaryOp::Log;
        else if (id == "exp") op = UnaryOp::Exp;
        else if (id == "sqrt") op = UnaryOp::Sqrt;
        else {
            pos_ = start;
            fail("unknown identifier '" + std::string(id) + "'");
        }
        expect('(');
        auto arg = expr();
        expect(')');
        return make_unary(op, arg);
    }
};

} // namespace detail

inline ExprPtr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

inline double eval(const Expr& e, double t)
{
    struct V {
        double t;
        const Expr& self;
        double checked(double v) const
        {
            if (std::isnan(v)) throw EvalDomainError("undefined value", print(self));
            if (std::isinf(v)) throw EvalDomainError("overflow", print(self));
            return v;
        }
        double operator()(const Constant& c) const { return c.value; }
        double operator()(const Variable&) const { return t; }
        double operator()(const Unary& u) const
        {
            double a = eval(*u.arg, t);
            switch (u.op) {
            case UnaryOp::Neg: return -a;
            case UnaryOp::Abs: return std::abs(a);
            case UnaryOp::Log:
                if (!(a > 0.0)) throw EvalDomainError("log of nonpositive argument", print(self));
                return std::log(a);
            case UnaryOp::Exp: return checked(std::exp(a));
            default:
                if (a < 0.0) throw EvalDomainError("sqrt of negative argument", print(self));
                return std::sqrt(a);
            }
        }
        double operator()(const Binary& b) const
        {
            double x = eval(*b.lhs, t), y = eval(*b.rhs, t);
            switch (b.op) {
            case BinaryOp::Add: return checked(x + y);
            case BinaryOp::Sub: return checked(x - y);
            case BinaryOp::Mul: return checked(x * y);
            case BinaryOp::Div:
                if (y == 0.0) throw EvalDomainError("division by zero", print(self));
                return checked(x / y);
            default:
                if (x == 0.0 && y < 0.0) throw EvalDomainError("zero to a negative power", print(self));
                return checked(std::pow(x, y));
            }
        }
        double operator()(const LogK& l) const
        {
            double a = eval(*l.arg, t);
            if (a == 0.0) throw EvalDomainError("logk of zero", print(self));
            double v = std::abs(std::log(std::abs(a)));
            for (int j = 2; j <= l.k; ++j) {
                if (!(v > 0.0))
                    throw EvalDomainError("logk level " + std::to_string(j) + " of nonpositive value", print(self));
                v = std::log(v);
            }
            return checked(v);
        }
    };
    return std::visit(V{t, e}, e.node);
}

// Profile whose rho(t) is a parsed expression. Without an explicit delta the
// window is detected by scanning s = 1, 1.25, 1.25^2, ... for 8 consecutive
// admissible samples (finite, rho > 1), then widened by 10%.
inline Profile make_expression_profile(std::string_view text, Side side, std::optional<double> delta = std::nullopt)
{
    auto ast = parse(text);
    Profile p;
    p.side = side;
    p.label = "expr:" + print(*ast);
    p.s_max = 700.0;
    p.log_rho_s = [ast, side](double s) {
        double v = eval(*ast, time_from_singular(side, s));
        if (!(v > 0.0)) throw DomainError("rho must be positive, got " + format_number(v));
        return std::log(v);
    };
    if (delta) {
        p.s_min = singular_coordinate(side, *delta);
        return p;
    }
    auto ok = [&](double s) {
        try {
            return p.log_rho_s(s) > 0.0;
        } catch (const std::exception&) {
            return false;
        }
    };
    int run = 0;
    double first = 0.0;
    for (double s = 1.0; s <= p.s_max; s *= 1.25) {
        if (ok(s)) {
            if (run++ == 0) first = s;
            if (run == 8) {
                p.s_min = 1.1 * first;
                return p;
            }
        } else {
            run = 0;
        }
    }
    throw DomainError("no admissible window found for " + p.label);
}

} // namespace heatpole::dsl
