#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confrac/errors.hpp"

namespace confrac {

// Small arithmetic expression compiler for CLI problem files.  Supports
// + - * / ^ (right-associative), unary minus, parentheses, numeric literals,
// the constants pi and e, the functions sin cos tan exp log sqrt abs, and a
// caller-supplied variable list.  Compiles to a closure over an argument span.
class Expression {
  public:
    using Compiled = std::function<double(std::span<const double>)>;

    Expression() = default;

    static Expression parse(std::string_view source, std::vector<std::string> variables) {
        Expression e;
        e.source_ = std::string(source);
        e.variables_ = std::move(variables);
        Parser p{e.source_, e.variables_};
        e.body_ = p.parse_expression();
        p.skip_ws();
        if (!p.at_end()) p.fail("unexpected trailing input");
        return e;
    }

    double operator()(std::span<const double> args) const {
        if (args.size() != variables_.size())
            throw DimensionMismatch("Expression: wrong argument count");
        return body_(args);
    }

    std::size_t arity() const { return variables_.size(); }
    const std::string& source() const { return source_; }
    const std::vector<std::string>& variables() const { return variables_; }
    bool valid() const { return static_cast<bool>(body_); }

  private:
    struct Parser {
        const std::string& src;
        const std::vector<std::string>& vars;
        std::size_t pos = 0;
        int line = 1, col = 1;

        [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line, col); }

        bool at_end() const { return pos >= src.size(); }
        char peek() const { return at_end() ? '\0' : src[pos]; }
        char advance() {
            const char c = src[pos++];
            if (c == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            return c;
        }
        void skip_ws() {
            while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
        }
        bool match(char c) {
            skip_ws();
            if (peek() != c) return false;
            advance();
            return true;
        }

        Compiled parse_expression() {
            Compiled lhs = parse_term();
            for (;;) {
                skip_ws();
                const char c = peek();
                if (c != '+' && c != '-') return lhs;
                advance();
                Compiled rhs = parse_term();
                if (c == '+')
                    lhs = [l = std::move(lhs), r = std::move(rhs)](std::span<const double> a) {
                        return l(a) + r(a);
                    };
                else
                    lhs = [l = std::move(lhs), r = std::move(rhs)](std::span<const double> a) {
                        return l(a) - r(a);
                    };
            }
        }

        Compiled parse_term() {
            Compiled lhs = parse_unary();
            for (;;) {
                skip_ws();
                const char c = peek();
                if (c != '*' && c != '/') return lhs;
                advance();
                Compiled rhs = parse_unary();
                if (c == '*')
                    lhs = [l = std::move(lhs), r = std::move(rhs)](std::span<const double> a) {
                        return l(a) * r(a);
                    };
                else
                    lhs = [l = std::move(lhs), r = std::move(rhs)](std::span<const double> a) {
                        return l(a) / r(a);
                    };
            }
        }

        Compiled parse_unary() {
            skip_ws();
            if (peek() == '-') {
                advance();
                Compiled inner = parse_unary();
                return [f = std::move(inner)](std::span<const double> a) { return -f(a); };
            }
            if (peek() == '+') {
                advance();
                return parse_unary();
            }
            return parse_power();
        }

        Compiled parse_power() {
            Compiled base = parse_atom();
            skip_ws();
            if (peek() != '^') return base;
            advance();
            Compiled expo = parse_unary();  // right-associative, binds unary minus in the exponent
            return [b = std::move(base), e = std::move(expo)](std::span<const double> a) {
                return std::pow(b(a), e(a));
            };
        }

        Compiled parse_atom() {
            skip_ws();
            if (at_end()) fail("unexpected end of expression");
            const char c = peek();
            if (c == '(') {
                advance();
                Compiled inner = parse_expression();
                if (!match(')')) fail("expected ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
            fail(std::string("unexpected character '") + c + "'");
        }

        Compiled parse_number() {
            const char* begin = src.c_str() + pos;
            char* end = nullptr;
            const double value = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            for (const char* p = begin; p != end; ++p) advance();
            return [value](std::span<const double>) { return value; };
        }

        Compiled parse_identifier() {
            const int id_line = line, id_col = col;
            std::string name;
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
                name.push_back(advance());
            skip_ws();
            if (peek() == '(') {
                advance();
                Compiled arg = parse_expression();
                if (!match(')')) fail("expected ')' after function argument");
                if (name == "sin")
                    return [f = std::move(arg)](std::span<const double> a) { return std::sin(f(a)); };
                if (name == "cos")
                    return [f = std::move(arg)](std::span<const double> a) { return std::cos(f(a)); };
                if (name == "tan")
                    return [f = std::move(arg)](std::span<const double> a) { return std::tan(f(a)); };
                if (name == "exp")
                    return [f = std::move(arg)](std::span<const double> a) { return std::exp(f(a)); };
                if (name == "log")
                    return [f = std::move(arg)](std::span<const double> a) { return std::log(f(a)); };
                if (name == "sqrt")
                    return [f = std::move(arg)](std::span<const double> a) { return std::sqrt(f(a)); };
                if (name == "abs")
                    return [f = std::move(arg)](std::span<const double> a) { return std::abs(f(a)); };
                throw UnknownIdentifier("unknown function '" + name + "' at line " +
                                        std::to_string(id_line) + ", column " + std::to_string(id_col));
            }
            if (name == "pi") return [](std::span<const double>) { return std::numbers::pi; };
            if (name == "e") return [](std::span<const double>) { return std::numbers::e; };
            for (std::size_t i = 0; i < vars.size(); ++i)
                if (vars[i] == name)
                    return [i](std::span<const double> a) { return a[i]; };
            throw UnknownIdentifier("unknown identifier '" + name + "' at line " +
                                    std::to_string(id_line) + ", column " + std::to_string(id_col));
        }
    };

    std::string source_;
    std::vector<std::string> variables_;
    Compiled body_;
};

}  // namespace confrac
