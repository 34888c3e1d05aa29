#pragma once

// Arithmetic expressions in one variable x, for densities given in configs.
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | x | name | func '(' expr (',' expr)* ')' | '(' expr ')'
// Functions: exp log sqrt sinh cosh tanh abs pow min max. Names are looked up
// among the supplied constants (pi and e are always defined).

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace scaleclock {

class Expr {
public:
    using Constants = std::map<std::string, double>;

    static Expr parse(const std::string& text, const Constants& constants = {}) {
        Parser p{text, 0, constants};
        p.skip();
        Node n = p.expr();
        p.skip();
        if (p.pos != text.size()) p.error("unexpected '" + std::string(1, text[p.pos]) + "'");
        return Expr(text, std::move(n));
    }

    double operator()(double x) const { return root_(x); }
    const std::string& text() const { return text_; }

private:
    using Node = std::function<double(double)>;

    Expr(std::string text, Node root) : text_(std::move(text)), root_(std::move(root)) {}

    struct Parser {
        const std::string& s;
        std::size_t pos;
        const Constants& constants;

        [[noreturn]] void error(const std::string& what) const {
            std::ostringstream os;
            os << "expression \"" << s << "\" at position " << pos << ": " << what;
            fail(ErrorKind::parameter, os.str());
        }
        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        Node expr() {
            Node lhs = term();
            for (;;) {
                if (eat('+')) {
                    lhs = [a = lhs, b = term()](double x) { return a(x) + b(x); };
                } else if (eat('-')) {
                    lhs = [a = lhs, b = term()](double x) { return a(x) - b(x); };
                } else {
                    return lhs;
                }
            }
        }
        Node term() {
            Node lhs = unary();
            for (;;) {
                if (eat('*')) {
                    lhs = [a = lhs, b = unary()](double x) { return a(x) * b(x); };
                } else if (eat('/')) {
                    lhs = [a = lhs, b = unary()](double x) { return a(x) / b(x); };
                } else {
                    return lhs;
                }
            }
        }
        Node unary() {
            if (eat('-')) return [a = unary()](double x) { return -a(x); };
            if (eat('+')) return unary();
            return power();
        }
        Node power() {
            Node base = primary();
            if (eat('^')) return [a = base, b = unary()](double x) { return std::pow(a(x), b(x)); };
            return base;
        }
        Node primary() {
            skip();
            if (pos >= s.size()) error("unexpected end");
            const char c = s[pos];
            if (eat('(')) {
                Node n = expr();
                if (!eat(')')) error("expected ')'");
                return n;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = s.c_str() + pos;
                char* end = nullptr;
                const double v = std::strtod(begin, &end);
                if (end == begin) error("bad number");
                pos += static_cast<std::size_t>(end - begin);
                return [v](double) { return v; };
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                const std::string name = s.substr(start, pos - start);
                skip();
                if (pos < s.size() && s[pos] == '(') return call(name);
                if (name == "x") return [](double x) { return x; };
                if (auto it = constants.find(name); it != constants.end()) {
                    const double v = it->second;
                    return [v](double) { return v; };
                }
                if (name == "pi") return [](double) { return M_PI; };
                if (name == "e") return [](double) { return M_E; };
                pos = start;
                error("unknown name '" + name + "'");
            }
            error("unexpected '" + std::string(1, c) + "'");
        }
        Node call(const std::string& name) {
            const std::size_t at = pos;
            eat('(');
            std::vector<Node> args{expr()};
            while (eat(',')) args.push_back(expr());
            if (!eat(')')) error("expected ')'");
            auto arity = [&](std::size_t n) {
                if (args.size() != n) {
                    pos = at;
                    error(name + " takes " + std::to_string(n) + " argument(s)");
                }
            };
            using F1 = double (*)(double);
            static const std::map<std::string, F1> unary_fns = {
                {"exp", [](double v) { return std::exp(v); }},   {"log", [](double v) { return std::log(v); }},
                {"sqrt", [](double v) { return std::sqrt(v); }}, {"sinh", [](double v) { return std::sinh(v); }},
                {"cosh", [](double v) { return std::cosh(v); }}, {"tanh", [](double v) { return std::tanh(v); }},
                {"abs", [](double v) { return std::abs(v); }}};
            if (auto it = unary_fns.find(name); it != unary_fns.end()) {
                arity(1);
                return [f = it->second, a = args[0]](double x) { return f(a(x)); };
            }
            if (name == "pow") {
                arity(2);
                return [a = args[0], b = args[1]](double x) { return std::pow(a(x), b(x)); };
            }
            if (name == "min" || name == "max") {
                arity(2);
                if (name == "min") return [a = args[0], b = args[1]](double x) { return std::min(a(x), b(x)); };
                return [a = args[0], b = args[1]](double x) { return std::max(a(x), b(x)); };
            }
            pos = at;
            error("unknown function '" + name + "'");
        }
    };

    std::string text_;
    Node root_;
};

}  // namespace scaleclock
