#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mfghc/errors.hpp"

namespace mfghc {

/// Closed-form scalar expression in one variable x.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'x' | 'pi' | fn '(' expr ')' | '(' expr ')'
///   fn      := sin | cos | exp
class Expression {
public:
    static Expression parse(const std::string& text)
    {
        Parser p{text, 0};
        Expression e;
        e.text_ = text;
        e.root_ = p.expr();
        p.skip_ws();
        if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        return e;
    }

    double operator()(double x) const { return root_->eval(x); }
    const std::string& text() const { return text_; }

private:
    struct Node {
        enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };
        Op op;
        double value = 0.0;
        std::shared_ptr<const Node> lhs, rhs;

        double eval(double x) const
        {
            switch (op) {
            case Op::Num: return value;
            case Op::Var: return x;
            case Op::Add: return lhs->eval(x) + rhs->eval(x);
            case Op::Sub: return lhs->eval(x) - rhs->eval(x);
            case Op::Mul: return lhs->eval(x) * rhs->eval(x);
            case Op::Div: return lhs->eval(x) / rhs->eval(x);
            case Op::Pow: return std::pow(lhs->eval(x), rhs->eval(x));
            case Op::Neg: return -lhs->eval(x);
            case Op::Sin: return std::sin(lhs->eval(x));
            case Op::Cos: return std::cos(lhs->eval(x));
            case Op::Exp: return std::exp(lhs->eval(x));
            }
            return 0.0;
        }
    };
    using NodePtr = std::shared_ptr<const Node>;

    static NodePtr make(Node::Op op, NodePtr l = nullptr, NodePtr r = nullptr, double v = 0.0)
    {
        return std::make_shared<const Node>(Node{op, v, std::move(l), std::move(r)});
    }

    struct Parser {
        const std::string& s;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& why) const
        {
            throw ConfigError("expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + why);
        }

        void skip_ws()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool accept(char c)
        {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        NodePtr expr()
        {
            NodePtr n = term();
            for (;;) {
                if (accept('+')) n = make(Node::Op::Add, n, term());
                else if (accept('-')) n = make(Node::Op::Sub, n, term());
                else return n;
            }
        }

        NodePtr term()
        {
            NodePtr n = unary();
            for (;;) {
                if (accept('*')) n = make(Node::Op::Mul, n, unary());
                else if (accept('/')) n = make(Node::Op::Div, n, unary());
                else return n;
            }
        }

        NodePtr unary()
        {
            if (accept('-')) return make(Node::Op::Neg, unary());
            if (accept('+')) return unary();
            return power();
        }

        NodePtr power()
        {
            NodePtr base = primary();
            if (accept('^')) return make(Node::Op::Pow, base, unary());
            return base;
        }

        NodePtr primary()
        {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            if (accept('(')) {
                NodePtr n = expr();
                if (!accept(')')) fail("expected ')'");
                return n;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = s.c_str() + pos;
                char* end = nullptr;
                const double v = std::strtod(begin, &end);
                if (end == begin) fail("bad number");
                pos += static_cast<std::size_t>(end - begin);
                return make(Node::Op::Num, nullptr, nullptr, v);
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                const std::size_t start = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
                const std::string id = s.substr(start, pos - start);
                if (id == "x") return make(Node::Op::Var);
                if (id == "pi") return make(Node::Op::Num, nullptr, nullptr, std::numbers::pi);
                Node::Op fn;
                if (id == "sin") fn = Node::Op::Sin;
                else if (id == "cos") fn = Node::Op::Cos;
                else if (id == "exp") fn = Node::Op::Exp;
                else {
                    pos = start;
                    fail("unknown identifier '" + id + "'");
                }
                if (!accept('(')) fail("expected '(' after " + id);
                NodePtr arg = expr();
                if (!accept(')')) fail("expected ')'");
                return make(fn, arg);
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }
    };

    std::string text_;
    NodePtr root_;
};

}  // namespace mfghc
