#include "areaflux/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <limits>
#include <sstream>

namespace areaflux::expr {

namespace {

const char* const kFunctions[] = {"exp", "log", "sqrt", "sin",
                                  "cos", "abs", "min",  "max"};

bool is_known_function(const std::string& name) {
    for (const char* f : kFunctions)
        if (name == f) return true;
    return name == "indicator";
}

NodePtr make(NodeKind k, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
}

struct Parser {
    const std::string& src;
    std::size_t pos = 0;

    explicit Parser(const std::string& s) : src(s) {}

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c))
            throw SyntaxError(std::string("expected ") + what, pos);
    }

    NodePtr parse_expression() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make(NodeKind::Add, {lhs, parse_term()});
            else if (accept('-'))
                lhs = make(NodeKind::Sub, {lhs, parse_term()});
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make(NodeKind::Mul, {lhs, parse_unary()});
            else if (accept('/'))
                lhs = make(NodeKind::Div, {lhs, parse_unary()});
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make(NodeKind::Neg, {parse_unary()});
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return make(NodeKind::Pow, {base, parse_unary()});
        return base;
    }

    NodePtr parse_comparison() {
        NodePtr lhs = parse_expression();
        CmpOp op;
        skip_ws();
        if (accept('<'))
            op = accept('=') ? CmpOp::Le : CmpOp::Lt;
        else if (accept('>'))
            op = accept('=') ? CmpOp::Ge : CmpOp::Gt;
        else
            throw SyntaxError("expected comparison operator in indicator", pos);
        NodePtr rhs = parse_expression();
        auto n = make(NodeKind::Cmp, {lhs, rhs});
        const_cast<Node*>(n.get())->cmp = op;
        return n;
    }

    NodePtr parse_primary() {
        const char c = peek();
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expression();
            expect(')', "')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        throw SyntaxError("expected number, 'x', function call or '('", pos);
    }

    NodePtr parse_number() {
        skip_ws();
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw SyntaxError("malformed number", pos);
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Constant;
        n->value = v;
        return n;
    }

    NodePtr parse_name() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        const std::string name = src.substr(start, pos - start);
        if (name == "x") {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Variable;
            return n;
        }
        if (name == "pi") {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Constant;
            n->value = 3.14159265358979323846;
            return n;
        }
        if (!is_known_function(name))
            throw SyntaxError("unknown identifier '" + name + "'", start);
        expect('(', "'(' after function name");
        std::vector<NodePtr> args;
        if (name == "indicator") {
            args.push_back(parse_comparison());
        } else {
            args.push_back(parse_expression());
            while (accept(',')) args.push_back(parse_expression());
        }
        expect(')', "')'");
        const std::size_t want = (name == "min" || name == "max") ? 2 : 1;
        if (args.size() != want)
            throw SyntaxError("wrong argument count for '" + name + "'", start);
        auto n = make(NodeKind::Call, std::move(args));
        const_cast<Node*>(n.get())->func = name;
        return n;
    }
};

double eval_node(const Node& n, double x);

double eval_call(const Node& n, double x) {
    if (n.func == "indicator") return eval_node(*n.args[0], x);
    const double a = eval_node(*n.args[0], x);
    if (n.func == "exp") return std::exp(a);
    if (n.func == "sin") return std::sin(a);
    if (n.func == "cos") return std::cos(a);
    if (n.func == "abs") return std::abs(a);
    if (n.func == "log") {
        if (!(a > 0.0)) throw EvalDomainError("log of non-positive value");
        return std::log(a);
    }
    if (n.func == "sqrt") {
        if (a < 0.0) throw EvalDomainError("sqrt of negative value");
        return std::sqrt(a);
    }
    const double b = eval_node(*n.args[1], x);
    if (n.func == "min") return std::min(a, b);
    if (n.func == "max") return std::max(a, b);
    throw EvalDomainError("unknown function '" + n.func + "'");
}

double eval_node(const Node& n, double x) {
    switch (n.kind) {
        case NodeKind::Constant: return n.value;
        case NodeKind::Variable: return x;
        case NodeKind::Neg: return -eval_node(*n.args[0], x);
        case NodeKind::Add: return eval_node(*n.args[0], x) + eval_node(*n.args[1], x);
        case NodeKind::Sub: return eval_node(*n.args[0], x) - eval_node(*n.args[1], x);
        case NodeKind::Mul: return eval_node(*n.args[0], x) * eval_node(*n.args[1], x);
        case NodeKind::Div: {
            const double num = eval_node(*n.args[0], x);
            const double den = eval_node(*n.args[1], x);
            if (den == 0.0) throw EvalDomainError("division by zero");
            return num / den;
        }
        case NodeKind::Pow: {
            const double base = eval_node(*n.args[0], x);
            const double exponent = eval_node(*n.args[1], x);
            if (base < 0.0 && exponent != std::floor(exponent))
                throw EvalDomainError("negative base with non-integer exponent");
            if (base == 0.0 && exponent < 0.0)
                throw EvalDomainError("zero base with negative exponent");
            return std::pow(base, exponent);
        }
        case NodeKind::Call: return eval_call(n, x);
        case NodeKind::Cmp: {
            const double a = eval_node(*n.args[0], x);
            const double b = eval_node(*n.args[1], x);
            switch (n.cmp) {
                case CmpOp::Lt: return a < b ? 1.0 : 0.0;
                case CmpOp::Le: return a <= b ? 1.0 : 0.0;
                case CmpOp::Gt: return a > b ? 1.0 : 0.0;
                case CmpOp::Ge: return a >= b ? 1.0 : 0.0;
            }
        }
    }
    throw EvalDomainError("corrupt expression node");
}

int precedence(const Node& n) {
    switch (n.kind) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;  // atoms, calls, parenthesized by construction
    }
}

void print_node(const Node& n, std::ostream& os);

void print_child(const Node& child, int parent_prec, bool needs_paren_on_tie,
                 std::ostream& os) {
    const bool paren =
        precedence(child) < parent_prec ||
        (needs_paren_on_tie && precedence(child) == parent_prec);
    if (paren) os << '(';
    print_node(child, os);
    if (paren) os << ')';
}

void print_node(const Node& n, std::ostream& os) {
    switch (n.kind) {
        case NodeKind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.value);
            os << buf;
            return;
        }
        case NodeKind::Variable: os << 'x'; return;
        case NodeKind::Neg:
            os << '-';
            print_child(*n.args[0], 3, false, os);
            return;
        case NodeKind::Add:
        case NodeKind::Sub:
            print_child(*n.args[0], 1, false, os);
            os << (n.kind == NodeKind::Add ? '+' : '-');
            print_child(*n.args[1], 1, true, os);
            return;
        case NodeKind::Mul:
        case NodeKind::Div:
            print_child(*n.args[0], 2, false, os);
            os << (n.kind == NodeKind::Mul ? '*' : '/');
            print_child(*n.args[1], 2, true, os);
            return;
        case NodeKind::Pow:
            // Base binds tighter than everything; exponent re-parses as unary.
            print_child(*n.args[0], 5, false, os);
            os << '^';
            print_child(*n.args[1], 3, false, os);
            return;
        case NodeKind::Call: {
            os << n.func << '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) os << ',';
                print_node(*n.args[i], os);
            }
            os << ')';
            return;
        }
        case NodeKind::Cmp: {
            print_node(*n.args[0], os);
            switch (n.cmp) {
                case CmpOp::Lt: os << '<'; break;
                case CmpOp::Le: os << "<="; break;
                case CmpOp::Gt: os << '>'; break;
                case CmpOp::Ge: os << ">="; break;
            }
            print_node(*n.args[1], os);
            return;
        }
    }
}

bool equal_node(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == NodeKind::Constant) {
        // bit-level equality, so -0.0 and 0.0 stay distinguishable
        return std::memcmp(&a.value, &b.value, sizeof(double)) == 0;
    }
    if (a.kind == NodeKind::Call && a.func != b.func) return false;
    if (a.kind == NodeKind::Cmp && a.cmp != b.cmp) return false;
    if (a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!equal_node(*a.args[i], *b.args[i])) return false;
    return true;
}

}  // namespace

Expr Expr::parse(const std::string& source) {
    Parser p(source);
    if (p.peek() == '\0') throw SyntaxError("empty expression", 0);
    NodePtr root = p.parse_expression();
    p.skip_ws();
    if (p.pos != source.size())
        throw SyntaxError("trailing characters after expression", p.pos);
    return Expr(root);
}

double Expr::evaluate(double x) const {
    if (!root_) throw EvalDomainError("empty expression");
    const double v = eval_node(*root_, x);
    if (std::isnan(v)) throw EvalDomainError("evaluation produced NaN");
    return v;
}

std::string Expr::print() const {
    std::ostringstream os;
    if (root_) print_node(*root_, os);
    return os.str();
}

bool Expr::structurally_equal(const Expr& other) const {
    if (!root_ || !other.root_) return root_ == other.root_;
    return equal_node(*root_, *other.root_);
}

}  // namespace areaflux::expr
