#pragma once

#include <memory>
#include <string>
#include <vector>

#include "areaflux/errors.hpp"

namespace areaflux::expr {

// AST for the coefficient expression language. Grammar (precedence low to high):
//
//   expression := term (('+'|'-') term)*
//   term       := unary (('*'|'/') unary)*
//   unary      := '-' unary | power
//   power      := primary ['^' unary]              (right-associative)
//   primary    := number | 'x' | func '(' args ')' | '(' expression ')'
//   func       := exp | log | sqrt | sin | cos | abs | min | max | indicator
//
// indicator takes a single comparison "a < b" (also <=, >, >=) and evaluates
// to 1 or 0. The function set is a closed whitelist.
enum class NodeKind {
    Constant,
    Variable,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call,
    Cmp,
};

enum class CmpOp { Lt, Le, Gt, Ge };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind{};
    double value = 0.0;           // Constant
    std::string func;             // Call
    CmpOp cmp{};                  // Cmp
    std::vector<NodePtr> args;    // children
};

class Expr {
public:
    Expr() = default;
    explicit Expr(NodePtr root) : root_(std::move(root)) {}

    // Throws SyntaxError with the byte offset of the failure.
    static Expr parse(const std::string& source);

    // Throws EvalDomainError on real-domain violations; never returns a
    // silent NaN. Infinities from overflow propagate.
    double evaluate(double x) const;

    // Round-trip stable: parse(print()) is structurally identical to *this.
    std::string print() const;

    bool structurally_equal(const Expr& other) const;

    const NodePtr& root() const { return root_; }

private:
    NodePtr root_;
};

}  // namespace areaflux::expr
