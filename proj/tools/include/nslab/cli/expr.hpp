#pragma once

// Arithmetic expressions for declaring f and g.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | identifier | identifier '(' expr ')' | '(' expr ')'
//
// '^' is right-associative and binds tighter than unary minus, so -2^2 = -4.

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nslab::cli {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::string expected, const std::string& what)
        : std::runtime_error(what), offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation produced NaN or infinity.
class NonFiniteError : public EvalError {
public:
    using EvalError::EvalError;
};

enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

struct ExprNode {
    Op op = Op::Number;
    double number = 0.0;
    std::string name;  // variable or function name
    int slot = -1;     // variable slot
    std::vector<std::shared_ptr<const ExprNode>> args;
};

/// Immutable parse tree plus the variable names its slots refer to.
class Expr {
public:
    Expr() = default;
    Expr(std::shared_ptr<const ExprNode> root, std::vector<std::string> variables)
        : root_(std::move(root)), variables_(std::move(variables)) {}

    const ExprNode& root() const { return *root_; }
    const std::vector<std::string>& variables() const { return variables_; }
    bool empty() const { return !root_; }

    /// Evaluates with slot-ordered values; throws NonFiniteError on NaN/inf.
    double operator()(std::span<const double> slots) const;

private:
    std::shared_ptr<const ExprNode> root_;
    std::vector<std::string> variables_;
};

/// The functions accepted in calls.
const std::vector<std::string>& known_functions();

/// Parses against the declared variable names (slot i is variables[i]).
Expr parse_expr(const std::string& text, const std::vector<std::string>& variables);

/// Variables for a k-dimensional system: "x" (k = 1) or "x1".."xk", then "y", "u".
std::vector<std::string> system_variables(std::size_t k);

/// Evaluates with named bindings; an unbound variable throws EvalError.
double eval_expr(const Expr& e, const std::map<std::string, double>& bindings);

/// Fully parenthesized text that reparses to the same tree.
std::string print_expr(const Expr& e);

/// Structural equality of two trees.
bool same_tree(const ExprNode& a, const ExprNode& b);

}  // namespace nslab::cli
