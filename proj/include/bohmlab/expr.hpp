#ifndef BOHMLAB_EXPR_HPP
#define BOHMLAB_EXPR_HPP

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bohmlab {

// Errors raised by the expression layer.
class ExprError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation hit a point outside the domain of some operation
// (division by zero, sqrt of a negative, log of a non-positive, ...).
class DomainError : public ExprError {
public:
    using ExprError::ExprError;
};

// Syntax error; `position` is a 0-based byte offset into the input.
class ParseError : public ExprError {
public:
    ParseError(const std::string& what, std::size_t position)
        : ExprError(what), position(position) {}
    std::size_t position;
};

enum class Op {
    Number, Var,
    Add, Sub, Mul, Div, Pow,
    Neg, Sqrt, Exp, Log, Sin, Cos, Tan, Arctan, Sinh, Cosh, Abs,
    Ai, AiPrime,
};

struct ExprNode;
using ExprRef = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Op op;
    double value = 0.0;   // Op::Number
    std::string name;     // Op::Var
    ExprRef lhs, rhs;     // rhs only for binary ops
};

// Variable bindings for evaluation. "pi" is provided automatically
// unless rebound.
using Bindings = std::map<std::string, double>;

/// Immutable symbolic expression in x, t and named parameters.
/// Closed under differentiation (Ai' differentiates via Ai'' = y Ai).
class Expr {
public:
    Expr() : Expr(0.0) {}
    explicit Expr(double v);
    explicit Expr(ExprRef root) : root_(std::move(root)) {}

    static Expr number(double v) { return Expr(v); }
    static Expr var(const std::string& name);

    double eval(const Bindings& bindings = {}) const;
    Expr diff(const std::string& var) const;
    Expr simplified(std::vector<std::string>* notes = nullptr) const;
    std::string str() const;

    // Substitute a variable by an expression (used for parameter binding
    // and for building composite solutions).
    Expr substituted(const std::string& var, const Expr& replacement) const;

    bool is_number() const;
    double number_value() const;
    bool is_zero() const;          // structurally the constant 0
    bool same_as(const Expr& other) const;
    std::set<std::string> free_vars() const;

    const ExprNode& node() const { return *root_; }
    const ExprRef& ref() const { return root_; }

private:
    ExprRef root_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr pow(const Expr& base, double exponent);
Expr sqrt(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr arctan(const Expr& a);
Expr sinh(const Expr& a);
Expr cosh(const Expr& a);
Expr abs(const Expr& a);
Expr airy_ai(const Expr& a);
Expr airy_ai_prime(const Expr& a);

inline Expr operator+(const Expr& a, double b) { return a + Expr(b); }
inline Expr operator+(double a, const Expr& b) { return Expr(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr(b); }
inline Expr operator-(double a, const Expr& b) { return Expr(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr(b); }
inline Expr operator*(double a, const Expr& b) { return Expr(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr(b); }
inline Expr operator/(double a, const Expr& b) { return Expr(a) / b; }

/// Parse the documented infix grammar (docs/grammar.md).
/// x, t, pi, hbar and m are always known; any other identifier must be
/// listed in `parameters` or a ParseError is raised.
Expr parse_expr(const std::string& text,
                const std::set<std::string>& parameters = {});

/// Flattened stack-machine form of an Expr with every variable except
/// x and t frozen to a numeric value. Cheap to evaluate on grids.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, const Bindings& frozen = {});
    double operator()(double x, double t) const;
    bool valid() const { return !tape_.empty(); }

private:
    struct Step { Op op; double value; };
    std::vector<Step> tape_;
    mutable std::vector<double> stack_;
};

} // namespace bohmlab

#endif
