#include "bohmlab/expr.hpp"

#include "bohmlab/specfun.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace bohmlab {

namespace {

ExprRef make(Op op, double value, std::string name, ExprRef lhs, ExprRef rhs) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->value = value;
    n->name = std::move(name);
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

ExprRef num(double v) { return make(Op::Number, v, {}, nullptr, nullptr); }

bool is_integer(double v) {
    return std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15;
}

double eval_node(const ExprNode& n, const Bindings& b);

double eval_binary(const ExprNode& n, const Bindings& b) {
    const double l = eval_node(*n.lhs, b);
    const double r = eval_node(*n.rhs, b);
    switch (n.op) {
    case Op::Add: return l + r;
    case Op::Sub: return l - r;
    case Op::Mul: return l * r;
    case Op::Div:
        if (r == 0.0) throw DomainError("division by zero");
        return l / r;
    case Op::Pow:
        if (l == 0.0 && r < 0.0) throw DomainError("zero raised to a negative power");
        if (l < 0.0 && !is_integer(r))
            throw DomainError("negative base with non-integer exponent");
        return std::pow(l, r);
    default:
        throw ExprError("corrupt expression node");
    }
}

double eval_node(const ExprNode& n, const Bindings& b) {
    switch (n.op) {
    case Op::Number: return n.value;
    case Op::Var: {
        auto it = b.find(n.name);
        if (it != b.end()) return it->second;
        if (n.name == "pi") return M_PI;
        throw ExprError("unbound variable '" + n.name + "'");
    }
    case Op::Neg: return -eval_node(*n.lhs, b);
    case Op::Sqrt: {
        const double v = eval_node(*n.lhs, b);
        if (v < 0.0) throw DomainError("sqrt of a negative number");
        return std::sqrt(v);
    }
    case Op::Exp: return std::exp(eval_node(*n.lhs, b));
    case Op::Log: {
        const double v = eval_node(*n.lhs, b);
        if (v <= 0.0) throw DomainError("log of a non-positive number");
        return std::log(v);
    }
    case Op::Sin: return std::sin(eval_node(*n.lhs, b));
    case Op::Cos: return std::cos(eval_node(*n.lhs, b));
    case Op::Tan: return std::tan(eval_node(*n.lhs, b));
    case Op::Arctan: return std::atan(eval_node(*n.lhs, b));
    case Op::Sinh: return std::sinh(eval_node(*n.lhs, b));
    case Op::Cosh: return std::cosh(eval_node(*n.lhs, b));
    case Op::Abs: return std::fabs(eval_node(*n.lhs, b));
    case Op::Ai: return specfun::airy_ai(eval_node(*n.lhs, b));
    case Op::AiPrime: return specfun::airy_ai_prime(eval_node(*n.lhs, b));
    default: return eval_binary(n, b);
    }
}

} // namespace

Expr::Expr(double v) : root_(num(v)) {}

Expr Expr::var(const std::string& name) {
    return Expr(make(Op::Var, 0.0, name, nullptr, nullptr));
}

double Expr::eval(const Bindings& bindings) const {
    return eval_node(*root_, bindings);
}

bool Expr::is_number() const { return root_->op == Op::Number; }

double Expr::number_value() const {
    if (!is_number()) throw ExprError("expression is not a constant");
    return root_->value;
}

bool Expr::is_zero() const { return is_number() && root_->value == 0.0; }

bool Expr::same_as(const Expr& other) const {
    struct Cmp {
        static bool eq(const ExprNode& a, const ExprNode& b) {
            if (a.op != b.op) return false;
            switch (a.op) {
            case Op::Number: return a.value == b.value;
            case Op::Var: return a.name == b.name;
            default:
                if (!eq(*a.lhs, *b.lhs)) return false;
                return a.rhs ? eq(*a.rhs, *b.rhs) : true;
            }
        }
    };
    return Cmp::eq(*root_, *other.root_);
}

std::set<std::string> Expr::free_vars() const {
    std::set<std::string> out;
    struct Walk {
        static void go(const ExprNode& n, std::set<std::string>& out) {
            if (n.op == Op::Var) { out.insert(n.name); return; }
            if (n.lhs) go(*n.lhs, out);
            if (n.rhs) go(*n.rhs, out);
        }
    };
    Walk::go(*root_, out);
    return out;
}

Expr Expr::substituted(const std::string& var, const Expr& replacement) const {
    struct Sub {
        static ExprRef go(const ExprRef& n, const std::string& var, const ExprRef& rep) {
            if (n->op == Op::Var) return n->name == var ? rep : n;
            if (!n->lhs) return n;
            ExprRef l = go(n->lhs, var, rep);
            ExprRef r = n->rhs ? go(n->rhs, var, rep) : nullptr;
            if (l == n->lhs && r == n->rhs) return n;
            return make(n->op, n->value, n->name, std::move(l), std::move(r));
        }
    };
    return Expr(Sub::go(root_, var, replacement.ref()));
}

// ---- construction helpers ----

Expr operator+(const Expr& a, const Expr& b) { return Expr(make(Op::Add, 0, {}, a.ref(), b.ref())); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make(Op::Sub, 0, {}, a.ref(), b.ref())); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make(Op::Mul, 0, {}, a.ref(), b.ref())); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make(Op::Div, 0, {}, a.ref(), b.ref())); }
Expr operator-(const Expr& a) { return Expr(make(Op::Neg, 0, {}, a.ref(), nullptr)); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr(make(Op::Pow, 0, {}, base.ref(), exponent.ref())); }
Expr pow(const Expr& base, double exponent) { return pow(base, Expr(exponent)); }

namespace {
Expr unary(Op op, const Expr& a) { return Expr(make(op, 0, {}, a.ref(), nullptr)); }
}

Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
Expr exp(const Expr& a) { return unary(Op::Exp, a); }
Expr log(const Expr& a) { return unary(Op::Log, a); }
Expr sin(const Expr& a) { return unary(Op::Sin, a); }
Expr cos(const Expr& a) { return unary(Op::Cos, a); }
Expr tan(const Expr& a) { return unary(Op::Tan, a); }
Expr arctan(const Expr& a) { return unary(Op::Arctan, a); }
Expr sinh(const Expr& a) { return unary(Op::Sinh, a); }
Expr cosh(const Expr& a) { return unary(Op::Cosh, a); }
Expr abs(const Expr& a) { return unary(Op::Abs, a); }
Expr airy_ai(const Expr& a) { return unary(Op::Ai, a); }
Expr airy_ai_prime(const Expr& a) { return unary(Op::AiPrime, a); }

// ---- differentiation ----

Expr Expr::diff(const std::string& v) const {
    const ExprNode& n = *root_;
    const Expr zero(0.0), one(1.0);
    switch (n.op) {
    case Op::Number: return zero;
    case Op::Var: return n.name == v ? one : zero;
    default: break;
    }
    const Expr u(n.lhs);
    const Expr du = u.diff(v);
    switch (n.op) {
    case Op::Neg: return -du;
    case Op::Sqrt: return du / (2.0 * sqrt(u));
    case Op::Exp: return exp(u) * du;
    case Op::Log: return du / u;
    case Op::Sin: return cos(u) * du;
    case Op::Cos: return -(sin(u) * du);
    case Op::Tan: return du / pow(cos(u), 2.0);
    case Op::Arctan: return du / (1.0 + u * u);
    case Op::Sinh: return cosh(u) * du;
    case Op::Cosh: return sinh(u) * du;
    case Op::Abs: return u / abs(u) * du;           // undefined at 0: eval errors there
    case Op::Ai: return airy_ai_prime(u) * du;
    case Op::AiPrime: return u * airy_ai(u) * du;   // Ai'' = y Ai
    default: break;
    }
    const Expr w(n.rhs);
    const Expr dw = w.diff(v);
    switch (n.op) {
    case Op::Add: return du + dw;
    case Op::Sub: return du - dw;
    case Op::Mul: return du * w + u * dw;
    case Op::Div: return (du * w - u * dw) / (w * w);
    case Op::Pow:
        if (w.is_number()) {
            const double p = w.number_value();
            if (p == 0.0) return zero;
            return Expr(p) * pow(u, p - 1.0) * du;
        }
        // d(u^w) = u^w (w' log u + w u'/u)
        return pow(u, w) * (dw * log(u) + w * du / u);
    default:
        throw ExprError("corrupt expression node");
    }
}

// ---- simplification ----

namespace {

ExprRef simp(const ExprRef& node, std::vector<std::string>* notes);

bool num_is(const ExprRef& n, double v) {
    return n->op == Op::Number && n->value == v;
}

void note(std::vector<std::string>* notes, const char* msg) {
    if (notes) notes->push_back(msg);
}

ExprRef simp_binary(Op op, ExprRef l, ExprRef r, std::vector<std::string>* notes) {
    if (l->op == Op::Number && r->op == Op::Number) {
        ExprNode tmp{op, 0, {}, l, r};
        try {
            ExprRef folded = num(eval_binary(tmp, {}));
            note(notes, "folded a constant subexpression");
            return folded;
        } catch (const DomainError&) {
            // leave unfolded; evaluation will report the domain error
        }
    }
    switch (op) {
    case Op::Add:
        if (num_is(l, 0)) { note(notes, "dropped additive zero"); return r; }
        if (num_is(r, 0)) { note(notes, "dropped additive zero"); return l; }
        break;
    case Op::Sub:
        if (num_is(r, 0)) { note(notes, "dropped additive zero"); return l; }
        if (num_is(l, 0)) {
            note(notes, "0 - u rewritten as -u");
            return simp(make(Op::Neg, 0, {}, r, nullptr), notes);
        }
        if (Expr(l).same_as(Expr(r))) {
            note(notes, "u - u reduced to 0");
            return num(0);
        }
        break;
    case Op::Mul:
        if (num_is(l, 0) || num_is(r, 0)) { note(notes, "annihilated product by zero"); return num(0); }
        if (num_is(l, 1)) { note(notes, "dropped unit factor"); return r; }
        if (num_is(r, 1)) { note(notes, "dropped unit factor"); return l; }
        break;
    case Op::Div:
        if (num_is(l, 0)) {
            if (notes) notes->push_back("0/u reduced to 0 assuming u != 0");
            return num(0);
        }
        if (num_is(r, 1)) { note(notes, "dropped unit divisor"); return l; }
        if (Expr(l).same_as(Expr(r))) {
            if (notes) notes->push_back("u/u reduced to 1 assuming u != 0");
            return num(1);
        }
        // u^p / u -> u^(p-1)
        if (l->op == Op::Pow && l->rhs->op == Op::Number && Expr(l->lhs).same_as(Expr(r))) {
            if (notes) notes->push_back("u^p/u reduced assuming u != 0");
            return simp_binary(Op::Pow, l->lhs, num(l->rhs->value - 1), notes);
        }
        break;
    case Op::Pow:
        if (num_is(r, 1)) { note(notes, "dropped unit exponent"); return l; }
        if (num_is(r, 0)) { note(notes, "u^0 reduced to 1 assuming u != 0"); return num(1); }
        if (num_is(l, 1)) { note(notes, "1^u reduced to 1"); return num(1); }
        // (u^a)^b -> u^(a b) for integer a, b only
        if (l->op == Op::Pow && l->rhs->op == Op::Number && r->op == Op::Number &&
            is_integer(l->rhs->value) && is_integer(r->value)) {
            return simp_binary(Op::Pow, l->lhs, num(l->rhs->value * r->value), notes);
        }
        break;
    default:
        break;
    }
    return make(op, 0, {}, std::move(l), std::move(r));
}

ExprRef simp(const ExprRef& node, std::vector<std::string>* notes) {
    if (node->op == Op::Number || node->op == Op::Var) return node;
    ExprRef l = simp(node->lhs, notes);
    if (node->rhs) return simp_binary(node->op, l, simp(node->rhs, notes), notes);

    if (l->op == Op::Number) {
        ExprNode tmp{node->op, 0, {}, l, nullptr};
        try {
            return num(eval_node(tmp, {}));
        } catch (const DomainError&) {
        }
    }
    if (node->op == Op::Neg) {
        if (l->op == Op::Neg) return l->lhs;
    }
    if (l == node->lhs) return node;
    return make(node->op, 0, node->name, std::move(l), nullptr);
}

} // namespace

Expr Expr::simplified(std::vector<std::string>* notes) const {
    return Expr(simp(root_, notes));
}

// ---- printing ----

namespace {

int precedence(Op op) {
    switch (op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

const char* func_name(Op op) {
    switch (op) {
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Arctan: return "arctan";
    case Op::Sinh: return "sinh";
    case Op::Cosh: return "cosh";
    case Op::Abs: return "abs";
    case Op::Ai: return "Ai";
    case Op::AiPrime: return "Aip";
    default: return nullptr;
    }
}

void print_node(std::ostream& os, const ExprNode& n, int parent_prec, bool rhs_of_same);

void print_child(std::ostream& os, const ExprNode& n, int prec, bool rhs) {
    const int child_prec = precedence(n.op);
    const bool parens = child_prec < prec || (child_prec == prec && rhs);
    if (parens) os << '(';
    print_node(os, n, 0, false);
    if (parens) os << ')';
}

void print_node(std::ostream& os, const ExprNode& n, int, bool) {
    switch (n.op) {
    case Op::Number: {
        std::ostringstream tmp;
        tmp.precision(17);
        if (n.value < 0) {
            tmp << '(' << n.value << ')';
        } else {
            tmp << n.value;
        }
        os << tmp.str();
        return;
    }
    case Op::Var: os << n.name; return;
    case Op::Neg:
        os << '-';
        print_child(os, *n.lhs, precedence(Op::Neg) + 1, false);
        return;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: {
        const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-'
                       : n.op == Op::Mul ? '*' : n.op == Op::Div ? '/' : '^';
        const int prec = precedence(n.op);
        // ^ is right-associative, the rest left-associative
        const bool right_assoc = n.op == Op::Pow;
        print_child(os, *n.lhs, prec, right_assoc);
        os << sym;
        print_child(os, *n.rhs, prec, !right_assoc);
        return;
    }
    default:
        os << func_name(n.op) << '(';
        print_node(os, *n.lhs, 0, false);
        os << ')';
        return;
    }
}

} // namespace

std::string Expr::str() const {
    std::ostringstream os;
    print_node(os, *root_, 0, false);
    return os.str();
}

// ---- parser ----

namespace {

struct Parser {
    const std::string& text;
    const std::set<std::string>& params;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at position " + std::to_string(pos), pos);
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos < text.size() && text[pos] == c;
    }

    bool accept(char c) {
        if (peek_is(c)) { ++pos; return true; }
        return false;
    }

    Expr parse() {
        Expr e = expression();
        skip_ws();
        if (pos != text.size()) fail("unexpected trailing input");
        return e;
    }

    Expr expression() {
        Expr e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }

    Expr term() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }

    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) return pow(base, unary());  // right-associative
        return base;
    }

    Expr primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input");
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            Expr e = expression();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    Expr number() {
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t p = pos + 1;
            if (p < text.size() && (text[p] == '+' || text[p] == '-')) ++p;
            if (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
                pos = p;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            }
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(text.substr(start, pos - start), &used);
            if (used != pos - start) throw std::invalid_argument("");
            return Expr(v);
        } catch (const std::exception&) {
            pos = start;
            fail("malformed number");
        }
    }

    Expr identifier() {
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        const std::string name = text.substr(start, pos - start);
        if (peek_is('(')) return call(name, start);
        if (name == "x" || name == "t" || name == "pi" || name == "hbar" || name == "m" ||
            params.count(name))
            return Expr::var(name);
        pos = start;
        fail("unknown identifier '" + name + "'");
    }

    Expr call(const std::string& name, std::size_t name_pos) {
        static const std::map<std::string, Expr (*)(const Expr&)> table = {
            {"sqrt", &bohmlab::sqrt}, {"exp", &bohmlab::exp}, {"log", &bohmlab::log},
            {"sin", &bohmlab::sin}, {"cos", &bohmlab::cos}, {"tan", &bohmlab::tan},
            {"arctan", &bohmlab::arctan}, {"sinh", &bohmlab::sinh}, {"cosh", &bohmlab::cosh},
            {"abs", &bohmlab::abs}, {"Ai", &bohmlab::airy_ai}, {"Aip", &bohmlab::airy_ai_prime},
        };
        auto it = table.find(name);
        if (it == table.end()) {
            pos = name_pos;
            fail("unknown function '" + name + "'");
        }
        accept('(');
        Expr arg = expression();
        if (!accept(')')) fail("expected ')'");
        return it->second(arg);
    }
};

} // namespace

Expr parse_expr(const std::string& text, const std::set<std::string>& parameters) {
    Parser p{text, parameters};
    return p.parse();
}

// ---- compiled evaluation ----

CompiledExpr::CompiledExpr(const Expr& e, const Bindings& frozen) {
    std::size_t depth = 0, max_depth = 0;
    struct Emit {
        std::vector<Step>& tape;
        const Bindings& frozen;
        std::size_t& depth;
        std::size_t& max_depth;
        void go(const ExprNode& n) {
            if (n.lhs) go(*n.lhs);
            if (n.rhs) go(*n.rhs);
            double v = 0;
            if (n.op == Op::Number) {
                v = n.value;
            } else if (n.op == Op::Var) {
                if (n.name == "x") v = -1;       // slot markers, see operator()
                else if (n.name == "t") v = -2;
                else {
                    auto it = frozen.find(n.name);
                    if (it != frozen.end()) { tape.push_back({Op::Number, it->second}); bump(1); return; }
                    if (n.name == "pi") { tape.push_back({Op::Number, M_PI}); bump(1); return; }
                    throw ExprError("unbound variable '" + n.name + "' in compiled expression");
                }
            }
            tape.push_back({n.op, v});
            if (n.op == Op::Number || n.op == Op::Var) bump(1);
            else if (n.rhs) bump(-1);
            // unary ops keep the depth unchanged
        }
        void bump(int d) {
            depth = static_cast<std::size_t>(static_cast<long>(depth) + d);
            if (depth > max_depth) max_depth = depth;
        }
    };
    Emit emit{tape_, frozen, depth, max_depth};
    emit.go(e.node());
    stack_.resize(max_depth);
}

double CompiledExpr::operator()(double x, double t) const {
    std::size_t sp = 0;
    double* st = stack_.data();
    for (const Step& s : tape_) {
        switch (s.op) {
        case Op::Number: st[sp++] = s.value; break;
        case Op::Var: st[sp++] = (s.value == -1.0) ? x : t; break;
        case Op::Add: --sp; st[sp - 1] += st[sp]; break;
        case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Op::Div:
            --sp;
            if (st[sp] == 0.0) throw DomainError("division by zero");
            st[sp - 1] /= st[sp];
            break;
        case Op::Pow: {
            --sp;
            const double b = st[sp - 1], p = st[sp];
            if (b == 0.0 && p < 0.0) throw DomainError("zero raised to a negative power");
            if (b < 0.0 && !is_integer(p)) throw DomainError("negative base with non-integer exponent");
            st[sp - 1] = std::pow(b, p);
            break;
        }
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Sqrt:
            if (st[sp - 1] < 0.0) throw DomainError("sqrt of a negative number");
            st[sp - 1] = std::sqrt(st[sp - 1]);
            break;
        case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Op::Log:
            if (st[sp - 1] <= 0.0) throw DomainError("log of a non-positive number");
            st[sp - 1] = std::log(st[sp - 1]);
            break;
        case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Op::Tan: st[sp - 1] = std::tan(st[sp - 1]); break;
        case Op::Arctan: st[sp - 1] = std::atan(st[sp - 1]); break;
        case Op::Sinh: st[sp - 1] = std::sinh(st[sp - 1]); break;
        case Op::Cosh: st[sp - 1] = std::cosh(st[sp - 1]); break;
        case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
        case Op::Ai: st[sp - 1] = specfun::airy_ai(st[sp - 1]); break;
        case Op::AiPrime: st[sp - 1] = specfun::airy_ai_prime(st[sp - 1]); break;
        }
    }
    return st[0];
}

} // namespace bohmlab
