#include "bohmlab/families.hpp"

#include "bohmlab/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace bohmlab {

namespace {

using nlohmann::json;
using specfun::TabulatedFunction;

Expr X() { return Expr::var("x"); }
Expr Tv() { return Expr::var("t"); }

Fn2 fn(const Expr& e) {
    CompiledExpr c(e.simplified());
    return [c](double x, double t) { return c(x, t); };
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw FamilyError(msg);
}

void check_keys(const std::string& family, const json& p,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : p.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known)
            throw FamilyError("family '" + family + "' does not take parameter '" +
                              item.key() + "'");
    }
}

double getd(const json& p, const char* key, double dflt) {
    if (!p.contains(key)) return dflt;
    const json& v = p.at(key);
    if (!v.is_number()) throw FamilyError(std::string("parameter '") + key + "' must be a number");
    return v.get<double>();
}

int geti(const json& p, const char* key, int dflt) {
    if (!p.contains(key)) return dflt;
    const json& v = p.at(key);
    if (!v.is_number_integer())
        throw FamilyError(std::string("parameter '") + key + "' must be an integer");
    return v.get<int>();
}

int get_sign(const json& p) {
    if (!p.contains("sign")) return +1;
    const json& v = p.at("sign");
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "+") return +1;
        if (s == "-") return -1;
    } else if (v.is_number_integer()) {
        const int s = v.get<int>();
        if (s == 1 || s == -1) return s;
    }
    throw FamilyError("parameter 'sign' must be \"+\", \"-\", 1 or -1");
}

Expr get_zeta(const json& p, const char* dflt) {
    std::string text = dflt;
    if (p.contains("zeta")) {
        const json& v = p.at("zeta");
        if (v.is_number()) {
            return Expr(v.get<double>());
        }
        if (!v.is_string()) throw FamilyError("parameter 'zeta' must be an expression string");
        text = v.get<std::string>();
    }
    Expr z = parse_expr(text);
    for (const std::string& v : z.free_vars())
        if (v != "t" && v != "pi")
            throw FamilyError("zeta(t) may only depend on t, found '" + v + "'");
    return z;
}

Grid dg(double x0, double x1, double t0, double t1) {
    return Grid{x0, x1, 512, t0, t1, 256};
}

Grid pick(const std::optional<Grid>& over, const Grid& dflt) {
    if (over) {
        over->validate();
        return *over;
    }
    return dflt;
}

SolutionBundle make_symbolic(const std::string& id, bool vanishing,
                             const PhysicalConstants& c, const Grid& g,
                             const Expr& A, const Expr& S, const Expr& V, const Expr& VB,
                             std::function<bool(double, double)> exclusion,
                             const std::optional<Expr>& f = {},
                             const std::optional<Expr>& mu = {}) {
    SolutionBundle b;
    b.family_id = id;
    b.vanishing_bohm = vanishing;
    b.consts = c;
    b.default_grid = g;
    b.A_expr = A.simplified();
    b.S_expr = S.simplified();
    b.V_expr = V.simplified();
    b.VB_expr = VB.simplified();
    if (f) b.f_expr = f->simplified();
    if (mu) b.mu_expr = mu->simplified();
    b.A = fn(A);
    b.Ax = fn(A.diff("x"));
    b.Axx = fn(A.diff("x").diff("x"));
    b.At = fn(A.diff("t"));
    b.S = fn(S);
    b.Sx = fn(S.diff("x"));
    b.Sxx = fn(S.diff("x").diff("x"));
    b.St = fn(S.diff("t"));
    b.V = fn(V);
    b.VB = fn(VB);
    b.exclusion = std::move(exclusion);
    return b;
}

/// Quintic-Hermite table of mu(t) = integral_0^t rate, with exact slope and
/// curvature values at the nodes (rate is a function of t only).
TabulatedFunction antiderivative_table(const Expr& rate, double t_lo, double t_hi) {
    CompiledExpr r(rate.simplified());
    CompiledExpr rd(rate.diff("t").simplified());
    const auto f = [&](double u) { return r(0.0, u); };
    const int n = std::max(16, static_cast<int>(std::ceil((t_hi - t_lo) / 0.01)));
    std::vector<TabulatedFunction::Node> nodes(n + 1);
    double acc = integrate(f, 0.0, t_lo, 1e-13);
    for (int i = 0; i <= n; ++i) {
        const double t = t_lo + (t_hi - t_lo) * i / n;
        if (i > 0) {
            const double prev = t_lo + (t_hi - t_lo) * (i - 1) / n;
            acc += integrate(f, prev, t, 1e-13);
        }
        nodes[static_cast<std::size_t>(i)] = {t, acc, r(0.0, t), rd(0.0, t)};
    }
    return TabulatedFunction(std::move(nodes));
}

// Padding beyond the grid so the finite-difference probes of the residual
// checks (fd_step plus the coarse order-probe stencil) stay in range.
constexpr double kPad = 0.08;

std::pair<double, double> sampled_range(const CompiledExpr& z, double t_lo, double t_hi) {
    double lo = z(0.0, t_lo), hi = lo;
    for (int i = 1; i <= 512; ++i) {
        const double v = z(0.0, t_lo + (t_hi - t_lo) * i / 512.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

double table_scale(const TabulatedFunction& t) {
    double s = 0.0;
    for (const auto& n : t.nodes()) s = std::max(s, std::fabs(n.u));
    return s;
}

// ---- builders -------------------------------------------------------------

SolutionBundle build_plane_wave(const json& p, const PhysicalConstants& c,
                                const std::optional<Grid>& over) {
    check_keys("plane_wave", p, {"k"});
    const double k = getd(p, "k", 1.0);
    const double m = c.mass;
    const Expr S = Expr(k) * X() - Expr(k * k / (2 * m)) * Tv();
    const Expr mu = Expr(-k * k / (2 * m)) * Tv();
    const Expr f = X() - Expr(k / m) * Tv();
    return make_symbolic("plane_wave", true, c, pick(over, dg(-8, 8, 0.1, 2)),
                         Expr(1.0), S, Expr(0.0), Expr(0.0), nullptr, f, mu);
}

SolutionBundle build_free_nonseparable(const json& p, const PhysicalConstants& c,
                                       const std::optional<Grid>& over) {
    check_keys("free_nonseparable", p, {"alpha", "beta", "gamma", "t_i"});
    const double alpha = getd(p, "alpha", 1.0);
    const double beta = getd(p, "beta", 1.0);
    const double gamma = getd(p, "gamma", 0.0);
    const double ti = getd(p, "t_i", 0.0);
    require(alpha >= 0 && beta >= 0 && alpha + beta > 0,
            "free_nonseparable needs alpha >= 0, beta >= 0, not both zero");
    const double m = c.mass;
    const Expr tau = Tv() - Expr(ti);
    const Expr a = Expr(std::sqrt(alpha)) * pow(tau, -1.5);
    const Expr b = Expr(std::sqrt(beta)) * pow(tau, -0.5);
    const Expr A = a * X() + b;
    const Expr S = Expr(m / 2) * X() * X() / tau;
    const Expr f = cubic_f(a, b, Expr(gamma));
    CompiledExpr ac(A.simplified());
    auto excl = [ac, ti](double x, double t) {
        if (!(t > ti + 1e-9)) return true;
        return !(ac(x, t) > 1e-6);
    };
    return make_symbolic("free_nonseparable", true, c, pick(over, dg(0, 2.5, 1.6, 3)),
                         A, S, Expr(0.0), Expr(0.0), excl, f, Expr(0.0));
}

SolutionBundle build_free_exponential(const json& p, const PhysicalConstants& c,
                                      const std::optional<Grid>& over) {
    check_keys("free_exponential", p, {"lambda", "k"});
    const double lam = getd(p, "lambda", 1.0);
    const double k = getd(p, "k", 1.0);
    require(lam != 0.0, "free_exponential needs lambda != 0");
    const double m = c.mass, hb = c.hbar;
    const Expr g = Expr(lam) * X() - Expr(hb * lam * k / m) * Tv();
    const Expr A = exp(Expr(0.5) * g);
    const Expr mu = Expr(-hb * hb * k * k / (2 * m) + hb * hb * lam * lam / (8 * m)) * Tv();
    const Expr S = Expr(hb * k) * X() + mu;
    const Expr VB = Expr(-hb * hb * lam * lam / (8 * m));
    const Expr f = exp(g) * Expr(1.0 / lam);
    return make_symbolic("free_exponential", false, c, pick(over, dg(-6, 6, 0.1, 2)),
                         A, S, Expr(0.0), VB, nullptr, f, mu);
}

SolutionBundle build_airy_packet(const json& p, const PhysicalConstants& c,
                                 const std::optional<Grid>& over) {
    check_keys("airy_packet", p, {"beta"});
    const double beta = getd(p, "beta", 1.0);
    require(beta != 0.0, "airy_packet needs beta != 0");
    const double m = c.mass, hb = c.hbar;
    const double h23 = std::pow(hb, 2.0 / 3.0);
    const double b3 = beta * beta * beta, b6 = b3 * b3;
    const Expr arg = X() - Expr(b3 / (4 * m * m)) * Tv() * Tv();
    const Expr u = Expr(beta / h23) * arg;
    const Expr A = airy_ai(u);
    const Expr mu = Expr(-b6 / (12 * m * m * m)) * Tv() * Tv() * Tv();
    const Expr S = Expr(b3 / (2 * m)) * Tv() * X() + mu;
    const Expr VB = Expr(-b3 / (2 * m)) * arg;
    CompiledExpr ac(A.simplified());
    auto excl = [ac](double x, double t) { return std::fabs(ac(x, t)) < 1e-6; };
    return make_symbolic("airy_packet", false, c, pick(over, dg(-5, 5, 0.1, 2)),
                         A, S, Expr(0.0), VB, excl, {}, mu);
}

SolutionBundle build_scaling_packet(const json& p, const PhysicalConstants& c,
                                    const std::optional<Grid>& over) {
    check_keys("scaling_packet", p, {"kind", "q", "zeta1", "zeta2", "alpha", "beta"});
    std::string kind = "gaussian";
    if (p.contains("kind")) {
        require(p.at("kind").is_string(), "parameter 'kind' must be a string");
        kind = p.at("kind").get<std::string>();
    }
    const double alpha = getd(p, "alpha", 1.0);
    require(alpha > 0, "scaling_packet needs alpha > 0");
    const double m = c.mass, hb = c.hbar;

    if (kind == "trig") {
        const double beta = getd(p, "beta", 1.0);
        const double z2 = getd(p, "zeta2", -1.0);
        require(!p.contains("q") && !p.contains("zeta1"),
                "trig kind takes only alpha, beta, zeta2");
        const Expr sig2 =
            Expr(alpha) * Tv() * Tv() + Expr(beta) * Tv() + Expr(beta * beta / (4 * alpha));
        const Expr y = X() / sqrt(sig2);
        Expr Z(1.0);
        if (z2 < 0) Z = cos(Expr(std::sqrt(-z2)) * y);
        else if (z2 > 0) Z = cosh(Expr(std::sqrt(z2)) * y);
        const Expr A = pow(sig2, -0.25) * Z;
        const Expr mu = Expr(-hb * hb * z2 / (2 * m * alpha)) / (Tv() + Expr(beta / (2 * alpha)));
        const Expr S = Expr(m / 4) * X() * X() * sig2.diff("t") / sig2 + mu;
        const Expr VB = Expr(-hb * hb * z2 / (2 * m)) / sig2;
        CompiledExpr zc(Z.simplified());
        CompiledExpr s2c(sig2.simplified());
        auto excl = [zc, s2c](double x, double t) {
            if (!(s2c(x, t) > 1e-10)) return true;
            return std::fabs(zc(x, t)) < 1e-6;
        };
        return make_symbolic("scaling_packet", false, c, pick(over, dg(-1, 1, 0.5, 2)),
                             A, S, Expr(0.0), VB, excl, {}, mu);
    }

    double z1 = 0, z2 = 0;
    double beta = 0;
    if (kind == "gaussian") {
        const double q = getd(p, "q", 0.25);
        require(q > 0, "gaussian kind needs q > 0");
        require(!p.contains("zeta1") && !p.contains("zeta2"),
                "gaussian kind takes only alpha, beta, q");
        z1 = 4 * q * q;
        z2 = -2 * q;
        beta = getd(p, "beta", 0.0);
    } else if (kind == "weber") {
        z1 = getd(p, "zeta1", 0.25);
        z2 = getd(p, "zeta2", -0.5);
        require(z1 > 0, "weber kind needs zeta1 > 0 (mu uses the arctan form)");
        require(!p.contains("q"), "weber kind takes only alpha, beta, zeta1, zeta2");
        beta = getd(p, "beta", 0.0);
    } else {
        throw FamilyError("unknown scaling_packet kind '" + kind +
                          "' (gaussian, trig, weber)");
    }

    const double s1 = std::sqrt(z1);
    const Expr sig2 = Expr(alpha) * Tv() * Tv() + Expr(beta) * Tv() +
                      Expr(beta * beta / (4 * alpha) + hb * hb * z1 / (alpha * m * m));
    const Expr mu = Expr(hb * z2 / (2 * s1)) *
                    arctan(Expr(m / (2 * hb * s1)) * (Expr(2 * alpha) * Tv() + Expr(beta)));
    const Expr S = Expr(m / 4) * X() * X() * sig2.diff("t") / sig2 + mu;
    const Expr y = X() / sqrt(sig2);
    const Expr VB = Expr(-hb * hb / (2 * m)) * (Expr(z1) * y * y + Expr(z2)) / sig2;

    if (kind == "gaussian") {
        const double q = -z2 / 2;
        const Expr A = pow(sig2, -0.25) * exp(Expr(-q) * y * y);
        return make_symbolic("scaling_packet", false, c, pick(over, dg(-8, 8, 0.1, 2)),
                             A, S, Expr(0.0), VB, nullptr, {}, mu);
    }

    // Weber kind: Z is the even solution of Z'' = (zeta1 y^2 + zeta2) Z,
    // tabulated over the y-range the grid can reach.
    const Grid g = pick(over, dg(-4, 4, 0.5, 2));
    CompiledExpr s2c(sig2.simplified());
    CompiledExpr s2dot(sig2.diff("t").simplified());
    double s2min = std::min(s2c(0, g.t_min - kPad), s2c(0, g.t_max + kPad));
    const double tv = -beta / (2 * alpha);  // vertex of the quadratic sigma^2
    if (tv > g.t_min - kPad && tv < g.t_max + kPad) s2min = std::min(s2min, s2c(0, tv));
    require(s2min > 0, "sigma^2 must stay positive on the grid");
    const double xr = std::max(std::fabs(g.x_min), std::fabs(g.x_max)) + kPad;
    const double Y = xr / std::sqrt(s2min) + 0.1;
    auto Z = std::make_shared<TabulatedFunction>(specfun::solve_linear_ode(
        [z1, z2](double yy) { return z1 * yy * yy + z2; }, -Y, Y, 1.0, 0.0));
    const double zscale = table_scale(*Z);

    SolutionBundle b = make_symbolic("scaling_packet", false, c, g, Expr(1.0), S,
                                     Expr(0.0), VB, nullptr, {}, mu);
    b.A_expr.reset();
    b.A = [Z, s2c](double x, double t) {
        const double s2 = s2c(x, t);
        return std::pow(s2, -0.25) * Z->value(x / std::sqrt(s2));
    };
    b.Ax = [Z, s2c](double x, double t) {
        const double s2 = s2c(x, t);
        return std::pow(s2, -0.75) * Z->derivative(x / std::sqrt(s2));
    };
    b.Axx = [Z, s2c](double x, double t) {
        const double s2 = s2c(x, t);
        return std::pow(s2, -1.25) * Z->second_derivative(x / std::sqrt(s2));
    };
    b.At = [Z, s2c, s2dot](double x, double t) {
        const double s2 = s2c(x, t), ds2 = s2dot(x, t);
        const double yy = x / std::sqrt(s2);
        return -0.25 * ds2 * std::pow(s2, -1.25) *
               (Z->value(yy) + 2 * yy * Z->derivative(yy));
    };
    b.exclusion = [Z, s2c, zscale](double x, double t) {
        const double s2 = s2c(x, t);
        if (!(s2 > 1e-12)) return true;
        const double yy = x / std::sqrt(s2);
        if (yy <= Z->y_min() + 0.02 || yy >= Z->y_max() - 0.02) return true;
        return std::fabs(Z->value(yy)) < 1e-3 * zscale;
    };
    return b;
}

SolutionBundle build_oscillator_vvm(const json& p, const PhysicalConstants& c,
                                    const std::optional<Grid>& over) {
    check_keys("oscillator_vvm", p, {"omega", "alpha", "t_i", "x_i"});
    const double w = getd(p, "omega", 1.0);
    const double alpha = getd(p, "alpha", 1.0);
    const double ti = getd(p, "t_i", 0.0);
    const double xi = getd(p, "x_i", 1.0);
    require(w > 0, "oscillator_vvm needs omega > 0");
    require(alpha > 0, "oscillator_vvm needs alpha > 0");
    const double m = c.mass;
    const Expr tau = Tv() - Expr(ti);
    const Expr sn = sin(Expr(w) * tau), cn = cos(Expr(w) * tau);
    const Expr A = sqrt(Expr(alpha) / sn);
    const Expr S =
        Expr(m * w / 2) * ((X() * X() + Expr(xi * xi)) * cn - Expr(2 * xi) * X()) / sn;
    const Expr V = Expr(m * w * w / 2) * X() * X();
    const Expr mu = Expr(m * w * xi * xi / 2) * cn / sn;
    const Expr f = Expr(alpha) * (X() - Expr(xi) * cn) / sn;
    CompiledExpr snc(sn.simplified());
    auto excl = [snc](double, double t) { return !(snc(0, t) > 1e-3); };
    return make_symbolic("oscillator_vvm", true, c, pick(over, dg(-1, 1, 1.0, 2)),
                         A, S, V, Expr(0.0), excl, f, mu);
}

// The two alternative oscillator amplitudes share this phase.
Expr oscillator_alt_phase(double m, double w, double ti) {
    return Expr(-m * w / 2) * X() * X() * tan(Expr(w) * (Tv() - Expr(ti)));
}

SolutionBundle build_oscillator_cos_amplitude(const json& p, const PhysicalConstants& c,
                                              const std::optional<Grid>& over) {
    check_keys("oscillator_cos_amplitude", p, {"omega", "t_i"});
    const double w = getd(p, "omega", 1.0);
    const double ti = getd(p, "t_i", 0.0);
    require(w > 0, "oscillator_cos_amplitude needs omega > 0");
    const double m = c.mass;
    const Expr cn = cos(Expr(w) * (Tv() - Expr(ti)));
    const Expr A = pow(cn, -0.5);
    const Expr V = Expr(m * w * w / 2) * X() * X();
    const Expr f = X() / cn;
    CompiledExpr cnc(cn.simplified());
    auto excl = [cnc](double, double t) { return !(cnc(0, t) > 1e-3); };
    return make_symbolic("oscillator_cos_amplitude", true, c,
                         pick(over, dg(-1, 1, 0.1, 0.9)), A,
                         oscillator_alt_phase(m, w, ti), V, Expr(0.0), excl, f, Expr(0.0));
}

SolutionBundle build_oscillator_linear_amplitude(const json& p, const PhysicalConstants& c,
                                                 const std::optional<Grid>& over) {
    check_keys("oscillator_linear_amplitude", p, {"omega", "t_i"});
    const double w = getd(p, "omega", 1.0);
    const double ti = getd(p, "t_i", 0.0);
    require(w > 0, "oscillator_linear_amplitude needs omega > 0");
    const double m = c.mass;
    const Expr cn = cos(Expr(w) * (Tv() - Expr(ti)));
    const Expr A = X() * pow(cn, -1.5);
    const Expr V = Expr(m * w * w / 2) * X() * X();
    const Expr f = Expr(1.0 / 3.0) * X() * X() * X() * pow(cn, -3.0);
    CompiledExpr cnc(cn.simplified());
    auto excl = [cnc](double x, double t) {
        return std::fabs(x) <= 1e-3 || !(cnc(0, t) > 1e-3);
    };
    return make_symbolic("oscillator_linear_amplitude", true, c,
                         pick(over, dg(0.05, 1.0, 0.1, 0.7)), A,
                         oscillator_alt_phase(m, w, ti), V, Expr(0.0), excl, f, Expr(0.0));
}

SolutionBundle build_exp_cubic(const json& p, const PhysicalConstants& c,
                               const std::optional<Grid>& over) {
    check_keys("exp_cubic", p, {"a", "b", "c", "mu"});
    const double a = getd(p, "a", 1.0);
    const double bb = getd(p, "b", 1.0);
    const double cc = getd(p, "c", 1.0);
    const double mu = getd(p, "mu", 0.3);
    require(a != 0 || bb != 0, "exp_cubic needs a != 0 or b != 0");
    const Expr decay = exp(Expr(-mu) * Tv());
    const Expr decay2 = exp(Expr(-2 * mu) * Tv());
    const Expr f = cubic_f(Expr(a) * decay, Expr(bb) * decay, Expr(cc) * decay2);
    const Grid g = pick(over, a == 0 ? dg(-3, 3, 0.1, 2)
                                     : dg(bb == 0 ? 0.2 : 0.0, 3, 0.1, 2));
    SolutionBundle b = bundle_from_f(f, Expr(0.0), c, g);
    b.family_id = "exp_cubic";
    b.vanishing_bohm = true;
    b.VB_expr = Expr(0.0);
    b.VB = fn(Expr(0.0));
    return b;
}

SolutionBundle build_power_cosine(const json& p, const PhysicalConstants& c,
                                  const std::optional<Grid>& over) {
    check_keys("power_cosine", p, {"n", "omega", "t_i"});
    const int n = geti(p, "n", 2);
    const double w = getd(p, "omega", 1.0);
    const double ti = getd(p, "t_i", 0.0);
    require(n >= 1, "power_cosine needs integer n >= 1");
    require(w > 0, "power_cosine needs omega > 0");
    const double m = c.mass, hb = c.hbar;
    const Expr cn = cos(Expr(w) * (Tv() - Expr(ti)));
    const Expr A = sqrt(Expr(double(n)) * pow(X(), double(n - 1)) * pow(cn, -double(n)));
    const double coef = hb * hb * (n - 1) * (n - 3) / (8 * m);
    Expr V = Expr(m * w * w / 2) * X() * X();
    Expr VB(0.0);
    if (coef != 0.0) {
        V = V + Expr(coef) / (X() * X());
        VB = Expr(-coef) / (X() * X());
    }
    const Expr f = pow(X(), double(n)) * pow(cn, -double(n));
    CompiledExpr cnc(cn.simplified());
    const bool even_n = n % 2 == 0;
    auto excl = [cnc, even_n](double x, double t) {
        if (even_n ? x <= 1e-3 : std::fabs(x) <= 1e-3) return true;
        return !(cnc(0, t) > 1e-3);
    };
    return make_symbolic("power_cosine", n == 1 || n == 3, c,
                         pick(over, dg(0.35, 1.0, 0.1, 0.7)), A,
                         oscillator_alt_phase(m, w, ti), V, VB, excl, f, Expr(0.0));
}

SolutionBundle build_airy_forced(const json& p, const PhysicalConstants& c,
                                 const std::optional<Grid>& over) {
    check_keys("airy_forced", p, {"beta", "zeta", "sign"});
    const double beta = getd(p, "beta", 1.0);
    require(beta != 0.0, "airy_forced needs beta != 0");
    const int sgn = get_sign(p);
    const Expr zeta = get_zeta(p, "0.2*cos(t)");
    const double m = c.mass, hb = c.hbar;
    const double h23 = std::pow(hb, 2.0 / 3.0);
    const Expr zdot = zeta.diff("t");
    const Expr zddot = zdot.diff("t");
    const Expr y = Expr(beta / h23) * X() + zeta;
    const Expr A = sgn > 0 ? airy_ai(y) : airy_ai(-y);
    const Expr S_linear = Expr(-h23 * m / beta) * X() * zdot;
    const Expr mudot = Expr(-h23 * h23 * m / (2 * beta * beta)) * zdot * zdot +
                       Expr(sgn * h23 * beta * beta / (2 * m)) * zeta;
    const Expr V = (Expr(h23 * m / beta) * zddot +
                    Expr(sgn * beta * beta * beta / (2 * m))) * X();
    const Expr VB = Expr(-sgn * h23 * beta * beta / (2 * m)) * y;
    CompiledExpr ac(A.simplified());
    auto excl = [ac](double x, double t) { return std::fabs(ac(x, t)) < 1e-6; };

    const Grid g = pick(over, dg(-3, 3, 0.1, 2));
    SolutionBundle b =
        make_symbolic("airy_forced", false, c, g, A, S_linear, V, VB, excl);
    auto mu = std::make_shared<TabulatedFunction>(
        antiderivative_table(mudot, std::min(0.0, g.t_min - kPad), g.t_max + kPad));
    const Fn2 s_lin = b.S;
    b.S = [s_lin, mu](double x, double t) { return s_lin(x, t) + mu->value(t); };
    b.St = fn(S_linear.diff("t") + mudot);
    b.S_expr.reset();
    return b;
}

// Shared assembly for the tabulated Weber-type packets: A = G(y) with
// y = (beta/hbar^{2/3}) x + zeta(t) and G'' = sign y^n G.
void attach_weber_amplitude(SolutionBundle& b, int n, int sgn, double beta,
                            const Expr& zeta, const Grid& g) {
    const double h23 = std::pow(b.consts.hbar, 2.0 / 3.0);
    const double c1 = beta / h23;
    CompiledExpr zc(zeta.simplified());
    CompiledExpr zd(zeta.diff("t").simplified());
    const auto [zlo, zhi] = sampled_range(zc, g.t_min - kPad, g.t_max + kPad);
    const double xa = c1 * (g.x_min - kPad), xb = c1 * (g.x_max + kPad);
    const double ylo = std::min({std::min(xa, xb) + zlo - 0.1, -0.1});
    const double yhi = std::max({std::max(xa, xb) + zhi + 0.1, 0.1});
    specfun::WeberSpec spec;
    spec.n = n;
    spec.sign = sgn;
    spec.parity = specfun::WeberSpec::Parity::Even;
    spec.y_min = ylo;
    spec.y_max = yhi;
    auto G = std::make_shared<TabulatedFunction>(specfun::weber_solve(spec));
    const double gscale = table_scale(*G);

    b.A_expr.reset();
    b.A = [G, zc, c1](double x, double t) { return G->value(c1 * x + zc(0, t)); };
    b.Ax = [G, zc, c1](double x, double t) { return c1 * G->derivative(c1 * x + zc(0, t)); };
    b.Axx = [G, zc, c1](double x, double t) {
        return c1 * c1 * G->second_derivative(c1 * x + zc(0, t));
    };
    b.At = [G, zc, zd, c1](double x, double t) {
        return zd(0, t) * G->derivative(c1 * x + zc(0, t));
    };
    b.exclusion = [G, zc, c1, gscale](double x, double t) {
        const double yy = c1 * x + zc(0, t);
        if (yy <= G->y_min() + 0.02 || yy >= G->y_max() - 0.02) return true;
        return std::fabs(G->value(yy)) < 1e-3 * gscale;
    };
}

SolutionBundle build_weber_oscillator(const json& p, const PhysicalConstants& c,
                                      const std::optional<Grid>& over) {
    check_keys("weber_oscillator", p, {"beta", "zeta0", "sign"});
    const double beta = getd(p, "beta", 1.0);
    require(beta != 0.0, "weber_oscillator needs beta != 0");
    const double z0 = getd(p, "zeta0", 0.3);
    const int sgn = get_sign(p);
    const double m = c.mass, hb = c.hbar;
    const double h23 = std::pow(hb, 2.0 / 3.0);
    const double w = beta * beta / (m * std::cbrt(hb));
    // zeta solves zeta'' + sign w^2 zeta = 0: oscillation (upper sign) or
    // exponential relaxation (lower sign).
    const Expr zeta = sgn > 0 ? Expr(z0) * cos(Expr(w) * Tv())
                              : Expr(z0) * exp(Expr(-w) * Tv());
    const Expr mu = sgn > 0 ? Expr(hb * z0 * z0 / 4) * sin(Expr(2 * w) * Tv())
                            : Expr(hb * z0 * z0 / 2) * exp(Expr(-2 * w) * Tv());
    const Expr y = Expr(beta / h23) * X() + zeta;
    const Expr S = Expr(-h23 * m / beta) * X() * zeta.diff("t") + mu;
    const Expr V = Expr(sgn * m * w * w / 2) * X() * X();
    const Expr VB = Expr(-sgn * h23 * beta * beta / (2 * m)) * y * y;

    const Grid g = pick(over, dg(-1.5, 1.5, 0.1, 2));
    SolutionBundle b =
        make_symbolic("weber_oscillator", false, c, g, Expr(1.0), S, V, VB, nullptr, {}, mu);
    attach_weber_amplitude(b, 2, sgn, beta, zeta, g);
    return b;
}

SolutionBundle build_general_power(const json& p, const PhysicalConstants& c,
                                   const std::optional<Grid>& over) {
    check_keys("general_power", p, {"n", "beta", "zeta", "sign"});
    const int n = geti(p, "n", 3);
    require(n >= 1, "general_power needs integer n >= 1");
    const double beta = getd(p, "beta", 1.0);
    require(beta != 0.0, "general_power needs beta != 0");
    const int sgn = get_sign(p);
    const Expr zeta = get_zeta(p, "0.2*cos(t)");
    const double m = c.mass, hb = c.hbar;
    const double h23 = std::pow(hb, 2.0 / 3.0);
    const Expr zdot = zeta.diff("t");
    const Expr zddot = zdot.diff("t");
    const Expr y = Expr(beta / h23) * X() + zeta;
    const Expr S_linear = Expr(-h23 * m / beta) * X() * zdot;
    const Expr mudot = Expr(-h23 * h23 * m / (2 * beta * beta)) * zdot * zdot +
                       Expr(sgn * h23 * beta * beta / (2 * m)) * pow(zeta, double(n));
    const Expr V = Expr(sgn * h23 * beta * beta / (2 * m)) *
                       (pow(y, double(n)) - pow(zeta, double(n))) +
                   Expr(h23 * m / beta) * X() * zddot;
    const Expr VB = Expr(-sgn * h23 * beta * beta / (2 * m)) * pow(y, double(n));

    const Grid g = pick(over, dg(-1.5, 1.5, 0.1, 2));
    SolutionBundle b =
        make_symbolic("general_power", false, c, g, Expr(1.0), S_linear, V, VB, nullptr);
    attach_weber_amplitude(b, n, sgn, beta, zeta, g);
    auto mu = std::make_shared<TabulatedFunction>(
        antiderivative_table(mudot, std::min(0.0, g.t_min - kPad), g.t_max + kPad));
    const Fn2 s_lin = b.S;
    b.S = [s_lin, mu](double x, double t) { return s_lin(x, t) + mu->value(t); };
    b.St = fn(S_linear.diff("t") + mudot);
    b.S_expr.reset();
    return b;
}

} // namespace

FamilyConfig FamilyConfig::from_json(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw FamilyError("config must be a JSON object with a \"family\" string");
    FamilyConfig c;
    c.family = j.at("family").get<std::string>();
    if (j.contains("params")) {
        if (!j.at("params").is_object())
            throw FamilyError("\"params\" must be a JSON object");
        c.params = j.at("params");
    }
    for (const auto& item : j.items())
        if (item.key() != "family" && item.key() != "params")
            throw FamilyError("unknown config key '" + item.key() + "'");
    return c;
}

json FamilyConfig::to_json() const {
    return json{{"family", family}, {"params", params}};
}

const std::vector<FamilyDescriptor>& list_families() {
    static const std::vector<FamilyDescriptor> catalog = {
        {"plane_wave", "IV.A", {{"k", "1", "momentum"}}, true,
         "free plane wave, A = 1"},
        {"free_nonseparable", "IV.B",
         {{"alpha", "1", "cubic weight"}, {"beta", "1", "linear weight"},
          {"gamma", "0", "constant of f (cancels in A and S)"}, {"t_i", "0", "focal time"}},
         true, "free packet with non-separable x t phase"},
        {"free_exponential", "V.A",
         {{"lambda", "1", "amplitude growth rate"}, {"k", "1", "wavenumber"}}, false,
         "free wave with constant Bohm potential -hbar^2 lambda^2 / 8m"},
        {"airy_packet", "V.B", {{"beta", "1", "Airy scale"}}, false,
         "non-spreading Airy packet accelerating at beta^3/2m^2"},
        {"scaling_packet", "V.C",
         {{"kind", "gaussian", "gaussian | trig | weber"}, {"alpha", "1", "sigma^2 quadratic"},
          {"beta", "0", "sigma^2 linear"}, {"q", "0.25", "gaussian width"},
          {"zeta1", "0.25", "weber kind"}, {"zeta2", "-0.5", "trig/weber kind"}},
         false, "self-similar free packet A = Z(x/sigma)/sqrt(sigma)"},
        {"oscillator_vvm", "VI.A",
         {{"omega", "1", "frequency"}, {"alpha", "1", "amplitude scale"},
          {"t_i", "0", "initial time"}, {"x_i", "1", "initial position"}},
         true, "harmonic oscillator with Van Vleck-Morette amplitude"},
        {"oscillator_cos_amplitude", "VI.B",
         {{"omega", "1", "frequency"}, {"t_i", "0", "initial time"}}, true,
         "oscillator with A = cos^{-1/2}, same phase as VI.C"},
        {"oscillator_linear_amplitude", "VI.C",
         {{"omega", "1", "frequency"}, {"t_i", "0", "initial time"}}, true,
         "oscillator with A = x cos^{-3/2}, same phase as VI.B"},
        {"exp_cubic", "VI.D",
         {{"a", "1", "cubic coefficient (decays e^{-mu t})"},
          {"b", "1", "linear coefficient (decays e^{-mu t})"},
          {"c", "1", "constant (decays e^{-2 mu t})"}, {"mu", "0.3", "decay rate"}},
         true, "cubic generating function with exponentially decaying coefficients"},
        {"power_cosine", "VII.A",
         {{"n", "2", "power (integer >= 1)"}, {"omega", "1", "frequency"},
          {"t_i", "0", "initial time"}},
         false, "A^2 = n x^{n-1} cos^{-n}; Bohm potential vanishes only for n = 1, 3"},
        {"airy_forced", "VII.B",
         {{"beta", "1", "Airy scale"}, {"zeta", "0.2*cos(t)", "drive zeta(t), expression"},
          {"sign", "+", "branch of G'' = sign y G"}},
         false, "Airy packet driven by a uniform time-dependent force"},
        {"weber_oscillator", "VII.C",
         {{"beta", "1", "Weber scale"}, {"zeta0", "0.3", "drive amplitude"},
          {"sign", "+", "upper: oscillation, lower: relaxation"}},
         false, "Weber packet in a (possibly inverted) harmonic potential"},
        {"general_power", "VII.D",
         {{"n", "3", "power (integer >= 1)"}, {"beta", "1", "scale"},
          {"zeta", "0.2*cos(t)", "drive zeta(t), expression"},
          {"sign", "+", "branch of G'' = sign y^n G"}},
         false, "packet in a shifted power-law potential, G'' = sign y^n G"},
    };
    return catalog;
}

SolutionBundle build(const FamilyConfig& cfg, const PhysicalConstants& consts,
                     const std::optional<Grid>& grid) {
    consts.validate();
    if (!cfg.params.is_object())
        throw FamilyError("params must be a JSON object");
    const json& p = cfg.params;
    if (cfg.family == "plane_wave") return build_plane_wave(p, consts, grid);
    if (cfg.family == "free_nonseparable") return build_free_nonseparable(p, consts, grid);
    if (cfg.family == "free_exponential") return build_free_exponential(p, consts, grid);
    if (cfg.family == "airy_packet") return build_airy_packet(p, consts, grid);
    if (cfg.family == "scaling_packet") return build_scaling_packet(p, consts, grid);
    if (cfg.family == "oscillator_vvm") return build_oscillator_vvm(p, consts, grid);
    if (cfg.family == "oscillator_cos_amplitude")
        return build_oscillator_cos_amplitude(p, consts, grid);
    if (cfg.family == "oscillator_linear_amplitude")
        return build_oscillator_linear_amplitude(p, consts, grid);
    if (cfg.family == "exp_cubic") return build_exp_cubic(p, consts, grid);
    if (cfg.family == "power_cosine") return build_power_cosine(p, consts, grid);
    if (cfg.family == "airy_forced") return build_airy_forced(p, consts, grid);
    if (cfg.family == "weber_oscillator") return build_weber_oscillator(p, consts, grid);
    if (cfg.family == "general_power") return build_general_power(p, consts, grid);
    throw FamilyError("unknown family '" + cfg.family + "' (run `bohmlab list` for the catalog)");
}

Expr declared_acceleration(const FamilyConfig& cfg, const PhysicalConstants& consts) {
    consts.validate();
    const json& p = cfg.params;
    const double m = consts.mass, hb = consts.hbar;
    const double h23 = std::pow(hb, 2.0 / 3.0);
    if (cfg.family == "airy_packet") {
        const double beta = getd(p, "beta", 1.0);
        return Expr(beta * beta * beta / (2 * m * m));
    }
    if (cfg.family == "airy_forced") {
        const double beta = getd(p, "beta", 1.0);
        require(beta != 0.0, "airy_forced needs beta != 0");
        return (Expr(-h23 / beta) * get_zeta(p, "0.2*cos(t)").diff("t").diff("t")).simplified();
    }
    if (cfg.family == "weber_oscillator") {
        const double beta = getd(p, "beta", 1.0);
        require(beta != 0.0, "weber_oscillator needs beta != 0");
        const double z0 = getd(p, "zeta0", 0.3);
        const int sgn = get_sign(p);
        const double w = beta * beta / (m * std::cbrt(hb));
        const Expr zeta = sgn > 0 ? Expr(z0) * cos(Expr(w) * Tv())
                                  : Expr(z0) * exp(Expr(-w) * Tv());
        return (Expr(sgn * beta * beta * beta / (m * m)) * zeta).simplified();
    }
    if (cfg.family == "general_power") {
        const double beta = getd(p, "beta", 1.0);
        require(beta != 0.0, "general_power needs beta != 0");
        return (Expr(-h23 / beta) * get_zeta(p, "0.2*cos(t)").diff("t").diff("t")).simplified();
    }
    throw FamilyError("family '" + cfg.family + "' has no closed-form packet acceleration");
}

} // namespace bohmlab
