// Airy functions and tabulated solutions of Weber-type linear ODEs.

#include "bohmlab/specfun.hpp"

#include "bohmlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bohmlab::specfun {

namespace {

// Compensated (double-double) arithmetic, enough to sum the Airy
// Maclaurin series without catastrophic cancellation for |y| <= 6.5.
struct DD {
    double hi = 0.0, lo = 0.0;
};

DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

DD quick_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

DD two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return quick_two_sum(s.hi, s.lo);
}

DD dd_mul_d(DD a, double b) {
    DD p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

DD dd_div_d(DD a, double b) {
    const double q1 = a.hi / b;
    DD p = two_prod(q1, b);
    const double q2 = ((a.hi - p.hi) - p.lo + a.lo) / b;
    return quick_two_sum(q1, q2);
}

DD dd_mul(DD a, DD b) {
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

// Ai(0) = 3^{-2/3} / Gamma(2/3), -Ai'(0) = 3^{-1/3} / Gamma(1/3).
constexpr double kAi0Hi = 0.3550280538878172;
constexpr double kAi0Lo = 2.05233632436212e-17;
constexpr double kAip0Hi = 0.2588194037928068;
constexpr double kAip0Lo = -2.522243111610832e-17;

constexpr double kSeriesCut = 6.5;

// Maclaurin series: Ai = c1 f - c2 g, Ai' = c1 f' - c2 g' with
//   f  = sum a_k,  a_0 = 1,     a_{k+1} = a_k y^3 / ((3k+2)(3k+3))
//   g  = sum b_k,  b_0 = y,     b_{k+1} = b_k y^3 / ((3k+3)(3k+4))
//   f' = sum c_k,  c_1 = y^2/2, c_{k+1} = c_k y^3 / ((3k)(3k+2))
//   g' = sum d_k,  d_0 = 1,     d_{k+1} = d_k y^3 / ((3k+1)(3k+3))
void airy_series(double y, double& ai, double& aip) {
    // y^3 must be carried in double-double form: a double rounding of y^3
    // alone costs ~zeta/2 ulps in the sum near the series cut.
    const DD y3 = dd_mul_d(two_prod(y, y), y);
    const DD fp0 = dd_div_d(two_prod(y, y), 2.0);
    DD f{1.0, 0.0}, g{y, 0.0}, fp = fp0, gp{1.0, 0.0};
    DD af = f, ag = g, afp = fp, agp = gp;
    for (int k = 0; k < 80; ++k) {
        af = dd_div_d(dd_mul(af, y3), (3.0 * k + 2) * (3.0 * k + 3));
        ag = dd_div_d(dd_mul(ag, y3), (3.0 * k + 3) * (3.0 * k + 4));
        agp = dd_div_d(dd_mul(agp, y3), (3.0 * k + 1) * (3.0 * k + 3));
        f = dd_add(f, af);
        g = dd_add(g, ag);
        gp = dd_add(gp, agp);
        if (k >= 1) {
            afp = dd_div_d(dd_mul(afp, y3), (3.0 * k) * (3.0 * k + 2));
            fp = dd_add(fp, afp);
        }
        if (std::fabs(af.hi) < 1e-40 && std::fabs(ag.hi) < 1e-40) break;
    }
    const DD c1{kAi0Hi, kAi0Lo}, c2{kAip0Hi, kAip0Lo};
    const DD a = dd_add(dd_mul(c1, f), dd_mul_d(dd_mul(c2, g), -1.0));
    const DD ap = dd_add(dd_mul(c1, fp), dd_mul_d(dd_mul(c2, gp), -1.0));
    ai = a.hi + a.lo;
    aip = ap.hi + ap.lo;
}

// Asymptotic coefficient sequences (DLMF 9.7.2):
//   u_0 = 1, u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / (216 k (2k-1))
//   v_k = u_k (6k+1) / (1 - 6k)
// Sums are truncated at the smallest term (optimal truncation).
void asymptotic_sums(double zeta, double& su, double& sv) {
    double u = 1.0, su_acc = 1.0, sv_acc = 1.0, sign = 1.0;
    double prev = 1.0;
    for (int k = 1; k <= 60; ++k) {
        u *= (6.0 * k - 5) * (6.0 * k - 3) * (6.0 * k - 1) /
             (216.0 * k * (2.0 * k - 1));
        sign = -sign;
        const double term = u / std::pow(zeta, k);
        if (term >= prev) break;
        su_acc += sign * term;
        sv_acc += sign * term * (6.0 * k + 1) / (1.0 - 6.0 * k);
        prev = term;
    }
    su = su_acc;
    sv = sv_acc;
}

// Oscillatory sums for negative arguments (DLMF 9.7.9 / 9.7.10):
// even/odd-index subsequences of u_k and v_k with alternating signs.
void asymptotic_sums_neg(double zeta, double& ue, double& uo, double& ve, double& vo) {
    double u = 1.0;
    ue = 1.0;
    ve = 1.0;
    uo = 0.0;
    vo = 0.0;
    double prev = 1.0;
    for (int k = 1; k <= 60; ++k) {
        u *= (6.0 * k - 5) * (6.0 * k - 3) * (6.0 * k - 1) /
             (216.0 * k * (2.0 * k - 1));
        const double term = u / std::pow(zeta, k);
        if (term >= prev) break;
        const double v_term = term * (6.0 * k + 1) / (1.0 - 6.0 * k);
        const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;  // (-1)^{floor(k/2)}
        if (k % 2 == 0) {
            ue += sign * term;
            ve += sign * v_term;
        } else {
            uo += sign * term;
            vo += sign * v_term;
        }
        prev = term;
    }
}

void airy_asymptotic(double y, double& ai, double& aip) {
    const double sqrt_pi = std::sqrt(M_PI);
    if (y > 0) {
        if (y > 200.0) {  // e^{-zeta} underflows long before this
            ai = 0.0;
            aip = 0.0;
            return;
        }
        const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
        double su, sv;
        asymptotic_sums(zeta, su, sv);
        const double damp = std::exp(-zeta) / (2.0 * sqrt_pi);
        ai = damp * su / std::pow(y, 0.25);
        aip = -damp * sv * std::pow(y, 0.25);
        return;
    }
    const double w = -y;
    const double zeta = 2.0 / 3.0 * w * std::sqrt(w);
    double ue, uo, ve, vo;
    asymptotic_sums_neg(zeta, ue, uo, ve, vo);
    const double phase = zeta - M_PI / 4.0;
    const double c = std::cos(phase), s = std::sin(phase);
    ai = (c * ue + s * uo) / (sqrt_pi * std::pow(w, 0.25));
    aip = (s * ve - c * vo) * std::pow(w, 0.25) / sqrt_pi;
}

} // namespace

double airy_ai(double y) {
    double ai, aip;
    if (std::fabs(y) <= kSeriesCut) {
        airy_series(y, ai, aip);
    } else {
        airy_asymptotic(y, ai, aip);
    }
    return ai;
}

double airy_ai_prime(double y) {
    double ai, aip;
    if (std::fabs(y) <= kSeriesCut) {
        airy_series(y, ai, aip);
    } else {
        airy_asymptotic(y, ai, aip);
    }
    return aip;
}

TabulatedFunction::TabulatedFunction(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw std::invalid_argument("tabulation needs >= 2 nodes");
    segments_.reserve(nodes_.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        const Node& n0 = nodes_[i];
        const Node& n1 = nodes_[i + 1];
        const double h = n1.y - n0.y;
        if (!(h > 0)) throw std::invalid_argument("tabulation nodes must be increasing");
        // Quintic Hermite in the scaled variable s = (y - y0)/h, matching
        // value, first and second derivative at both ends.
        const double m0 = h * n0.du, m1 = h * n1.du;
        const double a0 = h * h * n0.d2u, a1 = h * h * n1.d2u;
        const double A = n1.u - n0.u - m0 - a0 / 2;
        const double B = m1 - m0 - a0;
        const double C = a1 - a0;
        Segment seg;
        seg.y0 = n0.y;
        seg.h = h;
        seg.c[0] = n0.u;
        seg.c[1] = m0;
        seg.c[2] = a0 / 2;
        seg.c[3] = 10 * A - 4 * B + C / 2;
        seg.c[4] = -15 * A + 7 * B - C;
        seg.c[5] = 6 * A - 3 * B + C / 2;
        segments_.push_back(seg);
    }
}

const TabulatedFunction::Segment& TabulatedFunction::segment_at(double y) const {
    if (segments_.empty()) throw std::out_of_range("tabulation is empty");
    const double lo = nodes_.front().y, hi = nodes_.back().y;
    const double slack = 1e-9 * (hi - lo);
    if (y < lo - slack || y > hi + slack)
        throw std::out_of_range("tabulation queried outside [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "] at y=" + std::to_string(y));
    std::size_t idx = static_cast<std::size_t>(
        std::upper_bound(nodes_.begin(), nodes_.end(), y,
                         [](double v, const Node& n) { return v < n.y; }) -
        nodes_.begin());
    if (idx > 0) --idx;
    if (idx >= segments_.size()) idx = segments_.size() - 1;
    return segments_[idx];
}

double TabulatedFunction::value(double y) const {
    const Segment& g = segment_at(y);
    const double s = (y - g.y0) / g.h;
    double p = 0;
    for (int k = 5; k >= 0; --k) p = p * s + g.c[k];
    return p;
}

double TabulatedFunction::derivative(double y) const {
    const Segment& g = segment_at(y);
    const double s = (y - g.y0) / g.h;
    double p = 0;
    for (int k = 5; k >= 1; --k) p = p * s + k * g.c[k];
    return p / g.h;
}

double TabulatedFunction::second_derivative(double y) const {
    const Segment& g = segment_at(y);
    const double s = (y - g.y0) / g.h;
    double p = 0;
    for (int k = 5; k >= 2; --k) p = p * s + k * (k - 1) * g.c[k];
    return p / (g.h * g.h);
}

TabulatedFunction solve_linear_ode(const std::function<double(double)>& s,
                                   double y_min, double y_max,
                                   double u0, double du0, double tol) {
    if (!(y_min <= 0.0 && 0.0 <= y_max) || !(y_min < y_max))
        throw std::invalid_argument("ODE range must contain the initial point y=0");

    auto rhs = [&](double y, const std::vector<double>& v) {
        return std::vector<double>{v[1], s(y) * v[0]};
    };
    auto sweep = [&](double target, std::vector<TabulatedFunction::Node>& out) {
        const double span = std::fabs(target);
        if (span == 0.0) return;
        const int n = std::max(8, static_cast<int>(std::ceil(span / 0.01)));
        std::vector<double> v{u0, du0};
        for (int i = 1; i <= n; ++i) {
            const double y = target * i / n;
            adaptive_rk4(rhs, v, target * (i - 1) / n, y, tol,
                         [&](double, const std::vector<double>& w) { v = w; });
            out.push_back({y, v[0], v[1], s(y) * v[0]});
        }
    };

    std::vector<TabulatedFunction::Node> left, right;
    sweep(y_min, left);
    sweep(y_max, right);
    std::vector<TabulatedFunction::Node> nodes;
    nodes.reserve(left.size() + right.size() + 1);
    for (auto it = left.rbegin(); it != left.rend(); ++it) nodes.push_back(*it);
    nodes.push_back({0.0, u0, du0, s(0.0) * u0});
    for (const auto& n : right) nodes.push_back(n);
    return TabulatedFunction(std::move(nodes));
}

TabulatedFunction weber_solve(const WeberSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("Weber exponent must be >= 1");
    if (spec.sign != 1 && spec.sign != -1)
        throw std::invalid_argument("Weber sign must be +1 or -1");
    auto s = [n = spec.n, sign = spec.sign](double y) {
        double p = 1.0;
        for (int k = 0; k < n; ++k) p *= y;
        return sign * p;
    };
    const bool even = spec.parity == WeberSpec::Parity::Even;
    return solve_linear_ode(s, spec.y_min, spec.y_max, even ? 1.0 : 0.0, even ? 0.0 : 1.0);
}

} // namespace bohmlab::specfun
