#ifndef BOHMLAB_SPECFUN_HPP
#define BOHMLAB_SPECFUN_HPP

#include <functional>
#include <stdexcept>
#include <vector>

namespace bohmlab::specfun {

/// Airy function of the first kind and its derivative.
/// Maclaurin series (compensated double-double arithmetic) on |y| <= 6.5,
/// asymptotic expansions beyond; overflow guard: y > 200 underflows to 0.
double airy_ai(double y);
double airy_ai_prime(double y);

/// Solution of u'' = sign * y^n * u, the generalized Weber equation.
struct WeberSpec {
    int n = 2;                    // exponent, >= 1
    int sign = +1;                // +1 or -1
    enum class Parity { Even, Odd } parity = Parity::Even;
    double y_min = -5.0, y_max = 5.0;
};

/// Dense-output tabulation of a smooth function: value, first and second
/// derivative at adaptive nodes, quintic Hermite interpolation between.
class TabulatedFunction {
public:
    struct Node { double y, u, du, d2u; };

    TabulatedFunction() = default;
    explicit TabulatedFunction(std::vector<Node> nodes);

    double value(double y) const;
    double derivative(double y) const;
    double second_derivative(double y) const;
    double y_min() const { return nodes_.front().y; }
    double y_max() const { return nodes_.back().y; }
    const std::vector<Node>& nodes() const { return nodes_; }

private:
    struct Segment { double y0, h, c[6]; };
    const Segment& segment_at(double y) const;
    std::vector<Node> nodes_;
    std::vector<Segment> segments_;
};

/// Integrate u'' = s(y) u outward from y = 0 over [y_min, y_max] with
/// initial data (u0, du0) at 0. Throws on step-size underflow.
TabulatedFunction solve_linear_ode(const std::function<double(double)>& s,
                                   double y_min, double y_max,
                                   double u0, double du0,
                                   double tol = 1e-12);

/// Weber-type solve with parity initial conditions (even: u(0)=1, u'(0)=0;
/// odd: u(0)=0, u'(0)=1).
TabulatedFunction weber_solve(const WeberSpec& spec);

} // namespace bohmlab::specfun

#endif
