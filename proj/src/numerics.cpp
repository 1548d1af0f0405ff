#include "bohmlab/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace bohmlab {

void Grid::validate() const {
    if (nx < 8 || nt < 8) throw NumericsError("grid must have nx, nt >= 8");
    if (!(x_max > x_min) || !(t_max > t_min)) throw NumericsError("grid ranges must be increasing");
}

double Field::excluded_fraction() const {
    std::size_t n = 0;
    for (auto e : excluded) n += e;
    return static_cast<double>(n) / excluded.size();
}

Field fd_derivative(const Field& f, Axis axis, int order) {
    if (order < 1 || order > 3) throw NumericsError("fd_derivative supports orders 1..3");
    const Grid& g = f.grid;
    Field out(g);
    out.excluded = f.excluded;
    const double h = axis == Axis::X ? g.dx() : g.dt();
    const int n = axis == Axis::X ? g.nx : g.nt;
    const int margin = order == 3 ? 2 : 1;

    auto sample = [&](int it, int ix, int k) {
        return axis == Axis::X ? f.at(it, ix + k) : f.at(it + k, ix);
    };
    for (int it = 0; it < g.nt; ++it) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const int i = axis == Axis::X ? ix : it;
            if (i < margin || i >= n - margin) {
                out.exclude(it, ix);  // one-sided fallback below, flagged
                const int s = i < margin ? 1 : -1;
                if (order == 1) {
                    out.at(it, ix) = s * (sample(it, ix, s) - sample(it, ix, 0)) / h;
                } else if (order == 2 && i >= 1 && i <= n - 2) {
                    out.at(it, ix) = (sample(it, ix, 1) - 2 * sample(it, ix, 0) + sample(it, ix, -1)) / (h * h);
                }
                continue;
            }
            switch (order) {
            case 1:
                out.at(it, ix) = (sample(it, ix, 1) - sample(it, ix, -1)) / (2 * h);
                break;
            case 2:
                out.at(it, ix) = (sample(it, ix, 1) - 2 * sample(it, ix, 0) + sample(it, ix, -1)) / (h * h);
                break;
            case 3:
                out.at(it, ix) = (sample(it, ix, 2) - 2 * sample(it, ix, 1) +
                                  2 * sample(it, ix, -1) - sample(it, ix, -2)) / (2 * h * h * h);
                break;
            }
        }
    }
    return out;
}

namespace {

// Patch isolated non-finite samples by quadratic extrapolation from the
// three nearest originally finite neighbours on one side.
void patch_bad_samples(std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<char> ok(n);
    for (int i = 0; i < n; ++i) ok[i] = std::isfinite(v[i]) ? 1 : 0;
    for (int i = 0; i < n; ++i) {
        if (ok[i]) continue;
        auto finite3 = [&](int dir) -> bool {
            for (int k = 1; k <= 3; ++k) {
                const int j = i + dir * k;
                if (j < 0 || j >= n || !ok[j]) return false;
            }
            return true;
        };
        if (finite3(+1)) {
            v[i] = 3 * v[i + 1] - 3 * v[i + 2] + v[i + 3];
        } else if (finite3(-1)) {
            v[i] = 3 * v[i - 1] - 3 * v[i - 2] + v[i - 3];
        } else {
            throw NumericsError("integrand has a run of non-finite samples");
        }
    }
}

} // namespace

std::vector<double> cumulative_integral(const std::vector<double>& samples, double dx,
                                        int anchor_index) {
    const int n = static_cast<int>(samples.size());
    if (anchor_index < 0 || anchor_index >= n)
        throw NumericsError("quadrature anchor outside the grid");
    std::vector<double> f = samples;
    patch_bad_samples(f);

    // Per-interval panels. Interior intervals average the two parabolas
    // through (i-1..i+1) and (i..i+2), which cancels the one-sided O(h^4)
    // local error and leaves an O(h^4) cumulative error; end intervals fall
    // back to a single parabola.
    auto forward_panel = [&](int i) {
        // integral from node i to node i+1
        if (i >= 1 && i + 2 < n)
            return dx / 24.0 * (-f[i - 1] + 13 * f[i] + 13 * f[i + 1] - f[i + 2]);
        if (i >= 1) return dx / 12.0 * (-f[i - 1] + 8 * f[i] + 5 * f[i + 1]);
        return dx / 12.0 * (5 * f[i] + 8 * f[i + 1] - f[i + 2]);
    };
    auto panel = [&](int i, int j) {
        return j > i ? forward_panel(i) : -forward_panel(j);
    };

    std::vector<double> out(n, 0.0);
    for (int i = anchor_index; i + 1 < n; ++i) out[i + 1] = out[i] + panel(i, i + 1);
    for (int i = anchor_index; i - 1 >= 0; --i) out[i - 1] = out[i] + panel(i, i - 1);
    return out;
}

namespace {

// 7-point Gauss-Legendre on [a, b]; all nodes interior, so integrable
// endpoint singularities (0/0 limits and the like) are never sampled.
double gauss7(const std::function<double(double)>& f, double a, double b) {
    static const double xg[] = {0.0,
                                0.4058451513773972, -0.4058451513773972,
                                0.7415311855993945, -0.7415311855993945,
                                0.9491079123427585, -0.9491079123427585};
    static const double wg[] = {0.4179591836734694,
                                0.3818300505051189, 0.3818300505051189,
                                0.2797053914892766, 0.2797053914892766,
                                0.1294849661688697, 0.1294849661688697};
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < 7; ++i) s += wg[i] * f(c + hw * xg[i]);
    return s * hw;
}

double gauss_recurse(const std::function<double(double)>& f, double a, double b,
                     double whole, double tol, int depth) {
    if (depth <= 0) throw NumericsError("integrate: recursion limit reached");
    const double m = 0.5 * (a + b);
    const double left = gauss7(f, a, m), right = gauss7(f, m, b);
    if (std::fabs(left + right - whole) <= tol) return left + right;
    return gauss_recurse(f, a, m, left, tol / 2, depth - 1) +
           gauss_recurse(f, m, b, right, tol / 2, depth - 1);
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    // Seed with a modest composite pass so narrow features are not missed.
    const int seed = 8;
    double total = 0.0;
    const double h = (b - a) / seed;
    for (int i = 0; i < seed; ++i) {
        const double x0 = a + i * h, x1 = x0 + h;
        total += gauss_recurse(f, x0, x1, gauss7(f, x0, x1), tol / seed, 48);
    }
    return total;
}

void adaptive_rk4(const std::function<std::vector<double>(double, const std::vector<double>&)>& f,
                  std::vector<double> y, double t0, double t1, double tol,
                  const std::function<void(double, const std::vector<double>&)>& observe) {
    using Vec = std::vector<double>;
    const std::size_t dim = y.size();
    auto axpy = [&](Vec& out, const Vec& a, double c, const Vec& b) {
        for (std::size_t i = 0; i < dim; ++i) out[i] = a[i] + c * b[i];
    };
    auto rk4_step = [&](double t, const Vec& yin, double h, Vec& yout) {
        Vec k1 = f(t, yin), tmp(dim);
        axpy(tmp, yin, h / 2, k1);
        Vec k2 = f(t + h / 2, tmp);
        axpy(tmp, yin, h / 2, k2);
        Vec k3 = f(t + h / 2, tmp);
        axpy(tmp, yin, h, k3);
        Vec k4 = f(t + h, tmp);
        yout.resize(dim);
        for (std::size_t i = 0; i < dim; ++i)
            yout[i] = yin[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    };

    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);
    if (span == 0.0) { observe(t0, y); return; }
    double t = t0;
    double h = dir * std::min(span, std::max(span / 64.0, 1e-8));
    const double h_min = span * 1e-14;

    observe(t, y);
    Vec full(dim), half(dim), two_half(dim);
    int guard = 0;
    while (dir * (t1 - t) > 0) {
        if (++guard > 2000000) throw NumericsError("adaptive_rk4: too many steps");
        if (dir * (t + h - t1) > 0) h = t1 - t;
        rk4_step(t, y, h, full);
        rk4_step(t, y, h / 2, half);
        rk4_step(t + h / 2, half, h / 2, two_half);
        double err = 0, scale = 1;
        for (std::size_t i = 0; i < dim; ++i) {
            err = std::max(err, std::fabs(two_half[i] - full[i]));
            scale = std::max(scale, std::fabs(two_half[i]));
        }
        err /= 15.0;  // Richardson estimate for a 4th-order pair
        const double limit = tol * scale;
        if (err <= limit) {
            t += h;
            y = two_half;
            observe(t, y);
            if (err < limit / 64 && std::fabs(h) < span) h *= 2;
        } else {
            h *= std::max(0.25, 0.9 * std::pow(limit / err, 0.2));
            if (std::fabs(h) < h_min)
                throw NumericsError("adaptive_rk4: step-size underflow at t=" + std::to_string(t));
        }
    }
}

Trajectory bohmian_trajectory(const std::function<double(double, double)>& grad_phase,
                              double x0, double t0, double t1, double mass,
                              int n_samples, double tol) {
    if (n_samples < 2) throw NumericsError("bohmian_trajectory needs >= 2 samples");
    Trajectory traj;
    auto rhs = [&](double t, const std::vector<double>& y) {
        return std::vector<double>{grad_phase(y[0], t) / mass};
    };
    double x = x0;
    for (int i = 0; i < n_samples; ++i) {
        const double ti = t0 + (t1 - t0) * i / (n_samples - 1);
        if (i > 0) {
            const double prev = traj.times.back();
            adaptive_rk4(rhs, {x}, prev, ti, tol,
                         [&](double, const std::vector<double>& y) { x = y[0]; });
        }
        traj.times.push_back(ti);
        traj.positions.push_back(x);
        traj.velocities.push_back(grad_phase(x, ti) / mass);
    }
    return traj;
}

double fit_acceleration(const Trajectory& traj, double* fit_residual) {
    const std::size_t n = traj.times.size();
    if (n < 16) throw NumericsError("fit_acceleration needs >= 16 samples");
    // Normal equations for x ~ c0 + c1 t + c2 t^2, t shifted for conditioning.
    const double t0 = traj.times.front();
    double s[5] = {0, 0, 0, 0, 0}, b[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = traj.times[i] - t0, xv = traj.positions[i];
        double p = 1;
        for (int k = 0; k <= 4; ++k) { s[k] += p; p *= t; }
        p = 1;
        for (int k = 0; k <= 2; ++k) { b[k] += xv * p; p *= t; }
    }
    double M[3][4] = {{s[0], s[1], s[2], b[0]},
                      {s[1], s[2], s[3], b[1]},
                      {s[2], s[3], s[4], b[2]}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
        std::swap(M[col], M[piv]);
        if (M[col][col] == 0.0) return 0.0;  // degenerate trajectory
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double fac = M[r][col] / M[col][col];
            for (int c = col; c < 4; ++c) M[r][c] -= fac * M[col][c];
        }
    }
    const double c0 = M[0][3] / M[0][0], c1 = M[1][3] / M[1][1], c2 = M[2][3] / M[2][2];
    if (fit_residual) {
        double rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = traj.times[i] - t0;
            const double r = traj.positions[i] - (c0 + c1 * t + c2 * t * t);
            rss += r * r;
        }
        *fit_residual = std::sqrt(rss / n);
    }
    return 2.0 * c2;
}

} // namespace bohmlab
