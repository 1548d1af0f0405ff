// Grids, finite differences, quadrature, ODE integration, trajectories.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bohmlab/numerics.hpp"

#include <cmath>

using namespace bohmlab;

namespace {
Grid small_grid() {
    Grid g;
    g.x_min = -2.0;
    g.x_max = 2.0;
    g.nx = 201;
    g.t_min = 0.0;
    g.t_max = 1.0;
    g.nt = 101;
    return g;
}
} // namespace

TEST_CASE("grid validation") {
    Grid g = small_grid();
    CHECK_NOTHROW(g.validate());
    g.nx = 4;
    CHECK_THROWS_AS(g.validate(), NumericsError);
    g = small_grid();
    g.x_max = g.x_min;
    CHECK_THROWS_AS(g.validate(), NumericsError);
}

TEST_CASE("finite differences converge at second order") {
    auto fill = [](const Grid& g) {
        Field f(g);
        for (int it = 0; it < g.nt; ++it)
            for (int ix = 0; ix < g.nx; ++ix)
                f.at(it, ix) = std::sin(2 * g.x(ix)) * std::exp(-g.t(it));
        return f;
    };
    Grid g = small_grid();
    Grid fine = g;
    fine.nx = 2 * (g.nx - 1) + 1;

    double err[2][3];
    for (int pass = 0; pass < 2; ++pass) {
        const Grid& gr = pass == 0 ? g : fine;
        Field f = fill(gr);
        for (int order = 1; order <= 3; ++order) {
            Field d = fd_derivative(f, Axis::X, order);
            double e = 0;
            for (int it = 0; it < gr.nt; ++it) {
                for (int ix = 0; ix < gr.nx; ++ix) {
                    if (d.is_excluded(it, ix)) continue;
                    const double x = gr.x(ix), t = gr.t(it);
                    const double exact =
                        (order == 1 ? 2 * std::cos(2 * x)
                         : order == 2 ? -4 * std::sin(2 * x)
                                      : -8 * std::cos(2 * x)) * std::exp(-t);
                    e = std::max(e, std::fabs(d.at(it, ix) - exact));
                }
            }
            err[pass][order - 1] = e;
        }
    }
    for (int k = 0; k < 3; ++k) {
        const double rate = std::log2(err[0][k] / err[1][k]);
        CHECK(rate == doctest::Approx(2.0).epsilon(0.15));
    }
}

TEST_CASE("time-axis differences and exclusion masks") {
    Grid g = small_grid();
    Field f(g);
    for (int it = 0; it < g.nt; ++it)
        for (int ix = 0; ix < g.nx; ++ix) f.at(it, ix) = g.t(it) * g.t(it);
    Field d = fd_derivative(f, Axis::T, 1);
    CHECK(d.at(g.nt / 2, 3) == doctest::Approx(2 * g.t(g.nt / 2)).epsilon(1e-10));
    CHECK(d.is_excluded(0, 3));
    CHECK(d.is_excluded(g.nt - 1, 3));
    CHECK(!d.is_excluded(1, 3));
    CHECK(d.excluded_fraction() > 0.0);
    CHECK(d.excluded_fraction() < 0.03);
}

TEST_CASE("cumulative integral is fourth-order accurate") {
    auto run = [](int n) {
        const double dx = 2.0 / (n - 1);
        std::vector<double> s(n);
        int anchor = (n - 1) / 2;
        for (int i = 0; i < n; ++i) {
            const double x = -1.0 + i * dx;
            s[i] = std::exp(x) * std::cos(3 * x);
        }
        auto F = cumulative_integral(s, dx, anchor);
        double err = 0;
        auto exact = [](double x) {
            return std::exp(x) * (std::cos(3 * x) + 3 * std::sin(3 * x)) / 10.0;
        };
        const double x0 = -1.0 + anchor * dx;
        for (int i = 0; i < n; ++i) {
            const double x = -1.0 + i * dx;
            err = std::max(err, std::fabs(F[i] - (exact(x) - exact(x0))));
        }
        return err;
    };
    const double e1 = run(129), e2 = run(257);
    CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("cumulative integral patches an isolated singular sample") {
    const int n = 101;
    const double dx = 1.0 / (n - 1);
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
        const double x = i * dx;
        s[i] = x * x;
    }
    s[40] = std::numeric_limits<double>::quiet_NaN();
    auto F = cumulative_integral(s, dx, 0);
    CHECK(F[n - 1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    s[41] = std::numeric_limits<double>::infinity();
    s[42] = std::numeric_limits<double>::quiet_NaN();
    s[43] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cumulative_integral(s, dx, 0), NumericsError);
}

TEST_CASE("adaptive RK4 integrates a stiff-ish oscillator accurately") {
    // y'' = -25 y, solved as a system; exact solution cos(5t).
    auto f = [](double, const std::vector<double>& y) {
        return std::vector<double>{y[1], -25.0 * y[0]};
    };
    std::vector<double> final;
    adaptive_rk4(f, {1.0, 0.0}, 0.0, 3.0, 1e-11,
                 [&](double, const std::vector<double>& y) { final = y; });
    CHECK(final[0] == doctest::Approx(std::cos(15.0)).epsilon(1e-8));
    CHECK(final[1] == doctest::Approx(-5 * std::sin(15.0)).epsilon(1e-8));
}

TEST_CASE("adaptive RK4 integrates backwards") {
    auto f = [](double t, const std::vector<double>& y) {
        return std::vector<double>{t * y[0]};
    };
    std::vector<double> final;
    adaptive_rk4(f, {std::exp(0.5)}, 1.0, 0.0, 1e-12,
                 [&](double, const std::vector<double>& y) { final = y; });
    CHECK(final[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("adaptive RK4 reports step underflow") {
    // Blow-up at t = 1 forces the step size to collapse.
    auto f = [](double, const std::vector<double>& y) {
        return std::vector<double>{y[0] * y[0]};
    };
    CHECK_THROWS_AS(
        adaptive_rk4(f, {1.0}, 0.0, 2.0, 1e-10, [](double, const std::vector<double>&) {}),
        NumericsError);
}

TEST_CASE("bohmian trajectory for a linear phase gradient") {
    // Sx = m x / t gives x(t) = x0 t / t0 (free spreading flow).
    auto sx = [](double x, double t) { return x / t; };
    Trajectory tr = bohmian_trajectory(sx, 1.0, 1.0, 3.0, 1.0, 65, 1e-11);
    REQUIRE(tr.times.size() == 65);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        CHECK(tr.positions[i] == doctest::Approx(tr.times[i]).epsilon(1e-9));
        CHECK(tr.velocities[i] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("acceleration fit recovers a quadratic path") {
    Trajectory tr;
    for (int i = 0; i < 64; ++i) {
        const double t = 0.5 + 0.03 * i;
        tr.times.push_back(t);
        tr.positions.push_back(2.0 - 0.7 * t + 0.45 * t * t);
        tr.velocities.push_back(-0.7 + 0.9 * t);
    }
    double resid = -1;
    CHECK(fit_acceleration(tr, &resid) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(resid < 1e-12);
    tr.times.resize(4);
    tr.positions.resize(4);
    CHECK_THROWS_AS(fit_acceleration(tr), NumericsError);
}
