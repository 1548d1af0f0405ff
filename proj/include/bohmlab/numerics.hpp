#ifndef BOHMLAB_NUMERICS_HPP
#define BOHMLAB_NUMERICS_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bohmlab {

class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform space-time lattice.
struct Grid {
    double x_min = -8.0, x_max = 8.0;
    int nx = 512;
    double t_min = 0.1, t_max = 2.0;
    int nt = 256;

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dt() const { return nt > 1 ? (t_max - t_min) / (nt - 1) : 0.0; }
    double x(int i) const { return x_min + i * dx(); }
    double t(int j) const { return t_min + j * dt(); }
    void validate() const;
};

/// Scalar field sampled on a Grid, row-major in t (values[it*nx + ix]).
/// `excluded` marks singular or boundary-contaminated cells.
struct Field {
    Grid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> excluded;

    explicit Field(const Grid& g)
        : grid(g), values(static_cast<std::size_t>(g.nx) * g.nt, 0.0),
          excluded(static_cast<std::size_t>(g.nx) * g.nt, 0) {}

    double& at(int it, int ix) { return values[static_cast<std::size_t>(it) * grid.nx + ix]; }
    double at(int it, int ix) const { return values[static_cast<std::size_t>(it) * grid.nx + ix]; }
    bool is_excluded(int it, int ix) const {
        return excluded[static_cast<std::size_t>(it) * grid.nx + ix] != 0;
    }
    void exclude(int it, int ix) { excluded[static_cast<std::size_t>(it) * grid.nx + ix] = 1; }
    double excluded_fraction() const;
};

enum class Axis { X, T };

/// Central finite-difference derivative of order 1, 2 or 3, accuracy O(h^2).
/// Boundary cells that lack a full stencil are marked excluded in the result.
Field fd_derivative(const Field& f, Axis axis, int order);

/// Cumulative integral along one x-row from the anchor x=0 (nearest grid
/// point) using local quadratic (Simpson-type) panels, O(h^4).
/// Non-finite samples at isolated points are patched by extrapolation from
/// their neighbours; a run of bad points raises NumericsError.
std::vector<double> cumulative_integral(const std::vector<double>& samples, double dx,
                                        int anchor_index);

/// Definite integral by adaptive composite Simpson refinement.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12);

/// Adaptive classical RK4 with step-doubling error control.
/// Integrates dy/dt = f(t, y) from t0 to t1, calling `observe(t, y)` after
/// every accepted step (including the initial state).
void adaptive_rk4(const std::function<std::vector<double>(double, const std::vector<double>&)>& f,
                  std::vector<double> y0, double t0, double t1, double tol,
                  const std::function<void(double, const std::vector<double>&)>& observe);

/// Bohmian path x' = Sx(x, t) / m sampled at n_samples uniform times.
struct Trajectory {
    std::vector<double> times, positions, velocities;
};

Trajectory bohmian_trajectory(const std::function<double(double, double)>& grad_phase,
                              double x0, double t0, double t1, double mass,
                              int n_samples = 64, double tol = 1e-9);

/// Least-squares quadratic fit to positions(t); returns twice the quadratic
/// coefficient. `fit_residual`, when given, receives the fit RMS.
double fit_acceleration(const Trajectory& traj, double* fit_residual = nullptr);

} // namespace bohmlab

#endif
