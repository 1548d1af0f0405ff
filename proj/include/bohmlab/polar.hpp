#ifndef BOHMLAB_POLAR_HPP
#define BOHMLAB_POLAR_HPP

#include "bohmlab/expr.hpp"
#include "bohmlab/numerics.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace bohmlab {

struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;
    void validate() const {
        if (!(hbar > 0) || !(mass > 0))
            throw NumericsError("hbar and mass must be strictly positive");
    }
};

/// Point evaluator in (x, t).
using Fn2 = std::function<double(double, double)>;

/// An exact solution in polar form psi = A exp(iS/hbar), carried as exact
/// point evaluators for the amplitude, phase, their derivatives, and the
/// declared external and Bohm potentials. Symbolic forms are attached when
/// the family has them (used by the symbolic residual path and exports).
struct SolutionBundle {
    std::string family_id;
    bool vanishing_bohm = false;
    PhysicalConstants consts;

    // Amplitude and derivatives (d/dx, d2/dx2, d/dt). Always present.
    Fn2 A, Ax, Axx, At;
    // Phase derivatives. Sx/Sxx always present; S/St may cost a quadrature.
    Fn2 S, Sx, Sxx, St;
    // Declared external potential and Bohm potential.
    Fn2 V, VB;

    // Optional symbolic forms (parameters already substituted).
    std::optional<Expr> f_expr, A_expr, S_expr, mu_expr, V_expr, VB_expr;

    // Excluded space-time regions (singular by construction).
    std::function<bool(double, double)> exclusion;
    Grid default_grid;

    bool is_excluded(double x, double t) const { return exclusion && exclusion(x, t); }
    void psi(double x, double t, double& re, double& im) const;
};

struct ResidualReport {
    double linf = 0.0;
    double l2 = 0.0;
    // Observed convergence order; NaN when only one resolution was run.
    double order = std::numeric_limits<double>::quiet_NaN();
    double excluded_fraction = 0.0;
    Grid grid;
};

/// A(x,t) = sqrt(f') per the polar construction.
Expr amplitude_from_f(const Expr& f);

/// S on the grid: S = mu(t) - m * integral_0^x (df/dt / df/dx) dxt.
/// The quadrature is anchored exactly at x = 0 even when 0 lies off-grid.
Field phase_from_f(const Expr& f, const Expr& mu, const Grid& grid,
                   const PhysicalConstants& consts);

/// V_B = -hbar^2 A'' / (2 m A); symbolic and grid (central FD) versions.
Expr bohm_potential(const Expr& A, const PhysicalConstants& consts);
Field bohm_potential(const Field& A, const PhysicalConstants& consts);

/// External potential defined by the master equation, given f and mu.
Field infer_potential(const Expr& f, const Expr& mu, const Grid& grid,
                      const PhysicalConstants& consts);

/// Force field -dV/dx obtained from the compact force equation
/// (symbolic differentiation of the local terms plus the local remainder).
Field infer_force(const Expr& f, const Grid& grid, const PhysicalConstants& consts);

/// Cubic generating function f = (a^2/3) x^3 + a b x^2 + b^2 x + c
/// for time-dependent coefficients a, b, c; its wavefunctions carry an
/// identically zero Bohm potential.
Expr cubic_f(const Expr& a, const Expr& b, const Expr& c);

/// max over the sample of |f'''/f' - f''^2/(2 f'^2)| (zero iff the Bohm
/// potential of sqrt(f') vanishes).
double vanishing_bohm_residual(const Expr& f, const Grid& sample);

/// Generic bundle from a generating function: A = sqrt(f'), Sx = -m ft/fx,
/// S via adaptive quadrature from 0, no declared potential shortcut
/// (V is inferred). mu must be a function of t only.
SolutionBundle bundle_from_f(const Expr& f, const Expr& mu,
                             const PhysicalConstants& consts,
                             const Grid& default_grid);

/// Residual of the continuity equation (1/m)(A^2 S')' + d/dt(A^2).
ResidualReport continuity_residual(const SolutionBundle& bundle, const Grid& grid);

/// Residual of the quantum Hamilton-Jacobi equation
/// S'^2/2m - hbar^2 A''/(2mA) + V + dS/dt.
ResidualReport qhje_residual(const SolutionBundle& bundle, const Grid& grid);

/// Residual of the Schrodinger equation -hbar^2/2m psi'' + V psi - i hbar
/// dpsi/dt with central differences of psi at step `fd_step` (decoupled
/// from the reporting grid); the order is measured by halving fd_step.
ResidualReport schrodinger_residual(const SolutionBundle& bundle, const Grid& grid,
                                    double fd_step = 4e-4, bool measure_order = true);

/// |V_B declared - V_B from A| on the grid.
ResidualReport bohm_consistency_residual(const SolutionBundle& bundle, const Grid& grid);

/// Van Vleck-Morette amplitude check: M = d2 S2 / dx_f dx_i must be
/// proportional to A^2 (constant ratio across the sample).
struct VvmReport {
    bool matches = false;
    double ratio = 0.0;          // mean A^2 / |M| over the sample
    double rel_variation = 0.0;  // max relative deviation from the mean
};

VvmReport vvm_check(const Expr& S2, const Fn2& A, const PhysicalConstants& consts,
                    const Grid& sample, double x_i,
                    const std::function<bool(double, double)>& exclusion = {});

} // namespace bohmlab

#endif
