#ifndef BOHMLAB_PROPAGATE_HPP
#define BOHMLAB_PROPAGATE_HPP

#include "bohmlab/polar.hpp"

#include <complex>
#include <vector>

namespace bohmlab {

class PropagateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Periodic split-step configuration. The spatial box is [x_min, x_max)
/// with nx equispaced cells (x_max is the wrap-around image of x_min, so
/// cell() differs from Grid::dx()); nx must be a power of two.
struct PropagationSetup {
    Grid grid;
    double dt = 1e-3;
    int absorb_cells = 0;  // cosine-taper absorber width per edge, in cells
    PhysicalConstants consts;

    double cell() const { return (grid.x_max - grid.x_min) / grid.nx; }
    double x(int i) const { return grid.x_min + i * cell(); }
    void validate() const;
};

struct Snapshot {
    double t;
    std::vector<std::complex<double>> psi;
};

struct PropagationResult {
    std::vector<Snapshot> snapshots;  // n_snapshots + 1 entries, initial state first
    double norm_drift = 0.0;  // max |norm(t) - norm(0)|; only tracked without absorber
    bool dt_warning = false;  // some step had dt * max|V| / hbar > 0.1
};

/// Strang splitting exp(-iV dt/2h) F^-1 exp(-ih k^2 dt/2m) F exp(-iV dt/2h),
/// V sampled at step midpoints. Snapshots at n_snapshots+1 evenly spaced
/// times from t0 to t1 (t1 < t0 propagates backwards). Throws PropagateError
/// if the state stops being finite.
PropagationResult split_step(const std::vector<std::complex<double>>& psi0, const Fn2& V,
                             const PropagationSetup& setup, double t0, double t1,
                             int n_snapshots = 1);

/// Exact bundle wavefunction sampled on the periodic cells at time t.
std::vector<std::complex<double>> sample_bundle(const SolutionBundle& bundle,
                                                const PropagationSetup& setup, double t);

enum class CompareMetric {
    Abs,          // |psi_num - psi_exact|
    Density,      // ||psi_num|^2 - |psi_exact|^2|
    PhaseGauged,  // |psi| distance after removing one global phase per snapshot
};

/// Distance between the numeric snapshots and the closed-form bundle.
/// edge_exclusion is the fraction of cells dropped at each boundary (e.g.
/// 0.25 for non-normalizable families); bundle exclusions are also skipped.
/// linf/l2 are the worst per-snapshot values; order is NaN.
ResidualReport compare_evolution(const SolutionBundle& closed,
                                 const PropagationResult& numeric,
                                 const PropagationSetup& setup, CompareMetric metric,
                                 double edge_exclusion = 0.0);

} // namespace bohmlab

#endif
