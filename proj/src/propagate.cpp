#include "bohmlab/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bohmlab {

namespace {

using cplx = std::complex<double>;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey; sign = -1 forward, +1 inverse (unscaled).
void fft(std::vector<cplx>& a, int sign) {
    const int n = static_cast<int>(a.size());
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / len;
        const cplx wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0);
            for (int j = 0; j < len / 2; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

double norm_of(const std::vector<cplx>& psi, double cell) {
    double s = 0.0;
    for (const cplx& v : psi) s += std::norm(v);
    return std::sqrt(s * cell);
}

// Absorption rate (1/time) at full taper depth; the profile ramps with
// cos^2 from zero at the inner edge of the absorbing band.
constexpr double kAbsorbRate = 25.0;

} // namespace

void PropagationSetup::validate() const {
    grid.validate();
    consts.validate();
    if (!power_of_two(grid.nx))
        throw PropagateError("split-step needs nx to be a power of two");
    if (!(dt > 0)) throw PropagateError("dt must be positive");
    if (absorb_cells < 0 || absorb_cells >= grid.nx / 4)
        throw PropagateError("absorber width must be in [0, nx/4)");
}

PropagationResult split_step(const std::vector<cplx>& psi0, const Fn2& V,
                             const PropagationSetup& setup, double t0, double t1,
                             int n_snapshots) {
    setup.validate();
    if (!V) throw PropagateError("potential callable is empty");
    const int nx = setup.grid.nx;
    if (static_cast<int>(psi0.size()) != nx)
        throw PropagateError("psi0 size does not match the grid");
    if (n_snapshots < 1) throw PropagateError("need at least one snapshot");
    if (t0 == t1) throw PropagateError("empty time interval");

    const double L = setup.grid.x_max - setup.grid.x_min;
    const double hb = setup.consts.hbar, m = setup.consts.mass;

    // Kinetic phase per unit time at each lattice wavenumber.
    std::vector<double> krate(static_cast<std::size_t>(nx));
    for (int j = 0; j < nx; ++j) {
        const int jj = j < nx / 2 ? j : j - nx;
        const double k = 2.0 * std::numbers::pi * jj / L;
        krate[static_cast<std::size_t>(j)] = -hb * k * k / (2 * m);
    }
    // Per-step absorber mask (identity outside the taper bands).
    std::vector<double> mask;
    if (setup.absorb_cells > 0) {
        mask.assign(static_cast<std::size_t>(nx), 1.0);
        const int w = setup.absorb_cells;
        for (int d = 0; d < w; ++d) {
            const double ramp = std::cos(0.5 * std::numbers::pi * (d + 0.5) / w);
            const double factor = std::exp(-kAbsorbRate * ramp * ramp * setup.dt);
            mask[static_cast<std::size_t>(d)] = factor;
            mask[static_cast<std::size_t>(nx - 1 - d)] = factor;
        }
    }

    PropagationResult res;
    std::vector<cplx> psi = psi0;
    res.snapshots.push_back({t0, psi});
    const double norm0 = norm_of(psi, setup.cell());

    long step_index = 0;
    double t = t0;
    for (int s = 1; s <= n_snapshots; ++s) {
        const double target = t0 + (t1 - t0) * s / n_snapshots;
        const double seg = target - t;
        const int steps = std::max(1, static_cast<int>(std::ceil(std::fabs(seg) / setup.dt)));
        const double h = seg / steps;
        for (int i = 0; i < steps; ++i, ++step_index) {
            const double tm = t + h / 2;
            double vmax = 0.0;
            for (int ix = 0; ix < nx; ++ix) {
                const double v = V(setup.x(ix), tm);
                vmax = std::max(vmax, std::fabs(v));
                const double ph = -v * h / (2 * hb);
                psi[static_cast<std::size_t>(ix)] *= cplx(std::cos(ph), std::sin(ph));
            }
            if (std::fabs(h) * vmax / hb > 0.1) res.dt_warning = true;
            fft(psi, -1);
            for (int j = 0; j < nx; ++j) {
                const double ph = krate[static_cast<std::size_t>(j)] * h;
                psi[static_cast<std::size_t>(j)] *= cplx(std::cos(ph), std::sin(ph)) / double(nx);
            }
            fft(psi, +1);
            for (int ix = 0; ix < nx; ++ix) {
                const double v = V(setup.x(ix), tm);
                const double ph = -v * h / (2 * hb);
                psi[static_cast<std::size_t>(ix)] *= cplx(std::cos(ph), std::sin(ph));
            }
            if (!mask.empty())
                for (int ix = 0; ix < nx; ++ix)
                    psi[static_cast<std::size_t>(ix)] *= mask[static_cast<std::size_t>(ix)];
            t += h;
            if (!std::isfinite(psi[0].real()) || !std::isfinite(psi[nx / 2].real()))
                throw PropagateError("state became non-finite at step " +
                                     std::to_string(step_index));
            if (mask.empty())
                res.norm_drift = std::max(res.norm_drift,
                                          std::fabs(norm_of(psi, setup.cell()) - norm0));
        }
        t = target;
        // Full NaN sweep once per segment (cheap) in case the spot check missed it.
        for (const cplx& v : psi)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw PropagateError("state became non-finite at step " +
                                     std::to_string(step_index));
        res.snapshots.push_back({t, psi});
    }
    return res;
}

std::vector<cplx> sample_bundle(const SolutionBundle& bundle,
                                const PropagationSetup& setup, double t) {
    setup.validate();
    std::vector<cplx> psi(static_cast<std::size_t>(setup.grid.nx));
    for (int i = 0; i < setup.grid.nx; ++i) {
        double re = 0, im = 0;
        bundle.psi(setup.x(i), t, re, im);
        psi[static_cast<std::size_t>(i)] = {re, im};
    }
    return psi;
}

ResidualReport compare_evolution(const SolutionBundle& closed,
                                 const PropagationResult& numeric,
                                 const PropagationSetup& setup, CompareMetric metric,
                                 double edge_exclusion) {
    setup.validate();
    if (!(edge_exclusion >= 0.0) || edge_exclusion >= 0.5)
        throw PropagateError("edge exclusion fraction must be in [0, 0.5)");
    const int nx = setup.grid.nx;
    const int lo = static_cast<int>(std::floor(edge_exclusion * nx));
    const int hi = nx - lo;

    ResidualReport rep;
    rep.grid = setup.grid;
    double linf = 0.0, sum2 = 0.0;
    long used = 0, total = 0;
    for (const Snapshot& snap : numeric.snapshots) {
        if (static_cast<int>(snap.psi.size()) != nx)
            throw PropagateError("snapshot size does not match the grid");
        double lsum = 0.0;
        long lused = 0;
        cplx overlap(0.0);
        if (metric == CompareMetric::PhaseGauged) {
            for (int i = lo; i < hi; ++i) {
                const double x = setup.x(i);
                if (closed.is_excluded(x, snap.t)) continue;
                double re = 0, im = 0;
                closed.psi(x, snap.t, re, im);
                overlap += std::conj(cplx(re, im)) * snap.psi[static_cast<std::size_t>(i)];
            }
        }
        const cplx gauge =
            std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
        for (int i = 0; i < nx; ++i) {
            ++total;
            if (i < lo || i >= hi) continue;
            const double x = setup.x(i);
            if (closed.is_excluded(x, snap.t)) continue;
            double re = 0, im = 0;
            closed.psi(x, snap.t, re, im);
            const cplx exact(re, im);
            const cplx num = snap.psi[static_cast<std::size_t>(i)];
            double d = 0.0;
            switch (metric) {
            case CompareMetric::Abs: d = std::abs(num - exact); break;
            case CompareMetric::Density: d = std::fabs(std::norm(num) - std::norm(exact)); break;
            case CompareMetric::PhaseGauged: d = std::abs(num / gauge - exact); break;
            }
            linf = std::max(linf, d);
            lsum += d * d;
            ++lused;
        }
        if (lused > 0) sum2 = std::max(sum2, lsum / lused);
        used += lused;
    }
    rep.linf = linf;
    rep.l2 = std::sqrt(sum2);
    rep.excluded_fraction = total == 0 ? 0.0 : 1.0 - double(used) / double(total);
    return rep;
}

} // namespace bohmlab
