#pragma once

#include "axieuler/norms.hpp"
#include "axieuler/operators.hpp"
#include "axieuler/poisson.hpp"

#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace axieuler {

/// Prognostic pair (Gamma, chi) = (r u_theta, omega_theta / r) plus the
/// velocity and stream function recovered from it.
struct FlowState {
    double t = 0.0;
    AxiField gamma;
    AxiField chi;
    AxiVectorField u;
    AxiField psi;

    const AxiGrid& grid() const { return gamma.grid(); }
};

enum class AdvectionScheme { centered2, upwind3 };

struct SolverConfig {
    double cfl = 0.5;
    AdvectionScheme advection = AdvectionScheme::centered2;
    double hyperviscosity = 0.0;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("SolverConfig: cfl must lie in (0, 1]");
        if (!(hyperviscosity >= 0.0)) throw ValidationError("SolverConfig: hyperviscosity must be >= 0");
    }
};

/// Velocity and stream function from (chi, Gamma).
///
/// Solves the stream-function problem for phi = psi / r^2 with source -chi,
/// then u_r = -(1/r) d_z psi, u_z = (1/r) d_r psi and u_theta = Gamma / r.
inline void recover_velocity(StreamSolver& solver, const AxiField& chi, const AxiField& gamma, AxiVectorField& u,
                             AxiField& psi) {
    const AxiGrid& g = chi.grid();
    if (!chi.all_finite()) throw ValidationError("recover_velocity: chi has non-finite samples");
    AxiField rhs = chi;
    rhs *= -1.0;
    AxiField phi = solver.solve(rhs);
    psi = AxiField(g, Parity::even);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) psi(j, k) = g.r(j) * g.r(j) * phi(j, k);
    auto [ur, uz] = poloidal_from_stream(psi);
    u.ur = std::move(ur);
    u.uz = std::move(uz);
    u.utheta = AxiField(g, Parity::odd);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) u.utheta(j, k) = gamma(j, k) / g.r(j);
}

inline std::pair<AxiVectorField, AxiField> recover_velocity(const AxiField& chi, const AxiField& gamma) {
    StreamSolver solver(chi.grid());
    AxiVectorField u(chi.grid());
    AxiField psi;
    recover_velocity(solver, chi, gamma, u, psi);
    return {std::move(u), std::move(psi)};
}

/// Largest |u_r| on the wall face, extrapolated quadratically from the three
/// outermost cell centres.
inline double wall_normal_velocity_max(const AxiVectorField& u) {
    const AxiGrid& g = u.grid();
    const int n = g.nr;
    double m = 0.0;
    for (int k = 0; k < g.nz; ++k)
        m = std::max(m, std::abs(1.875 * u.ur(n - 1, k) - 1.25 * u.ur(n - 2, k) + 0.375 * u.ur(n - 3, k)));
    return m;
}

/// Max pointwise speed |u| over the grid (all three components).
inline double max_speed(const AxiVectorField& u) {
    double m = 0.0;
    auto ur = u.ur.values();
    auto ut = u.utheta.values();
    auto uz = u.uz.values();
    for (std::size_t i = 0; i < ur.size(); ++i) m = std::max(m, std::sqrt(ur[i] * ur[i] + ut[i] * ut[i] + uz[i] * uz[i]));
    return m;
}

namespace detail {

/// Third-order upwind-biased derivative along r at (j, k) for velocity sign `a`.
inline double upwind3_r(const AxiField& f, int j, int k, double a, double h) {
    if (a >= 0.0)
        return (2.0 * f.ghost(j + 1, k) + 3.0 * f.ghost(j, k) - 6.0 * f.ghost(j - 1, k) + f.ghost(j - 2, k)) /
               (6.0 * h);
    return (-f.ghost(j + 2, k) + 6.0 * f.ghost(j + 1, k) - 3.0 * f.ghost(j, k) - 2.0 * f.ghost(j - 1, k)) / (6.0 * h);
}

inline double upwind3_z(const AxiField& f, int j, int k, double a, double h) {
    const AxiGrid& g = f.grid();
    auto F = [&](int kk) { return f(j, g.wrap_k(kk)); };
    if (a >= 0.0) return (2.0 * F(k + 1) + 3.0 * F(k) - 6.0 * F(k - 1) + F(k - 2)) / (6.0 * h);
    return (-F(k + 2) + 6.0 * F(k + 1) - 3.0 * F(k) - 2.0 * F(k - 1)) / (6.0 * h);
}

/// -(u_r d_r + u_z d_z) q with the selected scheme.
inline AxiField advect(const AxiField& q, const AxiField& ur, const AxiField& uz, AdvectionScheme scheme) {
    const AxiGrid& g = q.grid();
    AxiField out(g, q.parity());
    if (scheme == AdvectionScheme::centered2) {
        const AxiField qr = d_r(q), qz = d_z(q);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values()[i] = -(ur.values()[i] * qr.values()[i] + uz.values()[i] * qz.values()[i]);
        return out;
    }
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double a = ur(j, k), b = uz(j, k);
            out(j, k) = -(a * upwind3_r(q, j, k, a, g.dr) + b * upwind3_z(q, j, k, b, g.dz));
        }
    return out;
}

/// -nu (d_r^4 + d_z^4) q using five-point fourth differences.
inline void add_hyperviscosity(AxiField& out, const AxiField& q, double nu) {
    if (nu == 0.0) return;
    const AxiGrid& g = q.grid();
    const double ir = 1.0 / std::pow(g.dr, 4), iz = 1.0 / std::pow(g.dz, 4);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double d4r = q.ghost(j + 2, k) - 4.0 * q.ghost(j + 1, k) + 6.0 * q.ghost(j, k) -
                               4.0 * q.ghost(j - 1, k) + q.ghost(j - 2, k);
            const double d4z = q.ghost(j, k + 2) - 4.0 * q.ghost(j, k + 1) + 6.0 * q.ghost(j, k) -
                               4.0 * q.ghost(j, k - 1) + q.ghost(j, k - 2);
            out(j, k) -= nu * (d4r * ir + d4z * iz);
        }
}

} // namespace detail

struct FlowTendency {
    AxiField dgamma;
    AxiField dchi;
};

/// Time integrator for the reduced axisymmetric Euler system
///   d_t Gamma + u.grad Gamma = 0,
///   d_t chi   + u.grad chi   = d_z(Gamma^2) / r^4.
class EulerSolver {
public:
    explicit EulerSolver(const AxiGrid& g, SolverConfig cfg = {}) : grid_(g), cfg_(cfg), stream_(g) {
        cfg_.validate();
    }

    const AxiGrid& grid() const { return grid_; }
    const SolverConfig& config() const { return cfg_; }

    /// Builds a consistent state from the prognostic pair.
    FlowState make_state(AxiField gamma, AxiField chi, double t = 0.0) {
        FlowState s;
        s.t = t;
        s.gamma = std::move(gamma);
        s.gamma.set_parity(Parity::even);
        s.chi = std::move(chi);
        s.chi.set_parity(Parity::even);
        s.u = AxiVectorField(grid_);
        recover_velocity(stream_, s.chi, s.gamma, s.u, s.psi);
        return s;
    }

    FlowTendency rhs(const FlowState& s) const {
        FlowTendency out;
        out.dgamma = detail::advect(s.gamma, s.u.ur, s.u.uz, cfg_.advection);
        out.dchi = detail::advect(s.chi, s.u.ur, s.u.uz, cfg_.advection);
        AxiField g2(grid_, Parity::even);
        for (std::size_t i = 0; i < g2.size(); ++i) g2.values()[i] = s.gamma.values()[i] * s.gamma.values()[i];
        const AxiField dz_g2 = d_z(g2);
        for (int k = 0; k < grid_.nz; ++k)
            for (int j = 0; j < grid_.nr; ++j) {
                const double r2 = grid_.r(j) * grid_.r(j);
                out.dchi(j, k) += dz_g2(j, k) / (r2 * r2);
            }
        detail::add_hyperviscosity(out.dgamma, s.gamma, cfg_.hyperviscosity);
        detail::add_hyperviscosity(out.dchi, s.chi, cfg_.hyperviscosity);
        return out;
    }

    /// Largest admissible step cfl * min(dr, dz) / max|u| (infinity at rest).
    double max_stable_dt(const FlowState& s) const {
        const double umax = max_speed(s.u);
        return umax > 0.0 ? cfg_.cfl * grid_.min_spacing() / umax : infinity;
    }

    /// One classical RK4 step; velocity is re-recovered at every stage.
    FlowState step(const FlowState& s, double dt) {
        if (!(dt > 0.0)) throw ValidationError("step: dt must be positive");
        const double limit = max_stable_dt(s);
        if (dt > limit * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "step: CFL violation, dt=" << dt << " exceeds " << limit
                << " (max|u|=" << max_speed(s.u) << ")";
            throw RuntimeFailure(msg.str());
        }
        const FlowTendency k1 = rhs(s);
        const FlowState s2 = stage(s, k1, 0.5 * dt);
        const FlowTendency k2 = rhs(s2);
        const FlowState s3 = stage(s, k2, 0.5 * dt);
        const FlowTendency k3 = rhs(s3);
        const FlowState s4 = stage(s, k3, dt);
        const FlowTendency k4 = rhs(s4);
        AxiField gamma = s.gamma, chi = s.chi;
        gamma.axpy(dt / 6.0, k1.dgamma).axpy(dt / 3.0, k2.dgamma).axpy(dt / 3.0, k3.dgamma).axpy(dt / 6.0, k4.dgamma);
        chi.axpy(dt / 6.0, k1.dchi).axpy(dt / 3.0, k2.dchi).axpy(dt / 3.0, k3.dchi).axpy(dt / 6.0, k4.dchi);
        return make_state(std::move(gamma), std::move(chi), s.t + dt);
    }

    /// Advances to t_end with CFL-limited steps, landing exactly on t_end.
    /// `observer(state)` is called after every step.
    template <class Observer>
    FlowState advance(FlowState s, double t_end, double dt_max, Observer&& observer) {
        while (s.t < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
            double dt = std::min(dt_max, max_stable_dt(s));
            if (s.t + dt > t_end) dt = t_end - s.t;
            s = step(s, dt);
            observer(s);
        }
        return s;
    }
    FlowState advance(FlowState s, double t_end, double dt_max) {
        return advance(std::move(s), t_end, dt_max, [](const FlowState&) {});
    }

private:
    FlowState stage(const FlowState& s, const FlowTendency& k, double h) {
        AxiField gamma = s.gamma, chi = s.chi;
        gamma.axpy(h, k.dgamma);
        chi.axpy(h, k.dchi);
        return make_state(std::move(gamma), std::move(chi), s.t + h);
    }

    AxiGrid grid_;
    SolverConfig cfg_;
    StreamSolver stream_;
};

/// 1/2 of the integral of |u|^2 against 2 pi r dr dz.
inline double kinetic_energy(const FlowState& s) {
    const double n = weighted_norm(s.u, NormSpec{2.0, 0.0, Measure::three_d});
    return 0.5 * n * n;
}

} // namespace axieuler
