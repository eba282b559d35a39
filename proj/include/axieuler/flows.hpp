#pragma once

#include "axieuler/euler.hpp"

#include <string>

namespace axieuler {

/// Parameters shared by the analytic test flows; each family reads the
/// subset it needs.
struct FlowParams {
    double omega = 1.0;      ///< rigid_rotation angular velocity
    double r0 = 0.5;         ///< ring centre
    double z0 = 0.5;
    double delta = 0.1;      ///< ring width
    double amplitude = 1.0;  ///< swirl (Gamma) amplitude or chi amplitude for poloidal_ring
    double chi_amplitude = 0.0;  ///< poloidal vorticity carried by gaussian_swirl_ring
    double perturbation = 0.0;   ///< relative axial modulation of the ring
    int perturbation_mode = 1;
};

enum class FlowName { zero, rigid_rotation, gaussian_swirl_ring, poloidal_ring };

inline FlowName parse_flow_name(const std::string& name) {
    if (name == "zero") return FlowName::zero;
    if (name == "rigid_rotation") return FlowName::rigid_rotation;
    if (name == "gaussian_swirl_ring") return FlowName::gaussian_swirl_ring;
    if (name == "poloidal_ring") return FlowName::poloidal_ring;
    throw ValidationError("analytic_flow: unknown flow name '" + name + "'");
}

inline std::string to_string(FlowName n) {
    switch (n) {
    case FlowName::zero: return "zero";
    case FlowName::rigid_rotation: return "rigid_rotation";
    case FlowName::gaussian_swirl_ring: return "gaussian_swirl_ring";
    case FlowName::poloidal_ring: return "poloidal_ring";
    }
    return "?";
}

/// Compact C^3 bump (1 - s)^4 on s = rho^2 / delta^2 < 1.
inline double compact_bump(double rho2_over_delta2) {
    if (rho2_over_delta2 >= 1.0) return 0.0;
    const double w = 1.0 - rho2_over_delta2;
    return w * w * w * w;
}

/// Consistent FlowState for one of the analytic initial conditions.
inline FlowState analytic_flow(EulerSolver& solver, FlowName name, const FlowParams& p = {}) {
    const AxiGrid& g = solver.grid();
    AxiField gamma(g, Parity::even), chi(g, Parity::even);
    switch (name) {
    case FlowName::zero: break;
    case FlowName::rigid_rotation:
        gamma = AxiField::sample(g, Parity::even, [&](double r, double) { return p.omega * r * r; });
        break;
    case FlowName::gaussian_swirl_ring: {
        if (!(p.delta > 0.0)) throw ValidationError("gaussian_swirl_ring: delta must be positive");
        auto profile = [&](double r, double z) {
            const double dz = g.periodic_delta(z, p.z0);
            const double mod = 1.0 + p.perturbation * std::sin(2.0 * pi * p.perturbation_mode * (z - g.z_min) / g.z_length());
            return mod * std::exp(-((r - p.r0) * (r - p.r0) + dz * dz) / (p.delta * p.delta));
        };
        gamma = AxiField::sample(g, Parity::even, [&](double r, double z) { return p.amplitude * r * r * profile(r, z); });
        chi = AxiField::sample(g, Parity::even, [&](double r, double z) { return p.chi_amplitude * profile(r, z); });
        break;
    }
    case FlowName::poloidal_ring: {
        if (!(p.delta > 0.0) || p.r0 - p.delta <= 0.0 || p.r0 + p.delta >= g.r_max)
            throw ValidationError("poloidal_ring: support [r0 - delta, r0 + delta] must lie inside (0, r_max)");
        chi = AxiField::sample(g, Parity::even, [&](double r, double z) {
            const double dz = g.periodic_delta(z, p.z0);
            return p.amplitude * compact_bump(((r - p.r0) * (r - p.r0) + dz * dz) / (p.delta * p.delta));
        });
        break;
    }
    }
    return solver.make_state(std::move(gamma), std::move(chi));
}

inline FlowState analytic_flow(EulerSolver& solver, const std::string& name, const FlowParams& p = {}) {
    return analytic_flow(solver, parse_flow_name(name), p);
}

} // namespace axieuler
