#pragma once

#include "axieuler/field.hpp"

#include <utility>

namespace axieuler {

inline Parity derivative_parity_r(Parity p) {
    switch (p) {
    case Parity::even: return Parity::odd;
    case Parity::odd: return Parity::even;
    default: return Parity::none;
    }
}

inline Parity product_parity(Parity a, Parity b) {
    if (a == Parity::none || b == Parity::none) return Parity::none;
    return a == b ? Parity::even : Parity::odd;
}

/// Centred radial derivative; parity reflection at the axis, one-sided at r_max.
inline AxiField d_r(const AxiField& f) {
    const AxiGrid& g = f.grid();
    AxiField out(g, derivative_parity_r(f.parity()));
    const double inv = 0.5 / g.dr;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) out(j, k) = (f.ghost(j + 1, k) - f.ghost(j - 1, k)) * inv;
    return out;
}

/// Centred periodic axial derivative.
inline AxiField d_z(const AxiField& f) {
    const AxiGrid& g = f.grid();
    AxiField out(g, f.parity());
    const double inv = 0.5 / g.dz;
    for (int k = 0; k < g.nz; ++k) {
        const int kp = g.wrap_k(k + 1), km = g.wrap_k(k - 1);
        for (int j = 0; j < g.nr; ++j) out(j, k) = (f(j, kp) - f(j, km)) * inv;
    }
    return out;
}

inline std::pair<AxiField, AxiField> grad(const AxiField& f) { return {d_r(f), d_z(f)}; }

struct Vorticity {
    AxiField omega_r;
    AxiField omega_theta;
    AxiField omega_z;
};

/// Curl of an axisymmetric field: (-dz u_th, dz u_r - dr u_z, dr u_th + u_th/r).
inline Vorticity vorticity(const AxiVectorField& u) {
    const AxiGrid& g = u.grid();
    Vorticity w;
    w.omega_r = d_z(u.utheta);
    w.omega_r *= -1.0;
    w.omega_r.set_parity(Parity::odd);
    w.omega_theta = d_z(u.ur) - d_r(u.uz);
    w.omega_theta.set_parity(Parity::odd);
    w.omega_z = d_r(u.utheta);
    w.omega_z.set_parity(Parity::even);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) w.omega_z(j, k) += u.utheta(j, k) / g.r(j);
    return w;
}

/// Discrete 3-D divergence (1/r) d_r(r v_r) + d_z v_z.
///
/// The flux r v_r is even across the axis and vanishes on the wall face
/// (ghost r_{nr} v_{nr} = -r_{nr-1} v_{nr-1}); this is the operator whose
/// kernel the Leray projection targets.
inline AxiField divergence(const AxiVectorField& v) {
    const AxiGrid& g = v.grid();
    AxiField out(g, Parity::even);
    const double inv_r = 0.5 / g.dr, inv_z = 0.5 / g.dz;
    const int n = g.nr;
    for (int k = 0; k < g.nz; ++k) {
        const int kp = g.wrap_k(k + 1), km = g.wrap_k(k - 1);
        for (int j = 0; j < n; ++j) {
            const double fp = j + 1 < n ? g.r(j + 1) * v.ur(j + 1, k) : -g.r(j) * v.ur(j, k);
            const double fm = j > 0 ? g.r(j - 1) * v.ur(j - 1, k) : g.r(0) * v.ur(0, k);
            out(j, k) = (fp - fm) * inv_r / g.r(j) + (v.uz(j, kp) - v.uz(j, km)) * inv_z;
        }
    }
    return out;
}

/// Poloidal velocity (u_r, u_z) = (-(1/r) d_z psi, (1/r) d_r psi).
///
/// psi is reflected evenly at the axis and vanishes on the wall face, so the
/// result lies exactly in the kernel of `divergence`.
inline std::pair<AxiField, AxiField> poloidal_from_stream(const AxiField& psi) {
    const AxiGrid& g = psi.grid();
    AxiField ur(g, Parity::odd), uz(g, Parity::even);
    const int n = g.nr;
    const double inv_r = 0.5 / g.dr, inv_z = 0.5 / g.dz;
    for (int k = 0; k < g.nz; ++k) {
        const int kp = g.wrap_k(k + 1), km = g.wrap_k(k - 1);
        for (int j = 0; j < n; ++j) {
            const double rj = g.r(j);
            ur(j, k) = -(psi(j, kp) - psi(j, km)) * inv_z / rj;
            const double pp = j + 1 < n ? psi(j + 1, k) : -psi(j, k);
            const double pm = j > 0 ? psi(j - 1, k) : psi(0, k);
            uz(j, k) = (pp - pm) * inv_r / rj;
        }
    }
    return {std::move(ur), std::move(uz)};
}

} // namespace axieuler
