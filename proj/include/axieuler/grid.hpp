#pragma once

#include "axieuler/core.hpp"

#include <cmath>
#include <string>

namespace axieuler {

/// Cell-centred (r, z) grid on the cylinder [0, r_max] x [z_min, z_max).
///
/// Radial samples sit at r_j = (j + 1/2) dr so that no sample touches the
/// axis. The axial direction is periodic with samples at z_k = z_min + k dz.
struct AxiGrid {
    double r_max = 1.0;
    double z_min = 0.0;
    double z_max = 1.0;
    int nr = 8;
    int nz = 8;
    double dr = 0.125;
    double dz = 0.125;
    static constexpr bool axis_offset = true;

    double r(int j) const { return (j + 0.5) * dr; }
    double z(int k) const { return z_min + k * dz; }
    double z_length() const { return z_max - z_min; }
    std::size_t size() const { return static_cast<std::size_t>(nr) * static_cast<std::size_t>(nz); }
    std::size_t index(int j, int k) const {
        return static_cast<std::size_t>(j) + static_cast<std::size_t>(nr) * static_cast<std::size_t>(k);
    }
    int wrap_k(int k) const {
        k %= nz;
        return k < 0 ? k + nz : k;
    }
    /// Map z into [z_min, z_max).
    double wrap_z(double zz) const {
        const double L = z_length();
        double s = std::fmod(zz - z_min, L);
        if (s < 0) s += L;
        return z_min + s;
    }
    /// Signed periodic displacement zz - z0 mapped into [-L/2, L/2).
    double periodic_delta(double zz, double z0) const {
        const double L = z_length();
        double d = std::fmod(zz - z0 + 0.5 * L, L);
        if (d < 0) d += L;
        return d - 0.5 * L;
    }
    double min_spacing() const { return dr < dz ? dr : dz; }

    friend bool operator==(const AxiGrid& a, const AxiGrid& b) {
        return a.nr == b.nr && a.nz == b.nz && a.r_max == b.r_max && a.z_min == b.z_min && a.z_max == b.z_max;
    }
};

inline AxiGrid make_grid(double r_max, double z_min, double z_max, int nr, int nz) {
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw ValidationError("make_grid: r_max must be positive, got " + std::to_string(r_max));
    if (!(z_max > z_min) || !std::isfinite(z_max - z_min))
        throw ValidationError("make_grid: need z_max > z_min");
    if (nr < 8 || nz < 8)
        throw ValidationError("make_grid: nr and nz must be >= 8 (got nr=" + std::to_string(nr) +
                              ", nz=" + std::to_string(nz) + ")");
    AxiGrid g;
    g.r_max = r_max;
    g.z_min = z_min;
    g.z_max = z_max;
    g.nr = nr;
    g.nz = nz;
    g.dr = r_max / nr;
    g.dz = (z_max - z_min) / nz;
    return g;
}

} // namespace axieuler
