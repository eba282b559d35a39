#pragma once

#include "axieuler/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace axieuler {

/// Behaviour of a scalar under the reflection r -> -r.
///
/// Radial and azimuthal velocity components are odd, axial components and
/// transported scalars even. `none` is used for data without a declared
/// symmetry (e.g. a phase function); ghosts are then extrapolated.
enum class Parity { even, odd, none };

/// Samples of a scalar on an AxiGrid, stored r-fastest.
class AxiField {
public:
    AxiField() = default;
    explicit AxiField(const AxiGrid& grid, Parity parity = Parity::even, double fill = 0.0)
        : grid_(grid), parity_(parity), values_(grid.size(), fill) {}

    template <class F>
    static AxiField sample(const AxiGrid& grid, Parity parity, F&& f) {
        AxiField out(grid, parity);
        for (int k = 0; k < grid.nz; ++k)
            for (int j = 0; j < grid.nr; ++j) out(j, k) = f(grid.r(j), grid.z(k));
        return out;
    }

    const AxiGrid& grid() const { return grid_; }
    Parity parity() const { return parity_; }
    void set_parity(Parity p) { parity_ = p; }

    double& operator()(int j, int k) { return values_[grid_.index(j, k)]; }
    double operator()(int j, int k) const { return values_[grid_.index(j, k)]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    /// Value at radial index j (may lie outside [0, nr)) and periodic k.
    ///
    /// Below the axis the parity reflection r_{-1-j} = -r_j applies; beyond
    /// the outer wall the last three samples are extrapolated quadratically,
    /// which makes centred differences there equal to the one-sided
    /// second-order formula.
    double ghost(int j, int k) const {
        k = grid_.wrap_k(k);
        const int n = grid_.nr;
        if (j >= 0 && j < n) return (*this)(j, k);
        if (j < 0) {
            if (parity_ == Parity::none) return extrapolate(0, 1, 2, j, k);
            const double v = (*this)(-j - 1, k);
            return parity_ == Parity::odd ? -v : v;
        }
        return extrapolate(n - 3, n - 2, n - 1, j, k);
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    AxiField& operator+=(const AxiField& o) {
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    AxiField& operator-=(const AxiField& o) {
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    AxiField& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }
    /// this += c * o
    AxiField& axpy(double c, const AxiField& o) {
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * o.values_[i];
        return *this;
    }
    friend AxiField operator+(AxiField a, const AxiField& b) { return a += b; }
    friend AxiField operator-(AxiField a, const AxiField& b) { return a -= b; }
    friend AxiField operator*(double c, AxiField a) { return a *= c; }

private:
    double extrapolate(int j0, int j1, int j2, int j, int k) const {
        const double x = j;
        const double f0 = (*this)(j0, k), f1 = (*this)(j1, k), f2 = (*this)(j2, k);
        const double l0 = (x - j1) * (x - j2) / double((j0 - j1) * (j0 - j2));
        const double l1 = (x - j0) * (x - j2) / double((j1 - j0) * (j1 - j2));
        const double l2 = (x - j0) * (x - j1) / double((j2 - j0) * (j2 - j1));
        return l0 * f0 + l1 * f1 + l2 * f2;
    }

    AxiGrid grid_{};
    Parity parity_ = Parity::even;
    std::vector<double> values_;
};

/// Axisymmetric vector field (u_r, u_theta, u_z).
struct AxiVectorField {
    AxiField ur;
    AxiField utheta;
    AxiField uz;

    AxiVectorField() = default;
    explicit AxiVectorField(const AxiGrid& g)
        : ur(g, Parity::odd), utheta(g, Parity::odd), uz(g, Parity::even) {}

    const AxiGrid& grid() const { return ur.grid(); }

    AxiField& operator[](int c) { return c == 0 ? ur : (c == 1 ? utheta : uz); }
    const AxiField& operator[](int c) const { return c == 0 ? ur : (c == 1 ? utheta : uz); }

    AxiVectorField& axpy(double c, const AxiVectorField& o) {
        ur.axpy(c, o.ur);
        utheta.axpy(c, o.utheta);
        uz.axpy(c, o.uz);
        return *this;
    }
    AxiVectorField& operator*=(double c) {
        ur *= c;
        utheta *= c;
        uz *= c;
        return *this;
    }
    double max_abs() const { return std::max({ur.max_abs(), utheta.max_abs(), uz.max_abs()}); }
};

namespace detail {

inline void check_radius(const AxiGrid& g, double r) {
    if (!(r >= 0.0 && r <= g.r_max))
        throw DomainError("eval: r=" + std::to_string(r) + " outside [0, " + std::to_string(g.r_max) + "]");
}

/// Fractional cell coordinates: r = r_{j} + s dr with j possibly -1 or nr-1.
inline void locate(const AxiGrid& g, double r, double z, int& j, double& s, int& k, double& t) {
    const double x = r / g.dr - 0.5;
    j = static_cast<int>(std::floor(x));
    s = x - j;
    const double y = (g.wrap_z(z) - g.z_min) / g.dz;
    k = static_cast<int>(std::floor(y));
    t = y - k;
    if (k >= g.nz) { k -= g.nz; }
}

inline std::array<double, 4> cubic_weights(double s) {
    // Lagrange weights on nodes -1, 0, 1, 2 evaluated at s in [0, 1).
    return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

inline std::array<double, 4> cubic_weight_derivatives(double s) {
    return {-(3.0 * s * s - 6.0 * s + 2.0) / 6.0, (3.0 * s * s - 4.0 * s - 1.0) / 2.0,
            -(3.0 * s * s - 2.0 * s - 2.0) / 2.0, (3.0 * s * s - 1.0) / 6.0};
}

inline std::array<double, 4> cubic_weight_second_derivatives(double s) {
    return {-(s - 1.0), 3.0 * s - 2.0, -(3.0 * s - 1.0), s};
}

} // namespace detail

/// Bilinear interpolation at (r, z); z wraps periodically.
inline double eval(const AxiField& f, double r, double z) {
    const AxiGrid& g = f.grid();
    detail::check_radius(g, r);
    int j, k;
    double s, t;
    detail::locate(g, r, z, j, s, k, t);
    const double a = (1 - s) * f.ghost(j, k) + s * f.ghost(j + 1, k);
    const double b = (1 - s) * f.ghost(j, k + 1) + s * f.ghost(j + 1, k + 1);
    return (1 - t) * a + t * b;
}

/// Tensor-product cubic Lagrange interpolation (4x4 stencil).
inline double eval_cubic(const AxiField& f, double r, double z) {
    const AxiGrid& g = f.grid();
    detail::check_radius(g, r);
    int j, k;
    double s, t;
    detail::locate(g, r, z, j, s, k, t);
    const auto wr = detail::cubic_weights(s);
    const auto wz = detail::cubic_weights(t);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wr[a] * f.ghost(j - 1 + a, k - 1 + b);
        acc += wz[b] * row;
    }
    return acc;
}

struct CubicSample {
    double value;
    double d_r;
    double d_z;
};

/// eval_cubic together with the exact partial derivatives of the interpolant.
inline CubicSample eval_cubic_grad(const AxiField& f, double r, double z) {
    const AxiGrid& g = f.grid();
    detail::check_radius(g, r);
    int j, k;
    double s, t;
    detail::locate(g, r, z, j, s, k, t);
    const auto wr = detail::cubic_weights(s), dwr = detail::cubic_weight_derivatives(s);
    const auto wz = detail::cubic_weights(t), dwz = detail::cubic_weight_derivatives(t);
    CubicSample out{0.0, 0.0, 0.0};
    for (int b = 0; b < 4; ++b) {
        double row = 0.0, drow = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double v = f.ghost(j - 1 + a, k - 1 + b);
            row += wr[a] * v;
            drow += dwr[a] * v;
        }
        out.value += wz[b] * row;
        out.d_r += wz[b] * drow;
        out.d_z += dwz[b] * row;
    }
    out.d_r /= g.dr;
    out.d_z /= g.dz;
    return out;
}

struct CubicJet {
    double value;
    double d_r;
    double d_z;
    double d_rr;
    double d_rz;
    double d_zz;
};

/// Value, gradient and Hessian of the eval_cubic interpolant.
inline CubicJet eval_cubic_jet(const AxiField& f, double r, double z) {
    const AxiGrid& g = f.grid();
    detail::check_radius(g, r);
    int j, k;
    double s, t;
    detail::locate(g, r, z, j, s, k, t);
    const auto wr = detail::cubic_weights(s), dwr = detail::cubic_weight_derivatives(s),
               ddwr = detail::cubic_weight_second_derivatives(s);
    const auto wz = detail::cubic_weights(t), dwz = detail::cubic_weight_derivatives(t),
               ddwz = detail::cubic_weight_second_derivatives(t);
    CubicJet o{0, 0, 0, 0, 0, 0};
    for (int b = 0; b < 4; ++b) {
        double v = 0.0, dv = 0.0, ddv = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double x = f.ghost(j - 1 + a, k - 1 + b);
            v += wr[a] * x;
            dv += dwr[a] * x;
            ddv += ddwr[a] * x;
        }
        o.value += wz[b] * v;
        o.d_r += wz[b] * dv;
        o.d_z += dwz[b] * v;
        o.d_rr += wz[b] * ddv;
        o.d_rz += dwz[b] * dv;
        o.d_zz += ddwz[b] * v;
    }
    o.d_r /= g.dr;
    o.d_z /= g.dz;
    o.d_rr /= g.dr * g.dr;
    o.d_rz /= g.dr * g.dz;
    o.d_zz /= g.dz * g.dz;
    return o;
}

} // namespace axieuler
