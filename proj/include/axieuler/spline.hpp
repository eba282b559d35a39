#pragma once

#include "axieuler/field.hpp"
#include "axieuler/poisson.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace axieuler {

/// Tensor-product cubic B-spline through the cell-centred samples of a field.
///
/// Periodic in z. In r the samples are mirrored through the axis with the
/// field parity and continued past the wall by the quadratic ghost values,
/// with natural end conditions on the mirrored line. The interpolant is C2,
/// so velocities and their gradients built from it are continuous.
class CubicSpline2D {
public:
    CubicSpline2D() = default;

    explicit CubicSpline2D(const AxiField& f) : grid_(f.grid()), stride_(f.grid().nr + 2 * pad) {
        if (f.parity() == Parity::none) throw ValidationError("CubicSpline2D: field needs axis parity");
        const int nr = grid_.nr, nz = grid_.nz;
        const double sign = f.parity() == Parity::odd ? -1.0 : 1.0;

        // z: periodic B-spline coefficients via the FFT symbol (4 + 2 cos)/6.
        AxialFft fft(grid_);
        auto spec = fft.forward(f);
        for (int m = 0; m < fft.modes(); ++m) {
            const double sym = (4.0 + 2.0 * std::cos(2.0 * pi * m / nz)) / 6.0;
            for (int j = 0; j < nr; ++j) spec[j + std::size_t(nr) * m] /= sym;
        }
        const AxiField cz = fft.backward(spec, f.parity());

        // r: mirrored line of nodes i in [-nr-2, nr+1].
        const int ext = 2;
        const int m = 2 * (nr + ext);
        std::vector<double> data(m), coef(m), cp(m);
        coef_.assign(std::size_t(stride_) * nz, 0.0);
        for (int k = 0; k < nz; ++k) {
            for (int q = 0; q < m; ++q) {
                const int i = q - (nr + ext);
                data[q] = i >= 0 ? cz.ghost(i, k) : sign * cz.ghost(-1 - i, k);
            }
            solve_natural(data, coef, cp);
            for (int i = -pad; i < nr + pad; ++i) coef_[std::size_t(i + pad) + std::size_t(stride_) * k] = coef[i + nr + ext];
        }
    }

    const AxiGrid& grid() const { return grid_; }

    CubicJet jet(double r, double z) const {
        detail::check_radius(grid_, r);
        int j, k;
        double s, t;
        detail::locate(grid_, r, z, j, s, k, t);
        const auto wr = weights(s), dwr = derivatives(s), ddwr = second_derivatives(s);
        const auto wz = weights(t), dwz = derivatives(t), ddwz = second_derivatives(t);
        CubicJet o{0, 0, 0, 0, 0, 0};
        for (int b = 0; b < 4; ++b) {
            const std::size_t row = std::size_t(stride_) * grid_.wrap_k(k - 1 + b);
            double v = 0, vr = 0, vrr = 0;
            for (int a = 0; a < 4; ++a) {
                const double c = coef_[row + std::size_t(j - 1 + a + pad)];
                v += wr[a] * c;
                vr += dwr[a] * c;
                vrr += ddwr[a] * c;
            }
            o.value += wz[b] * v;
            o.d_r += wz[b] * vr;
            o.d_z += dwz[b] * v;
            o.d_rr += wz[b] * vrr;
            o.d_rz += dwz[b] * vr;
            o.d_zz += ddwz[b] * v;
        }
        const double ir = 1.0 / grid_.dr, iz = 1.0 / grid_.dz;
        o.d_r *= ir;
        o.d_z *= iz;
        o.d_rr *= ir * ir;
        o.d_rz *= ir * iz;
        o.d_zz *= iz * iz;
        return o;
    }

    double operator()(double r, double z) const { return jet(r, z).value; }

private:
    static constexpr int pad = 2;

    static std::array<double, 4> weights(double s) {
        const double u = 1 - s;
        return {u * u * u / 6, (3 * s * s * s - 6 * s * s + 4) / 6, (-3 * s * s * s + 3 * s * s + 3 * s + 1) / 6,
                s * s * s / 6};
    }
    static std::array<double, 4> derivatives(double s) {
        const double u = 1 - s;
        return {-u * u / 2, (3 * s * s - 4 * s) / 2, (-3 * s * s + 2 * s + 1) / 2, s * s / 2};
    }
    static std::array<double, 4> second_derivatives(double s) { return {1 - s, 3 * s - 2, 1 - 3 * s, s}; }

    // Coefficients c_q with (c_{q-1} + 4 c_q + c_{q+1}) / 6 = f_q and zero
    // second derivative at both ends, which pins c at the end nodes.
    static void solve_natural(const std::vector<double>& f, std::vector<double>& c, std::vector<double>& cp) {
        const int m = static_cast<int>(f.size());
        c[0] = f[0];
        c[m - 1] = f[m - 1];
        // interior rows q = 1..m-2: c_{q-1} + 4 c_q + c_{q+1} = 6 f_q
        std::vector<double> d(m);
        for (int q = 1; q < m - 1; ++q) d[q] = 6 * f[q];
        d[1] -= c[0];
        d[m - 2] -= c[m - 1];
        cp[1] = 0.25;
        d[1] /= 4.0;
        for (int q = 2; q < m - 1; ++q) {
            const double den = 4.0 - cp[q - 1];
            cp[q] = 1.0 / den;
            d[q] = (d[q] - d[q - 1]) / den;
        }
        c[m - 2] = d[m - 2];
        for (int q = m - 3; q >= 1; --q) c[q] = d[q] - cp[q] * c[q + 1];
    }

    AxiGrid grid_{};
    int stride_ = 0;
    std::vector<double> coef_;
};

} // namespace axieuler
