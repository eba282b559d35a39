#pragma once

#include "axieuler/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

namespace axieuler {

/// Real-to-complex FFT along z for every radial row of an AxiField.
///
/// Plans use FFTW_ESTIMATE so that results are bit-reproducible across runs.
class AxialFft {
public:
    explicit AxialFft(const AxiGrid& g)
        : grid_(g), nmodes_(g.nz / 2 + 1),
          real_(static_cast<double*>(fftw_malloc(sizeof(double) * g.size())), fftw_free),
          spec_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * g.nr * nmodes_)), fftw_free) {
        int n[] = {g.nz};
        forward_ = fftw_plan_many_dft_r2c(1, n, g.nr, real_.get(), nullptr, g.nr, 1, spec_.get(), nullptr, g.nr, 1,
                                          FFTW_ESTIMATE);
        backward_ = fftw_plan_many_dft_c2r(1, n, g.nr, spec_.get(), nullptr, g.nr, 1, real_.get(), nullptr, g.nr, 1,
                                           FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw RuntimeFailure("AxialFft: FFTW plan creation failed");
    }
    ~AxialFft() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    AxialFft(const AxialFft&) = delete;
    AxialFft& operator=(const AxialFft&) = delete;

    int modes() const { return nmodes_; }
    const AxiGrid& grid() const { return grid_; }

    /// Spectrum laid out as spec[j + nr * m].
    std::vector<std::complex<double>> forward(const AxiField& f) {
        std::copy(f.values().begin(), f.values().end(), real_.get());
        fftw_execute(forward_);
        std::vector<std::complex<double>> out(static_cast<std::size_t>(grid_.nr) * nmodes_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec_[i][0], spec_[i][1]};
        return out;
    }

    /// Inverse transform including the 1/nz normalisation.
    AxiField backward(const std::vector<std::complex<double>>& s, Parity parity) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            spec_[i][0] = s[i].real();
            spec_[i][1] = s[i].imag();
        }
        fftw_execute(backward_);
        AxiField out(grid_, parity);
        const double scale = 1.0 / grid_.nz;
        auto v = out.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = real_[i] * scale;
        return out;
    }

    /// Symbol of the centred second difference in z for mode m.
    double second_difference_symbol(int m) const {
        const double s = std::sin(pi * m / grid_.nz);
        return -4.0 * s * s / (grid_.dz * grid_.dz);
    }
    /// Symbol (divided by i) of the centred first difference in z for mode m.
    double first_difference_symbol(int m) const { return std::sin(2.0 * pi * m / grid_.nz) / grid_.dz; }

private:
    AxiGrid grid_;
    int nmodes_;
    std::unique_ptr<double[], decltype(&fftw_free)> real_;
    std::unique_ptr<fftw_complex[], decltype(&fftw_free)> spec_;
    fftw_plan forward_{};
    fftw_plan backward_{};
};

/// Solves (1/r^3) d_r(r^3 d_r phi) + d_z^2 phi = rhs with phi even at the axis,
/// phi = 0 on the wall face and periodic in z.
///
/// This is the stream-function problem E^2 psi = -r omega_theta written for
/// phi = psi / r^2, which is smooth and even at the axis. Radially it is a
/// finite-volume discretisation (exact on phi = c r^2); axially the centred
/// second difference is diagonalised by the FFT.
class StreamSolver {
public:
    explicit StreamSolver(const AxiGrid& g) : fft_(g) {
        const int n = g.nr;
        lower_.resize(n);
        diag_.resize(n);
        upper_.resize(n);
        for (int j = 0; j < n; ++j) {
            const double rm = j * g.dr, rp = (j + 1) * g.dr;
            const double vol = (std::pow(rp, 4) - std::pow(rm, 4)) / 4.0;
            const double cm = rm * rm * rm / (g.dr * vol);
            const double cp = rp * rp * rp / (g.dr * vol);
            lower_[j] = cm;
            upper_[j] = j + 1 < n ? cp : 0.0;
            // Wall ghost phi_n = -phi_{n-1} doubles the outer flux coefficient.
            diag_[j] = -cm - (j + 1 < n ? cp : 2.0 * cp);
        }
    }

    const AxiGrid& grid() const { return fft_.grid(); }

    AxiField solve(const AxiField& rhs) {
        const AxiGrid& g = fft_.grid();
        auto spec = fft_.forward(rhs);
        const int n = g.nr;
        std::vector<double> c(n);
        std::vector<std::complex<double>> d(n);
        for (int m = 0; m < fft_.modes(); ++m) {
            const double lam = fft_.second_difference_symbol(m);
            std::complex<double>* x = spec.data() + static_cast<std::size_t>(n) * m;
            // Thomas algorithm; the matrix is strictly diagonally dominant.
            double beta = diag_[0] + lam;
            if (beta == 0.0) throw RuntimeFailure("StreamSolver: singular tridiagonal system");
            c[0] = upper_[0] / beta;
            d[0] = x[0] / beta;
            for (int j = 1; j < n; ++j) {
                beta = diag_[j] + lam - lower_[j] * c[j - 1];
                if (beta == 0.0) throw RuntimeFailure("StreamSolver: singular tridiagonal system");
                c[j] = upper_[j] / beta;
                d[j] = (x[j] - lower_[j] * d[j - 1]) / beta;
            }
            x[n - 1] = d[n - 1];
            for (int j = n - 2; j >= 0; --j) x[j] = d[j] - c[j] * x[j + 1];
        }
        return fft_.backward(spec, Parity::even);
    }

    /// Applies the discrete operator (used by tests and residual checks).
    AxiField apply(const AxiField& phi) const {
        const AxiGrid& g = fft_.grid();
        AxiField out(g, Parity::even);
        const int n = g.nr;
        const double idz2 = 1.0 / (g.dz * g.dz);
        for (int k = 0; k < g.nz; ++k) {
            const int kp = g.wrap_k(k + 1), km = g.wrap_k(k - 1);
            for (int j = 0; j < n; ++j) {
                double v = diag_[j] * phi(j, k);
                if (j > 0) v += lower_[j] * phi(j - 1, k);
                if (j + 1 < n) v += upper_[j] * phi(j + 1, k);
                v += (phi(j, kp) - 2.0 * phi(j, k) + phi(j, km)) * idz2;
                out(j, k) = v;
            }
        }
        return out;
    }

private:
    AxialFft fft_;
    std::vector<double> lower_, diag_, upper_;
};

} // namespace axieuler
