#pragma once

#include "axieuler/operators.hpp"
#include "axieuler/poisson.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

namespace axieuler {

/// Orthogonal projection onto the kernel of the discrete divergence.
///
/// P = I - D* (D D*)^{-1} D, with D the operator of `divergence` and D* its
/// adjoint for the 3-D inner product sum 2 pi r v.w dr dz. After the FFT in z
/// each mode is a symmetric positive definite pentadiagonal problem in r,
/// factored once per grid. The swirl component is not touched.
class LerayProjector {
public:
    explicit LerayProjector(const AxiGrid& g) : fft_(g) {
        const int n = g.nr;
        // D_r as a matrix acting on v_r: (F_{j+1} - F_{j-1}) / (2 dr r_j), F = r v_r.
        Dr_.resize(n, n);
        std::vector<Eigen::Triplet<double>> t;
        const double h = 0.5 / g.dr;
        for (int j = 0; j < n; ++j) {
            const double ir = h / g.r(j);
            if (j + 1 < n)
                t.emplace_back(j, j + 1, g.r(j + 1) * ir);
            else
                t.emplace_back(j, j, -g.r(j) * ir);
            if (j > 0)
                t.emplace_back(j, j - 1, -g.r(j - 1) * ir);
            else
                t.emplace_back(j, j, -g.r(0) * ir);
        }
        Dr_.setFromTriplets(t.begin(), t.end());
        // Symmetrised A = W^{1/2} D_r W^{-1/2}; D_r D_r* = W^{-1/2} A A^T W^{1/2}.
        Eigen::VectorXd sw(n);
        for (int j = 0; j < n; ++j) sw[j] = std::sqrt(g.r(j));
        sqrt_w_ = sw;
        const Eigen::SparseMatrix<double> A = sw.asDiagonal() * Dr_ * sw.cwiseInverse().asDiagonal();
        const Eigen::SparseMatrix<double> AAt = A * Eigen::SparseMatrix<double>(A.transpose());
        Eigen::SparseMatrix<double> eye(n, n);
        eye.setIdentity();
        for (int m = 0; m < fft_.modes(); ++m) {
            const double s = symbol(m);
            Eigen::SparseMatrix<double> L = AAt + (s * s) * eye;
            auto f = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(L);
            if (f->info() != Eigen::Success) throw RuntimeFailure("LerayProjector: factorisation failed");
            solvers_.push_back(std::move(f));
        }
    }

    const AxiGrid& grid() const { return fft_.grid(); }

    AxiVectorField project(const AxiVectorField& w) {
        const AxiGrid& g = fft_.grid();
        if (!(w.grid() == g)) throw ValidationError("leray_project: grid mismatch");
        if (!w.ur.all_finite() || !w.utheta.all_finite() || !w.uz.all_finite())
            throw ValidationError("leray_project: non-finite input");
        const int n = g.nr;
        auto sr = fft_.forward(w.ur);
        auto sz = fft_.forward(w.uz);
        Eigen::MatrixXd rhs(n, 2), vr(n, 2);
        for (int m = 0; m < fft_.modes(); ++m) {
            const double s = symbol(m);
            std::complex<double>* a = sr.data() + std::size_t(n) * m;
            std::complex<double>* b = sz.data() + std::size_t(n) * m;
            for (int j = 0; j < n; ++j) {
                vr(j, 0) = a[j].real();
                vr(j, 1) = a[j].imag();
            }
            // D w = D_r w_r + i s w_z, solved in the symmetrised variable W^{1/2} Q.
            rhs = Dr_ * vr;
            for (int j = 0; j < n; ++j) {
                rhs(j, 0) -= s * b[j].imag();
                rhs(j, 1) += s * b[j].real();
            }
            rhs = sqrt_w_.asDiagonal() * rhs;
            const Eigen::MatrixXd y = solvers_[m]->solve(rhs);
            const Eigen::MatrixXd q = sqrt_w_.cwiseInverse().asDiagonal() * y;
            // D* Q = (W^{-1} D_r^T W Q, -i s Q).
            const Eigen::MatrixXd wq = sqrt_w_.cwiseProduct(sqrt_w_).asDiagonal() * q;
            const Eigen::MatrixXd gr =
                sqrt_w_.cwiseProduct(sqrt_w_).cwiseInverse().asDiagonal() * (Dr_.transpose() * wq);
            for (int j = 0; j < n; ++j) {
                a[j] -= std::complex<double>(gr(j, 0), gr(j, 1));
                b[j] -= std::complex<double>(s * q(j, 1), -s * q(j, 0));
            }
        }
        AxiVectorField out(g);
        out.ur = fft_.backward(sr, Parity::odd);
        out.uz = fft_.backward(sz, Parity::even);
        out.utheta = w.utheta;
        return out;
    }

private:
    double symbol(int m) const { return fft_.first_difference_symbol(m); }

    AxialFft fft_;
    Eigen::SparseMatrix<double> Dr_;
    Eigen::VectorXd sqrt_w_;
    std::vector<std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>> solvers_;
};

/// One-shot projection (factorises for this call).
inline AxiVectorField leray_project(const AxiVectorField& w) {
    LerayProjector p(w.grid());
    return p.project(w);
}

} // namespace axieuler
