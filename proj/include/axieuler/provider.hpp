#pragma once

#include "axieuler/euler.hpp"
#include "axieuler/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace axieuler {

/// Periodic cylinder 0 <= r <= r_max, z_min <= z < z_max.
struct Cylinder {
    double r_max = 1.0;
    double z_min = 0.0;
    double z_max = 1.0;

    double length() const { return z_max - z_min; }
    double wrap_z(double z) const {
        const double L = length();
        double w = std::fmod(z - z_min, L);
        if (w < 0.0) w += L;
        return z_min + w;
    }
};

inline Cylinder cylinder_of(const AxiGrid& g) { return {g.r_max, g.z_min, g.z_max}; }

/// Velocity and its (r, z) partial derivatives at one point, cylindrical components.
struct FlowSample {
    std::array<double, 3> u{};                  ///< (u_r, u_theta, u_z)
    std::array<std::array<double, 2>, 3> du{};  ///< du[c] = (d_r u_c, d_z u_c)

    /// Covariant gradient: row = component, column = direction (r, theta, z).
    std::array<std::array<double, 3>, 3> gradient(double r) const {
        return {{{du[0][0], -u[1] / r, du[0][1]}, {du[1][0], u[0] / r, du[1][1]}, {du[2][0], 0.0, du[2][1]}}};
    }

    /// (omega_r, omega_theta, omega_z).
    std::array<double, 3> vorticity(double r) const {
        return {-du[1][1], du[0][1] - du[2][0], du[1][0] + u[1] / r};
    }
};

/// Source of u(t, x) and its gradient for trajectory integration.
class VelocityProvider {
public:
    virtual ~VelocityProvider() = default;

    virtual FlowSample sample(double t, double r, double z) const = 0;
    virtual Cylinder domain() const = 0;
    /// Identifies the base flow; consumers comparing runs check it matches.
    virtual std::string flow_id() const = 0;
    virtual double t_begin() const { return -infinity; }
    virtual double t_end() const { return infinity; }
    /// Sampling resolution min(dr, dz) of a gridded provider (infinity if analytic).
    virtual double resolution() const { return infinity; }
    /// True when sample() does not depend on t.
    virtual bool steady() const { return false; }
};

namespace detail {

inline std::string fmt_id(const std::string& name, std::initializer_list<std::pair<const char*, double>> kv) {
    std::ostringstream os;
    os.precision(17);
    os << name << '(';
    bool first = true;
    for (const auto& [k, v] : kv) {
        os << (first ? "" : ",") << k << '=' << v;
        first = false;
    }
    os << ')';
    return os.str();
}

} // namespace detail

class ZeroFlow final : public VelocityProvider {
public:
    explicit ZeroFlow(Cylinder c = {}) : c_(c) {}
    FlowSample sample(double, double, double) const override { return {}; }
    Cylinder domain() const override { return c_; }
    std::string flow_id() const override { return "zero"; }
    bool steady() const override { return true; }

private:
    Cylinder c_;
};

/// u_theta = omega r.
class RigidRotationFlow final : public VelocityProvider {
public:
    explicit RigidRotationFlow(double omega = 1.0, Cylinder c = {}) : omega_(omega), c_(c) {}
    FlowSample sample(double, double r, double) const override {
        FlowSample s;
        s.u[1] = omega_ * r;
        s.du[1][0] = omega_;
        return s;
    }
    Cylinder domain() const override { return c_; }
    std::string flow_id() const override { return detail::fmt_id("rigid_rotation", {{"omega", omega_}}); }
    bool steady() const override { return true; }

private:
    double omega_;
    Cylinder c_;
};

/// Steady Gaussian ring: stream function psi = A r^2 E and swirl u_theta = S r E
/// with E = exp(-((r - r0)^2 + (z - z0)^2) / delta^2), summed over periodic
/// images in z. Not an Euler solution.
class FrozenRingFlow final : public VelocityProvider {
public:
    FrozenRingFlow(double poloidal, double swirl, double r0, double z0, double delta, Cylinder c = {})
        : a_(poloidal), s_(swirl), r0_(r0), z0_(z0), delta_(delta), c_(c) {
        if (!(delta > 0.0)) throw ValidationError("FrozenRingFlow: delta must be positive");
    }

    FlowSample sample(double, double r, double z) const override {
        const double q = 1.0 / (delta_ * delta_);
        const double dr = r - r0_;
        const double L = c_.length();
        double base = c_.wrap_z(z) - c_.wrap_z(z0_);
        if (base > 0.5 * L) base -= L;
        if (base < -0.5 * L) base += L;
        FlowSample s;
        for (int image = -2; image <= 2; ++image) {
            const double dz = base + image * L;
            const double E = std::exp(-(dr * dr + dz * dz) * q);
            if (E == 0.0) continue;
            s.u[0] += 2.0 * a_ * q * r * dz * E;
            s.u[1] += s_ * r * E;
            s.u[2] += 2.0 * a_ * (1.0 - q * r * dr) * E;
            s.du[0][0] += 2.0 * a_ * q * dz * E * (1.0 - 2.0 * q * r * dr);
            s.du[0][1] += 2.0 * a_ * q * r * E * (1.0 - 2.0 * q * dz * dz);
            s.du[1][0] += s_ * E * (1.0 - 2.0 * q * r * dr);
            s.du[1][1] += -2.0 * s_ * q * r * dz * E;
            s.du[2][0] += 2.0 * a_ * E * (-q * (2.0 * r - r0_) - 2.0 * q * dr * (1.0 - q * r * dr));
            s.du[2][1] += -4.0 * a_ * q * dz * (1.0 - q * r * dr) * E;
        }
        return s;
    }
    Cylinder domain() const override { return c_; }
    std::string flow_id() const override {
        return detail::fmt_id("frozen_ring",
                              {{"poloidal", a_}, {"swirl", s_}, {"r0", r0_}, {"z0", z0_}, {"delta", delta_}});
    }
    bool steady() const override { return true; }

private:
    double a_, s_, r0_, z0_, delta_;
    Cylinder c_;
};

/// First zero of J_1.
inline constexpr double bessel_j1_zero1 = 3.8317059702075123156;

/// Steady Beltrami (curl u = kappa u) Euler flow in the periodic cylinder:
/// u_r = A k J1(a r) sin kz', u_theta = A kappa J1(a r) cos kz', u_z = A a J0(a r) cos kz',
/// a = j_{1,1} / r_max, k = 2 pi m / L, kappa^2 = a^2 + k^2, z' = z - z_min.
class BeltramiFlow final : public VelocityProvider {
public:
    explicit BeltramiFlow(double amplitude = 1.0, int mode = 1, Cylinder c = {})
        : amp_(amplitude), mode_(mode), c_(c) {
        if (mode < 1) throw ValidationError("BeltramiFlow: mode must be >= 1");
        a_ = bessel_j1_zero1 / c_.r_max;
        k_ = 2.0 * pi * mode / c_.length();
        kappa_ = std::sqrt(a_ * a_ + k_ * k_);
    }

    FlowSample sample(double, double r, double z) const override {
        const double x = a_ * r;
        const double j0 = std::cyl_bessel_j(0.0, x), j1 = std::cyl_bessel_j(1.0, x);
        const double j1_over_x = x > 1e-8 ? j1 / x : 0.5;
        const double j1p = j0 - j1_over_x;
        const double ph = k_ * (z - c_.z_min);
        const double sn = std::sin(ph), cs = std::cos(ph);
        FlowSample s;
        s.u = {amp_ * k_ * j1 * sn, amp_ * kappa_ * j1 * cs, amp_ * a_ * j0 * cs};
        s.du[0] = {amp_ * k_ * a_ * j1p * sn, amp_ * k_ * k_ * j1 * cs};
        s.du[1] = {amp_ * kappa_ * a_ * j1p * cs, -amp_ * kappa_ * k_ * j1 * sn};
        s.du[2] = {-amp_ * a_ * a_ * j1 * cs, -amp_ * a_ * k_ * j0 * sn};
        return s;
    }
    Cylinder domain() const override { return c_; }
    std::string flow_id() const override {
        return detail::fmt_id("beltrami", {{"amplitude", amp_}, {"mode", double(mode_)}});
    }
    bool steady() const override { return true; }
    double kappa() const { return kappa_; }

private:
    double amp_;
    int mode_;
    Cylinder c_;
    double a_ = 0, k_ = 0, kappa_ = 0;
};

/// Flow recorded at a sequence of times on one grid as (psi, Gamma).
///
/// Space: the C2 bicubic spline of psi and Gamma, with u_r = -psi_z / r,
/// u_z = psi_r / r and u_theta = Gamma / r, so the interpolated velocity is
/// exactly solenoidal. Time: Lagrange interpolation on up to four
/// neighbouring snapshots. A single snapshot is a frozen field.
class SnapshotProvider final : public VelocityProvider {
public:
    explicit SnapshotProvider(std::string flow_id) : id_(std::move(flow_id)) {}

    void push(double t, const AxiField& psi, const AxiField& gamma) {
        if (!(psi.grid() == gamma.grid())) throw ValidationError("SnapshotProvider: psi and Gamma grids differ");
        if (!times_.empty()) {
            if (!(t > times_.back())) throw ValidationError("SnapshotProvider: snapshot times must increase");
            if (!(psi.grid() == psi_.front().grid())) throw ValidationError("SnapshotProvider: grid mismatch");
        }
        AxiField p = psi, g = gamma;
        p.set_parity(Parity::even);
        g.set_parity(Parity::even);
        times_.push_back(t);
        psi_.emplace_back(p);
        gamma_.emplace_back(g);
    }
    void push(const FlowState& s) { push(s.t, s.psi, s.gamma); }

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const CubicSpline2D& psi(std::size_t i) const { return psi_.at(i); }
    const CubicSpline2D& gamma(std::size_t i) const { return gamma_.at(i); }
    const AxiGrid& grid() const { return psi_.front().grid(); }

    FlowSample sample(double t, double r, double z) const override {
        if (times_.empty()) throw RuntimeFailure("SnapshotProvider: no snapshots");
        if (!(r > 0.0)) throw DomainError("SnapshotProvider: r must be positive");
        const double span = times_.back() - times_.front();
        const double tol = 1e-12 * std::max(1.0, std::abs(span));
        if (times_.size() > 1 && (t < times_.front() - tol || t > times_.back() + tol)) {
            std::ostringstream os;
            os << "SnapshotProvider: t=" << t << " outside [" << times_.front() << ", " << times_.back() << "]";
            throw DomainError(os.str());
        }
        std::size_t lo = 0, n = 1;
        std::array<double, 4> w{1.0, 0.0, 0.0, 0.0};
        if (times_.size() > 1) {
            const auto it = std::upper_bound(times_.begin(), times_.end(), t);
            std::size_t i = it == times_.begin() ? 0 : std::size_t(it - times_.begin()) - 1;
            i = std::min(i, times_.size() - 2);
            n = std::min<std::size_t>(4, times_.size());
            lo = i >= 1 ? i - 1 : 0;
            if (lo + n > times_.size()) lo = times_.size() - n;
            for (std::size_t a = 0; a < n; ++a) {
                double l = 1.0;
                for (std::size_t b = 0; b < n; ++b)
                    if (b != a) l *= (t - times_[lo + b]) / (times_[lo + a] - times_[lo + b]);
                w[a] = l;
            }
        }
        CubicJet p{0, 0, 0, 0, 0, 0};
        CubicSample G{0, 0, 0};
        for (std::size_t a = 0; a < n; ++a) {
            const CubicJet pj = psi_[lo + a].jet(r, z);
            const CubicJet gj = gamma_[lo + a].jet(r, z);
            p.d_r += w[a] * pj.d_r;
            p.d_z += w[a] * pj.d_z;
            p.d_rr += w[a] * pj.d_rr;
            p.d_rz += w[a] * pj.d_rz;
            p.d_zz += w[a] * pj.d_zz;
            G.value += w[a] * gj.value;
            G.d_r += w[a] * gj.d_r;
            G.d_z += w[a] * gj.d_z;
        }
        const double ir = 1.0 / r;
        FlowSample s;
        s.u = {-p.d_z * ir, G.value * ir, p.d_r * ir};
        s.du[0] = {-p.d_rz * ir + p.d_z * ir * ir, -p.d_zz * ir};
        s.du[1] = {G.d_r * ir - G.value * ir * ir, G.d_z * ir};
        s.du[2] = {p.d_rr * ir - p.d_r * ir * ir, p.d_rz * ir};
        return s;
    }

    Cylinder domain() const override { return cylinder_of(grid()); }
    std::string flow_id() const override { return id_; }
    double t_begin() const override { return times_.size() == 1 ? -infinity : times_.front(); }
    double t_end() const override { return times_.size() == 1 ? infinity : times_.back(); }
    double resolution() const override { return grid().min_spacing(); }
    bool steady() const override { return times_.size() == 1; }

private:
    std::string id_;
    std::vector<double> times_;
    std::vector<CubicSpline2D> psi_;
    std::vector<CubicSpline2D> gamma_;
};

/// Runs the solver from `s0` to `t_end`, keeping every `stride`-th step
/// (and the initial and final states) as snapshots.
inline SnapshotProvider record_run(EulerSolver& solver, FlowState s0, double t_end, double dt_max, int stride,
                                   const std::string& flow_id) {
    if (stride < 1) throw ValidationError("record_run: stride must be >= 1");
    SnapshotProvider out(flow_id);
    out.push(s0);
    int count = 0;
    double last = s0.t;
    FlowState end = solver.advance(std::move(s0), t_end, dt_max, [&](const FlowState& st) {
        if (++count % stride == 0) {
            out.push(st);
            last = st.t;
        }
    });
    if (end.t > last) out.push(end);
    return out;
}

/// Single frozen snapshot of a state.
inline SnapshotProvider frozen_snapshot(const FlowState& s, const std::string& flow_id) {
    SnapshotProvider out(flow_id);
    out.push(s);
    return out;
}

/// Max over grid points of the Frobenius norm of the covariant gradient at time t.
inline double sup_gradient(const VelocityProvider& p, double t, const AxiGrid& g) {
    double m = 0.0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const auto G = p.sample(t, g.r(j), g.z(k)).gradient(g.r(j));
            double f = 0.0;
            for (const auto& row : G)
                for (double v : row) f += v * v;
            m = std::max(m, std::sqrt(f));
        }
    return m;
}

} // namespace axieuler
