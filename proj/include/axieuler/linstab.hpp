#pragma once

#include "axieuler/bichar.hpp"
#include "axieuler/flows.hpp"
#include "axieuler/leray.hpp"
#include "axieuler/norms.hpp"
#include "axieuler/parallel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

namespace axieuler {

struct PerturbationState {
    double t = 0.0;
    AxiVectorField v;
};

/// Source term f(t) of the linearised equation; empty means none.
using Forcing = std::function<AxiVectorField(double)>;

struct LinearOptions {
    double cfl = 0.5;
    double dt_max = 1e-2;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("LinearOptions: cfl must lie in (0, 1]");
        if (!(dt_max > 0.0)) throw ValidationError("LinearOptions: dt_max must be positive");
    }
};

/// Largest singular value of a 3x3 matrix.
inline double spectral_norm(const std::array<std::array<double, 3>, 3>& a) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = a[i][j];
    return Eigen::JacobiSVD<Eigen::Matrix3d>(m).singularValues()(0);
}

/// Base velocity and covariant gradient on the grid at one time.
struct BaseFields {
    double t = 0.0;
    std::vector<std::array<double, 3>> u;
    std::vector<std::array<std::array<double, 3>, 3>> G;
    double umax = 0.0;
    double grad_sup = 0.0; ///< max over the grid of the spectral norm of G
};

inline BaseFields sample_base(const VelocityProvider& p, double t, const AxiGrid& g) {
    BaseFields b;
    b.t = t;
    b.u.resize(g.size());
    b.G.resize(g.size());
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const std::size_t i = g.index(j, k);
            const FlowSample s = p.sample(t, g.r(j), g.z(k));
            b.u[i] = s.u;
            b.G[i] = s.gradient(g.r(j));
            b.umax = std::max(b.umax, std::sqrt(s.u[0] * s.u[0] + s.u[1] * s.u[1] + s.u[2] * s.u[2]));
            b.grad_sup = std::max(b.grad_sup, spectral_norm(b.G[i]));
        }
    return b;
}

/// RK4 for dv/dt = -u.grad v - v.grad u + f with the Leray projection applied
/// to every stage tendency. Derivatives are centred; cylindrical curvature
/// terms are included through the covariant gradient of the base flow.
class LinearSolver {
public:
    LinearSolver(const VelocityProvider& base, const AxiGrid& g, LinearOptions opt = {})
        : base_(base), grid_(g), opt_(opt), proj_(g) {
        opt_.validate();
        if (g.r_max > base.domain().r_max * (1 + 1e-12))
            throw ValidationError("LinearSolver: grid extends beyond the base flow domain");
    }

    const AxiGrid& grid() const { return grid_; }
    AxiVectorField project(const AxiVectorField& w) { return proj_.project(w); }

    const BaseFields& base_at(double t) {
        if (base_.steady()) {
            if (!cache_[0]) cache_[0] = sample_base(base_, t, grid_);
            return *cache_[0];
        }
        for (auto& c : cache_)
            if (c && c->t == t) return *c;
        cache_[next_] = sample_base(base_, t, grid_);
        const BaseFields& out = *cache_[next_];
        next_ = (next_ + 1) % cache_.size();
        return out;
    }

    /// Unprojected right-hand side.
    AxiVectorField raw_tendency(const AxiVectorField& v, double t, const Forcing& f = {}) {
        const BaseFields& b = base_at(t);
        const AxiField* comp[3] = {&v.ur, &v.utheta, &v.uz};
        std::array<AxiField, 3> dr, dz;
        for (int c = 0; c < 3; ++c) {
            dr[c] = d_r(*comp[c]);
            dz[c] = d_z(*comp[c]);
        }
        AxiVectorField out(grid_);
        AxiField* oc[3] = {&out.ur, &out.utheta, &out.uz};
        for (int k = 0; k < grid_.nz; ++k)
            for (int j = 0; j < grid_.nr; ++j) {
                const std::size_t i = grid_.index(j, k);
                const auto& u = b.u[i];
                const auto& G = b.G[i];
                const double vv[3] = {v.ur(j, k), v.utheta(j, k), v.uz(j, k)};
                const double ir = 1.0 / grid_.r(j);
                for (int c = 0; c < 3; ++c) {
                    double x = -(u[0] * dr[c](j, k) + u[2] * dz[c](j, k));
                    for (int q = 0; q < 3; ++q) x -= G[c][q] * vv[q];
                    (*oc[c])(j, k) = x;
                }
                out.ur(j, k) += u[1] * vv[1] * ir;
                out.utheta(j, k) -= u[1] * vv[0] * ir;
            }
        if (f) {
            const AxiVectorField fv = f(t);
            out.ur += fv.ur;
            out.utheta += fv.utheta;
            out.uz += fv.uz;
        }
        return out;
    }

    AxiVectorField tendency(const AxiVectorField& v, double t, const Forcing& f = {}) {
        return proj_.project(raw_tendency(v, t, f));
    }

    double max_stable_dt(double t) {
        const double umax = base_at(t).umax;
        return umax > 0.0 ? opt_.cfl * grid_.min_spacing() / umax : infinity;
    }

    PerturbationState step(const PerturbationState& s, double dt, const Forcing& f = {}) {
        if (!(dt > 0.0)) throw ValidationError("linear_step: dt must be positive");
        const double limit = max_stable_dt(s.t);
        if (dt > limit * (1 + 1e-12)) {
            std::ostringstream msg;
            msg << "linear_step: CFL violation, dt=" << dt << " exceeds " << limit;
            throw RuntimeFailure(msg.str());
        }
        auto stage = [&](const AxiVectorField& k, double c) {
            AxiVectorField w = s.v;
            w.ur.axpy(c, k.ur);
            w.utheta.axpy(c, k.utheta);
            w.uz.axpy(c, k.uz);
            return w;
        };
        const AxiVectorField k1 = tendency(s.v, s.t, f);
        const AxiVectorField k2 = tendency(stage(k1, 0.5 * dt), s.t + 0.5 * dt, f);
        const AxiVectorField k3 = tendency(stage(k2, 0.5 * dt), s.t + 0.5 * dt, f);
        const AxiVectorField k4 = tendency(stage(k3, dt), s.t + dt, f);
        PerturbationState out{s.t + dt, s.v};
        AxiField* o[3] = {&out.v.ur, &out.v.utheta, &out.v.uz};
        const AxiVectorField* ks[4] = {&k1, &k2, &k3, &k4};
        const double w[4] = {dt / 6, dt / 3, dt / 3, dt / 6};
        for (int q = 0; q < 4; ++q) {
            o[0]->axpy(w[q], ks[q]->ur);
            o[1]->axpy(w[q], ks[q]->utheta);
            o[2]->axpy(w[q], ks[q]->uz);
        }
        if (!out.v.ur.all_finite() || !out.v.utheta.all_finite() || !out.v.uz.all_finite())
            throw RuntimeFailure("linear_step: non-finite perturbation");
        return out;
    }

    /// Steps to T with CFL-limited steps; observer(state) after each step.
    template <class Observer>
    PerturbationState advance(PerturbationState s, double T, const Forcing& f, Observer&& observer) {
        const double tol = 1e-12 * std::max(1.0, std::abs(T));
        while (s.t < T - tol) {
            double h = std::min(opt_.dt_max, max_stable_dt(s.t));
            h = std::min(h, T - s.t);
            s = step(s, h, f);
            observer(s);
        }
        return s;
    }
    PerturbationState advance(PerturbationState s, double T, const Forcing& f = {}) {
        return advance(std::move(s), T, f, [](const PerturbationState&) {});
    }

private:
    const VelocityProvider& base_;
    AxiGrid grid_;
    LinearOptions opt_;
    LerayProjector proj_;
    std::array<std::optional<BaseFields>, 3> cache_;
    std::size_t next_ = 0;
};

/// max |div v| scaled by max|v| / min(dr, dz); zero for exactly solenoidal data.
inline double relative_divergence(const AxiVectorField& v) {
    const double scale = std::max(v.ur.max_abs(), v.uz.max_abs()) / v.grid().min_spacing();
    return scale > 0.0 ? divergence(v).max_abs() / scale : 0.0;
}

// ---------------------------------------------------------------- WKB data

/// Uniform covector xi0 and amplitude b0 at a seed, phase S = (x - x0).xi0
/// and a tensor-product polynomial bump of half-width delta around the seed.
struct WkbSeed {
    double r0 = 0.5;
    double z0 = 0.5;
    Vec2 xi0{1.0, 0.0};
    Vec3 b0{0.0, 1.0, 0.0};
    double delta = 0.0; ///< 0 selects five grid cells
};

struct WkbData {
    double eps = 0.1;
    AxiField S;
    AxiField phi;
    AxiVectorField b;
    AxiField xi_r;
    AxiField xi_z;
};

inline double wrapped_offset(double z, double z0, double L) {
    double d = std::fmod(z - z0, L);
    if (d > 0.5 * L) d -= L;
    if (d < -0.5 * L) d += L;
    return d;
}

/// ||phi||_{L^p} = 1 in the 3-D measure.
inline WkbData make_wkb_data(const AxiGrid& g, const WkbSeed& seed, double eps, double p = 2.0) {
    if (!(eps > 0.0)) throw ValidationError("wkb: eps must be positive");
    const double delta = seed.delta > 0.0 ? seed.delta : 5.0 * std::max(g.dr, g.dz);
    const double margin = 2.0 * g.dr;
    if (!(seed.r0 - delta >= margin && seed.r0 + delta <= g.r_max - margin))
        throw ValidationError("wkb: bump support must stay away from the axis and the wall");
    if (!(2.0 * delta < g.z_length()))
        throw ValidationError("wkb: bump wider than the period");
    const double nx = norm(seed.xi0);
    if (!(nx > 1e-12)) throw DomainError("wkb: degenerate phase, |xi0| = 0");
    const double bx = seed.b0[0] * seed.xi0[0] + seed.b0[2] * seed.xi0[1];
    if (std::abs(bx) > 1e-12 * norm(seed.b0) * nx) throw ValidationError("wkb: b0 must be orthogonal to xi0");
    WkbData d;
    d.eps = eps;
    d.S = AxiField::sample(g, Parity::none, [&](double r, double z) {
        return (r - seed.r0) * seed.xi0[0] + wrapped_offset(z, seed.z0, g.z_length()) * seed.xi0[1];
    });
    d.phi = AxiField::sample(g, Parity::even, [&](double r, double z) {
        const double dr = (r - seed.r0) / delta, dz = wrapped_offset(z, seed.z0, g.z_length()) / delta;
        return compact_bump(dr * dr) * compact_bump(dz * dz);
    });
    const double n = weighted_norm(d.phi, NormSpec{p, 0.0, Measure::three_d});
    if (!(n > 0.0)) throw ValidationError("wkb: bump has no grid support; increase delta");
    d.phi *= 1.0 / n;
    d.b = AxiVectorField(g);
    d.b.ur = AxiField(g, Parity::odd, seed.b0[0]);
    d.b.utheta = AxiField(g, Parity::odd, seed.b0[1]);
    d.b.uz = AxiField(g, Parity::even, seed.b0[2]);
    d.xi_r = AxiField(g, Parity::odd, seed.xi0[0]);
    d.xi_z = AxiField(g, Parity::even, seed.xi0[1]);
    return d;
}

/// Real part of eps curl((b x xi / |xi|^2) phi e^{iS/eps}), by discrete curl.
/// The poloidal part comes from the stream function r A_theta, so the result
/// lies in the kernel of the discrete divergence.
inline AxiVectorField build_wkb(const WkbData& d) {
    if (!(d.eps > 0.0)) throw ValidationError("wkb: eps must be positive");
    const AxiGrid& g = d.phi.grid();
    AxiField ar(g, Parity::odd), az(g, Parity::even), psi(g, Parity::even);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double ph = d.phi(j, k);
            if (ph == 0.0) continue;
            const double xr = d.xi_r(j, k), xz = d.xi_z(j, k);
            const double x2 = xr * xr + xz * xz;
            if (!(x2 > 1e-24)) throw DomainError("wkb: degenerate phase, |xi| vanishes inside the bump");
            const double br = d.b.ur(j, k), bt = d.b.utheta(j, k), bz = d.b.uz(j, k);
            const double amp = ph * std::cos(d.S(j, k) / d.eps) / x2;
            ar(j, k) = amp * bt * xz;
            psi(j, k) = g.r(j) * amp * (bz * xr - br * xz);
            az(j, k) = -amp * bt * xr;
        }
    AxiVectorField v(g);
    v.utheta = d_z(ar) - d_r(az);
    v.utheta.set_parity(Parity::odd);
    v.utheta *= d.eps;
    auto [ur, uz] = poloidal_from_stream(psi);
    v.ur = std::move(ur);
    v.uz = std::move(uz);
    v.ur *= d.eps;
    v.uz *= d.eps;
    return v;
}

/// Leading WKB term Re(i phi b e^{iS/eps}) = -phi b sin(S/eps).
inline AxiVectorField wkb_leading(const WkbData& d) {
    const AxiGrid& g = d.phi.grid();
    AxiVectorField v(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double a = -d.phi(j, k) * std::sin(d.S(j, k) / d.eps);
            v.ur(j, k) = a * d.b.ur(j, k);
            v.utheta(j, k) = a * d.b.utheta(j, k);
            v.uz(j, k) = a * d.b.uz(j, k);
        }
    return v;
}

/// ||v_eps - leading||, the O(eps) correction term.
inline double wkb_residual(const WkbData& d, const NormSpec& spec) {
    AxiVectorField v = build_wkb(d);
    const AxiVectorField l = wkb_leading(d);
    v.ur -= l.ur;
    v.utheta -= l.utheta;
    v.uz -= l.uz;
    return weighted_norm(v, spec);
}

// ------------------------------------------------------------ lambda_{p,sigma}

struct GrowthSeries {
    std::vector<double> t;
    std::vector<double> ratio;
    std::vector<double> norm;
};

/// A certified lower estimate of lambda_{p,sigma}(T): the largest growth
/// ratio over a finite initial set.
struct LambdaEstimate {
    double value = 0.0;
    bool lower_bound = true;
    std::size_t argmax = 0;
    std::vector<double> member_ratio;
    std::vector<GrowthSeries> series;
};

inline void check_initial_member(const AxiVectorField& v, const NormSpec& spec, std::size_t i) {
    if (weighted_norm(v, spec) == 0.0)
        throw ValidationError("lambda_estimate: initial datum " + std::to_string(i) + " has zero norm");
    const double div = relative_divergence(v);
    if (div > 1e-8)
        throw ValidationError("lambda_estimate: initial datum " + std::to_string(i) + " is not divergence-free (" +
                              std::to_string(div) + ")");
}

inline LambdaEstimate lambda_estimate(const VelocityProvider& base, const NormSpec& spec,
                                      const std::vector<AxiVectorField>& initial, double T,
                                      const LinearOptions& opt = {}, double t0 = 0.0) {
    spec.validate();
    if (!spec.sigma_admissible()) throw ValidationError("lambda_estimate: sigma outside (-2/p', 2/p)");
    if (initial.empty()) throw ValidationError("lambda_estimate: empty initial set");
    if (!(T >= t0)) throw ValidationError("lambda_estimate: T must not precede t0");
    detail::check_coverage(base, t0, T);
    for (std::size_t i = 0; i < initial.size(); ++i) check_initial_member(initial[i], spec, i);
    LambdaEstimate out;
    out.member_ratio.assign(initial.size(), 0.0);
    out.series.resize(initial.size());
    parallel_for(initial.size(), [&](std::size_t i) {
        LinearSolver solver(base, initial[i].grid(), opt);
        const double n0 = weighted_norm(initial[i], spec);
        GrowthSeries& gs = out.series[i];
        gs.t.push_back(t0);
        gs.ratio.push_back(1.0);
        gs.norm.push_back(n0);
        const PerturbationState end = solver.advance({t0, initial[i]}, T, {}, [&](const PerturbationState& s) {
            const double n = weighted_norm(s.v, spec);
            gs.t.push_back(s.t);
            gs.ratio.push_back(n / n0);
            gs.norm.push_back(n);
        });
        out.member_ratio[i] = weighted_norm(end.v, spec) / n0;
    });
    for (std::size_t i = 0; i < initial.size(); ++i)
        if (out.member_ratio[i] > out.value) {
            out.value = out.member_ratio[i];
            out.argmax = i;
        }
    return out;
}

// ------------------------------------------------------- stability bound audit

/// Checks ||r^alpha v(t)|| <= e^{U(t)} (||r^alpha v0|| + int_0^t ||r^alpha f||)
/// with the proxy U(t) = int_0^t (1 + |alpha|) sup|grad u| ds; alpha = -sigma.
struct StabilityAudit {
    std::vector<double> t;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> u_hat;
    double min_slack = infinity; ///< min over t > t0 of rhs / lhs
    bool holds = true;
};

inline StabilityAudit stability_bound_audit(const VelocityProvider& base, const NormSpec& spec,
                                            const AxiVectorField& v0, const Forcing& f, double T,
                                            const LinearOptions& opt = {}, double t0 = 0.0) {
    spec.validate();
    if (!(T >= t0)) throw ValidationError("stability_bound_audit: T must not precede t0");
    detail::check_coverage(base, t0, T);
    LinearSolver solver(base, v0.grid(), opt);
    const double alpha = std::abs(spec.sigma);
    auto fnorm = [&](double t) { return f ? weighted_norm(f(t), spec) : 0.0; };
    StabilityAudit out;
    const double n0 = weighted_norm(v0, spec);
    double U = 0.0, F = 0.0, last_t = t0;
    double last_g = solver.base_at(t0).grad_sup, last_f = fnorm(t0);
    auto record = [&](double t, double lhs) {
        const double rhs = std::exp(U) * (n0 + F);
        out.t.push_back(t);
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.u_hat.push_back(U);
        if (lhs > 0.0 && t > t0) out.min_slack = std::min(out.min_slack, rhs / lhs);
        if (lhs > rhs) out.holds = false;
    };
    record(t0, n0);
    solver.advance({t0, v0}, T, f, [&](const PerturbationState& s) {
        const double g = solver.base_at(s.t).grad_sup, fn = fnorm(s.t);
        const double h = s.t - last_t;
        U += 0.5 * h * (1.0 + alpha) * (g + last_g);
        F += 0.5 * h * (fn + last_f);
        last_t = s.t;
        last_g = g;
        last_f = fn;
        record(s.t, weighted_norm(s.v, spec));
    });
    return out;
}

// ---------------------------------------------------------- beta <= lambda

struct WkbAuditOptions {
    EnsembleSpec ensemble{};
    std::vector<double> eps{0.1, 0.05, 0.025};
    double delta = 0.0;
    double xi_scale = 1.0; ///< |xi0| of the WKB data; beta does not depend on it
    NormSpec spec{};
    LinearOptions linear{};
};

struct WkbAuditReport {
    double beta = 0.0;
    double lambda = 0.0;
    SeedPoint seed{};
    Vec3 b0{};
    double delta = 0.0;
    std::vector<double> eps;
    std::vector<double> ratio;    ///< growth ratio per eps
    std::vector<double> residual; ///< ||v_eps - leading|| at t0 per eps
    double residual_slope = 0.0;  ///< least-squares slope of log residual vs log eps
    LambdaEstimate estimate;

    /// beta <= lambda (1 + tol).
    bool holds(double tol) const { return beta <= lambda * (1.0 + tol); }
};

inline double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("log_slope: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw ValidationError("log_slope: values must be positive");
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// beta_sigma(T) from the ensemble, then lambda_{p,sigma}(T) from WKB data
/// seeded at the arg-max seed with the maximising b0, one member per eps.
inline WkbAuditReport wkb_audit(const VelocityProvider& base, const AxiGrid& g, double T, const WkbAuditOptions& opt,
                               double t0 = 0.0) {
    if (opt.eps.empty()) throw ValidationError("wkb_audit: no eps values");
    const double delta = opt.delta > 0.0 ? opt.delta : 5.0 * std::max(g.dr, g.dz);
    EnsembleSpec e = opt.ensemble;
    e.sigma = opt.spec.sigma;
    const double rhi = e.r_max_seed > 0.0 ? e.r_max_seed : base.domain().r_max;
    if (e.r_min_seed < delta + 2.0 * g.dr || rhi > g.r_max - delta - 2.0 * g.dr)
        throw ValidationError("wkb_audit: seed radii must leave room for the WKB bump");
    const BetaEstimate be = beta_sigma(e, base, t0, std::vector<double>{T});
    WkbAuditReport rep;
    rep.beta = be.beta.back();
    rep.seed = be.argmax;
    rep.b0 = be.argmax_b0;
    rep.delta = delta;
    rep.eps = opt.eps;
    if (!(opt.xi_scale > 0.0)) throw ValidationError("wkb_audit: xi_scale must be positive");
    Vec2 xi0 = xi_at_angle(be.argmax.angle);
    xi0[0] *= opt.xi_scale;
    xi0[1] *= opt.xi_scale;
    WkbSeed seed{be.argmax.r0, be.argmax.z0, xi0, be.argmax_b0, delta};
    std::vector<AxiVectorField> init;
    for (double eps : opt.eps) {
        const WkbData d = make_wkb_data(g, seed, eps, opt.spec.p);
        init.push_back(build_wkb(d));
        rep.residual.push_back(wkb_residual(d, opt.spec));
    }
    rep.residual_slope = opt.eps.size() >= 2 ? log_slope(opt.eps, rep.residual) : 0.0;
    rep.estimate = lambda_estimate(base, opt.spec, init, T, opt.linear, t0);
    rep.ratio = rep.estimate.member_ratio;
    rep.lambda = rep.estimate.value;
    return rep;
}

} // namespace axieuler
