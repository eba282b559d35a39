#pragma once

#include "axieuler/parallel.hpp"
#include "axieuler/provider.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace axieuler {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
/// Toroidal covector (xi_r, xi_z) as a cylindrical 3-vector with xi_theta = 0.
inline Vec3 lift(const Vec2& xi) { return {xi[0], 0.0, xi[1]}; }

/// One point of a bicharacteristic: position, phase covector and amplitude.
struct BicharState {
    double t = 0.0;
    double r = 0.0;
    double z = 0.0;
    Vec2 xi{};  ///< (xi_r, xi_z)
    Vec3 b{};   ///< (b_r, b_theta, b_z)
};

struct BicharDerivative {
    double r = 0.0;
    double z = 0.0;
    Vec2 xi{};
    Vec3 b{};
};

namespace detail {

inline Vec2 xi_rate(const FlowSample& s, const Vec2& xi) {
    return {-(xi[0] * s.du[0][0] + xi[1] * s.du[2][0]), -(xi[0] * s.du[0][1] + xi[1] * s.du[2][1])};
}

inline Vec3 b_rate(const FlowSample& s, double r, const Vec2& xi, const Vec3& b) {
    const double xn = norm(xi);
    if (!(xn >= 1e-300)) throw RuntimeFailure("bichar_rhs: singular xi (|xi| < 1e-300)");
    const auto G = s.gradient(r);
    Vec3 gb{};
    for (int i = 0; i < 3; ++i) gb[i] = G[i][0] * b[0] + G[i][1] * b[1] + G[i][2] * b[2];
    const double c = 2.0 * (xi[0] * gb[0] + xi[1] * gb[2]) / (xn * xn);
    const double w = s.u[1] / r;
    return {-gb[0] + c * xi[0] + w * b[1], -gb[1] - w * b[0], -gb[2] + c * xi[1]};
}

/// Spectral norm of the (r, z) block of the gradient acting on xi.
inline double xi_block_norm(const FlowSample& s) {
    const double a = s.du[0][0], b = s.du[2][0], c = s.du[0][1], d = s.du[2][1];
    const double f = a * a + b * b + c * c + d * d, det = a * d - b * c;
    return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det * det))));
}

} // namespace detail

/// Right-hand side of the bicharacteristic-amplitude system in cylindrical
/// components, including the rotation of (e_r, e_theta) along the path.
inline BicharDerivative bichar_rhs(const BicharState& s, const VelocityProvider& p) {
    if (!(s.r > 0.0)) throw DomainError("bichar_rhs: r must be positive");
    const FlowSample f = p.sample(s.t, s.r, s.z);
    return {f.u[0], f.u[2], detail::xi_rate(f, s.xi), detail::b_rate(f, s.r, s.xi, s.b)};
}

/// Several amplitudes transported along one path, each attached to one of
/// (at most two) covectors.
struct BicharBundle {
    static constexpr int max_xi = 2;
    static constexpr int max_b = 4;
    enum class Layout { generic, audit };

    double t = 0.0;
    double r = 0.0;
    double z = 0.0;
    int n_xi = 0;
    int n_b = 0;
    std::array<Vec2, max_xi> xi{};
    std::array<Vec3, max_b> b{};
    std::array<int, max_b> owner{};
    double stretch = 0.0;  ///< integral of the xi-block gradient norm along the path
    Layout layout = Layout::generic;

    int add_xi(const Vec2& v) {
        if (n_xi >= max_xi) throw ValidationError("BicharBundle: too many covectors");
        xi[n_xi] = v;
        return n_xi++;
    }
    int add_b(const Vec3& v, int covector) {
        if (n_b >= max_b) throw ValidationError("BicharBundle: too many amplitudes");
        if (covector < 0 || covector >= n_xi) throw ValidationError("BicharBundle: unknown covector");
        b[n_b] = v;
        owner[n_b] = covector;
        return n_b++;
    }
    BicharState state(int ib = 0) const { return {t, r, z, xi[owner[ib]], b[ib]}; }
};

enum class TrajectoryStatus { completed, axis_exit, step_rejected };

inline std::string to_string(TrajectoryStatus s) {
    switch (s) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::axis_exit: return "axis_exit";
    case TrajectoryStatus::step_rejected: return "step_rejected";
    }
    return "?";
}

struct TrajectoryOptions {
    double dt = 1e-3;
    int stride = 1;  ///< record every stride-th step (first and last always)

    void validate() const {
        if (!(dt > 0.0)) throw ValidationError("trajectory: dt must be positive");
        if (stride < 1) throw ValidationError("trajectory: stride must be >= 1");
    }
};

struct BundleTrajectory {
    std::vector<BicharBundle> samples;
    TrajectoryStatus status = TrajectoryStatus::completed;
    int wall_reflections = 0;
    int steps = 0;

    const BicharBundle& initial() const { return samples.front(); }
    const BicharBundle& final() const { return samples.back(); }
};

namespace detail {

struct BundleRate {
    double r = 0.0, z = 0.0, stretch = 0.0;
    std::array<Vec2, BicharBundle::max_xi> xi{};
    std::array<Vec3, BicharBundle::max_b> b{};
};

inline BundleRate bundle_rate(const BicharBundle& s, const VelocityProvider& p, double r_max) {
    const FlowSample f = p.sample(s.t, std::min(s.r, r_max), s.z);
    BundleRate d;
    d.r = f.u[0];
    d.z = f.u[2];
    d.stretch = xi_block_norm(f);
    for (int i = 0; i < s.n_xi; ++i) d.xi[i] = xi_rate(f, s.xi[i]);
    for (int i = 0; i < s.n_b; ++i) d.b[i] = b_rate(f, s.r, s.xi[s.owner[i]], s.b[i]);
    return d;
}

inline BicharBundle bundle_stage(const BicharBundle& s, const BundleRate& d, double h) {
    BicharBundle o = s;
    o.t += h;
    o.r += h * d.r;
    o.z += h * d.z;
    o.stretch += h * d.stretch;
    for (int i = 0; i < s.n_xi; ++i)
        for (int c = 0; c < 2; ++c) o.xi[i][c] += h * d.xi[i][c];
    for (int i = 0; i < s.n_b; ++i)
        for (int c = 0; c < 3; ++c) o.b[i][c] += h * d.b[i][c];
    return o;
}

inline void check_coverage(const VelocityProvider& p, double t0, double T) {
    const double tol = 1e-12 * std::max(1.0, std::abs(T));
    if (p.t_begin() > t0 + tol || p.t_end() < T - tol)
        throw ValidationError("trajectory: provider covers [" + std::to_string(p.t_begin()) + ", " +
                              std::to_string(p.t_end()) + "], requested [" + std::to_string(t0) + ", " +
                              std::to_string(T) + "]");
}

} // namespace detail

/// RK4 integration of a bundle from s.t to T with uniform steps of at most dt.
///
/// z wraps periodically; a path crossing r_max is reflected back and counted;
/// reaching the axis or moving more than one grid cell per step stops the
/// integration with the corresponding status.
inline BundleTrajectory integrate_bundle(BicharBundle s, const VelocityProvider& p, double T,
                                         const TrajectoryOptions& opt = {}) {
    opt.validate();
    if (s.n_xi < 1) throw ValidationError("trajectory: bundle has no covector");
    if (!(s.r > 0.0)) throw ValidationError("trajectory: seed radius must be positive");
    if (!(T >= s.t)) throw ValidationError("trajectory: T must not precede the start time");
    detail::check_coverage(p, s.t, T);
    const Cylinder dom = p.domain();
    s.z = dom.wrap_z(s.z);
    BundleTrajectory out;
    out.samples.push_back(s);
    const double span = T - s.t;
    const long n = span > 0.0 ? static_cast<long>(std::ceil(span / opt.dt - 1e-9)) : 0;
    const double h = n > 0 ? span / n : 0.0;
    const double t0 = s.t;
    for (long i = 0; i < n; ++i) {
        const detail::BundleRate k1 = detail::bundle_rate(s, p, dom.r_max);
        if (std::hypot(k1.r, k1.z) * h > p.resolution()) {
            out.status = TrajectoryStatus::step_rejected;
            break;
        }
        const BicharBundle s2 = detail::bundle_stage(s, k1, 0.5 * h);
        if (!(s2.r > 0.0)) { out.status = TrajectoryStatus::axis_exit; break; }
        const detail::BundleRate k2 = detail::bundle_rate(s2, p, dom.r_max);
        const BicharBundle s3 = detail::bundle_stage(s, k2, 0.5 * h);
        if (!(s3.r > 0.0)) { out.status = TrajectoryStatus::axis_exit; break; }
        const detail::BundleRate k3 = detail::bundle_rate(s3, p, dom.r_max);
        const BicharBundle s4 = detail::bundle_stage(s, k3, h);
        if (!(s4.r > 0.0)) { out.status = TrajectoryStatus::axis_exit; break; }
        const detail::BundleRate k4 = detail::bundle_rate(s4, p, dom.r_max);
        detail::BundleRate k;
        k.r = (k1.r + 2 * k2.r + 2 * k3.r + k4.r) / 6.0;
        k.z = (k1.z + 2 * k2.z + 2 * k3.z + k4.z) / 6.0;
        k.stretch = (k1.stretch + 2 * k2.stretch + 2 * k3.stretch + k4.stretch) / 6.0;
        for (int a = 0; a < s.n_xi; ++a)
            for (int c = 0; c < 2; ++c)
                k.xi[a][c] = (k1.xi[a][c] + 2 * k2.xi[a][c] + 2 * k3.xi[a][c] + k4.xi[a][c]) / 6.0;
        for (int a = 0; a < s.n_b; ++a)
            for (int c = 0; c < 3; ++c)
                k.b[a][c] = (k1.b[a][c] + 2 * k2.b[a][c] + 2 * k3.b[a][c] + k4.b[a][c]) / 6.0;
        BicharBundle next = detail::bundle_stage(s, k, h);
        next.t = t0 + (i + 1) * h;
        if (!(next.r > 0.0)) {
            out.status = TrajectoryStatus::axis_exit;
            break;
        }
        if (next.r > dom.r_max) {
            next.r = 2.0 * dom.r_max - next.r;
            ++out.wall_reflections;
        }
        next.z = dom.wrap_z(next.z);
        s = next;
        ++out.steps;
        if ((i + 1) % opt.stride == 0 || i + 1 == n) out.samples.push_back(s);
    }
    if (out.status != TrajectoryStatus::completed && out.samples.back().t != s.t) out.samples.push_back(s);
    return out;
}

/// Initial data of one bicharacteristic.
struct Seed {
    double r0 = 0.5;
    double z0 = 0.5;
    Vec2 xi0{1.0, 0.0};
    Vec3 b0{0.0, 1.0, 0.0};
    double sigma = 0.0;

    void validate(double r_min_seed = 0.0) const {
        if (!(r0 > 0.0) || r0 < r_min_seed) throw ValidationError("Seed: r0 must be positive and >= r_min_seed");
        if (std::abs(norm(xi0) - 1.0) > 1e-12) throw ValidationError("Seed: xi0 must be a unit covector");
        const double bn = norm(b0);
        if (std::abs(bn - std::pow(r0, sigma)) > 1e-12 * std::max(1.0, bn))
            throw ValidationError("Seed: |b0| must equal r0^sigma");
        if (std::abs(dot(b0, lift(xi0))) > 1e-12 * bn) throw ValidationError("Seed: b0 must be orthogonal to xi0");
    }
};

/// Unit toroidal covector at angle a from e_r, and the two unit vectors
/// e_theta and e_theta x xi spanning its orthogonal complement.
inline Vec2 xi_at_angle(double a) { return {std::cos(a), std::sin(a)}; }
inline std::array<Vec3, 2> orthonormal_complement(const Vec2& xi) {
    const double n = norm(xi);
    return {Vec3{0.0, 1.0, 0.0}, Vec3{-xi[1] / n, 0.0, xi[0] / n}};
}

struct Trajectory {
    std::vector<BicharState> states;
    std::vector<double> stretch;  ///< integral of the gradient norm up to each state
    TrajectoryStatus status = TrajectoryStatus::completed;
    int wall_reflections = 0;
};

inline Trajectory integrate_trajectory(const Seed& seed, const VelocityProvider& p, double t0, double T,
                                       const TrajectoryOptions& opt = {}) {
    seed.validate();
    BicharBundle s;
    s.t = t0;
    s.r = seed.r0;
    s.z = seed.z0;
    s.add_xi(seed.xi0);
    s.add_b(seed.b0, 0);
    const BundleTrajectory bt = integrate_bundle(s, p, T, opt);
    Trajectory out;
    out.status = bt.status;
    out.wall_reflections = bt.wall_reflections;
    for (const auto& x : bt.samples) {
        out.states.push_back(x.state(0));
        out.stretch.push_back(x.stretch);
    }
    return out;
}

/// Seed ensemble for the beta supremum.
struct EnsembleSpec {
    int positions = 256;      ///< quasi-random (Halton 2,3) points
    int angles = 8;           ///< xi0 angles k pi / angles
    double r_min_seed = 0.05;
    double r_max_seed = 0.0;  ///< 0 selects the domain radius
    double sigma = 0.0;
    double dt = 1e-3;

    void validate() const {
        if (positions < 1 || angles < 1) throw ValidationError("EnsembleSpec: ensemble must be non-empty");
        if (!(r_min_seed > 0.0)) throw ValidationError("EnsembleSpec: r_min_seed must be positive");
        if (r_max_seed != 0.0 && !(r_max_seed > r_min_seed))
            throw ValidationError("EnsembleSpec: r_max_seed must exceed r_min_seed");
        if (!(dt > 0.0)) throw ValidationError("EnsembleSpec: dt must be positive");
    }
};

inline double halton(unsigned index, unsigned base) {
    double f = 1.0, x = 0.0;
    for (unsigned i = index; i > 0; i /= base) {
        f /= base;
        x += f * (i % base);
    }
    return x;
}

struct SeedPoint {
    double r0;
    double z0;
    double angle;
};

inline std::vector<SeedPoint> ensemble_points(const EnsembleSpec& e, const Cylinder& dom) {
    e.validate();
    const double rhi = e.r_max_seed > 0.0 ? e.r_max_seed : dom.r_max;
    if (rhi > dom.r_max || e.r_min_seed >= rhi) throw ValidationError("EnsembleSpec: seed radii outside the domain");
    std::vector<SeedPoint> pts;
    pts.reserve(std::size_t(e.positions) * e.angles);
    for (int i = 0; i < e.positions; ++i) {
        const double r0 = e.r_min_seed + (rhi - e.r_min_seed) * halton(i + 1, 2);
        const double z0 = dom.z_min + dom.length() * halton(i + 1, 3);
        for (int a = 0; a < e.angles; ++a) pts.push_back({r0, z0, pi * a / e.angles});
    }
    return pts;
}

/// Largest singular value of the 3x2 matrix with columns c0, c1.
inline double max_singular_value(const Vec3& c0, const Vec3& c1) {
    const double a = dot(c0, c0), b = dot(c0, c1), d = dot(c1, c1);
    const double tr = a + d, disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
    return std::sqrt(std::max(0.0, 0.5 * tr + disc));
}

/// Unit (c0, c1) maximising |c0 v0 + c1 v1|.
inline std::array<double, 2> top_right_singular(const Vec3& v0, const Vec3& v1) {
    const double a = dot(v0, v0), b = dot(v0, v1), d = dot(v1, v1);
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);
    return {std::cos(theta), std::sin(theta)};
}

struct BetaEstimate {
    std::vector<double> times;
    std::vector<double> beta;        ///< sup over seeds and unit b0 in the complement of xi0
    std::vector<double> frame_beta;  ///< sup over seeds and the two frame vectors only
    SeedPoint argmax{};              ///< seed attaining beta at the last time
    double argmax_rT = 0.0;
    double argmax_zT = 0.0;
    Vec3 argmax_b0{};                ///< unit b0 attaining beta at the argmax seed
    std::size_t seeds = 0;
    std::size_t terminated = 0;
    long wall_reflections = 0;
};

/// beta_sigma(t) for each requested time, as a supremum over the ensemble.
inline BetaEstimate beta_sigma(const EnsembleSpec& e, const VelocityProvider& p, double t0,
                               const std::vector<double>& times) {
    if (times.empty()) throw ValidationError("beta_sigma: no output times");
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] < t0 || (i > 0 && times[i] <= times[i - 1]))
            throw ValidationError("beta_sigma: output times must be increasing and >= t0");
    detail::check_coverage(p, t0, times.back());
    const auto pts = ensemble_points(e, p.domain());
    const std::size_t nt = times.size();
    std::vector<double> val(pts.size() * nt, 0.0), frame(pts.size() * nt, 0.0);
    std::vector<double> rT(pts.size()), zT(pts.size());
    std::vector<Vec3> bmax(pts.size());
    std::vector<int> alive(pts.size() * nt, 0), refl(pts.size(), 0), term(pts.size(), 0);
    const TrajectoryOptions opt{e.dt, 1 << 30};
    parallel_for(pts.size(), [&](std::size_t i) {
        const SeedPoint& sp = pts[i];
        BicharBundle s;
        s.t = t0;
        s.r = sp.r0;
        s.z = sp.z0;
        const Vec2 xi = xi_at_angle(sp.angle);
        s.add_xi(xi);
        const auto basis = orthonormal_complement(xi);
        s.add_b(basis[0], 0);
        s.add_b(basis[1], 0);
        for (std::size_t k = 0; k < nt; ++k) {
            const BundleTrajectory bt = integrate_bundle(s, p, times[k], opt);
            refl[i] += bt.wall_reflections;
            s = bt.final();
            if (bt.status != TrajectoryStatus::completed) {
                term[i] = 1;
                break;
            }
            const double w = std::pow(sp.r0 / s.r, e.sigma);
            val[i * nt + k] = w * max_singular_value(s.b[0], s.b[1]);
            frame[i * nt + k] = w * std::max(norm(s.b[0]), norm(s.b[1]));
            alive[i * nt + k] = 1;
            rT[i] = s.r;
            zT[i] = s.z;
            const auto c = top_right_singular(s.b[0], s.b[1]);
            for (int q = 0; q < 3; ++q) bmax[i][q] = c[0] * basis[0][q] + c[1] * basis[1][q];
        }
    });
    BetaEstimate out;
    out.times = times;
    out.beta.assign(nt, 0.0);
    out.frame_beta.assign(nt, 0.0);
    out.seeds = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out.terminated += term[i];
        out.wall_reflections += refl[i];
        for (std::size_t k = 0; k < nt; ++k) {
            if (!alive[i * nt + k]) continue;
            if (val[i * nt + k] > out.beta[k]) {
                out.beta[k] = val[i * nt + k];
                if (k + 1 == nt) {
                    out.argmax = pts[i];
                    out.argmax_rT = rT[i];
                    out.argmax_zT = zT[i];
                    out.argmax_b0 = bmax[i];
                }
            }
            out.frame_beta[k] = std::max(out.frame_beta[k], frame[i * nt + k]);
        }
    }
    return out;
}

inline double beta_sigma(const EnsembleSpec& e, const VelocityProvider& p, double t0, double T) {
    return beta_sigma(e, p, t0, std::vector<double>{T}).beta.back();
}

/// Bundle carrying every object the conservation audit needs:
/// xi' (covector 0) aligned with the toroidal vorticity at the seed, the
/// pair b', b'' (owned by xi') with (b' x b'').xi' = r0^{2 sigma} |xi'|, and
/// b = r0^sigma e_theta owned by a covector xi orthogonal to that vorticity.
/// Where the toroidal vorticity vanishes, xi' falls back to `fallback_angle`.
inline BicharBundle make_audit_bundle(const VelocityProvider& p, double t0, double r0, double z0, double sigma,
                                      double fallback_angle = 0.0) {
    if (!(r0 > 0.0)) throw ValidationError("audit bundle: r0 must be positive");
    const auto w = p.sample(t0, r0, z0).vorticity(r0);
    const double wn = std::hypot(w[0], w[2]);
    const Vec2 xi_p = wn > 1e-300 ? Vec2{w[0] / wn, w[2] / wn} : xi_at_angle(fallback_angle);
    const Vec2 xi{-xi_p[1], xi_p[0]};
    const double m = std::pow(r0, sigma);
    const auto basis = orthonormal_complement(xi_p);
    BicharBundle s;
    s.t = t0;
    s.r = r0;
    s.z = z0;
    s.layout = BicharBundle::Layout::audit;
    s.add_xi(xi_p);
    s.add_xi(xi);
    s.add_b({m * basis[0][0], m * basis[0][1], m * basis[0][2]}, 0);
    s.add_b({m * basis[1][0], m * basis[1][1], m * basis[1][2]}, 0);
    s.add_b({0.0, m, 0.0}, 1);
    return s;
}

enum AuditIdentity : unsigned {
    audit_b_dot_xi = 1u,
    audit_xi_dot_omega = 2u,
    audit_triple = 4u,
    audit_r_b_theta = 8u,
    audit_all = 15u,
};

struct ConservationReport {
    double b_dot_xi = 0.0;      ///< max |b.xi| / (|b||xi|)
    double xi_dot_omega = 0.0;  ///< relative drift of xi'.omega
    double triple = 0.0;        ///< relative drift of (b' x b'').xi'
    double r_b_theta = 0.0;     ///< relative drift of r b_theta
    double xi_floor = infinity; ///< min over samples of |xi_t| / (e^{-stretch} |xi_0|); >= 1 when the bound holds
    std::size_t samples = 0;
};

/// Relative drifts of the conserved quantities over one bundle trajectory.
inline ConservationReport conserved_audit(const BundleTrajectory& tr, const VelocityProvider& p,
                                          unsigned identities = audit_all) {
    if (tr.samples.empty()) throw ValidationError("conserved_audit: empty trajectory");
    const BicharBundle& s0 = tr.initial();
    const bool audit = s0.layout == BicharBundle::Layout::audit;
    if ((identities & (audit_xi_dot_omega | audit_triple | audit_r_b_theta)) && !audit)
        throw ValidationError(
            "conserved_audit: identities beyond b.xi need an audit bundle (xi', b', b'' and b on xi)");
    ConservationReport rep;
    rep.samples = tr.samples.size();
    auto omega_dot = [&](const BicharBundle& s) {
        const auto w = p.sample(s.t, s.r, s.z).vorticity(s.r);
        return s.xi[0][0] * w[0] + s.xi[0][1] * w[2];
    };
    auto triple = [](const BicharBundle& s) { return dot(cross(s.b[0], s.b[1]), lift(s.xi[0])); };
    double q_om = 0, q_tr = 0, q_rb = 0, sc_om = 1, sc_tr = 1, sc_rb = 1;
    if (audit) {
        const auto w0 = p.sample(s0.t, s0.r, s0.z).vorticity(s0.r);
        q_om = omega_dot(s0);
        sc_om = norm(s0.xi[0]) * std::hypot(w0[0], w0[2]);
        if (!(sc_om > 0.0)) sc_om = 1.0;
        q_tr = triple(s0);
        sc_tr = norm(s0.b[0]) * norm(s0.b[1]) * norm(s0.xi[0]);
        q_rb = s0.r * s0.b[2][1];
        sc_rb = std::abs(q_rb) > 0.0 ? std::abs(q_rb) : 1.0;
    }
    std::array<double, BicharBundle::max_xi> xi0n{};
    for (int i = 0; i < s0.n_xi; ++i) xi0n[i] = norm(s0.xi[i]);
    for (const BicharBundle& s : tr.samples) {
        if (identities & audit_b_dot_xi)
            for (int i = 0; i < s.n_b; ++i) {
                const Vec3 x = lift(s.xi[s.owner[i]]);
                const double den = norm(s.b[i]) * norm(x);
                if (den > 0.0) rep.b_dot_xi = std::max(rep.b_dot_xi, std::abs(dot(s.b[i], x)) / den);
            }
        for (int i = 0; i < s.n_xi; ++i)
            rep.xi_floor = std::min(rep.xi_floor, norm(s.xi[i]) * std::exp(s.stretch) / xi0n[i]);
        if (identities & audit_xi_dot_omega)
            rep.xi_dot_omega = std::max(rep.xi_dot_omega, std::abs(omega_dot(s) - q_om) / sc_om);
        if (identities & audit_triple) rep.triple = std::max(rep.triple, std::abs(triple(s) - q_tr) / sc_tr);
        if (identities & audit_r_b_theta)
            rep.r_b_theta = std::max(rep.r_b_theta, std::abs(s.r * s.b[2][1] - q_rb) / sc_rb);
    }
    return rep;
}

struct PhaseCheckOptions {
    double dt = 1e-3;
    double cfl = 0.5;
    double r_lo = 0.2;  ///< seeds are grid points with r in [r_lo, r_hi] (fractions of r_max)
    double r_hi = 0.8;
    int seed_stride = 4;
};

namespace detail {

inline AxiVectorField sample_velocity(const VelocityProvider& p, double t, const AxiGrid& g) {
    AxiVectorField u(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const FlowSample f = p.sample(t, g.r(j), g.z(k));
            u.ur(j, k) = f.u[0];
            u.utheta(j, k) = f.u[1];
            u.uz(j, k) = f.u[2];
        }
    return u;
}

} // namespace detail

/// Transports the phase S = r xi0_r + z xi0_z + s on `grid` (s periodic,
/// carried by the centred advection scheme with source -u.xi0) and compares
/// grad S at the end point with the covector of bicharacteristics seeded at
/// grid points. Returns the max of |xi_T - grad S(T, x_T)| / |xi_T|.
inline double phase_transport_check(const VelocityProvider& p, const AxiGrid& grid, const Vec2& xi0, double t0,
                                    double T, const PhaseCheckOptions& opt = {}) {
    if (!(T >= t0)) throw ValidationError("phase_transport_check: T must not precede t0");
    detail::check_coverage(p, t0, T);
    AxiField s(grid, Parity::none);
    auto tendency = [&](const AxiField& q, double t) {
        const AxiVectorField u = detail::sample_velocity(p, t, grid);
        AxiField d = detail::advect(q, u.ur, u.uz, AdvectionScheme::centered2);
        for (std::size_t i = 0; i < d.size(); ++i)
            d.values()[i] -= u.ur.values()[i] * xi0[0] + u.uz.values()[i] * xi0[1];
        return std::pair{d, max_speed(u)};
    };
    double t = t0;
    while (t < T - 1e-14 * std::max(1.0, std::abs(T))) {
        auto [k1, umax] = tendency(s, t);
        double h = std::min(opt.dt, umax > 0.0 ? opt.cfl * grid.min_spacing() / umax : infinity);
        h = std::min(h, T - t);
        AxiField s2 = s;
        s2.axpy(0.5 * h, k1);
        const AxiField k2 = tendency(s2, t + 0.5 * h).first;
        AxiField s3 = s;
        s3.axpy(0.5 * h, k2);
        const AxiField k3 = tendency(s3, t + 0.5 * h).first;
        AxiField s4 = s;
        s4.axpy(h, k3);
        const AxiField k4 = tendency(s4, t + h).first;
        s.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
        t += h;
    }
    const AxiField sr = d_r(s), sz = d_z(s);
    std::vector<std::pair<double, double>> seeds;
    for (int k = 0; k < grid.nz; k += opt.seed_stride)
        for (int j = 0; j < grid.nr; j += opt.seed_stride) {
            const double r = grid.r(j);
            if (r >= opt.r_lo * grid.r_max && r <= opt.r_hi * grid.r_max) seeds.emplace_back(r, grid.z(k));
        }
    std::vector<double> err(seeds.size(), 0.0);
    parallel_for(seeds.size(), [&](std::size_t i) {
        BicharBundle b;
        b.t = t0;
        b.r = seeds[i].first;
        b.z = seeds[i].second;
        b.add_xi(xi0);
        const BundleTrajectory tr = integrate_bundle(b, p, T, {opt.dt, 1 << 30});
        if (tr.status != TrajectoryStatus::completed) return;
        const BicharBundle& e = tr.final();
        const double gr = xi0[0] + eval_cubic(sr, e.r, e.z), gz = xi0[1] + eval_cubic(sz, e.r, e.z);
        err[i] = std::hypot(e.xi[0][0] - gr, e.xi[0][1] - gz) / norm(e.xi[0]);
    });
    double m = 0.0;
    for (double v : err) m = std::max(m, v);
    return m;
}

} // namespace axieuler
