#pragma once

#include "axieuler/norms.hpp"
#include "axieuler/operators.hpp"
#include "axieuler/rational.hpp"
#include "axieuler/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace axieuler {

/// Lebesgue exponent p in [1, inf], exact.
class LpExponent {
public:
    LpExponent(Rational p) : p_(p), inf_(false) {
        if (p < Rational(1)) throw ValidationError("LpExponent: p must be >= 1 (p = " + p.str() + ")");
    }
    LpExponent(std::int64_t p) : LpExponent(Rational(p)) {}
    static LpExponent infinity() { return LpExponent(); }
    /// Doubles are read as exact fractions; +inf maps to infinity().
    static LpExponent from_double(double p) {
        if (std::isinf(p) && p > 0) return infinity();
        if (!(p >= 1.0)) throw ValidationError("LpExponent: p must be >= 1");
        return LpExponent(Rational::approximate(p));
    }

    bool is_infinite() const { return inf_; }
    const Rational& value() const {
        if (inf_) throw ValidationError("LpExponent: infinite exponent has no finite value");
        return p_;
    }
    /// c / p, with c / inf = 0.
    Rational over(const Rational& c) const { return inf_ ? Rational(0) : c / p_; }
    double to_double() const { return inf_ ? std::numeric_limits<double>::infinity() : p_.to_double(); }
    std::string str() const { return inf_ ? "inf" : p_.str(); }

private:
    LpExponent() : p_(1), inf_(true) {}
    Rational p_;
    bool inf_;
};

/// 1 + 4/p: a self-similar profile is unstable in L^p when alpha / beta is below it.
inline Rational threshold_corollary(const LpExponent& p) { return Rational(1) + p.over(Rational(4)); }

/// 1 / (3/2 + 4/p): the beta threshold under the balance alpha + beta / 2 = 1.
inline Rational threshold_luo_hou(const LpExponent& p) {
    return Rational(1) / (Rational(3, 2) + p.over(Rational(4)));
}

/// Time-indexed centre x_t of the rescaling window, linear between samples.
struct CenterPath {
    std::vector<double> t;
    std::vector<double> r;
    std::vector<double> z;

    static CenterPath fixed(double r0, double z0) { return {{0.0}, {r0}, {z0}}; }

    void validate() const {
        if (t.empty() || t.size() != r.size() || t.size() != z.size())
            throw ValidationError("CenterPath: t, r and z must be non-empty and of equal length");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1])) throw ValidationError("CenterPath: times must increase");
    }
    std::pair<double, double> at(double s) const {
        if (t.size() == 1 || s <= t.front()) return {r.front(), z.front()};
        if (s >= t.back()) return {r.back(), z.back()};
        const auto it = std::upper_bound(t.begin(), t.end(), s);
        const std::size_t i = std::size_t(it - t.begin()) - 1;
        const double w = (s - t[i]) / (t[i + 1] - t[i]);
        return {r[i] + w * (r[i + 1] - r[i]), z[i] + w * (z[i + 1] - z[i])};
    }
};

struct ScalingParams {
    double alpha = 0.0;
    double beta = 1.0;
    double T_star = 1.0;
    CenterPath center = CenterPath::fixed(0.5, 0.5);
    double p = 2.0;
    Measure measure = Measure::toroidal;  ///< measure of the reported perturbation norms

    void validate() const {
        if (!std::isfinite(alpha)) throw ValidationError("ScalingParams: alpha must be finite");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("ScalingParams: beta must be > 0");
        if (!std::isfinite(T_star)) throw ValidationError("ScalingParams: T_star must be finite");
        if (!(p >= 1.0)) throw ValidationError("ScalingParams: p must be >= 1");
        center.validate();
    }
    /// T* - t, after checking t < T*.
    double gap(double t) const {
        if (!(t < T_star)) throw ValidationError("ScalingParams: t must be < T_star");
        return T_star - t;
    }
};

/// Rectangle of profile coordinates y = (y_r, y_z) sampled at cell centres.
struct ProfileWindow {
    double yr_min = -1.0, yr_max = 1.0;
    double yz_min = -1.0, yz_max = 1.0;
    int nr = 32, nz = 32;

    void validate() const {
        if (!(yr_max > yr_min) || !(yz_max > yz_min)) throw ValidationError("ProfileWindow: empty window");
        if (nr < 2 || nz < 2) throw ValidationError("ProfileWindow: needs at least 2 x 2 samples");
    }
    double dyr() const { return (yr_max - yr_min) / nr; }
    double dyz() const { return (yz_max - yz_min) / nz; }
    double yr(int i) const { return yr_min + (i + 0.5) * dyr(); }
    double yz(int k) const { return yz_min + (k + 0.5) * dyz(); }
    std::size_t size() const { return std::size_t(nr) * nz; }
    std::size_t idx(int i, int k) const { return std::size_t(i) + std::size_t(nr) * k; }
};

/// U(t, y) on a window; missing samples (outside the physical domain) are NaN.
struct ScaledProfile {
    double t = 0.0;
    ProfileWindow window;
    std::vector<double> ur, utheta, uz;
    std::vector<unsigned char> valid;
    double coverage = 0.0;    ///< fraction of in-domain samples
    double curl_sup = 0.0;    ///< (T* - t)^{alpha + beta} max |omega| over the covered window
    bool partial() const { return coverage < 1.0; }
};

namespace detail {

inline bool in_radius(const AxiGrid& g, double r) { return r > 0.0 && r <= g.r_max; }

} // namespace detail

/// U(t, y) = (T* - t)^alpha u(t, x_t + (T* - t)^beta y), interpolated with the
/// C2 spline of each component.
inline ScaledProfile rescale_snapshot(const AxiVectorField& u, const ScalingParams& sp, double t,
                                      const ProfileWindow& w) {
    sp.validate();
    w.validate();
    const double s = sp.gap(t);
    const AxiGrid& g = u.grid();
    AxiField ur = u.ur, ut = u.utheta, uz = u.uz;
    ur.set_parity(Parity::odd);
    ut.set_parity(Parity::odd);
    uz.set_parity(Parity::even);
    const CubicSpline2D Sr(ur), St(ut), Sz(uz);
    const Vorticity om = vorticity(u);
    const AxiField mag = [&] {
        AxiField m(g, Parity::even);
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.nr; ++j)
                m(j, k) = std::sqrt(om.omega_r(j, k) * om.omega_r(j, k) + om.omega_theta(j, k) * om.omega_theta(j, k) +
                                    om.omega_z(j, k) * om.omega_z(j, k));
        return m;
    }();
    const CubicSpline2D Sw(mag);

    const auto [rc, zc] = sp.center.at(t);
    const double amp = std::pow(s, sp.alpha), len = std::pow(s, sp.beta);
    ScaledProfile out;
    out.t = t;
    out.window = w;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.ur.assign(w.size(), nan);
    out.utheta.assign(w.size(), nan);
    out.uz.assign(w.size(), nan);
    out.valid.assign(w.size(), 0);
    std::size_t covered = 0;
    double wmax = 0.0;
    for (int k = 0; k < w.nz; ++k)
        for (int i = 0; i < w.nr; ++i) {
            const double r = rc + len * w.yr(i), z = zc + len * w.yz(k);
            if (!detail::in_radius(g, r)) continue;
            const std::size_t q = w.idx(i, k);
            out.ur[q] = amp * Sr(r, z);
            out.utheta[q] = amp * St(r, z);
            out.uz[q] = amp * Sz(r, z);
            out.valid[q] = 1;
            wmax = std::max(wmax, std::abs(Sw(r, z)));
            ++covered;
        }
    out.coverage = double(covered) / double(w.size());
    out.curl_sup = std::pow(s, sp.alpha + sp.beta) * wmax;
    return out;
}

/// Inverse of rescale_snapshot: u(t, x) = (T* - t)^{-alpha} U(t, (x - x_t) / (T* - t)^beta)
/// on the cells of `g` whose image lies inside the window (bilinear in y);
/// other cells are NaN.
inline AxiVectorField unrescale_profile(const ScaledProfile& P, const ScalingParams& sp, const AxiGrid& g) {
    sp.validate();
    const double s = sp.gap(P.t);
    const auto [rc, zc] = sp.center.at(P.t);
    const double amp = std::pow(s, -sp.alpha), len = std::pow(s, sp.beta);
    const ProfileWindow& w = P.window;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    AxiVectorField out(g);
    auto lerp = [&](const std::vector<double>& f, double yr, double yz) {
        const double a = (yr - w.yr_min) / w.dyr() - 0.5, b = (yz - w.yz_min) / w.dyz() - 0.5;
        if (a < 0.0 || b < 0.0 || a > w.nr - 1 || b > w.nz - 1) return nan;
        const int i = std::min(int(a), w.nr - 2), k = std::min(int(b), w.nz - 2);
        const double x = a - i, y = b - k;
        const double v00 = f[w.idx(i, k)], v10 = f[w.idx(i + 1, k)], v01 = f[w.idx(i, k + 1)], v11 = f[w.idx(i + 1, k + 1)];
        return (1 - y) * ((1 - x) * v00 + x * v10) + y * ((1 - x) * v01 + x * v11);
    };
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double yr = (g.r(j) - rc) / len, yz = (g.z(k) - zc) / len;
            out.ur(j, k) = amp * lerp(P.ur, yr, yz);
            out.utheta(j, k) = amp * lerp(P.utheta, yr, yz);
            out.uz(j, k) = amp * lerp(P.uz, yr, yz);
        }
    return out;
}

struct ScaledSeries {
    std::vector<double> t;
    std::vector<double> value;
};

/// Lambda_p(t) = (T* - t)^{alpha - 2 beta / p} lambda_p(t).
inline ScaledSeries lambda_scaled(const ScaledSeries& lambda, const ScalingParams& sp) {
    sp.validate();
    if (lambda.t.size() != lambda.value.size()) throw ValidationError("lambda_scaled: series lengths differ");
    const double e = sp.alpha - (std::isinf(sp.p) ? 0.0 : 2.0 * sp.beta / sp.p);
    ScaledSeries out{lambda.t, {}};
    for (std::size_t i = 0; i < lambda.t.size(); ++i) out.value.push_back(std::pow(sp.gap(lambda.t[i]), e) * lambda.value[i]);
    return out;
}

/// lambda_p from Lambda_p.
inline ScaledSeries lambda_unscaled(const ScaledSeries& Lambda, const ScalingParams& sp) {
    const ScaledSeries one = lambda_scaled(ScaledSeries{Lambda.t, std::vector<double>(Lambda.t.size(), 1.0)}, sp);
    ScaledSeries out{Lambda.t, {}};
    for (std::size_t i = 0; i < Lambda.t.size(); ++i) out.value.push_back(Lambda.value[i] / one.value[i]);
    return out;
}

struct ProfileFloor {
    double value = 0.0;        ///< min of ||curl U||_inf over the trailing window
    std::size_t samples = 0;
    bool positive = false;     ///< hypothesis of the instability corollary holds on the data
};

/// Trailing-window minimum of ||curl U(t)||_inf (`fraction` of the time span).
inline ProfileFloor profile_floor(const std::vector<double>& t, const std::vector<double>& curl_sup,
                                  double fraction = 0.25, double floor_tol = 1e-12) {
    if (t.size() < 2 || t.size() != curl_sup.size())
        throw ValidationError("profile_floor: needs at least two snapshots with matching values");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("profile_floor: fraction must lie in (0, 1]");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ValidationError("profile_floor: times must increase");
    const double start = t.back() - fraction * (t.back() - t.front());
    ProfileFloor out;
    out.value = infinity;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= start - 1e-14 * std::abs(t.back())) {
            out.value = std::min(out.value, curl_sup[i]);
            ++out.samples;
        }
    out.positive = out.value > floor_tol;
    return out;
}

inline ProfileFloor profile_floor(const std::vector<ScaledProfile>& series, double fraction = 0.25) {
    std::vector<double> t, c;
    for (const auto& p : series) {
        t.push_back(p.t);
        c.push_back(p.curl_sup);
    }
    return profile_floor(t, c, fraction);
}

enum class FitStatus { ok, no_fit };

struct BlowupFit {
    FitStatus status = FitStatus::no_fit;
    double T_star = 0.0;
    double rate = 0.0;       ///< y ~ A (T* - t)^{-rate}
    double amplitude = 0.0;
    double residual = 0.0;   ///< rms of the log residual
    std::string reason;
};

namespace detail {

// Least squares of log y = c - rate log(T - t) at fixed T; returns the SSE.
inline double fit_at(const std::vector<double>& t, const std::vector<double>& ly, double T, double& c, double& rate) {
    const std::size_t n = t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -std::log(T - t[i]);
        sx += x;
        sy += ly[i];
        sxx += x * x;
        sxy += x * ly[i];
    }
    const double den = n * sxx - sx * sx;
    rate = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    c = (sy - rate * sx) / n;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - c + rate * std::log(T - t[i]);
        sse += e * e;
    }
    return sse;
}

} // namespace detail

/// Fits y(t) ~ A (T* - t)^{-rate} by least squares in log y, minimising over T*
/// with the amplitude and rate solved exactly at each T*.
inline BlowupFit blowup_fit(const std::vector<double>& t, const std::vector<double>& y, double tail_fraction = 0.25) {
    BlowupFit out;
    if (t.size() != y.size()) throw ValidationError("blowup_fit: series lengths differ");
    if (t.size() < 4) {
        out.reason = "fewer than 4 samples";
        return out;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw ValidationError("blowup_fit: non-finite sample");
        if (!(y[i] > 0.0)) throw ValidationError("blowup_fit: values must be positive");
        if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("blowup_fit: times must increase");
    }
    const std::size_t n = t.size();
    const std::size_t tail = std::max<std::size_t>(3, std::size_t(std::ceil(tail_fraction * n)));
    for (std::size_t i = n - std::min(tail, n) + 1; i < n; ++i)
        if (!(y[i] > y[i - 1])) {
            out.reason = "tail is not increasing";
            return out;
        }
    std::vector<double> ly(n);
    for (std::size_t i = 0; i < n; ++i) ly[i] = std::log(y[i]);
    const double span = t.back() - t.front();
    double c = 0, rate = 0;
    // log-spaced scan of the gap T* - t_last, then golden section on the best bracket
    const int scan = 400;
    const double lo = std::log(1e-8 * span), hi = std::log(1e4 * span);
    std::vector<double> sse(scan + 1);
    int best = 0;
    for (int i = 0; i <= scan; ++i) {
        sse[i] = detail::fit_at(t, ly, t.back() + std::exp(lo + (hi - lo) * i / scan), c, rate);
        if (sse[i] < sse[best]) best = i;
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / scan, b = lo + (hi - lo) * std::min(scan, best + 1) / scan;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double x) { return detail::fit_at(t, ly, t.back() + std::exp(x), c, rate); };
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a), f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    const double gap = std::exp(0.5 * (a + b));
    const double e = detail::fit_at(t, ly, t.back() + gap, c, rate);
    if (best == scan || !(rate > 0.0)) {
        out.reason = best == scan ? "no finite blow-up time fits the data" : "fitted rate is not positive";
        return out;
    }
    out.status = FitStatus::ok;
    out.T_star = t.back() + gap;
    out.rate = rate;
    out.amplitude = std::exp(c);
    out.residual = std::sqrt(e / n);
    return out;
}

} // namespace axieuler
