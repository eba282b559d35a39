#pragma once

#include "axieuler/bichar.hpp"
#include "axieuler/euler.hpp"
#include "axieuler/norms.hpp"
#include "axieuler/operators.hpp"
#include "axieuler/provider.hpp"
#include "axieuler/rational.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace axieuler {

/// Weight exponents (a, b), regularity s and the integrability exponent q of r u^init.
struct CriterionParams {
    Rational a{1, 2};
    Rational b{1, 2};
    double s = 3.5;
    std::optional<double> q;

    /// (3 - a) / (b + 2): the exponent of the generalised criterion and of the
    /// omega_theta / r bound.
    Rational theta() const { return (Rational(3) - a) / (b + Rational(2)); }
    /// max((2 - a), (3 - a)) / (b + 2): exponent for the whole-space bound.
    Rational theta_whole_space() const {
        const Rational t2 = (Rational(2) - a) / (b + Rational(2));
        const Rational t3 = theta();
        return t2 < t3 ? t3 : t2;
    }
    /// Exclusive upper bound 3 (a + b) / (b + 2) on q.
    Rational q_bound() const { return Rational(3) * (a + b) / (b + Rational(2)); }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        const double cap = s - 2.5;
        if (!(s > 2.5)) v.push_back("s > 5/2");
        if (a + b < Rational(1)) v.push_back("a + b >= 1 (a + b = " + (a + b).str() + ")");
        if (a > Rational(2)) v.push_back("a <= 2 (a = " + a.str() + ")");
        if (a < Rational(0) || !(a.to_double() < cap)) v.push_back("a in [0, s - 5/2) (a = " + a.str() + ")");
        if (b < Rational(0) || !(b.to_double() < cap)) v.push_back("b in [0, s - 5/2) (b = " + b.str() + ")");
        if (b + Rational(2) != Rational(0)) {
            const Rational t = theta();
            if (t < Rational(0) || t > Rational(1)) v.push_back("theta = (3 - a)/(b + 2) in [0, 1] (theta = " + t.str() + ")");
            if (q && !(*q < q_bound().to_double()))
                v.push_back("q < 3 (a + b)/(b + 2) = " + q_bound().str() + " (q = " + std::to_string(*q) + ")");
        }
        return v;
    }

    void validate() const {
        const auto v = violations();
        if (v.empty()) return;
        std::string msg = "CriterionParams: violated constraints:";
        for (const auto& s_ : v) msg += " [" + s_ + "]";
        throw ValidationError(msg);
    }
};

namespace detail {

inline void check_vorticity_pair(const AxiField& omega_r, const AxiField& omega_z, const char* who) {
    if (!(omega_r.grid() == omega_z.grid())) throw ValidationError(std::string(who) + ": grid mismatch");
    if (!omega_r.all_finite() || !omega_z.all_finite()) throw ValidationError(std::string(who) + ": non-finite vorticity");
}

} // namespace detail

/// |omega~| = sqrt(omega_r^2 + omega_z^2) on the grid.
inline AxiField toroidal_magnitude(const AxiField& omega_r, const AxiField& omega_z) {
    const AxiGrid& g = omega_r.grid();
    AxiField m(g, Parity::even);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) m(j, k) = std::hypot(omega_r(j, k), omega_z(j, k));
    return m;
}

/// max |omega~| + (max r^{-1/2} |omega~|)^2.
inline double bkm_toroidal_integrand(const AxiField& omega_r, const AxiField& omega_z) {
    detail::check_vorticity_pair(omega_r, omega_z, "bkm_toroidal_integrand");
    const AxiField m = toroidal_magnitude(omega_r, omega_z);
    const double s = weighted_sup(m, 0.5).value;
    return weighted_sup(m, 0.0).value + s * s;
}

struct GeneralizedIntegrand {
    double r = 0.0;  ///< (max r^{-a} |omega_r|)^{1 + theta}
    double z = 0.0;  ///< (max r^{-b} |omega_z|)^{1 + theta}
    SupLocation r_at;
    SupLocation z_at;
};

inline GeneralizedIntegrand generalized_integrand(const AxiField& omega_r, const AxiField& omega_z,
                                                  const CriterionParams& params) {
    params.validate();
    detail::check_vorticity_pair(omega_r, omega_z, "generalized_integrand");
    const double e = 1.0 + params.theta().to_double();
    GeneralizedIntegrand out;
    out.r_at = weighted_sup(omega_r, params.a.to_double());
    out.z_at = weighted_sup(omega_z, params.b.to_double());
    out.r = std::pow(out.r_at.value, e);
    out.z = std::pow(out.z_at.value, e);
    return out;
}

struct CriterionSample {
    double bkm = 0.0;
    double gen_r = 0.0;
    double gen_z = 0.0;
};

inline CriterionSample criterion_sample(const AxiVectorField& u, const CriterionParams& params) {
    const Vorticity w = vorticity(u);
    const auto gi = generalized_integrand(w.omega_r, w.omega_z, params);
    return {bkm_toroidal_integrand(w.omega_r, w.omega_z), gi.r, gi.z};
}

/// Running trapezoid integrals of the criterion integrands.
struct CriterionLedger {
    std::vector<double> t;
    std::vector<CriterionSample> integrand;
    std::vector<CriterionSample> running;

    bool empty() const { return t.empty(); }
    const CriterionSample& total() const {
        if (running.empty()) throw RuntimeFailure("CriterionLedger: empty ledger");
        return running.back();
    }
    /// Finite running integrals so far.
    bool bounded_so_far() const {
        if (running.empty()) return true;
        const auto& r = running.back();
        return std::isfinite(r.bkm) && std::isfinite(r.gen_r) && std::isfinite(r.gen_z);
    }
    std::string verdict() const { return bounded_so_far() ? "bounded_so_far" : "unbounded"; }
};

inline void accumulate_in_place(CriterionLedger& L, double t, const CriterionSample& v) {
    if (!std::isfinite(t)) throw ValidationError("accumulate: non-finite time");
    if (!L.t.empty() && !(t > L.t.back())) throw ValidationError("accumulate: times must be strictly increasing");
    if (!(v.bkm >= 0.0) || !(v.gen_r >= 0.0) || !(v.gen_z >= 0.0))
        throw ValidationError("accumulate: integrands must be non-negative");
    CriterionSample run{};
    if (!L.t.empty()) {
        const double h = 0.5 * (t - L.t.back());
        const auto& p = L.integrand.back();
        const auto& r = L.running.back();
        run = {r.bkm + h * (p.bkm + v.bkm), r.gen_r + h * (p.gen_r + v.gen_r), r.gen_z + h * (p.gen_z + v.gen_z)};
    }
    L.t.push_back(t);
    L.integrand.push_back(v);
    L.running.push_back(run);
}

inline CriterionLedger accumulate(CriterionLedger L, double t, const CriterionSample& v) {
    accumulate_in_place(L, t, v);
    return L;
}

// ---------------------------------------------------------------------------
// Hardy inequality
// ---------------------------------------------------------------------------

struct HardyReport {
    double lhs = 0.0;              ///< ||u_theta / r^{b+1}||_p
    double rhs = 0.0;              ///< ||omega_z / r^b||_p
    double ratio = 0.0;            ///< lhs / rhs (0 when both vanish)
    double constant = 0.0;         ///< 1 / |b + 1 - d/p|
    double sharp_constant = 0.0;   ///< 1 / |b + 2 - d/p|
    double dimension = 2.0;
    SupLocation lhs_at;            ///< largest pointwise contribution to lhs
    SupLocation rhs_at;
    double axis_exponent = 0.0;    ///< local integrability exponent at the axis (> 0 integrable)
    bool hypothesis_ok = true;

    bool holds(double tol) const { return hypothesis_ok && ratio <= constant * (1.0 + tol); }
};

namespace detail {

// Local power m in |f| ~ r^m from the first two cell columns.
inline double axis_power(const AxiField& f) {
    const AxiGrid& g = f.grid();
    if (g.nr < 2) return infinity;
    double m0 = 0.0, m1 = 0.0;
    for (int k = 0; k < g.nz; ++k) {
        m0 = std::max(m0, std::abs(f(0, k)));
        m1 = std::max(m1, std::abs(f(1, k)));
    }
    if (m1 == 0.0 && m0 == 0.0) return infinity;
    if (m0 == 0.0) return infinity;
    if (m1 == 0.0) return -infinity;
    return std::log(m1 / m0) / std::log(g.r(1) / g.r(0));
}

inline SupLocation weighted_contribution_max(const AxiField& f, double sigma, double p, Measure m) {
    const AxiGrid& g = f.grid();
    SupLocation s;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            double v = std::pow(g.r(j), -sigma) * std::abs(f(j, k));
            if (!std::isinf(p)) v = std::pow(v, p) * (m == Measure::three_d ? g.r(j) : 1.0);
            if (v > s.value) s = {v, g.r(j), g.z(k)};
        }
    return s;
}

} // namespace detail

/// Both sides of ||u_theta / r^{b+1}||_p <= C ||omega_z / r^b||_p.
///
/// The three_d measure (r dr dz) corresponds to the planar Hardy inequality
/// in (r, theta), d = 2; the toroidal measure dr dz to d = 1. A field whose
/// local axis behaviour makes either side non-integrable is flagged instead
/// of compared (grid values stay finite but grow under refinement).
inline HardyReport hardy_check(const AxiField& u_theta, const AxiField& omega_z, double b, double p,
                               Measure measure = Measure::three_d) {
    if (!(u_theta.grid() == omega_z.grid())) throw ValidationError("hardy_check: grid mismatch");
    if (!u_theta.all_finite() || !omega_z.all_finite()) throw ValidationError("hardy_check: non-finite input");
    if (!(p >= 1.0)) throw ValidationError("hardy_check: p must lie in [1, inf]");
    if (!std::isfinite(b)) throw ValidationError("hardy_check: b must be finite");
    HardyReport rep;
    rep.dimension = measure == Measure::three_d ? 2.0 : 1.0;
    const double dp = std::isinf(p) ? 0.0 : rep.dimension / p;
    if (std::abs(b + 1.0 - dp) < 1e-12) {
        std::ostringstream os;
        os << "hardy_check: b = " << b << " is the excluded value d/p - 1";
        throw ValidationError(os.str());
    }
    rep.constant = 1.0 / std::abs(b + 1.0 - dp);
    rep.sharp_constant = std::abs(b + 2.0 - dp) > 0.0 ? 1.0 / std::abs(b + 2.0 - dp) : infinity;

    const NormSpec L{p, b + 1.0, measure}, R{p, b, measure};
    rep.lhs = weighted_norm(u_theta, L);
    rep.rhs = weighted_norm(omega_z, R);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? infinity : 0.0);
    rep.lhs_at = detail::weighted_contribution_max(u_theta, b + 1.0, p, measure);
    rep.rhs_at = detail::weighted_contribution_max(omega_z, b, p, measure);

    // |u_theta| ~ r^m near the axis: |u/r^{b+1}|^p r^{d-1} is integrable iff (m-b-1) p + d > 0.
    const double m = detail::axis_power(u_theta);
    rep.axis_exponent = std::isinf(p) ? m - b - 1.0 : (m - b - 1.0) * p + rep.dimension;
    if (std::isnan(rep.axis_exponent)) rep.axis_exponent = infinity;
    rep.hypothesis_ok = rep.axis_exponent > -0.25;
    return rep;
}

/// Same, with omega_z = d_r u_theta + u_theta / r from the grid operators.
inline HardyReport hardy_check(const AxiField& u_theta, double b, double p, Measure measure = Measure::three_d) {
    AxiField ut = u_theta;
    ut.set_parity(Parity::odd);
    AxiField wz = d_r(ut);
    const AxiGrid& g = ut.grid();
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) wz(j, k) += ut(j, k) / g.r(j);
    return hardy_check(ut, wz, b, p, measure);
}

// ---------------------------------------------------------------------------
// Run audits
// ---------------------------------------------------------------------------

/// Snapshots of one run, tagged with the identifier of the base flow.
struct RunHistory {
    std::string flow_id;
    std::vector<FlowState> states;

    double t_begin() const { return states.front().t; }
    double t_end() const { return states.back().t; }

    void check(const char* who) const {
        if (states.empty()) throw ValidationError(std::string(who) + ": history has no snapshots");
        for (std::size_t i = 1; i < states.size(); ++i)
            if (!(states[i].t > states[i - 1].t))
                throw ValidationError(std::string(who) + ": snapshot times must increase");
    }
};

/// Records every `stride`-th step of a run (and both ends).
inline RunHistory record_history(EulerSolver& solver, FlowState s0, double t_end, double dt_max, int stride,
                                 const std::string& flow_id) {
    if (stride < 1) throw ValidationError("record_history: stride must be >= 1");
    RunHistory h{flow_id, {s0}};
    int count = 0;
    FlowState end = solver.advance(std::move(s0), t_end, dt_max, [&](const FlowState& st) {
        if (++count % stride == 0) h.states.push_back(st);
    });
    if (end.t > h.states.back().t) h.states.push_back(std::move(end));
    return h;
}

/// Velocity provider over the snapshots of a history.
inline SnapshotProvider history_provider(const RunHistory& h) {
    h.check("history_provider");
    SnapshotProvider p(h.flow_id);
    for (const auto& s : h.states) p.push(s);
    return p;
}

struct OmegaThetaAudit {
    std::vector<double> t;
    std::vector<double> lhs;        ///< ||omega_theta / r||_p at t
    std::vector<double> rhs;        ///< initial norm + C * integral up to t
    std::vector<double> integrand;  ///< ||omega_r / r^a||_inf ||omega_z / r^b||_inf^theta
    double constant = 0.0;          ///< C
    double theta = 0.0;
    double min_slack = 0.0;         ///< min over t > t0 of (rhs - lhs) / rhs

    bool holds(double tol = 1e-12) const {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (lhs[i] > rhs[i] * (1.0 + tol) + 1e-300) return false;
        return true;
    }
};

/// ||omega_theta(T)/r||_p <= ||omega_theta^0/r||_p + C int ||omega_r/r^a||_inf ||omega_z/r^b||_inf^theta dt,
/// C = 2 / |b + 1 - 2/p| ||r u_theta^0||_{p(1-theta)}^{1-theta}.
inline OmegaThetaAudit omega_theta_bound_audit(const RunHistory& h, const CriterionParams& params, double p) {
    h.check("omega_theta_bound_audit");
    params.validate();
    if (!(p >= 1.0) || std::isinf(p)) throw ValidationError("omega_theta_bound_audit: p must lie in [1, inf)");
    const double a = params.a.to_double(), b = params.b.to_double();
    const double theta = params.theta().to_double();
    const double den = std::abs(b + 1.0 - 2.0 / p);
    if (den < 1e-12) throw ValidationError("omega_theta_bound_audit: b = 2/p - 1 is excluded");
    double factor = 1.0;
    if (params.theta() != Rational(1)) {
        const double pe = p * (1.0 - theta);
        if (!(pe >= 1.0))
            throw ValidationError("omega_theta_bound_audit: p (1 - theta) must be >= 1 unless theta = 1");
        factor = std::pow(weighted_norm(h.states.front().gamma, NormSpec{pe, 0.0, Measure::three_d}), 1.0 - theta);
    }
    OmegaThetaAudit out;
    out.theta = theta;
    out.constant = 2.0 / den * factor;
    const NormSpec chi_norm{p, 0.0, Measure::three_d};
    const double lhs0 = weighted_norm(h.states.front().chi, chi_norm);
    double acc = 0.0;
    out.min_slack = h.states.size() > 1 ? infinity : 0.0;
    for (std::size_t i = 0; i < h.states.size(); ++i) {
        const FlowState& s = h.states[i];
        const Vorticity w = vorticity(s.u);
        const double f = weighted_sup(w.omega_r, a).value * std::pow(weighted_sup(w.omega_z, b).value, theta);
        if (i > 0) acc += 0.5 * (s.t - out.t.back()) * (f + out.integrand.back());
        out.t.push_back(s.t);
        out.integrand.push_back(f);
        out.lhs.push_back(weighted_norm(s.chi, chi_norm));
        out.rhs.push_back(lhs0 + out.constant * acc);
        const double r = out.rhs.back();
        if (i > 0)
            out.min_slack = std::min(out.min_slack, r > 0.0 ? (r - out.lhs.back()) / r : (out.lhs.back() > 0.0 ? -infinity : 0.0));
    }
    return out;
}

struct AmplificationOptions {
    EnsembleSpec ensemble{};
    double tol = 1e-3;     ///< relative tolerance on the proof-variant comparison
    int enrichment_rounds = 2;
};

struct AmplificationAudit {
    double a = 0.0;
    double T = 0.0;
    double lhs = 0.0;              ///< ||r^{-a} omega~(T)||_inf
    SupLocation lhs_at;
    double init_weighted = 0.0;    ///< ||r^{-a} omega~^0||_inf
    double init_plain = 0.0;       ///< ||omega~^0||_inf
    double beta = 0.0;
    double rhs_proof = 0.0;        ///< init_weighted * beta^{2+a}
    double rhs_statement = 0.0;    ///< init_plain * beta^{2+a}
    int rounds = 0;                ///< enrichment rounds used
    std::size_t seeds = 0;
    bool holds_proof = false;
    bool holds_statement = false;
    double slack_proof = 0.0;      ///< 1 - lhs / rhs_proof
};

/// ||omega~(T)/r^a||_inf against ||omega~^0||_inf beta_sigma(T)^{2+a}, in the
/// weighted (||r^{-a} omega~^0||_inf) and unweighted forms.
inline AmplificationAudit amplification_audit(const RunHistory& h, const VelocityProvider& base, double a, double T,
                                              const AmplificationOptions& opt = {}) {
    h.check("amplification_audit");
    if (base.flow_id() != h.flow_id)
        throw ValidationError("amplification_audit: base flow '" + base.flow_id() + "' does not match history '" +
                              h.flow_id + "'");
    if (!(a >= 0.0)) throw ValidationError("amplification_audit: a must be >= 0");
    if (opt.enrichment_rounds < 0) throw ValidationError("amplification_audit: enrichment_rounds must be >= 0");
    const double t0 = h.t_begin();
    const FlowState* sT = nullptr;
    for (const auto& s : h.states)
        if (std::abs(s.t - T) <= 1e-12 * std::max(1.0, std::abs(T))) sT = &s;
    if (!sT) throw ValidationError("amplification_audit: no snapshot at T");
    if (!(T > t0)) throw ValidationError("amplification_audit: T must exceed the initial time");

    const Vorticity w0 = vorticity(h.states.front().u), wT = vorticity(sT->u);
    const AxiField m0 = toroidal_magnitude(w0.omega_r, w0.omega_z);
    const AxiField mT = toroidal_magnitude(wT.omega_r, wT.omega_z);
    AmplificationAudit out;
    out.a = a;
    out.T = T;
    out.lhs_at = weighted_sup(mT, a);
    out.lhs = out.lhs_at.value;
    out.init_weighted = weighted_sup(m0, a).value;
    out.init_plain = weighted_sup(m0, 0.0).value;

    EnsembleSpec e = opt.ensemble;
    for (int round = 0;; ++round) {
        const BetaEstimate be = beta_sigma(e, base, t0, std::vector<double>{T});
        out.beta = std::max(out.beta, be.beta.back());
        out.seeds = be.seeds;
        out.rounds = round;
        const double amp = std::pow(out.beta, 2.0 + a);
        out.rhs_proof = out.init_weighted * amp;
        out.rhs_statement = out.init_plain * amp;
        out.holds_proof = out.lhs <= out.rhs_proof * (1.0 + opt.tol);
        if (out.holds_proof || round >= opt.enrichment_rounds) break;
        e.positions *= 4;
        e.angles *= 2;
    }
    out.holds_statement = out.lhs <= out.rhs_statement * (1.0 + opt.tol);
    out.slack_proof = out.rhs_proof > 0.0 ? 1.0 - out.lhs / out.rhs_proof : (out.lhs > 0.0 ? -infinity : 0.0);
    return out;
}

} // namespace axieuler
