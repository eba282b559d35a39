// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]

#include "axieuler/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

using namespace axieuler;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_abs_diff(const AxiField& a, const AxiField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

AxiGrid unit(int n) { return make_grid(1.0, 0.0, 1.0, n, n); }

// ---------------------------------------------------------------- 1

Outcome transport_conservation() {
    EulerSolver S(unit(256));
    const FlowState s0 = analytic_flow(S, "gaussian_swirl_ring");
    const NormSpec linf{infinity, 0.0}, l2{2.0, 0.0};
    const double E0 = kinetic_energy(s0), Gi = weighted_norm(s0.gamma, linf), G2 = weighted_norm(s0.gamma, l2);
    double dE = 0, dGi = 0, dG2 = 0;
    const auto t0 = std::chrono::steady_clock::now();
    S.advance(s0, 1.0, 1.0, [&](const FlowState& s) {
        dE = std::max(dE, std::abs(kinetic_energy(s) / E0 - 1.0));
        dGi = std::max(dGi, std::abs(weighted_norm(s.gamma, linf) / Gi - 1.0));
        dG2 = std::max(dG2, std::abs(weighted_norm(s.gamma, l2) / G2 - 1.0));
    });
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {dE <= 1e-6 && dGi <= 1e-5 && dG2 <= 1e-5 && sec < 600.0,
            fmt("energy drift %.2e (<= 1e-6), |Gamma|_inf drift %.2e, |Gamma|_2 drift %.2e (<= 1e-5), %.1fs", dE, dGi,
                dG2, sec)};
}

// ---------------------------------------------------------------- 2

double stream_error(int n) {
    const AxiGrid g = unit(n);
    const double k = 2.0 * pi;
    const AxiField chi = AxiField::sample(g, Parity::even, [&](double r, double z) {
        const double f = r * r * (1 - r) * (1 - r), fr = 2 * r * (1 - r) * (1 - 2 * r), frr = 2 - 12 * r + 12 * r * r;
        return -(frr - fr / r - k * k * f) * std::sin(k * z) / (r * r);
    });
    auto [u, psi] = recover_velocity(chi, AxiField(g, Parity::even));
    return max_abs_diff(psi, AxiField::sample(g, Parity::even, [&](double r, double z) {
                            return r * r * (1 - r) * (1 - r) * std::sin(k * z);
                        }));
}

Outcome solver_orders() {
    EulerSolver S(unit(32));
    FlowParams fp;
    fp.delta = 0.2;
    fp.chi_amplitude = 2.0;
    const FlowState s0 = analytic_flow(S, "gaussian_swirl_ring", fp);
    auto run = [&](int n) {
        FlowState s = s0;
        for (int i = 0; i < n; ++i) s = S.step(s, 0.2 / n);
        return s;
    };
    const FlowState a = run(10), b = run(20), c = run(40);
    const double tr = max_abs_diff(a.chi, b.chi) / max_abs_diff(b.chi, c.chi);
    const double sr = stream_error(64) / stream_error(128);
    return {std::abs(tr - 16.0) <= 2.0 && std::abs(sr - 4.0) <= 0.5,
            fmt("temporal ratio %.2f (16 +- 2), spatial ratio %.3f (4 +- 0.5)", tr, sr)};
}

// ---------------------------------------------------------------- 3

Outcome bichar_conservation() {
    const RigidRotationFlow rot(1.0);
    const FrozenRingFlow ring(0.5, 0.5, 0.5, 0.5, 0.2);
    const BeltramiFlow bel(0.5, 1);
    EnsembleSpec e;
    e.positions = 2500;
    e.angles = 4;
    e.r_min_seed = 0.1;
    e.r_max_seed = 0.9;
    const auto seeds = ensemble_points(e, Cylinder{});
    bool ok = true;
    std::string detail;
    for (const VelocityProvider* p : {static_cast<const VelocityProvider*>(&rot), static_cast<const VelocityProvider*>(&ring),
                                      static_cast<const VelocityProvider*>(&bel)}) {
        std::vector<double> bxi(seeds.size(), 0.0), floor(seeds.size(), infinity), xth(seeds.size(), 0.0);
        std::vector<int> done(seeds.size(), 0);
        parallel_for(seeds.size(), [&](std::size_t i) {
            BicharBundle s;
            s.r = seeds[i].r0;
            s.z = seeds[i].z0;
            const Vec2 xi = xi_at_angle(seeds[i].angle);
            s.add_xi(xi);
            const auto basis = orthonormal_complement(xi);
            s.add_b(basis[0], 0);
            s.add_b(basis[1], 0);
            const BundleTrajectory tr = integrate_bundle(s, *p, 0.5, {1e-3, 1});
            const ConservationReport r = conserved_audit(tr, *p, audit_b_dot_xi);
            bxi[i] = r.b_dot_xi;
            floor[i] = r.xi_floor;
            for (const auto& q : tr.samples) xth[i] = std::max(xth[i], std::abs(lift(q.xi[0])[1]));
            done[i] = tr.status == TrajectoryStatus::completed;
        });
        const double mb = *std::max_element(bxi.begin(), bxi.end());
        const double mf = *std::min_element(floor.begin(), floor.end());
        const double mx = *std::max_element(xth.begin(), xth.end());
        const long nd = std::count(done.begin(), done.end(), 1);
        ok = ok && mb <= 1e-8 && mf >= 1.0 - 1e-6 && mx == 0.0 && nd == long(seeds.size());
        detail += fmt("%s: |b.xi| %.1e, xi floor %.8f, |xi_theta| %.0e, %ld/%zu completed; ", p->flow_id().c_str(), mb, mf,
                      mx, nd, seeds.size());
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 4

SnapshotProvider sampled_beltrami(const AxiGrid& g, double amp, int mode) {
    const double a = bessel_j1_zero1, k = 2.0 * pi * mode, kappa = std::sqrt(a * a + k * k);
    const AxiField psi = AxiField::sample(g, Parity::even, [&](double r, double z) {
        return amp * r * std::cyl_bessel_j(1.0, a * r) * std::cos(k * z);
    });
    AxiField gamma = psi;
    gamma *= kappa;
    SnapshotProvider p(fmt("beltrami-sampled-m%d", mode));
    p.push(0.0, psi, gamma);
    return p;
}

Outcome section4_identities() {
    double worst = 0.0;
    std::string detail;
    EnsembleSpec e;
    e.positions = 8;
    e.angles = 1;
    e.r_min_seed = 0.2;
    e.r_max_seed = 0.8;
    for (int mode : {1, 2}) {
        const SnapshotProvider p = sampled_beltrami(unit(128), 0.5, mode);
        double d[3] = {0, 0, 0};
        for (const SeedPoint& s : ensemble_points(e, p.domain())) {
            const auto tr = integrate_bundle(make_audit_bundle(p, 0.0, s.r0, s.z0, 0.0), p, 0.5, {2.5e-4, 1});
            const ConservationReport r = conserved_audit(tr, p);
            d[0] = std::max(d[0], r.xi_dot_omega);
            d[1] = std::max(d[1], r.triple);
            d[2] = std::max(d[2], r.r_b_theta);
        }
        worst = std::max({worst, d[0], d[1], d[2]});
        detail += fmt("mode %d drifts xi'.w %.1e triple %.1e r b_theta %.1e; ", mode, d[0], d[1], d[2]);
    }
    const BeltramiFlow bel(1.0, 1);
    auto drift = [&](double dt) {
        return conserved_audit(integrate_bundle(make_audit_bundle(bel, 0.0, 0.35, 0.2, 0.0), bel, 0.5, {dt, 1}), bel);
    };
    const ConservationReport a = drift(0.01), b = drift(0.005);
    const double r1 = a.triple / b.triple, r2 = a.r_b_theta / b.r_b_theta;
    detail += fmt("analytic dt-halving ratios triple %.2f, r b_theta %.2f (16 +- 2)", r1, r2);
    return {worst <= 1e-6 && std::abs(r1 - 16.0) <= 2.0 && std::abs(r2 - 16.0) <= 2.0, detail};
}

// ---------------------------------------------------------------- 5

Outcome phase_consistency() {
    const FrozenRingFlow ring(0.5, 0.0, 0.5, 0.5, 0.2);
    PhaseCheckOptions opt;
    opt.dt = 2e-3;
    opt.seed_stride = 8;
    const double e64 = phase_transport_check(ring, unit(64), {1.0, 0.0}, 0.0, 0.3, opt);
    opt.seed_stride = 16;
    const double e128 = phase_transport_check(ring, unit(128), {1.0, 0.0}, 0.0, 0.3, opt);
    auto C = [&](double e, int n) { return e / (1.0 / (double(n) * n) + std::pow(opt.dt, 4)); };
    const double ratio = e64 / e128;
    return {std::abs(ratio - 4.0) <= 0.5,
            fmt("discrepancy %.3e (64^2), %.3e (128^2), ratio %.3f (4 +- 0.5), C %.3f / %.3f", e64, e128, ratio,
                C(e64, 64), C(e128, 128))};
}

// ---------------------------------------------------------------- 6

Outcome hardy() {
    std::mt19937 rng(20240517);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0, d1 = 0.0, d2 = 0.0;
    bool hyp = true;
    const int fields = 120;
    for (int f = 0; f < fields; ++f) {
        const double c0 = U(rng) - 0.5, c1 = U(rng) - 0.5, c2 = U(rng) - 0.5, ph = 2 * pi * U(rng);
        const int m = 2 + int(2 * U(rng)), wall = 2 + int(2 * U(rng)), mode = 1 + int(3 * U(rng));
        auto u = [&](double r, double z) {
            return std::pow(r, m) * std::pow(1 - r, wall) * (c0 + c1 * r + c2 * r * r + 0.6) * std::cos(2 * pi * mode * z + ph);
        };
        double ratio[3];
        int i = 0;
        for (int n : {32, 64, 128}) {
            const HardyReport h = hardy_check(AxiField::sample(unit(n), Parity::odd, u), 1.0, 2.0);
            hyp = hyp && h.hypothesis_ok;
            worst = std::max(worst, h.ratio / h.constant);
            ratio[i++] = h.ratio;
        }
        d1 = std::max(d1, std::abs(ratio[0] - ratio[1]));
        d2 = std::max(d2, std::abs(ratio[1] - ratio[2]));
    }
    return {hyp && worst <= 1.02 && d2 <= 0.5 * d1,
            fmt("%d fields, max ratio/constant %.4f (<= 1.02), quadrature change %.2e -> %.2e under refinement", fields,
                worst, d1, d2)};
}

// ---------------------------------------------------------------- 7

std::vector<FlowParams> ring_draws(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<FlowParams> out;
    for (int i = 0; i < n; ++i) {
        FlowParams fp;
        fp.r0 = 0.4 + 0.2 * U(rng);
        fp.z0 = 0.3 + 0.4 * U(rng);
        fp.delta = 0.12 + 0.08 * U(rng);
        fp.amplitude = 0.5 + U(rng);
        fp.chi_amplitude = 1.0 + 4.0 * U(rng);
        fp.perturbation = 0.3 * U(rng);
        fp.perturbation_mode = 1 + int(2 * U(rng));
        out.push_back(fp);
    }
    return out;
}

RunHistory ring_history(int n, const FlowParams& fp, double T, double dt_max = 0.01) {
    EulerSolver S(unit(n), SolverConfig{0.5, AdvectionScheme::upwind3, 0.0});
    return record_history(S, analytic_flow(S, "gaussian_swirl_ring", fp), T, dt_max, 1, "ring");
}

Outcome omega_theta_bound() {
    const CriterionParams prm{};
    bool ok = prm.theta() == Rational(1);
    double lo = infinity, change = 0.0;
    for (const FlowParams& fp : ring_draws(10, 7)) {
        const RunHistory h48 = ring_history(48, fp, 0.3, 0.005);
        const RunHistory h96 = ring_history(96, fp, 0.3, 0.005);
        ok = ok && h48.states.size() == h96.states.size();
        for (std::size_t k = 0; ok && k < h48.states.size(); ++k) ok = h48.states[k].t == h96.states[k].t;
        const double s48 = omega_theta_bound_audit(h48, prm, 2.0).min_slack;
        const double s96 = omega_theta_bound_audit(h96, prm, 2.0).min_slack;
        lo = std::min({lo, s48, s96});
        change = std::max(change, std::abs(s96 - s48) / std::max(s96, 1e-300));
    }
    ok = ok && lo >= 0.0 && change <= 0.1;
    return {ok, fmt("10 runs, common time samples, min slack %.4f (>= 0), max relative slack change 48^2 -> 96^2 %.4f (<= 0.1)", lo, change)};
}

// ---------------------------------------------------------------- 8

Outcome amplification() {
    bool ok = true;
    std::string detail;
    std::vector<FlowParams> runs(3);
    runs[0].delta = 0.15, runs[0].chi_amplitude = 5.0, runs[0].perturbation = 0.2, runs[0].perturbation_mode = 1;
    runs[1].delta = 0.15, runs[1].chi_amplitude = 3.0, runs[1].perturbation = 0.3, runs[1].perturbation_mode = 2;
    runs[2].delta = 0.12, runs[2].chi_amplitude = 5.0, runs[2].perturbation = 0.1, runs[2].perturbation_mode = 1;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunHistory h = ring_history(64, runs[i], 0.5);
        const SnapshotProvider prov = history_provider(h);
        for (double a : {0.0, 0.5}) {
            AmplificationOptions opt;
            opt.ensemble.positions = 64;
            opt.ensemble.angles = 8;
            opt.ensemble.dt = 2e-3;
            opt.ensemble.r_min_seed = 0.02;
            const AmplificationAudit am = amplification_audit(h, prov, a, h.t_end(), opt);
            ok = ok && am.holds_proof;
            detail += fmt("run %zu a=%g: %.3g <= %.3g (statement %.3g, beta %.3f, rounds %d); ", i, a, am.lhs, am.rhs_proof,
                          am.rhs_statement, am.beta, am.rounds);
        }
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 9

Outcome beta_below_lambda() {
    const BeltramiFlow bel(0.05, 1);
    WkbAuditOptions o;
    o.ensemble.positions = 64;
    o.ensemble.angles = 8;
    o.delta = 0.2;
    o.ensemble.r_min_seed = o.delta + 0.05;
    o.ensemble.r_max_seed = 1.0 - o.delta - 0.05;
    o.xi_scale = 3.0;
    o.eps = {0.1, 0.05, 0.025};
    const WkbAuditReport r = wkb_audit(bel, unit(256), 0.3, o);
    return {r.holds(0.05) && std::abs(r.residual_slope - 1.0) <= 0.15,
            fmt("beta %.4f <= lambda %.4f * 1.05, WKB residual slope %.3f (1 +- 0.15)", r.beta, r.lambda, r.residual_slope)};
}

// ---------------------------------------------------------------- 10

Outcome exact_thresholds() {
    const bool t = threshold_corollary(4) == Rational(2) && threshold_corollary(LpExponent::infinity()) == Rational(1) &&
                   threshold_luo_hou(LpExponent::infinity()) == Rational(2, 3) &&
                   threshold_luo_hou(4) == Rational::parse("0.4");
    CriterionParams half;
    half.a = Rational(1, 2);
    half.b = Rational(1, 2);
    const bool q = half.violations().empty() && half.q_bound() == Rational(6, 5);
    return {t && q, fmt("corollary(4)=%s corollary(inf)=%s luo_hou(inf)=%s luo_hou(4)=%s q_bound(1/2,1/2)=%s",
                        threshold_corollary(4).str().c_str(), threshold_corollary(LpExponent::infinity()).str().c_str(),
                        threshold_luo_hou(LpExponent::infinity()).str().c_str(), threshold_luo_hou(4).str().c_str(),
                        half.q_bound().str().c_str())};
}

// ---------------------------------------------------------------- 11

Outcome blowup() {
    struct Case {
        double T, rate, t_end;
    };
    bool ok = true;
    std::string detail;
    for (const Case c : {Case{1.0, 2.0, 0.9}, Case{2.0, 1.5, 1.8}, Case{0.5, 0.8, 0.45}}) {
        std::vector<double> t, y;
        for (int i = 0; i <= 90; ++i) {
            t.push_back(c.t_end * i / 90.0);
            y.push_back(std::pow(c.T - t.back(), -c.rate));
        }
        const BlowupFit f = blowup_fit(t, y);
        const double eT = std::abs(f.T_star / c.T - 1.0), er = std::abs(f.rate / c.rate - 1.0);
        ok = ok && f.status == FitStatus::ok && eT <= 1e-3 && er <= 1e-3;
        detail += fmt("(T*=%g, rate=%g): rel err %.1e, %.1e; ", c.T, c.rate, eT, er);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 12

bool same_bits(const AxiField& a, const AxiField& b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

Outcome reproducibility() {
    const auto root = std::filesystem::temp_directory_path() / "axieuler_acceptance_12";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);

    EulerSolver S(make_grid(1.0, -0.5, 1.5, 40, 56));
    FlowParams fp;
    fp.chi_amplitude = 3.0;
    fp.perturbation = 0.2;
    fp.z0 = 0.3;
    const FlowState s = S.advance(analytic_flow(S, "gaussian_swirl_ring", fp), 0.1, 0.01);
    write_snapshot(root / "one.axeu", Snapshot::of(s));
    const Snapshot back = read_snapshot(root / "one.axeu");
    const bool bits = back.t == s.t && back.grid == s.grid() && same_bits(back.gamma, s.gamma) &&
                      same_bits(back.chi, s.chi) && same_bits(back.ur, s.u.ur) && same_bits(back.utheta, s.u.utheta) &&
                      same_bits(back.uz, s.u.uz) && encode_snapshot(back) == read_file(root / "one.axeu");

    const std::string cfg_text = R"({
  "grid": {"nr": 24, "nz": 24},
  "flow": {"name": "gaussian_swirl_ring", "delta": 0.2, "chi_amplitude": 2, "perturbation": 0.1},
  "solver": {"t_end": 0.1, "dt_max": 0.01},
  "output": {"snapshot_stride": 3},
  "ensemble": {"positions": 8, "angles": 2, "r_min_seed": 0.3, "r_max_seed": 0.7, "dt": 0.005},
  "trace": {"audit_seeds": 2},
  "lambda": {"T": 0.05, "eps": [0.2, 0.1], "delta": 0.2, "samples": 1, "generic_members": 1},
  "scaling": {"alpha": 1, "beta": 1, "T_star": 1}
})";
    write_file(root / "run.json", cfg_text);
    const RunConfig cfg = load_config(root / "run.json");
    for (const char* dir : {"a", "b"})
        for (const auto& cmd : command_names()) run_command(cmd, cfg, (root / dir).string());
    std::size_t files = 0, differ = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root / "a")) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto other = root / "b" / std::filesystem::relative(e.path(), root / "a");
        if (!std::filesystem::exists(other) || read_file(e.path()) != read_file(other)) ++differ;
    }
    const bool manifests = std::filesystem::exists(root / "a" / "manifest_simulate.json") &&
                           std::filesystem::exists(root / "a" / "manifest_report.json");
    return {bits && manifests && differ == 0 && files > 10,
            fmt("snapshot round trip %s; %zu output files, %zu differ between identical runs", bits ? "bit-exact" : "differs",
                files, differ)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, transport_conservation}, {2, solver_orders},     {3, bichar_conservation}, {4, section4_identities},
        {5, phase_consistency},      {6, hardy},             {7, omega_theta_bound},   {8, amplification},
        {9, beta_below_lambda},      {10, exact_thresholds}, {11, blowup},             {12, reproducibility},
    };
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("criterion %2d %s  %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
