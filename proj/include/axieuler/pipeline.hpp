#pragma once

#include "axieuler/config.hpp"
#include "axieuler/io.hpp"
#include "axieuler/leray.hpp"

#include <random>

namespace axieuler {

inline constexpr int manifest_schema_version = 1;

/// Run directory plus the manifest bookkeeping of one command.
class RunContext {
public:
    RunContext(const RunConfig& cfg, std::string command, std::filesystem::path out)
        : cfg_(cfg), command_(std::move(command)), out_(std::move(out)) {
        std::filesystem::create_directories(out_);
    }

    const RunConfig& config() const { return cfg_; }
    const std::filesystem::path& dir() const { return out_; }
    std::filesystem::path path(const std::string& rel) const { return out_ / rel; }

    void write(const std::string& rel, const std::string& bytes) {
        write_file(path(rel), bytes);
        outputs_[rel] = content_hash(bytes);
    }
    void write(const std::string& rel, const CsvTable& t) { write(rel, t.str()); }
    void input(const std::filesystem::path& p) { inputs_[label(p)] = content_hash(read_file(p)); }
    void input(const std::filesystem::path& p, const std::string& bytes) { inputs_[label(p)] = content_hash(bytes); }

    /// manifest_<command>.json: config echo and content hashes, no clock data.
    void finish() const {
        nlohmann::json m;
        m["tool"] = "axieuler";
        m["schema"] = manifest_schema_version;
        m["command"] = command_;
        m["config"] = cfg_.echo;
        m["config_hash"] = content_hash(cfg_.echo.dump());
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        write_file(path("manifest_" + command_ + ".json"), m.dump(2) + "\n");
    }

private:
    std::string label(const std::filesystem::path& p) const {
        const auto rel = std::filesystem::proximate(p, out_).generic_string();
        return rel.rfind("..", 0) == 0 ? p.generic_string() : rel;
    }

    const RunConfig& cfg_;
    std::string command_;
    std::filesystem::path out_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

// ------------------------------------------------------------------ simulate

struct DiagnosticsRecord {
    double t, energy, gamma_inf, gamma_2, omega_inf;
};

inline DiagnosticsRecord diagnostics_of(const FlowState& s) {
    const Vorticity w = vorticity(s.u);
    double om = 0.0;
    const auto& g = s.grid();
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j)
            om = std::max(om, std::sqrt(w.omega_r(j, k) * w.omega_r(j, k) + w.omega_theta(j, k) * w.omega_theta(j, k) +
                                        w.omega_z(j, k) * w.omega_z(j, k)));
    return {s.t, kinetic_energy(s), weighted_norm(s.gamma, NormSpec{infinity, 0.0, Measure::three_d}),
            weighted_norm(s.gamma, NormSpec{2.0, 0.0, Measure::three_d}), om};
}

inline CsvTable diagnostics_table() { return CsvTable("diagnostics", {"t", "energy", "gamma_inf", "gamma_2", "omega_inf"}); }

inline void cmd_simulate(RunContext& ctx) {
    const RunConfig& c = ctx.config();
    EulerSolver solver(c.grid, c.solver);
    FlowState s0 = analytic_flow(solver, c.flow_name, c.flow);
    if (!s0.gamma.all_finite() || !s0.chi.all_finite() || !s0.u.ur.all_finite() || !s0.u.utheta.all_finite() ||
        !s0.u.uz.all_finite())
        throw ValidationError(c.source_file + ": flow parameters give a non-finite initial state");
    std::filesystem::remove_all(ctx.path("snapshots"));
    std::filesystem::create_directories(ctx.path("snapshots"));
    CsvTable diag = diagnostics_table();
    std::size_t n_snap = 0;
    auto record = [&](const FlowState& s) {
        const auto d = diagnostics_of(s);
        diag.add_row({d.t, d.energy, d.gamma_inf, d.gamma_2, d.omega_inf});
    };
    auto snap = [&](const FlowState& s) { ctx.write("snapshots/" + snapshot_name(n_snap++), encode_snapshot(Snapshot::of(s))); };
    record(s0);
    snap(s0);
    int step = 0;
    double last = s0.t;
    FlowState end;
    try {
        end = solver.advance(std::move(s0), c.run.t_end, c.run.dt_max, [&](const FlowState& s) {
            if (!s.gamma.all_finite() || !s.chi.all_finite())
                throw RuntimeFailure("simulate: non-finite state at t=" + format_number(s.t));
            record(s);
            if (++step % c.output.snapshot_stride == 0) {
                snap(s);
                last = s.t;
            }
        });
    } catch (const ValidationError& e) {
        throw RuntimeFailure(std::string("simulate: solver failed: ") + e.what());
    }
    if (end.t > last) snap(end);
    ctx.write("diagnostics.csv", diag);
}

// ----------------------------------------------------------------- snapshots

struct LoadedRun {
    std::vector<Snapshot> snapshots;
    std::vector<FlowState> states;
    SnapshotProvider provider{""};
    AxiGrid grid = make_grid(1.0, 0.0, 1.0, 8, 8);
};

inline std::filesystem::path snapshot_dir(const RunContext& ctx, const std::string& configured) {
    return configured.empty() ? ctx.path("snapshots") : std::filesystem::path(configured);
}

/// Reads every snapshot of a directory (hashing each as an input) into states and a provider.
inline LoadedRun load_run(RunContext& ctx, const std::filesystem::path& dir, const std::string& flow_id) {
    const auto files = list_snapshots(dir);
    if (files.empty()) throw ValidationError("no snapshots in '" + dir.string() + "' (run simulate first)");
    LoadedRun run;
    run.provider = SnapshotProvider(flow_id);
    std::optional<EulerSolver> solver;
    for (const auto& f : files) {
        const std::string bytes = read_file(f);
        ctx.input(f, bytes);
        Snapshot s = decode_snapshot(bytes, f.string());
        if (!solver) {
            run.grid = s.grid;
            solver.emplace(s.grid);
        } else if (!(s.grid == run.grid)) {
            throw ValidationError(f.string() + ": grid differs from the first snapshot");
        }
        if (!run.states.empty() && !(s.t > run.states.back().t))
            throw ValidationError(f.string() + ": snapshot times must increase");
        FlowState st = s.state(*solver);
        run.provider.push(st);
        run.states.push_back(std::move(st));
        run.snapshots.push_back(std::move(s));
    }
    return run;
}

// --------------------------------------------------------------------- trace

inline void cmd_trace(RunContext& ctx) {
    const RunConfig& c = ctx.config();
    const LoadedRun run = load_run(ctx, snapshot_dir(ctx, c.trace.snapshots), c.flow_id());
    const double t0 = run.states.front().t;
    const double T = c.trace.T > 0.0 ? c.trace.T : run.states.back().t;
    if (T > run.states.back().t * (1.0 + 1e-12) + 1e-12)
        throw ValidationError("trace: T=" + format_number(T) + " beyond the last snapshot at t=" +
                              format_number(run.states.back().t));
    std::vector<double> times;
    for (const auto& s : run.states)
        if (s.t > t0 && s.t < T) times.push_back(s.t);
    if (T > t0) times.push_back(T);
    if (times.empty()) throw ValidationError("trace: need snapshots after the first one, or T > t0");
    const VelocityProvider& base = run.provider;

    EnsembleSpec e = c.ensemble;
    e.sigma = c.trace.sigma;
    const BetaEstimate be = beta_sigma(e, base, t0, times);
    CsvTable beta("beta", {"t", "beta", "frame_beta"});
    beta.add_note("sigma=" + format_number(e.sigma) + " seeds=" + std::to_string(be.seeds) +
                  " terminated=" + std::to_string(be.terminated) + " wall_reflections=" + std::to_string(be.wall_reflections));
    beta.add_row({t0, 1.0, 1.0});
    for (std::size_t i = 0; i < times.size(); ++i) beta.add_row({times[i], be.beta[i], be.frame_beta[i]});
    ctx.write("beta.csv", beta);

    CsvTable cons("conservation", {"seed", "r0", "z0", "status", "b_dot_xi", "xi_dot_omega", "triple", "r_b_theta", "xi_floor"});
    std::filesystem::remove_all(ctx.path("trajectories"));
    if (c.trace.audit_seeds > 0) std::filesystem::create_directories(ctx.path("trajectories"));
    EnsembleSpec ae = c.ensemble;
    ae.positions = c.trace.audit_seeds;
    ae.angles = 1;
    const auto seeds = c.trace.audit_seeds > 0 ? ensemble_points(ae, base.domain()) : std::vector<SeedPoint>{};
    const TrajectoryOptions topt{c.ensemble.dt, std::max(1, int(std::ceil((T - t0) / c.ensemble.dt / 200.0)))};
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const BicharBundle b0 = make_audit_bundle(base, t0, seeds[i].r0, seeds[i].z0, e.sigma, seeds[i].angle);
        const BundleTrajectory tr = integrate_bundle(b0, base, T, topt);
        const ConservationReport rep = conserved_audit(tr, base);
        cons.add_row({std::to_string(i), format_number(seeds[i].r0), format_number(seeds[i].z0), to_string(tr.status),
                      format_number(rep.b_dot_xi), format_number(rep.xi_dot_omega), format_number(rep.triple),
                      format_number(rep.r_b_theta), format_number(rep.xi_floor)});
        CsvTable traj("trajectory", {"t", "r", "z", "xi_r", "xi_z", "b_r", "b_theta", "b_z", "res_b_dot_xi",
                                     "res_xi_dot_omega", "res_triple", "res_r_b_theta"});
        traj.add_note("seed=" + std::to_string(i) + " sigma=" + format_number(e.sigma));
        for (const auto& s : tr.samples) {
            BundleTrajectory pair;
            pair.samples = {tr.initial(), s};
            const ConservationReport r = conserved_audit(pair, base);
            traj.add_row({s.t, s.r, s.z, s.xi[0][0], s.xi[0][1], s.b[0][0], s.b[0][1], s.b[0][2], r.b_dot_xi,
                          r.xi_dot_omega, r.triple, r.r_b_theta});
        }
        char name[64];
        std::snprintf(name, sizeof name, "trajectories/seed_%03zu.csv", i);
        ctx.write(name, traj);
    }
    ctx.write("conservation.csv", cons);
}

// ------------------------------------------------------------------- monitor

inline void cmd_monitor(RunContext& ctx) {
    const RunConfig& c = ctx.config();
    const CriterionParams& prm = c.monitor.params;
    const LoadedRun run = load_run(ctx, snapshot_dir(ctx, c.monitor.snapshots), c.flow_id());
    CsvTable led("ledger", {"t", "bkm_integrand", "gen_integrand_r", "gen_integrand_z", "running_integral", "verdict",
                            "running_gen_r", "running_gen_z"});
    led.add_note("params a=" + prm.a.str() + " b=" + prm.b.str() + " s=" + format_number(prm.s) +
                 " theta=" + prm.theta().str() + " q<" + prm.q_bound().str());
    CriterionLedger L;
    for (const auto& s : run.states) {
        const CriterionSample v = criterion_sample(s.u, prm);
        accumulate_in_place(L, s.t, v);
        const auto& r = L.running.back();
        led.add_row({format_number(s.t), format_number(v.bkm), format_number(v.gen_r), format_number(v.gen_z),
                     format_number(r.bkm), L.verdict(), format_number(r.gen_r), format_number(r.gen_z)});
    }
    ctx.write("ledger.csv", led);
}

// -------------------------------------------------------------------- lambda

/// Deterministic smooth solenoidal fields: Leray projections of compact bumps.
inline std::vector<AxiVectorField> generic_members(const AxiGrid& g, int n, std::uint64_t seed = 1) {
    std::vector<AxiVectorField> out;
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(seed + std::uint64_t(i));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const double rc = g.r_max * (0.3 + 0.4 * U(rng)), zc = g.z_min + g.z_length() * U(rng);
        const double d = 0.2 * std::min(g.r_max, g.z_length());
        const double a = 2 * U(rng) - 1, b = 2 * U(rng) - 1, w = 2 * U(rng) - 1;
        auto bump = [&](double r, double z) {
            const double dz = g.periodic_delta(z, zc);
            return compact_bump(((r - rc) * (r - rc) + dz * dz) / (d * d));
        };
        AxiVectorField v(g);
        v.ur = AxiField::sample(g, Parity::odd, [&](double r, double z) { return a * bump(r, z); });
        v.uz = AxiField::sample(g, Parity::even, [&](double r, double z) { return b * bump(r, z); });
        v.utheta = AxiField::sample(g, Parity::odd, [&](double r, double z) { return w * bump(r, z); });
        out.push_back(leray_project(v));
    }
    return out;
}

inline double interpolate_series(const std::vector<double>& t, const std::vector<double>& y, double x) {
    if (t.empty()) throw RuntimeFailure("interpolate_series: empty series");
    if (x <= t.front()) return y.front();
    if (x >= t.back()) return y.back();
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = std::size_t(it - t.begin());
    const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    return (1 - w) * y[i - 1] + w * y[i];
}

inline void cmd_lambda(RunContext& ctx) {
    const RunConfig& c = ctx.config();
    const LambdaConfig& lc = c.lambda;
    const NormSpec spec{lc.p, lc.sigma, Measure::three_d};
    if (!spec.sigma_admissible()) throw ValidationError("lambda: sigma outside (-2/p', 2/p)");
    std::optional<LoadedRun> run;
    std::optional<SnapshotProvider> frozen;
    AxiGrid g = c.grid;
    double t0 = 0.0;
    if (lc.base == "snapshots") {
        run = load_run(ctx, snapshot_dir(ctx, c.trace.snapshots), c.flow_id());
        g = run->grid;
        t0 = run->states.front().t;
    } else {
        EulerSolver solver(c.grid, c.solver);
        frozen = frozen_snapshot(analytic_flow(solver, c.flow_name, c.flow), c.flow_id() + "/frozen");
    }
    const VelocityProvider& base = run ? static_cast<const VelocityProvider&>(run->provider) : *frozen;

    WkbAuditOptions opt;
    opt.ensemble = c.ensemble;
    opt.eps = lc.eps;
    opt.delta = lc.delta;
    opt.xi_scale = lc.xi_scale;
    opt.spec = spec;
    opt.linear = LinearOptions{c.solver.cfl, c.run.dt_max};

    LambdaEstimate generic;
    const auto members = generic_members(g, lc.generic_members);
    if (!members.empty()) generic = lambda_estimate(base, spec, members, t0 + lc.T, opt.linear, t0);

    CsvTable tab("lambda", {"t", "lambda", "beta", "margin", "pass", "lambda_wkb", "lambda_generic", "residual_slope"});
    tab.add_note("p=" + format_number(lc.p) + " sigma=" + format_number(lc.sigma) + " tolerance=" +
                 format_number(lc.tolerance) + " base=" + lc.base + " lambda is a lower estimate");
    tab.add_row({"0", "1", "1", format_number(lc.tolerance), "1", "1", "1", "0"});
    WkbAuditReport last;
    for (int i = 1; i <= lc.samples; ++i) {
        const double t = t0 + lc.T * i / lc.samples;
        last = wkb_audit(base, g, t, opt, t0);
        double lg = 0.0;
        for (const auto& s : generic.series) lg = std::max(lg, interpolate_series(s.t, s.ratio, t));
        const double lam = std::max(last.lambda, lg);
        const double margin = lam * (1.0 + lc.tolerance) - last.beta;
        tab.add_row({format_number(t - t0), format_number(lam), format_number(last.beta), format_number(margin),
                     margin >= 0.0 ? "1" : "0", format_number(last.lambda), format_number(lg),
                     format_number(last.residual_slope)});
    }
    ctx.write("lambda.csv", tab);

    CsvTable growth("growth", {"member", "kind", "t", "ratio", "norm"});
    auto dump = [&](const LambdaEstimate& e, const std::string& kind) {
        for (std::size_t m = 0; m < e.series.size(); ++m)
            for (std::size_t q = 0; q < e.series[m].t.size(); ++q)
                growth.add_row({std::to_string(m), kind, format_number(e.series[m].t[q] - t0),
                                format_number(e.series[m].ratio[q]), format_number(e.series[m].norm[q])});
    };
    dump(last.estimate, "wkb");
    dump(generic, "generic");
    growth.add_note("wkb seed r0=" + format_number(last.seed.r0) + " z0=" + format_number(last.seed.z0) +
                    " angle=" + format_number(last.seed.angle) + " delta=" + format_number(last.delta));
    ctx.write("growth.csv", growth);
}

// ------------------------------------------------------------------- scaling

inline void cmd_scaling(RunContext& ctx) {
    const RunConfig& c = ctx.config();
    if (!c.scaling.present) throw ValidationError(c.source_file + ": scaling needs a \"scaling\" section");
    const ScalingParams& sp = c.scaling.params;
    const std::filesystem::path series_path = c.scaling.series.empty() ? ctx.path("lambda.csv") : std::filesystem::path(c.scaling.series);
    if (!std::filesystem::exists(series_path))
        throw ValidationError("scaling: series '" + series_path.string() + "' not found (run lambda first)");
    const std::string bytes = read_file(series_path);
    ctx.input(series_path, bytes);
    const CsvTable in = CsvTable::parse(bytes, series_path.string());
    const ScaledSeries lam{in.numbers("t"), in.numbers("lambda")};
    const ScaledSeries Lam = lambda_scaled(lam, sp);

    std::optional<LoadedRun> run;
    const auto dir = snapshot_dir(ctx, c.trace.snapshots);
    if (!list_snapshots(dir).empty()) run = load_run(ctx, dir, c.flow_id());

    const LpExponent p = LpExponent::from_double(sp.p);
    const Rational thr = threshold_corollary(p);
    const double ratio = sp.alpha / sp.beta;
    CsvTable out("scaling", {"t", "lambda_p", "Lambda_p", "profile_inf_norm", "threshold", "verdict"});
    out.add_note("alpha=" + format_number(sp.alpha) + " beta=" + format_number(sp.beta) + " T_star=" +
                 format_number(sp.T_star) + " p=" + p.str() + " alpha/beta=" + format_number(ratio) +
                 " threshold=" + thr.str() + " luo_hou_beta=" + threshold_luo_hou(p).str());
    std::vector<double> ts, curls;
    for (std::size_t i = 0; i < lam.t.size(); ++i) {
        const double t = lam.t[i];
        double curl = std::numeric_limits<double>::quiet_NaN();
        if (run && t >= run->provider.times().front() - 1e-12 && t <= run->provider.times().back() + 1e-12) {
            const AxiVectorField u = detail::sample_velocity(run->provider, t, run->grid);
            curl = rescale_snapshot(u, sp, t, c.scaling.window).curl_sup;
            ts.push_back(t);
            curls.push_back(curl);
        }
        std::string verdict;
        if (!(ratio < thr.to_double()))
            verdict = "outside_threshold";
        else if (std::isnan(curl))
            verdict = "below_threshold_no_profile";
        else
            verdict = curl > 0.0 ? "below_threshold" : "profile_vanishes";
        out.add_row({format_number(t), format_number(lam.value[i]), format_number(Lam.value[i]), format_number(curl),
                     format_number(thr.to_double()), verdict});
    }
    if (curls.size() >= 2) {
        const ProfileFloor f = profile_floor(ts, curls);
        out.add_note("profile_floor=" + format_number(f.value) + " samples=" + std::to_string(f.samples) +
                     (f.positive ? " positive" : " not_positive"));
    }
    ctx.write("scaling.csv", out);
}

// -------------------------------------------------------------------- report

inline void cmd_report(RunContext& ctx) {
    nlohmann::json rep;
    std::ostringstream txt;
    auto load = [&](const std::string& rel) -> std::optional<CsvTable> {
        const auto p = ctx.path(rel);
        if (!std::filesystem::exists(p)) return std::nullopt;
        const std::string bytes = read_file(p);
        ctx.input(p, bytes);
        return CsvTable::parse(bytes, p.string());
    };
    bool any = false;
    if (auto d = load("diagnostics.csv")) {
        any = true;
        const auto t = d->numbers("t"), e = d->numbers("energy"), om = d->numbers("omega_inf");
        double drift = 0.0;
        for (double x : e) drift = std::max(drift, std::abs(x - e.front()));
        if (e.front() != 0.0) drift /= std::abs(e.front());
        rep["simulate"] = {{"t_end", t.back()}, {"energy_drift", drift}, {"omega_inf_end", om.back()}};
        txt << "simulate: t_end=" << format_number(t.back()) << " energy_drift=" << format_number(drift) << "\n";
        if (t.size() >= 3 && std::all_of(om.begin(), om.end(), [](double x) { return x > 0.0; })) {
            const BlowupFit f = blowup_fit(t, om);
            if (f.status == FitStatus::ok) {
                rep["blowup_fit"] = {{"status", "ok"}, {"T_star", f.T_star}, {"rate", f.rate}, {"residual", f.residual}};
                txt << "blowup_fit: T_star=" << format_number(f.T_star) << " rate=" << format_number(f.rate) << "\n";
            } else {
                rep["blowup_fit"] = {{"status", "no_fit"}, {"reason", f.reason}};
                txt << "blowup_fit: no_fit (" << f.reason << ")\n";
            }
        } else {
            rep["blowup_fit"] = {{"status", "no_fit"}, {"reason", "omega_inf series is not positive"}};
            txt << "blowup_fit: no_fit (omega_inf series is not positive)\n";
        }
    }
    if (auto b = load("beta.csv")) {
        any = true;
        const auto beta = b->numbers("beta");
        rep["trace"] = {{"beta_end", beta.back()}};
        txt << "trace: beta_end=" << format_number(beta.back()) << "\n";
    }
    if (auto l = load("ledger.csv")) {
        any = true;
        const auto& row = l->rows().back();
        rep["monitor"] = {{"running_integral", row[l->column("running_integral")]}, {"verdict", row[l->column("verdict")]}};
        txt << "monitor: running_integral=" << row[l->column("running_integral")] << " verdict=" << row[l->column("verdict")]
            << "\n";
    }
    if (auto l = load("lambda.csv")) {
        any = true;
        const auto pass = l->numbers("pass");
        const bool all = std::all_of(pass.begin(), pass.end(), [](double x) { return x == 1.0; });
        rep["lambda"] = {{"rows", pass.size()}, {"all_pass", all}};
        txt << "lambda: beta <= lambda (1 + tol) " << (all ? "holds" : "fails") << " on " << pass.size() << " rows\n";
    }
    if (auto s = load("scaling.csv")) {
        any = true;
        const auto& row = s->rows().back();
        rep["scaling"] = {{"verdict", row[s->column("verdict")]}, {"Lambda_p_end", row[s->column("Lambda_p")]}};
        txt << "scaling: verdict=" << row[s->column("verdict")] << "\n";
    }
    if (!any) throw ValidationError("report: no command outputs in '" + ctx.dir().string() + "'");
    ctx.write("report.json", rep.dump(2) + "\n");
    ctx.write("report.txt", txt.str());
}

// ------------------------------------------------------------------- driver

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> n{"simulate", "trace", "monitor", "lambda", "scaling", "report"};
    return n;
}

/// Runs one command; `out` overrides the configured output directory when non-empty.
inline std::filesystem::path run_command(const std::string& command, const RunConfig& cfg, const std::string& out = "") {
    RunContext ctx(cfg, command, out.empty() ? std::filesystem::path(cfg.output.dir) : std::filesystem::path(out));
    if (command == "simulate")
        cmd_simulate(ctx);
    else if (command == "trace")
        cmd_trace(ctx);
    else if (command == "monitor")
        cmd_monitor(ctx);
    else if (command == "lambda")
        cmd_lambda(ctx);
    else if (command == "scaling")
        cmd_scaling(ctx);
    else if (command == "report")
        cmd_report(ctx);
    else
        throw ValidationError("unknown command '" + command + "'");
    ctx.finish();
    return ctx.dir();
}

} // namespace axieuler
