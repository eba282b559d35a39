#include "axieuler/linstab.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace axieuler;

namespace {

AxiVectorField solenoidal(const AxiGrid& g) {
    const AxiField psi = AxiField::sample(g, Parity::even, [](double r, double z) {
        return r * r * (1 - r) * (1 - r) * (std::sin(2 * pi * z) + 0.3 * std::cos(4 * pi * z));
    });
    auto [ur, uz] = poloidal_from_stream(psi);
    AxiVectorField v(g);
    v.ur = ur;
    v.uz = uz;
    v.utheta = AxiField::sample(g, Parity::odd, [](double r, double z) { return r * (1 - r) * std::cos(2 * pi * z); });
    return v;
}

double max_diff(const AxiVectorField& a, const AxiVectorField& b) {
    return std::max({(a.ur - b.ur).max_abs(), (a.utheta - b.utheta).max_abs(), (a.uz - b.uz).max_abs()});
}

AxiVectorField random_field(const AxiGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    AxiVectorField w(g);
    for (auto* f : {&w.ur, &w.utheta, &w.uz})
        for (double& x : f->values()) x = n(rng);
    return w;
}

} // namespace

TEST(Leray, SolenoidalInputUnchanged) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 48, 40);
    const AxiVectorField v = solenoidal(g);
    EXPECT_LT(max_diff(leray_project(v), v), 1e-10);
}

TEST(Leray, RandomFieldProjectsToDivergenceFreeIdempotently) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 64, 64);
    LerayProjector P(g);
    const AxiVectorField w = random_field(g, 7);
    const AxiVectorField p = P.project(w);
    EXPECT_LT(divergence(p).max_abs(), 1e-10);
    EXPECT_LT(max_diff(P.project(p), p), 1e-12);
    const NormSpec l2;
    EXPECT_LE(weighted_norm(p, l2), weighted_norm(w, l2));
    EXPECT_EQ((p.utheta - w.utheta).max_abs(), 0.0);
}

TEST(Leray, GradientsAreRemoved) {
    auto residual = [](int n, bool tangent) {
        const AxiGrid g = make_grid(1.0, 0.0, 1.0, n, n);
        AxiVectorField w(g);
        if (tangent) {
            w.ur = AxiField::sample(g, Parity::odd,
                                    [](double r, double z) { return 2 * r * (1 - r) * (1 - 2 * r) * std::sin(2 * pi * z); });
            w.uz = AxiField::sample(g, Parity::even, [](double r, double z) {
                return 2 * pi * r * r * (1 - r) * (1 - r) * std::cos(2 * pi * z);
            });
        } else {
            w.ur = AxiField::sample(g, Parity::odd, [](double r, double z) { return 2 * r * std::sin(2 * pi * z); });
            w.uz = AxiField::sample(g, Parity::even,
                                    [](double r, double z) { return 2 * pi * r * r * std::cos(2 * pi * z); });
        }
        const NormSpec l2;
        return weighted_norm(leray_project(w), l2) / weighted_norm(w, l2);
    };
    // grad(r^2 (1-r)^2 sin 2 pi z) is tangent to the wall: second order.
    EXPECT_LT(residual(128, true), 1e-4);
    EXPECT_NEAR(residual(64, true) / residual(128, true), 4.0, 0.6);
    // grad(r^2 sin 2 pi z) crosses the wall; the wall cell limits it to first order.
    EXPECT_LT(residual(128, false), 1e-2);
    EXPECT_NEAR(residual(64, false) / residual(128, false), 2.0, 0.3);
}

TEST(Leray, RejectsNonFiniteInput) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 8, 8);
    AxiVectorField w(g);
    w.uz(2, 3) = std::nan("");
    EXPECT_THROW(leray_project(w), ValidationError);
}

TEST(LinearStep, ZeroBaseKeepsPerturbation) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const ZeroFlow zero;
    LinearSolver s(zero, g);
    const AxiVectorField v0 = solenoidal(g);
    PerturbationState st{0.0, v0};
    for (int i = 0; i < 5; ++i) st = s.step(st, 0.05);
    EXPECT_LT(max_diff(st.v, v0), 1e-13);
}

TEST(LinearStep, RigidRotationIsItsOwnSteadyPerturbation) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const RigidRotationFlow rot(1.3);
    LinearSolver s(rot, g);
    AxiVectorField v0(g);
    v0.utheta = AxiField::sample(g, Parity::odd, [](double r, double) { return 1.3 * r; });
    const PerturbationState end = s.advance({0.0, v0}, 0.5);
    EXPECT_LT(max_diff(end.v, v0), 1e-11);
}

TEST(LinearStep, FourthOrderInTime) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const BeltramiFlow bel(0.2, 1);
    auto run = [&](double dt) {
        LinearSolver s(bel, g);
        PerturbationState st{0.0, solenoidal(g)};
        const int n = int(std::lround(0.16 / dt));
        for (int i = 0; i < n; ++i) st = s.step(st, dt);
        return st.v;
    };
    const AxiVectorField a = run(0.016), b = run(0.008), c = run(0.004);
    EXPECT_NEAR(max_diff(a, b) / max_diff(b, c), 16.0, 2.0);
}

TEST(LinearStep, StaysDivergenceFree) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 40, 32);
    const BeltramiFlow bel(0.5, 1);
    LinearSolver s(bel, g);
    const PerturbationState end = s.advance({0.0, solenoidal(g)}, 0.3);
    EXPECT_LT(relative_divergence(end.v), 1e-12);
}

TEST(LinearStep, CflViolationIsReported) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const BeltramiFlow bel(1.0, 1);
    LinearSolver s(bel, g);
    EXPECT_THROW(s.step({0.0, solenoidal(g)}, 1.0), RuntimeFailure);
    EXPECT_THROW(s.step({0.0, solenoidal(g)}, -1.0), ValidationError);
}

TEST(Wkb, ZeroBumpGivesZeroField) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 64, 64);
    WkbData d = make_wkb_data(g, WkbSeed{0.5, 0.5, {0.6, 0.8}, {0.0, 1.0, 0.0}, 0.15}, 0.1);
    d.phi *= 0.0;
    const AxiVectorField v = build_wkb(d);
    EXPECT_EQ(std::max({v.ur.max_abs(), v.utheta.max_abs(), v.uz.max_abs()}), 0.0);
}

TEST(Wkb, DivergenceFreeCompactAndNormalised) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 128, 128);
    const WkbSeed seed{0.5, 0.9, {1.8, -2.4}, {0.8 / 3 * 2.4, 0.6, 0.8 / 3 * 1.8}, 0.2};
    for (double eps : {0.1, 0.05, 0.025}) {
        const WkbData d = make_wkb_data(g, seed, eps);
        EXPECT_NEAR(weighted_norm(d.phi, NormSpec{}), 1.0, 1e-12);
        const AxiVectorField v = build_wkb(d);
        EXPECT_LT(divergence(v).max_abs(), 1e-10);
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.nr; ++j) {
                const double dz = wrapped_offset(g.z(k), seed.z0, 1.0);
                if (std::abs(g.r(j) - seed.r0) > seed.delta + 2 * g.dr || std::abs(dz) > seed.delta + 2 * g.dz) {
                    ASSERT_EQ(v.ur(j, k), 0.0);
                    ASSERT_EQ(v.utheta(j, k), 0.0);
                    ASSERT_EQ(v.uz(j, k), 0.0);
                }
            }
    }
}

TEST(Wkb, CorrectionIsFirstOrderInEps) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 256, 256);
    const WkbSeed seed{0.45, 0.3, {3.0, 0.0}, {0.0, 0.6, 0.8}, 0.2};
    std::vector<double> eps{0.1, 0.05, 0.025}, res;
    for (double e : eps) res.push_back(wkb_residual(make_wkb_data(g, seed, e), NormSpec{}));
    EXPECT_NEAR(log_slope(eps, res), 1.0, 0.15);
    EXPECT_NEAR(res[0] / eps[0], res[2] / eps[2], 0.15 * res[0] / eps[0]);
}

TEST(Wkb, RejectsInvalidData) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 64, 64);
    EXPECT_THROW(make_wkb_data(g, WkbSeed{0.1, 0.5, {1, 0}, {0, 1, 0}, 0.15}, 0.1), ValidationError);
    EXPECT_THROW(make_wkb_data(g, WkbSeed{0.9, 0.5, {1, 0}, {0, 1, 0}, 0.15}, 0.1), ValidationError);
    EXPECT_THROW(make_wkb_data(g, WkbSeed{0.5, 0.5, {1, 0}, {1, 0, 0}, 0.15}, 0.1), ValidationError);
    EXPECT_THROW(make_wkb_data(g, WkbSeed{0.5, 0.5, {0, 0}, {0, 1, 0}, 0.15}, 0.1), DomainError);
    EXPECT_THROW(make_wkb_data(g, WkbSeed{0.5, 0.5, {1, 0}, {0, 1, 0}, 0.15}, 0.0), ValidationError);
}

TEST(Lambda, ZeroBaseGivesExactlyOne) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const ZeroFlow zero;
    for (NormSpec spec : {NormSpec{2.0, 0.0}, NormSpec{4.0, 0.3}, NormSpec{1.5, -0.2}}) {
        const LambdaEstimate e = lambda_estimate(zero, spec, {solenoidal(g)}, 0.5);
        EXPECT_NEAR(e.value, 1.0, 1e-14);
        EXPECT_TRUE(e.lower_bound);
    }
}

TEST(Lambda, RigidRotationDoesNotDecay) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const RigidRotationFlow rot(1.0);
    std::vector<AxiVectorField> set{solenoidal(g), leray_project(random_field(g, 3))};
    const LambdaEstimate e = lambda_estimate(rot, NormSpec{}, set, 0.5);
    EXPECT_GE(e.value, 1.0 - 1e-2);
    EXPECT_EQ(e.value, *std::max_element(e.member_ratio.begin(), e.member_ratio.end()));
    EXPECT_EQ(e.series.size(), 2u);
    EXPECT_EQ(e.series[0].t.front(), 0.0);
    EXPECT_NEAR(e.series[0].t.back(), 0.5, 1e-12);
}

TEST(Lambda, ValidatesInputs) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 16, 16);
    const ZeroFlow zero;
    EXPECT_THROW(lambda_estimate(zero, NormSpec{}, {AxiVectorField(g)}, 1.0), ValidationError);
    EXPECT_THROW(lambda_estimate(zero, NormSpec{}, {}, 1.0), ValidationError);
    EXPECT_THROW(lambda_estimate(zero, NormSpec{2.0, 1.0}, {solenoidal(g)}, 1.0), ValidationError);
    EXPECT_THROW(lambda_estimate(zero, NormSpec{}, {random_field(g, 1)}, 1.0), ValidationError);
}

TEST(StabilityAudit, ZeroBaseHoldsWithFactorOne) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 24, 24);
    const ZeroFlow zero;
    const StabilityAudit a = stability_bound_audit(zero, NormSpec{}, solenoidal(g), {}, 0.5, LinearOptions{0.5, 0.1});
    EXPECT_TRUE(a.holds);
    EXPECT_NEAR(a.min_slack, 1.0, 1e-12);
    EXPECT_EQ(a.lhs.front(), a.rhs.front());
    EXPECT_EQ(a.u_hat.back(), 0.0);
}

TEST(StabilityAudit, RigidRotationHasSlack) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const RigidRotationFlow rot(2.0);
    const StabilityAudit a = stability_bound_audit(rot, NormSpec{}, solenoidal(g), {}, 0.5);
    EXPECT_TRUE(a.holds);
    EXPECT_GT(a.min_slack, 1.0);
    EXPECT_GT(a.rhs.back() / a.lhs.back(), 2.5);
    EXPECT_NEAR(a.u_hat.back(), 0.5 * 2.0, 1e-6);
}

TEST(StabilityAudit, RingWithForcingAcrossRefinement) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 32, 32);
    const BeltramiFlow bel(0.5, 1);
    const AxiField bump = AxiField::sample(g, Parity::odd, [](double r, double z) {
        return 0.1 * compact_bump(((r - 0.5) * (r - 0.5) + (z - 0.5) * (z - 0.5)) / 0.04);
    });
    const Forcing f = [&](double t) {
        AxiVectorField v(g);
        v.utheta = bump;
        v.utheta *= std::cos(3.0 * t);
        return v;
    };
    for (double dt : {0.02, 0.01}) {
        const StabilityAudit a =
            stability_bound_audit(bel, NormSpec{2.0, -0.5}, solenoidal(g), f, 0.4, LinearOptions{0.5, dt});
        EXPECT_TRUE(a.holds) << "dt=" << dt;
        EXPECT_GT(a.min_slack, 1.0);
    }
}

TEST(WkbAudit, SmallAuditRunsAndReports) {
    const AxiGrid g = make_grid(1.0, 0.0, 1.0, 64, 64);
    const BeltramiFlow bel(0.05, 1);
    WkbAuditOptions o;
    o.ensemble.positions = 8;
    o.ensemble.angles = 4;
    o.ensemble.r_min_seed = 0.3;
    o.ensemble.r_max_seed = 0.7;
    o.delta = 0.2;
    o.eps = {0.1, 0.05};
    const WkbAuditReport r = wkb_audit(bel, g, 0.1, o);
    EXPECT_GE(r.beta, 1.0);
    EXPECT_EQ(r.ratio.size(), 2u);
    EXPECT_EQ(r.lambda, std::max(r.ratio[0], r.ratio[1]));
    EXPECT_NEAR(norm(r.b0), 1.0, 1e-12);
    o.ensemble.r_min_seed = 0.1;
    EXPECT_THROW(wkb_audit(bel, g, 0.1, o), ValidationError);
}
