#include <ahs/solver.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace ahs;

namespace {

const double third_log2 = -0.23104906018664844;  // -log(2)/3

std::shared_ptr<LatticeTorus> torus2pi(int n = 64) { return LatticeTorus::square(2 * pi, n); }

// Cubic with |B|^2_flat = b2 on a flat torus: c = sqrt(b2 / 16).
Term cubic(const SurfacePtr& s, double b2) { return term(realize(3, cplx(std::sqrt(b2 / 16), 0), s)); }

Vec smooth_random(const LatticeTorus& T, std::mt19937& rng, double amp) {
    std::normal_distribution<double> N;
    Vec f = Vec::Zero(T.size());
    for (int a = 0; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) {
            Vec arg = a * T.c1() + b * T.c2();
            f += amp * (N(rng) * arg.cos() + N(rng) * arg.sin()) / (1 + a * a + b * b);
        }
    return f;
}

} // namespace

TEST(Apply, TorusConstantSolution) {
    auto T = torus2pi();
    auto spec = make_spec(ConformalMetric(T, {BaseKind::Flat}), -2.0, {cubic(T, 4.0)});
    EXPECT_LT(max_abs(apply(spec, Vec::Constant(T->size(), third_log2))), 1e-15);
}

TEST(Apply, CurvatureTargetCancels) {
    auto T = torus2pi();
    ConformalMetric bg(T, {BaseKind::Flat}, 0.3 * T->c1().cos() * T->c2().sin());
    OperatorSpec spec{bg, scalar_curvature_values(bg), {}, false};
    EXPECT_LT(max_abs(apply(spec, Vec::Zero(T->size()))), 1e-15);
}

TEST(Apply, SphereFamilyFedBack) {
    auto S = SphereChart::make_default();
    ConformalMetric round(S, {BaseKind::Round});
    Base fam{BaseKind::SphereFamily, 0.0};
    auto X = realize(-1, {cplx(0), cplx(0, 1)}, S);
    OperatorSpec spec = make_spec(round, 0.0, {term(X)});
    spec.einstein = true;
    Vec phi = fam.psi(S->c1()) - round.psi();
    EXPECT_LT(solved_max(apply(spec, phi), *S), 1e-6);
}

TEST(Apply, SurfaceMismatchAndMixedStructure) {
    auto A = torus2pi(32), B = torus2pi(64);
    auto spec = make_spec(ConformalMetric(A, {BaseKind::Flat}), -2.0, {cubic(A, 4.0)});
    EXPECT_THROW(apply(spec, ScalarField::constant(B, 0.0)), Error);
    auto bad = make_spec(ConformalMetric(A, {BaseKind::Flat}), -2.0, {cubic(B, 4.0)});
    EXPECT_THROW(apply(bad, Vec::Zero(A->size())), Error);
    auto mixed = make_spec(ConformalMetric(A, {BaseKind::Flat}), -2.0, {cubic(A, 4.0), term(realize(-1, cplx(1), A))});
    EXPECT_NO_THROW(apply(mixed, Vec::Zero(A->size())));
    mixed.einstein = true;
    try {
        apply(mixed, Vec::Zero(A->size()));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MixedStructure);
    }
    Term wrong = cubic(A, 4.0);
    wrong.k = 2;
    EXPECT_THROW(apply(make_spec(ConformalMetric(A, {BaseKind::Flat}), -2.0, {wrong}), Vec::Zero(A->size())), Error);
}

TEST(ScalingRule, TrivialRandomAndHomothety) {
    auto T = torus2pi();
    std::mt19937 rng(23);
    ConformalMetric bg(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.3));
    OperatorSpec spec = make_spec(bg, -2.0, {cubic(T, 4.0), term(realize(-1, cplx(0.3, 0.1), T))});
    spec.F += 0.2 * T->c1().sin();
    Vec phi = smooth_random(*T, rng, 0.2);
    Vec zero = Vec::Zero(T->size());
    EXPECT_EQ(scaling_residual(spec, phi, zero, zero), 0.0);
    for (int trial = 0; trial < 3; ++trial)
        EXPECT_LT(scaling_residual(spec, phi, smooth_random(*T, rng, 0.3), smooth_random(*T, rng, 0.3)), 1e-9);
    EXPECT_LT(scaling_residual(spec, phi, smooth_random(*T, rng, 0.3), Vec::Constant(T->size(), std::log(1.7))), 1e-10);
}

TEST(Frechet, MatchesCentralDifferences) {
    auto T = torus2pi();
    std::mt19937 rng(29);
    ConformalMetric bg(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.3));
    OperatorSpec spec = make_spec(bg, -2.0, {cubic(T, 4.0), term(realize(-1, cplx(0.3, 0.1), T))});
    for (int trial = 0; trial < 4; ++trial) {
        Vec phi = smooth_random(*T, rng, 0.3);
        Vec v = smooth_random(*T, rng, 1.0);
        const double d = 1e-4;
        Vec fd = (apply(spec, Vec(phi + d * v)) - apply(spec, Vec(phi - d * v))) / (2 * d);
        Vec an = frechet(spec, phi, v);
        EXPECT_LT(max_abs(fd - an) / max_abs(an), 1e-6);
    }
}

TEST(Newton, FlatTorusConstant) {
    auto T = torus2pi();
    auto spec = make_spec(ConformalMetric(T, {BaseKind::Flat}), -2.0, {cubic(T, 4.0)});
    auto rep = solve_newton(spec);
    EXPECT_LT(max_abs(rep.phi.values - third_log2), 1e-10);
    EXPECT_LE(rep.residual, 1e-10);
    EXPECT_LE(rep.residual_history.back(), rep.tolerance);
    for (size_t i = 1; i < rep.residual_history.size(); ++i)
        EXPECT_LT(rep.residual_history[i], rep.residual_history[i - 1]);
    ASSERT_FALSE(rep.certificate.empty());
    EXPECT_EQ(rep.certificate[0].name, "factor-lower");
    EXPECT_NEAR(rep.certificate[0].slack, 0.0, 1e-10);  // flat torus saturates the factor bound
}

TEST(Newton, ConformalBackgroundUniqueness) {
    auto T = torus2pi();
    Vec psi = 0.3 * T->c1().cos();
    ConformalMetric bg(T, {BaseKind::Flat}, psi);
    // same holomorphic B; the solution metric must be the flat one
    auto spec = make_spec(bg, -2.0, {cubic(T, 4.0)});
    auto rep = solve_newton(spec);
    EXPECT_LT(max_abs(rep.phi.values - (third_log2 - psi)), 1e-8);
    EXPECT_LT(max_abs(apply(spec, rep.phi.values)), 1e-10);
}

TEST(Newton, DeterministicAcrossRuns) {
    auto T = torus2pi(32);
    std::mt19937 rng(31);
    ConformalMetric bg(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.4));
    auto spec = make_spec(bg, -2.0, {cubic(T, 2.0)});
    auto a = solve_newton(spec), b = solve_newton(spec);
    EXPECT_TRUE((a.phi.values == b.phi.values).all());
    EXPECT_EQ(a.residual_history, b.residual_history);
}

TEST(Newton, LinearFormWithZeroKappaHasNoSolution) {
    auto T = torus2pi(32);
    auto spec = make_spec(ConformalMetric(T, {BaseKind::Flat}), 0.0, {term(realize(1, cplx(1, 0), T))});
    try {
        solve_newton(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoSolution);
    }
}

TEST(Newton, PositiveKappaOnTorusDiverges) {
    auto T = torus2pi(32);
    // -2 e^phi replaced by +2 e^phi: both zeroth-order terms positive, no zero
    auto spec = make_spec(ConformalMetric(T, {BaseKind::Flat}), 2.0, {cubic(T, 4.0)});
    EXPECT_THROW(solve_newton(spec), Error);
}

TEST(Newton, HomothetyInvariance) {
    auto T = torus2pi();
    std::mt19937 rng(37);
    ConformalMetric h(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.3));
    Vec mu = smooth_random(*T, rng, 0.3);
    const double r = 1.6, kappa = -2.0;
    auto d = realize(3, cplx(0.4, 0.2), T);
    auto a = solve_newton(make_spec(h, kappa, {term(d)}));
    auto b = solve_newton(make_spec(h.rescaled(mu), r * kappa, {scaled(term(d), 1.0 / r)}));
    EXPECT_LT(max_abs(b.phi.values + mu - (a.phi.values - std::log(r))), 1e-8);
}

TEST(Monotone, AgreesWithNewtonOnTorus) {
    auto T = torus2pi();
    for (double amp : {0.0, 0.3}) {
        ConformalMetric bg(T, {BaseKind::Flat}, amp * T->c1().cos());
        auto spec = make_spec(bg, -2.0, {cubic(T, 4.0)});
        auto n = solve_newton(spec);
        MonotoneOptions o;
        o.bracket = std::make_pair(-3.0, 3.0);
        auto m = solve_monotone(spec, o);
        EXPECT_LT(max_abs(m.phi.values - n.phi.values), 1e-8) << amp;
        EXPECT_LE(m.residual, m.tolerance);
        for (const auto& c : m.certificate) EXPECT_TRUE(c.holds) << c.name << " " << c.slack;
    }
}

TEST(Monotone, AutoBracketUnavailableOnTorus) {
    auto T = torus2pi(32);
    auto spec = make_spec(ConformalMetric(T, {BaseKind::Flat}), -2.0, {cubic(T, 4.0)});
    try {
        solve_monotone(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BracketUnavailable);
    }
}

TEST(Monotone, InvalidBracketNamesGridPoint) {
    auto T = torus2pi(32);
    ConformalMetric bg(T, {BaseKind::Flat}, 0.3 * T->c1().cos());
    auto spec = make_spec(bg, -2.0, {cubic(T, 4.0)});
    MonotoneOptions o;
    o.bracket = std::make_pair(0.5, 3.0);  // W(0.5) < 0 somewhere
    try {
        solve_monotone(spec, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidBracket);
        EXPECT_NE(std::string(e.what()).find("grid point"), std::string::npos);
    }
    o.bracket = std::make_pair(2.0, 1.0);
    EXPECT_THROW(solve_monotone(spec, o), Error);
}

TEST(RootBound, ExamplesAndBounds) {
    auto r1 = positive_root_bound(1, 2, 3);
    EXPECT_NEAR(r1.root, 5.0, 1e-14);
    auto r2 = positive_root_bound(2, 1, 4);
    EXPECT_NEAR(r2.root, 2.5615528128088303, 1e-14);
    EXPECT_EQ(r2.lower, 1.0);
    EXPECT_EQ(r2.upper, 3.0);
    auto r3 = positive_root_bound(3, 1, 1);
    EXPECT_NEAR(r3.root, 1.465571231876768, 1e-14);
    EXPECT_EQ(r3.lower, 1.0);
    EXPECT_EQ(r3.upper, 2.0);
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> U(0.01, 10);
    for (int i = 0; i < 50; ++i) {
        const int p = 1 + i % 5;
        const double a = U(rng), b = U(rng);
        auto r = positive_root_bound(p, a, b);
        EXPECT_LE(r.lower, r.root);
        EXPECT_LE(r.root, r.upper);
        EXPECT_LT(std::abs(std::pow(r.root, p) - a * std::pow(r.root, p - 1) - b), 1e-10 * std::pow(r.upper, p));
    }
    EXPECT_THROW(positive_root_bound(0, 1, 1), Error);
    EXPECT_THROW(positive_root_bound(2, -1, 1), Error);
}

TEST(Ckmc, ConstantSolution) {
    auto T = torus2pi(32);
    ConformalMetric bg(T, {BaseKind::Flat});
    auto d = realize(3, cplx(std::sqrt(0.2 / 16), 0), T);
    EXPECT_LT(max_abs(norm2(d, bg) - 0.2), 1e-15);
    auto rep = solve_ckmc(bg, -1.0, +1, nullptr, &d.B, Vec::Zero(T->size()));
    EXPECT_LT(max_abs(rep.phi.values - (-0.7675283643313486)), 1e-10);
}

TEST(Ckmc, OppositeSignsHaveNoConstantRoot) {
    auto T = torus2pi(32);
    ConformalMetric bg(T, {BaseKind::Flat});
    auto d = realize(3, cplx(std::sqrt(0.2 / 16), 0), T);
    EXPECT_THROW(solve_ckmc(bg, -1.0, -1, nullptr, &d.B, Vec::Zero(T->size())), Error);
}

TEST(Ckmc, ReducesToEinsteinOperator) {
    auto T = torus2pi();
    std::mt19937 rng(43);
    ConformalMetric bg(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.3));
    auto d = realize(3, cplx(0.3, -0.1), T);
    const double c = -1.5;
    auto ck = ckmc_core(bg, c, +1, nullptr, &d.B);
    auto spec = make_spec(bg, 2 * c, {scaled(term(d), 2.0)});
    Vec phi = smooth_random(*T, rng, 0.3);
    EXPECT_LT(max_abs(ck.apply(phi) - apply(spec, phi)), 1e-12);
    auto a = solve_ckmc(bg, c, +1, nullptr, &d.B, Vec::Zero(T->size()));
    auto b = solve_newton(spec);
    EXPECT_LT(max_abs(a.phi.values - b.phi.values), 1e-10);
}

TEST(Ckmc, BracketArithmetic) {
    auto small = ckmc_bracket(0.2);
    ASSERT_TRUE(small.exists);
    EXPECT_LE(small.r1, 2.0 / 3.0);
    EXPECT_NEAR(small.r1 * small.r1 * small.r1 - small.r1 * small.r1 + 0.1, 0.0, 1e-15);
    auto edge = ckmc_bracket(8.0 / 27.0);
    ASSERT_TRUE(edge.exists);
    EXPECT_NEAR(edge.r1, 2.0 / 3.0, 1e-7);
    EXPECT_FALSE(ckmc_bracket(8.0 / 27.0 + 1e-9).exists);
    EXPECT_EQ(small.super, 0.0);

    // sR = -2 background data with nonconstant |B|^2 <= 0.2
    auto T = torus2pi(32);
    ConformalMetric bg(T, {BaseKind::Flat});
    auto d = realize(3, cplx(std::sqrt(0.2 / 16), 0), T);
    SymTensorField B = d.B;
    Vec bump = 0.75 + 0.25 * T->c1().cos();
    for (auto& c : B.comp) c *= bump;
    auto core = ckmc_core(bg, -1.0, -1, nullptr, &B);
    core.sR = Vec::Constant(T->size(), -2.0);
    auto br = ckmc_bracket(norm2(B, bg).maxCoeff());
    for (const auto& q : constant_bracket_certificate(core, br.sub, br.super)) EXPECT_TRUE(q.holds) << q.name << " " << q.slack;
}

TEST(Ray, FlatTorusClosedForm) {
    auto T = torus2pi();
    ConformalMetric bg(T, {BaseKind::Flat});
    for (double b2 : {8.0, 3.0}) {
        auto B = cubic(T, b2).B;
        std::vector<double> ts{0.0, 0.1, 0.25, 0.5};
        auto ray = ray_solve(bg, B, ts);
        ASSERT_EQ(ray.points.size(), ts.size());
        for (const auto& p : ray.points) {
            const double expect = 2 * p.t + std::log(b2 / 8) / 3;
            EXPECT_LT(max_abs(p.report.phi.values - expect), 1e-10) << b2 << " " << p.t;
            EXPECT_NEAR(p.rescaled_volume, ray.points[0].rescaled_volume, 1e-9 * ray.points[0].rescaled_volume);
        }
        EXPECT_TRUE(ray.certificate.holds());
        EXPECT_NEAR(ray.certificate.envelope_lower_slack, 0.0, 1e-10);  // saturated
        EXPECT_NEAR(ray.certificate.lipschitz_slack, 0.0, 1e-10);
        if (b2 == 8.0) {
            EXPECT_LT(max_abs(ray.phi0.values), 1e-12);
        }
    }
}

TEST(Ray, CertificateOnConformalBackground) {
    auto T = torus2pi();
    std::mt19937 rng(47);
    ConformalMetric bg(T, {BaseKind::Flat}, smooth_random(*T, rng, 0.4));
    auto B = realize(3, cplx(0.3, 0.4), T).B;
    auto ray = ray_solve(bg, B, {0.0, 0.2, 0.4, 0.8});
    EXPECT_TRUE(ray.certificate.holds()) << ray.certificate.monotone_slack << " " << ray.certificate.lipschitz_slack << " "
                                         << ray.certificate.envelope_lower_slack << " " << ray.certificate.envelope_upper_slack;
    EXPECT_THROW(ray_solve(bg, B, {0.2, 0.1}), Error);
    EXPECT_THROW(ray_solve(bg, B, {-0.1}), Error);
    SymTensorField Z = B;
    for (auto& c : Z.comp) c.setZero();
    EXPECT_THROW(ray_solve(bg, Z, {0.0}), Error);
}

TEST(Newton, SphereChartDirichletRecoversFamily) {
    auto S = SphereChart::make_default();
    ConformalMetric round(S, {BaseKind::Round});
    Base fam{BaseKind::SphereFamily, 3.0};
    auto X = realize(-1, {cplx(0), cplx(0, 1)}, S);
    OperatorSpec spec = make_spec(round, 3.0, {term(X)});
    spec.einstein = true;
    Vec exact = fam.psi(S->c1()) - round.psi();
    Vec u = S->c1() / S->s_max();
    Vec bump = 0.2 * (1 - u.square()).square() * (1 + 0.5 * S->c2().cos());
    auto rep = solve_newton(spec, Vec(exact + bump));
    EXPECT_LE(rep.residual, 1e-7);
    EXPECT_LT(max_abs(rep.phi.values - exact), 1e-5);
}
