#include <ahs/structure.hpp>

#include <gtest/gtest.h>

using namespace ahs;

namespace {

SurfacePtr chart() {
    static SurfacePtr s = SphereChart::make_default();
    return s;
}

double nu_closed(double kappa) {
    const double z = kappa / 4;
    return 8 * pi * z * (pi / 2 - std::atan(z));
}

} // namespace

TEST(Curvature, ExactTorus) {
    auto a = exact_torus();
    auto q = curvature_quantities(a);
    EXPECT_LT(max_abs(q.sR), 1e-14);
    EXPECT_LT(max_abs(q.uR + 2.0), 1e-14);
    EXPECT_LT(max_abs(q.f), 1e-14);
    EXPECT_LT(max_abs(q.B2 - 8.0), 1e-13);
}

TEST(Curvature, SphereFamilyKappaZero) {
    auto a = sphere_family(0.0, chart());
    auto q = curvature_quantities(a);
    EXPECT_LT(max_abs(q.uR - 4 * q.gamma2), 1e-10);
    Vec r4 = (4 * chart()->c1()).exp();
    Vec f2 = 16 * (1 - r4).square() / (1 + r4).square();
    EXPECT_LT(max_abs(q.f.square() - f2), 1e-8);
    // f changes sign across the equator: positive for rho > 1
    const auto& S = dynamic_cast<const SphereChart&>(*chart());
    EXPECT_GT(q.f(S.index(S.n1() - 2, 0)), 0);
    EXPECT_LT(q.f(S.index(1, 0)), 0);
}

TEST(Curvature, RoundSphereIsWeylExact) {
    ConformalMetric round(chart(), {BaseKind::Round});
    AHStructure a(round, zero_cubic(chart()), zero_form(chart()));
    auto q = curvature_quantities(a);
    EXPECT_LT(max_abs(q.uR - 2.0), 1e-12);
    EXPECT_LT(max_abs(q.sR - 2.0), 1e-12);
    EXPECT_LT(vortex_residual(a).residual, 1e-10);
}

TEST(Curvature, CodifferentialEntersWeightedCurvature) {
    // gamma = sin(x) dx on the flat 2pi torus: delta gamma = -cos x, uR = 2 cos x.
    auto T = LatticeTorus::square(2 * pi, 32);
    OneFormField g{T, T->c1().sin(), Vec::Zero(T->size())};
    AHStructure a(ConformalMetric(T, {BaseKind::Flat}), zero_cubic(T), g);
    EXPECT_LT(max_abs(curvature_quantities(a).uR - 2 * T->c1().cos()), 1e-12);
    EXPECT_LT(max_abs(a.f), 1e-12);
}

TEST(EinsteinResiduals, ExactTorusVanish) {
    auto r = einstein_residuals(exact_torus());
    EXPECT_LE(r.max(), 1e-12);
}

TEST(EinsteinResiduals, SphereFamilyKappaThree) {
    auto r = einstein_residuals(sphere_family(3.0, chart()));
    EXPECT_LE(r.divB, 1e-5);
    EXPECT_LE(r.Bgamma, 1e-5);
    EXPECT_LE(r.killing, 1e-5);
    EXPECT_LE(r.const_defect, 1e-5);
}

TEST(EinsteinResiduals, TorusFamilySpectral) {
    for (double k : {-5.0, -4.5, -9.0}) {
        auto r = einstein_residuals(torus_family(k));
        EXPECT_LE(r.max(), 1e-10) << k;
    }
}

TEST(EinsteinResiduals, PerturbedCubicFails) {
    auto r = einstein_residuals(perturb_B(exact_torus(), 0.1));
    EXPECT_GT(r.divB, 1e-2);
    // analytic divergence of the bump: |D.B| = (2 pi amp / 4) sqrt(2) |cos 2 pi x|
    EXPECT_NEAR(r.divB, 2 * pi * 0.1 / 4 * std::sqrt(2.0), 1e-10);
}

TEST(EinsteinResiduals, MixedStructureSeesBgamma) {
    auto T = LatticeTorus::square(1.0, 32);
    auto e = exact_torus(0, 8.0, T);
    AHStructure a(e.metric, e.B, OneFormField{T, Vec::Constant(T->size(), 0.5), Vec::Zero(T->size())});
    auto r = einstein_residuals(a);
    EXPECT_NEAR(r.Bgamma, 8.0 * 0.5, 1e-12);
    EXPECT_GT(r.E, 1.0);
    EXPECT_THROW(vortex_residual(a), Error);
}

TEST(VortexIdentity, SphereFamily) {
    auto v0 = vortex_identity(sphere_family(0.0, chart()), 0);
    EXPECT_NEAR(v0.nu, 0.0, 1e-6);
    EXPECT_LE(std::abs(v0.defect), 1e-6);
    auto v3 = vortex_identity(sphere_family(3.0, chart()), 0);
    EXPECT_NEAR(v3.nu, 17.479103067496865, 1e-6);
    EXPECT_NEAR(v3.nu, nu_closed(3.0), 1e-6 * nu_closed(3.0));
    EXPECT_LE(std::abs(v3.defect), 1e-6);
    EXPECT_TRUE(v3.bound_holds());
    EXPECT_GT(v3.bound_slack, 0);
}

TEST(VortexIdentity, ExactTorus) {
    auto v = vortex_identity(exact_torus(), 1);
    EXPECT_NEAR(v.kappa, -2.0, 1e-14);
    EXPECT_NEAR(v.nu, -2.0, 1e-13);
    EXPECT_NEAR(v.nu, -0.25 * v.B_L2, 1e-13);
    EXPECT_LE(std::abs(v.defect), 1e-13);
}

TEST(VortexIdentity, TorusFamily) {
    auto v = vortex_identity(torus_family(-5.0), 1);
    EXPECT_NEAR(4 * v.gamma_L2, -v.nu, 1e-6);
    EXPECT_LT(v.nu, 0);
    EXPECT_LE(std::abs(v.defect), 1e-10);
}

TEST(VortexIdentity, RejectsNonEinsteinAndBadGenus) {
    EXPECT_THROW(vortex_identity(perturb_B(exact_torus(), 0.1), 1), Error);
    try {
        vortex_identity(perturb_B(exact_torus(), 0.1), 1);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotEinstein);
    }
    EXPECT_THROW(vortex_identity(exact_torus(), 2), Error);
    EXPECT_THROW(vortex_identity(exact_torus(), 0), Error);
}

TEST(VortexIdentity, DefectConvergesUnderRefinement) {
    // Wide chart so the pole tails sit far below the discretization error.
    std::vector<double> d;
    for (int n : {65, 129, 257}) {
        auto S = std::make_shared<SphereChart>(std::exp(-7.0), std::exp(7.0), n, 32);
        d.push_back(std::abs(vortex_identity(sphere_family(3.0, S, Realization::Grid), 0, 0.1).defect));
    }
    EXPECT_GE(d[0] / d[1], 4.0);
    EXPECT_GE(d[1] / d[2], 4.0);
}

TEST(VortexResidual, ExactTorusThreeCanonical) {
    auto r = vortex_residual(exact_torus());
    EXPECT_EQ(r.q, 3);
    EXPECT_NEAR(r.tau, 6.0, 1e-13);
    EXPECT_LE(r.residual, 1e-12);
}

TEST(VortexResidual, SphereFamilyModified) {
    for (double k : {-8.0, 0.0, 3.0}) {
        auto r = vortex_residual(sphere_family(k, chart()));
        EXPECT_EQ(r.q, -1);
        EXPECT_NEAR(r.tau, k, 1e-6);
        EXPECT_LE(r.residual, 1e-6) << k;
    }
}

TEST(ComplexScalar, SphereAndTorusFamilies) {
    auto s = complex_scalar_invariant(sphere_family(3.0, chart()));
    EXPECT_NEAR(s.value, 25.0, 1e-6);
    EXPECT_LE(s.spread, 1e-6);
    EXPECT_TRUE(s.matches(1e-6));
    auto t = complex_scalar_invariant(torus_family(-5.0));
    EXPECT_NEAR(t.value, 9.0, 1e-8);
    EXPECT_LE(t.spread, 1e-8);
    EXPECT_TRUE(t.matches(1e-8));
    auto e = complex_scalar_invariant(exact_torus());
    EXPECT_NEAR(e.value, 4.0, 1e-13);
    EXPECT_LE(e.spread, 1e-13);
}

TEST(Properties, CalabiBoundOnExactStructures) {
    for (double b2 : {0.5, 4.0, 8.0, 20.0}) EXPECT_GE(calabi_slack(exact_torus(32, b2)), -1e-9) << b2;
}

TEST(Properties, WeightedCurvatureConstantAlongGammaFlow) {
    for (double k : {-8.0, 0.0, 3.0}) EXPECT_LE(uR_flow_derivative(sphere_family(k, chart())), 1e-6) << k;
    EXPECT_LE(uR_flow_derivative(torus_family(-5.0)), 1e-6);
}

TEST(Properties, FamilyResidualsOnGridRealization) {
    // Curvature by finite differences on the round base; only pointwise
    // quantities away from round-off amplification near the poles are small.
    auto a = sphere_family(3.0, chart(), Realization::Grid);
    EXPECT_LE(einstein_residuals(a).killing, 1e-5);
    auto v = vortex_identity(a, 0);
    EXPECT_NEAR(v.nu, 17.479103067496865, 1e-6);
    auto t = einstein_residuals(torus_family(-5.0, 128, Realization::Grid));
    EXPECT_LE(t.max(), 1e-8);
}

TEST(Json, RoundTripAndNamedFamilies) {
    auto T = LatticeTorus::square(1.0, 16);
    auto a = perturb_B(exact_torus(0, 8.0, T), 0.05);
    auto b = structure_from_json(json::parse(to_json(a).dump()));
    for (int c = 0; c < 4; ++c) EXPECT_EQ(max_abs(a.B.comp[c] - b.B.comp[c]), 0.0);
    EXPECT_EQ(max_abs(a.metric.phi - b.metric.phi), 0.0);
    EXPECT_EQ(einstein_residuals(a).divB, einstein_residuals(b).divB);

    auto n = structure_from_json(json{{"family", "exact-torus"}, {"grid", 16}, {"B_norm2", 4.0}});
    EXPECT_NEAR(curvature_quantities(n).uR(0), -1.0, 1e-14);
    auto p = structure_from_json(json{{"family", "exact-torus"}, {"grid", 16}, {"perturb_B", 0.1}});
    EXPECT_GT(einstein_residuals(p).divB, 1e-2);
    auto tf = structure_from_json(json{{"family", "torus"}, {"kappa", -5.0}, {"grid", 64}});
    EXPECT_LE(einstein_residuals(tf).max(), 1e-10);
    auto k = realize(3, cplx(0.5, 0), T);
    auto e = structure_from_json(json{{"surface", surface_to_json(*T)},
                                      {"base", base_to_json({BaseKind::Flat})},
                                      {"phi", std::vector<double>(T->size(), 0.0)},
                                      {"B", to_json(k)}});
    EXPECT_LT(max_abs(e.B2 - 4.0), 1e-13);
    EXPECT_THROW(structure_from_json(json{{"family", "klein"}}), Error);
}
