#pragma once

#include "differentials.hpp"

#include <optional>

namespace ahs {

// (h, B, gamma): a Gauduchon representative, its cubic torsion lowered by h,
// and its Faraday primitive. B is kept as a raw tensor so that deliberately
// non-holomorphic perturbations can be represented; `cubic` records the
// differential it came from, if any.
struct AHStructure {
    ConformalMetric metric;
    SymTensorField B;
    OneFormField gamma;
    std::optional<KDifferential> cubic;

    // cached
    Vec sR, B2, gamma2, f, div_gamma;

    AHStructure() = default;
    AHStructure(ConformalMetric m, SymTensorField b, OneFormField g, std::optional<KDifferential> c = std::nullopt)
        : metric(std::move(m)), B(std::move(b)), gamma(std::move(g)), cubic(std::move(c)) {
        require_same(B.surface, metric.surface);
        require_same(gamma.surface, metric.surface);
        require(B.rank == 3 && !B.contravariant && B.comp.size() == 4, ErrorCode::InvalidArgument,
                "cubic torsion must be a covariant symmetric 3-tensor");
        const auto& s = *metric.surface;
        const Vec einv = (-metric.sigma()).exp();
        sR = scalar_curvature_values(metric);
        B2 = norm2(B, metric);
        gamma2 = norm2(gamma, metric);
        // 2F = f omega, F = -d gamma, omega = e^sigma dc1 ^ dc2
        f = -2 * einv * (s.d1(gamma.c2) - s.d2(gamma.c1));
        div_gamma = einv * (s.d1(gamma.c1) + s.d2(gamma.c2));
    }

    const SurfacePtr& surface() const { return metric.surface; }
    bool has_B(double tol = 1e-20) const { return max_abs(B2) > tol; }
    bool has_gamma(double tol = 1e-20) const { return max_abs(gamma2) > tol; }
};

inline SymTensorField zero_cubic(const SurfacePtr& s) {
    return SymTensorField{s, 3, false, std::vector<Vec>(4, Vec::Zero(s->size()))};
}

inline OneFormField zero_form(const SurfacePtr& s) { return {s, Vec::Zero(s->size()), Vec::Zero(s->size())}; }

inline AHStructure make_structure(const ConformalMetric& m, const KDifferential& B, const OneFormField& g) {
    require(B.k == 3, ErrorCode::InvalidArgument, "cubic torsion must have degree 3");
    return AHStructure(m, B.B, g, B);
}

struct CurvatureQuantities {
    Vec sR, uR, f, B2, gamma2;
};

// uR = sR - |B|^2/4 - 2 delta gamma, with delta gamma = -div gamma.
inline CurvatureQuantities curvature_quantities(const AHStructure& a) {
    return {a.sR, Vec(a.sR - 0.25 * a.B2 + 2 * a.div_gamma), a.f, a.B2, a.gamma2};
}

struct EinsteinResiduals {
    double divB = 0, Bgamma = 0, killing = 0, const_defect = 0;
    double E = 0;  // max |4E|, already folded into divB

    double max() const { return std::max({divB, Bgamma, killing, const_defect}); }
};

// Directional derivative X^p d_p u for the one-form X_p (raised with the metric).
inline Vec along_sharp(const OneFormField& X, const Vec& u, const ConformalMetric& m) {
    const auto& s = *m.surface;
    return (-m.sigma()).exp() * (X.c1 * s.d1(u) + X.c2 * s.d2(u));
}

inline Vec gradient_norm(const Vec& u, const ConformalMetric& m) {
    const auto& s = *m.surface;
    Vec du1 = s.d1(u), du2 = s.d2(u);
    return ((-m.sigma()).exp() * (du1.square() + du2.square())).sqrt();
}

inline EinsteinResiduals einstein_residuals(const AHStructure& a) {
    const auto& m = a.metric;
    EinsteinResiduals r;
    Tensor divB = divergence(a.B, m);
    r.divB = max_abs(max_norm_field(divB, m));
    if (a.has_gamma()) {
        Tensor gs = sharp(from_one_form(a.gamma), m);
        Tensor E4 = add(divB, interior(gs, a.B), -2.0);
        r.E = max_abs(max_norm_field(E4, m));
        r.divB = std::max(r.divB, r.E);
    }
    r.Bgamma = max_abs(a.B2 * a.gamma2.sqrt());
    r.killing = killing_residual(a.gamma, m);
    auto q = curvature_quantities(a);
    r.const_defect = max_abs(gradient_norm(Vec(q.uR - 4 * q.gamma2), m));
    return r;
}

struct VortexIdentity {
    double kappa = 0, nu = 0, defect = 0;
    double spread = 0;       // max |uR - 4|gamma|^2 - kappa| / max(1, |kappa|)
    double bound_slack = 0;  // 8 pi (1 - g) - nu
    double volume = 0, B_L2 = 0, gamma_L2 = 0;
    bool bound_holds() const { return bound_slack >= -1e-9; }
};

inline VortexIdentity vortex_identity(const AHStructure& a, int genus, double max_spread = 1e-4) {
    require(genus == 0 || genus == 1, ErrorCode::UnsupportedGenus, "genus must be 0 or 1");
    require(genus == a.surface()->genus(), ErrorCode::InvalidArgument, "genus does not match the surface");
    const auto& m = a.metric;
    auto q = curvature_quantities(a);
    Vec k = q.uR - 4 * q.gamma2;
    VortexIdentity v;
    v.volume = volume(m);
    v.kappa = integrate(k, m) / v.volume;
    v.spread = max_abs(k - v.kappa) / std::max(1.0, std::abs(v.kappa));
    require(v.spread <= max_spread, ErrorCode::NotEinstein,
            "uR - 4|gamma|^2 is not constant (relative spread " + format_double(v.spread) + ")");
    v.nu = v.kappa * v.volume;
    v.B_L2 = integrate(q.B2, m);
    v.gamma_L2 = integrate(q.gamma2, m);
    const double top = 8 * pi * (1 - genus);
    v.defect = top - 0.25 * v.B_L2 - 4 * v.gamma_L2 - v.nu;
    v.bound_slack = top - v.nu;
    return v;
}

struct VortexResidual {
    int q = 3;  // canonical power: 3 for exact structures, -1 for Weyl
    double tau = 0;
    double residual = 0;
};

// i Lambda(Omega) + sign(q) |s|^2 / 2 - tau / 2 with i Lambda(Omega) = -(q/2) sR on K^q,
// |s|^2 = (3/4)|B|^2 (q = 3) or 4|gamma|^2 (q = -1), tau = -q kappa.
inline VortexResidual vortex_residual(const AHStructure& a) {
    const bool b = a.has_B(), g = a.has_gamma();
    require(!(b && g), ErrorCode::MixedStructure, "vortex residual needs gamma = 0 or B = 0");
    const auto& m = a.metric;
    auto cq = curvature_quantities(a);
    VortexResidual r;
    r.q = g ? -1 : 3;
    Vec kfield = cq.uR - 4 * cq.gamma2;
    const double kappa = integrate(kfield, m) / volume(m);
    r.tau = -r.q * kappa;
    Vec s2 = g ? Vec(4 * cq.gamma2) : Vec(0.75 * cq.B2);
    const double sgn = r.q > 0 ? 1.0 : -1.0;
    r.residual = max_abs(-0.5 * r.q * cq.sR + 0.5 * sgn * s2 - 0.5 * r.tau);
    return r;
}

struct ComplexScalarInvariant {
    double value = 0, spread = 0, max_uR2 = 0;
    bool matches(double tol) const { return std::abs(value - max_uR2) <= tol * std::max(1.0, max_uR2); }
};

// uR^2 + f^2, which is constant for Einstein structures in Gauduchon gauge.
inline ComplexScalarInvariant complex_scalar_invariant(const AHStructure& a) {
    auto q = curvature_quantities(a);
    Vec c = q.uR.square() + q.f.square();
    ComplexScalarInvariant r;
    r.value = integrate(c, a.metric) / volume(a.metric);
    r.spread = max_abs(c - r.value);
    const double mx = q.uR.maxCoeff();
    r.max_uR2 = mx * mx;
    return r;
}

// min over the grid of -4 uR - |B|^2; nonnegative for exact Einstein structures.
inline double calabi_slack(const AHStructure& a) {
    auto q = curvature_quantities(a);
    return (-4 * q.uR - q.B2).minCoeff();
}

// max |gamma^sharp(uR)|.
inline double uR_flow_derivative(const AHStructure& a) {
    auto q = curvature_quantities(a);
    return max_abs(along_sharp(a.gamma, q.uR, a.metric));
}

// ---- builders ----------------------------------------------------------------

// Flat torus of area 1 with a parallel cubic differential, |B|^2 = b2 and uR = -b2/4.
inline AHStructure exact_torus(int n = 64, double b2 = 8.0, SurfacePtr s = nullptr) {
    if (!s) s = LatticeTorus::square(1.0, n);
    require(b2 > 0, ErrorCode::InvalidArgument, "|B|^2 must be positive");
    ConformalMetric m(s, {BaseKind::Flat});
    return make_structure(m, realize(3, cplx(std::sqrt(b2 / 16.0), 0), s), zero_form(s));
}

// gamma = e^sigma dr is the h-dual of the rotation field d/dr.
inline OneFormField rotation_dual(const ConformalMetric& m) {
    return {m.surface, Vec::Zero(m.surface->size()), m.sigma().exp()};
}

enum class Realization { Analytic, Grid };

// Sphere family on the chart. Grid realizes h as e^phi times the round metric,
// so curvature is computed by finite differences; Analytic uses the closed form.
inline AHStructure sphere_family(double kappa, SurfacePtr s = nullptr, Realization r = Realization::Analytic) {
    if (!s) s = SphereChart::make_default();
    require(s->kind() == "sphere", ErrorCode::SurfaceMismatch, "sphere family needs a sphere chart");
    Base fam{BaseKind::SphereFamily, kappa};
    ConformalMetric m = r == Realization::Analytic
                            ? ConformalMetric(s, fam)
                            : ConformalMetric(s, {BaseKind::Round},
                                              Vec(fam.psi(s->c1()) - Base{BaseKind::Round}.psi(s->c1())));
    return AHStructure(m, zero_cubic(s), rotation_dual(m));
}

// Torus family on the (s, r) square of side pi; gamma = e^sigma dr.
inline AHStructure torus_family(double kappa, int n = 128, Realization r = Realization::Analytic, SurfacePtr s = nullptr) {
    require(kappa < -4, ErrorCode::InvalidArgument, "torus family needs kappa < -4");
    if (!s) s = LatticeTorus::square(pi, n);
    Base fam{BaseKind::TorusFamily, kappa};
    ConformalMetric m = r == Realization::Analytic ? ConformalMetric(s, fam)
                                                   : ConformalMetric(s, {BaseKind::Flat}, fam.psi(s->c1()));
    return AHStructure(m, zero_cubic(s), rotation_dual(m));
}

inline AHStructure perturb_B(const AHStructure& a, double amplitude) {
    return AHStructure(a.metric, add(a.B, nonholomorphic_bump(a.surface(), amplitude)), a.gamma);
}

// ---- JSON --------------------------------------------------------------------

inline json base_to_json(const Base& b) { return {{"kind", to_string(b.kind)}, {"kappa", b.kappa}}; }

inline Base base_from_json(const json& j) {
    const std::string k = j.at("kind");
    Base b;
    if (k == "flat-torus") b.kind = BaseKind::Flat;
    else if (k == "round-sphere") b.kind = BaseKind::Round;
    else if (k == "sphere-family") b.kind = BaseKind::SphereFamily;
    else if (k == "torus-family") b.kind = BaseKind::TorusFamily;
    else throw Error(ErrorCode::InvalidArgument, "unknown base " + k);
    b.kappa = j.value("kappa", 0.0);
    return b;
}

namespace detail {
inline json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline Vec vec_from(const json& j, const DiscreteSurface& s) {
    auto d = j.get<std::vector<double>>();
    require(Eigen::Index(d.size()) == s.size(), ErrorCode::Io, "payload size does not match surface");
    return Eigen::Map<Vec>(d.data(), Eigen::Index(d.size()));
}
} // namespace detail

inline json to_json(const AHStructure& a) {
    json B = json::array();
    for (const auto& c : a.B.comp) B.push_back(detail::vec_json(c));
    return {{"schema", 1},
            {"kind", "ah-structure"},
            {"surface", surface_to_json(*a.surface())},
            {"base", base_to_json(a.metric.base)},
            {"phi", detail::vec_json(a.metric.phi)},
            {"B", B},
            {"gamma", {detail::vec_json(a.gamma.c1), detail::vec_json(a.gamma.c2)}}};
}

// Accepts either the explicit form written by to_json, or a named family:
//   {"family": "exact-torus", "grid": 64, "B_norm2": 8}
//   {"family": "sphere", "kappa": 3, "grid": [1025, 256], "realization": "analytic" or "grid"}
//   {"family": "torus", "kappa": -5, "grid": 128}
// with an optional "perturb_B": amplitude.
inline AHStructure structure_from_json(const json& j) {
    AHStructure a;
    if (j.contains("family")) {
        const std::string fam = j.at("family");
        const auto real = j.value("realization", std::string("analytic")) == "grid" ? Realization::Grid : Realization::Analytic;
        if (fam == "exact-torus") {
            a = exact_torus(j.value("grid", 64), j.value("B_norm2", 8.0));
        } else if (fam == "sphere") {
            SurfacePtr s;
            if (j.contains("grid")) {
                auto g = j.at("grid");
                s = std::make_shared<SphereChart>(std::exp(-5.0), std::exp(5.0), g[0].get<int>(), g[1].get<int>());
            }
            a = sphere_family(j.at("kappa").get<double>(), s, real);
        } else if (fam == "torus") {
            a = torus_family(j.at("kappa").get<double>(), j.value("grid", 128), real);
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown family " + fam);
        }
    } else {
        auto s = surface_from_json(j.at("surface"));
        ConformalMetric m(s, base_from_json(j.at("base")), detail::vec_from(j.at("phi"), *s));
        SymTensorField B = zero_cubic(s);
        if (j.contains("B")) {
            const auto& jb = j.at("B");
            if (jb.is_object()) {
                auto d = kdifferential_from_json(jb, s);
                require(d.k == 3, ErrorCode::InvalidArgument, "cubic torsion must have degree 3");
                B = d.B;
            } else {
                require(jb.size() == 4, ErrorCode::Io, "B needs four components");
                for (int c = 0; c < 4; ++c) B.comp[c] = detail::vec_from(jb[c], *s);
            }
        }
        OneFormField g = zero_form(s);
        if (j.contains("gamma")) {
            g.c1 = detail::vec_from(j.at("gamma")[0], *s);
            g.c2 = detail::vec_from(j.at("gamma")[1], *s);
        }
        a = AHStructure(m, B, g);
    }
    if (j.contains("perturb_B")) a = perturb_B(a, j.at("perturb_B").get<double>());
    return a;
}

} // namespace ahs
