#pragma once

#include "field.hpp"

#include <array>
#include <optional>

namespace ahs {

enum class BaseKind { Flat, Round, SphereFamily, TorusFamily };

inline const char* to_string(BaseKind b) {
    switch (b) {
    case BaseKind::Flat: return "flat-torus";
    case BaseKind::Round: return "round-sphere";
    case BaseKind::SphereFamily: return "sphere-family";
    case BaseKind::TorusFamily: return "torus-family";
    }
    return "?";
}

// Analytic background in chart coordinates: metric e^{psi} delta with known
// scalar curvature. Families use their closed-form conformal factor.
struct Base {
    BaseKind kind = BaseKind::Flat;
    double kappa = 0;

    bool on_torus() const { return kind == BaseKind::Flat || kind == BaseKind::TorusFamily; }

    Vec psi(const Vec& c1) const {
        switch (kind) {
        case BaseKind::Flat: return Vec::Zero(c1.size());
        case BaseKind::Round: return -2.0 * c1.cosh().log();
        case BaseKind::SphereFamily: {
            const double R = std::sqrt(kappa * kappa + 16);
            return std::log(4.0) - (R * (2 * c1).cosh() + kappa).log();
        }
        case BaseKind::TorusFamily: {
            const double R = std::sqrt(kappa * kappa - 16);
            return std::log(4.0) - (R * (2 * c1).cos() - kappa).log();
        }
        }
        return {};
    }

    // d psi / d c1 (no base depends on c2).
    Vec dpsi(const Vec& c1) const {
        switch (kind) {
        case BaseKind::Flat: return Vec::Zero(c1.size());
        case BaseKind::Round: return -2.0 * c1.tanh();
        case BaseKind::SphereFamily: {
            const double R = std::sqrt(kappa * kappa + 16);
            return -2 * R * (2 * c1).sinh() / (R * (2 * c1).cosh() + kappa);
        }
        case BaseKind::TorusFamily: {
            const double R = std::sqrt(kappa * kappa - 16);
            return 2 * R * (2 * c1).sin() / (R * (2 * c1).cos() - kappa);
        }
        }
        return {};
    }

    Vec curvature(const Vec& c1) const {
        switch (kind) {
        case BaseKind::Flat: return Vec::Zero(c1.size());
        case BaseKind::Round: return Vec::Constant(c1.size(), 2.0);
        case BaseKind::SphereFamily: return kappa + 4.0 * psi(c1).exp();
        case BaseKind::TorusFamily: {
            const double R = std::sqrt(kappa * kappa - 16);
            Vec c = (2 * c1).cos();
            return R * (kappa * c - R) / (R * c - kappa);
        }
        }
        return {};
    }
};

inline void check_base(const Base& b, const DiscreteSurface& s) {
    const bool torus = s.kind() == "torus";
    require(b.on_torus() == torus, ErrorCode::SurfaceMismatch,
            std::string("base ") + to_string(b.kind) + " does not live on a " + s.kind());
    if (b.kind == BaseKind::TorusFamily)
        require(b.kappa < -4, ErrorCode::InvalidArgument, "torus family needs kappa < -4");
}

// e^{phi} times an analytic base, on one surface.
struct ConformalMetric {
    SurfacePtr surface;
    Base base;
    Vec phi;

    ConformalMetric() = default;
    ConformalMetric(SurfacePtr s, Base b, Vec p) : surface(std::move(s)), base(b), phi(std::move(p)) {
        check_base(base, *surface);
        require(phi.size() == surface->size(), ErrorCode::InvalidArgument, "log factor size mismatch");
    }
    ConformalMetric(SurfacePtr s, Base b) : ConformalMetric(s, b, Vec::Zero(s->size())) {}
    ConformalMetric(const ScalarField& f, Base b) : ConformalMetric(f.surface, b, f.values) {}

    Vec psi() const { return base.psi(surface->c1()); }
    // Total log conformal factor against the flat chart reference.
    Vec sigma() const { return psi() + phi; }
    Vec volume_density() const { return sigma().exp(); }

    std::array<Vec, 2> dsigma() const {
        return {Vec(base.dpsi(surface->c1()) + surface->d1(phi)), Vec(surface->d2(phi))};
    }

    ConformalMetric rescaled(const Vec& mu) const { return ConformalMetric(surface, base, phi + mu); }
};

inline Vec laplacian(const Vec& f, const ConformalMetric& m) {
    require(f.size() == m.surface->size(), ErrorCode::SurfaceMismatch, "field does not live on the metric's surface");
    return (-m.sigma()).exp() * m.surface->lap(f);
}

inline ScalarField laplacian(const ScalarField& f, const ConformalMetric& m) {
    require_same(f.surface, m.surface);
    return ScalarField(m.surface, laplacian(f.values, m));
}

// sR of e^{phi} h_base = e^{-phi}(sR_base - Lap_base phi).
inline Vec scalar_curvature_values(const ConformalMetric& m) {
    const Vec& c1 = m.surface->c1();
    Vec lap_base = (-m.psi()).exp() * m.surface->lap(m.phi);
    return (-m.phi).exp() * (m.base.curvature(c1) - lap_base);
}

inline ScalarField scalar_curvature(const ConformalMetric& m) {
    return ScalarField(m.surface, scalar_curvature_values(m));
}

inline double integrate(const Vec& f, const ConformalMetric& m, bool axisymmetric = false) {
    Vec g = f * m.volume_density();
    if (axisymmetric) {
        auto* sc = dynamic_cast<const SphereChart*>(m.surface.get());
        if (sc) return sc->integrate_axisymmetric(g);
    }
    return m.surface->integrate_density(g);
}

inline double integrate(const ScalarField& f, const ConformalMetric& m, bool axisymmetric = false) {
    require_same(f.surface, m.surface);
    return integrate(f.values, m, axisymmetric);
}

inline double volume(const ConformalMetric& m) { return integrate(Vec::Ones(m.surface->size()), m); }

// (*a)_i = -a_p J_i^p with J d1 = d2; conformally invariant in dimension two.
inline OneFormField hodge_star(const OneFormField& a, const ConformalMetric& m) {
    require_same(a.surface, m.surface);
    return OneFormField{a.surface, Vec(-a.c2), a.c1};
}

inline double gauss_bonnet_defect(const ConformalMetric& m, int genus) {
    require(genus == 0 || genus == 1, ErrorCode::UnsupportedGenus, "genus must be 0 or 1");
    return integrate(scalar_curvature_values(m), m) - 4 * pi * (2 - 2 * genus);
}

// ---- tensor calculus for e^{sigma} delta -------------------------------------

inline Vec norm2(const Tensor& t, const ConformalMetric& m) {
    int w = 0;
    for (bool u : t.up) w += u ? 1 : -1;
    Vec s = Vec::Zero(m.surface->size());
    for (const auto& c : t.comp) s += c.square();
    return s * (double(w) * m.sigma()).exp();
}

inline Vec norm2(const SymTensorField& t, const ConformalMetric& m) {
    Vec s = Vec::Zero(m.surface->size());
    for (int k = 0; k <= t.rank; ++k) s += binomial(t.rank, k) * t.comp[k].square();
    const double w = t.contravariant ? t.rank : -t.rank;
    return s * (w * m.sigma()).exp();
}

inline Vec norm2(const OneFormField& g, const ConformalMetric& m) {
    return (g.c1.square() + g.c2.square()) * (-m.sigma()).exp();
}

namespace detail {
// Christoffel symbol Gamma^a_{bc} of e^{sigma} delta.
inline Vec christoffel(int a, int b, int c, const std::array<Vec, 2>& ds) {
    Vec r = Vec::Zero(ds[0].size());
    if (a == b) r += 0.5 * ds[c];
    if (a == c) r += 0.5 * ds[b];
    if (b == c) r -= 0.5 * ds[a];
    return r;
}
} // namespace detail

// Levi-Civita derivative; the new covariant slot is slot 0.
inline Tensor covariant_derivative(const Tensor& t, const ConformalMetric& m) {
    require_same(t.surface, m.surface);
    auto ds = m.dsigma();
    const int r = t.rank();
    std::vector<bool> up{false};
    up.insert(up.end(), t.up.begin(), t.up.end());
    Tensor out = Tensor::zeros(t.surface, up);
    std::array<std::array<std::array<Vec, 2>, 2>, 2> G;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) G[a][b][c] = detail::christoffel(a, b, c, ds);
    std::array<std::vector<Vec>, 2> dcomp;
    for (int p = 0; p < 2; ++p)
        for (const auto& c : t.comp) dcomp[p].push_back(m.surface->d(p, c));
    for (int p = 0; p < 2; ++p)
        for (unsigned I = 0; I < t.comp.size(); ++I) {
            Vec v = dcomp[p][I];
            for (int n = 0; n < r; ++n) {
                const int in = (I >> n) & 1u;
                for (int l = 0; l < 2; ++l) {
                    const unsigned J = (I & ~(1u << n)) | (unsigned(l) << n);
                    if (t.up[n]) v += G[in][p][l] * t.comp[J];
                    else v -= G[l][p][in] * t.comp[J];
                }
            }
            out.comp[(I << 1) | unsigned(p)] = v;
        }
    return out;
}

// Metric trace over slots a < b (both covariant, both contravariant, or mixed).
inline Tensor contract(const Tensor& t, int a, int b, const ConformalMetric& m) {
    require(a < b && b < t.rank(), ErrorCode::InvalidArgument, "bad contraction slots");
    std::vector<bool> up;
    for (int n = 0; n < t.rank(); ++n)
        if (n != a && n != b) up.push_back(t.up[n]);
    Tensor out = Tensor::zeros(t.surface, up);
    Vec w = Vec::Ones(m.surface->size());
    if (!t.up[a] && !t.up[b]) w = (-m.sigma()).exp();
    else if (t.up[a] && t.up[b]) w = m.sigma().exp();
    for (unsigned K = 0; K < out.comp.size(); ++K) {
        // insert bits at positions a and b
        for (unsigned l = 0; l < 2; ++l) {
            unsigned I = 0, src = 0;
            for (int n = 0; n < t.rank(); ++n) {
                unsigned bit;
                if (n == a || n == b) bit = l;
                else bit = (K >> src++) & 1u;
                I |= bit << n;
            }
            out.comp[K] += w * t.comp[I];
        }
    }
    return out;
}

// Lower or raise every slot with the metric.
inline Tensor flat(const Tensor& t, const ConformalMetric& m) {
    Tensor r = t;
    int nup = 0;
    for (bool u : t.up) nup += u;
    Vec w = (double(nup) * m.sigma()).exp();
    for (auto& c : r.comp) c *= w;
    std::fill(r.up.begin(), r.up.end(), false);
    return r;
}

inline Tensor sharp(const Tensor& t, const ConformalMetric& m) {
    Tensor r = t;
    int ndown = 0;
    for (bool u : t.up) ndown += !u;
    Vec w = (-double(ndown) * m.sigma()).exp();
    for (auto& c : r.comp) c *= w;
    std::fill(r.up.begin(), r.up.end(), true);
    return r;
}

inline Tensor tensor_product(const Tensor& a, const Tensor& b) {
    std::vector<bool> up = a.up;
    up.insert(up.end(), b.up.begin(), b.up.end());
    Tensor r = Tensor::zeros(a.surface, up);
    for (unsigned I = 0; I < a.comp.size(); ++I)
        for (unsigned J = 0; J < b.comp.size(); ++J) r.comp[I | (J << a.rank())] = a.comp[I] * b.comp[J];
    return r;
}

inline Vec max_norm_field(const Tensor& t, const ConformalMetric& m) { return norm2(t, m).sqrt(); }

} // namespace ahs
