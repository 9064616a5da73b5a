#pragma once

#include "structure.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <functional>
#include <random>
#include <sstream>

namespace ahs {

// Cone coordinates (c1, c2, t): index 2 is the dilation coordinate, the
// radial field is d/dt and horizontal lifts of chart vectors are d/dc1, d/dc2.
using Mat3 = Eigen::Matrix3d;
using Comps = std::vector<Vec>;

inline constexpr int TT = 2;
inline int g3(int a, int b, int c) { return 9 * a + 3 * b + c; }
inline int s3(int a, int b) { return 3 * a + b; }

// Weighted scalar curvature of an exact Einstein structure; rejects anything else.
inline double exact_negative_uR(const AHStructure& a) {
    require(!a.has_gamma(), ErrorCode::InvalidArgument, "cone needs an exact structure (gamma = 0)");
    const Vec uR = curvature_quantities(a).uR;
    const double m = uR.mean();
    require(max_abs(uR - m) <= 1e-8 * std::max(1.0, std::abs(m)), ErrorCode::NotEinstein,
            "weighted scalar curvature is not constant");
    require(m < 0, ErrorCode::DomainViolation, "cone metrics need uR < 0");
    return m;
}

// u = (uR/2)^{-1/3} on the real branch (negative), v = u^2.
inline double cone_u(double uR) { return 1.0 / std::cbrt(uR / 2); }
inline double cone_v(double uR) { return cone_u(uR) * cone_u(uR); }
inline double cone_F(double uR, double t) { return -3 * t - 3 * std::log(std::abs(cone_u(uR))); }

struct ConeGrid {
    AHStructure base;
    std::vector<double> t;
    double dt = 1e-2;
    double uR = 0;

    ConeGrid(AHStructure a, std::vector<double> ts, double step = 1e-2)
        : base(std::move(a)), t(std::move(ts)), dt(step) {
        uR = exact_negative_uR(base);
        require(!t.empty(), ErrorCode::InvalidArgument, "no t samples");
        require(step > 0, ErrorCode::InvalidArgument, "t step must be positive");
        for (size_t i = 0; i < t.size(); ++i) {
            require(std::isfinite(t[i]), ErrorCode::InvalidArgument, "t samples must be finite");
            if (i) require(t[i] > t[i - 1], ErrorCode::InvalidArgument, "t samples must be sorted");
        }
    }

    const DiscreteSurface& surface() const { return *base.surface(); }
};

// "a:b:h" style inclusive range.
inline std::vector<double> t_range(double a, double b, double h) {
    require(h > 0 && b >= a, ErrorCode::InvalidArgument, "bad t range");
    const int n = int(std::floor((b - a) / h + 1e-9));
    std::vector<double> r;
    for (int i = 0; i <= n; ++i) r.push_back(a + i * h);
    return r;
}

inline std::vector<double> parse_t_range(const std::string& s) {
    std::vector<double> p;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(std::stod(item));
    require(p.size() == 3, ErrorCode::InvalidArgument, "t range must look like a:b:h");
    return t_range(p[0], p[1], p[2]);
}

// ---- metric slices ---------------------------------------------------------

using SliceFn = std::function<Comps(double)>;

inline Comps g_slice(const ConeGrid& c, double t) {
    const Vec h = c.base.metric.volume_density();
    const double vt = cone_v(c.uR) * std::exp(2 * t);
    Comps g(9, Vec::Zero(h.size()));
    g[s3(0, 0)] = g[s3(1, 1)] = vt * (c.uR / 2) * h;
    g[s3(TT, TT)] = Vec::Constant(h.size(), vt);
    return g;
}

inline Comps f_slice(const ConeGrid& c, double) {
    const Vec h = c.base.metric.volume_density();
    Comps f(9, Vec::Zero(h.size()));
    f[s3(0, 0)] = f[s3(1, 1)] = -1.5 * c.uR * h;
    f[s3(TT, TT)] = Vec::Constant(h.size(), 3.0);
    return f;
}

inline Mat3 at(const Comps& m, Eigen::Index p) {
    Mat3 r;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) r(a, b) = m[s3(a, b)](p);
    return r;
}

// ---- finite differences in t -----------------------------------------------

inline Comps combine(const std::vector<std::pair<double, Comps>>& terms) {
    Comps r = terms[0].second;
    for (auto& v : r) v *= terms[0].first;
    for (size_t k = 1; k < terms.size(); ++k)
        for (size_t i = 0; i < r.size(); ++i) r[i] += terms[k].first * terms[k].second[i];
    return r;
}

inline Comps d_t(const SliceFn& fn, double t, double h) {
    return combine({{1 / (12 * h), fn(t - 2 * h)}, {-8 / (12 * h), fn(t - h)},
                    {8 / (12 * h), fn(t + h)}, {-1 / (12 * h), fn(t + 2 * h)}});
}

inline Comps d_tt(const SliceFn& fn, double t, double h) {
    const double w = 1 / (12 * h * h);
    return combine({{-w, fn(t - 2 * h)}, {16 * w, fn(t - h)}, {-30 * w, fn(t)},
                    {16 * w, fn(t + h)}, {-w, fn(t + 2 * h)}});
}

// dm[c][i] = d_c of component i.
inline std::array<Comps, 3> derivatives(const SliceFn& fn, double t, double h, const DiscreteSurface& S) {
    std::array<Comps, 3> d;
    const Comps m = fn(t);
    for (int c = 0; c < 2; ++c)
        for (const auto& v : m) d[c].push_back(S.d(c, v));
    d[TT] = d_t(fn, t, h);
    return d;
}

inline std::vector<Mat3> inverses(const Comps& g) {
    std::vector<Mat3> r(size_t(g[0].size()));
    for (Eigen::Index p = 0; p < g[0].size(); ++p) r[size_t(p)] = at(g, p).inverse();
    return r;
}

// Gamma^a_{bc} of a metric on the cone at level t.
inline Comps levi_civita(const SliceFn& gfn, double t, double h, const DiscreteSurface& S) {
    const Comps g = gfn(t);
    const auto dg = derivatives(gfn, t, h, S);
    const auto inv = inverses(g);
    const Eigen::Index n = g[0].size();
    Comps G(27, Vec::Zero(n));
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
            std::array<Vec, 3> low;
            for (int d = 0; d < 3; ++d) low[d] = 0.5 * (dg[b][s3(d, c)] + dg[c][s3(d, b)] - dg[d][s3(b, c)]);
            for (Eigen::Index p = 0; p < n; ++p)
                for (int a = 0; a < 3; ++a) {
                    double s = 0;
                    for (int d = 0; d < 3; ++d) s += inv[size_t(p)](a, d) * low[d](p);
                    G[g3(a, b, c)](p) = s;
                }
        }
    return G;
}

// Riemann R^l_{kij} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik,
// returned as the 81 components indexed 27 l + 9 k + 3 i + j.
inline Comps riemann(const Comps& G, const std::array<Comps, 3>& dG) {
    const Eigen::Index n = G[0].size();
    Comps R(81, Vec::Zero(n));
    for (int l = 0; l < 3; ++l)
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    Vec r = dG[i][g3(l, j, k)] - dG[j][g3(l, i, k)];
                    for (int m = 0; m < 3; ++m) r += G[g3(l, i, m)] * G[g3(m, j, k)] - G[g3(l, j, m)] * G[g3(m, i, k)];
                    R[27 * l + 9 * k + 3 * i + j] = r;
                }
    return R;
}

// Einstein tensor Ric - R g / 2 of a cone metric at level t, by nested differences.
inline Comps einstein_tensor(const SliceFn& gfn, double t, double h, const DiscreteSurface& S) {
    SliceFn Gfn = [&](double s) { return levi_civita(gfn, s, h, S); };
    const Comps G = Gfn(t);
    const auto dG = derivatives(Gfn, t, h, S);
    const Comps R = riemann(G, dG);
    const Comps g = gfn(t);
    const auto inv = inverses(g);
    const Eigen::Index n = g[0].size();
    Comps ric(9, Vec::Zero(n));
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) ric[s3(k, j)] += R[27 * l + 9 * k + 3 * l + j];
    Vec scal = Vec::Zero(n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) scal(p) += inv[size_t(p)](a, b) * ric[s3(a, b)](p);
    Comps ein(9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) ein[s3(a, b)] = ric[s3(a, b)] - 0.5 * scal * g[s3(a, b)];
    return ein;
}

// ---- Thomas connection -----------------------------------------------------

struct ThomasConnection {
    SurfacePtr surface;
    double uR = 0;
    Comps G;  // Gamma^a_{bc}, index g3(a, b, c); independent of t
    double flatness = 0;         // max |curvature|
    double radial = 0;           // max |nabla X - Id|
    double torsion = 0;
    double volume_parallel = 0;  // max |nabla log Psi|

    const Vec& operator()(int a, int b, int c) const { return G[size_t(g3(a, b, c))]; }
};

inline ThomasConnection thomas_coefficients(const AHStructure& a) {
    ThomasConnection T;
    T.surface = a.surface();
    T.uR = exact_negative_uR(a);
    const auto& S = *a.surface();
    const Eigen::Index n = S.size();
    const auto ds = a.metric.dsigma();
    const Vec h = a.metric.volume_density();
    const Vec hinv = (-a.metric.sigma()).exp();
    T.G.assign(27, Vec::Zero(n));
    // spatial part: aligned representative D - B/2
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                T.G[g3(k, i, j)] = detail::christoffel(k, i, j, ds) - 0.5 * hinv * a.B.comp[size_t(i + j + k)];
    for (int i = 0; i < 2; ++i) {
        T.G[g3(TT, i, i)] = -(T.uR / 2) * h;  // P(X, Y) along the radial field
        T.G[g3(i, i, TT)] = T.G[g3(i, TT, i)] = Vec::Ones(n);
    }
    T.G[g3(TT, TT, TT)] = Vec::Ones(n);

    // dilation invariance makes every t-derivative of the coefficients vanish
    std::array<Comps, 3> dG;
    for (int c = 0; c < 2; ++c)
        for (const auto& v : T.G) dG[c].push_back(S.d(c, v));
    dG[TT].assign(27, Vec::Zero(n));
    for (const auto& r : riemann(T.G, dG)) T.flatness = std::max(T.flatness, max_abs(r));

    for (int I = 0; I < 3; ++I)
        for (int J = 0; J < 3; ++J) {
            T.radial = std::max(T.radial, max_abs(T.G[g3(J, I, TT)] - (I == J ? 1.0 : 0.0)));
            for (int K = 0; K < 3; ++K) T.torsion = std::max(T.torsion, max_abs(T.G[g3(J, I, K)] - T.G[g3(J, K, I)]));
        }
    // Psi = sqrt(det h) e^{3t}
    for (int I = 0; I < 3; ++I) {
        Vec r = I < 2 ? ds[size_t(I)] : Vec::Constant(n, 3.0);
        for (int K = 0; K < 3; ++K) r -= T.G[g3(K, K, I)];
        T.volume_parallel = std::max(T.volume_parallel, max_abs(r));
    }
    return T;
}

// Hessian nabla-hat d phi at level t for phi given slice by slice.
inline Comps thomas_hessian(const ThomasConnection& T, const std::function<Vec(double)>& phi, double t, double h) {
    const auto& S = *T.surface;
    const Vec p0 = phi(t);
    SliceFn wrap = [&](double s) { return Comps{phi(s)}; };
    const Vec pt = d_t(wrap, t, h)[0];
    const std::array<Vec, 3> dphi{S.d1(p0), S.d2(p0), pt};
    Comps H(9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            Vec second = (a < 2 && b < 2) ? S.d(b, dphi[size_t(a)])
                         : (a == TT && b == TT) ? d_tt(wrap, t, h)[0]
                                                : S.d(a < 2 ? a : b, pt);
            for (int k = 0; k < 3; ++k) second -= T(k, a, b) * dphi[size_t(k)];
            H[s3(a, b)] = second;
        }
    return H;
}

// ---- metrics on the cone ---------------------------------------------------

struct ConeMetricSample {
    Eigen::Index point = 0;
    double x = 0, y = 0, t = 0;
    Mat3 g, f;
    double F = 0;
};

inline std::vector<ConeMetricSample> cone_metrics(const ConeGrid& c) {
    const auto& S = c.surface();
    const Vec px = S.plane_x(), py = S.plane_y();
    std::vector<ConeMetricSample> out;
    out.reserve(c.t.size() * size_t(S.size()));
    for (double t : c.t) {
        const Comps g = g_slice(c, t), f = f_slice(c, t);
        const double F = cone_F(c.uR, t);
        for (Eigen::Index p = 0; p < S.size(); ++p) out.push_back({p, px(p), py(p), t, at(g, p), at(f, p), F});
    }
    return out;
}

// one positive and two negative eigenvalues for g, all positive for f
inline bool signature_ok(const ConeMetricSample& s) {
    Eigen::SelfAdjointEigenSolver<Mat3> eg(s.g, Eigen::EigenvaluesOnly), ef(s.f, Eigen::EigenvaluesOnly);
    const auto& lg = eg.eigenvalues();
    return lg(0) < 0 && lg(1) < 0 && lg(2) > 0 && ef.eigenvalues()(0) > 0;
}

struct HessianResiduals {
    double f = 0;  // max |Hess F - f|
    double g = 0;  // max |Hess(v)/2 - g| / max |g|
};

inline HessianResiduals hessian_residuals(const ConeGrid& c) {
    const auto T = thomas_coefficients(c.base);
    const Eigen::Index n = c.surface().size();
    HessianResiduals r;
    auto F = [&](double t) { return Vec::Constant(n, cone_F(c.uR, t)); };
    auto v = [&](double t) { return Vec::Constant(n, cone_v(c.uR) * std::exp(2 * t)); };
    for (double t : c.t) {
        const Comps hf = thomas_hessian(T, F, t, c.dt), hv = thomas_hessian(T, v, t, c.dt);
        const Comps f = f_slice(c, t), g = g_slice(c, t);
        double gmax = 0;
        for (const auto& x : g) gmax = std::max(gmax, max_abs(x));
        for (int i = 0; i < 9; ++i) {
            r.f = std::max(r.f, max_abs(hf[i] - f[i]));
            r.g = std::max(r.g, max_abs(0.5 * hv[i] - g[i]) / gmax);
        }
    }
    return r;
}

struct LevelSetGeometry {
    double f_second_fundamental = 0;  // level sets f-totally geodesic
    double f_radial_parallel = 0;     // D_f (d/dt / sqrt 3)
    double f_radial_norm = 0;         // max | |d/dt|_f^2 - 3 |
    double g_umbilic = 0;             // trace-free shape operator
    double g_mean_curvature_spread = 0;
    bool g_spacelike = true;
    double g_induced_ratio_spread = 0;  // induced metric / h constant on each level
};

inline LevelSetGeometry level_set_geometry(const ConeGrid& c) {
    const auto& S = c.surface();
    const Eigen::Index n = S.size();
    const Vec h = c.base.metric.volume_density();
    LevelSetGeometry r;
    SliceFn ff = [&](double t) { return f_slice(c, t); };
    SliceFn gf = [&](double t) { return g_slice(c, t); };
    for (double t : c.t) {
        const Comps Gf = levi_civita(ff, t, c.dt, S), Gg = levi_civita(gf, t, c.dt, S);
        const Comps f = f_slice(c, t), g = g_slice(c, t);
        const auto finv = inverses(f), ginv = inverses(g);
        double hmin = 1e300, hmax = -1e300, qmin = 1e300, qmax = -1e300;
        for (Eigen::Index p = 0; p < n; ++p) {
            const double nf = std::sqrt(finv[size_t(p)](TT, TT));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    r.f_second_fundamental = std::max(r.f_second_fundamental, std::abs(Gf[g3(TT, i, j)](p) / nf));
            for (int I = 0; I < 3; ++I)
                for (int J = 0; J < 3; ++J)
                    r.f_radial_parallel = std::max(r.f_radial_parallel, std::abs(Gf[g3(J, I, TT)](p)) / std::sqrt(3.0));
            r.f_radial_norm = std::max(r.f_radial_norm, std::abs(f[s3(TT, TT)](p) - 3));

            const double ng = std::sqrt(ginv[size_t(p)](TT, TT));
            Eigen::Matrix2d ind, II;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    ind(i, j) = g[s3(i, j)](p);
                    II(i, j) = Gg[g3(TT, i, j)](p) / ng;
                }
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ind, Eigen::EigenvaluesOnly);
            if (es.eigenvalues()(1) >= 0) r.g_spacelike = false;
            const Eigen::Matrix2d shape = ind.inverse() * II;
            const double H = 0.5 * shape.trace();
            r.g_umbilic = std::max(r.g_umbilic, (shape - H * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
            hmin = std::min(hmin, H);
            hmax = std::max(hmax, H);
            const double q = ind(0, 0) / h(p);
            qmin = std::min(qmin, q);
            qmax = std::max(qmax, q);
            r.g_induced_ratio_spread = std::max(r.g_induced_ratio_spread, std::abs(ind(0, 1)) / h(p));
        }
        r.g_mean_curvature_spread = std::max(r.g_mean_curvature_spread, hmax - hmin);
        r.g_induced_ratio_spread = std::max(r.g_induced_ratio_spread, qmax - qmin);
    }
    return r;
}

// ---- determinant identities ------------------------------------------------

struct DeterminantIdentities {
    double detg_defect = 0;  // max |det g - Psi^2|
    double detf_defect = 0;  // max |det f - 27 e^{2F} Psi^2|
    double psi_constant = 0;  // Psi = psi_constant sqrt(det h) e^{3t}, pinned at t = 0
    double parallel_defect = 0;  // max |d (det g / Psi^2)|
};

inline Vec psi_squared(const ConeGrid& c, double t, double constant) {
    return constant * constant * (2 * c.base.metric.sigma()).exp() * std::exp(6 * t);
}

inline double psi_normalization(const ConeGrid& c) {
    const Vec s = c.base.metric.sigma();
    return std::sqrt(at(g_slice(c, 0.0), 0).determinant() / std::exp(2 * s(0)));
}

inline Vec det_slice(const Comps& m) {
    Vec d(m[0].size());
    for (Eigen::Index p = 0; p < d.size(); ++p) d(p) = at(m, p).determinant();
    return d;
}

inline DeterminantIdentities determinant_identities(const ConeGrid& c) {
    DeterminantIdentities r;
    const auto& S = c.surface();
    r.psi_constant = psi_normalization(c);
    SliceFn ratio = [&](double t) { return Comps{det_slice(g_slice(c, t)) / psi_squared(c, t, r.psi_constant)}; };
    for (double t : c.t) {
        const Vec P2 = psi_squared(c, t, r.psi_constant);
        r.detg_defect = std::max(r.detg_defect, max_abs(det_slice(g_slice(c, t)) - P2));
        r.detf_defect = std::max(r.detf_defect,
                                 max_abs(det_slice(f_slice(c, t)) - 27 * std::exp(2 * cone_F(c.uR, t)) * P2));
        const auto d = derivatives(ratio, t, c.dt, S);
        for (int a = 0; a < 3; ++a) r.parallel_defect = std::max(r.parallel_defect, max_abs(d[a][0]));
    }
    return r;
}

// ---- Monge-Ampere potential ------------------------------------------------

// r = C^{1/3} - w^3 makes the integrand smooth at the upper end.
inline double ma_Psi(double C, double tau) {
    const double lo = std::exp(-tau / 3), hi = std::cbrt(C);
    if (lo >= hi) return 0.0;
    auto g = [hi](double w) {
        const double w3 = w * w * w;
        return 3 * w3 * std::cbrt(3 * hi * hi - 3 * hi * w3 + w3 * w3);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, std::cbrt(hi - lo), 8, 1e-14);
}

inline double ma_dPsi(double C, double tau) { return std::exp(-tau / 3) / 3 * std::cbrt(C - std::exp(-tau)); }

// from dPsi + 3 ddPsi = dPsi / (C e^tau - 1)
inline double ma_ddPsi(double C, double tau) {
    return ma_dPsi(C, tau) * (1 / (C * std::exp(tau) - 1) - 1) / 3;
}

struct MongeAmpereSample {
    double t, F, Psi, dPsi, ddPsi, ddPsi_fd;
};

struct MongeAmpere {
    double C = 0;
    std::vector<MongeAmpereSample> samples;
    double det_defect = 0;         // max |27 Psi'^2 (Psi' + 3 Psi'') e^{2F} - 1|
    double matrix_defect = 0;      // max |det(Psi' f + Psi'' dF dF) / Psi^2 - 1| on the cone grid
    double fd_defect = 0;          // max |Psi''_fd - Psi''| / Psi'
    double quadrature_defect = 0;  // max relative |d/dt Psi_quad - Psi'|
};

inline MongeAmpere monge_ampere_potential(const ConeGrid& c, double C, const std::vector<double>& ts) {
    require(C > 0, ErrorCode::InvalidArgument, "C must be positive");
    MongeAmpere m;
    m.C = C;
    const double h = 1e-3;
    const auto& S = c.surface();
    const double pc = psi_normalization(c);
    auto Ffn = [&](double t) { return Vec::Constant(S.size(), cone_F(c.uR, t)); };
    for (double t : ts) {
        const double F = cone_F(c.uR, t);
        require(F > -std::log(C), ErrorCode::DomainViolation,
                "F <= -log C at t = " + format_double(t) + ": outside the Monge-Ampere domain");
        require(F - 2 * h > -std::log(C), ErrorCode::DomainViolation, "difference stencil leaves the domain");
        MongeAmpereSample s{t, F, ma_Psi(C, F), ma_dPsi(C, F), ma_ddPsi(C, F), 0};
        s.ddPsi_fd = (ma_dPsi(C, F - 2 * h) - 8 * ma_dPsi(C, F - h) + 8 * ma_dPsi(C, F + h) - ma_dPsi(C, F + 2 * h)) / (12 * h);
        const double dq = (ma_Psi(C, F - 2 * h) - 8 * ma_Psi(C, F - h) + 8 * ma_Psi(C, F + h) - ma_Psi(C, F + 2 * h)) / (12 * h);
        m.fd_defect = std::max(m.fd_defect, std::abs(s.ddPsi_fd - s.ddPsi) / s.dPsi);
        m.quadrature_defect = std::max(m.quadrature_defect, std::abs(dq - s.dPsi) / s.dPsi);
        m.det_defect = std::max(m.det_defect,
                                std::abs(27 * s.dPsi * s.dPsi * (s.dPsi + 3 * s.ddPsi) * std::exp(2 * F) - 1));

        const Comps f = f_slice(c, t);
        const Vec P2 = psi_squared(c, t, pc);
        SliceFn wrap = [&](double x) { return Comps{Ffn(x)}; };
        const Vec Ft = d_t(wrap, t, c.dt)[0];
        const Vec F0 = Ffn(t);
        const std::array<Vec, 3> dF{S.d1(F0), S.d2(F0), Ft};
        for (Eigen::Index p = 0; p < S.size(); ++p) {
            Eigen::Vector3d v(dF[0](p), dF[1](p), dF[2](p));
            Mat3 phi = s.dPsi * at(f, p) + s.ddPsi * v * v.transpose();
            m.matrix_defect = std::max(m.matrix_defect, std::abs(phi.determinant() / P2(p) - 1));
        }
        m.samples.push_back(s);
    }
    return m;
}

// ---- dust --------------------------------------------------------------------

struct DustResidual {
    double residual = 0;       // max |Ein(g) - T| with T = -(|B|^2 / (4 uR)) dt dt
    double energy_min = 0;     // min over random U of Ein(U, U) / |U|^2_euclid
    bool trivial = false;      // B = 0: flat cone
};

inline DustResidual dust_residual(const ConeGrid& c, std::uint64_t seed = 1, int draws = 100) {
    DustResidual r;
    r.trivial = !c.base.has_B();
    const auto& S = c.surface();
    SliceFn gf = [&](double t) { return g_slice(c, t); };
    const Vec Ttt = -c.base.B2 / (4 * c.uR);
    std::vector<Comps> ein;
    for (double t : c.t) {
        ein.push_back(einstein_tensor(gf, t, c.dt, S));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                Vec d = ein.back()[s3(a, b)];
                if (a == TT && b == TT) d -= Ttt;
                r.residual = std::max(r.residual, max_abs(d));
            }
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick_t(0, c.t.size() - 1);
    std::uniform_int_distribution<Eigen::Index> pick_p(0, S.size() - 1);
    std::normal_distribution<double> nd;
    r.energy_min = 1e300;
    for (int k = 0; k < draws; ++k) {
        const size_t it = pick_t(rng);
        const Eigen::Index p = pick_p(rng);
        Eigen::Vector3d U(nd(rng), nd(rng), nd(rng));
        r.energy_min = std::min(r.energy_min, U.dot(at(ein[it], p) * U) / U.squaredNorm());
    }
    return r;
}

// Eigenvalues of g and f along t at one chart point.
inline std::string cone_eigen_csv(const ConeGrid& c, Eigen::Index point = 0) {
    std::string out = "t,g1,g2,g3,f1,f2,f3\n";
    for (double t : c.t) {
        Eigen::SelfAdjointEigenSolver<Mat3> eg(at(g_slice(c, t), point), Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Mat3> ef(at(f_slice(c, t), point), Eigen::EigenvaluesOnly);
        out += format_double(t);
        for (int i = 0; i < 3; ++i) out += "," + format_double(eg.eigenvalues()(i));
        for (int i = 0; i < 3; ++i) out += "," + format_double(ef.eigenvalues()(i));
        out += "\n";
    }
    return out;
}

} // namespace ahs
