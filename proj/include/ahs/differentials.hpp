#pragma once

#include "field_io.hpp"
#include "metric.hpp"

#include <optional>

namespace ahs {

// sigma = p(z) dz^k with B = 2 Re sigma. On the sphere chart z = e^w, w = s + i r,
// so sigma = q dw^k with q = p(e^w) e^{k w}; on the torus w = z = x + i y and q = c.
struct KDifferential {
    enum class Rep { Constant, Polynomial };

    int k = 0;
    Rep rep = Rep::Constant;
    std::vector<cplx> coeffs;
    SurfacePtr surface;
    Vec q_re, q_im;
    SymTensorField B;
};

namespace detail {

inline void coefficient_field(const DiscreteSurface& s, int k, const std::vector<cplx>& p, Vec& re, Vec& im) {
    re.resize(s.size());
    im.resize(s.size());
    const bool sphere = s.kind() == "sphere";
    for (Eigen::Index n = 0; n < s.size(); ++n) {
        cplx q;
        if (sphere) {
            const cplx w(s.c1()(n), s.c2()(n));
            const cplx z = std::exp(w);
            cplx pz = 0;
            for (size_t a = p.size(); a-- > 0;) pz = pz * z + p[a];
            q = pz * std::exp(double(k) * w);
        } else {
            q = p.empty() ? cplx(0) : p[0];
        }
        re(n) = q.real();
        im(n) = q.imag();
    }
}

} // namespace detail

inline KDifferential realize(int k, std::vector<cplx> coeffs, SurfacePtr s) {
    require(k != 0, ErrorCode::InvalidArgument, "degree must be nonzero");
    KDifferential d;
    d.k = k;
    d.surface = s;
    d.rep = coeffs.size() <= 1 ? KDifferential::Rep::Constant : KDifferential::Rep::Polynomial;
    if (s->kind() == "torus") {
        for (size_t a = 1; a < coeffs.size(); ++a)
            require(coeffs[a] == cplx(0), ErrorCode::NonConstantCoefficient,
                    "torus differentials take a constant coefficient");
        coeffs.resize(1);
        d.rep = KDifferential::Rep::Constant;
    }
    d.coeffs = coeffs;
    detail::coefficient_field(*s, k, coeffs, d.q_re, d.q_im);
    const int r = std::abs(k);
    d.B = SymTensorField{s, r, k < 0, {}};
    // covariant: B_m = 2 Re(q i^m); contravariant: B^m = 2^{1-r} Re(q (-i)^m)
    const double scale = k > 0 ? 2.0 : std::pow(2.0, 1 - r);
    for (int m = 0; m <= r; ++m) {
        // Re(q i^m) cycles through Re q, -Im q, -Re q, Im q; (-i)^m flips the odd terms
        const int c = m % 4;
        const double odd = k > 0 ? 1.0 : -1.0;
        Vec v = (c % 2 == 0) ? d.q_re : Vec(-odd * d.q_im);
        if (c >= 2) v = -v;
        d.B.comp.push_back(scale * v);
    }
    return d;
}

inline KDifferential realize(int k, cplx c, SurfacePtr s) { return realize(k, std::vector<cplx>{c}, std::move(s)); }

inline Vec norm2(const KDifferential& d, const ConformalMetric& m) { return norm2(d.B, m); }

// Hermitian norm of the (k,0) part; equals |B|^2 / 2.
inline Vec sigma_norm2(const KDifferential& d, const ConformalMetric& m) { return 0.5 * norm2(d.B, m); }

// The same quantity from the complex coefficient: |q|^2 |dw|^{2k} = 2^k |q|^2 e^{-k sigma}.
inline Vec sigma_norm2_from_coefficient(const KDifferential& d, const ConformalMetric& m) {
    return std::pow(2.0, d.k) * (d.q_re.square() + d.q_im.square()) * (-double(d.k) * m.sigma()).exp();
}

inline Vec trace_defect(const SymTensorField& B, const ConformalMetric& m) {
    if (B.rank < 2) return Vec::Zero(m.surface->size());
    return max_norm_field(contract(to_full(B), 0, 1, m), m);
}

inline Tensor divergence(const SymTensorField& B, const ConformalMetric& m) {
    require_same(B.surface, m.surface);
    Tensor DB = covariant_derivative(to_full(B), m);
    return contract(DB, 0, 1, m);
}

inline double codazzi_residual(const SymTensorField& B, const ConformalMetric& m) {
    return max_abs(max_norm_field(divergence(B, m), m));
}

inline double codazzi_residual(const KDifferential& d, const ConformalMetric& m) {
    require(d.k > 1, ErrorCode::InvalidArgument, "Codazzi residual needs k > 1");
    return codazzi_residual(d.B, m);
}

inline Tensor killing_tensor(const OneFormField& g, const ConformalMetric& m) {
    require_same(g.surface, m.surface);
    Tensor D = covariant_derivative(from_one_form(g), m);
    Tensor L = D;
    for (unsigned I = 0; I < 4; ++I) {
        const unsigned T = ((I & 1u) << 1) | ((I >> 1) & 1u);
        L.comp[I] = D.comp[I] + D.comp[T];
    }
    return L;
}

// max |2 D_(i gamma_j)|_m.
inline double killing_residual(const OneFormField& g, const ConformalMetric& m) {
    return max_abs(max_norm_field(killing_tensor(g, m), m));
}

struct WeitzenbockResult {
    double identity;  // max |Lap|s|^2 - 2|Ds|^2 - k sR |s|^2| / max |s|^2
    double log_identity;  // max |Lap log|s|^2 - k sR| on {|s|^2 > eps}
};

inline WeitzenbockResult weitzenbock_residual(const KDifferential& d, const ConformalMetric& m,
                                              std::optional<int> k_assumed = std::nullopt, double eps_rel = 1e-6) {
    require_same(d.surface, m.surface);
    const double k = k_assumed.value_or(d.k);
    Vec s2 = sigma_norm2(d, m);
    const double smax = max_abs(s2);
    require(smax > 0, ErrorCode::InvalidArgument, "differential vanishes identically");
    Vec Ds2 = 0.5 * norm2(covariant_derivative(to_full(d.B), m), m);
    Vec sR = scalar_curvature_values(m);
    Vec r1 = laplacian(s2, m) - 2 * Ds2 - k * sR * s2;
    Vec mask = (s2 > eps_rel * smax).cast<double>();
    Vec logs = s2.max(eps_rel * smax).log();
    Vec r2 = (laplacian(logs, m) - k * sR) * mask;
    return {max_abs(r1) / smax, max_abs(r2)};
}

struct SingularFlatResult {
    ConformalMetric metric;
    double defect;
    double masked_fraction;
};

// |sigma|^{2/k} m, flat off the zero set.
inline SingularFlatResult singular_flat_metric(const KDifferential& d, const ConformalMetric& m, double eps_rel = 1e-6,
                                               double max_masked = 0.05) {
    require(d.k != 0, ErrorCode::InvalidArgument, "k must be nonzero");
    require_same(d.surface, m.surface);
    const auto& s = *m.surface;
    Vec s2 = sigma_norm2(d, m);
    const double smax = max_abs(s2);
    require(smax > 0, ErrorCode::InvalidArgument, "differential vanishes identically");
    const double eps = eps_rel * smax;
    std::vector<char> bad(s.size(), 0);
    Eigen::Index nbad = 0;
    for (Eigen::Index n = 0; n < s.size(); ++n)
        if (s2(n) <= eps) {
            bad[n] = 1;
            ++nbad;
        }
    const double frac = double(nbad) / s.size();
    require(frac <= max_masked, ErrorCode::InvalidArgument, "differential vanishes on too much of the grid");
    ConformalMetric flat(m.surface, m.base, m.phi + s2.max(eps).log() / d.k);
    Vec sR = scalar_curvature_values(flat);
    // Spectral derivatives spread the log singularity along whole rows (and, on
    // the torus, columns), so exclude bands around masked points rather than discs.
    std::vector<char> bad_row(s.n1(), 0), bad_col(s.n2(), 0);
    for (int i = 0; i < s.n1(); ++i)
        for (int j = 0; j < s.n2(); ++j)
            if (bad[s.index(i, j)]) bad_row[i] = bad_col[j] = 1;
    const bool sphere = s.kind() == "sphere";
    int row_band = 4, col_band = 0;
    if (auto* c = dynamic_cast<const SphereChart*>(&s))
        row_band = std::max(row_band, int(std::ceil(30.0 / s.n2() / c->ds())));
    else {
        row_band = std::max(4, s.n1() / 8);
        col_band = std::max(4, s.n2() / 8);
    }
    auto near = [](const std::vector<char>& b, int i, int band, bool periodic) {
        const int n = int(b.size());
        for (int di = -band; di <= band; ++di) {
            int ii = i + di;
            if (periodic) ii = (ii % n + n) % n;
            else if (ii < 0 || ii >= n) continue;
            if (b[ii]) return true;
        }
        return false;
    };
    double defect = 0;
    for (int i = 0; i < s.n1(); ++i) {
        if (near(bad_row, i, row_band, !sphere)) continue;
        for (int j = 0; j < s.n2(); ++j) {
            if (!sphere && near(bad_col, j, col_band, true)) continue;
            defect = std::max(defect, std::abs(sR(s.index(i, j))));
        }
    }
    return {flat, defect, frac};
}

inline double cone_angle(int k, int beta) {
    require(k != 0 && double(beta) / k > -1, ErrorCode::InvalidArgument, "cone angle needs beta/k > -1");
    return 2 * pi * (double(beta) / k + 1);
}

// Sum of zero orders of a nonzero holomorphic k-differential on a genus-g surface.
inline int zero_order_budget(int k, int genus) { return 2 * k * (genus - 1); }

// iota(X) B for a contravariant vector X and covariant B.
inline Tensor interior(const Tensor& X, const SymTensorField& B) {
    Tensor full = to_full(B);
    std::vector<bool> up(B.rank - 1, false);
    Tensor r = Tensor::zeros(B.surface, up);
    for (unsigned I = 0; I < full.comp.size(); ++I) r.comp[I >> 1] += X.comp[I & 1u] * full.comp[I];
    return r;
}

// amplitude * sin(2 pi u) times the trace-free part of dx^3, u the first lattice coordinate.
inline SymTensorField nonholomorphic_bump(const SurfacePtr& s, double amplitude) {
    Vec f;
    if (auto* t = dynamic_cast<const LatticeTorus*>(s.get())) f = (2 * pi * t->lattice_coord(0)).sin();
    else f = s->c1().sin();
    f *= amplitude;
    SymTensorField p{s, 3, false, {}};
    p.comp = {0.25 * f, Vec::Zero(s->size()), -0.25 * f, Vec::Zero(s->size())};
    return p;
}

inline json to_json(const KDifferential& d) {
    json c;
    if (d.rep == KDifferential::Rep::Constant)
        c = {{"type", "constant"}, {"re", d.coeffs[0].real()}, {"im", d.coeffs[0].imag()}};
    else {
        json a = json::array();
        for (auto& z : d.coeffs) a.push_back({z.real(), z.imag()});
        c = {{"type", "polynomial"}, {"coeffs", a}};
    }
    return {{"degree", d.k}, {"coefficient", c}, {"surface", surface_to_json(*d.surface)}};
}

inline std::vector<cplx> coefficients_from_json(const json& c) {
    if (c.is_number()) return {cplx(c.get<double>(), 0)};
    const std::string type = c.value("type", "constant");
    if (type == "constant") return {cplx(c.value("re", 0.0), c.value("im", 0.0))};
    std::vector<cplx> out;
    for (auto& z : c.at("coeffs")) out.emplace_back(z[0].get<double>(), z[1].get<double>());
    return out;
}

inline KDifferential kdifferential_from_json(const json& j, SurfacePtr s = nullptr) {
    if (!s) s = surface_from_json(j.at("surface"));
    return realize(j.at("degree").get<int>(), coefficients_from_json(j.at("coefficient")), s);
}

} // namespace ahs
