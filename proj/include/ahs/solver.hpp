#pragma once

#include "differentials.hpp"
#include "linear.hpp"

#include <boost/math/tools/roots.hpp>

#include <optional>
#include <sstream>
#include <utility>

namespace ahs {

// Contributes 2^{1-k} e^{(1-k) phi} |B|^2 to the operator.
struct Term {
    int k = 0;
    SymTensorField B;
};

inline Term term(const KDifferential& d) { return {d.k, d.B}; }

inline Term scaled(Term t, const Vec& f) {
    for (auto& c : t.B.comp) c *= f;
    return t;
}

inline Term scaled(Term t, double f) {
    for (auto& c : t.B.comp) c *= f;
    return t;
}

// W(h, F, B)(phi) = Lap_h phi - sR_h + F e^phi + sum 2^{1-k} e^{(1-k) phi} |B|^2_h
struct OperatorSpec {
    ConformalMetric background;
    Vec F;
    std::vector<Term> terms;
    bool einstein = false;  // an Einstein structure is sought: X and B may not both be nonzero
};

inline OperatorSpec make_spec(const ConformalMetric& bg, double kappa, std::vector<Term> terms = {}) {
    return {bg, Vec::Constant(bg.surface->size(), kappa), std::move(terms), false};
}

inline void validate(const OperatorSpec& s) {
    const auto& surf = s.background.surface;
    require(s.F.size() == surf->size(), ErrorCode::SurfaceMismatch, "F does not live on the background surface");
    bool has_x = false, has_b = false;
    for (const auto& t : s.terms) {
        require(t.k != 0, ErrorCode::InvalidArgument, "term degree must be nonzero");
        require_same(t.B.surface, surf);
        require(t.B.rank == std::abs(t.k) && t.B.contravariant == (t.k < 0), ErrorCode::InvalidArgument,
                "term degree does not match its differential");
        double mag = 0;
        for (const auto& c : t.B.comp) mag = std::max(mag, max_abs(c));
        if (mag > 0) (t.k < 0 ? has_x : has_b) = true;
    }
    if (s.einstein)
        require(!(has_x && has_b), ErrorCode::MixedStructure,
                "an Einstein structure admits a nonzero vector field or a nonzero differential, not both");
}

// Lap_h u - sR + sum_j c_j e^{a_j u}, the common form of every equation here.
struct SemilinearCore {
    ConformalMetric background;
    Vec sR;
    struct Exp {
        Vec c;
        double a;
    };
    std::vector<Exp> exps;

    Vec zeroth(const Vec& u) const {
        Vec r = -sR;
        for (const auto& e : exps) r += e.a == 0 ? e.c : Vec(e.c * (e.a * u).exp());
        return r;
    }
    Vec dzeroth(const Vec& u) const {
        Vec r = Vec::Zero(u.size());
        for (const auto& e : exps)
            if (e.a != 0) r += e.a * e.c * (e.a * u).exp();
        return r;
    }
    Vec apply(const Vec& u) const { return laplacian(u, background) + zeroth(u); }
};

inline SemilinearCore core(const OperatorSpec& s) {
    validate(s);
    SemilinearCore c{s.background, scalar_curvature_values(s.background), {}};
    c.exps.push_back({s.F, 1.0});
    for (const auto& t : s.terms) c.exps.push_back({std::pow(2.0, 1 - t.k) * norm2(t.B, s.background), double(1 - t.k)});
    return c;
}

inline Vec apply(const OperatorSpec& s, const Vec& phi) {
    require(phi.size() == s.background.surface->size(), ErrorCode::SurfaceMismatch, "phi does not live on the background surface");
    return core(s).apply(phi);
}

inline ScalarField apply(const OperatorSpec& s, const ScalarField& phi) {
    require_same(phi.surface, s.background.surface);
    return ScalarField(phi.surface, apply(s, phi.values));
}

// Frechet derivative of W at phi applied to v.
inline Vec frechet(const OperatorSpec& s, const Vec& phi, const Vec& v) {
    auto c = core(s);
    return laplacian(v, s.background) + c.dzeroth(phi) * v;
}

// (e^mu h, e^lambda F, e^{(1-k) lambda / 2} B)
inline OperatorSpec rescale(const OperatorSpec& s, const Vec& mu, const Vec& lambda) {
    OperatorSpec r = s;
    r.background = s.background.rescaled(mu);
    r.F = s.F * lambda.exp();
    for (auto& t : r.terms) t = scaled(t, Vec((0.5 * (1 - t.k) * lambda).exp()));
    return r;
}

inline double scaling_residual(const OperatorSpec& s, const Vec& phi, const Vec& mu, const Vec& lambda) {
    Vec lhs = mu.exp() * apply(rescale(s, mu, lambda), Vec(phi - mu - lambda));
    return max_abs(lhs - apply(s, phi) + laplacian(lambda, s.background));
}

inline double default_tolerance(const DiscreteSurface& s) { return s.kind() == "torus" ? 1e-10 : 1e-7; }

// Max-norm over rows a solver actually solves for (all rows on closed grids).
inline double solved_max(const Vec& r, const DiscreteSurface& s) {
    Vec mask = s.dirichlet_mask();
    return max_abs(r * (1.0 - mask));
}

struct Inequality {
    std::string name;
    double slack = 0;  // min over the grid of (rhs - lhs); negative means violated
    bool holds = true;
};

struct SolveReport {
    ScalarField phi;
    std::string method;
    std::vector<double> residual_history;
    int iterations = 0;
    int linear_iterations = 0;
    double residual = 0;
    double tolerance = 0;
    std::optional<std::pair<double, double>> bracket;
    std::vector<Inequality> certificate;
};

inline Inequality inequality(std::string name, const Vec& rhs_minus_lhs, double allowance = 1e-9) {
    const double s = rhs_minus_lhs.size() ? rhs_minus_lhs.minCoeff() : 0.0;
    return {std::move(name), s, s >= -allowance};
}

struct NewtonOptions {
    double tol = -1;  // < 0: surface default
    int max_iter = 60;
    int max_halvings = 30;
    double linear_rel_tol = 1e-12;
    int linear_max_iter = 400;
};

namespace detail {

// Weighted system (lap + e^sigma q) x = e^sigma rhs, identity on Dirichlet rows.
inline LinearSolveResult solve_weighted(const SemilinearCore& c, const Vec& q, const Vec& rhs, double rel_tol, int max_iter) {
    const auto& s = *c.background.surface;
    Vec w = c.background.sigma().exp();
    Vec mask = s.dirichlet_mask();
    Vec cq = w * q;
    Vec b = (1.0 - mask) * w * rhs;
    auto pre = s.preconditioner(cq);
    LinearOperator A(
        s.size(),
        [&s, cq, mask](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            Vec xa = x.array();
            Vec y = (1.0 - mask) * (s.lap(xa) + cq * xa) + mask * xa;
            return y.matrix();
        },
        [pre](const Eigen::VectorXd& r) -> Eigen::VectorXd { return pre(r.array()).matrix(); });
    return bicgstab(A, b.matrix(), rel_tol, max_iter);
}

} // namespace detail

// Closed surfaces where every exponent vanishes: W is affine in phi and needs the
// compatibility condition int (-sR + sum c) dvol = 0.
inline void check_solvable(const SemilinearCore& c) {
    const auto& s = *c.background.surface;
    if (max_abs(s.dirichlet_mask()) > 0) return;
    Vec zero = -c.sR;
    double scale = integrate(c.sR.abs(), c.background);
    for (const auto& e : c.exps) {
        if (max_abs(e.c) == 0) continue;
        if (e.a != 0) return;
        zero += e.c;
        scale += integrate(e.c.abs(), c.background);
    }
    const double mean = integrate(zero, c.background);
    require(std::abs(mean) <= 1e-10 * std::max(1.0, scale), ErrorCode::NoSolution,
            "zeroth-order part is independent of phi and integrates to " + std::to_string(mean) + ", not 0");
}

inline SolveReport solve_newton(const SemilinearCore& c, const Vec& phi0, NewtonOptions o = {}) {
    const auto& s = *c.background.surface;
    require(phi0.size() == s.size(), ErrorCode::SurfaceMismatch, "initial guess does not live on the background surface");
    check_solvable(c);
    const double tol = o.tol > 0 ? o.tol : default_tolerance(s);
    SolveReport rep;
    rep.method = "newton";
    rep.tolerance = tol;
    Vec phi = phi0;
    double res = solved_max(c.apply(phi), s);
    rep.residual_history.push_back(res);
    int it = 0;
    while (res > tol) {
        require(it < o.max_iter, ErrorCode::Divergence,
                "Newton did not converge in " + std::to_string(o.max_iter) + " iterations (residual " + std::to_string(res) + ")");
        require(std::isfinite(res), ErrorCode::Divergence, "residual is not finite");
        Vec W = c.apply(phi);
        auto lin = detail::solve_weighted(c, c.dzeroth(phi), -W, o.linear_rel_tol, o.linear_max_iter);
        rep.linear_iterations += lin.iterations;
        require(lin.x.allFinite() && (lin.converged || lin.error < 1e-2), ErrorCode::SingularLinearization,
                "linearized system could not be solved (relative error " + std::to_string(lin.error) + ")");
        Vec delta = lin.x.array();
        double step = 1.0, trial_res = 0;
        Vec trial;
        bool accepted = false;
        for (int h = 0; h <= o.max_halvings; ++h, step *= 0.5) {
            trial = phi + step * delta;
            trial_res = solved_max(c.apply(trial), s);
            if (std::isfinite(trial_res) && trial_res < res) {
                accepted = true;
                break;
            }
        }
        require(accepted, ErrorCode::Divergence,
                "line search failed to reduce the residual below " + std::to_string(res));
        phi = std::move(trial);
        res = trial_res;
        rep.residual_history.push_back(res);
        ++it;
    }
    rep.iterations = it;
    rep.residual = res;
    rep.phi = ScalarField(c.background.surface, phi);
    return rep;
}

struct RootBound {
    double root, lower, upper;
};

// Unique positive root of r^p - a r^{p-1} - b, with a <= root <= a + b^{1/p}.
inline RootBound positive_root_bound(int p, double a, double b) {
    require(p >= 1 && a > 0 && b > 0, ErrorCode::InvalidArgument, "need p >= 1, a > 0, b > 0");
    const double lo = a, hi = a + std::pow(b, 1.0 / p);
    if (p == 1) return {a + b, lo, hi};
    auto f = [&](double r) { return std::pow(r, p) - a * std::pow(r, p - 1) - b; };
    if (f(hi) <= 0) return {hi, lo, hi};
    auto r = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52));
    return {0.5 * (r.first + r.second), lo, hi};
}

namespace detail {
inline std::string grid_point(const DiscreteSurface& s, Eigen::Index n) {
    std::ostringstream o;
    o << "grid point (" << n / s.n2() << ", " << n % s.n2() << ")";
    return o.str();
}
} // namespace detail

// Constant sub/supersolution pair from the existence argument; needs max sR < 0 and F < 0.
inline std::pair<double, double> auto_bracket(const OperatorSpec& s) {
    auto c = core(s);
    const double Q = c.sR.maxCoeff();
    require(Q < 0, ErrorCode::BracketUnavailable, "background curvature is not everywhere negative (max sR = " + std::to_string(Q) + ")");
    require(s.F.maxCoeff() < 0, ErrorCode::BracketUnavailable, "F is not everywhere negative");
    require(s.terms.size() == 1 && s.terms[0].k >= 1, ErrorCode::BracketUnavailable, "auto bracket needs exactly one term with k >= 1");
    const int p = s.terms[0].k;
    const double q = c.sR.minCoeff(), kmin = s.F.minCoeff(), K = s.F.maxCoeff();
    const double P = norm2(s.terms[0].B, s.background).maxCoeff();
    const double sub = std::log(Q / kmin);
    if (P == 0) return {sub, std::log(q / K)};
    auto rb = positive_root_bound(p, q / K, std::pow(2.0, 1 - p) * P / std::abs(K));
    return {sub, std::log(rb.root)};
}

struct MonotoneOptions {
    std::optional<std::pair<double, double>> bracket;  // empty: auto
    double tol = -1;
    int max_iter = 2000;
    double linear_rel_tol = 1e-13;
    int linear_max_iter = 400;
};

namespace detail {

// Max over x of -dN/du on [lo(x), hi(x)]; each term is convex in u, so endpoints suffice.
inline double dominating_constant(const SemilinearCore& c, const Vec& lo, const Vec& hi) {
    const double m = std::max((-c.dzeroth(lo)).maxCoeff(), (-c.dzeroth(hi)).maxCoeff());
    return std::max(m, 1e-6);
}

inline void check_bracket_side(const SemilinearCore& c, double u, bool sub) {
    const auto& s = *c.background.surface;
    Vec z = c.zeroth(Vec::Constant(s.size(), u));
    const double allowance = 1e-12 * std::max(1.0, max_abs(c.sR));
    Eigen::Index n;
    if (sub) {
        const double v = z.minCoeff(&n);
        require(v >= -allowance, ErrorCode::InvalidBracket,
                "W(" + std::to_string(u) + ") = " + std::to_string(v) + " < 0 at " + grid_point(s, n) + "; not a subsolution");
    } else {
        const double v = z.maxCoeff(&n);
        require(v <= allowance, ErrorCode::InvalidBracket,
                "W(" + std::to_string(u) + ") = " + std::to_string(v) + " > 0 at " + grid_point(s, n) + "; not a supersolution");
    }
}

} // namespace detail

inline std::vector<Inequality> bound_certificate(const OperatorSpec& s, const Vec& phi);

inline SolveReport solve_monotone(const OperatorSpec& spec, MonotoneOptions o = {}) {
    auto c = core(spec);
    const auto& s = *spec.background.surface;
    require(max_abs(s.dirichlet_mask()) == 0, ErrorCode::InvalidArgument, "monotone iteration needs a closed surface");
    require(spec.F.maxCoeff() < 0, ErrorCode::InvalidArgument, "monotone iteration needs F < 0 everywhere");
    auto br = o.bracket ? *o.bracket : auto_bracket(spec);
    require(br.first <= br.second, ErrorCode::InvalidBracket, "subsolution constant exceeds supersolution constant");
    detail::check_bracket_side(c, br.first, true);
    detail::check_bracket_side(c, br.second, false);
    const double tol = o.tol > 0 ? o.tol : default_tolerance(s);

    SolveReport rep;
    rep.method = "monotone";
    rep.tolerance = tol;
    rep.bracket = br;
    Vec lo = Vec::Constant(s.size(), br.first), hi = Vec::Constant(s.size(), br.second);
    double min_lo_slack = 0, min_hi_slack = 0, min_order = 0;
    double res = 0;
    Vec best;
    for (int it = 0;; ++it) {
        const double rl = max_abs(c.apply(lo)), rh = max_abs(c.apply(hi));
        res = std::min(rl, rh);
        best = rl <= rh ? lo : hi;
        rep.residual_history.push_back(res);
        if (res <= tol) {
            rep.iterations = it;
            break;
        }
        require(it < o.max_iter, ErrorCode::Divergence,
                "monotone iteration did not converge in " + std::to_string(o.max_iter) + " steps (residual " + std::to_string(res) + ")");
        const double M = detail::dominating_constant(c, lo, hi);
        Vec q = Vec::Constant(s.size(), -M);
        auto step = [&](const Vec& u) {
            auto r = detail::solve_weighted(c, q, Vec(-c.zeroth(u) - M * u), o.linear_rel_tol, o.linear_max_iter);
            rep.linear_iterations += r.iterations;
            require(r.x.allFinite() && (r.converged || r.error < 1e-8), ErrorCode::SingularLinearization,
                    "monotone step linear solve failed");
            return Vec(r.x.array());
        };
        Vec nlo = step(lo), nhi = step(hi);
        min_lo_slack = std::min(min_lo_slack, (nlo - br.first).minCoeff());
        min_hi_slack = std::min(min_hi_slack, (br.second - nhi).minCoeff());
        min_order = std::min(min_order, (nhi - nlo).minCoeff());
        lo = std::move(nlo);
        hi = std::move(nhi);
    }
    rep.residual = res;
    rep.phi = ScalarField(spec.background.surface, best);
    const double allow = 1e-9;
    rep.certificate.push_back({"iterates-above-subsolution", min_lo_slack, min_lo_slack >= -allow});
    rep.certificate.push_back({"iterates-below-supersolution", min_hi_slack, min_hi_slack >= -allow});
    rep.certificate.push_back({"lower-iterate-below-upper", min_order, min_order >= -allow});
    rep.certificate.push_back(inequality("solution-in-bracket", Vec((best - br.first).min(br.second - best))));
    for (auto& q : bound_certificate(spec, best)) rep.certificate.push_back(q);
    return rep;
}

// Pointwise bounds on e^phi from the existence and factor-bound arguments, when they apply.
inline std::vector<Inequality> bound_certificate(const OperatorSpec& s, const Vec& phi) {
    std::vector<Inequality> out;
    if (s.terms.size() != 1 || s.terms[0].k < 1 || s.F.maxCoeff() >= 0) return out;
    const int p = s.terms[0].k;
    const auto& bg = s.background;
    Vec B2 = norm2(s.terms[0].B, bg);
    Vec ephi = phi.exp();
    const double kmin = s.F.minCoeff(), K = s.F.maxCoeff();
    if (kmin == K) {
        Vec lower = std::pow(2.0, double(1 - p) / p) * std::pow(std::abs(K), -1.0 / p) * B2.pow(1.0 / p);
        out.push_back(inequality("factor-lower", Vec(ephi - lower), 1e-8));
    }
    Vec sR = scalar_curvature_values(bg);
    if (sR.maxCoeff() < 0) {
        const double lower = sR.maxCoeff() / kmin;
        const double upper = sR.minCoeff() / K +
                             std::pow(2.0, double(1 - p) / p) * std::pow(std::abs(K), -1.0 / p) * std::pow(B2.maxCoeff(), 1.0 / p);
        out.push_back(inequality("bbound-lower", Vec(ephi - lower), 1e-8));
        out.push_back(inequality("bbound-upper", Vec(upper - ephi), 1e-8));
    }
    return out;
}

inline SolveReport solve_newton(const OperatorSpec& s, const Vec& phi0, NewtonOptions o = {}) {
    auto rep = solve_newton(core(s), phi0, o);
    rep.certificate = bound_certificate(s, rep.phi.values);
    return rep;
}

inline SolveReport solve_newton(const OperatorSpec& s, NewtonOptions o = {}) {
    return solve_newton(s, Vec::Zero(s.background.surface->size()), o);
}

// ---- constant-coefficient equation of the para-Kahler construction --------------

// Lap phi - sR + 2c e^phi - (eps/4) e^{2 phi} |H|^2 + eps e^{-2 phi} |B|^2
inline SemilinearCore ckmc_core(const ConformalMetric& bg, double c, int eps, const SymTensorField* H, const SymTensorField* B) {
    require(eps == 1 || eps == -1, ErrorCode::InvalidArgument, "eps must be +1 or -1");
    const auto n = bg.surface->size();
    SemilinearCore core{bg, scalar_curvature_values(bg), {}};
    core.exps.push_back({Vec::Constant(n, 2 * c), 1.0});
    if (H) {
        require(H->rank == 1 && H->contravariant, ErrorCode::InvalidArgument, "H must be a vector field");
        require_same(H->surface, bg.surface);
        core.exps.push_back({-0.25 * eps * norm2(*H, bg), 2.0});
    }
    if (B) {
        require(B->rank == 3 && !B->contravariant, ErrorCode::InvalidArgument, "B must be a cubic form");
        require_same(B->surface, bg.surface);
        core.exps.push_back({eps * norm2(*B, bg), -2.0});
    }
    return core;
}

inline SolveReport solve_ckmc(const ConformalMetric& bg, double c, int eps, const SymTensorField* H, const SymTensorField* B,
                              const Vec& phi0, NewtonOptions o = {}) {
    auto rep = solve_newton(ckmc_core(bg, c, eps, H, B), phi0, o);
    rep.method = "newton-ckmc";
    return rep;
}

struct CkmcBracket {
    bool exists = false;
    double r1 = 0;           // smallest positive zero of r^3 - r^2 + max|B|^2 / 2
    double sub = 0, super = 0;  // log r1 and 0
};

inline CkmcBracket ckmc_bracket(double max_B2) {
    require(max_B2 >= 0, ErrorCode::InvalidArgument, "max |B|^2 must be nonnegative");
    CkmcBracket b;
    if (max_B2 > 8.0 / 27.0) return b;
    b.exists = true;
    if (max_B2 == 0) {
        b.r1 = 1.0;
    } else {
        auto f = [&](double r) { return r * r * r - r * r + 0.5 * max_B2; };
        auto r = boost::math::tools::bisect(f, 0.0, 2.0 / 3.0, boost::math::tools::eps_tolerance<double>(52));
        b.r1 = 0.5 * (r.first + r.second);
    }
    b.sub = std::log(b.r1);
    return b;
}

// Pointwise check that constants (sub, super) bracket the zeroth-order part of core.
inline std::vector<Inequality> constant_bracket_certificate(const SemilinearCore& c, double sub, double super) {
    const auto n = c.background.surface->size();
    return {inequality("subsolution", c.zeroth(Vec::Constant(n, sub)), 1e-12),
            inequality("supersolution", Vec(-c.zeroth(Vec::Constant(n, super))), 1e-12)};
}

// ---- rays t -> e^{3t} B ------------------------------------------------------

struct RayPoint {
    double t;
    SolveReport report;
    double rescaled_volume;  // e^{-2t} vol(e^{phi_t} h)
};

struct RayCertificate {
    double monotone_slack = 0;   // min (phi_{t2} - phi_{t1})
    double lipschitz_slack = 0;  // min (2 (t2 - t1) - |phi_{t2} - phi_{t1}|)
    double envelope_lower_slack = 0;
    double envelope_upper_slack = 0;
    double allowance = 1e-9;
    bool holds() const {
        return monotone_slack >= -allowance && lipschitz_slack >= -allowance && envelope_lower_slack >= -allowance &&
               envelope_upper_slack >= -allowance;
    }
};

struct RayResult {
    std::vector<RayPoint> points;
    ScalarField phi0;
    RayCertificate certificate;
};

// Solves W(h, kappa, e^{3t} B)(phi_t) = 0 along the ray, warm-starting each t from the last.
// Envelope: max(phi_0, 2t + log(|B|^2_h / (4|kappa|)) / 3) <= phi_t <= phi_0 + 2t.
inline RayResult ray_solve(const ConformalMetric& bg, const SymTensorField& B, const std::vector<double>& ts,
                           double kappa = -2.0, NewtonOptions o = {}) {
    require(B.rank == 3 && !B.contravariant, ErrorCode::InvalidArgument, "ray needs a cubic differential");
    Vec B2 = norm2(B, bg);
    require(B2.maxCoeff() > 0, ErrorCode::InvalidArgument, "B vanishes identically");
    require(kappa < 0, ErrorCode::InvalidArgument, "kappa must be negative");
    for (size_t i = 0; i < ts.size(); ++i) {
        require(ts[i] >= 0, ErrorCode::InvalidArgument, "ray parameters must be nonnegative");
        if (i) require(ts[i] > ts[i - 1], ErrorCode::InvalidArgument, "ray parameters must be strictly increasing");
    }
    const Term base{3, B};
    auto solve_at = [&](double t, const Vec& guess) {
        return solve_newton(make_spec(bg, kappa, {scaled(base, std::exp(3 * t))}), guess, o);
    };
    RayResult out;
    auto r0 = solve_at(0.0, Vec::Zero(bg.surface->size()));
    out.phi0 = r0.phi;
    const Vec& phi0 = r0.phi.values;
    Vec guess = phi0;
    RayCertificate& cert = out.certificate;
    cert.monotone_slack = cert.lipschitz_slack = cert.envelope_lower_slack = cert.envelope_upper_slack =
        std::numeric_limits<double>::infinity();
    Vec flat_part = (B2 / (4 * std::abs(kappa))).log() / 3.0;
    for (double t : ts) {
        auto rep = t == 0.0 ? r0 : solve_at(t, guess);
        const Vec& phi = rep.phi.values;
        Vec lower = phi0.max(2 * t + flat_part);
        cert.envelope_lower_slack = std::min(cert.envelope_lower_slack, (phi - lower).minCoeff());
        cert.envelope_upper_slack = std::min(cert.envelope_upper_slack, (phi0 + 2 * t - phi).minCoeff());
        if (!out.points.empty()) {
            const auto& prev = out.points.back();
            Vec d = phi - prev.report.phi.values;
            cert.monotone_slack = std::min(cert.monotone_slack, d.minCoeff());
            cert.lipschitz_slack = std::min(cert.lipschitz_slack, (2 * (t - prev.t) - d.abs()).minCoeff());
        }
        const double vol = std::exp(-2 * t) * integrate(phi.exp(), bg);
        guess = phi;
        out.points.push_back({t, std::move(rep), vol});
    }
    if (out.points.size() < 2) cert.monotone_slack = cert.lipschitz_slack = 0;
    return out;
}

} // namespace ahs
