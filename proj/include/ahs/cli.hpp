#pragma once

#include "cone.hpp"
#include "families.hpp"
#include "solver.hpp"
#include "structure.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <thread>

namespace ahs::cli {

inline constexpr int schema_version = 1;

enum ExitCode { Ok = 0, IdentityFailure = 1, Usage = 2, RunError = 3 };

struct RunConfig {
    std::vector<std::string> argv;  // echoed verbatim
    int grid = 0;                   // 0: command default
    double tol = -1;                // < 0: per-identity defaults
    std::string out;
    std::string emit = "json";
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string structure_out;
    std::string normalization = "fix-uR";  // or fix-volume
};

inline double tol_or(const RunConfig& c, double d) { return c.tol > 0 ? c.tol : d; }

// --jobs capped by AHSOLVE_THREADS.
inline int effective_jobs(const RunConfig& c) {
    int j = std::max(1, c.jobs);
    if (const char* e = std::getenv("AHSOLVE_THREADS")) {
        const int cap = std::atoi(e);
        if (cap >= 1) j = std::min(j, cap);
    }
    return j;
}

// Runs independent tasks on up to `jobs` threads; results go to caller-owned slots.
inline void run_tasks(const std::vector<std::function<void()>>& tasks, int jobs) {
    std::vector<std::exception_ptr> errs(tasks.size());
    auto work = [&](size_t i) {
        try {
            tasks[i]();
        } catch (...) {
            errs[i] = std::current_exception();
        }
    };
    if (jobs <= 1 || tasks.size() <= 1) {
        for (size_t i = 0; i < tasks.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(jobs, int(tasks.size())); ++t)
            pool.emplace_back([&] {
                for (size_t i; (i = next++) < tasks.size();) work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

struct Identity {
    std::string name;
    double value = 0;
    double bound = 0;
    bool upper = true;  // value <= bound, otherwise value >= bound
    bool pass() const { return std::isfinite(value) && (upper ? value <= bound : value >= bound); }
};

struct Report {
    std::string normalization = "none";
    json results = json::object();
    std::vector<Identity> identities;
    std::vector<std::string> notes;
    std::string csv;
    std::string error;
    double wall_seconds = 0;

    void check(const std::string& name, double value, double tol) { identities.push_back({name, value, tol, true}); }
    void check_at_least(const std::string& name, double value, double bound) {
        identities.push_back({name, value, bound, false});
    }
    std::vector<std::string> failed() const {
        std::vector<std::string> f;
        for (const auto& i : identities)
            if (!i.pass()) f.push_back(i.name);
        return f;
    }
    bool pass() const { return error.empty() && failed().empty(); }
    int exit_code() const { return !error.empty() ? RunError : failed().empty() ? Ok : IdentityFailure; }
};

inline std::string joined(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
    return s;
}

inline json to_json(const Report& r, const RunConfig& c) {
    json ids = json::array();
    for (const auto& i : r.identities)
        ids.push_back({{"name", i.name},
                       {"residual", std::isfinite(i.value) ? json(i.value) : json(format_double(i.value))},
                       {"tolerance", i.bound},
                       {"comparison", i.upper ? "<=" : ">="},
                       {"pass", i.pass()}});
    json j = {{"schema", schema_version},
              {"command", joined(c.argv)},
              {"config",
               {{"grid", c.grid}, {"tol", c.tol}, {"emit", c.emit}, {"seed", c.seed}, {"jobs", c.jobs},
                {"normalization", c.normalization}}},
              {"seed", c.seed},
              {"normalization", r.normalization},
              {"results", r.results},
              {"identities", ids},
              {"failed", r.failed()},
              {"pass", r.pass()},
              {"timing", {{"wall_seconds", r.wall_seconds}}}};
    if (!r.notes.empty()) j["notes"] = r.notes;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

// Report without the timing field: the part covered by the determinism contract.
inline json deterministic_part(json j) {
    j.erase("timing");
    return j;
}

template <class Fn>
Report timed(Fn fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Report r;
    try {
        fn(r);
    } catch (const Error& e) {
        r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(bool(in), ErrorCode::Io, "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    require(bool(out), ErrorCode::Io, "cannot write " + path);
    out << text;
}

// Smooth periodic field from a handful of lattice modes.
inline Vec smooth_random_field(const LatticeTorus& T, std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> u(-1, 1);
    const Vec x = T.lattice_coord(0), y = T.lattice_coord(1);
    Vec f = Vec::Zero(T.size());
    for (int m = -2; m <= 2; ++m)
        for (int n = 0; n <= 2; ++n) {
            if (n == 0 && m <= 0) continue;
            const Vec arg = 2 * pi * (m * x + n * y);
            const double w = amplitude / (1 + m * m + n * n);
            f += w * u(rng) * arg.cos() + w * u(rng) * arg.sin();
        }
    return f;
}

// ---- solve ---------------------------------------------------------------------

// Spec JSON: surface, base, background_phi | background_cos, kappa, terms | B_norm2, method.
inline json torus_solve_spec(int grid, double kappa, double b2, double background_cos) {
    const int n = grid > 0 ? grid : 256;
    json j = {{"surface", {{"type", "torus"}, {"generators", {{2 * pi, 0.0}, {0.0, 2 * pi}}}, {"n", {n, n}}}},
              {"kappa", kappa},
              {"B_norm2", b2}};
    if (background_cos != 0) j["background_cos"] = background_cos;
    return j;
}

inline Report run_solve(const json& spec, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = spec.value("normalization", cfg.normalization);
        SurfacePtr S = surface_from_json(spec.at("surface"));
        Base base{S->kind() == "torus" ? BaseKind::Flat : BaseKind::Round};
        if (spec.contains("base")) base = base_from_json(spec.at("base"));
        Vec psi = Vec::Zero(S->size());
        if (spec.contains("background_phi")) psi = detail::vec_from(spec.at("background_phi"), *S);
        if (spec.contains("background_cos")) psi += spec.at("background_cos").get<double>() * S->c1().cos();
        ConformalMetric bg(S, base, psi);
        const double kappa = spec.at("kappa").get<double>();

        // same-degree contributions add as one differential
        std::map<int, SymTensorField> by_degree;
        auto add = [&](const KDifferential& d) {
            auto [it, fresh] = by_degree.emplace(d.k, d.B);
            if (!fresh)
                for (size_t c = 0; c < it->second.comp.size(); ++c) it->second.comp[c] += d.B.comp[c];
        };
        if (spec.contains("B_norm2")) {
            const double b2 = spec.at("B_norm2").get<double>();
            require(b2 >= 0, ErrorCode::InvalidArgument, "B_norm2 must be nonnegative");
            require(S->kind() == "torus", ErrorCode::InvalidArgument, "B_norm2 shortcut needs a torus");
            add(realize(3, cplx(std::sqrt(b2 / 16), 0), S));
        }
        for (const auto& t : spec.value("terms", json::array()))
            add(realize(t.at("degree").get<int>(), coefficients_from_json(t.at("coefficient")), S));
        std::vector<Term> terms;
        for (const auto& [k, B] : by_degree) terms.push_back({k, B});
        const bool cubic_only = by_degree.size() == 1 && by_degree.count(3);
        OperatorSpec op = make_spec(bg, kappa, terms);
        op.einstein = true;
        validate(op);

        const std::string method = spec.value("method", "newton");
        SolveReport rep;
        if (method == "newton") {
            NewtonOptions o;
            if (cfg.tol > 0) o.tol = cfg.tol;
            rep = solve_newton(op, o);
        } else {
            require(method == "monotone", ErrorCode::InvalidArgument, "method must be newton or monotone");
            MonotoneOptions o;
            if (cfg.tol > 0) o.tol = cfg.tol;
            if (spec.contains("bracket")) o.bracket = std::make_pair(spec["bracket"][0].get<double>(), spec["bracket"][1].get<double>());
            rep = solve_monotone(op, o);
        }
        const Vec& phi = rep.phi.values;
        r.results = {{"method", rep.method},
                     {"surface", surface_to_json(*S)},
                     {"kappa", kappa},
                     {"iterations", rep.iterations},
                     {"linear_iterations", rep.linear_iterations},
                     {"residual_history", rep.residual_history},
                     {"phi", {{"min", phi.minCoeff()}, {"max", phi.maxCoeff()}, {"mean", phi.mean()}}}};
        const double vol = volume(ConformalMetric(S, base, Vec(psi + phi))), vol_bg = volume(bg);
        r.results["volume"] = vol;
        if (r.normalization == "fix-volume") {
            // constant shift bringing the solution area to the background area; uR scales inversely
            const double shift = std::log(vol_bg / vol);
            r.results["volume_shift"] = shift;
            r.results["kappa_fixed_volume"] = kappa * std::exp(-shift);
        }
        r.check("residual", rep.residual, rep.tolerance);
        for (const auto& q : rep.certificate) r.check_at_least("certificate:" + q.name, q.slack, -1e-9);

        // flat torus with constant-norm cubic data: the solution metric is flat
        if (cubic_only && S->kind() == "torus" && base.kind == BaseKind::Flat && kappa < 0) {
            const Vec b2 = norm2(by_degree.at(3), ConformalMetric(S, base));
            if (b2.mean() > 0 && max_abs(b2 - b2.mean()) <= 1e-12 * b2.mean()) {
                const double star = std::log(b2.mean() / (4 * std::abs(kappa))) / 3;
                r.results["phi_closed_form"] = star;
                r.check("phi_closed_form", max_abs(phi - (star - psi)), tol_or(cfg, 1e-8));
            }
        }
        if (S->kind() == "torus") {
            std::mt19937_64 rng(cfg.seed);
            const auto& T = dynamic_cast<const LatticeTorus&>(*S);
            double worst = 0;
            for (int i = 0; i < 20; ++i) {
                Vec mu = smooth_random_field(T, rng, 0.3), lam = smooth_random_field(T, rng, 0.3);
                worst = std::max(worst, scaling_residual(op, phi, mu, lam));
            }
            r.check("scaling_rule", worst, 1e-9);
        }
        if (!cfg.structure_out.empty()) {
            require(cubic_only, ErrorCode::InvalidArgument, "structure output needs cubic terms only");
            const SymTensorField& sum = by_degree.at(3);
            AHStructure a(ConformalMetric(S, base, Vec(psi + phi)), sum, zero_form(S));
            write_file(cfg.structure_out, to_json(a).dump());
            r.results["structure_out"] = cfg.structure_out;
        }
        r.csv = to_csv(rep.phi, "phi");
    });
}

// ---- verify --------------------------------------------------------------------

inline void verify_into(Report& r, const AHStructure& a, const RunConfig& cfg) {
    const auto& S = *a.surface();
    const bool torus = S.kind() == "torus";
    const double tol = tol_or(cfg, torus ? 1e-10 : 1e-5);
    EinsteinResiduals er;
    std::optional<VortexIdentity> vi;
    std::optional<VortexResidual> vr;
    ComplexScalarInvariant cs;
    std::string vi_skip, vr_skip;
    std::vector<std::function<void()>> tasks{
        [&] { er = einstein_residuals(a); },
        [&] {
            try {
                vi = vortex_identity(a, S.genus());
            } catch (const Error& e) {
                vi_skip = e.what();
            }
        },
        [&] {
            try {
                vr = vortex_residual(a);
            } catch (const Error& e) {
                vr_skip = e.what();
            }
        },
        [&] { cs = complex_scalar_invariant(a); }};
    run_tasks(tasks, effective_jobs(cfg));

    r.check("divB", er.divB, tol);
    r.check("Bgamma", er.Bgamma, tol);
    r.check("killing", er.killing, tol);
    r.check("const_defect", er.const_defect, tol);
    r.results["einstein"] = {{"divB", er.divB}, {"Bgamma", er.Bgamma}, {"killing", er.killing},
                             {"const_defect", er.const_defect}, {"E", er.E}};
    if (vi) {
        r.results["vortex_identity"] = {{"kappa", vi->kappa}, {"nu", vi->nu}, {"defect", vi->defect},
                                        {"volume", vi->volume}, {"B_L2", vi->B_L2}, {"gamma_L2", vi->gamma_L2},
                                        {"bound_slack", vi->bound_slack}};
        r.check("vortex_identity", std::abs(vi->defect), tol_or(cfg, 1e-6));
        r.check_at_least("vortex_bound", vi->bound_slack, -1e-9);
    } else {
        r.notes.push_back("vortex identity skipped: " + vi_skip);
    }
    if (vr) {
        r.results["vortex_residual"] = {{"q", vr->q}, {"tau", vr->tau}, {"residual", vr->residual}};
        r.check(vr->q == 3 ? "three_canonical_vortex" : "modified_vortex", vr->residual, tol_or(cfg, 1e-6));
    } else {
        r.notes.push_back("vortex residual skipped: " + vr_skip);
    }
    r.results["complex_scalar"] = {{"value", cs.value}, {"spread", cs.spread}};
    r.check("complex_scalar_spread", cs.spread / std::max(1.0, std::abs(cs.value)), tol_or(cfg, 1e-6));
}

inline Report run_verify(const json& structure, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = structure.value("normalization", cfg.normalization);
        auto a = structure_from_json(structure);
        r.results["surface"] = surface_to_json(*a.surface());
        verify_into(r, a, cfg);
    });
}

// ---- families ------------------------------------------------------------------

inline SurfacePtr sphere_chart_for(const RunConfig& cfg) {
    if (cfg.grid <= 0) return SphereChart::make_default();
    const int n = cfg.grid % 2 ? cfg.grid : cfg.grid + 1;
    return std::make_shared<SphereChart>(std::exp(-5.0), std::exp(5.0), n, 256);
}

inline Report run_family_sphere(double kappa, bool verify, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        SphereFamily fam{kappa};
        const double nu = nu_from_kappa(kappa), theta = fam.theta();
        const auto L = equator_lengths(fam);
        const double vq = sphere_volume_quadrature(fam), nq = nu_quadrature(fam);
        r.results = {{"family", "sphere"}, {"kappa", kappa}, {"R", fam.R()}, {"mu", fam.mu()}, {"theta", theta},
                     {"nu", nu}, {"nu_quadrature", nq}, {"volume", sphere_volume(fam)},
                     {"volume_quadrature", vq}, {"equator_length_h", L.h}, {"equator_length_hhat", L.hhat}};
        double sq = 0;
        for (int i = 0; i <= 400; ++i) {
            auto p = sphere_eval(fam, std::exp(-5 + 10.0 * i / 400));
            sq = std::max(sq, std::abs(p.sR * p.sR + p.f * p.f - (kappa * kappa + 16)));
        }
        r.check("square_identity", sq, 1e-10);
        r.check("nu_quadrature", std::abs(nq - nu) / std::max(1.0, std::abs(nu)), 1e-6);
        r.check("nu_theta", std::abs(nu_from_theta(theta) - nu) / std::max(1.0, std::abs(nu)), 1e-12);
        r.check("volume_quadrature", std::abs(vq - sphere_volume(fam)), 1e-8);
        r.csv = sphere_table_csv(fam);
        if (!verify) return;

        auto S = sphere_chart_for(cfg);
        auto a = sphere_family(kappa, S);
        verify_into(r, a, cfg);
        auto g = sphere_family(kappa, S, Realization::Grid);
        Vec closed(S->size());
        for (Eigen::Index n = 0; n < S->size(); ++n) closed(n) = sphere_eval(fam, std::exp(S->c1()(n))).sR;
        r.check("fd_curvature", max_abs(g.sR - closed), tol_or(cfg, 1e-5));
        r.check("gauss_bonnet", std::abs(gauss_bonnet_defect(g.metric, 0)), 1e-6);
        if (r.results.contains("vortex_identity")) {
            const double nnum = r.results["vortex_identity"]["nu"].get<double>();
            r.check("nu_numeric", std::abs(nnum - nu) / std::max(1.0, std::abs(nu)), 1e-6);
        }
    });
}

inline Report run_family_torus(double kappa, bool verify, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        TorusFamily fam(kappa);
        const double vol = torus_volume(fam), nu = kappa * vol;
        double lo = 1e300, hi = -1e300, sq = 0;
        for (int i = 0; i <= 400; ++i) {
            auto p = torus_eval(fam, pi * i / 400);
            lo = std::min(lo, p.sR);
            hi = std::max(hi, p.sR);
            sq = std::max(sq, std::abs(p.sR * p.sR + p.f * p.f - (kappa * kappa - 16)));
        }
        const double g4 = 4 * torus_gamma_L2(fam);
        r.results = {{"family", "torus"}, {"kappa", kappa}, {"h_coeff_0", torus_eval(fam, 0).h_coeff},
                     {"h_coeff_half_pi", torus_eval(fam, pi / 2).h_coeff}, {"sR_min", lo}, {"sR_max", hi},
                     {"volume", vol}, {"nu", nu}, {"four_gamma_L2", g4}};
        r.check("square_identity", sq, 1e-8);
        r.check("gamma_norm_vs_nu", std::abs(g4 + nu), 1e-6);
        r.csv = torus_table_csv(fam);
        if (!verify) return;
        auto a = torus_family(kappa, cfg.grid > 0 ? cfg.grid : 128);
        verify_into(r, a, cfg);
        if (r.results.contains("vortex_identity")) {
            const double nnum = r.results["vortex_identity"]["nu"].get<double>();
            r.check("nu_numeric", std::abs(nnum - nu) / std::max(1.0, std::abs(nu)), 1e-6);
        }
    });
}

// ---- ray -----------------------------------------------------------------------

inline Report run_ray(double b2, const std::vector<double>& ts, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        require(b2 > 0, ErrorCode::InvalidArgument, "B_norm2 must be positive");
        const int n = cfg.grid > 0 ? cfg.grid : 64;
        auto T = LatticeTorus::square(2 * pi, n);
        ConformalMetric bg(T, {BaseKind::Flat});
        auto B = realize(3, cplx(std::sqrt(b2 / 16), 0), T).B;
        NewtonOptions o;
        if (cfg.tol > 0) o.tol = cfg.tol;
        auto ray = ray_solve(bg, B, ts, -2.0, o);
        json pts = json::array();
        double worst = 0;
        std::string csv = "t,phi_mean,phi_closed_form,rescaled_volume\n";
        for (const auto& p : ray.points) {
            const double star = 2 * p.t + std::log(b2 / 8) / 3;
            const Vec& phi = p.report.phi.values;
            worst = std::max(worst, max_abs(phi - star));
            pts.push_back({{"t", p.t}, {"phi_mean", phi.mean()}, {"phi_closed_form", star},
                           {"rescaled_volume", p.rescaled_volume}, {"iterations", p.report.iterations}});
            csv += format_double(p.t) + "," + format_double(phi.mean()) + "," + format_double(star) + "," +
                   format_double(p.rescaled_volume) + "\n";
        }
        const auto& c = ray.certificate;
        r.results = {{"B_norm2", b2}, {"kappa", -2.0}, {"points", pts},
                     {"certificate", {{"monotone_slack", c.monotone_slack}, {"lipschitz_slack", c.lipschitz_slack},
                                      {"envelope_lower_slack", c.envelope_lower_slack},
                                      {"envelope_upper_slack", c.envelope_upper_slack}}}};
        r.check("closed_form", worst, tol_or(cfg, 1e-8));
        r.check_at_least("monotone", c.monotone_slack, -c.allowance);
        r.check_at_least("lipschitz", c.lipschitz_slack, -c.allowance);
        r.check_at_least("envelope_upper", c.envelope_upper_slack, -c.allowance);
        r.check_at_least("envelope_lower", c.envelope_lower_slack, -c.allowance);
        r.check("envelope_lower_saturated", std::abs(c.envelope_lower_slack), 1e-8);
        r.csv = csv;
    });
}

// ---- ckmc ----------------------------------------------------------------------

inline Report run_ckmc(double b2, double c, int eps, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        require(b2 >= 0, ErrorCode::InvalidArgument, "B_norm2 must be nonnegative");
        const int n = cfg.grid > 0 ? cfg.grid : 32;
        auto T = LatticeTorus::square(2 * pi, n);
        ConformalMetric bg(T, {BaseKind::Flat});
        auto d = realize(3, cplx(std::sqrt(b2 / 16), 0), T);
        auto br = ckmc_bracket(b2);
        r.results = {{"B_norm2", b2}, {"c", c}, {"eps", eps},
                     {"bracket", {{"exists", br.exists}, {"r1", br.r1}, {"sub", br.sub}, {"super", br.super}}}};
        r.check("bracket_existence_rule", br.exists == (b2 <= 8.0 / 27.0) ? 0.0 : 1.0, 0.0);
        if (br.exists) {
            r.check_at_least("bracket_r1_bound", 2.0 / 3.0 - br.r1, -1e-12);
            r.check("bracket_root", std::abs(br.r1 * br.r1 * br.r1 - br.r1 * br.r1 + 0.5 * b2), 1e-14);
        }
        // constant root of 2c e^phi + eps e^{-2 phi} |B|^2 = 0
        const double e3 = -eps * b2 / (2 * c);
        require(e3 > 0, ErrorCode::NoSolution, "no constant solution for these signs");
        NewtonOptions o;
        if (cfg.tol > 0) o.tol = cfg.tol;
        auto rep = solve_ckmc(bg, c, eps, nullptr, &d.B, Vec::Zero(T->size()), o);
        const double star = std::log(e3) / 3;
        r.results["phi_closed_form"] = star;
        r.results["iterations"] = rep.iterations;
        r.check("residual", rep.residual, rep.tolerance);
        r.check("closed_form", max_abs(rep.phi.values - star), tol_or(cfg, 1e-10));
        r.csv = to_csv(rep.phi, "phi");
    });
}

// ---- cone ----------------------------------------------------------------------

inline bool wants(const std::string& checks, const std::string& name) {
    if (checks == "all") return true;
    std::stringstream ss(checks);
    std::string item;
    while (std::getline(ss, item, ','))
        if (item == name) return true;
    return false;
}

inline Report run_cone(const json& structure, const std::vector<double>& ts, const std::string& checks, double C,
                       const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        ConeGrid c(structure_from_json(structure), ts);
        r.results = {{"uR", c.uR}, {"t", ts}, {"psi_normalization", "detg_t0"}, {"checks", checks}};
        if (wants(checks, "thomas")) {
            auto T = thomas_coefficients(c.base);
            r.results["thomas"] = {{"flatness", T.flatness}, {"radial", T.radial}, {"torsion", T.torsion},
                                   {"volume_parallel", T.volume_parallel}};
            r.check("thomas_flatness", T.flatness, tol_or(cfg, 1e-8));
            r.check("thomas_radial", T.radial, 1e-12);
            r.check("thomas_volume_parallel", T.volume_parallel, 1e-8);
        }
        if (wants(checks, "metrics")) {
            int bad = 0;
            for (const auto& s : cone_metrics(c)) bad += !signature_ok(s);
            auto h = hessian_residuals(c);
            r.results["metrics"] = {{"signature_violations", bad}, {"hessian_f", h.f}, {"hessian_g", h.g}};
            r.check("signature", bad, 0);
            r.check("hessian_f", h.f, tol_or(cfg, 1e-8));
            r.check("hessian_g", h.g, 1e-7);
        }
        if (wants(checks, "levels")) {
            auto l = level_set_geometry(c);
            r.results["levels"] = {{"f_second_fundamental", l.f_second_fundamental},
                                   {"f_radial_parallel", l.f_radial_parallel},
                                   {"f_radial_norm", l.f_radial_norm},
                                   {"g_umbilic", l.g_umbilic},
                                   {"g_mean_curvature_spread", l.g_mean_curvature_spread},
                                   {"g_spacelike", l.g_spacelike}};
            r.check("f_totally_geodesic", l.f_second_fundamental, tol_or(cfg, 1e-8));
            r.check("f_radial_parallel", l.f_radial_parallel, 1e-8);
            r.check("g_umbilic", l.g_umbilic, 1e-6);
            r.check("g_constant_mean_curvature", l.g_mean_curvature_spread, 1e-6);
            r.check("g_spacelike", l.g_spacelike ? 0.0 : 1.0, 0.0);
        }
        if (wants(checks, "det")) {
            auto d = determinant_identities(c);
            r.results["determinants"] = {{"detg_defect", d.detg_defect}, {"detf_defect", d.detf_defect},
                                         {"psi_constant", d.psi_constant}, {"parallel_defect", d.parallel_defect}};
            r.check("detg_psi2", d.detg_defect, tol_or(cfg, 1e-10));
            r.check("detf_27e2F_psi2", d.detf_defect, tol_or(cfg, 1e-10));
            r.check("detg_parallel", d.parallel_defect, 1e-8);
        }
        if (wants(checks, "ma")) {
            std::vector<double> inside;
            for (double t : ts)
                if (cone_F(c.uR, t) - 2e-3 > -std::log(C)) inside.push_back(t);
            if (inside.size() < ts.size())
                r.notes.push_back("monge-ampere: " + std::to_string(ts.size() - inside.size()) +
                                  " t samples outside F > -log C skipped");
            require(!inside.empty(), ErrorCode::DomainViolation, "no t sample inside the Monge-Ampere domain");
            auto m = monge_ampere_potential(c, C, inside);
            r.results["monge_ampere"] = {{"C", C}, {"samples", inside.size()}, {"det_defect", m.det_defect},
                                         {"matrix_defect", m.matrix_defect}, {"fd_defect", m.fd_defect},
                                         {"quadrature_defect", m.quadrature_defect}};
            r.check("monge_ampere_det", m.det_defect, tol_or(cfg, 1e-8));
            r.check("monge_ampere_matrix", m.matrix_defect, 1e-8);
            r.check("monge_ampere_fd", m.fd_defect, 1e-6);
            r.check("monge_ampere_quadrature", m.quadrature_defect, 1e-6);
        }
        if (wants(checks, "dust")) {
            auto d = dust_residual(c, cfg.seed);
            r.results["dust"] = {{"residual", d.residual}, {"energy_min", d.energy_min}, {"trivial", d.trivial}};
            r.check("dust", d.residual, tol_or(cfg, 1e-5));
            r.check_at_least("energy_condition", d.energy_min, -1e-6);
        }
        r.csv = cone_eigen_csv(c);
    });
}

// ---- geodesic ------------------------------------------------------------------

inline Report run_geodesic(double kappa, double rho, double revolutions, int steps, double scale, const RunConfig& cfg) {
    return timed([&](Report& r) {
        r.normalization = cfg.normalization;
        require(rho > 0 && revolutions > 0 && steps > 0, ErrorCode::InvalidArgument, "rho, revolutions, steps must be positive");
        SphereFamily fam{kappa};
        auto m = sphere_family_magnetic(fam);
        m.scale = scale;
        const double T = 2 * pi * revolutions, dt = 2 * pi / steps;
        auto tr = magnetic_geodesic(m, {rho, 0}, {0, rho}, T, dt, std::max(1, steps / 200));
        const auto p = sphere_eval(fam, rho);
        const double expected = -0.25 * scale * p.f / std::sqrt(p.gamma2);
        r.results = {{"kappa", kappa}, {"rho", rho}, {"revolutions", revolutions}, {"steps", steps},
                     {"magnetic_scale", scale}, {"energy_drift", tr.energy_drift},
                     {"radial_drift", tr.radial_drift}, {"kappa_geo_mean", tr.kgeo_mean},
                     {"kappa_geo_spread", tr.kgeo_spread}, {"kappa_geo_expected", expected}};
        r.check("energy_drift", tr.energy_drift, 1e-8);
        r.check("radial_drift", tr.radial_drift, tol_or(cfg, 1e-8));
        r.check("kappa_geo_constant", tr.kgeo_spread, 1e-6);
        r.check("kappa_geo_expected", std::abs(tr.kgeo_mean - expected), 1e-6);
        r.csv = trajectory_csv(tr);
    });
}

// ---- output --------------------------------------------------------------------

inline std::string csv_path(const std::string& out) {
    const auto dot = out.rfind('.');
    const auto slash = out.rfind('/');
    const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
    return stem + ".csv";
}

// Writes the report per --emit/--out; returns the process exit code.
inline int emit(const Report& r, const RunConfig& cfg, std::ostream& stdout_, std::ostream& stderr_) {
    const json j = to_json(r, cfg);
    const bool want_json = cfg.emit == "json" || cfg.emit == "both";
    const bool want_csv = cfg.emit == "csv" || cfg.emit == "both";
    if (want_json) {
        if (cfg.out.empty()) stdout_ << j.dump(2) << "\n";
        else write_file(cfg.out, j.dump(2) + "\n");
    }
    if (want_csv && !r.csv.empty()) {
        if (cfg.out.empty()) stdout_ << r.csv;
        else write_file(want_json ? csv_path(cfg.out) : cfg.out, r.csv);
    }
    for (const auto& i : r.identities)
        if (!i.pass())
            stderr_ << "FAIL " << i.name << " residual=" << format_double(i.value) << " tolerance=" << format_double(i.bound)
                    << "\n";
    if (!r.error.empty()) stderr_ << "ERROR " << r.error << "\n";
    return r.exit_code();
}

} // namespace ahs::cli
