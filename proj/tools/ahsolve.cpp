#include <ahs/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace ahs;
using namespace ahs::cli;

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad number '" + item + "'");
        }
    }
    require(!v.empty(), ErrorCode::InvalidArgument, "empty list");
    return v;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    cfg.argv.assign(argv, argv + argc);
    cfg.argv[0] = "ahsolve";

    CLI::App app{"ahsolve: conformal Einstein AH-structure solver and verifier"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--grid", cfg.grid, "grid resolution per side (0: command default)")->check(CLI::NonNegativeNumber);
    app.add_option("--tol", cfg.tol, "override primary tolerances")->check(CLI::PositiveNumber);
    app.add_option("--out", cfg.out, "report path (stdout when omitted)");
    app.add_option("--emit", cfg.emit, "json|csv|both")->check(CLI::IsMember({"json", "csv", "both"}));
    app.add_option("--seed", cfg.seed, "seed for randomized property sweeps");
    app.add_option("--jobs", cfg.jobs, "parallel verifications (capped by AHSOLVE_THREADS)")->check(CLI::PositiveNumber);
    app.add_option("--normalization", cfg.normalization, "fix-uR|fix-volume")
        ->check(CLI::IsMember({"fix-uR", "fix-volume"}));

    std::function<Report()> job;

    auto* solve = app.add_subcommand("solve", "solve the conformal Einstein equation");
    std::string spec_path;
    bool torus = false;
    double kappa = -2, b2 = 4, bg_cos = 0;
    std::string method = "newton";
    auto* spec_opt = solve->add_option("--spec", spec_path, "spec JSON file");
    auto* torus_flag = solve->add_flag("--torus", torus, "2pi-square flat torus with a constant cubic");
    solve->add_option("--kappa", kappa);
    solve->add_option("--B-norm2", b2, "full-contraction |B|^2 of the constant cubic");
    solve->add_option("--background-cos", bg_cos, "background e^{a cos x} times flat");
    solve->add_option("--method", method)->check(CLI::IsMember({"newton", "monotone"}));
    solve->add_option("--structure-out", cfg.structure_out, "write the solved structure JSON");
    spec_opt->excludes(torus_flag);
    solve->callback([&] {
        require(torus || !spec_path.empty(), ErrorCode::InvalidArgument, "solve needs --spec or --torus");
        json spec = torus ? torus_solve_spec(cfg.grid, kappa, b2, bg_cos) : read_json_file(spec_path);
        if (torus) spec["method"] = method;
        job = [&, spec] { return run_solve(spec, cfg); };
    });

    auto* verify = app.add_subcommand("verify", "check the Einstein AH-structure identities");
    std::string structure_path;
    verify->add_option("--structure", structure_path, "structure JSON file")->required();
    verify->callback([&] { job = [&] { return run_verify(read_json_file(structure_path), cfg); }; });

    auto* family = app.add_subcommand("family", "closed-form families");
    family->require_subcommand(1);
    family->fallthrough();
    bool fverify = false;
    double fkappa = 0;
    for (const char* name : {"sphere", "torus"}) {
        auto* sub = family->add_subcommand(name);
        sub->add_option("--kappa", fkappa)->required();
        sub->add_flag("--verify", fverify, "build the grid structure and run the residual suite");
        const std::string n = name;
        sub->callback([&, n] {
            job = [&, n] {
                return n == "sphere" ? run_family_sphere(fkappa, fverify, cfg) : run_family_torus(fkappa, fverify, cfg);
            };
        });
    }

    auto* ray = app.add_subcommand("ray", "ray of solutions under data scaling on the flat torus");
    double rb2 = 4;
    std::string rts = "0,0.5,1,2";
    ray->add_option("--B-norm2", rb2);
    ray->add_option("--t", rts, "comma-separated ray parameters");
    ray->callback([&] { job = [&] { return run_ray(rb2, parse_list(rts), cfg); }; });

    auto* ckmc = app.add_subcommand("ckmc", "constant-curvature Kaehler-type equation on the flat torus");
    double cb2 = 0.2, cc = -1;
    int ceps = 1;
    ckmc->add_option("--B-norm2", cb2);
    ckmc->add_option("--c", cc);
    ckmc->add_option("--eps", ceps)->check(CLI::IsMember({-1, 1}));
    ckmc->callback([&] { job = [&] { return run_ckmc(cb2, cc, ceps, cfg); }; });

    auto* cone = app.add_subcommand("cone", "cone metrics, Thomas connection and potentials");
    std::string cone_structure, cts = "-0.5:0.5:0.05", checks = "all";
    double C = 2;
    cone->add_option("--structure", cone_structure, "structure JSON (default: exact torus)");
    cone->add_option("--t", cts, "a:b:h");
    cone->add_option("--check", checks, "all or a comma list of thomas,metrics,levels,det,ma,dust");
    cone->add_option("--C", C, "Monge-Ampere constant");
    cone->callback([&] {
        job = [&] {
            const json s = cone_structure.empty() ? json{{"family", "exact-torus"}, {"grid", cfg.grid > 0 ? cfg.grid : 32}}
                                                  : read_json_file(cone_structure);
            return run_cone(s, parse_t_range(cts), checks, C, cfg);
        };
    });

    auto* geo = app.add_subcommand("geodesic", "magnetic geodesics of the sphere family");
    double gkappa = 3, rho = 1, revs = 1, scale = 1;
    int steps = 2000;
    geo->add_option("--kappa", gkappa);
    geo->add_option("--rho", rho, "starting radius (1: equator)");
    geo->add_option("--revolutions", revs);
    geo->add_option("--steps", steps, "steps per revolution");
    geo->add_option("--magnetic-scale", scale);
    geo->callback([&] { job = [&] { return run_geodesic(gkappa, rho, revs, steps, scale, cfg); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : Usage;
    } catch (const Error& e) {
        std::cerr << "ERROR " << e.what() << "\n";
        return e.code() == ErrorCode::Io ? RunError : Usage;
    }

    Report r;
    try {
        r = job();
    } catch (const Error& e) {
        r.error = e.what();
    }
    try {
        return emit(r, cfg, std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "ERROR " << e.what() << "\n";
        return RunError;
    }
}
