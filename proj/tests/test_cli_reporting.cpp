#include <ahs/cli.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace ahs;
using namespace ahs::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run ahsolve(const std::string& args) {
    const std::string cmd = std::string(AHSOLVE_BIN) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / "ahsolve_cli_test";
    fs::create_directories(d);
    return d / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json identity(const json& report, const std::string& name) {
    for (const auto& i : report.at("identities"))
        if (i.at("name") == name) return i;
    return nullptr;
}

RunConfig config(int grid = 0) {
    RunConfig c;
    c.argv = {"ahsolve", "test"};
    c.grid = grid;
    return c;
}

} // namespace

TEST(Report, SchemaFields) {
    Report r;
    r.check("a", 1e-12, 1e-10);
    r.check_at_least("b", -1.0, 0.0);
    r.wall_seconds = 0.5;
    auto c = config();
    c.seed = 42;
    auto j = to_json(r, c);
    EXPECT_EQ(j.at("schema"), 1);
    EXPECT_EQ(j.at("command"), "ahsolve test");
    EXPECT_EQ(j.at("seed"), 42);
    EXPECT_EQ(j.at("normalization"), "none");
    EXPECT_EQ(j.at("timing").at("wall_seconds"), 0.5);
    EXPECT_EQ(j.at("failed"), json::array({"b"}));
    EXPECT_FALSE(j.at("pass").get<bool>());
    EXPECT_EQ(identity(j, "a").at("comparison"), "<=");
    EXPECT_EQ(identity(j, "b").at("comparison"), ">=");
    EXPECT_FALSE(deterministic_part(j).contains("timing"));
    EXPECT_EQ(r.exit_code(), IdentityFailure);
}

TEST(Report, NonFiniteResidualFails) {
    Report r;
    r.check("nan", std::nan(""), 1.0);
    EXPECT_FALSE(r.pass());
    EXPECT_EQ(to_json(r, config()).at("identities")[0].at("residual"), "nan");
}

TEST(Report, ErrorGivesRunErrorCode) {
    auto r = timed([](Report&) { throw Error(ErrorCode::Divergence, "boom"); });
    EXPECT_EQ(r.exit_code(), RunError);
    EXPECT_NE(r.error.find("boom"), std::string::npos);
}

TEST(Config, ThreadCapFromEnvironment) {
    auto c = config();
    c.jobs = 8;
    setenv("AHSOLVE_THREADS", "2", 1);
    EXPECT_EQ(effective_jobs(c), 2);
    setenv("AHSOLVE_THREADS", "junk", 1);
    EXPECT_EQ(effective_jobs(c), 8);
    unsetenv("AHSOLVE_THREADS");
    c.jobs = 0;
    EXPECT_EQ(effective_jobs(c), 1);
}

TEST(Config, TasksRunOnThreadsAndRethrow) {
    std::vector<int> slots(6, 0);
    std::vector<std::function<void()>> tasks;
    for (int i = 0; i < 6; ++i) tasks.push_back([&, i] { slots[i] = i * i; });
    run_tasks(tasks, 3);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(slots[i], i * i);
    tasks.push_back([] { throw Error(ErrorCode::InvalidArgument, "x"); });
    EXPECT_THROW(run_tasks(tasks, 3), Error);
}

TEST(Config, CsvPathFollowsReport) {
    EXPECT_EQ(csv_path("out/report.json"), "out/report.csv");
    EXPECT_EQ(csv_path("a.b/report"), "a.b/report.csv");
}

TEST(Solve, TorusConstantSolution) {
    auto r = run_solve(torus_solve_spec(64, -2, 4, 0), config());
    ASSERT_TRUE(r.pass()) << to_json(r, config()).dump(2);
    EXPECT_NEAR(r.results.at("phi").at("max").get<double>(), -std::log(2.0) / 3, 1e-10);
    EXPECT_NEAR(r.results.at("phi").at("min").get<double>(), -std::log(2.0) / 3, 1e-10);
}

TEST(Solve, SpecWithTermsAndFixVolume) {
    json spec = torus_solve_spec(32, -2, 0, 0);
    spec.erase("B_norm2");
    spec["terms"] = json::array({{{"degree", 3}, {"coefficient", {{"re", 0.5}}}}});
    auto c = config();
    c.normalization = "fix-volume";
    auto r = run_solve(spec, c);
    ASSERT_TRUE(r.pass()) << to_json(r, c).dump(2);
    // |B|^2 = 16/4 = 4, same constant as above
    EXPECT_NEAR(r.results.at("phi").at("mean").get<double>(), -std::log(2.0) / 3, 1e-10);
    EXPECT_EQ(r.normalization, "fix-volume");
    EXPECT_NEAR(r.results.at("volume_shift").get<double>(), std::log(2.0) / 3, 1e-10);
}

TEST(Solve, CubicContributionsAddAsOneDifferential) {
    // coefficients 0.5 + 0.5 give |B|^2 = 16, not 4 + 4
    json spec = torus_solve_spec(32, -2, 4, 0.3);
    spec["terms"] = json::array({{{"degree", 3}, {"coefficient", {{"re", 0.5}}}}});
    auto c = config();
    c.structure_out = scratch("sum.json").string();
    auto r = run_solve(spec, c);
    ASSERT_TRUE(r.pass()) << to_json(r, c).dump(2);
    EXPECT_NEAR(r.results.at("phi_closed_form").get<double>(), std::log(2.0) / 3, 1e-14);
    EXPECT_NEAR(r.results.at("phi").at("mean").get<double>(), std::log(2.0) / 3, 1e-3);
    auto v = run_verify(read_json_file(c.structure_out), config());
    EXPECT_TRUE(v.pass()) << to_json(v, config()).dump(2);
}

TEST(Solve, RejectsBadSpec) {
    json spec = torus_solve_spec(16, -2, 4, 0);
    spec["method"] = "bisect";
    EXPECT_EQ(run_solve(spec, config()).exit_code(), RunError);
    spec = torus_solve_spec(16, -2, -1, 0);
    EXPECT_EQ(run_solve(spec, config()).exit_code(), RunError);
}

TEST(Verify, ExactTorusPasses) {
    auto r = run_verify({{"family", "exact-torus"}, {"grid", 32}}, config());
    EXPECT_TRUE(r.pass()) << to_json(r, config()).dump(2);
    EXPECT_NE(identity(to_json(r, config()), "three_canonical_vortex"), nullptr);
}

TEST(Verify, PerturbedFailsOnDivergence) {
    auto r = run_verify({{"family", "exact-torus"}, {"grid", 32}, {"perturb_B", 0.1}}, config());
    auto f = r.failed();
    EXPECT_NE(std::find(f.begin(), f.end(), "divB"), f.end());
    EXPECT_EQ(r.exit_code(), IdentityFailure);
}

TEST(Verify, ParallelMatchesSerial) {
    const json s = {{"family", "torus"}, {"kappa", -5.0}, {"grid", 64}};
    auto c1 = config(), c3 = config();
    c3.jobs = 3;
    auto a = to_json(run_verify(s, c1), c1), b = to_json(run_verify(s, c3), c3);
    a["config"].erase("jobs");
    b["config"].erase("jobs");
    EXPECT_EQ(deterministic_part(a), deterministic_part(b));
}

TEST(Family, SphereNu) {
    auto r = run_family_sphere(3.0, false, config());
    ASSERT_TRUE(r.pass());
    EXPECT_NEAR(r.results.at("nu").get<double>(), 17.479, 5e-4);
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "rho,h_coeff,sR,f,gamma2");
}

TEST(Family, TorusValues) {
    auto r = run_family_torus(-5.0, false, config());
    ASSERT_TRUE(r.pass());
    EXPECT_NEAR(r.results.at("h_coeff_0").get<double>(), 0.5, 1e-14);
    EXPECT_NEAR(r.results.at("h_coeff_half_pi").get<double>(), 2.0, 1e-14);
    EXPECT_NEAR(r.results.at("sR_min").get<double>(), -3.0, 1e-12);
    EXPECT_NEAR(r.results.at("sR_max").get<double>(), 3.0, 1e-12);
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "s,h_coeff,sR,f,gamma2");
}

TEST(Ray, DefaultParameters) {
    auto r = run_ray(4.0, {0, 0.5, 1, 2}, config(32));
    ASSERT_TRUE(r.pass()) << to_json(r, config()).dump(2);
    EXPECT_EQ(r.results.at("points").size(), 4u);
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "t,phi_mean,phi_closed_form,rescaled_volume");
}

TEST(Ckmc, ConstantRootAndSignError) {
    auto r = run_ckmc(0.2, -1, 1, config(16));
    ASSERT_TRUE(r.pass());
    EXPECT_NEAR(r.results.at("phi_closed_form").get<double>(), -0.7675283643313486, 1e-15);
    EXPECT_EQ(run_ckmc(0.2, 1, 1, config(16)).exit_code(), RunError);
    EXPECT_FALSE(run_ckmc(0.5, -1, 1, config(16)).results.at("bracket").at("exists").get<bool>());
}

TEST(Cone, SubsetOfChecks) {
    auto r = run_cone({{"family", "exact-torus"}, {"grid", 16}}, t_range(-0.2, 0.2, 0.1), "det,ma", 2.0, config());
    ASSERT_TRUE(r.pass()) << to_json(r, config()).dump(2);
    EXPECT_TRUE(r.results.contains("determinants"));
    EXPECT_TRUE(r.results.contains("monge_ampere"));
    EXPECT_FALSE(r.results.contains("dust"));
    EXPECT_EQ(r.results.at("psi_normalization"), "detg_t0");
}

TEST(Cone, SamplesOutsidePotentialDomainAreNoted) {
    auto r = run_cone({{"family", "exact-torus"}, {"grid", 16}}, t_range(0.0, 0.5, 0.1), "ma", 2.0, config());
    ASSERT_TRUE(r.pass());
    ASSERT_EQ(r.notes.size(), 1u);
    EXPECT_LT(r.results.at("monge_ampere").at("samples").get<int>(), 6);
}

TEST(Cone, NonEinsteinStructureIsAnError) {
    auto r = run_cone({{"family", "torus"}, {"kappa", -5.0}, {"grid", 16}}, {0.0}, "all", 2.0, config());
    EXPECT_EQ(r.exit_code(), RunError);
}

TEST(Geodesic, OffEquatorOrbit) {
    auto r = run_geodesic(3.0, 2.0, 1.0, 2000, 1.0, config());
    ASSERT_TRUE(r.pass());
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "t,x,y,energy,kappa_geo");
}

TEST(Binary, SolveTorusExample) {
    auto out = scratch("solve.json");
    auto run = ahsolve("solve --torus --kappa -2 --B-norm2 4 --out " + out.string());
    ASSERT_EQ(run.code, 0) << run.out;
    auto j = json::parse(slurp(out));
    EXPECT_EQ(j.at("schema"), 1);
    EXPECT_EQ(j.at("command"), "ahsolve solve --torus --kappa -2 --B-norm2 4 --out " + out.string());
    EXPECT_TRUE(j.at("pass").get<bool>());
    EXPECT_NEAR(j.at("results").at("phi").at("mean").get<double>(), -std::log(2.0) / 3, 1e-10);
    EXPECT_LE(identity(j, "phi_closed_form").at("residual").get<double>(), 1e-10);
}

TEST(Binary, SolveFromSpecFile) {
    auto spec = scratch("spec.json"), out = scratch("spec_report.json");
    write_file(spec, torus_solve_spec(32, -2, 4, 0.3).dump());
    auto run = ahsolve("solve --spec " + spec.string() + " --out " + out.string());
    ASSERT_EQ(run.code, 0) << run.out;
    EXPECT_LE(identity(json::parse(slurp(out)), "phi_closed_form").at("residual").get<double>(), 1e-8);
}

TEST(Binary, BrokenStructureNamesDivB) {
    auto s = scratch("broken.json");
    write_file(s, json{{"family", "exact-torus"}, {"grid", 32}, {"perturb_B", 0.1}}.dump());
    auto run = ahsolve("verify --structure " + s.string() + " --emit json");
    EXPECT_EQ(run.code, 1);
    EXPECT_NE(run.out.find("FAIL divB"), std::string::npos);
}

TEST(Binary, SolvedStructureVerifies) {
    auto s = scratch("solved.json");
    auto run = ahsolve("solve --torus --kappa -2 --B-norm2 4 --grid 32 --structure-out " + s.string());
    ASSERT_EQ(run.code, 0) << run.out;
    EXPECT_EQ(ahsolve("verify --structure " + s.string()).code, 0);
}

TEST(Binary, SphereFamilyVerify) {
    auto out = scratch("sphere.json");
    auto run = ahsolve("family sphere --kappa 3 --verify --out " + out.string());
    ASSERT_EQ(run.code, 0) << run.out;
    auto j = json::parse(slurp(out));
    EXPECT_NEAR(j.at("results").at("nu").get<double>(), 17.479, 5e-4);
    EXPECT_TRUE(identity(j, "divB").at("pass").get<bool>());
}

TEST(Binary, DeterministicModuloTiming) {
    auto out = scratch("det.json");
    const std::string args = "solve --torus --kappa -2 --B-norm2 4 --grid 32 --seed 7 --out " + out.string();
    ASSERT_EQ(ahsolve(args).code, 0);
    auto a = json::parse(slurp(out));
    ASSERT_EQ(ahsolve(args).code, 0);
    auto b = json::parse(slurp(out));
    EXPECT_EQ(a.at("seed"), 7);
    EXPECT_EQ(deterministic_part(a).dump(), deterministic_part(b).dump());
}

TEST(Binary, EmitBothWritesCsvBesideJson) {
    auto out = scratch("torus_family.json");
    fs::remove(scratch("torus_family.csv"));
    ASSERT_EQ(ahsolve("family torus --kappa -5 --emit both --out " + out.string()).code, 0);
    auto csv = slurp(scratch("torus_family.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "s,h_coeff,sR,f,gamma2");
    EXPECT_TRUE(json::parse(slurp(out)).at("pass").get<bool>());
}

TEST(Binary, CsvToStdout) {
    auto run = ahsolve("geodesic --kappa 3 --emit csv");
    ASSERT_EQ(run.code, 0);
    EXPECT_EQ(run.out.substr(0, run.out.find('\n')), "t,x,y,energy,kappa_geo");
}

TEST(Binary, ConeExample) {
    auto out = scratch("cone.json");
    auto run = ahsolve("cone --t -0.5:0.5:0.05 --check all --grid 16 --out " + out.string());
    ASSERT_EQ(run.code, 0) << run.out;
    auto j = json::parse(slurp(out));
    EXPECT_TRUE(j.at("pass").get<bool>());
    EXPECT_TRUE(j.contains("notes"));
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(ahsolve("").code, Usage);
    EXPECT_EQ(ahsolve("family cube --kappa 1").code, Usage);
    EXPECT_EQ(ahsolve("solve --torus --emit xml").code, Usage);
    EXPECT_EQ(ahsolve("verify --structure /nonexistent.json").code, RunError);
    EXPECT_EQ(ahsolve("ckmc --c 1 --eps 1").code, RunError);
    EXPECT_EQ(ahsolve("family torus --kappa -5 --verify --grid 32 --tol 1e-30").code, IdentityFailure);
}
