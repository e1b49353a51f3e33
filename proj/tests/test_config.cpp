#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sbfr/config.hpp"
#include "sbfr/oracles.hpp"
#include "sbfr/runner.hpp"

using namespace sbfr;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "sbfr_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p.string();
}

const char* kMinimalSolve = R"(# minimal solve fixture
command = solve
master_seed = 5

[model]
kind = brownian
dim = 1
sigma = 1.0

[marginals]
rho0_kind = polynomial
rho0_box = 0 1
rho0_coeffs = 1.2 -0.4
rhoT_kind = polynomial
rhoT_box = 0 1
rhoT_coeffs = 0.8 0.4

[solver]
cloud_size = 2000
sde_steps = 16
stop_tol = 0.001
k_max = 8
lattice_nodes = 32

[output]
directory = %OUT%
prefix = run_
log = run.jsonl
)";

}  // namespace

TEST_CASE("config parse errors are line-numbered") {
    CHECK_THROWS_WITH_AS(parse_config(""), "missing command", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("# only a comment\n"), "missing command", ConfigError);

    try {
        parse_config("command = solve\n[model]\nkind = brownian\nkind = ou\n");
        FAIL("expected duplicate-key error");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 4") != std::string::npos);
        CHECK(msg.find("duplicate key 'kind'") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }

    try {
        parse_config("command = solve\n[solver]\nbogus = 1\n");
        FAIL("expected unknown-key error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("unknown key 'bogus'") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("command = dance\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = solve\n[nope]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("command = solve\n[model]\ndim = 0\n"), ConfigError);
}

TEST_CASE("config round-trip through canonical emission") {
    RunConfig c;
    c.command = Command::study;
    c.master_seed = 90210;
    c.model.kind = "ou";
    c.model.dim = 2;
    c.model.sigma = 0.75;
    c.model.theta = 1.25;
    c.rho0.kind = DensityKind::polynomial;
    c.rho0.box = {0.0, 1.0, -0.5, 0.5};
    c.rho0.coeffs = {1.0, 0.125};
    c.rhoT.kind = DensityKind::uniform;
    c.rhoT.box = {0.0, 1.0, -0.5, 0.5};
    c.solver.cloud_size = 12345;
    c.solver.bandwidth = 0.0625;
    c.solver.stop_tol = 3.5e-5;
    c.solver.mode = "direct";
    c.solver.q_min = 0.01;
    c.solver.q_max = 0.4;
    c.solver.Q_min = 0.1;
    c.solver.Q_max = 0.2;
    c.solver.rho_min = 0.5;
    c.solver.rho_max = 2.0;
    c.fdd.functional = "second_moment";
    c.fdd.functional_time = 0.5;
    c.study.n_values = {500, 1000, 2000};
    c.study.seeds = 4;
    c.output.directory = "out";
    c.output.csv = "study.csv";

    const RunConfig back = parse_config(emit_config(c));
    CHECK(back == c);
    // Emission is canonical: emitting the reparse is byte-identical.
    CHECK(emit_config(back) == emit_config(c));
}

TEST_CASE("potential dump round-trip is lossless") {
    const LatticeFunction f = LatticeFunction::tabulate(Box({-0.25, 0.5}, {1.0, 2.0}), 9, [](const Vec& x) {
        return 0.123456789012345 + x[0] * x[0] + std::exp(x[1]);
    });
    const LatticeFunction back = read_potential(write_potential(f));
    REQUIRE(back.same_lattice(f));
    for (std::size_t k = 0; k < f.node_count(); ++k) CHECK(back.value_at(k) == f.value_at(k));
    CHECK_THROWS(read_potential("BOGUS\n"));
}

TEST_CASE("grid problem CSV round-trip") {
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    Marginal rho;
    rho.support = Box::unit(1);
    rho.pdf = [](const Vec&) { return 1.0; };
    rho.min_value = rho.max_value = 1.0;
    const GridProblem p = GridProblem::from_model(bm, rho, rho, 16);
    const GridProblem back = read_grid_problem(write_grid_problem(p));
    CHECK(back.rho0 == p.rho0);
    CHECK(back.wT == p.wT);
    CHECK(back.kernel == p.kernel);
    REQUIRE(back.boxT.has_value());
    CHECK(*back.boxT == *p.boxT);
    // And the reloaded problem solves to the same fixed point.
    const GridSolution a = grid_fixed_point(p, 1e-12, 500);
    const GridSolution b = grid_fixed_point(back, 1e-12, 500);
    CHECK(a.g_star == b.g_star);
}

TEST_CASE("solve command end to end") {
    const fs::path out_dir = fs::temp_directory_path() / "sbfr_test" / "solve_out";
    fs::remove_all(out_dir);
    std::string text = kMinimalSolve;
    text.replace(text.find("%OUT%"), 5, out_dir.string());
    const std::string path = write_temp("solve.cfg", text);

    CHECK(execute_file(path) == 0);
    CHECK(fs::exists(out_dir / "run_g_hat.pot"));
    CHECK(fs::exists(out_dir / "run_nu0.pot"));
    CHECK(fs::exists(out_dir / "run_nuT.pot"));
    CHECK(fs::exists(out_dir / "run.jsonl"));

    // The dumped potential parses back and is normalized.
    const LatticeFunction g = read_potential_file((out_dir / "run_g_hat.pot").string());
    CHECK(std::abs(l1_normalize(g).second - 1.0) < 1e-9);

    // A solved potential can seed an fdd run as a lattice-file boundary law.
    const std::string fdd_cfg = write_temp("fdd.cfg",
                                           "command = fdd\nmaster_seed = 3\n[model]\nkind = brownian\ndim = 1\n"
                                           "[fdd]\nreplications = 200\ncloud_size = 200\nfunctional = one\n"
                                           "nu0 = file " + (out_dir / "run_nu0.pot").string() +
                                               "\nnuT = file " + (out_dir / "run_nuT.pot").string() +
                                               "\n[output]\ndirectory = " + out_dir.string() + "\ncsv = fdd.csv\n");
    CHECK(execute_file(fdd_cfg) == 0);
    CHECK(fs::exists(out_dir / "fdd.csv"));
}

TEST_CASE("missing files and bad configs exit with code 2") {
    CHECK(execute_file("/nonexistent/path.cfg") == 2);
    const std::string bad = write_temp("bad.cfg", "command = solve\n[solver]\nbogus = 1\n");
    CHECK(execute_file(bad) == 2);
    const std::string missing_marginal = write_temp(
        "missing.cfg",
        "command = fdd\n[model]\nkind = brownian\ndim = 1\n[fdd]\nnu0 = file /does/not/exist.pot\nnuT = atom 0\n");
    CHECK(execute_file(missing_marginal) == 2);
}

TEST_CASE("oracle command writes dumps and the grid matrix") {
    const fs::path out_dir = fs::temp_directory_path() / "sbfr_test" / "oracle_out";
    fs::remove_all(out_dir);
    const std::string cfg = write_temp("oracle.cfg",
                                       "command = oracle\nmaster_seed = 1\n[model]\nkind = brownian\ndim = 1\n"
                                       "[marginals]\nrho0_kind = uniform\nrho0_box = 0 1\nrhoT_kind = uniform\nrhoT_box = 0 1\n"
                                       "[oracle]\nnodes = 24\n[output]\ndirectory = " + out_dir.string() + "\nprefix = o_\n");
    CHECK(execute_file(cfg) == 0);
    CHECK(fs::exists(out_dir / "o_oracle_g_star.pot"));
    CHECK(fs::exists(out_dir / "o_oracle_nu0.pot"));
    CHECK(fs::exists(out_dir / "o_oracle_nuT.pot"));
    const GridProblem p = read_grid_problem([&] {
        std::ifstream in(out_dir / "o_oracle_grid.csv", std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }());
    CHECK(p.n0() == 24);
}

TEST_CASE("non-convergence exits with code 1 but still writes outputs") {
    const fs::path out_dir = fs::temp_directory_path() / "sbfr_test" / "noconv_out";
    fs::remove_all(out_dir);
    std::string text = kMinimalSolve;
    text.replace(text.find("%OUT%"), 5, out_dir.string());
    text.replace(text.find("k_max = 8"), 9, "k_max = 1");
    text.replace(text.find("stop_tol = 0.001"), 16, "stop_tol = 1e-12");
    const std::string path = write_temp("noconv.cfg", text);
    CHECK(execute_file(path) == 1);
    CHECK(fs::exists(out_dir / "run_g_hat.pot"));  // flagged but usable
}

TEST_CASE("fdd CLI: indicator functional on the bridge") {
    const fs::path out_dir = fs::temp_directory_path() / "sbfr_test" / "fdd_ind";
    fs::remove_all(out_dir);
    const std::string cfg = write_temp("fdd_ind.cfg",
                                       "command = fdd\nmaster_seed = 9\n[model]\nkind = brownian\ndim = 1\n"
                                       "[fdd]\nreplications = 500\ncloud_size = 500\nfunctional = indicator_box\n"
                                       "functional_time = 0.5\nfunctional_box = -0.33724 0.33724\n"  // +-0.5 sd of the bridge
                                       "nu0 = atom 0\nnuT = atom 0\n[output]\ndirectory = " + out_dir.string() +
                                           "\ncsv = fdd.csv\nlog = fdd.jsonl\n");
    CHECK(execute_file(cfg) == 0);
    std::ifstream in(out_dir / "fdd.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "R,N,epsilon,t_star,functional,value,std_error,c0T,nonzero_fraction");
    // P(|X_0.5| <= 0.33724) for the bridge (sd 0.5) ~ 0.5; crude MC at R=500.
    const std::size_t pos = row.find(",indicator_box,");
    const double value = std::stod(row.substr(pos + 15));
    CHECK(value > 0.3);
    CHECK(value < 0.7);
}
