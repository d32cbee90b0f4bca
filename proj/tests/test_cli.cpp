#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flockfp/cli.hpp"
#include "flockfp/csv.hpp"

using namespace flockfp;

namespace {

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("flockfp");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

const std::string kTmp = "/tmp/flockfp_cli_test_";

}  // namespace

TEST_CASE("help and argument errors") {
    CHECK(cli({"--help"}) == exit_ok);
    CHECK(cli({}) == exit_config_error);           // a subcommand is required
    CHECK(cli({"frobnicate"}) == exit_config_error);
    CHECK(cli({"phase", "--set", "nodelimiter"}) == exit_config_error);
    CHECK(cli({"phase", "--config", "/nonexistent/path.cfg"}) == exit_config_error);
}

TEST_CASE("unknown configuration keys are rejected") {
    CHECK(cli({"phase", "--set", "phase.D_values=0.3", "--set", "bogus.key=1",
               "--out", kTmp + "unused.csv"}) == exit_config_error);
}

TEST_CASE("phase rejects a direct noise setting") {
    CHECK(cli({"phase", "--set", "model.D=0.5", "--out", kTmp + "unused.csv"}) ==
          exit_config_error);
}

TEST_CASE("phase sweep writes a parseable table") {
    const std::string out = kTmp + "phase.csv";
    CHECK(cli({"phase", "--set", "phase.D_values=0.3,0.5,0.7", "--out", out}) == exit_ok);
    const CsvTable tab = read_csv(out);
    REQUIRE(tab.rows.size() == 3);
    CHECK(tab.column("D") == 0);
    CHECK(tab.column("r_D") >= 0);
    CHECK(tab.column("mu1") >= 0);
    // 0.3 and 0.5 are polarized, 0.7 is not
    CHECK(!std::isnan(tab.rows[0][tab.column("r_D")]));
    CHECK(!std::isnan(tab.rows[1][tab.column("r_D")]));
    CHECK(std::isnan(tab.rows[2][tab.column("r_D")]));
    bool has_hash = false, has_dstar = false;
    for (const auto& c : tab.comments) {
        if (c.find("config_hash") != std::string::npos) has_hash = true;
        if (c.find("D_star") != std::string::npos) has_dstar = true;
    }
    CHECK(has_hash);
    CHECK(has_dstar);
    std::remove(out.c_str());
}

TEST_CASE("relative sweeps resolve against the critical noise") {
    const std::string out = kTmp + "phase_rel.csv";
    CHECK(cli({"phase", "--set", "phase.D_values=0.8", "--set", "phase.relative=true",
               "--out", out}) == exit_ok);
    const CsvTable tab = read_csv(out);
    REQUIRE(tab.rows.size() == 1);
    CHECK(tab.rows[0][0] == doctest::Approx(0.8 * 0.627553934810).epsilon(1e-9));
    std::remove(out.c_str());
}

TEST_CASE("simulate runs, stamps its configuration, and reruns byte-identically") {
    const std::string cfgp = kTmp + "sim.cfg";
    write_file(cfgp,
               "model.d = 1\n"
               "model.D = 0.5\n"
               "solver.n = 120\n"
               "solver.t_end = 0.1\n"
               "solver.output_stride = 10\n"
               "initial.kind = gibbs_tilt\n"
               "initial.u0 = 0\n");
    const std::string out1 = kTmp + "sim1.csv";
    const std::string out2 = kTmp + "sim2.csv";
    CHECK(cli({"simulate", "--config", cfgp, "--out", out1}) == exit_ok);
    CHECK(cli({"simulate", "--config", cfgp, "--out", out2}) == exit_ok);
    const std::string bytes = slurp(out1);
    CHECK(bytes == slurp(out2));
    CHECK(!bytes.empty());

    const CsvTable tab = read_csv(out1);
    CHECK(tab.column("t") == 0);
    CHECK(tab.column("F") == 1);
    CHECK(tab.column("res_eq6") >= 0);
    CHECK(tab.column("res_eq7") >= 0);
    CHECK(tab.column("res_eq8") >= 0);
    CHECK(tab.column("res_debruijn") >= 0);
    REQUIRE(tab.rows.size() >= 3);
    const auto m0 = tab.column_values("M0");
    for (const double m : m0) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
    const auto F = tab.column_values("F");
    for (std::size_t i = 1; i < F.size(); ++i) CHECK(F[i] <= F[i - 1] + 1e-10);

    // the stamped configuration echoes resolved values and is reparseable
    bool saw_cfg_dt = false;
    for (const auto& c : tab.comments)
        if (c.find("cfg solver.dt = ") != std::string::npos) saw_cfg_dt = true;
    CHECK(saw_cfg_dt);
    std::remove(out1.c_str());
    std::remove(out2.c_str());
    std::remove(cfgp.c_str());
}

TEST_CASE("command-line overrides win over the file") {
    const std::string cfgp = kTmp + "ovr.cfg";
    write_file(cfgp,
               "model.D = 0.5\n"
               "solver.n = 120\n"
               "solver.t_end = 0.05\n");
    const std::string out = kTmp + "ovr.csv";
    CHECK(cli({"simulate", "--config", cfgp, "--set", "solver.n=140", "--out", out}) ==
          exit_ok);
    bool saw = false;
    for (const auto& c : read_csv(out).comments)
        if (c.find("cfg solver.n = 140") != std::string::npos) saw = true;
    CHECK(saw);
    std::remove(out.c_str());
    std::remove(cfgp.c_str());
}

TEST_CASE("configuration errors and numerical failures use distinct exit codes") {
    // malformed value
    CHECK(cli({"simulate", "--set", "model.D=banana", "--out", kTmp + "x.csv"}) ==
          exit_config_error);
    // dimension out of range
    CHECK(cli({"simulate", "--set", "model.d=3", "--out", kTmp + "x.csv"}) ==
          exit_config_error);
    // a time step far beyond the advective accuracy guard
    CHECK(cli({"simulate", "--set", "model.D=0.5", "--set", "solver.dt=50",
               "--set", "solver.t_end=100", "--out", kTmp + "x.csv"}) ==
          exit_numerical_error);
}

TEST_CASE("linearize emits constants and zero-violation checks") {
    const std::string out = kTmp + "lin.csv";
    CHECK(cli({"linearize", "--set", "model.D=0.502043147848",
               "--set", "linearize.samples=5", "--set", "linearize.n=128",
               "--out", out}) == exit_ok);
    const std::string text = slurp(out);
    CHECK(text.find("constant,C_D,") != std::string::npos);
    CHECK(text.find("constant,K_D,") != std::string::npos);
    CHECK(text.find("check,q2_coercivity_aligned,") != std::string::npos);
    CHECK(text.find("check,generator_symmetry,") != std::string::npos);

    // every check row reports zero violations
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("check,", 0) != 0) continue;
        // kind,name,value,checked,violations,max_violation
        std::size_t pos = 0;
        std::vector<std::string> cells;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        REQUIRE(cells.size() == 6);
        CHECK(cells[4] == "0");
    }
    std::remove(out.c_str());
}

TEST_CASE("linearize refuses the symmetric regime") {
    CHECK(cli({"linearize", "--set", "model.D=0.9", "--out", kTmp + "x.csv"}) ==
          exit_numerical_error);
}

TEST_CASE("rates recovers the model from the stamped trajectory") {
    const std::string sim = kTmp + "traj.csv";
    CHECK(cli({"simulate", "--set", "model.D=0.502043147848", "--set", "solver.n=200",
               "--set", "solver.t_end=8", "--set", "solver.output_stride=20",
               "--set", "initial.kind=gibbs_tilt", "--set", "initial.u0=0",
               "--out", sim}) == exit_ok);
    const std::string out = kTmp + "rates.csv";
    CHECK(cli({"rates", "--set", "rates.input=" + sim, "--out", out}) == exit_ok);
    const std::string text = slurp(out);
    CHECK(text.find("series,fit,rate") != std::string::npos);
    CHECK(text.find("regime = ") != std::string::npos);
    CHECK(text.find("two_beta_sq") != std::string::npos);
    std::remove(sim.c_str());
    std::remove(out.c_str());

    CHECK(cli({"rates", "--out", kTmp + "x.csv"}) == exit_config_error);  // input required
    CHECK(cli({"rates", "--set", "rates.input=/nonexistent.csv", "--out", kTmp + "x.csv"}) ==
          exit_config_error);
}
