#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "flockfp/config.hpp"
#include "flockfp/csv.hpp"
#include "flockfp/errors.hpp"
#include "flockfp/grid.hpp"
#include "flockfp/parallel.hpp"
#include "flockfp/scaled.hpp"

using namespace flockfp;

TEST_CASE("grid geometry") {
    const Grid g = make_grid(1, 8, 2.0);
    CHECK(g.h == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.center(0) == doctest::Approx(-1.75).epsilon(1e-15));
    CHECK(g.center(7) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(g.cells() == 8);
    CHECK(g.cell_volume() == doctest::Approx(0.5));

    const Grid g2 = make_grid(2, 4, 1.0);
    CHECK(g2.cells() == 16);
    CHECK(g2.cell_volume() == doctest::Approx(0.25));
    double v[2];
    g2.coords(1, v);  // x fastest
    CHECK(v[0] == doctest::Approx(-0.25));
    CHECK(v[1] == doctest::Approx(-0.75));
    g2.coords(4, v);
    CHECK(v[0] == doctest::Approx(-0.75));
    CHECK(v[1] == doctest::Approx(-0.25));

    CHECK_THROWS_AS(make_grid(3, 8, 1.0), DimensionUnsupported);
    CHECK_THROWS_AS(make_grid(1, 2, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 8, -1.0), ConfigError);
}

TEST_CASE("grid densities normalize and take moments") {
    const Grid g = make_grid(1, 200, 3.0);
    GridDensity f{g, std::vector<double>(g.cells(), 0.0)};
    std::mt19937_64 rng(7);
    for (auto& x : f.values) x = 0.1 + std::uniform_real_distribution<>(0.0, 1.0)(rng);
    normalize(f);
    CHECK(std::abs(f.mass() - 1.0) < 1e-14);
    CHECK(moment(f, 0) == doctest::Approx(1.0).epsilon(1e-14));

    // an even density has zero mean velocity and zero cubic first moment
    const Grid wide = make_grid(1, 240, 4.5);
    GridDensity even{wide, std::vector<double>(wide.cells(), 0.0)};
    for (int i = 0; i < wide.cells(); ++i) {
        const double v = wide.center(i);
        even.values[i] = std::exp(-v * v);
    }
    normalize(even);
    CHECK(std::abs(mean_velocity(even)[0]) < 1e-15);
    CHECK(std::abs(weighted_first_moment(even, 2)[0]) < 1e-15);
    // Gaussian moment ratio: M2 = 1/2 for exp(-v^2); with the tail truncated
    // at 4.5 the midpoint sum is accurate far beyond this tolerance
    CHECK(moment(even, 2) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("discrete Gibbs densities have unit mass and the quadrature mean") {
    const ModelParams p{1, 4.0, 0.45};
    const Grid g = make_grid(1, 400, default_half_width(p, 1.0));
    const GibbsState gs = make_gibbs(p, {0.6});
    const GridDensity f = discrete_gibbs(g, gs);
    CHECK(std::abs(f.mass() - 1.0) < 1e-13);
    // Riemann sums of the smooth truncated weight converge superalgebraically,
    // so the discrete mean must match the adaptive-quadrature mean tightly
    const double mv = mean_velocity(f)[0];
    const double mq = mean_velocity_of_gibbs(p, {0.6})[0];
    CHECK(mv == doctest::Approx(mq).epsilon(1e-10));
}

TEST_CASE("config parsing is strict") {
    const ConfigMap cfg = parse_config_text(
        "# comment\n"
        "model.alpha = 4.0\n"
        "model.D=0.5\n"
        "\n"
        "phase.D_values = 0.1, 0.2, 0.3\n"
        "solver.coupling = explicit\n"
        "flag = true\n");
    CHECK(cfg.get_double("model.alpha", 0.0) == doctest::Approx(4.0));
    CHECK(cfg.get_double("model.D", 0.0) == doctest::Approx(0.5));
    CHECK(cfg.get_string("solver.coupling", "") == "explicit");
    CHECK(cfg.get_bool("flag", false) == true);
    const auto vals = cfg.get_vector("phase.D_values", {});
    REQUIRE(vals.size() == 3);
    CHECK(vals[1] == doctest::Approx(0.2));
    CHECK(cfg.get_int("missing.key", 7) == 7);
    CHECK_NOTHROW(cfg.check_all_consumed());

    CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("a = \n"), ConfigError);

    const ConfigMap bad = parse_config_text("x = notanumber\n");
    CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);

    const ConfigMap stray = parse_config_text("model.alpha = 4\nbogus.key = 1\n");
    stray.get_double("model.alpha", 0.0);
    CHECK_THROWS_AS(stray.check_all_consumed(), ConfigError);
}

TEST_CASE("config overrides, canonical form and hash") {
    ConfigMap cfg = parse_config_text("b.key = 1\na.key = 2\n");
    apply_override(cfg, "c.key=3");
    apply_override(cfg, "a.key=9");  // override wins
    CHECK(cfg.get_double("a.key", 0.0) == doctest::Approx(9.0));
    CHECK_THROWS_AS(apply_override(cfg, "nodelimiter"), ConfigError);

    // canonical form sorts keys, so insertion order cannot leak into the hash
    ConfigMap other;
    other.set("c.key", "3");
    other.set("a.key", "9");
    other.set("b.key", "1");
    CHECK(cfg.canonical() == other.canonical());
    CHECK(config_hash(cfg) == config_hash(other));
    other.set("a.key", "10");
    CHECK(config_hash(cfg) != config_hash(other));
}

TEST_CASE("csv doubles survive a round trip, NaN is the empty cell") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(std::nan("")).empty());
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        const double x = std::ldexp(double(rng()) / double(~0ULL) - 0.5,
                                    int(rng() % 600) - 300);
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("csv files read back with comments, header and empty cells") {
    const std::string path = "/tmp/flockfp_test_table.csv";
    {
        std::ofstream os(path);
        CsvWriter w(os);
        w.comment("a note");
        w.header({"t", "x", "y"});
        w.row({0.0, 1.5, std::nan("")});
        w.row({1.0, -2.25, 4.0});
    }
    const CsvTable tab = read_csv(path);
    REQUIRE(tab.header.size() == 3);
    REQUIRE(tab.rows.size() == 2);
    CHECK(tab.comments.size() == 1);
    CHECK(tab.column("y") == 2);
    CHECK(tab.column("missing") == -1);
    CHECK(std::isnan(tab.rows[0][2]));
    CHECK(tab.column_values("x")[1] == doctest::Approx(-2.25));
    std::remove(path.c_str());
}

TEST_CASE("parallel_for covers the range once and respects the thread cap") {
    std::atomic<long> sum{0};
    parallel_for(1000, [&](int i) { sum += i; });
    CHECK(sum.load() == 999 * 1000 / 2);

    setenv("FLOCKFP_THREADS", "1", 1);
    CHECK(max_threads() == 1);
    setenv("FLOCKFP_THREADS", "3", 1);
    CHECK(max_threads() == 3);
    unsetenv("FLOCKFP_THREADS");

    CHECK_THROWS_AS(parallel_for(8, [](int i) {
        if (i == 5) throw NumericalError("boom");
    }), NumericalError);
}

TEST_CASE("scaled reals keep exponents split") {
    const ScaledReal a = scaled_from_log(-2.0, 500.0);
    const ScaledReal b = scaled_from_log(4.0, 499.0);
    CHECK(scaled_ratio(a, b) == doctest::Approx(-0.5 * std::exp(1.0)).epsilon(1e-14));
    const ScaledReal n = a.normalized();
    CHECK(n.m == -1.0);
    CHECK(log_abs(n) == doctest::Approx(log_abs(a)).epsilon(1e-14));
    const ScaledReal prod = a * b;
    CHECK(prod.m == doctest::Approx(-8.0));
    CHECK(prod.e == doctest::Approx(999.0));
    CHECK(ScaledReal{0.0, 3.0}.is_zero());
}
