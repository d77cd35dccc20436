#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <random>

#include "nutaxis/config.hpp"
#include "nutaxis/csv.hpp"
#include "nutaxis/snapshot.hpp"
#include "test_helpers.hpp"

using namespace nutaxis;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"(
[grid]
dim = 1
cells = 64
lengths = 2.0

[model]
m = 2.0
chi = 1.0

[time]
t_end = 1.0

[init_u]
profile = constant
value = 0.5

[init_v]
profile = cosine
base = 0.3
amplitude = 0.1
)";

fs::path temp_dir() {
    static int counter = 0;
    const fs::path p = fs::temp_directory_path() / ("nutaxis_io_test_" + std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("minimal config parses with documented defaults", "[config]") {
    const RunConfig cfg = parse_config(kMinimalConfig);
    CHECK(cfg.grid.dim == 1);
    CHECK(cfg.grid.cells == std::vector<index_t>{64});
    CHECK(cfg.model.xi == 0.0);
    CHECK(cfg.model.eps_reg == 0.0);
    CHECK(cfg.control.cfl_safety == Approx(0.9));
    CHECK(cfg.control.dt_max == Approx(0.1));
    CHECK(cfg.control.output_cadence == Approx(1.0 / 200.0));
    CHECK(cfg.output.dir == "out");
    CHECK(cfg.output.tail_fraction == Approx(0.25));

    const SimState s = build_state(cfg);
    CHECK(s.u[0] == 0.5);
    CHECK(integrate(s.v) == Approx(0.3 * 2.0).margin(1e-12));
}

TEST_CASE("config rejects m <= 1 with a field-addressed message", "[config]") {
    std::string text = kMinimalConfig;
    const auto pos = text.find("m = 2.0");
    text.replace(pos, 7, "m = 0.9");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.m must be > 1") != std::string::npos);
    }
}

TEST_CASE("config rejects negative amplitudes and unknown keys", "[config]") {
    std::string bad = kMinimalConfig;
    bad.replace(bad.find("amplitude = 0.1"), 15, "amplitude = -.2");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    const std::string unknown = std::string(kMinimalConfig) + "\nwhatever = 1\n";
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);

    std::string unknown_key = kMinimalConfig;
    unknown_key.replace(unknown_key.find("chi = 1.0"), 9, "chy = 1.0");
    CHECK_THROWS_AS(parse_config(unknown_key), ConfigError);

    std::string missing = kMinimalConfig;
    missing.replace(missing.find("t_end = 1.0"), 11, "dt_max = .1");
    CHECK_THROWS_AS(parse_config(missing), ConfigError);
}

TEST_CASE("config errors carry line numbers", "[config]") {
    try {
        parse_config("[grid]\ndim = 1\ncells = 64\nlengths = 2\nbogus_key = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
        CHECK(e.line == 5);
    }
}

TEST_CASE("fuzzed config text never crashes", "[config]") {
    std::mt19937 rng(1337);
    std::uniform_int_distribution<int> len(0, 400);
    const std::string alphabet = "[]=#.,ab cz019\n\t-";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int rep = 0; rep < 500; ++rep) {
        std::string text;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) text += alphabet[pick(rng)];
        try {
            (void)parse_config(text);
        } catch (const ConfigError&) {
            // structured failure is the expected outcome
        }
    }
    SUCCEED("no crash and no unexpected exception type");
}

TEST_CASE("sweep overrides address scalar keys", "[config]") {
    RunConfig cfg = parse_config(kMinimalConfig);
    apply_override(cfg, "model.rho", 1.5);
    CHECK(cfg.model.rho == 1.5);
    apply_override(cfg, "init_v.amplitude", 0.05);
    CHECK(std::get<IcCosine>(cfg.init_v).amplitude == 0.05);
    CHECK_THROWS_AS(apply_override(cfg, "grid.dim", 2.0), UsageError);
    CHECK_THROWS_AS(apply_override(cfg, "model.m", 0.5), Error); // re-validated
}

TEST_CASE("snapshot round trip is bit exact", "[io]") {
    std::mt19937 rng(2);
    const Grid g = make_grid(2, {12, 7}, {1.5, 0.8});
    SimState s;
    s.u = testutil::random_field(g, rng, 0.0, 3.0);
    s.v = testutil::random_field(g, rng, 0.0, 2.0);
    s.t = 17.25;

    const fs::path dir = temp_dir();
    const fs::path file = dir / "state.bin";
    write_snapshot(s, file);
    const SimState r = read_snapshot(file);

    CHECK(r.t == s.t);
    REQUIRE(r.u.grid == g);
    CHECK(std::memcmp(r.u.values.data(), s.u.values.data(), sizeof(double) * s.u.values.size()) == 0);
    CHECK(std::memcmp(r.v.values.data(), s.v.values.data(), sizeof(double) * s.v.values.size()) == 0);
    fs::remove_all(dir);
}

TEST_CASE("snapshot read failures are typed", "[io]") {
    const fs::path dir = temp_dir();
    const Grid g = make_grid(1, {8}, {1.0});
    SimState s = testutil::constant_state(g, 1.0, 1.0);
    const fs::path file = dir / "state.bin";
    write_snapshot(s, file);

    // truncation
    {
        std::ifstream in(file, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        buf.resize(buf.size() / 2);
        std::ofstream out(dir / "short.bin", std::ios::binary);
        out << buf;
    }
    try {
        read_snapshot(dir / "short.bin");
        FAIL("expected SnapshotError");
    } catch (const SnapshotError& e) {
        CHECK(e.kind == SnapshotError::Kind::Truncated);
    }

    // wrong magic
    {
        std::ofstream out(dir / "magic.bin", std::ios::binary);
        out << "XXXX" << std::string(64, '\0');
    }
    try {
        read_snapshot(dir / "magic.bin");
        FAIL("expected SnapshotError");
    } catch (const SnapshotError& e) {
        CHECK(e.kind == SnapshotError::Kind::BadMagic);
    }

    // bad dimension byte
    {
        std::ifstream in(file, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        buf[4] = 7;
        std::ofstream out(dir / "dim.bin", std::ios::binary);
        out << buf;
    }
    try {
        read_snapshot(dir / "dim.bin");
        FAIL("expected SnapshotError");
    } catch (const SnapshotError& e) {
        CHECK(e.kind == SnapshotError::Kind::DimMismatch);
    }

    CHECK_THROWS_AS(read_snapshot(dir / "missing.bin"), SnapshotError);
    fs::remove_all(dir);
}

TEST_CASE("series csv round trips bit for bit", "[io]") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DiagnosticsRecord rec;
    for (int i = 0; i < 50; ++i) {
        rec.times.push_back(i * 0.1);
        rec.a.push_back(std::exp(dist(rng)));
        rec.b.push_back(std::exp(dist(rng)));
        rec.combined.push_back(rec.a.back() + rec.b.back());
        rec.u_linf.push_back(std::abs(dist(rng)));
        rec.v_linf.push_back(std::abs(dist(rng)));
        rec.grad_v_linf.push_back(std::abs(dist(rng)));
        rec.energy_E.push_back(dist(rng));
        rec.lyapunov_F.push_back(std::abs(dist(rng)));
        rec.res_u.push_back(i % 7 == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : std::abs(dist(rng)));
        rec.res_v.push_back(std::abs(dist(rng)) * 1e-12);
    }

    const fs::path dir = temp_dir();
    const fs::path file = dir / "series.csv";
    write_series_csv(file, rec);
    const DiagnosticsRecord r = read_series_csv(file);

    REQUIRE(r.size() == rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        CHECK(r.times[i] == rec.times[i]);
        CHECK(r.a[i] == rec.a[i]);
        CHECK(r.energy_E[i] == rec.energy_E[i]);
        CHECK(r.res_v[i] == rec.res_v[i]);
        if (std::isnan(rec.res_u[i]))
            CHECK(std::isnan(r.res_u[i]));
        else
            CHECK(r.res_u[i] == rec.res_u[i]);
    }
    fs::remove_all(dir);
}

TEST_CASE("series csv header is pinned", "[io]") {
    CHECK(std::string(kSeriesHeader) ==
          "t,a,b,a_plus_xi_b,u_linf,v_linf,grad_v_linf,energy_E,lyapunov_F,res_u,res_v");
    const fs::path dir = temp_dir();
    std::ofstream(dir / "bad.csv") << "t,a,b\n0,1,2\n";
    CHECK_THROWS_AS(read_series_csv(dir / "bad.csv"), Error);
    fs::remove_all(dir);
}

TEST_CASE("round-trip double formatting", "[io]") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = dist(rng) * std::pow(10.0, (i % 61) - 30);
        CHECK(parse_double(format_double(x)) == x);
    }
    CHECK(parse_double(format_double(0.1)) == 0.1);
    CHECK_THROWS_AS(parse_double("1.2.3"), Error);
    CHECK_THROWS_AS(parse_double(""), Error);
}

TEST_CASE("file-based initial conditions load from snapshots", "[config]") {
    const fs::path dir = temp_dir();
    const Grid g = make_grid(1, {64}, {2.0});
    SimState s;
    s.u = field_from(g, [](const std::array<double, 3>& x) { return 0.2 + 0.1 * x[0]; });
    s.v = Field(g, 0.9);
    write_snapshot(s, dir / "ic.bin");

    std::string text = kMinimalConfig;
    const auto pos = text.find("[init_u]");
    text.replace(pos, text.find("[init_v]") - pos,
                 "[init_u]\nprofile = file\npath = " + (dir / "ic.bin").string() + "\n\n");
    const RunConfig cfg = parse_config(text);
    const SimState loaded = build_state(cfg);
    CHECK(loaded.u[10] == s.u[10]);

    // grid mismatch is rejected
    std::string wrong = text;
    wrong.replace(wrong.find("cells = 64"), 10, "cells = 32");
    CHECK_THROWS_AS(build_state(parse_config(wrong)), ConfigError);
    fs::remove_all(dir);
}
