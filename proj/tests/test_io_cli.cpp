#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "h2ent/commands.hpp"

using namespace h2ent;

namespace {

struct TempDir {
    std::filesystem::path p;
    explicit TempDir(const std::string& tag)
        : p(std::filesystem::temp_directory_path() /
            ("h2ent_test_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(p, ec);
    }
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

nlohmann::json load_manifest(const std::filesystem::path& dir) {
    nlohmann::json j;
    std::ifstream f(dir / "manifest.json");
    REQUIRE(f.good());
    f >> j;
    return j;
}

int count_lines(const std::string& s) {
    int c = 0;
    for (char ch : s) c += (ch == '\n');
    return c;
}

// Small, fast, fully converging exact setup shared by the command tests.
RunConfig tiny_exact(const std::filesystem::path& out) {
    RunConfig cfg;
    cfg.method = "exact";
    cfg.grid_n = 64;
    cfg.grid_extent = 8.0;
    cfg.dtau = 0.02;
    cfg.tol = 1e-6;
    cfg.out = out.string();
    return cfg;
}

std::string cli_path() {
    if (const char* p = std::getenv("H2ENT_CLI_PATH")) return p;
#ifdef H2ENT_CLI_PATH
    return H2ENT_CLI_PATH;
#else
    return {};
#endif
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    return WEXITSTATUS(st);
}

} // namespace

TEST_CASE("sha256 known answers", "[io]") {
    CHECK(sha256_string("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_string("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_string("The quick brown fox jumps over the lazy dog") ==
          "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
    // exercises more than one 64-byte block
    CHECK(sha256_string(std::string(1000, 'a')) ==
          "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");

    TempDir td("sha");
    std::ofstream(td.p / "f.bin", std::ios::binary) << "abc";
    CHECK(sha256_file(td.p / "f.bin") == sha256_string("abc"));
    CHECK_THROWS(sha256_file(td.p / "missing.bin"));
}

TEST_CASE("full-precision formatting round-trips", "[io]") {
    for (double v : {1.0 / 3.0, M_PI, -1.2579434290, 1e-300, 6.02214076e23, -0.0, 42.0}) {
        const std::string s = format_full(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_full(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_full(0.5) == "0.5");
    CHECK(format_full(2.0) == "2");
}

TEST_CASE("csv writers emit exact golden strings", "[io]") {
    TempDir td("csv");

    ConfigWalkerSet ws;
    ws.x1 = {0.5, -1.25};
    ws.x2 = {1.0, 2.5};
    write_walker_csv(td.p / "w.csv", ws);
    CHECK(slurp(td.p / "w.csv") == "k,x1,x2\n0,0.5,1\n1,-1.25,2.5\n");

    EntropyProfile prof;
    prof.s = {-0.5, 0.5};
    prof.value = {0.25, 0.125};
    prof.value_norm = {1.0, 0.5};
    prof.counts = {100, 50};
    prof.side = 1.0;
    write_profile_csv(td.p / "p.csv", prof);
    CHECK(slurp(td.p / "p.csv") ==
          "s,S_local,S_local_normalized,M_m,region_side\n"
          "-0.5,0.25,1,100,1\n"
          "0.5,0.125,0.5,50,1\n");

    CurvePoint pt;
    pt.d = 2.0;
    pt.energy_exact = -1.5;
    write_curve_csv(td.p / "c.csv", {pt});
    CHECK(slurp(td.p / "c.csv") ==
          "d,energy_exact,energy_tdqmc,S_global_exact,S_global_tdqmc,S_local_peak\n"
          "2,-1.5,nan,nan,nan,nan\n");
}

TEST_CASE("wavefunction snapshots round-trip and reject corruption", "[io]") {
    TempDir td("snap");
    const Grid1D g{16, -4.0, 4.0};
    Wavefunction2D psi(g);
    for (std::size_t i = 0; i < psi.amp.size(); ++i)
        psi.amp[i] = std::complex<double>(0.01 * static_cast<double>(i), 0.0);
    const NuclearConfig nuc{1.75};
    SofteningParams p;
    p.a_ee = 0.625;

    const auto path = td.p / "psi.bin";
    write_snapshot(path, psi, nuc, p);
    const auto s = read_snapshot(path);
    CHECK(s.psi.grid == g);
    CHECK(s.nuc.d == 1.75);
    CHECK(s.p.a_ee == 0.625);
    CHECK(s.p.a_en == p.a_en);
    CHECK(s.psi.amp == psi.amp);

    SECTION("non power-of-two grid size in the header") {
        auto bytes = slurp(path);
        const std::int64_t bad = 17;
        std::memcpy(bytes.data(), &bad, sizeof(bad));
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_snapshot(path), std::runtime_error);
    }
    SECTION("inverted box bounds in the header") {
        auto bytes = slurp(path);
        const double lo = 4.0, hi = -4.0;
        std::memcpy(bytes.data() + 8, &lo, sizeof(lo));
        std::memcpy(bytes.data() + 16, &hi, sizeof(hi));
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_snapshot(path), std::runtime_error);
    }
    SECTION("truncated amplitude block") {
        auto bytes = slurp(path);
        bytes.resize(bytes.size() - 16);
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_snapshot(path), std::runtime_error);
    }
}

TEST_CASE("relaxation-state files round-trip and reject corruption", "[io]") {
    TempDir td("ckpt");
    const Grid1D g{32, -6.0, 6.0};
    TdqmcCheckpoint c{GuideWaveSet(g, 3), TdqmcWalkerSet{}, NuclearConfig{2.5},
                      SofteningParams{}, {0.7, 0.8}, 123, 99};
    for (std::size_t i = 0; i < c.waves.data.size(); ++i)
        c.waves.data[i] = 0.001 * static_cast<double>(i);
    c.walkers.x[0] = {-1.0, 0.0, 1.0};
    c.walkers.x[1] = {0.5, -0.5, 2.0};

    const auto path = td.p / "state.bin";
    write_checkpoint(path, c);
    const auto r = read_checkpoint(path);
    CHECK(r.waves.grid == g);
    CHECK(r.waves.walkers == 3);
    CHECK(r.waves.data == c.waves.data);
    CHECK(r.walkers.x[0] == c.walkers.x[0]);
    CHECK(r.walkers.x[1] == c.walkers.x[1]);
    CHECK(r.nuc.d == 2.5);
    CHECK(r.sigma[0] == 0.7);
    CHECK(r.sigma[1] == 0.8);
    CHECK(r.iteration == 123);
    CHECK(r.seed == 99);

    SECTION("zero walker count in the header") {
        auto bytes = slurp(path);
        const std::int64_t bad = 0;
        std::memcpy(bytes.data(), &bad, sizeof(bad));
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_checkpoint(path), std::runtime_error);
    }
    SECTION("truncated walker block") {
        auto bytes = slurp(path);
        bytes.resize(bytes.size() - 8);
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_checkpoint(path), std::runtime_error);
    }
}

TEST_CASE("ground-state command writes a verifiable run directory", "[cli]") {
    TempDir td("gs");
    auto cfg = tiny_exact(td.p / "run");
    cfg.d = 1.5;
    cfg.save_state = true;
    REQUIRE(cmd_ground_state(cfg) == kOk);

    const auto j = load_manifest(cfg.out);
    CHECK(j["command"] == "ground-state");
    CHECK(j["config"]["d"] == 1.5);
    CHECK(j["config"]["grid_n"] == 64);
    CHECK(j["convergence"]["exact_converged"] == true);
    CHECK(j["results"]["energy_exact"].get<double>() < -1.0);
    REQUIRE(j["outputs"].contains("result.csv"));
    REQUIRE(j["outputs"].contains("psi_exact.bin"));

    // checksums in the manifest match the files on disk
    CHECK_NOTHROW(verify_run_directory(cfg.out));
    CHECK(j["outputs"]["result.csv"] ==
          sha256_file(std::filesystem::path(cfg.out) / "result.csv"));

    const auto csv = slurp(std::filesystem::path(cfg.out) / "result.csv");
    CHECK(count_lines(csv) == 2);
    CHECK(csv.rfind("d,energy_exact,", 0) == 0);

    // the snapshot reloads to the state the run reported: the reported energy
    // comes from the last convergence check, one step before the saved state,
    // so they agree to the run tolerance
    const auto snap = read_snapshot(std::filesystem::path(cfg.out) / "psi_exact.bin");
    const double e = energy_exact(snap.psi, snap.nuc, snap.p);
    CHECK(e == Catch::Approx(j["results"]["energy_exact"].get<double>())
                  .epsilon(0)
                  .margin(2.0 * cfg.tol));
}

TEST_CASE("scan command produces one row per distance", "[cli]") {
    TempDir td("scan");
    auto cfg = tiny_exact(td.p / "run");
    cfg.d_min = 1.0;
    cfg.d_max = 2.0;
    cfg.d_step = 0.5;
    cfg.walkers = 2000; // sampler size for the local-entropy column
    cfg.regions = 8;
    REQUIRE(cmd_scan(cfg) == kOk);

    CHECK_NOTHROW(verify_run_directory(cfg.out));
    const auto j = load_manifest(cfg.out);
    CHECK(j["command"] == "scan");
    CHECK(j["convergence"]["all_converged"] == true);

    const auto csv = slurp(std::filesystem::path(cfg.out) / "curve.csv");
    REQUIRE(count_lines(csv) == 4);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "d,energy_exact,energy_tdqmc,S_global_exact,S_global_tdqmc,S_local_peak");
    double prev_s = -1.0;
    for (double expected_d : {1.0, 1.5, 2.0}) {
        REQUIRE(std::getline(is, line).good());
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        CHECK(std::stod(field) == expected_d);
        std::getline(row, field, ',');
        CHECK(std::stod(field) < -1.0); // exact energy present and sane
        std::getline(row, field, ',');
        CHECK(field == "nan"); // no TDQMC column in an exact-only scan
        std::getline(row, field, ',');
        const double s = std::stod(field);
        CHECK(s > prev_s); // entanglement grows with separation
        prev_s = s;
    }
}

TEST_CASE("local-entropy command covers both methods", "[cli][slow]") {
    TempDir td("le");

    SECTION("exact profile") {
        auto cfg = tiny_exact(td.p / "run");
        cfg.d = 2.0;
        cfg.walkers = 20000;
        cfg.regions = 10;
        REQUIRE(cmd_local_entropy(cfg) == kOk);
        CHECK_NOTHROW(verify_run_directory(cfg.out));
        const auto j = load_manifest(cfg.out);
        CHECK(j["outputs"].contains("profile.csv"));
        CHECK(j["outputs"].contains("walkers.csv"));
        CHECK(j["results"]["S_local_peak"].get<double>() > 0.0);
        const auto csv = slurp(std::filesystem::path(cfg.out) / "profile.csv");
        CHECK(csv.rfind("s,S_local,", 0) == 0);
        CHECK(count_lines(csv) >= 4);
    }
    SECTION("walker-ensemble profile") {
        auto cfg = tiny_exact(td.p / "runt");
        cfg.method = "tdqmc";
        cfg.dtau = 0.0; // method default
        cfg.tol = 0.0;
        cfg.walkers = 300;
        cfg.regions = 6;
        cfg.save_state = true;
        const int rc = cmd_local_entropy(cfg);
        REQUIRE(rc == kOk);
        CHECK_NOTHROW(verify_run_directory(cfg.out));
        const auto j = load_manifest(cfg.out);
        CHECK(j["outputs"].contains("profile.csv"));
        CHECK(j["outputs"].contains("walkers.csv"));
        CHECK(j["outputs"].contains("tdqmc_state.bin"));
        CHECK(j["convergence"]["tdqmc_converged"] == true);

        const auto cp = read_checkpoint(std::filesystem::path(cfg.out) / "tdqmc_state.bin");
        CHECK(cp.waves.walkers == 300);
        CHECK(cp.seed == cfg.seed);
        CHECK(cp.nuc.d == cfg.d);
    }
}

TEST_CASE("compare command gates on thresholds and prior state", "[cli][slow]") {
    TempDir td("cmp");

    // a verified prior exact run to reuse
    auto prior = tiny_exact(td.p / "prior");
    prior.d = 1.5;
    prior.save_state = true;
    REQUIRE(cmd_ground_state(prior) == kOk);

    auto cfg = tiny_exact(td.p / "cmp1");
    cfg.method = "both";
    cfg.dtau = 0.0;
    cfg.tol = 0.0;
    cfg.walkers = 300;
    cfg.use = prior.out;
    cfg.tol_energy = 0.5;
    cfg.tol_entropy = 0.5;
    cfg.tol_rdm = 1.0;
    REQUIRE(cmd_compare(cfg) == kOk);
    const auto j = load_manifest(cfg.out);
    CHECK(j["results"]["loaded_from"] == prior.out);
    CHECK(j["results"]["d"] == 1.5); // taken from the snapshot, not the flag
    const auto csv = slurp(std::filesystem::path(cfg.out) / "compare.csv");
    CHECK(csv.rfind("d,delta_energy,delta_entropy,rdm_distance\n1.5,", 0) == 0);

    SECTION("unreachable energy tolerance exits with the threshold code") {
        auto tight = cfg;
        tight.out = (td.p / "cmp2").string();
        tight.tol_energy = 1e-12;
        CHECK(cmd_compare(tight) == kThresholdExceeded);
    }
    SECTION("prior run without a snapshot is rejected") {
        auto nosnap = tiny_exact(td.p / "prior2");
        nosnap.d = 1.5;
        REQUIRE(cmd_ground_state(nosnap) == kOk); // no --save-state
        auto c2 = cfg;
        c2.out = (td.p / "cmp3").string();
        c2.use = nosnap.out;
        CHECK_THROWS_AS(cmd_compare(c2), std::invalid_argument);
    }
    SECTION("tampered prior state fails checksum verification") {
        std::ofstream(std::filesystem::path(prior.out) / "psi_exact.bin",
                      std::ios::binary | std::ios::app)
            << 'x';
        CHECK_THROWS_AS(verify_run_directory(prior.out), std::invalid_argument);
        auto c3 = cfg;
        c3.out = (td.p / "cmp4").string();
        CHECK_THROWS_AS(cmd_compare(c3), std::invalid_argument);
    }
}

TEST_CASE("command line front end", "[cli][slow]") {
    if (cli_path().empty()) {
        SUCCEED("no front-end binary configured for this build");
        return;
    }
    TempDir td("fe");

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("ground-state --help") == 0);
    CHECK(run_cli("") == kConfigError);                    // a subcommand is required
    CHECK(run_cli("ground-state --bogus-flag 1") == kConfigError);
    CHECK(run_cli("ground-state --grid-n 48 --out " + (td.p / "bad").string()) ==
          kConfigError); // grid must be a power of two
    CHECK(run_cli("scan --d-min 3 --d-max 1 --out " + (td.p / "bad2").string()) ==
          kConfigError);

    const std::string common =
        " --d 1.5 --method both --walkers 250 --grid-n 64 --grid-extent 8 --seed 7 --out ";
    const auto run_a = (td.p / "a").string();
    const auto run_b = (td.p / "b").string();
    REQUIRE(run_cli("ground-state" + common + run_a) == 0);
    REQUIRE(run_cli("ground-state" + common + run_b) == 0);
    CHECK(sha256_file(std::filesystem::path(run_a) / "result.csv") ==
          sha256_file(std::filesystem::path(run_b) / "result.csv"));

    SECTION("config file supplies defaults, flags win") {
        const auto ini = td.p / "run.ini";
        std::ofstream(ini) << "d=1.25\nmethod=exact\ngrid-n=64\ngrid-extent=8\n"
                              "dtau=0.02\ntol=1e-6\n";
        const auto out = (td.p / "cfgrun").string();
        REQUIRE(run_cli("ground-state --config " + ini.string() + " --d 2.0 --out " + out) ==
                0);
        const auto j = load_manifest(out);
        CHECK(j["config"]["d"] == 2.0);       // flag beats file
        CHECK(j["config"]["grid_n"] == 64);   // file beats built-in default
        CHECK(j["config"]["method"] == "exact");
    }
}
