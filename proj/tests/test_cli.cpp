#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "collar/config.hpp"
#include "collar/errors.hpp"
#include "collar/run.hpp"

using namespace collar;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(COLLAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kTinyFlat =
    " --grid.n1 6 --grid.n2 6 --grid.n3 8 --evolve.t_end 0.02 --output.every 100 ";

} // namespace

TEST_CASE("config defaults, round trip, and errors") {
    RunConfig def;
    CHECK(def.evolve.cfl == 0.25);
    CHECK(def.evolve.elliptic.rel_tol == 1e-10);
    CHECK(def.energy_order == 0);
    CHECK(def.initial_kind == "flat");

    RunConfig cfg;
    apply_config_entry(cfg, "grid.n1", "32");
    apply_config_entry(cfg, "boundary_family.kind", "diag-exponential");
    apply_config_entry(cfg, "boundary_family.lambda", "0.125");
    std::string text = serialize_config(cfg);
    RunConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.grid.n1 == 32);
    CHECK(back.family_lambda == 0.125);

    CHECK_THROWS_WITH_AS(apply_config_entry(cfg, "grid.nx", "1"),
                         "unknown config key 'grid.nx'", config_error);
    CHECK_THROWS_AS(apply_config_entry(cfg, "evolve.cfl", "fast"), config_error);
    CHECK_THROWS_AS(parse_config_text("grid.n1\n"), config_error);
}

TEST_CASE("validation names the broken key") {
    RunConfig cfg;
    cfg.grid.n1 = 2;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = RunConfig{};
    cfg.initial_kind = "pickle";
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = RunConfig{};
    cfg.energy_order = 3;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("diagnostics header is pinned") {
    CHECK(diagnostics_header() ==
          "t,ham_l2,mom1_l2,mom2_l2,mom3_l2,trk_l2,trk_max,ricci_ij_l2,ricci_00_l2,"
          "gi_l2,einstein_l2,gtilde_l2,energy_k,energy_total,c_bd,bc_knn_max,"
          "bc_kna_max,bc_kcc_max");
}

TEST_CASE("flat run emits near-zero diagnostics and is byte-deterministic") {
    fs::path dir1 = fs::temp_directory_path() / "collar_cli_flat1";
    fs::path dir2 = fs::temp_directory_path() / "collar_cli_flat2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    REQUIRE(run_cli(std::string(kTinyFlat) + "--output.dir " + dir1.string() + " evolve") == 0);
    REQUIRE(run_cli(std::string(kTinyFlat) + "--output.dir " + dir2.string() + " evolve") == 0);
    std::string csv1 = slurp(dir1 / "diagnostics.csv");
    CHECK(csv1 == slurp(dir2 / "diagnostics.csv"));

    std::istringstream is(csv1);
    std::string line;
    std::getline(is, line);
    CHECK(line == diagnostics_header());
    while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string cell;
        int col = 0;
        while (std::getline(row, cell, ',')) {
            if (col > 0) CHECK(std::abs(std::stod(cell)) < 1e-10);
            ++col;
        }
        CHECK(col == 18);
    }
    CHECK(fs::exists(dir1 / "run_manifest.txt"));
    std::string manifest = slurp(dir1 / "run_manifest.txt");
    CHECK(manifest.find("mode=evolve") != std::string::npos);
    CHECK(manifest.find("grid.n1=6") != std::string::npos);
}

TEST_CASE("snapshot file carries the structured header") {
    fs::path dir = fs::temp_directory_path() / "collar_cli_snap";
    fs::remove_all(dir);
    REQUIRE(run_cli(std::string(kTinyFlat) + "--output.snapshots true --output.dir " +
                    dir.string() + " evolve") == 0);
    std::ifstream in(dir / "snapshot_final.bin", std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("FIELD name=g11 shape=6,6,8 t=", 0) == 0);
    // payload must hold 6*6*8 doubles before the next header
    std::vector<char> buf(6 * 6 * 8 * 8);
    CHECK(static_cast<bool>(in.read(buf.data(), buf.size())));
    std::getline(in, header);
    CHECK(header.rfind("FIELD name=g12 ", 0) == 0);
}

TEST_CASE("exit codes follow the failure class") {
    fs::path dir = fs::temp_directory_path() / "collar_cli_codes";
    fs::remove_all(dir);
    // unknown key in a config file
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "bad.cfg");
        out << "grid.nx=12\n";
    }
    CHECK(run_cli("--config " + (dir / "bad.cfg").string() + " evolve") == 2);
    // malformed numeric
    CHECK(run_cli("--evolve.cfl abc evolve") == 2);
    // invalid value range
    CHECK(run_cli(std::string(kTinyFlat) + "--grid.n3 2 --output.dir " + dir.string() +
                  " evolve") == 2);
    // incompatible boundary family on flat data
    CHECK(run_cli(std::string(kTinyFlat) +
                  "--boundary_family.kind diag-exponential --boundary_family.lambda 0.3 "
                  "--output.dir " +
                  dir.string() + " compat-check") == 3);
    // compatible setup passes
    CHECK(run_cli(std::string(kTinyFlat) + "--output.dir " + dir.string() +
                  " compat-check") == 0);
    // unknown mode
    CHECK(run_cli(std::string(kTinyFlat) + "--output.dir " + dir.string() + " fly") == 2);
}

TEST_CASE("trace-check mode reports and exits cleanly") {
    fs::path dir = fs::temp_directory_path() / "collar_cli_trace";
    fs::remove_all(dir);
    CHECK(run_cli(std::string(kTinyFlat) + "--output.dir " + dir.string() +
                  " trace-check") == 0);
    CHECK(fs::exists(dir / "diagnostics.csv"));
}

TEST_CASE("seeded perturbed runs are reproducible and seed-sensitive") {
    fs::path dir1 = fs::temp_directory_path() / "collar_cli_seed1";
    fs::path dir2 = fs::temp_directory_path() / "collar_cli_seed2";
    fs::path dir3 = fs::temp_directory_path() / "collar_cli_seed3";
    for (const auto& d : {dir1, dir2, dir3}) fs::remove_all(d);
    std::string common = std::string(kTinyFlat) +
                         "--initial_data.kind perturbed --initial_data.eps 1e-3 "
                         "--initial_data.profile tt-random ";
    REQUIRE(run_cli(common + "--seed 7 --output.dir " + dir1.string() + " evolve") == 0);
    REQUIRE(run_cli(common + "--seed 7 --output.dir " + dir2.string() + " evolve") == 0);
    REQUIRE(run_cli(common + "--seed 8 --output.dir " + dir3.string() + " evolve") == 0);
    std::string a = slurp(dir1 / "diagnostics.csv");
    CHECK(a == slurp(dir2 / "diagnostics.csv"));
    CHECK(a != slurp(dir3 / "diagnostics.csv"));
}
