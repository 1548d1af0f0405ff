// End-to-end tests of the bohmlab binary: catalog listing, field export,
// verification exit codes, propagation reports, and parameter sweeps.
// The binary path arrives in the BOHMLAB_BIN environment variable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
    const char* bin = std::getenv("BOHMLAB_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "BOHMLAB_BIN must point at the binary");
    const std::string cmd = std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

int line_count(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bohmlab_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()));
    return json::parse(in);
}

} // namespace

TEST_CASE("list prints the 13-family catalog and filters by section") {
    const RunResult all = run("list");
    CHECK(all.exit_code == 0);
    CHECK(line_count(all.output) == 13);
    CHECK(all.output.find("plane_wave") != std::string::npos);

    const RunResult filtered = run("list --section VI");
    CHECK(filtered.exit_code == 0);
    CHECK(line_count(filtered.output) == 4);
    CHECK(filtered.output.find("power_cosine") == std::string::npos);

    const RunResult machine = run("list --json");
    CHECK(machine.exit_code == 0);
    const json rows = json::parse(machine.output);
    REQUIRE(rows.size() == 13);
    for (const json& r : rows) {
        CHECK(r.contains("id"));
        CHECK(r.contains("section"));
        CHECK(r.contains("vanishing_bohm"));
        CHECK(r.contains("parameters"));
    }
}

TEST_CASE("generate exports fields with metadata; plane wave has zero V_B") {
    const fs::path dir = fresh_dir("gen");
    const RunResult r = run("generate --family plane_wave --grid -4,4,32,0.1,1,16 --out " +
                            dir.string());
    CHECK(r.exit_code == 0);
    for (const char* name : {"A", "S", "V", "VB", "psi_re", "psi_im"})
        CHECK(fs::exists(dir / (std::string(name) + ".csv")));

    const auto vb = read_csv(dir / "VB.csv");
    REQUIRE(vb.size() == 1 + 32 * 16);
    CHECK(vb[0] == std::vector<std::string>{"x", "t", "value"});
    for (std::size_t i = 1; i < vb.size(); ++i)
        CHECK(std::fabs(std::stod(vb[i][2])) == 0.0);

    const json meta = read_json(dir / "metadata.json");
    CHECK(meta["vanishing_bohm"] == true);
    CHECK(meta["config"]["family"] == "plane_wave");
    CHECK(meta["grid"]["nx"] == 32);
}

TEST_CASE("generate --format json bundles everything into one file") {
    const fs::path dir = fresh_dir("genjson");
    const RunResult r = run("generate --family airy_packet --grid -3,3,16,0.1,1,8 "
                            "--format json --out " + dir.string());
    CHECK(r.exit_code == 0);
    const json out = read_json(dir / "generate.json");
    for (const char* name : {"A", "S", "V", "VB", "psi_re", "psi_im"}) {
        REQUIRE(out["fields"].contains(name));
        CHECK(out["fields"][name]["values"].size() == 16 * 8);
    }
    // V_B is linear in x at fixed t: second difference along x vanishes.
    const auto& vb = out["fields"]["VB"]["values"];
    const double second_diff = vb[2].get<double>() - 2 * vb[1].get<double>() +
                               vb[0].get<double>();
    CHECK(std::fabs(second_diff) <= 1e-12);
}

TEST_CASE("generate accepts a generating function expression") {
    const fs::path dir = fresh_dir("genf");
    const RunResult r = run("generate --f-expr 'exp(x)' --grid -2,2,16,0.1,1,8 --out " +
                            dir.string());
    CHECK(r.exit_code == 0);
    // The inferred static potential cancels V_B of sqrt(f') = e^{x/2}.
    const auto v = read_csv(dir / "V.csv");
    REQUIRE(v.size() > 1);
    for (std::size_t i = 1; i < v.size(); ++i)
        CHECK(std::stod(v[i][2]) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("usage and config errors exit with code 2") {
    CHECK(run("generate --family plane_wave --f-expr x").exit_code == 2);  // both
    CHECK(run("generate").exit_code == 2);                                 // neither
    CHECK(run("verify --family no_such_family").exit_code == 2);
    CHECK(run("verify --family plane_wave --set k=oops").exit_code == 2);
    CHECK(run("generate --family plane_wave --grid 1,2,3").exit_code == 2);
    CHECK(run("generate --f-expr 'x +* t'").exit_code == 2);
    CHECK(run("verify --family airy_packet --vvm").exit_code == 2);  // not an oscillator
    CHECK(run("frobnicate").exit_code == 2);
}

TEST_CASE("verify passes at default tolerance and fails at an impossible one") {
    const RunResult ok = run("verify --family free_exponential");
    CHECK(ok.exit_code == 0);
    for (const char* check : {"continuity", "qhje", "schrodinger", "bohm_consistency"})
        CHECK(ok.output.find(check) != std::string::npos);
    CHECK(ok.output.find("FAIL") == std::string::npos);

    const fs::path dir = fresh_dir("verify");
    const RunResult bad = run("verify --family free_exponential --tol 1e-20 --out " +
                              dir.string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("FAIL") != std::string::npos);
    const json report = read_json(dir / "verify.json");
    CHECK(report["pass"] == false);
    CHECK(report["checks"]["schrodinger"]["linf"].get<double>() > 1e-20);
}

TEST_CASE("verify --vvm reports the amplitude proportionality") {
    const RunResult good = run("verify --family oscillator_vvm --vvm");
    CHECK(good.exit_code == 0);
    CHECK(good.output.find("matches=true") != std::string::npos);

    const RunResult alt = run("verify --family oscillator_cos_amplitude --vvm");
    CHECK(alt.exit_code == 1);
    CHECK(alt.output.find("matches=false") != std::string::npos);
}

TEST_CASE("propagate reports the comparison and honours --tol gating") {
    const fs::path dir = fresh_dir("prop");
    const std::string base =
        "propagate --family scaling_packet --grid -16,16,512,0.5,1.5,8 --snapshots 2";
    const RunResult r = run(base + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    const json report = read_json(dir / "report.json");
    CHECK(report["l2"].get<double>() <= 1e-4);
    CHECK(fs::exists(dir / "snapshots.csv"));

    CHECK(run(base + " --tol 1e-30").exit_code == 1);
    // nx must be a power of two: numeric-domain error.
    CHECK(run("propagate --family scaling_packet --grid -16,16,500,0.5,1.5,8")
              .exit_code == 3);
}

TEST_CASE("sweep fits the packet acceleration across parameter values") {
    const fs::path dir = fresh_dir("sweep");
    const RunResult r = run("sweep --family airy_packet --param beta "
                            "--values 0.5,1,2 --out " + dir.string());
    CHECK(r.exit_code == 0);
    const auto rows = read_csv(dir / "sweep.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "beta");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double beta = std::stod(rows[i][0]);
        const double accel = std::stod(rows[i][1]);
        // Bohmian packets under the Airy construction accelerate at beta^3/2m^2.
        CHECK(accel == doctest::Approx(beta * beta * beta / 2).epsilon(0.01));
    }
}
