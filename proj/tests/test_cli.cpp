#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tvlink/dist.hpp"
#include "tvlink/link_models.hpp"
#include "tvlink/sim.hpp"
#include "tvlink/trace.hpp"

using namespace tvlink;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string stderr_text;
};

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "tvlink_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    const fs::path err_file = scratch_dir() / "stderr.txt";
    const std::string cmd = std::string(TVLINK_CLI_PATH) + " " + args + " >/dev/null 2>" +
                            err_file.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(status);
    std::ifstream in(err_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.stderr_text = buf.str();
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("cli ingest: happy path, bad T, missing file") {
    const fs::path dir = scratch_dir();
    write(dir / "uplink.trace", "0\n50\n50\n100\n150\n200\n");
    const fs::path out = dir / "cap.csv";

    const CliResult ok = run_cli("ingest --trace " + (dir / "uplink.trace").string() +
                                 " --T 0.1 --out " + out.string());
    CHECK(ok.exit_code == 0);
    CHECK(ok.stderr_text.find("floored") != std::string::npos);
    CHECK(fs::exists(out));
    CHECK(fs::exists(out.string() + ".manifest.json"));
    const CapacityTrace trace = capacity_trace_from_csv_string(slurp(out));
    CHECK(trace.rounds() == 2);

    const CliResult bad_t = run_cli("ingest --trace " + (dir / "uplink.trace").string() +
                                    " --T 0 --out " + (dir / "x.csv").string());
    CHECK(bad_t.exit_code == 2);
    CHECK(!bad_t.stderr_text.empty());

    const CliResult missing = run_cli("ingest --trace " + (dir / "nope.trace").string() +
                                      " --out " + (dir / "y.csv").string());
    CHECK(missing.exit_code == 1);
}

TEST_CASE("cli synth: log-uniform drift, support bounds, rounds validation") {
    const fs::path dir = scratch_dir();
    const fs::path out = dir / "synth.csv";
    CHECK(run_cli("synth --dist loguniform:-1,1 --mu0 1000000 --rounds 100000 --seed 3 --out " +
                  out.string())
              .exit_code == 0);
    const CapacityTrace t = capacity_trace_from_csv_string(slurp(out));
    REQUIRE(t.rounds() == 100000);
    const MifModel fitted = fit_mif(t);
    const double sigma = (2.0 / std::sqrt(12.0)) / std::sqrt(99999.0);
    CHECK(std::abs(fitted.ratio.summary().mean_log) < 4.0 * sigma);

    const fs::path out_u = dir / "synth_u.csv";
    CHECK(run_cli("synth --dist uniform:0.27,2 --rounds 5000 --seed 1 --out " + out_u.string())
              .exit_code == 0);
    const MifModel fu = fit_mif(capacity_trace_from_csv_string(slurp(out_u)));
    CHECK(fu.ratio.summary().x_min >= 0.27);
    CHECK(fu.ratio.summary().x_max <= 2.0);

    CHECK(run_cli("synth --dist loguniform:-1,1 --rounds 1 --out " + (dir / "z.csv").string())
              .exit_code == 2);
}

TEST_CASE("cli bound: mif curve, smf bins=1 identity, lost without trace") {
    const fs::path dir = scratch_dir();
    const fs::path trace_csv = dir / "bound_trace.csv";
    REQUIRE(run_cli("synth --dist loguniform:-1,1 --rounds 20000 --seed 5 --out " +
                    trace_csv.string())
                .exit_code == 0);

    const fs::path mif_out = dir / "mif.csv";
    const fs::path smf_out = dir / "smf.csv";
    CHECK(run_cli("bound --model mif --trace-csv " + trace_csv.string() + " --out " +
                  mif_out.string())
              .exit_code == 0);
    CHECK(run_cli("bound --model smf --bins 1 --trace-csv " + trace_csv.string() + " --out " +
                  smf_out.string())
              .exit_code == 0);

    // Identical param/eq/eu cells row by row.
    std::istringstream mif_in(slurp(mif_out)), smf_in(slurp(smf_out));
    std::string mif_line, smf_line;
    std::getline(mif_in, mif_line);
    std::getline(smf_in, smf_line);
    size_t rows = 0;
    while (std::getline(mif_in, mif_line)) {
        REQUIRE(std::getline(smf_in, smf_line));
        CHECK(smf_line.rfind(mif_line, 0) == 0);
        ++rows;
    }
    CHECK(rows >= 2);

    const CliResult lost = run_cli("bound --model lost --dist uniform:0.5,2 --out " +
                                   (dir / "lost.csv").string());
    CHECK(lost.exit_code == 2);
    CHECK(lost.stderr_text.find("bin mean capacities") != std::string::npos);
}

TEST_CASE("cli solve: point mass, gamma validation, smf-approx fixture") {
    const fs::path dir = scratch_dir();
    const fs::path out = dir / "sol.json";
    CHECK(run_cli("solve --law mif --dist pointmass:1 --w 5 --gamma 0.9 --out " + out.string())
              .exit_code == 0);
    const std::string json = slurp(out);
    const auto pos = json.find("\"c_star\": ");
    REQUIRE(pos != std::string::npos);
    const double c_star = std::stod(json.substr(pos + 10));
    CHECK(std::abs(c_star - 1.0) < 0.01);

    CHECK(run_cli("solve --law mif --dist pointmass:1 --w 5 --gamma 1.0 --out " +
                  (dir / "g.json").string())
              .exit_code == 2);

    // Two-atom fixture: alternating capacities at T = 1 make every ratio 0.5
    // or 2 with equal weight.
    CapacityTrace fixture;
    fixture.round_duration_s = 1.0;
    for (int i = 0; i < 201; ++i)
        fixture.mu_bps.push_back(i % 2 == 0 ? 1e6 : 2e6);
    write(dir / "fixture.csv", capacity_csv_string(fixture));
    const fs::path approx_out = dir / "approx.json";
    CHECK(run_cli("solve --law smf-approx --bins 1 --min-bin-samples 10 --w 0.25 --trace-csv " +
                  (dir / "fixture.csv").string() + " --out " + approx_out.string())
              .exit_code == 0);
    const std::string approx = slurp(approx_out);
    const auto cpos = approx.find("\"0\": ");
    REQUIRE(cpos != std::string::npos);
    const double c0 = std::stod(approx.substr(cpos + 5));
    CHECK(c0 > 0.5);
    CHECK(c0 <= 2.0);
}

TEST_CASE("cli simulate is idempotent for a fixed seed") {
    const fs::path dir = scratch_dir();
    const fs::path trace_csv = dir / "sim_trace.csv";
    REQUIRE(run_cli("synth --dist uniform:0.6,1.5 --rounds 2000 --seed 8 --out " +
                    trace_csv.string())
                .exit_code == 0);
    const fs::path run1 = dir / "run1.csv", run2 = dir / "run2.csv";
    const std::string sim_args = "simulate --trace-csv " + trace_csv.string() +
                                 " --law optimal-pmif --Cp 1.0 --pred-error uniform:0.8,1.2 "
                                 "--seed 42 --out ";
    CHECK(run_cli(sim_args + run1.string() + " --out-summary " + (dir / "s1.json").string())
              .exit_code == 0);
    CHECK(run_cli(sim_args + run2.string() + " --out-summary " + (dir / "s2.json").string())
              .exit_code == 0);
    CHECK(fnv1a64(slurp(run1)) == fnv1a64(slurp(run2)));
    CHECK(slurp(dir / "s1.json") == slurp(dir / "s2.json"));
}

TEST_CASE("cli solve handles pmif and reports non-convergence as exit 3") {
    const fs::path dir = scratch_dir();
    const fs::path out = dir / "pmif.json";
    CHECK(run_cli("solve --law pmif --pred-error pointmass:1 --pred-drift uniform:0.8,1.2 "
                  "--w 5 --gamma 0.9 --out " +
                  out.string())
              .exit_code == 0);
    const std::string json = slurp(out);
    const auto pos = json.find("\"c_star\": ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(json.substr(pos + 10)) - 1.0) < 0.01);

    // One iteration cannot converge: numerical failure, exit code 3.
    CHECK(run_cli("solve --law mif --dist uniform:0.6,1.5 --w 1 --gamma 0.9 --max-iters 1 "
                  "--out " +
                  (dir / "nc.json").string())
              .exit_code == 3);

    // Optional V/W dump for inspection.
    CHECK(run_cli("solve --law mif --dist pointmass:1 --w 1 --gamma 0.9 --dump-vw " +
                  (dir / "vw").string() + " --out " + (dir / "d.json").string())
              .exit_code == 0);
    CHECK(slurp(dir / "vw.v.csv").rfind("q,v\n", 0) == 0);
    CHECK(slurp(dir / "vw.w.csv").rfind("rho,w\n", 0) == 0);
}

TEST_CASE("cli simulate drives the optimal-smf law") {
    const fs::path dir = scratch_dir();
    CapacityTrace fixture;
    fixture.round_duration_s = 0.1;
    for (int i = 0; i < 401; ++i)
        fixture.mu_bps.push_back(i % 2 == 0 ? 1e6 : 2e6);
    write(dir / "smf_trace.csv", capacity_csv_string(fixture));

    // State lookup fitted from the trace itself.
    CHECK(run_cli("simulate --trace-csv " + (dir / "smf_trace.csv").string() +
                  " --law optimal-smf --bins 2 --min-bin-samples 10 --C 0.5 --out " +
                  (dir / "smf_run.csv").string())
              .exit_code == 0);
    const std::string csv = slurp(dir / "smf_run.csv");
    CHECK(csv.rfind("t,s_bps,", 0) == 0);

    // State lookup from a model file.
    const SmfModel model = fit_smf(fixture, 2, 10);
    write(dir / "model.json", model.to_json_text());
    CHECK(run_cli("simulate --trace-csv " + (dir / "smf_trace.csv").string() +
                  " --smf-json " + (dir / "model.json").string() +
                  " --law optimal-smf --C 0.5 --out " + (dir / "smf_run2.csv").string())
              .exit_code == 0);
    CHECK(slurp(dir / "smf_run2.csv") == csv);
}

TEST_CASE("cli config file supplies defaults, flags win") {
    const fs::path dir = scratch_dir();
    write(dir / "synth.toml",
          "[synth]\ndist = \"uniform:0.6,1.5\"\nrounds = 500\nseed = 7\n");
    const fs::path out1 = dir / "cfg1.csv";
    CHECK(run_cli("synth --config " + (dir / "synth.toml").string() + " --out " +
                  out1.string())
              .exit_code == 0);
    CHECK(capacity_trace_from_csv_string(slurp(out1)).rounds() == 500);

    // The command line overrides the config file.
    const fs::path out2 = dir / "cfg2.csv";
    CHECK(run_cli("synth --config " + (dir / "synth.toml").string() + " --rounds 250 --out " +
                  out2.string())
              .exit_code == 0);
    CHECK(capacity_trace_from_csv_string(slurp(out2)).rounds() == 250);

    // Manifest records the config digest.
    const std::string manifest = slurp(out2.string() + ".manifest.json");
    CHECK(manifest.find("\"config_digest\": \"fnv1a64:") != std::string::npos);
}

TEST_CASE("cli sweep produces one entry per config") {
    const fs::path dir = scratch_dir();
    const fs::path trace_csv = dir / "sweep_trace.csv";
    REQUIRE(run_cli("synth --dist uniform:0.6,1.5 --rounds 3000 --seed 2 --out " +
                    trace_csv.string())
                .exit_code == 0);
    const fs::path out = dir / "sweep.csv";
    CHECK(run_cli("sweep --trace-csv " + trace_csv.string() +
                  " --law abc --eta 1 --beta 0.5,1,2,4 --jobs 2 --out " + out.string())
              .exit_code == 0);
    const std::string csv = slurp(out);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5); // header + 4 entries

    // Same command again: identical digest (idempotence).
    const fs::path out2 = dir / "sweep2.csv";
    CHECK(run_cli("sweep --trace-csv " + trace_csv.string() +
                  " --law abc --eta 1 --beta 0.5,1,2,4 --jobs 2 --out " + out2.string())
              .exit_code == 0);
    CHECK(fnv1a64(csv) == fnv1a64(slurp(out2)));
}
