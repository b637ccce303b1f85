#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "sre/cli.hpp"
#include "sre/io.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("sre_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path write_config(const TempDir& dir, const std::string& name,
                      const std::string& body) {
    const fs::path file = dir.path / name;
    std::ofstream(file) << body;
    return file;
}

int run_cli(std::initializer_list<std::string> args) {
    return sre::cli::run(std::vector<std::string>(args));
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json report_of(const fs::path& dir) {
    return json::parse(slurp(dir / "report.json"));
}

std::string report_without_timings(const fs::path& dir) {
    json rep = report_of(dir);
    rep.erase("timings");
    return rep.dump(2);
}

const char* kScalarSolveConfig = R"({
  "problem": {"n": 1, "T": 1.0, "A": 0.0, "B": 0.0, "C": 0.0, "Q": 2.0, "H": 1.0},
  "solver": {"grid_steps": 2000},
  "output": {"directory": "OUT", "formats": ["json", "csv"]}
})";

} // namespace

TEST_CASE("check passes on the definite scalar fixture") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "problem": {"n": 1, "T": 1.0, "A": 0.0, "B": 0.0, "C": 0.0, "Q": 2.0, "H": 1.0},
      "solver": {"grid_steps": 100}
    })");
    const int code = run_cli({"check", "--config", cfg.string(), "--out",
                              (dir.path / "out").string()});
    CHECK(code == 0);
    const json rep = report_of(dir.path / "out");
    CHECK(rep["checks"]["pass"] == true);
}

TEST_CASE("check fails on the R = 1, B = 1 fixture and reports the norm") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "problem": {"n": 1, "T": 1.0, "A": 0.0, "B": 1.0, "C": 0.0, "Q": 5.0, "H": 1.0,
                  "gauge": {"R0": 1.0}},
      "solver": {"grid_steps": 100}
    })");
    const int code = run_cli({"check", "--config", cfg.string(), "--out",
                              (dir.path / "out").string()});
    CHECK(code == 1);
    const json rep = report_of(dir.path / "out");
    CHECK(rep["checks"]["assumption_i"]["max_rtil_norm"].get<double>() ==
          doctest::Approx(1.0));
}

TEST_CASE("malformed matrices are a config error") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "problem": {"n": 2, "T": 1.0, "A": [0, 0, 0], "B": 0.0, "C": 0.0,
                  "Q": [1, 0, 0, 1], "H": [1, 0, 0, 1]},
      "solver": {"grid_steps": 10}
    })");
    CHECK(run_cli({"check", "--config", cfg.string(), "--out",
                   (dir.path / "out").string()}) == 2);
}

TEST_CASE("missing config file and broken JSON are config errors") {
    TempDir dir;
    CHECK(run_cli({"check", "--config", (dir.path / "absent.json").string()}) == 2);
    const auto cfg = write_config(dir, "broken.json", "{not json");
    CHECK(run_cli({"check", "--config", cfg.string()}) == 2);
}

TEST_CASE("solve on the closed-form fixture writes passing artifacts") {
    TempDir dir;
    const fs::path out = dir.path / "out";
    std::string body = kScalarSolveConfig;
    body.replace(body.find("OUT"), 3, out.generic_string());
    const auto cfg = write_config(dir, "c.json", body);

    CHECK(run_cli({"solve", "--config", cfg.string()}) == 0);
    const json rep = report_of(out);
    CHECK(rep["checks"]["pass"] == true);
    CHECK(rep["solution_summary"]["P0"][0].get<double>() ==
          doctest::Approx(3.0).epsilon(1e-6));
    CHECK(rep["diagnostics"]["iteration"]["converged"] == true);

    for (const char* name : {"P.csv", "K.csv", "X.csv", "Lambda.csv", "R.csv",
                             "iterates.csv"}) {
        CHECK(fs::exists(out / name));
    }

    // CSV round-trip is byte-identical
    const std::string original = slurp(out / "P.csv");
    const sre::MatPath p = sre::read_mat_path_csv((out / "P.csv").string());
    sre::write_mat_path_csv((out / "P2.csv").string(), p);
    CHECK(slurp(out / "P2.csv") == original);
}

TEST_CASE("an overridden solve records the blow-up node and exits 1") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "problem": {"n": 1, "T": 1.0, "A": 0.0, "B": 0.0, "C": 0.0, "Q": -6.0, "H": 1.0},
      "solver": {"grid_steps": 200}
    })");
    const fs::path out = dir.path / "out";
    // without the override the failing check stops the solve
    CHECK(run_cli({"solve", "--config", cfg.string(), "--out", out.string()}) == 1);
    // forced past the checks, the iteration escapes and the node is recorded
    CHECK(run_cli({"solve", "--config", cfg.string(), "--out", out.string(),
                   "--override-checks"}) == 1);
    const json rep = report_of(out);
    CHECK(rep["diagnostics"].contains("blow_up_last_finite_node"));
}

TEST_CASE("solve reports the assumption-(ii) failure and exits 1") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "problem": {"n": 1, "T": 1.0, "A": 0.0, "B": 0.0, "C": 0.0, "Q": 2.0, "H": 1.0,
                  "gauge": {"R0": -2.0}},
      "solver": {"grid_steps": 100}
    })");
    const fs::path out = dir.path / "out";
    CHECK(run_cli({"solve", "--config", cfg.string(), "--out", out.string()}) == 1);
    const json rep = report_of(out);
    CHECK(rep["checks"]["pass"] == false);
    const std::string failure = rep["diagnostics"]["failure"].get<std::string>();
    CHECK(failure.find("assumption (ii)") != std::string::npos);
}

TEST_CASE("repeated solve runs are byte-deterministic modulo timings") {
    TempDir dir;
    const fs::path out = dir.path / "out";
    std::string body = kScalarSolveConfig;
    body.replace(body.find("OUT"), 3, out.generic_string());
    const auto cfg = write_config(dir, "c.json", body);

    CHECK(run_cli({"solve", "--config", cfg.string()}) == 0);
    const std::string first_report = report_without_timings(out);
    std::map<std::string, std::string> first_csv;
    const std::vector<std::string> names = {"P.csv", "K.csv", "X.csv",
                                            "Lambda.csv", "R.csv", "iterates.csv"};
    for (const auto& name : names) first_csv[name] = slurp(out / name);

    CHECK(run_cli({"solve", "--config", cfg.string()}) == 0);
    CHECK(report_without_timings(out) == first_report);
    for (const auto& name : names) {
        CHECK(slurp(out / name) == first_csv[name]);
    }
}

TEST_CASE("oracle passes on the diffusion fixture at any thread count") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "oracle": {"n": 1, "T": 1.0, "grid_steps": 200, "seed": 404,
                 "n_paths": 20000, "Ahat": 0.0, "Chat": 1.0, "Qhat": 0.0,
                 "Hhat": 1.0, "probes": [[1.0]]}
    })");
    const fs::path out1 = dir.path / "t1";
    const fs::path out4 = dir.path / "t4";
    CHECK(run_cli({"oracle", "--config", cfg.string(), "--out", out1.string(),
                   "--threads", "1"}) == 0);
    CHECK(run_cli({"oracle", "--config", cfg.string(), "--out", out4.string(),
                   "--threads", "4"}) == 0);
    CHECK(report_without_timings(out1) == report_without_timings(out4));

    const json rep = report_of(out1);
    const json& probe = rep["diagnostics"]["probes"][0];
    CHECK(probe["pass"] == true);
    CHECK(probe["ode_value"].get<double>() == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
}

TEST_CASE("oracle criterion scales with a tiny ensemble") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "oracle": {"n": 1, "T": 1.0, "grid_steps": 200, "seed": 9,
                 "n_paths": 10, "Ahat": 0.0, "Chat": 1.0, "Qhat": 0.0,
                 "Hhat": 1.0, "probes": [[1.0]]}
    })");
    CHECK(run_cli({"oracle", "--config", cfg.string(), "--out",
                   (dir.path / "out").string()}) == 0);
}

TEST_CASE("explode reports the blow-up time and exits 0") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "explode": {"n": 1, "T": 1.0, "grid_steps": 2000, "Qtil": 0.0, "X_T": 1.0}
    })");
    const fs::path out = dir.path / "out";
    CHECK(run_cli({"explode", "--config", cfg.string(), "--out", out.string()}) == 0);
    const json rep = report_of(out);
    CHECK(rep["solution_summary"]["status"] == "blow_up");
    CHECK(rep["solution_summary"]["blow_up_time"].get<double>() ==
          doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("explode completes for a small terminal value") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "explode": {"n": 1, "T": 1.0, "grid_steps": 2000, "Qtil": 0.0, "X_T": 0.1}
    })");
    const fs::path out = dir.path / "out";
    CHECK(run_cli({"explode", "--config", cfg.string(), "--out", out.string()}) == 0);
    const json rep = report_of(out);
    CHECK(rep["solution_summary"]["status"] == "completed");
    CHECK(rep["solution_summary"]["X0"][0].get<double>() ==
          doctest::Approx(0.1 / std::sqrt(0.98)).epsilon(1e-5));
}

TEST_CASE("genr passes the slope gate and the flipped control fails it") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "genr": {"n": 1, "T": 1.0, "seed": 7, "B": 1.0, "C": 0.0, "F": 0.0,
               "S0": 1.0, "ladder": [200, 800, 3200]}
    })");
    const fs::path out = dir.path / "out";
    CHECK(run_cli({"genr", "--config", cfg.string(), "--out", out.string()}) == 0);
    const json rep = report_of(out);
    CHECK(rep["solution_summary"]["slope"].get<double>() >= 0.9);
    CHECK(fs::exists(out / "R.csv"));

    const auto flipped = write_config(dir, "flip.json", R"({
      "genr": {"n": 1, "T": 1.0, "seed": 7, "B": 1.0, "C": 0.0, "F": 0.0,
               "S0": 1.0, "ladder": [200, 800, 3200], "flip_compensator": true}
    })");
    CHECK(run_cli({"genr", "--config", flipped.string(), "--out",
                   (dir.path / "flip").string()}) == 1);
}

TEST_CASE("argument errors exit with code 2") {
    CHECK(run_cli({"frobnicate", "--config", "x.json"}) == 2);
    CHECK(run_cli({"check"}) == 2);   // --config is required
}
