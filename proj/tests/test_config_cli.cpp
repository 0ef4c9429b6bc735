// Tests for config parsing/serialization and the command-line front end.
//
// The CLI is exercised in-process through cli_main with argv arrays; every
// run writes into a fresh directory under the system temp path so the cases
// can assert byte-level determinism of the artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "swm/cli.hpp"
#include "swm/config.hpp"
#include "swm/numerics.hpp"
#include "swm/types.hpp"

using namespace swm;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "swm_config_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    REQUIRE(static_cast<bool>(out));
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs the CLI in-process, capturing stderr (the status line) so test output
// stays clean.  argv[0] is supplied here; pass only the real arguments.
int run_cli(const std::vector<std::string>& args, std::string* err = nullptr) {
    std::vector<const char*> argv;
    argv.push_back("swm");
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream captured;
    std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
    int code = -1;
    try {
        code = cli_main(static_cast<int>(argv.size()), argv.data());
    } catch (...) {
        std::cerr.rdbuf(old);
        throw;
    }
    std::cerr.rdbuf(old);
    if (err) *err = captured.str();
    return code;
}

void expect_config_error(const std::string& text, const std::string& needle) {
    try {
        (void)parse_config(text);
        FAIL_CHECK("expected ConfigError mentioning '" << needle << "'");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        INFO("message: " << what);
        CHECK(what.find(needle) != std::string::npos);
    }
}

// First line of a file (without the newline).
std::string header_of(const std::string& contents) {
    return contents.substr(0, contents.find('\n'));
}

// Looks up one cell of a long-format "name,row,col,value" CSV.
double design_value(const std::string& csv, const std::string& name, int row, int col) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    const std::string key = name + "," + std::to_string(row) + "," + std::to_string(col) + ",";
    while (std::getline(in, line)) {
        if (line.rfind(key, 0) == 0) return std::stod(line.substr(key.size()));
    }
    FAIL("design.csv has no entry " << key << "value");
    return std::numeric_limits<double>::quiet_NaN();
}

// Scalar integrator dx = u dt + dw with unit noise: at T = 1 every discrete
// matrix is 1, so the Riccati solutions are the golden ratio.
std::string golden_config(const std::string& out_dir, const std::string& extra = "") {
    return std::string(R"({
  "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]], "r_c": [[1]]}},
  "sampling": {"T": 1.0},
  "watermark": {"budget_mu": 1.0},
)") + extra +
           R"(  "output_dir": ")" + out_dir + "\"\n}\n";
}

}  // namespace

TEST_CASE("quadrotor config parses with library defaults") {
    const ScenarioConfig cfg = parse_config(R"({
        "plant": {"quadrotor": {}},
        "sampling": {"T": 0.1}
    })");
    REQUIRE(cfg.quadrotor.has_value());
    CHECK_FALSE(cfg.explicit_plant.has_value());
    CHECK(cfg.quad_process_noise == 1e-3);
    CHECK(cfg.quad_measurement_noise == 1e-2);
    REQUIRE(cfg.sample_period.has_value());
    CHECK(*cfg.sample_period == 0.1);
    CHECK(cfg.sample_grid.empty());
    CHECK(cfg.t_bar == 0.1);  // defaults to the largest requested period
    CHECK(cfg.budget_mu == 1.0);
    CHECK(cfg.watermark_enabled);
    CHECK(cfg.window == 10);
    CHECK(cfg.false_alarm_prob == 0.05);
    CHECK(cfg.horizon == 5000);
    CHECK(cfg.trials == 100);
    CHECK(cfg.seed == 12345);
    CHECK(cfg.warmup == 500);
    CHECK(cfg.settle == -1);
    CHECK_FALSE(cfg.attack.has_value());
    CHECK(cfg.output_dir == "out");

    // The resolved continuous plant is the 12-state hover model with the
    // configured noise intensities on the diagonal.
    const ContinuousPlant plant = cfg.continuous();
    CHECK(plant.state_dim() == 12);
    CHECK(plant.input_dim() == 4);
    CHECK(plant.output_dim() == 4);
    CHECK(plant.q_c.isApprox(1e-3 * Mat::Identity(12, 12)));
    CHECK(plant.r_c.isApprox(1e-2 * Mat::Identity(4, 4)));
}

TEST_CASE("explicit-plant config parses every section") {
    const ScenarioConfig cfg = parse_config(R"({
        "plant": {"matrices": {
            "a": [[0.0, 1.0], [-1.0, -0.3]],
            "b": [[0.0], [1.0]],
            "c": [[1.0, 0.0]],
            "q_c": [[0.1, 0.0], [0.0, 0.2]],
            "r_c": [[0.05]]
        }},
        "weights": {"w": 2.5, "u": [[3.0]]},
        "sampling": {"grid": [0.05, 0.1, 0.2], "T_bar": 0.25, "reference_T": 0.05},
        "watermark": {"budget_mu": 0.125, "enabled": false},
        "detector": {"window": 6, "false_alarm_prob": 0.01},
        "simulation": {"horizon": 4000, "trials": 32, "seed": 99, "warmup": 250, "settle": 12},
        "attack": {"record_start": 500, "record_len": 600, "replay_start": 1200},
        "output_dir": "results/run1"
    })");
    REQUIRE(cfg.explicit_plant.has_value());
    CHECK(cfg.explicit_plant->a(1, 0) == -1.0);
    CHECK(cfg.explicit_plant->b(1, 0) == 1.0);
    CHECK(cfg.explicit_plant->r_c(0, 0) == 0.05);
    REQUIRE(cfg.weight_w.scale.has_value());
    CHECK(*cfg.weight_w.scale == 2.5);
    CHECK_FALSE(cfg.weight_u.scale.has_value());
    REQUIRE(cfg.weight_u.matrix.size() == 1);
    CHECK(cfg.weight_u.matrix(0, 0) == 3.0);
    CHECK_FALSE(cfg.sample_period.has_value());
    REQUIRE(cfg.sample_grid.size() == 3);
    CHECK(cfg.sample_grid[2] == 0.2);
    CHECK(cfg.t_bar == 0.25);
    REQUIRE(cfg.reference_t.has_value());
    CHECK(*cfg.reference_t == 0.05);
    CHECK(cfg.budget_mu == 0.125);
    CHECK_FALSE(cfg.watermark_enabled);
    CHECK(cfg.window == 6);
    CHECK(cfg.false_alarm_prob == 0.01);
    CHECK(cfg.horizon == 4000);
    CHECK(cfg.trials == 32);
    CHECK(cfg.seed == 99);
    CHECK(cfg.warmup == 250);
    CHECK(cfg.settle == 12);
    REQUIRE(cfg.attack.has_value());
    CHECK(cfg.attack->record_start == 500);
    CHECK(cfg.attack->record_len == 600);
    CHECK(cfg.attack->replay_start == 1200);
    CHECK(cfg.output_dir == "results/run1");

    const CostWeights weights = cfg.resolve_weights(cfg.continuous());
    CHECK(weights.w.isApprox(2.5 * Mat::Identity(2, 2)));
    CHECK(weights.u(0, 0) == 3.0);
}

TEST_CASE("invalid configs are rejected with the offending field named") {
    const std::string quad = R"("plant": {"quadrotor": {}}, "sampling": {"T": 0.1})";

    SUBCASE("zero watermark budget") {
        expect_config_error("{" + quad + R"(, "watermark": {"budget_mu": 0.0}})",
                            "watermark.budget_mu");
    }
    SUBCASE("negative watermark budget") {
        expect_config_error("{" + quad + R"(, "watermark": {"budget_mu": -1.0}})",
                            "watermark.budget_mu");
    }
    SUBCASE("non-numeric watermark budget") {
        expect_config_error("{" + quad + R"(, "watermark": {"budget_mu": "big"}})",
                            "must be a number");
    }
    SUBCASE("false-alarm probability outside (0, 1)") {
        expect_config_error("{" + quad + R"(, "detector": {"false_alarm_prob": 1.5}})",
                            "detector.false_alarm_prob");
        expect_config_error("{" + quad + R"(, "detector": {"false_alarm_prob": 0.0}})",
                            "detector.false_alarm_prob");
    }
    SUBCASE("window below one") {
        expect_config_error("{" + quad + R"(, "detector": {"window": 0}})", "detector.window");
    }
    SUBCASE("non-integer window") {
        expect_config_error("{" + quad + R"(, "detector": {"window": 10.5}})",
                            "must be an integer");
    }
    SUBCASE("both plant forms present") {
        expect_config_error(R"({
            "plant": {"quadrotor": {}, "matrices": {"a": [[0]], "b": [[1]], "c": [[1]],
                                                    "q_c": [[1]], "r_c": [[1]]}},
            "sampling": {"T": 0.1}
        })",
                            "exactly one");
    }
    SUBCASE("neither plant form present") {
        expect_config_error(R"({"plant": {}, "sampling": {"T": 0.1}})", "exactly one");
    }
    SUBCASE("plant section missing entirely") {
        expect_config_error(R"({"sampling": {"T": 0.1}})", "plant");
    }
    SUBCASE("unknown top-level field") {
        expect_config_error("{" + quad + R"(, "extra_knob": 1})", "config.extra_knob");
        expect_config_error("{" + quad + R"(, "extra_knob": 1})", "unknown field");
    }
    SUBCASE("unknown nested field") {
        expect_config_error("{" + quad + R"(, "watermark": {"color": "blue"}})",
                            "watermark.color");
    }
    SUBCASE("sampling section missing or empty") {
        expect_config_error(R"({"plant": {"quadrotor": {}}})", "sampling");
        expect_config_error(R"({"plant": {"quadrotor": {}}, "sampling": {"T_bar": 1.0}})",
                            "at least one of 'T' or 'grid'");
    }
    SUBCASE("period exceeds T_bar") {
        expect_config_error(
            R"({"plant": {"quadrotor": {}}, "sampling": {"T": 0.5, "T_bar": 0.2}})",
            "sampling.T");
    }
    SUBCASE("grid entry exceeds T_bar") {
        expect_config_error(
            R"({"plant": {"quadrotor": {}}, "sampling": {"grid": [0.1, 0.5], "T_bar": 0.2}})",
            "exceeds T_bar");
    }
    SUBCASE("reference period not on the grid") {
        expect_config_error(
            R"({"plant": {"quadrotor": {}},
                "sampling": {"grid": [0.1, 0.2], "reference_T": 0.15}})",
            "sampling.reference_T");
    }
    SUBCASE("ragged plant matrix") {
        expect_config_error(R"({
            "plant": {"matrices": {"a": [[0, 1], [2]], "b": [[1], [1]], "c": [[1, 0]],
                                   "q_c": [[1, 0], [0, 1]], "r_c": [[1]]}},
            "sampling": {"T": 0.1}
        })",
                            "plant.matrices.a");
    }
    SUBCASE("missing plant matrix") {
        expect_config_error(R"({
            "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]]}},
            "sampling": {"T": 0.1}
        })",
                            "plant.matrices.r_c");
    }
    SUBCASE("warmup at or above horizon") {
        expect_config_error(
            "{" + quad + R"(, "simulation": {"horizon": 100, "warmup": 100}})",
            "simulation.warmup");
    }
    SUBCASE("negative seed") {
        expect_config_error("{" + quad + R"(, "simulation": {"seed": -3}})", "simulation.seed");
    }
    SUBCASE("attack with a missing field") {
        expect_config_error(
            "{" + quad + R"(, "attack": {"record_start": 10, "record_len": 50}})",
            "attack.replay_start");
    }
    SUBCASE("attack replaying before the recording completes") {
        expect_config_error(
            "{" + quad + R"(, "attack": {"record_start": 100, "record_len": 200,
                                         "replay_start": 250}})",
            "replay_start");
    }
    SUBCASE("attack recording shorter than the window") {
        expect_config_error(
            "{" + quad + R"(, "attack": {"record_start": 100, "record_len": 4,
                                         "replay_start": 300}})",
            "record_len");
    }
    SUBCASE("attack leaving no full window before the horizon") {
        expect_config_error(
            "{" + quad + R"(, "simulation": {"horizon": 1000},
                            "attack": {"record_start": 100, "record_len": 200,
                                       "replay_start": 995}})",
            "leaves no full detection window");
    }
    SUBCASE("empty output directory") {
        expect_config_error("{" + quad + R"(, "output_dir": ""})", "output_dir");
    }
    SUBCASE("malformed JSON") {
        expect_config_error("{" + quad, "not valid JSON");
    }
    SUBCASE("top level not an object") {
        expect_config_error("[1, 2, 3]", "top level must be an object");
    }
}

TEST_CASE("weight shape problems surface when the weights are resolved") {
    // A 2x2 weight parses fine but cannot apply to the 12-state quadrotor.
    const ScenarioConfig bad_w = parse_config(R"({
        "plant": {"quadrotor": {}},
        "weights": {"w": [[1.0, 0.0], [0.0, 1.0]]},
        "sampling": {"T": 0.1}
    })");
    try {
        (void)bad_w.resolve_weights(bad_w.continuous());
        FAIL_CHECK("expected ConfigError for a 2x2 state weight");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("weights.w") != std::string::npos);
        CHECK(what.find("12x12") != std::string::npos);
    }

    // The input weight must be positive definite.
    const ScenarioConfig bad_u = parse_config(R"({
        "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                               "r_c": [[1]]}},
        "weights": {"u": [[0.0]]},
        "sampling": {"T": 1.0}
    })");
    try {
        (void)bad_u.resolve_weights(bad_u.continuous());
        FAIL_CHECK("expected ConfigError for a singular input weight");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("weights.u") != std::string::npos);
    }
}

TEST_CASE("serialize and parse round-trip byte-stably") {
    SUBCASE("quadrotor scenario with grid and attack") {
        const ScenarioConfig cfg = parse_config(R"({
            "plant": {"quadrotor": {"mass": 1.1, "process_noise_intensity": 0.002}},
            "weights": {"w": 4.0},
            "sampling": {"grid": [0.02, 0.05, 0.1], "T_bar": 0.15, "reference_T": 0.02},
            "watermark": {"budget_mu": 0.5, "enabled": true},
            "detector": {"window": 8, "false_alarm_prob": 0.02},
            "simulation": {"horizon": 3000, "trials": 20, "seed": 7, "warmup": 100,
                           "settle": 16},
            "attack": {"record_start": 200, "record_len": 400, "replay_start": 700},
            "output_dir": "artifacts"
        })");
        const std::string once = serialize_config(cfg);
        const ScenarioConfig reparsed = parse_config(once);
        const std::string twice = serialize_config(reparsed);
        CHECK(once == twice);
        CHECK(once.back() == '\n');

        REQUIRE(reparsed.quadrotor.has_value());
        CHECK(reparsed.quadrotor->mass == 1.1);
        CHECK(reparsed.quad_process_noise == 0.002);
        REQUIRE(reparsed.weight_w.scale.has_value());
        CHECK(*reparsed.weight_w.scale == 4.0);
        CHECK(reparsed.sample_grid == cfg.sample_grid);
        CHECK(reparsed.t_bar == 0.15);
        CHECK(reparsed.budget_mu == 0.5);
        CHECK(reparsed.window == 8);
        CHECK(reparsed.settle == 16);
        REQUIRE(reparsed.attack.has_value());
        CHECK(reparsed.attack->replay_start == 700);
        CHECK(reparsed.output_dir == "artifacts");
    }

    SUBCASE("explicit plant with matrix weights") {
        const ScenarioConfig cfg = parse_config(R"({
            "plant": {"matrices": {
                "a": [[0.0, 1.0], [-2.0, -0.5]],
                "b": [[0.0], [1.0]],
                "c": [[1.0, 0.0]],
                "q_c": [[0.3, 0.0], [0.0, 0.1]],
                "r_c": [[0.02]]
            }},
            "weights": {"w": [[2.0, 0.0], [0.0, 1.0]], "u": 0.5},
            "sampling": {"T": 0.2}
        })");
        const std::string once = serialize_config(cfg);
        const ScenarioConfig reparsed = parse_config(once);
        CHECK(serialize_config(reparsed) == once);
        REQUIRE(reparsed.explicit_plant.has_value());
        CHECK(reparsed.explicit_plant->a(1, 0) == -2.0);
        CHECK(reparsed.weight_w.matrix(0, 0) == 2.0);
        REQUIRE(reparsed.weight_u.scale.has_value());
        CHECK(*reparsed.weight_u.scale == 0.5);
        REQUIRE(reparsed.sample_period.has_value());
        CHECK(*reparsed.sample_period == 0.2);
    }
}

TEST_CASE("design command writes the golden-ratio scenario faithfully") {
    const fs::path dir = fresh_dir("design_golden");
    const fs::path out_a = dir / "a";
    const fs::path out_b = dir / "b";
    const fs::path config = write_text(dir / "golden.json", golden_config(out_a.string()));

    std::string err;
    const int code = run_cli({"design", "--config", config.string()}, &err);
    CHECK(code == 0);
    CHECK(err.find("swm-status: status=ok command=design") != std::string::npos);
    REQUIRE(fs::exists(out_a / "design.csv"));
    REQUIRE(fs::exists(out_a / "design_summary.txt"));

    const std::string csv = slurp(out_a / "design.csv");
    CHECK(header_of(csv) == "name,row,col,value");

    // Scalar golden-ratio chain, recomputed here with plain arithmetic.  With
    // every discrete matrix equal to 1 the filter and regulator Riccati
    // solutions are both phi, the gains are +-1/phi, and the replay
    // sensitivity is (1 - 1/phi)^2.
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double gain_k = 1.0 / phi;
    const double gain_l = -1.0 / phi;
    const double a_script = (1.0 + gain_l) * (1.0 - gain_k);
    const double resid_cov = phi + 1.0;
    const double weight = 1.0 / resid_cov;                   // C' P^-1 C
    const double q_star = 1.0 / (1.0 + phi);                 // mu / (U + B'SB)
    const double steady_u = q_star / (1.0 - a_script * a_script);
    const double shift = 2.0 * weight * steady_u * 10.0;     // window 10

    CHECK(design_value(csv, "sample_period", 0, 0) == 1.0);
    CHECK(design_value(csv, "gain_K", 0, 0) == doctest::Approx(gain_k).epsilon(1e-12));
    CHECK(design_value(csv, "gain_L", 0, 0) == doctest::Approx(gain_l).epsilon(1e-12));
    CHECK(design_value(csv, "spectral_radius_A", 0, 0) ==
          doctest::Approx(a_script).epsilon(1e-12));
    CHECK(design_value(csv, "cov_Q", 0, 0) == doctest::Approx(q_star).epsilon(1e-9));
    CHECK(design_value(csv, "steady_U", 0, 0) == doctest::Approx(steady_u).epsilon(1e-9));
    CHECK(design_value(csv, "expected_shift", 0, 0) == doctest::Approx(shift).epsilon(1e-9));
    CHECK(design_value(csv, "cost_increase", 0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(design_value(csv, "detector_threshold", 0, 0) ==
          doctest::Approx(chi2_quantile(10, 0.95)).epsilon(1e-12));
    CHECK(design_value(csv, "nominal_cost", 0, 0) > 0.0);

    const std::string summary = slurp(out_a / "design_summary.txt");
    CHECK(summary.find("expected shift") != std::string::npos);
    CHECK(summary.find("stable; replay invisible without watermark") != std::string::npos);

    // The artifact is byte-stable: a second run into another directory
    // produces the identical file.
    const fs::path config_b = write_text(dir / "golden_b.json", golden_config(out_b.string()));
    CHECK(run_cli({"design", "--config", config_b.string()}) == 0);
    CHECK(slurp(out_b / "design.csv") == csv);
}

TEST_CASE("cli exit codes distinguish usage, validation, and numerical failures") {
    const fs::path dir = fresh_dir("exit_codes");

    SUBCASE("success returns zero") {
        const fs::path config =
            write_text(dir / "ok.json", golden_config((dir / "ok_out").string()));
        std::string err;
        CHECK(run_cli({"design", "--config", config.string()}, &err) == 0);
        CHECK(err.find("status=ok") != std::string::npos);
    }
    SUBCASE("validation problems return one") {
        const fs::path config = write_text(dir / "zero_mu.json", golden_config(
            (dir / "mu_out").string(), R"(  "detector": {"window": 10},)" "\n"));
        // Rewrite with an invalid budget; the validation error must name it.
        write_text(config, R"({
            "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                                   "r_c": [[1]]}},
            "sampling": {"T": 1.0},
            "watermark": {"budget_mu": 0.0}
        })");
        std::string err;
        CHECK(run_cli({"design", "--config", config.string()}, &err) == 1);
        CHECK(err.find("status=error") != std::string::npos);
        CHECK(err.find("kind=validation") != std::string::npos);
        CHECK(err.find("watermark.budget_mu") != std::string::npos);
    }
    SUBCASE("numerical failures return two") {
        // Unstable continuous mode with a zero input column: the regulator
        // Riccati recursion cannot converge.
        const fs::path config = write_text(dir / "unstabilizable.json", R"({
            "plant": {"matrices": {"a": [[2.0]], "b": [[0.0]], "c": [[1.0]],
                                   "q_c": [[1.0]], "r_c": [[1.0]]}},
            "sampling": {"T": 1.0}
        })");
        std::string err;
        CHECK(run_cli({"design", "--config", config.string()}, &err) == 2);
        CHECK(err.find("kind=numerical") != std::string::npos);
    }
    SUBCASE("usage problems return one") {
        std::string err;
        CHECK(run_cli({"design"}, &err) == 1);  // --config missing
        CHECK(run_cli({"frobnicate"}, &err) == 1);
        CHECK(run_cli({"design", "--config", (dir / "missing.json").string()}, &err) == 1);
        const fs::path config =
            write_text(dir / "usage.json", golden_config((dir / "usage_out").string()));
        CHECK(run_cli({"design", "--config", config.string(), "--frobnicate"}, &err) == 1);
        CHECK(run_cli({"roc", "--config", config.string(), "--trials", "0"}, &err) == 1);
    }
    SUBCASE("help returns zero") {
        // CLI11 prints help to stdout; silence it for the test log.
        std::ostringstream captured;
        std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
        const int code = run_cli({"--help"});
        std::cout.rdbuf(old);
        CHECK(code == 0);
        CHECK(captured.str().find("design") != std::string::npos);
    }
    SUBCASE("commands report their missing config sections") {
        // sampling.T only: sweep, roc and table all need more.
        const fs::path config =
            write_text(dir / "t_only.json", golden_config((dir / "t_only_out").string()));
        std::string err;
        CHECK(run_cli({"sweep", "--config", config.string()}, &err) == 1);
        CHECK(err.find("sampling.grid") != std::string::npos);
        CHECK(run_cli({"table", "--config", config.string()}, &err) == 1);
        CHECK(run_cli({"roc", "--config", config.string()}, &err) == 1);
    }
}

TEST_CASE("simulate artifacts are byte-deterministic in the seed") {
    const fs::path dir = fresh_dir("simulate_determinism");
    const fs::path config = write_text(dir / "sim.json", R"({
        "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                               "r_c": [[1]]}},
        "sampling": {"T": 1.0},
        "watermark": {"budget_mu": 1.0},
        "simulation": {"horizon": 2000, "warmup": 100},
        "attack": {"record_start": 400, "record_len": 400, "replay_start": 1000}
    })");

    const auto simulate_into = [&](const std::string& sub, const std::string& seed) {
        const fs::path out = dir / sub;
        std::string err;
        const int code = run_cli({"simulate", "--config", config.string(), "--out",
                                  out.string(), "--seed", seed},
                                 &err);
        INFO("stderr: " << err);
        REQUIRE(code == 0);
        return out;
    };

    const fs::path out_a = simulate_into("a", "7");
    const fs::path out_b = simulate_into("b", "7");
    const fs::path out_c = simulate_into("c", "8");

    const std::string trace_a = slurp(out_a / "gk_trace.csv");
    CHECK(header_of(trace_a) == "step,g,threshold,alarm,attack_active");
    CHECK(trace_a == slurp(out_b / "gk_trace.csv"));
    CHECK(trace_a != slurp(out_c / "gk_trace.csv"));
    CHECK(slurp(out_a / "simulate_summary.json") == slurp(out_b / "simulate_summary.json"));

    // The summary records the scenario shape and both eras.
    const std::string summary = slurp(out_a / "simulate_summary.json");
    CHECK(summary.find("\"watermark_applied\": true") != std::string::npos);
    CHECK(summary.find("\"mean_g_clean\"") != std::string::npos);
    CHECK(summary.find("\"mean_g_attack\"") != std::string::npos);
    CHECK(summary.find("\"estimator_mismatch_norm\"") != std::string::npos);

    // 2000 data rows plus header plus trailing newline.
    std::size_t lines = 0;
    for (char ch : trace_a) lines += ch == '\n';
    CHECK(lines == 2001);
}

TEST_CASE("sweep, roc, and table artifacts have the documented shapes") {
    const fs::path dir = fresh_dir("artifact_shapes");

    SUBCASE("sweep is deterministic and marks exactly one argmax") {
        const fs::path config = write_text(dir / "sweep.json", R"({
            "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                                   "r_c": [[1]]}},
            "sampling": {"grid": [0.5, 1.0], "T_bar": 1.0},
            "watermark": {"budget_mu": 1.0}
        })");
        const fs::path out_a = dir / "sweep_a";
        const fs::path out_b = dir / "sweep_b";
        REQUIRE(run_cli({"sweep", "--config", config.string(), "--out", out_a.string()}) == 0);
        REQUIRE(run_cli({"sweep", "--config", config.string(), "--out", out_b.string()}) == 0);
        const std::string csv = slurp(out_a / "delta_g_vs_T.csv");
        CHECK(csv == slurp(out_b / "delta_g_vs_T.csv"));
        CHECK(header_of(csv) ==
              "T,expected_shift,cost_increase,nominal_cost,spectral_radius,status,is_argmax");

        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        int rows = 0;
        int argmax_rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            CHECK(line.find(",ok,") != std::string::npos);
            if (line.size() >= 2 && line.substr(line.size() - 2) == ",1") ++argmax_rows;
        }
        CHECK(rows == 2);
        CHECK(argmax_rows == 1);
        CHECK(fs::exists(out_a / "sweep_summary.txt"));
    }

    SUBCASE("roc writes a curve per period and an AUC summary") {
        const fs::path config = write_text(dir / "roc.json", R"({
            "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                                   "r_c": [[1]]}},
            "sampling": {"grid": [1.0], "T_bar": 1.0},
            "watermark": {"budget_mu": 1.0},
            "simulation": {"horizon": 600, "trials": 6, "warmup": 50},
            "attack": {"record_start": 100, "record_len": 200, "replay_start": 300}
        })");
        const fs::path out = dir / "roc_out";
        REQUIRE(run_cli({"roc", "--config", config.string(), "--out", out.string()}) == 0);
        REQUIRE(fs::exists(out / "auc_summary.csv"));
        REQUIRE(fs::exists(out / "roc_T1.csv"));
        const std::string auc = slurp(out / "auc_summary.csv");
        CHECK(header_of(auc) ==
              "T,auc,auc_half_width,auc_baseline,auc_baseline_half_width,"
              "n_clean,n_attack,status");
        CHECK(auc.find("\n1,") != std::string::npos);
        CHECK(auc.find(",ok") != std::string::npos);
        CHECK(header_of(slurp(out / "roc_T1.csv")) == "false_alarm_rate,detection_rate");
    }

    SUBCASE("table reports a unit ratio at the reference period") {
        const fs::path config = write_text(dir / "table.json", R"({
            "plant": {"matrices": {"a": [[0]], "b": [[1]], "c": [[1]], "q_c": [[1]],
                                   "r_c": [[1]]}},
            "sampling": {"grid": [0.5, 1.0], "T_bar": 1.0, "reference_T": 0.5},
            "watermark": {"budget_mu": 1.0}
        })");
        const fs::path out = dir / "table_out";
        REQUIRE(run_cli({"table", "--config", config.string(), "--out", out.string()}) == 0);
        const std::string csv = slurp(out / "cost_ratios.csv");
        CHECK(header_of(csv) ==
              "T,nominal_cost,ratio,watermarked_cost,empirical_cost,status");

        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        REQUIRE(std::getline(in, line));  // reference row first (grid order)
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 6);
        CHECK(cells[0] == "0.5");
        CHECK(std::stod(cells[2]) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cells[4].empty());  // no Monte Carlo trials requested
        CHECK(cells[5] == "ok");
    }
}
