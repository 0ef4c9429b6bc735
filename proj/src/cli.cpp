#include "swm/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swm/numerics.hpp"
#include "swm/rng.hpp"
#include "swm/sim.hpp"
#include "swm/watermark.hpp"

namespace swm {

namespace {

namespace fs = std::filesystem;

// Shortest round-trip decimal form, locale-independent; NaN prints as an
// empty cell so spreadsheet tools treat it as missing.
std::string format_num(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw ConfigError("output: cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void append_matrix(std::string& csv, const std::string& name, const Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            csv += name + "," + std::to_string(r) + "," + std::to_string(c) + "," +
                   format_num(m(r, c)) + "\n";
        }
    }
}

void append_scalar(std::string& csv, const std::string& name, double v) {
    csv += name + ",0,0," + format_num(v) + "\n";
}

struct Scenario {
    ContinuousPlant cont;
    CostWeights weights;
};

Scenario open_scenario(const ScenarioConfig& cfg) {
    Scenario s;
    s.cont = cfg.continuous();
    s.weights = cfg.resolve_weights(s.cont);
    return s;
}

double require_period(const ScenarioConfig& cfg, const char* command) {
    if (!cfg.sample_period) {
        throw ConfigError(std::string("sampling.T: required for the ") + command + " command");
    }
    return *cfg.sample_period;
}

}  // namespace

void run_design(const ScenarioConfig& cfg) {
    const Scenario s = open_scenario(cfg);
    const double t = require_period(cfg, "design");
    const DiscretePlant plant = discretize(s.cont, t);
    const ClosedLoopDesign design = design_closed_loop(plant, s.weights);
    const StabilityVerdict verdict = classify_A_script(design);
    const WatermarkDesign wm =
        optimize_watermark_fixed_T(plant, design, s.weights, cfg.budget_mu, cfg.window);
    const DetectorConfig detector =
        make_detector(plant.output_dim(), cfg.window, cfg.false_alarm_prob);

    std::string csv = "name,row,col,value\n";
    append_scalar(csv, "sample_period", t);
    append_scalar(csv, "expected_shift", wm.expected_shift);
    append_scalar(csv, "cost_increase", wm.cost_increase);
    append_scalar(csv, "nominal_cost", design.nominal_cost);
    append_scalar(csv, "spectral_radius_A", verdict.spectral_radius);
    append_scalar(csv, "detector_threshold", detector.threshold);
    append_matrix(csv, "cov_Q", wm.cov_q);
    append_matrix(csv, "steady_U", wm.steady_u);
    append_matrix(csv, "gain_K", design.k);
    append_matrix(csv, "gain_L", design.l);

    std::string summary;
    summary += "fixed-period watermark design\n";
    summary += "  sampling period:       " + format_num(t) + " s\n";
    summary += "  state/input/output:    " + std::to_string(plant.state_dim()) + "/" +
               std::to_string(plant.input_dim()) + "/" + std::to_string(plant.output_dim()) +
               "\n";
    summary += "  replay sensitivity:    spectral radius " + format_num(verdict.spectral_radius) +
               (verdict.stable ? " (stable; replay invisible without watermark)\n"
                               : " (unstable; replay detectable unaided)\n");
    summary += "  watermark budget:      " + format_num(cfg.budget_mu) + "\n";
    summary += "  cost increase:         " + format_num(wm.cost_increase) + "\n";
    summary += "  nominal cost:          " + format_num(design.nominal_cost) + "\n";
    summary += "  expected shift:        " + format_num(wm.expected_shift) + " (window " +
               std::to_string(cfg.window) + ")\n";
    summary += "  detector threshold:    " + format_num(detector.threshold) + " (dof " +
               std::to_string(detector.dof) + ", alpha " + format_num(cfg.false_alarm_prob) +
               ")\n";

    const fs::path out(cfg.output_dir);
    write_file_atomic(out / "design.csv", csv);
    write_file_atomic(out / "design_summary.txt", summary);
}

void run_sweep(const ScenarioConfig& cfg, bool refine) {
    const Scenario s = open_scenario(cfg);
    if (cfg.sample_grid.empty()) {
        throw ConfigError("sampling.grid: required for the sweep command");
    }
    const SweepResult res = sweep_sampling_period(s.cont, s.weights, cfg.sample_grid, cfg.t_bar,
                                                  cfg.budget_mu, cfg.window, refine);

    std::size_t best = res.rows.size();
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        if (res.rows[i].status != "ok") continue;
        if (best == res.rows.size() ||
            res.rows[i].expected_shift > res.rows[best].expected_shift) {
            best = i;
        }
    }

    std::string csv = "T,expected_shift,cost_increase,nominal_cost,spectral_radius,status,is_argmax\n";
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const SweepRow& row = res.rows[i];
        csv += format_num(row.t) + "," + format_num(row.expected_shift) + "," +
               format_num(row.cost_increase) + "," + format_num(row.nominal_cost) + "," +
               format_num(row.spectral_radius) + "," + row.status + "," +
               (i == best ? "1" : "0") + "\n";
    }

    std::string summary;
    summary += "sampling-period sweep (" + std::to_string(res.rows.size()) + " grid points)\n";
    summary += "  argmax T:        " + format_num(res.argmax_t) + " s" +
               (res.refined ? " (golden-section refined)\n" : "\n");
    summary += "  shift at argmax: " + format_num(res.argmax_shift) + "\n";
    for (const SweepRow& row : res.rows) {
        if (row.status != "ok") {
            summary += "  T=" + format_num(row.t) + ": " + row.status +
                       (row.detail.empty() ? "" : " (" + row.detail + ")") + "\n";
        }
    }

    const fs::path out(cfg.output_dir);
    write_file_atomic(out / "delta_g_vs_T.csv", csv);
    write_file_atomic(out / "sweep_summary.txt", summary);
    if (std::isnan(res.argmax_t)) {
        throw ConvergenceError("sweep: no sampling period produced a usable design",
                               std::numeric_limits<double>::quiet_NaN());
    }
}

void run_simulate(const ScenarioConfig& cfg) {
    const Scenario s = open_scenario(cfg);
    const double t = require_period(cfg, "simulate");
    const DiscretePlant plant = discretize(s.cont, t);
    const ClosedLoopDesign design = design_closed_loop(plant, s.weights);
    const StabilityVerdict verdict = classify_A_script(design);
    const bool use_watermark = cfg.watermark_enabled && verdict.stable;
    const WatermarkDesign wm =
        use_watermark
            ? optimize_watermark_fixed_T(plant, design, s.weights, cfg.budget_mu, cfg.window)
            : zero_watermark(plant);
    const DetectorConfig detector =
        make_detector(plant.output_dim(), cfg.window, cfg.false_alarm_prob);
    const std::uint64_t seed = derive_stream(cfg.seed, "simulate");
    const SimTrace trace =
        simulate(plant, design, wm, detector, cfg.attack, cfg.horizon, seed);

    std::string csv = "step,g,threshold,alarm,attack_active\n";
    for (Eigen::Index k = 0; k < cfg.horizon; ++k) {
        csv += std::to_string(k) + "," + format_num(trace.g[k]) + "," +
               format_num(detector.threshold) + "," +
               std::to_string(trace.alarm[static_cast<std::size_t>(k)]) + "," +
               std::to_string(trace.attack_active[static_cast<std::size_t>(k)]) + "\n";
    }

    // Post-warmup statistics on full windows; alarm rates on disjoint
    // windows so the threshold calibration is directly visible.
    const Eigen::Index w = detector.window;
    const Eigen::Index clean_begin = std::max<Eigen::Index>(cfg.warmup, w - 1);
    const Eigen::Index clean_end = cfg.attack ? cfg.attack->replay_start : cfg.horizon;
    double clean_sum = 0.0;
    Eigen::Index clean_count = 0;
    double clean_alarms = 0.0;
    Eigen::Index clean_windows = 0;
    for (Eigen::Index k = clean_begin; k < clean_end; ++k) {
        clean_sum += trace.g[k];
        ++clean_count;
    }
    for (Eigen::Index k = clean_begin; k < clean_end; k += w) {
        clean_alarms += trace.alarm[static_cast<std::size_t>(k)];
        ++clean_windows;
    }

    nlohmann::json summary;
    summary["sample_period"] = t;
    summary["horizon"] = cfg.horizon;
    summary["window"] = w;
    summary["dof"] = detector.dof;
    summary["threshold"] = detector.threshold;
    summary["false_alarm_prob"] = detector.false_alarm_prob;
    summary["watermark_applied"] = use_watermark;
    summary["spectral_radius_A"] = verdict.spectral_radius;
    summary["expected_shift"] = wm.expected_shift;
    summary["expected_mean_g"] = static_cast<double>(detector.dof);
    summary["mean_g_clean"] = clean_count > 0 ? clean_sum / clean_count
                                              : std::numeric_limits<double>::quiet_NaN();
    summary["alarm_rate_clean"] = clean_windows > 0
                                      ? clean_alarms / static_cast<double>(clean_windows)
                                      : std::numeric_limits<double>::quiet_NaN();
    if (cfg.attack) {
        const Eigen::Index settle = cfg.settle < 0 ? w : cfg.settle;
        const Eigen::Index attack_begin =
            cfg.attack->replay_start + std::max<Eigen::Index>(settle, w - 1);
        const Eigen::Index attack_end =
            std::min(cfg.horizon, cfg.attack->replay_start + cfg.attack->record_len);
        double attack_sum = 0.0;
        Eigen::Index attack_count = 0;
        double attack_alarms = 0.0;
        Eigen::Index attack_windows = 0;
        for (Eigen::Index k = attack_begin; k < attack_end; ++k) {
            attack_sum += trace.g[k];
            ++attack_count;
        }
        for (Eigen::Index k = attack_begin; k < attack_end; k += w) {
            attack_alarms += trace.alarm[static_cast<std::size_t>(k)];
            ++attack_windows;
        }
        summary["attack"] = {
            {"record_start", cfg.attack->record_start},
            {"record_len", cfg.attack->record_len},
            {"replay_start", cfg.attack->replay_start},
            {"mean_g_attack", attack_count > 0
                                  ? attack_sum / attack_count
                                  : std::numeric_limits<double>::quiet_NaN()},
            {"alarm_rate_attack", attack_windows > 0
                                      ? attack_alarms / static_cast<double>(attack_windows)
                                      : std::numeric_limits<double>::quiet_NaN()},
            {"estimator_mismatch_norm", trace.zeta.size() > 0
                                            ? trace.zeta.norm()
                                            : std::numeric_limits<double>::quiet_NaN()},
        };
    }

    const fs::path out(cfg.output_dir);
    write_file_atomic(out / "gk_trace.csv", csv);
    write_file_atomic(out / "simulate_summary.json", summary.dump(2) + "\n");
}

void run_roc(const ScenarioConfig& cfg) {
    const Scenario s = open_scenario(cfg);
    if (cfg.sample_grid.empty()) {
        throw ConfigError("sampling.grid: required for the roc command");
    }
    if (!cfg.attack) throw ConfigError("attack: required for the roc command");
    const std::uint64_t roc_seed = derive_stream(cfg.seed, "roc");

    std::string auc_csv =
        "T,auc,auc_half_width,auc_baseline,auc_baseline_half_width,n_clean,n_attack,status\n";
    int ok_rows = 0;
    std::string first_error;
    const fs::path out(cfg.output_dir);
    for (std::size_t i = 0; i < cfg.sample_grid.size(); ++i) {
        const double t = cfg.sample_grid[i];
        const std::uint64_t seed_t = derive_stream(roc_seed, "period", i);
        std::string status = "ok";
        try {
            const DiscretePlant plant = discretize(s.cont, t);
            const ClosedLoopDesign design = design_closed_loop(plant, s.weights);
            const StabilityVerdict verdict = classify_A_script(design);
            const bool use_watermark = cfg.watermark_enabled && verdict.stable;
            if (!verdict.stable) status = "watermark-unnecessary";
            const WatermarkDesign wm =
                use_watermark ? optimize_watermark_fixed_T(plant, design, s.weights,
                                                           cfg.budget_mu, cfg.window)
                              : zero_watermark(plant);
            const DetectorConfig detector =
                make_detector(plant.output_dim(), cfg.window, cfg.false_alarm_prob);
            const RocResult with = roc_curve(plant, design, wm, detector, *cfg.attack,
                                             cfg.horizon, cfg.trials, seed_t, cfg.settle);
            const RocResult base =
                roc_curve(plant, design, zero_watermark(plant), detector, *cfg.attack,
                          cfg.horizon, cfg.trials, seed_t, cfg.settle);

            std::string curve = "false_alarm_rate,detection_rate\n";
            for (const RocPoint& pt : with.points) {
                curve += format_num(pt.false_alarm_rate) + "," +
                         format_num(pt.detection_rate) + "\n";
            }
            write_file_atomic(out / ("roc_T" + format_num(t) + ".csv"), curve);

            auc_csv += format_num(t) + "," + format_num(with.auc) + "," +
                       format_num(half_width_99(with.per_trial_auc)) + "," +
                       format_num(base.auc) + "," +
                       format_num(half_width_99(base.per_trial_auc)) + "," +
                       std::to_string(with.n_no_attack) + "," + std::to_string(with.n_attack) +
                       "," + status + "\n";
            ++ok_rows;
        } catch (const std::exception& e) {
            if (first_error.empty()) first_error = e.what();
            auc_csv += format_num(t) + ",,,,,,," + "failed\n";
        }
    }
    write_file_atomic(out / "auc_summary.csv", auc_csv);
    if (ok_rows == 0) {
        throw ConvergenceError("roc: every sampling period failed (" + first_error + ")",
                               std::numeric_limits<double>::quiet_NaN());
    }
}

void run_table(const ScenarioConfig& cfg, int mc_trials) {
    const Scenario s = open_scenario(cfg);
    if (cfg.sample_grid.empty()) {
        throw ConfigError("sampling.grid: required for the table command");
    }
    if (!cfg.reference_t) {
        throw ConfigError("sampling.reference_T: required for the table command");
    }
    const std::vector<CostRatioRow> rows =
        cost_ratio_table(s.cont, s.weights, cfg.sample_grid, *cfg.reference_t, cfg.budget_mu,
                         cfg.horizon, mc_trials, derive_stream(cfg.seed, "table"));

    std::string csv = "T,nominal_cost,ratio,watermarked_cost,empirical_cost,status\n";
    for (const CostRatioRow& row : rows) {
        csv += format_num(row.t) + "," + format_num(row.nominal_cost) + "," +
               format_num(row.ratio) + "," + format_num(row.watermarked_cost) + "," +
               format_num(row.empirical_cost) + "," + row.status + "\n";
    }
    write_file_atomic(fs::path(cfg.output_dir) / "cost_ratios.csv", csv);
}

namespace {

std::string quote_message(const std::string& msg) {
    std::string out;
    out.reserve(msg.size() + 2);
    out += '"';
    for (char c : msg) {
        if (c == '"') {
            out += '\'';
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

void status_line(const std::string& state, const std::string& command,
                 const std::string& extra) {
    std::cerr << "swm-status: status=" << state << " command=" << command
              << (extra.empty() ? "" : " " + extra) << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Physical-watermark design and replay-attack detection toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    CliOptions opt;
    std::string out_dir;
    std::uint64_t seed = 0;
    int trials = 0;
    bool refine = false;

    const auto add_common = [&](CLI::App* sub, bool with_refine) {
        sub->add_option("--config", config_path, "scenario config file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "top-level seed (overrides config)");
        sub->add_option("--trials", trials, "Monte Carlo trials (overrides config)")
            ->check(CLI::PositiveNumber);
        if (with_refine) {
            sub->add_flag("--refine", refine, "golden-section refinement of the argmax period");
        }
    };
    CLI::App* cmd_design = app.add_subcommand("design", "optimal watermark at a fixed period");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "detector shift across sampling periods");
    CLI::App* cmd_simulate = app.add_subcommand("simulate", "one closed-loop trace with g_k");
    CLI::App* cmd_roc = app.add_subcommand("roc", "detection ROC per sampling period");
    CLI::App* cmd_table = app.add_subcommand("table", "cost ratios across sampling periods");
    add_common(cmd_design, false);
    add_common(cmd_sweep, true);
    add_common(cmd_simulate, false);
    add_common(cmd_roc, false);
    add_common(cmd_table, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        status_line("error", "none", "kind=usage message=" + quote_message(e.what()));
        return code == 0 ? 0 : 1;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        ScenarioConfig cfg = load_config_file(config_path);
        if (sub->count("--out") > 0) cfg.output_dir = out_dir;
        if (sub->count("--seed") > 0) cfg.seed = seed;
        if (sub->count("--trials") > 0) cfg.trials = trials;

        if (command == "design") {
            run_design(cfg);
        } else if (command == "sweep") {
            run_sweep(cfg, refine);
        } else if (command == "simulate") {
            run_simulate(cfg);
        } else if (command == "roc") {
            run_roc(cfg);
        } else {
            run_table(cfg, sub->count("--trials") > 0 ? trials : 0);
        }
        status_line("ok", command, "output_dir=" + cfg.output_dir);
        return 0;
    } catch (const ConfigError& e) {
        status_line("error", command, "kind=validation message=" + quote_message(e.what()));
        return 1;
    } catch (const DimensionError& e) {
        status_line("error", command, "kind=validation message=" + quote_message(e.what()));
        return 1;
    } catch (const DomainError& e) {
        status_line("error", command, "kind=validation message=" + quote_message(e.what()));
        return 1;
    } catch (const ConvergenceError& e) {
        status_line("error", command, "kind=numerical message=" + quote_message(e.what()));
        return 2;
    } catch (const StabilityError& e) {
        status_line("error", command, "kind=numerical message=" + quote_message(e.what()));
        return 2;
    } catch (const ConditioningError& e) {
        status_line("error", command, "kind=numerical message=" + quote_message(e.what()));
        return 2;
    } catch (const std::exception& e) {
        status_line("error", command, "kind=internal message=" + quote_message(e.what()));
        return 2;
    }
}

}  // namespace swm
