#include "swm/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace swm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail(path + "." + item.key(), "unknown field");
    }
}

double as_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "must be a number");
    return j.get<double>();
}

double positive_number(const json& j, const std::string& field) {
    const double v = as_number(j, field);
    if (!(v > 0.0) || !std::isfinite(v)) fail(field, "must be positive and finite");
    return v;
}

std::int64_t as_integer(const json& j, const std::string& field) {
    if (!j.is_number_integer()) fail(field, "must be an integer");
    return j.get<std::int64_t>();
}

Mat parse_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "must be a non-empty array of rows");
    const auto& first = j.front();
    if (!first.is_array() || first.empty()) fail(field, "rows must be non-empty arrays");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(first.size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            fail(field, "rows must all have " + std::to_string(cols) + " entries");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = as_number(row[static_cast<std::size_t>(c)],
                                field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

WeightSpec parse_weight(const json& j, const std::string& field) {
    WeightSpec spec;
    if (j.is_number()) {
        spec.scale = as_number(j, field);
        if (!(*spec.scale >= 0.0) || !std::isfinite(*spec.scale)) {
            fail(field, "scalar weight must be nonnegative and finite");
        }
    } else if (j.is_array()) {
        spec.matrix = parse_matrix(j, field);
    } else {
        fail(field, "must be a scalar or a matrix (array of rows)");
    }
    return spec;
}

}  // namespace

Mat WeightSpec::resolve(Eigen::Index dim, const std::string& field) const {
    if (scale) return *scale * Mat::Identity(dim, dim);
    if (matrix.size() == 0) return Mat::Identity(dim, dim);
    if (matrix.rows() != dim || matrix.cols() != dim) {
        fail(field, "must be " + std::to_string(dim) + "x" + std::to_string(dim) + ", got " +
                        std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()));
    }
    return matrix;
}

ContinuousPlant ScenarioConfig::continuous() const {
    ContinuousPlant plant;
    if (quadrotor) {
        plant = quadrotor_hover_plant(*quadrotor);
        plant.q_c = quad_process_noise * Mat::Identity(12, 12);
        plant.r_c = quad_measurement_noise * Mat::Identity(4, 4);
    } else if (explicit_plant) {
        plant = *explicit_plant;
    } else {
        throw ConfigError("plant: no plant form present");
    }
    plant.validate();
    return plant;
}

CostWeights ScenarioConfig::resolve_weights(const ContinuousPlant& plant) const {
    CostWeights weights;
    weights.w = weight_w.resolve(plant.state_dim(), "weights.w");
    weights.u = weight_u.resolve(plant.input_dim(), "weights.u");
    try {
        sanitize_psd(weights.w, "weights.w");
        require_pd(weights.u, "weights.u");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return weights;
}

ScenarioConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(root, "config",
               {"plant", "weights", "sampling", "watermark", "detector", "simulation", "attack",
                "output_dir"});

    ScenarioConfig cfg;

    if (!root.contains("plant") || !root["plant"].is_object()) {
        fail("plant", "required object");
    }
    const json& plant = root["plant"];
    check_keys(plant, "plant", {"quadrotor", "matrices"});
    if (plant.contains("quadrotor") == plant.contains("matrices")) {
        fail("plant", "exactly one of 'quadrotor' or 'matrices' must be present");
    }
    if (plant.contains("quadrotor")) {
        const json& q = plant["quadrotor"];
        if (!q.is_object()) fail("plant.quadrotor", "must be an object");
        check_keys(q, "plant.quadrotor",
                   {"mass", "inertia_x", "inertia_y", "inertia_z", "gravity",
                    "process_noise_intensity", "measurement_noise_intensity"});
        QuadrotorParams params;
        if (q.contains("mass")) params.mass = positive_number(q["mass"], "plant.quadrotor.mass");
        if (q.contains("inertia_x")) {
            params.inertia_x = positive_number(q["inertia_x"], "plant.quadrotor.inertia_x");
        }
        if (q.contains("inertia_y")) {
            params.inertia_y = positive_number(q["inertia_y"], "plant.quadrotor.inertia_y");
        }
        if (q.contains("inertia_z")) {
            params.inertia_z = positive_number(q["inertia_z"], "plant.quadrotor.inertia_z");
        }
        if (q.contains("gravity")) {
            params.gravity = positive_number(q["gravity"], "plant.quadrotor.gravity");
        }
        cfg.quadrotor = params;
        if (q.contains("process_noise_intensity")) {
            cfg.quad_process_noise = positive_number(q["process_noise_intensity"],
                                                     "plant.quadrotor.process_noise_intensity");
        }
        if (q.contains("measurement_noise_intensity")) {
            cfg.quad_measurement_noise = positive_number(
                q["measurement_noise_intensity"], "plant.quadrotor.measurement_noise_intensity");
        }
    } else {
        const json& m = plant["matrices"];
        if (!m.is_object()) fail("plant.matrices", "must be an object");
        check_keys(m, "plant.matrices", {"a", "b", "c", "q_c", "r_c"});
        for (const char* key : {"a", "b", "c", "q_c", "r_c"}) {
            if (!m.contains(key)) fail(std::string("plant.matrices.") + key, "required matrix");
        }
        ContinuousPlant cp;
        cp.a = parse_matrix(m["a"], "plant.matrices.a");
        cp.b = parse_matrix(m["b"], "plant.matrices.b");
        cp.c = parse_matrix(m["c"], "plant.matrices.c");
        cp.q_c = parse_matrix(m["q_c"], "plant.matrices.q_c");
        cp.r_c = parse_matrix(m["r_c"], "plant.matrices.r_c");
        try {
            cp.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("plant.matrices: " + std::string(e.what()));
        }
        cfg.explicit_plant = std::move(cp);
    }

    if (root.contains("weights")) {
        const json& w = root["weights"];
        if (!w.is_object()) fail("weights", "must be an object");
        check_keys(w, "weights", {"w", "u"});
        if (w.contains("w")) cfg.weight_w = parse_weight(w["w"], "weights.w");
        if (w.contains("u")) cfg.weight_u = parse_weight(w["u"], "weights.u");
    }

    if (!root.contains("sampling") || !root["sampling"].is_object()) {
        fail("sampling", "required object");
    }
    const json& sampling = root["sampling"];
    check_keys(sampling, "sampling", {"T", "grid", "T_bar", "reference_T"});
    if (sampling.contains("T")) {
        cfg.sample_period = positive_number(sampling["T"], "sampling.T");
    }
    if (sampling.contains("grid")) {
        if (!sampling["grid"].is_array() || sampling["grid"].empty()) {
            fail("sampling.grid", "must be a non-empty array");
        }
        for (const auto& t : sampling["grid"]) {
            cfg.sample_grid.push_back(positive_number(t, "sampling.grid"));
        }
    }
    if (!cfg.sample_period && cfg.sample_grid.empty()) {
        fail("sampling", "at least one of 'T' or 'grid' must be present");
    }
    double max_t = cfg.sample_period.value_or(0.0);
    for (double t : cfg.sample_grid) max_t = std::max(max_t, t);
    cfg.t_bar = max_t;
    if (sampling.contains("T_bar")) {
        cfg.t_bar = positive_number(sampling["T_bar"], "sampling.T_bar");
    }
    if (cfg.sample_period && *cfg.sample_period > cfg.t_bar) {
        fail("sampling.T", "exceeds T_bar");
    }
    for (double t : cfg.sample_grid) {
        if (t > cfg.t_bar) fail("sampling.grid", "entry " + std::to_string(t) + " exceeds T_bar");
    }
    if (sampling.contains("reference_T")) {
        cfg.reference_t = positive_number(sampling["reference_T"], "sampling.reference_T");
        bool found = false;
        for (double t : cfg.sample_grid) {
            if (std::abs(t - *cfg.reference_t) <= 1e-12 * std::max(1.0, std::abs(t))) found = true;
        }
        if (!found) fail("sampling.reference_T", "must be one of sampling.grid");
    }

    if (root.contains("watermark")) {
        const json& wm = root["watermark"];
        if (!wm.is_object()) fail("watermark", "must be an object");
        check_keys(wm, "watermark", {"budget_mu", "enabled"});
        if (wm.contains("budget_mu")) {
            cfg.budget_mu = positive_number(wm["budget_mu"], "watermark.budget_mu");
        }
        if (wm.contains("enabled")) {
            if (!wm["enabled"].is_boolean()) fail("watermark.enabled", "must be a boolean");
            cfg.watermark_enabled = wm["enabled"].get<bool>();
        }
    }

    if (root.contains("detector")) {
        const json& det = root["detector"];
        if (!det.is_object()) fail("detector", "must be an object");
        check_keys(det, "detector", {"window", "false_alarm_prob"});
        if (det.contains("window")) {
            const std::int64_t w = as_integer(det["window"], "detector.window");
            if (w < 1) fail("detector.window", "must be >= 1");
            cfg.window = static_cast<int>(w);
        }
        if (det.contains("false_alarm_prob")) {
            const double a = as_number(det["false_alarm_prob"], "detector.false_alarm_prob");
            if (!(a > 0.0) || !(a < 1.0)) fail("detector.false_alarm_prob", "must lie in (0, 1)");
            cfg.false_alarm_prob = a;
        }
    }

    if (root.contains("simulation")) {
        const json& sim = root["simulation"];
        if (!sim.is_object()) fail("simulation", "must be an object");
        check_keys(sim, "simulation", {"horizon", "trials", "seed", "warmup", "settle"});
        if (sim.contains("horizon")) {
            const std::int64_t h = as_integer(sim["horizon"], "simulation.horizon");
            if (h < 1) fail("simulation.horizon", "must be >= 1");
            cfg.horizon = h;
        }
        if (sim.contains("trials")) {
            const std::int64_t t = as_integer(sim["trials"], "simulation.trials");
            if (t < 1) fail("simulation.trials", "must be >= 1");
            cfg.trials = static_cast<int>(t);
        }
        if (sim.contains("seed")) {
            if (!sim["seed"].is_number_unsigned()) {
                fail("simulation.seed", "must be a nonnegative integer");
            }
            cfg.seed = sim["seed"].get<std::uint64_t>();
        }
        if (sim.contains("warmup")) {
            const std::int64_t w = as_integer(sim["warmup"], "simulation.warmup");
            if (w < 0) fail("simulation.warmup", "must be >= 0");
            cfg.warmup = w;
        }
        if (sim.contains("settle")) {
            cfg.settle = as_integer(sim["settle"], "simulation.settle");
        }
    }
    if (cfg.warmup >= cfg.horizon) fail("simulation.warmup", "must be below simulation.horizon");

    if (root.contains("attack")) {
        const json& atk = root["attack"];
        if (!atk.is_object()) fail("attack", "must be an object");
        check_keys(atk, "attack", {"record_start", "record_len", "replay_start"});
        for (const char* key : {"record_start", "record_len", "replay_start"}) {
            if (!atk.contains(key)) fail(std::string("attack.") + key, "required integer");
        }
        ReplayAttack attack;
        attack.record_start = as_integer(atk["record_start"], "attack.record_start");
        attack.record_len = as_integer(atk["record_len"], "attack.record_len");
        attack.replay_start = as_integer(atk["replay_start"], "attack.replay_start");
        attack.validate(cfg.window);  // throws ConfigError naming the field
        if (cfg.horizon <= attack.replay_start + cfg.window) {
            fail("attack.replay_start",
                 "leaves no full detection window before simulation.horizon");
        }
        cfg.attack = attack;
    }

    if (root.contains("output_dir")) {
        if (!root["output_dir"].is_string() || root["output_dir"].get<std::string>().empty()) {
            fail("output_dir", "must be a non-empty string");
        }
        cfg.output_dir = root["output_dir"].get<std::string>();
    }

    return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
    json root;
    json plant;
    if (cfg.quadrotor) {
        plant["quadrotor"] = {{"mass", cfg.quadrotor->mass},
                              {"inertia_x", cfg.quadrotor->inertia_x},
                              {"inertia_y", cfg.quadrotor->inertia_y},
                              {"inertia_z", cfg.quadrotor->inertia_z},
                              {"gravity", cfg.quadrotor->gravity},
                              {"process_noise_intensity", cfg.quad_process_noise},
                              {"measurement_noise_intensity", cfg.quad_measurement_noise}};
    } else if (cfg.explicit_plant) {
        plant["matrices"] = {{"a", matrix_to_json(cfg.explicit_plant->a)},
                             {"b", matrix_to_json(cfg.explicit_plant->b)},
                             {"c", matrix_to_json(cfg.explicit_plant->c)},
                             {"q_c", matrix_to_json(cfg.explicit_plant->q_c)},
                             {"r_c", matrix_to_json(cfg.explicit_plant->r_c)}};
    }
    root["plant"] = std::move(plant);

    json weights;
    if (cfg.weight_w.scale) {
        weights["w"] = *cfg.weight_w.scale;
    } else if (cfg.weight_w.matrix.size() != 0) {
        weights["w"] = matrix_to_json(cfg.weight_w.matrix);
    }
    if (cfg.weight_u.scale) {
        weights["u"] = *cfg.weight_u.scale;
    } else if (cfg.weight_u.matrix.size() != 0) {
        weights["u"] = matrix_to_json(cfg.weight_u.matrix);
    }
    if (!weights.empty()) root["weights"] = std::move(weights);

    json sampling;
    if (cfg.sample_period) sampling["T"] = *cfg.sample_period;
    if (!cfg.sample_grid.empty()) sampling["grid"] = cfg.sample_grid;
    sampling["T_bar"] = cfg.t_bar;
    if (cfg.reference_t) sampling["reference_T"] = *cfg.reference_t;
    root["sampling"] = std::move(sampling);

    root["watermark"] = {{"budget_mu", cfg.budget_mu}, {"enabled", cfg.watermark_enabled}};
    root["detector"] = {{"window", cfg.window}, {"false_alarm_prob", cfg.false_alarm_prob}};
    root["simulation"] = {{"horizon", cfg.horizon},
                          {"trials", cfg.trials},
                          {"seed", cfg.seed},
                          {"warmup", cfg.warmup},
                          {"settle", cfg.settle}};
    if (cfg.attack) {
        root["attack"] = {{"record_start", cfg.attack->record_start},
                          {"record_len", cfg.attack->record_len},
                          {"replay_start", cfg.attack->replay_start}};
    }
    root["output_dir"] = cfg.output_dir;
    return root.dump(2) + "\n";
}

}  // namespace swm
