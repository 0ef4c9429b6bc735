#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swm/lqg.hpp"
#include "swm/plant.hpp"
#include "swm/sim.hpp"
#include "swm/types.hpp"

namespace swm {

// Weight given either as a scalar multiple of the identity (hand-editable
// shorthand) or as a full matrix; resolved once the plant dimension is known.
struct WeightSpec {
    std::optional<double> scale;
    Mat matrix;

    Mat resolve(Eigen::Index dim, const std::string& field) const;
};

// Everything a run needs, parsed from one JSON document.  See parse_config
// for the schema; every validation failure is a ConfigError naming the
// offending field.
struct ScenarioConfig {
    // Exactly one of the two plant forms is present.
    std::optional<QuadrotorParams> quadrotor;
    double quad_process_noise = 1e-3;      // intensity scale for the quadrotor form
    double quad_measurement_noise = 1e-2;  // likewise
    std::optional<ContinuousPlant> explicit_plant;

    WeightSpec weight_w;
    WeightSpec weight_u;

    std::optional<double> sample_period;   // sampling.T
    std::vector<double> sample_grid;       // sampling.grid
    double t_bar = 0.0;                    // sampling.T_bar (defaults to the largest period)
    std::optional<double> reference_t;     // sampling.reference_T, for the cost table

    double budget_mu = 1.0;
    bool watermark_enabled = true;  // false: simulate/roc use a zero watermark

    int window = 10;
    double false_alarm_prob = 0.05;

    Eigen::Index horizon = 5000;
    int trials = 100;
    std::uint64_t seed = 12345;
    Eigen::Index warmup = 500;
    Eigen::Index settle = -1;  // negative: default to one detector window

    std::optional<ReplayAttack> attack;

    std::string output_dir = "out";

    // Builds the continuous plant from whichever form is present.
    ContinuousPlant continuous() const;
    // Resolves the weights against the plant's dimensions.
    CostWeights resolve_weights(const ContinuousPlant& plant) const;
};

// Parses and fully validates a JSON config document.
ScenarioConfig parse_config(const std::string& text);

// Reads the file and parses it.  I/O failures become ConfigError.
ScenarioConfig load_config_file(const std::string& path);

// Canonical JSON serialization; parse(serialize(cfg)) reproduces cfg and
// serialize is byte-stable, so serialize . parse is idempotent on its image.
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace swm
