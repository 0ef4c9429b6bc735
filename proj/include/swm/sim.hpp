#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "swm/lqg.hpp"
#include "swm/plant.hpp"
#include "swm/types.hpp"
#include "swm/watermark.hpp"

namespace swm {

// Windowed chi-squared residual detector: g_k sums the last `window`
// Mahalanobis-normalized innovations, so under nominal operation
// g_k ~ chi^2 with m*window degrees of freedom.
struct DetectorConfig {
    int window = 10;
    double false_alarm_prob = 0.05;
    double threshold = 0.0;  // chi2_quantile(dof, 1 - false_alarm_prob)
    int dof = 0;             // output_dim * window
};

// Builds the detector for a plant with m outputs, deriving the threshold.
DetectorConfig make_detector(Eigen::Index output_dim, int window, double false_alarm_prob);

// Sensor replay: outputs recorded over [record_start, record_start +
// record_len) are later delivered verbatim starting at replay_start.
struct ReplayAttack {
    Eigen::Index record_start = 0;
    Eigen::Index record_len = 0;
    Eigen::Index replay_start = 0;

    void validate(int window) const;
};

// Full per-step record of one closed-loop run.  Column k of each matrix
// belongs to step k.
struct SimTrace {
    Mat state;       // n x N, true plant state
    Mat estimate;    // n x N, filtered estimate xhat_{k|k}
    Mat control;     // p x N, applied input including the watermark
    Mat delivered;   // m x N, output seen by the estimator (replayed if attacked)
    Mat residual;    // m x N, innovation delivered - C * xhat_{k|k-1}
    Vec g;           // N, windowed detector statistic (partial sums while filling)
    std::vector<std::uint8_t> alarm;          // g_k > threshold
    std::vector<std::uint8_t> attack_active;  // replay delivered at step k
    Vec zeta;  // estimator mismatch at replay onset (empty when no attack)
};

// Runs the watermarked loop for `horizon` steps.  Process noise, measurement
// noise, and the watermark draw from three independent substreams derived
// from `seed`, so a trace is a pure function of (inputs, seed).  During
// replay the estimator and detector consume the recorded outputs while the
// true plant keeps evolving under the mismatched control.
SimTrace simulate(const DiscretePlant& plant, const ClosedLoopDesign& design,
                  const WatermarkDesign& wm, const DetectorConfig& detector,
                  const std::optional<ReplayAttack>& attack, Eigen::Index horizon,
                  std::uint64_t seed);

// Two-arm Monte Carlo estimate of the detector statistic: the same trial
// seeds are run with and without the attack (common random numbers), and
// post-transient g_k means are averaged across trials.  Half-widths are 99%
// normal-approximation intervals over per-trial means (NaN for trials < 2).
struct MeanGResult {
    double mean_no_attack = 0.0;
    double mean_attack = 0.0;
    double half_width_no_attack = 0.0;
    double half_width_attack = 0.0;
    int trials = 0;
};

// `warmup` discards the initial transient in the no-attack arm; the attack
// arm averages over attack-active steps from `settle` steps after replay
// onset (pass settle < 0 for the default of one detector window).
MeanGResult monte_carlo_mean_g(const DiscretePlant& plant, const ClosedLoopDesign& design,
                               const WatermarkDesign& wm, const DetectorConfig& detector,
                               const ReplayAttack& attack, Eigen::Index horizon,
                               std::uint64_t seed, int trials, Eigen::Index warmup,
                               Eigen::Index settle = -1);

struct RocPoint {
    double false_alarm_rate = 0.0;
    double detection_rate = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;       // sorted by false-alarm rate, (0,0) and (1,1) included
    double auc = 0.0;                   // pooled Mann-Whitney area (ties at half weight);
                                        // equals the trapezoid of `points` whenever the
                                        // threshold sweep kept every distinct pooled value
    std::vector<double> per_trial_auc;  // one AUC per trial, for confidence statements
    Eigen::Index n_no_attack = 0;       // pooled clean windows
    Eigen::Index n_attack = 0;          // pooled attack windows
};

// Sweeps the alarm threshold over the pooled empirical statistic.  Rates are
// measured on disjoint windows (stride = detector window) so samples are
// uncorrelated: clean windows from steps fully before the replay, attack
// windows from `settle` steps after replay onset (default one window).
RocResult roc_curve(const DiscretePlant& plant, const ClosedLoopDesign& design,
                    const WatermarkDesign& wm, const DetectorConfig& detector,
                    const ReplayAttack& attack, Eigen::Index horizon, int trials,
                    std::uint64_t seed, Eigen::Index settle = -1);

// Trapezoidal area under a curve sorted by false-alarm rate.
double roc_auc(const std::vector<RocPoint>& points);

// Two-sided 99% normal-approximation confidence half-width of the mean of
// xs (NaN for fewer than two samples).
double half_width_99(const std::vector<double>& xs);

// Time-averaged running cost x^T W x + u^T U u across trials, post-warmup.
// The closed-form counterpart is lqg_cost (nominal) plus cost_increase.
double empirical_lqg_cost(const DiscretePlant& plant, const ClosedLoopDesign& design,
                          const WatermarkDesign& wm, const CostWeights& weights,
                          Eigen::Index horizon, int trials, std::uint64_t seed,
                          Eigen::Index warmup);

// One sampling period of the cost table: closed-form nominal cost, its ratio
// to the reference period's cost, the watermarked total for the given
// budget, and an optional Monte Carlo cross-check.
struct CostRatioRow {
    double t = 0.0;
    double nominal_cost = 0.0;
    double ratio = 0.0;
    double watermarked_cost = 0.0;  // nominal + budget when the design succeeds
    double empirical_cost = 0.0;    // NaN unless trials > 0
    std::string status;             // "ok" or "failed"
    std::string detail;
};

// Closed-form cost ratios J_T / J_ref over a list of periods.  reference_t
// must be one of the listed periods.  With trials > 0 each row also carries
// an empirical cost estimate over `horizon` steps per trial.
std::vector<CostRatioRow> cost_ratio_table(const ContinuousPlant& cont,
                                           const CostWeights& weights,
                                           const std::vector<double>& t_list, double reference_t,
                                           double budget_mu, Eigen::Index horizon, int trials,
                                           std::uint64_t seed);

}  // namespace swm
