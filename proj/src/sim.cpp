#include "swm/sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "swm/numerics.hpp"
#include "swm/rng.hpp"

namespace swm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

// Symmetric square-root factor F with F F^T = m, tolerant of semidefinite
// inputs (rank-deficient covariances are routine here: zero process noise,
// rank-one watermarks).
Mat psd_factor(const Mat& m, const char* what) {
    const Mat sym = symmetrize(sanitize_psd(m, what));
    const Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    Vec roots = eig.eigenvalues();
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        roots[i] = std::sqrt(std::max(roots[i], 0.0));
    }
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

// Runs body(i) for i in [0, trials), possibly across threads.  Each body
// invocation must write only to its own output slot; trial substreams make
// the result independent of scheduling.
template <typename F>
void for_each_trial(int trials, F&& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    const int nthreads =
        std::min(trials, static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u)));
    if (nthreads <= 1) {
        for (int i = 0; i < trials; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&body, w, nthreads, trials] {
            for (int i = w; i < trials; i += nthreads) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? kNan : s / static_cast<double>(xs.size());
}

// Mann-Whitney AUC: P(attack > clean) + P(attack = clean)/2, computed by
// binary search against the sorted clean sample.
double mann_whitney_auc(std::vector<double> clean, const std::vector<double>& attack) {
    if (clean.empty() || attack.empty()) return kNan;
    std::sort(clean.begin(), clean.end());
    double wins = 0.0;
    for (double a : attack) {
        const auto lo = std::lower_bound(clean.begin(), clean.end(), a);
        const auto hi = std::upper_bound(lo, clean.end(), a);
        wins += static_cast<double>(lo - clean.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(clean.size()) * static_cast<double>(attack.size()));
}

}  // namespace

double half_width_99(const std::vector<double>& xs) {
    if (xs.size() < 2) return kNan;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
    return kZ99 * sd / std::sqrt(static_cast<double>(xs.size()));
}

DetectorConfig make_detector(Eigen::Index output_dim, int window, double false_alarm_prob) {
    if (output_dim < 1) throw DomainError("make_detector: output_dim must be >= 1");
    if (window < 1) throw DomainError("make_detector: window must be >= 1");
    if (!(false_alarm_prob > 0.0) || !(false_alarm_prob < 1.0)) {
        throw DomainError("make_detector: false_alarm_prob must lie in (0, 1)");
    }
    DetectorConfig cfg;
    cfg.window = window;
    cfg.false_alarm_prob = false_alarm_prob;
    cfg.dof = static_cast<int>(output_dim) * window;
    cfg.threshold = chi2_quantile(cfg.dof, 1.0 - false_alarm_prob);
    return cfg;
}

void ReplayAttack::validate(int window) const {
    if (record_start < 0) throw ConfigError("attack: record_start must be >= 0");
    if (record_len < window) {
        throw ConfigError("attack: record_len " + std::to_string(record_len) +
                          " shorter than detector window " + std::to_string(window));
    }
    if (replay_start < record_start + record_len) {
        throw ConfigError("attack: replay_start " + std::to_string(replay_start) +
                          " begins before the recording [" + std::to_string(record_start) +
                          ", " + std::to_string(record_start + record_len) + ") completes");
    }
}

SimTrace simulate(const DiscretePlant& plant, const ClosedLoopDesign& design,
                  const WatermarkDesign& wm, const DetectorConfig& detector,
                  const std::optional<ReplayAttack>& attack, Eigen::Index horizon,
                  std::uint64_t seed) {
    const Eigen::Index n = plant.state_dim();
    const Eigen::Index p = plant.input_dim();
    const Eigen::Index m = plant.output_dim();
    if (horizon < 1) throw DomainError("simulate: horizon must be >= 1");
    if (wm.cov_q.rows() != p || wm.cov_q.cols() != p) {
        throw DimensionError("simulate: watermark covariance must be p x p");
    }
    if (attack) {
        attack->validate(detector.window);
        if (horizon <= attack->replay_start + detector.window) {
            throw ConfigError("simulate: horizon " + std::to_string(horizon) +
                              " leaves no full detection window after replay_start " +
                              std::to_string(attack->replay_start));
        }
    }

    const Mat proc_fac = psd_factor(plant.q_d, "simulate: q_d");
    const Mat meas_fac = psd_factor(plant.r_d, "simulate: r_d");
    const Mat wm_fac = psd_factor(wm.cov_q, "simulate: watermark covariance");
    const Mat resid_inv =
        design.resid_cov.ldlt().solve(Mat::Identity(m, m));

    CounterRng proc_rng(derive_stream(seed, "process"));
    CounterRng meas_rng(derive_stream(seed, "measurement"));
    CounterRng wm_rng(derive_stream(seed, "watermark"));

    SimTrace trace;
    trace.state.resize(n, horizon);
    trace.estimate.resize(n, horizon);
    trace.control.resize(p, horizon);
    trace.delivered.resize(m, horizon);
    trace.residual.resize(m, horizon);
    trace.g.resize(horizon);
    trace.alarm.assign(static_cast<std::size_t>(horizon), 0);
    trace.attack_active.assign(static_cast<std::size_t>(horizon), 0);

    Mat recorded;
    Vec z_at_record_start;
    if (attack) recorded.resize(m, attack->record_len);

    std::vector<double> ring(static_cast<std::size_t>(detector.window), 0.0);
    Vec x = Vec::Zero(n);  // true state
    Vec z = Vec::Zero(n);  // one-step prediction xhat_{k|k-1}
    for (Eigen::Index k = 0; k < horizon; ++k) {
        const Vec y_true = plant.c * x + meas_fac * meas_rng.gaussian_vec(m);

        bool replaying = false;
        Vec y_del = y_true;
        if (attack) {
            if (k >= attack->record_start && k < attack->record_start + attack->record_len) {
                recorded.col(k - attack->record_start) = y_true;
            }
            if (k == attack->record_start) z_at_record_start = z;
            if (k == attack->replay_start) trace.zeta = z - z_at_record_start;
            if (k >= attack->replay_start && k < attack->replay_start + attack->record_len) {
                y_del = recorded.col(k - attack->replay_start);
                replaying = true;
            }
        }

        const Vec resid = y_del - plant.c * z;
        ring[static_cast<std::size_t>(k % detector.window)] = resid.dot(resid_inv * resid);
        double g = 0.0;
        for (double q : ring) g += q;  // partial sum while the buffer fills

        const Vec filtered = z + design.k * resid;
        const Vec u = design.l * filtered + wm_fac * wm_rng.gaussian_vec(p);

        trace.state.col(k) = x;
        trace.estimate.col(k) = filtered;
        trace.control.col(k) = u;
        trace.delivered.col(k) = y_del;
        trace.residual.col(k) = resid;
        trace.g[k] = g;
        trace.alarm[static_cast<std::size_t>(k)] = g > detector.threshold ? 1 : 0;
        trace.attack_active[static_cast<std::size_t>(k)] = replaying ? 1 : 0;

        x = plant.a_d * x + plant.b_d * u + proc_fac * proc_rng.gaussian_vec(n);
        z = plant.a_d * filtered + plant.b_d * u;
    }
    return trace;
}

MeanGResult monte_carlo_mean_g(const DiscretePlant& plant, const ClosedLoopDesign& design,
                               const WatermarkDesign& wm, const DetectorConfig& detector,
                               const ReplayAttack& attack, Eigen::Index horizon,
                               std::uint64_t seed, int trials, Eigen::Index warmup,
                               Eigen::Index settle) {
    if (trials < 1) throw DomainError("monte_carlo_mean_g: trials must be >= 1");
    if (settle < 0) settle = detector.window;
    attack.validate(detector.window);

    const Eigen::Index clean_begin = std::max<Eigen::Index>(warmup, detector.window - 1);
    const Eigen::Index attack_begin =
        attack.replay_start + std::max<Eigen::Index>(settle, detector.window - 1);
    const Eigen::Index attack_end =
        std::min(horizon, attack.replay_start + attack.record_len);
    if (attack_begin >= attack_end) {
        throw ConfigError("monte_carlo_mean_g: no attack-era steps remain after settling");
    }
    if (clean_begin >= horizon) {
        throw ConfigError("monte_carlo_mean_g: warmup consumes the whole horizon");
    }

    std::vector<double> clean_means(static_cast<std::size_t>(trials));
    std::vector<double> attack_means(static_cast<std::size_t>(trials));
    for_each_trial(trials, [&](int i) {
        const std::uint64_t trial_seed =
            derive_stream(seed, "trial", static_cast<std::uint64_t>(i));
        const SimTrace with = simulate(plant, design, wm, detector, attack, horizon, trial_seed);
        const SimTrace without =
            simulate(plant, design, wm, detector, std::nullopt, horizon, trial_seed);
        double sa = 0.0;
        for (Eigen::Index k = attack_begin; k < attack_end; ++k) sa += with.g[k];
        attack_means[static_cast<std::size_t>(i)] =
            sa / static_cast<double>(attack_end - attack_begin);
        double sc = 0.0;
        for (Eigen::Index k = clean_begin; k < horizon; ++k) sc += without.g[k];
        clean_means[static_cast<std::size_t>(i)] =
            sc / static_cast<double>(horizon - clean_begin);
    });

    MeanGResult out;
    out.trials = trials;
    out.mean_no_attack = mean_of(clean_means);
    out.mean_attack = mean_of(attack_means);
    out.half_width_no_attack = half_width_99(clean_means);
    out.half_width_attack = half_width_99(attack_means);
    return out;
}

RocResult roc_curve(const DiscretePlant& plant, const ClosedLoopDesign& design,
                    const WatermarkDesign& wm, const DetectorConfig& detector,
                    const ReplayAttack& attack, Eigen::Index horizon, int trials,
                    std::uint64_t seed, Eigen::Index settle) {
    if (trials < 2) throw DomainError("roc_curve: trials must be >= 2");
    if (settle < 0) settle = detector.window;
    attack.validate(detector.window);

    const Eigen::Index w = detector.window;
    // Disjoint windows only, so the pooled samples are independent: clean
    // ones from the recording era (steady state, fully before replay),
    // attack ones from `settle` steps after replay onset.
    const Eigen::Index clean_begin = attack.record_start + w - 1;
    const Eigen::Index attack_begin = attack.replay_start + std::max<Eigen::Index>(settle, w - 1);
    const Eigen::Index attack_end = std::min(horizon, attack.replay_start + attack.record_len);
    if (clean_begin >= attack.replay_start) {
        throw ConfigError("roc_curve: recording era holds no full detector window");
    }
    if (attack_begin >= attack_end) {
        throw ConfigError("roc_curve: no attack-era windows remain after settling");
    }

    std::vector<std::vector<double>> clean_per_trial(static_cast<std::size_t>(trials));
    std::vector<std::vector<double>> attack_per_trial(static_cast<std::size_t>(trials));
    for_each_trial(trials, [&](int i) {
        const std::uint64_t trial_seed =
            derive_stream(seed, "trial", static_cast<std::uint64_t>(i));
        const SimTrace trace = simulate(plant, design, wm, detector, attack, horizon, trial_seed);
        auto& clean = clean_per_trial[static_cast<std::size_t>(i)];
        auto& att = attack_per_trial[static_cast<std::size_t>(i)];
        for (Eigen::Index k = clean_begin; k < attack.replay_start; k += w) {
            clean.push_back(trace.g[k]);
        }
        for (Eigen::Index k = attack_begin; k < attack_end; k += w) {
            att.push_back(trace.g[k]);
        }
    });

    RocResult out;
    std::vector<double> clean_all;
    std::vector<double> attack_all;
    out.per_trial_auc.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        const auto& c = clean_per_trial[static_cast<std::size_t>(i)];
        const auto& a = attack_per_trial[static_cast<std::size_t>(i)];
        out.per_trial_auc.push_back(mann_whitney_auc(c, a));
        clean_all.insert(clean_all.end(), c.begin(), c.end());
        attack_all.insert(attack_all.end(), a.begin(), a.end());
    }
    out.n_no_attack = static_cast<Eigen::Index>(clean_all.size());
    out.n_attack = static_cast<Eigen::Index>(attack_all.size());
    out.auc = mann_whitney_auc(clean_all, attack_all);

    // Threshold sweep over the pooled values (quantile grid once the pool is
    // large), plus the degenerate endpoints.
    std::vector<double> pool = clean_all;
    pool.insert(pool.end(), attack_all.begin(), attack_all.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    std::vector<double> thresholds;
    constexpr std::size_t kMaxThresholds = 1024;
    if (pool.size() <= kMaxThresholds) {
        thresholds = pool;
    } else {
        thresholds.reserve(kMaxThresholds);
        for (std::size_t j = 0; j < kMaxThresholds; ++j) {
            thresholds.push_back(pool[j * (pool.size() - 1) / (kMaxThresholds - 1)]);
        }
    }
    std::sort(clean_all.begin(), clean_all.end());
    std::sort(attack_all.begin(), attack_all.end());
    const auto rate_above = [](const std::vector<double>& xs, double tau) {
        const auto it = std::upper_bound(xs.begin(), xs.end(), tau);
        return static_cast<double>(xs.end() - it) / static_cast<double>(xs.size());
    };
    out.points.push_back({0.0, 0.0});
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
        out.points.push_back({rate_above(clean_all, *it), rate_above(attack_all, *it)});
    }
    out.points.push_back({1.0, 1.0});
    std::sort(out.points.begin(), out.points.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.false_alarm_rate != b.false_alarm_rate
                   ? a.false_alarm_rate < b.false_alarm_rate
                   : a.detection_rate < b.detection_rate;
    });
    out.points.erase(std::unique(out.points.begin(), out.points.end(),
                                 [](const RocPoint& a, const RocPoint& b) {
                                     return a.false_alarm_rate == b.false_alarm_rate &&
                                            a.detection_rate == b.detection_rate;
                                 }),
                     out.points.end());
    return out;
}

double roc_auc(const std::vector<RocPoint>& points) {
    if (points.size() < 2) return kNan;
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double dx = points[i].false_alarm_rate - points[i - 1].false_alarm_rate;
        area += 0.5 * dx * (points[i].detection_rate + points[i - 1].detection_rate);
    }
    return area;
}

double empirical_lqg_cost(const DiscretePlant& plant, const ClosedLoopDesign& design,
                          const WatermarkDesign& wm, const CostWeights& weights,
                          Eigen::Index horizon, int trials, std::uint64_t seed,
                          Eigen::Index warmup) {
    if (trials < 1) throw DomainError("empirical_lqg_cost: trials must be >= 1");
    if (warmup >= horizon) throw DomainError("empirical_lqg_cost: warmup >= horizon");
    weights.validate(plant);
    const DetectorConfig detector = make_detector(plant.output_dim(), 1, 0.5);

    std::vector<double> per_trial(static_cast<std::size_t>(trials));
    for_each_trial(trials, [&](int i) {
        const std::uint64_t trial_seed =
            derive_stream(seed, "trial", static_cast<std::uint64_t>(i));
        const SimTrace trace =
            simulate(plant, design, wm, detector, std::nullopt, horizon, trial_seed);
        double sum = 0.0;
        for (Eigen::Index k = warmup; k < horizon; ++k) {
            const Vec x = trace.state.col(k);
            const Vec u = trace.control.col(k);
            sum += x.dot(weights.w * x) + u.dot(weights.u * u);
        }
        per_trial[static_cast<std::size_t>(i)] = sum / static_cast<double>(horizon - warmup);
    });
    return mean_of(per_trial);
}

std::vector<CostRatioRow> cost_ratio_table(const ContinuousPlant& cont,
                                           const CostWeights& weights,
                                           const std::vector<double>& t_list, double reference_t,
                                           double budget_mu, Eigen::Index horizon, int trials,
                                           std::uint64_t seed) {
    if (t_list.empty()) throw DomainError("cost_ratio_table: t_list is empty");
    const auto is_ref = [reference_t](double t) {
        return std::abs(t - reference_t) <= 1e-12 * std::max(1.0, std::abs(reference_t));
    };
    if (std::none_of(t_list.begin(), t_list.end(), is_ref)) {
        throw DomainError("cost_ratio_table: reference_t is not in t_list");
    }

    std::vector<CostRatioRow> rows;
    rows.reserve(t_list.size());
    double ref_cost = kNan;
    for (double t : t_list) {
        CostRatioRow row;
        row.t = t;
        row.nominal_cost = kNan;
        row.ratio = kNan;
        row.watermarked_cost = kNan;
        row.empirical_cost = kNan;
        try {
            const DiscretePlant plant = discretize(cont, t);
            const ClosedLoopDesign design = design_closed_loop(plant, weights);
            row.nominal_cost = design.nominal_cost;
            if (budget_mu > 0.0 && classify_A_script(design).stable) {
                const WatermarkDesign wm =
                    optimize_watermark_fixed_T(plant, design, weights, budget_mu, 1);
                row.watermarked_cost = design.nominal_cost + wm.cost_increase;
            }
            if (trials > 0) {
                row.empirical_cost = empirical_lqg_cost(plant, design, zero_watermark(plant),
                                                        weights, horizon, trials, seed,
                                                        horizon / 10);
            }
            row.status = "ok";
            if (is_ref(t)) ref_cost = row.nominal_cost;
        } catch (const std::exception& e) {
            row.status = "failed";
            row.detail = e.what();
            if (is_ref(t)) {
                throw ConvergenceError(
                    "cost_ratio_table: synthesis failed at the reference period: " +
                        std::string(e.what()),
                    kNan);
            }
        }
        rows.push_back(std::move(row));
    }
    for (auto& row : rows) {
        if (row.status == "ok") row.ratio = row.nominal_cost / ref_cost;
    }
    return rows;
}

}  // namespace swm
