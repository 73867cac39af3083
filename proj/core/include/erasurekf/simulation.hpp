#pragma once

#include <erasurekf/linear_system.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace erasurekf {

/// Budget and knobs for one Monte Carlo estimate at a fixed arrival
/// probability.
struct TrialConfig {
    double p = 0.5;
    int horizon = 300;             ///< K, at least 10
    int trials = 500;              ///< N, at least 1
    std::uint64_t base_seed = 1;
    double divergence_threshold = 1e8; ///< cap multiplier on trace(Sigma0), > 1
    int moment_order = 1;          ///< q: statistics taken on trace(P_k)^q
};

/// trace(P_k) for k = 1..horizon, driven by Bernoulli(p) arrivals from the
/// documented generator. If the recursion overflows, the trace stops at the
/// overflow index and `overflow_at` records it (1-based).
struct TrajectoryResult {
    std::vector<double> trace;
    std::optional<int> overflow_at;

    bool diverged() const { return overflow_at.has_value(); }
};

TrajectoryResult simulate_trajectory(const LinearSystem& sys, double p, int horizon,
                                     std::uint64_t seed);

enum class Verdict { bounded, divergent, inconclusive };
const char* to_string(Verdict v);

/// Aggregated statistics of trace(P_k) over seeded trials plus the
/// boundedness verdict.
///
/// Trials are winsorized: once a trial's trace exceeds
/// divergence_threshold * trace(Sigma0) (or overflows), it contributes the
/// threshold value from that step on and is flagged diverged. The verdict is
/// a deterministic function of three statistics:
///   - diverged_fraction: share of flagged trials,
///   - log_slope: least-squares slope of log mean trace^q over the last
///     half of the horizon,
///   - tail_decay: estimated decay exponent of the stationary trace
///     survival curve (counts ratio across two or four factors of
///     |lambda1|^2 above the 20% pool quantile); E[trace^q] is finite
///     exactly when this exponent exceeds q.
/// Rules, in order: diverged_fraction > 0.01 or log_slope > 0.01 or
/// tail_decay < 0.97 q  => divergent; diverged_fraction = 0 and
/// (log_slope < 0.001 or tail_decay > 1.03 q) => bounded; else inconclusive.
struct SimulationSummary {
    std::vector<double> per_k_mean_trace; ///< mean of winsorized trace^q, k = 1..K
    std::vector<double> per_k_q50;
    std::vector<double> per_k_q90;
    std::vector<double> per_k_q99;
    double diverged_fraction = 0.0;
    double log_slope = 0.0;
    double tail_decay = 0.0; ///< +inf when the tail is too light to measure
    Verdict verdict = Verdict::inconclusive;
};

/// Runs cfg.trials seeded trajectories (seed derived per trial from
/// cfg.base_seed) and aggregates. `jobs` is the parallelism degree
/// (0 = hardware concurrency); output is identical for any value.
SimulationSummary estimate(const LinearSystem& sys, const TrialConfig& cfg, int jobs = 0);

struct SweepPoint {
    double p = 0.0;
    Verdict verdict = Verdict::inconclusive;
    double log_slope = 0.0;
    double diverged_fraction = 0.0;
    double tail_decay = 0.0;
    bool refined = false; ///< re-run with doubled horizon after inconclusive
};

/// Bisection localization of the critical probability.
struct SweepResult {
    std::vector<SweepPoint> evaluated_points; ///< ascending in p, final run per p
    double estimated_pc = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    std::optional<double> analytic_pc; ///< filled by the caller for reports
    std::vector<std::string> anomalies;
};

/// Bisects on p over [0, 1] using estimate() verdicts; an inconclusive
/// point is re-run once with doubled horizon, then recorded and stepped
/// over using the side its tail_decay points to. Bounded at p = 0 short-
/// circuits to estimated_pc = 0. Final bracket width <= resolution
/// (resolution >= 0.005). Throws NumericError when every probe stays
/// inconclusive; verdict-monotonicity violations across the evaluated grid
/// are reported in `anomalies`, not corrected.
SweepResult empirical_pc(const LinearSystem& sys, double resolution, const TrialConfig& budget,
                         int jobs = 0);

/// CSV with header "k,mean_trace,q50,q90,q99", one row per step.
void write_summary_csv(std::ostream& os, const SimulationSummary& s);

/// CSV with header "p,verdict,log_slope,diverged_fraction,analytic_pc",
/// one row per evaluated point, preceded by '#' metadata lines carrying
/// estimated_pc and the bracket.
void write_sweep_csv(std::ostream& os, const SweepResult& s);

} // namespace erasurekf
