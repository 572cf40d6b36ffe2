#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "moppo/config.hpp"
#include "moppo/envs.hpp"
#include "moppo/metrics.hpp"
#include "moppo/policy.hpp"
#include "moppo/ppo.hpp"
#include "moppo/weightspace.hpp"

namespace moppo {

/// One evaluation outcome: the value of policy (seed, k) conditioned on w,
/// measured at the end of `stage`.
struct ArchiveRecord {
    int stage = 0;
    std::uint64_t seed = 0;
    int k = 0; ///< 1-based sub-space index
    ScalarisationVector w;
    ObjectiveVector value;
};

/**
 * @brief Cumulative evaluation archive.
 *
 * Records accumulate across stages while the policies themselves are
 * overwritten in place, so the number of distinct live (seed, k) policies
 * stays at K * |seeds| no matter how long training runs.
 */
class ParetoArchive {
public:
    void append(ArchiveRecord rec) { records_.push_back(std::move(rec)); }

    const std::vector<ArchiveRecord>& records() const { return records_; }

    /// Distinct (seed, k) pairs among records with stage <= `stage`
    /// (all records when stage < 0).
    std::size_t live_policy_count(int stage = -1) const;

    /// Value vectors of records with stage <= `stage` (all when stage < 0),
    /// restricted to one seed when given.
    std::vector<ObjectiveVector> values(int stage = -1,
                                        const std::uint64_t* seed = nullptr) const;

    /// Non-dominated records over the whole archive, provenance intact.
    /// Duplicated value vectors collapse to their earliest record.
    std::vector<ArchiveRecord> front() const;

private:
    std::vector<ArchiveRecord> records_;
};

struct StageMetricsRow {
    int stage = 0;
    std::uint64_t seed = 0;
    double hv = 0.0;
    double eu = 0.0;
    double sparsity = 0.0;
};

struct PolicyReturnRow {
    int stage = 0;
    std::uint64_t seed = 0;
    int k = 0;
    double mean_scalarised_return = 0.0;
};

struct SelectionRow {
    int stage = 0;
    std::uint64_t seed = 0;
    int k = 0;
    int rank = 0; ///< 1-based pick order
    ScalarisationVector w;
    std::vector<double> predicted;
    std::vector<double> sigma;
    double beta = 0.0;
    double hv_if_added = 0.0;
};

struct SurrogateFitRow {
    int stage = 0;
    std::uint64_t seed = 0;
    int k = 0;
    int objective = 0; ///< 1-based
    int rows = 0;
    bool fitted = false;
};

struct TrainingRow {
    int stage = 0; ///< 0 during warm-up, otherwise the stage whose block ran
    std::uint64_t seed = 0;
    int k = 0;
    int iteration = 0; ///< 1-based, cumulative per policy
    PPOStats stats;
};

struct TrainedPolicy {
    std::uint64_t seed = 0;
    int k = 0;
    WeightConditionedPolicy policy;
};

struct RunResult {
    ParetoArchive archive;
    std::vector<StageMetricsRow> stage_metrics; ///< (stage, seed) ascending
    std::vector<PolicyReturnRow> policy_returns;
    std::vector<SelectionRow> selections;
    std::vector<SurrogateFitRow> surrogate_fits;
    std::vector<TrainingRow> training_log;
    ReferencePoint final_ref; ///< from every archive record
    std::vector<SubSpace> decomposition;
    std::vector<TrainedPolicy> policies; ///< seed-major, then k
    std::vector<double> phase_seconds;   ///< warm-up, then one entry per stage
    double total_seconds = 0.0;
};

/// Mean undiscounted per-objective return of the deterministic (mean-action)
/// policy conditioned on w, over `episodes` episodes.
ObjectiveVector evaluate_policy(const WeightConditionedPolicy& policy,
                                Environment& env, const ScalarisationVector& w,
                                int episodes);

/**
 * @brief Runs one experiment end to end and returns everything measured.
 *
 * All variants share one stage engine: Q warm-up iterations conditioned on
 * the pivot, then stages of evaluate / refit / select / train. The variants
 * differ only in the evaluation set, the training-time conditioning source
 * and whether the surrogate-driven selection step runs. Every policy trains
 * exactly warmup + (stages - 1) * stage_iters iterations, so variant
 * comparisons are at equal budget.
 *
 * Results are bit-identical for a given config and seeds regardless of
 * `workers` (<= 0 means one worker per policy): every policy owns derived
 * random streams, and merges happen in fixed (seed, k) order.
 */
RunResult run_experiment(const ExperimentConfig& cfg, int workers);

/// Writes the full CSV family, the config snapshot and per-policy
/// checkpoints under out_dir. Everything except timings.csv is byte-stable
/// given equal results.
void write_run_outputs(const RunResult& result, const ExperimentConfig& cfg,
                       const std::string& out_dir);

struct InterpolationRow {
    int count = 0;
    std::uint64_t seed = 0;
    double hv = 0.0;
    double sparsity = 0.0;
};

struct InterpolationResult {
    std::vector<InterpolationRow> rows; ///< (count, seed) ascending
    ReferencePoint ref;
};

/**
 * @brief Re-evaluates trained policies on nested per-sub-space grids of
 * increasing size.
 *
 * For each count c, every policy is evaluated on the c nearest points to its
 * pivot from a fine grid of spacing `interp_step`. The grids are prefixes of
 * one distance-sorted list, so the evaluated sets are nested and reported
 * hypervolume (against one shared reference point) is exactly non-decreasing
 * in c for every seed. Counts must be positive and strictly ascending.
 */
InterpolationResult interpolation_sweep(const std::vector<TrainedPolicy>& policies,
                                        const ExperimentConfig& cfg,
                                        const std::vector<int>& counts,
                                        double interp_step, int workers);

/// Runs fn(0..n-1) on up to `workers` threads (serial when workers <= 1).
/// The first exception thrown by any call is rethrown after completion.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

} // namespace moppo
