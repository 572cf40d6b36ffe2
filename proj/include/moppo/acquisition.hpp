#pragma once

#include <string>
#include <vector>

#include "moppo/metrics.hpp"
#include "moppo/surrogate.hpp"
#include "moppo/weightspace.hpp"

namespace moppo {

/// Exploration weight sqrt(ln(2 t') / t') for acquisition stage t' >= 1
/// (natural log). Equal at t' = 1 and 2, strictly decreasing afterwards.
/// Throws InvalidStage for t' < 1.
double beta_schedule(long t_prime);

/// A candidate with its optimistic value prediction.
struct ScoredCandidate {
    ScalarisationVector w;
    std::vector<double> predicted; ///< per objective: V + mean + beta * sigma
    std::vector<double> sigma;     ///< per objective ensemble spread
};

/// Optimistic per-objective prediction for one candidate: its measured value
/// plus the ensemble-mean increment plus beta times the ensemble spread.
/// Throws UnfittedSurrogate when any per-objective ensemble is missing.
std::vector<double> ucb_vector(const std::vector<SurrogateEnsemble>& per_objective,
                               const ObjectiveVector& current_value,
                               const ScalarisationVector& w, double beta);

/// Scores every candidate with ucb_vector (beta = 0 gives the mean-only
/// variant). `candidates` pairs each weight vector with the policy's current
/// value under it.
std::vector<ScoredCandidate> score_candidates(
    const std::vector<SurrogateEnsemble>& per_objective,
    const std::vector<std::pair<ScalarisationVector, ObjectiveVector>>& candidates,
    double beta);

enum class SelectionStrategy { SequentialGreedy, SortTopN };

SelectionStrategy parse_selection_strategy(const std::string& name); // ConfigError
std::string to_string(SelectionStrategy strategy);

/// One selection, in pick order.
struct CandidateScore {
    ScalarisationVector w;
    std::vector<double> predicted;
    std::vector<double> sigma;
    double hv_if_added = 0.0; ///< never below the base front's hypervolume
};

struct SelectionResult {
    std::vector<CandidateScore> picks;
    double base_hv = 0.0;
};

/**
 * @brief Picks n candidates whose predicted vectors most enlarge the
 * hypervolume over the base front.
 *
 * SequentialGreedy re-scores the remainder after every pick against
 * base ∪ {already picked predictions}; SortTopN ranks every candidate once
 * against the base front alone. Both break hypervolume ties toward the
 * lexicographically smaller weight vector, so results are deterministic and
 * duplicate-free. Throws EmptyCandidates on an empty candidate list and
 * ConfigError when n exceeds the candidate count.
 */
SelectionResult select_weights(const std::vector<ScoredCandidate>& candidates,
                               const std::vector<ObjectiveVector>& base_front,
                               const ReferencePoint& ref, int n,
                               SelectionStrategy strategy);

} // namespace moppo
