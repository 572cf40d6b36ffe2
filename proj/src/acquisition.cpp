#include "moppo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moppo/errors.hpp"

namespace moppo {

double beta_schedule(long t_prime) {
    if (t_prime < 1) {
        throw InvalidStage("beta_schedule requires stage >= 1, got " +
                           std::to_string(t_prime));
    }
    const double t = static_cast<double>(t_prime);
    return std::sqrt(std::log(2.0 * t) / t);
}

std::vector<double> ucb_vector(const std::vector<SurrogateEnsemble>& per_objective,
                               const ObjectiveVector& current_value,
                               const ScalarisationVector& w, double beta) {
    if (per_objective.size() != current_value.size()) {
        throw UnfittedSurrogate("expected " + std::to_string(current_value.size()) +
                                " per-objective ensembles, got " +
                                std::to_string(per_objective.size()));
    }
    std::vector<double> out(current_value.size());
    for (std::size_t j = 0; j < current_value.size(); ++j) {
        const EnsemblePrediction p = predict_ensemble(per_objective[j], w.weights());
        out[j] = current_value[j] + p.mean + beta * p.sigma;
    }
    return out;
}

std::vector<ScoredCandidate> score_candidates(
    const std::vector<SurrogateEnsemble>& per_objective,
    const std::vector<std::pair<ScalarisationVector, ObjectiveVector>>& candidates,
    double beta) {
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (const auto& [w, value] : candidates) {
        if (per_objective.size() != value.size()) {
            throw UnfittedSurrogate(
                "expected " + std::to_string(value.size()) +
                " per-objective ensembles, got " +
                std::to_string(per_objective.size()));
        }
        ScoredCandidate sc;
        sc.w = w;
        sc.predicted.resize(value.size());
        sc.sigma.resize(value.size());
        for (std::size_t j = 0; j < value.size(); ++j) {
            const EnsemblePrediction p = predict_ensemble(per_objective[j], w.weights());
            sc.predicted[j] = value[j] + p.mean + beta * p.sigma;
            sc.sigma[j] = p.sigma;
        }
        out.push_back(std::move(sc));
    }
    return out;
}

SelectionStrategy parse_selection_strategy(const std::string& name) {
    if (name == "sequential_greedy") return SelectionStrategy::SequentialGreedy;
    if (name == "sort_top_n") return SelectionStrategy::SortTopN;
    throw ConfigError("unknown selection strategy '" + name + "'");
}

std::string to_string(SelectionStrategy strategy) {
    switch (strategy) {
    case SelectionStrategy::SequentialGreedy: return "sequential_greedy";
    case SelectionStrategy::SortTopN: return "sort_top_n";
    }
    throw ConfigError("invalid selection strategy value");
}

namespace {

// Hypervolume of the nondominated subset of `points`; 0 when nothing clears
// the reference point.
double front_hv(const std::vector<ObjectiveVector>& points, const ReferencePoint& ref) {
    if (points.empty()) return 0.0;
    return hypervolume(pareto_filter(points), ref);
}

} // namespace

SelectionResult select_weights(const std::vector<ScoredCandidate>& candidates,
                               const std::vector<ObjectiveVector>& base_front,
                               const ReferencePoint& ref, int n,
                               SelectionStrategy strategy) {
    if (candidates.empty()) {
        throw EmptyCandidates("select_weights needs at least one candidate");
    }
    if (n < 1 || static_cast<std::size_t>(n) > candidates.size()) {
        throw ConfigError("cannot select " + std::to_string(n) + " of " +
                          std::to_string(candidates.size()) + " candidates");
    }

    SelectionResult result;
    result.base_hv = front_hv(base_front, ref);

    if (strategy == SelectionStrategy::SequentialGreedy) {
        std::vector<ObjectiveVector> pool = base_front;
        std::vector<bool> taken(candidates.size(), false);
        for (int round = 0; round < n; ++round) {
            std::size_t best = candidates.size();
            double best_hv = -1.0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (taken[i]) continue;
                pool.push_back(candidates[i].predicted);
                const double hv = front_hv(pool, ref);
                pool.pop_back();
                const bool better =
                    hv > best_hv ||
                    (hv == best_hv && best < candidates.size() &&
                     candidates[i].w < candidates[best].w);
                if (best == candidates.size() || better) {
                    best = i;
                    best_hv = hv;
                }
            }
            taken[best] = true;
            pool.push_back(candidates[best].predicted);
            CandidateScore pick;
            pick.w = candidates[best].w;
            pick.predicted = candidates[best].predicted;
            pick.sigma = candidates[best].sigma;
            pick.hv_if_added = best_hv;
            result.picks.push_back(std::move(pick));
        }
        return result;
    }

    // SortTopN: score each candidate against the base front alone.
    std::vector<CandidateScore> scored;
    scored.reserve(candidates.size());
    std::vector<ObjectiveVector> pool = base_front;
    for (const ScoredCandidate& c : candidates) {
        pool.push_back(c.predicted);
        CandidateScore cs;
        cs.w = c.w;
        cs.predicted = c.predicted;
        cs.sigma = c.sigma;
        cs.hv_if_added = front_hv(pool, ref);
        pool.pop_back();
        scored.push_back(std::move(cs));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const CandidateScore& a, const CandidateScore& b) {
                         if (a.hv_if_added != b.hv_if_added)
                             return a.hv_if_added > b.hv_if_added;
                         return a.w < b.w;
                     });
    scored.resize(static_cast<std::size_t>(n));
    result.picks = std::move(scored);
    return result;
}

} // namespace moppo
