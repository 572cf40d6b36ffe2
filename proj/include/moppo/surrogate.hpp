#pragma once

#include <utility>
#include <vector>

#include "moppo/rng.hpp"
#include "moppo/weightspace.hpp"

namespace moppo {

/// One regression row: features x (a scalarisation vector in production) and
/// the observed target (a per-objective value increment).
struct RegressionRow {
    std::vector<double> x;
    double y = 0.0;
};

/// Append-only value-increment dataset for one (sub-space, objective) pair.
class SurrogateDataset {
public:
    void append(const ScalarisationVector& w, double delta);
    const std::vector<RegressionRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

private:
    std::vector<RegressionRow> rows_;
};

/// Evaluation snapshot: each weight vector with its measured objective vector.
using EvaluationSet = std::vector<std::pair<ScalarisationVector, ObjectiveVector>>;

/**
 * @brief Appends one increment row per weight vector and objective.
 *
 * `previous` and `current` must cover exactly the same weight vectors
 * (bitwise; order-free) — KeyMismatch otherwise. Appends, for each shared w
 * and objective j, the row (w, current_j(w) - previous_j(w)) to
 * per_objective[j].
 */
void append_stage_data(std::vector<SurrogateDataset>& per_objective,
                       const EvaluationSet& previous, const EvaluationSet& current);

struct ElasticNetConfig {
    double lambda = 1e-3; ///< total regularisation strength
    double rho = 0.5;     ///< L1 share; 1 - rho is the L2 share
    int max_iter = 10000;
    double tol = 1e-7; ///< max coefficient change per sweep
    int bags = 10;     ///< ensemble size B
    bool bootstrap = true;
};

/// Linear model y ≈ intercept + coef . x.
struct LinearModel {
    std::vector<double> coef;
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
};

/**
 * @brief Coordinate-descent elastic net.
 *
 * Minimises (1/2n) Σ (y - ψ0 - ψ.x)² + λ (ρ|ψ|₁ + (1-ρ)/2 |ψ|₂²) with an
 * unpenalised intercept. Needs at least two rows (InsufficientData). When
 * max_iter sweeps do not reach tol, the best iterate is returned with
 * converged = false.
 */
LinearModel fit_elastic_net(const std::vector<RegressionRow>& rows,
                            const ElasticNetConfig& cfg);

double predict(const LinearModel& model, const std::vector<double>& x);

/// Bagged ensemble of elastic-net fits.
struct SurrogateEnsemble {
    std::vector<LinearModel> members;

    bool fitted() const { return !members.empty(); }
};

/// Fits cfg.bags members, each on a bootstrap resample of the rows (the full
/// data when bootstrap is off). Deterministic given the rng state.
SurrogateEnsemble fit_ensemble(const std::vector<RegressionRow>& rows,
                               const ElasticNetConfig& cfg, Rng& rng);

struct EnsemblePrediction {
    double mean = 0.0;
    double sigma = 0.0; ///< population standard deviation across members
};

EnsemblePrediction predict_ensemble(const SurrogateEnsemble& ensemble,
                                    const std::vector<double>& x);

/// Predicted objective value: measured value plus the ensemble-mean increment.
double predict_objective(const SurrogateEnsemble& ensemble, double current_value,
                         const ScalarisationVector& w);

} // namespace moppo
