#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "moppo/envs.hpp"
#include "moppo/policy.hpp"

namespace moppo {

struct PPOConfig {
    double gamma = 0.99;
    double lambda = 0.95; ///< GAE smoothing
    double clip = 0.2;    ///< ratio clip epsilon
    double lr = 3e-4;
    double value_coef = 0.5;   ///< c1
    double entropy_coef = 0.0; ///< c2
    int epochs = 10;
    int minibatch = 64;
    int buffer_size = 2500;   ///< transitions collected per iteration (D)
    int resample_steps = 0;   ///< conditioning resample period; 0 = episode starts
};

struct RolloutEntry {
    std::vector<double> state;
    std::vector<double> action;
    double log_prob = 0.0;
    ObjectiveVector reward;
    ObjectiveVector value; ///< V(state; w) at collection time
    ScalarisationVector w;
    bool terminal = false;
};

/// A fixed-size batch of transitions plus the bootstrap value of the state
/// following the last entry (zero when that entry was terminal), scalarised
/// against the last entry's conditioning vector during GAE.
struct RolloutBuffer {
    std::vector<RolloutEntry> entries;
    ObjectiveVector tail_value;
};

/// Source of conditioning vectors during collection.
class WeightSampler {
public:
    virtual ~WeightSampler() = default;
    virtual ScalarisationVector next(Rng& rng) = 0;
};

/// Always the same vector; consumes no randomness.
class FixedSampler final : public WeightSampler {
public:
    explicit FixedSampler(ScalarisationVector w) : w_(std::move(w)) {}
    ScalarisationVector next(Rng&) override { return w_; }

private:
    ScalarisationVector w_;
};

/// Uniform draw from a fixed pool. Draws from its own stream (the rng bound
/// at construction) and ignores the argument, so conditioning draws never
/// perturb the caller's action-noise stream: training on a one-vector pool
/// reproduces fixed-vector training exactly.
class UniformPoolSampler final : public WeightSampler {
public:
    UniformPoolSampler(std::vector<ScalarisationVector> pool, Rng& rng);
    ScalarisationVector next(Rng&) override;

private:
    std::vector<ScalarisationVector> pool_;
    Rng* rng_;
};

/// Round-robin over a fixed pool; consumes no randomness.
class CyclingSampler final : public WeightSampler {
public:
    explicit CyclingSampler(std::vector<ScalarisationVector> pool);
    ScalarisationVector next(Rng&) override;

private:
    std::vector<ScalarisationVector> pool_;
    std::size_t next_ = 0;
};

/// Conditioning carried across consecutive buffers so an episode spanning a
/// buffer boundary keeps its vector.
struct CollectState {
    bool has_w = false;
    ScalarisationVector w;
};

/**
 * @brief Collects exactly `steps` transitions, restarting episodes at
 * terminals.
 *
 * The conditioning vector is drawn from the sampler at every episode start
 * when resample_steps == 0, or whenever the 1-based step counter t satisfies
 * t % resample_steps == 0. Value predictions are evaluated under the vector
 * active at that step.
 */
RolloutBuffer collect_rollouts(WeightConditionedPolicy& policy, Environment& env,
                               WeightSampler& sampler, int steps, int resample_steps,
                               Rng& rng, CollectState& carry);

struct GaeResult {
    std::vector<double> advantages;     ///< normalised: zero mean, unit std
    std::vector<double> advantages_raw; ///< before normalisation
    std::vector<ObjectiveVector> returns; ///< per-objective discounted returns
};

/// Generalised advantage estimation on scalarised rewards and values, with
/// per-objective discounted returns as critic targets. Terminal entries stop
/// bootstrapping; the buffer tail bootstraps from buffer.tail_value.
GaeResult compute_gae(const RolloutBuffer& buffer, double gamma, double lambda);

struct BatchStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    bool finite = true;
};

/// Gradient of the clipped-surrogate PPO loss on one minibatch, accumulated
/// into `grads` (call grads.zero() first). Exposed for verification; the
/// update loop below is its only production caller.
BatchStats compute_batch_gradient(const WeightConditionedPolicy& policy,
                                  const RolloutBuffer& buffer,
                                  const std::vector<std::size_t>& batch,
                                  const std::vector<double>& advantages,
                                  const std::vector<ObjectiveVector>& returns,
                                  const PPOConfig& cfg, PolicyGradients& grads);

struct PPOStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double mean_scalarised_return = 0.0;
    bool nan_aborted = false;
};

/**
 * @brief Runs the clipped-surrogate update: epochs x shuffled minibatches of
 * combined actor, critic and entropy losses, stepped with Adam.
 *
 * Any non-finite loss or gradient aborts the whole update and restores the
 * parameters and optimiser state from before the call.
 */
PPOStats ppo_update(WeightConditionedPolicy& policy, PolicyOptimiser& optimiser,
                    const RolloutBuffer& buffer, const GaeResult& gae,
                    const PPOConfig& cfg, Rng& rng);

/// Mean scalarised episode return over the completed episodes in the buffer
/// (the partial sum when no episode completed).
double buffer_mean_scalarised_return(const RolloutBuffer& buffer);

} // namespace moppo
