#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moppo/neural.hpp"
#include "moppo/weightspace.hpp"

namespace moppo {

/// w . v — the scalar objective a policy conditioned on w maximises.
double scalarise(const ObjectiveVector& v, const ScalarisationVector& w);

struct PolicyConfig {
    int state_dim = 0;
    int action_dim = 0;
    int objectives = 0; ///< m
    int hidden = 64;    ///< width of the two shared layers
};

struct ActionSample {
    std::vector<double> action;
    double log_prob = 0.0;
    std::vector<double> mean;
};

/// Caches from one conditioned forward pass, reusable for backward().
struct PolicyForward {
    ForwardCache trunk_cache, actor_cache, critic_cache;
    std::vector<double> mean;  ///< actor head output
    std::vector<double> value; ///< critic head output, m components
};

/// Gradients for each parameter group.
struct PolicyGradients {
    GradientBuffer trunk, actor, critic;
    std::vector<double> log_std;

    void zero();
};

struct PolicySnapshot {
    std::vector<double> trunk, actor, critic, log_std;
};

struct LoadedCheckpoint;

/**
 * @brief Diagonal-Gaussian actor and vector-valued critic conditioned on a
 * scalarisation vector.
 *
 * The shared trunk reads [state ‖ w] through two tanh layers; the actor and
 * critic heads are linear over [trunk_out ‖ w], so the conditioning vector
 * reaches each head both through the trunk and through a residual
 * concatenation. The action distribution is N(mean, diag(exp(log_std)^2))
 * with one learned, state-independent log_std per action dimension,
 * initialised to 0 and clamped to [-5, 2] wherever it is used.
 */
class WeightConditionedPolicy {
public:
    WeightConditionedPolicy(const PolicyConfig& cfg, std::uint64_t init_seed);

    const PolicyConfig& config() const { return cfg_; }

    ActionSample act(const std::vector<double>& state, const ScalarisationVector& w,
                     Rng& rng) const;
    std::vector<double> mean_action(const std::vector<double>& state,
                                    const ScalarisationVector& w) const;
    ObjectiveVector value(const std::vector<double>& state,
                          const ScalarisationVector& w) const;
    double log_prob(const std::vector<double>& state, const ScalarisationVector& w,
                    const std::vector<double>& action) const;

    /// Clamped standard deviations exp(clamp(log_std, -5, 2)).
    std::vector<double> sigma() const;
    /// Entropy of the current action distribution (state-independent).
    double entropy() const;

    /// Full pass with caches for backward().
    PolicyForward forward(const std::vector<double>& state,
                          const ScalarisationVector& w) const;

    /// Accumulates gradients for d(loss)/d(mean), d(loss)/d(value) and
    /// d(loss)/d(log_std) through both heads and the shared trunk. The
    /// log_std gradient is masked to zero where the clamp is saturated.
    void backward(const PolicyForward& fw, const std::vector<double>& mean_grad,
                  const std::vector<double>& value_grad,
                  const std::vector<double>& log_std_grad, PolicyGradients& grads) const;

    DenseNet& trunk() { return trunk_; }
    DenseNet& actor() { return actor_; }
    DenseNet& critic() { return critic_; }
    const DenseNet& trunk() const { return trunk_; }
    const DenseNet& actor() const { return actor_; }
    const DenseNet& critic() const { return critic_; }
    std::vector<double>& log_std() { return log_std_; }
    const std::vector<double>& log_std() const { return log_std_; }

    PolicyGradients make_gradients() const;
    PolicySnapshot snapshot() const;
    void restore(const PolicySnapshot& snap);

    /// Text checkpoint: a small key-value header followed by all parameters
    /// (trunk, actor, critic, log_std) in a bit-exact decimal form.
    void save_checkpoint(const std::string& path, int pivot_index, std::uint64_t seed,
                         int stage) const;

    static LoadedCheckpoint load_checkpoint(const std::string& path);

private:
    std::vector<double> conditioned_input(const std::vector<double>& state,
                                          const ScalarisationVector& w) const;
    std::vector<double> head_input(const std::vector<double>& trunk_out,
                                   const ScalarisationVector& w) const;

    PolicyConfig cfg_;
    DenseNet trunk_, actor_, critic_;
    std::vector<double> log_std_;
};

/// A policy restored from a text checkpoint together with its header fields.
struct LoadedCheckpoint {
    WeightConditionedPolicy policy;
    int pivot_index;
    std::uint64_t seed;
    int stage;
};

/// Adam over all four parameter groups with a shared configuration.
class PolicyOptimiser {
public:
    PolicyOptimiser(const WeightConditionedPolicy& policy, const AdamConfig& cfg);

    void step(WeightConditionedPolicy& policy, const PolicyGradients& grads);

    struct Snapshot {
        AdamState trunk, actor, critic, log_std;
    };
    Snapshot snapshot() const;
    void restore(const Snapshot& snap);

private:
    AdamConfig cfg_;
    AdamState trunk_, actor_, critic_, log_std_;
};

} // namespace moppo
