#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "moppo/weightspace.hpp"

namespace moppo {

/// Static description of a multi-objective control problem.
struct MOMDPSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    int objectives = 0; ///< m
    std::vector<std::pair<double, double>> action_bounds; ///< per action dimension
    int horizon = 0; ///< episode length H (terminal after H steps)
};

/// One environment step. `action` is stored exactly as supplied by the caller
/// (before any clipping) because importance ratios in policy updates need the
/// sampled action; the dynamics and any action-cost rewards always use the
/// clipped value.
struct Transition {
    std::vector<double> state;
    std::vector<double> action;
    std::vector<double> next_state;
    ObjectiveVector reward; ///< exactly m components, all finite
    bool terminal = false;
};

/**
 * @brief A deterministic episodic environment with vector rewards.
 *
 * Instances are single-threaded and stateful: reset() starts an episode,
 * step() advances it. Dynamics are pure functions of (state, action), so
 * replaying an action sequence from the same reset reproduces every
 * transition exactly.
 */
class Environment {
public:
    virtual ~Environment() = default;

    virtual const MOMDPSpec& spec() const = 0;

    /// Starts a new episode and returns the initial state. All bundled
    /// environments have a fixed initial state; the seed is accepted for
    /// interface uniformity.
    virtual std::vector<double> reset(std::uint64_t seed) = 0;

    /// Advances one step. Throws EpisodeFinished past the horizon and
    /// InvalidAction on wrong dimension or non-finite components.
    virtual Transition step(const std::vector<double>& action) = 0;

    /// True once the current episode has reached a terminal state.
    virtual bool done() const = 0;

    /// The current state (undefined before the first reset()).
    virtual const std::vector<double>& state() const = 0;

    /// Points on the true convex coverage set when known analytically;
    /// empty otherwise.
    virtual std::vector<ObjectiveVector> true_ccs() const { return {}; }

    virtual std::unique_ptr<Environment> clone() const = 0;
};

/// Constructs a bundled environment by name; throws UnknownEnvironment.
std::unique_ptr<Environment> make_environment(const std::string& name);

/// Names of all bundled environments.
std::vector<std::string> list_environments();

/// One row per step: step index, state components, action components, rewards.
void write_trace_csv(const std::string& path, const std::vector<Transition>& trace);

} // namespace moppo
