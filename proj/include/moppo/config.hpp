#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "moppo/acquisition.hpp"
#include "moppo/ppo.hpp"
#include "moppo/surrogate.hpp"
#include "moppo/weightspace.hpp"

namespace moppo {

enum class Variant { Fixed, Random, Mean, Ucb };

Variant parse_variant(const std::string& name); // throws UnknownVariant
std::string to_string(Variant variant);

/// Exploration weight source for the acquisition step. Auto resolves to
/// Schedule for the ucb variant and Zero for the mean variant.
enum class BetaMode { Schedule, Zero };

/// Stage structure: Q warm-up iterations, then Z stages of evaluate, refit,
/// select and C training iterations (the final stage only evaluates). Every
/// variant therefore trains exactly Q + (Z - 1) * C iterations per policy.
struct ScheduleConfig {
    int warmup = 20;      ///< Q
    int stage_iters = 10; ///< C
    int stages = 6;       ///< Z
};

/// Fully resolved run description. Produced by load_experiment_config, which
/// fills variant and objective-count dependent defaults for everything the
/// file leaves out.
struct ExperimentConfig {
    Variant variant = Variant::Ucb;
    std::string env_name = "pointmass-2";
    std::vector<std::uint64_t> seeds = {1, 2, 3};

    DecompositionConfig decomposition;
    int hidden = 64; ///< trunk width
    PPOConfig ppo;
    ScheduleConfig schedule;
    ElasticNetConfig surrogate;

    SelectionStrategy strategy = SelectionStrategy::SequentialGreedy;
    BetaMode beta_mode = BetaMode::Schedule;
    bool evaluate_all_candidates = false;
    int eval_episodes = 1;

    void validate() const; // throws ConfigError

    /// Fixed-order, fixed-format rendering of every semantic field. Two
    /// configs serialise identically exactly when they would run identically,
    /// so the FNV-1a hash of this text is the run's identity.
    std::string canonical() const;
    std::uint64_t hash() const;
};

/// Raw sectioned key-value text. Grammar: `[section]` headers, `key = value`
/// entries, `#` comments, blank lines ignored. Later duplicates win.
struct RawConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;
};

RawConfig parse_config_text(const std::string& text); // throws ConfigError

/// Overrides as ("section.key", "value") pairs, e.g. {"schedule.stages","2"}.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Resolves raw text to a validated ExperimentConfig. Precedence: file, then
/// MOPPO_<SECTION>_<KEY> environment variables, then explicit overrides.
/// Unknown sections or keys are errors, as are malformed values. Pass
/// use_environment = false when re-reading a run's config snapshot, so stray
/// variables cannot change what was actually run.
ExperimentConfig config_from_text(const std::string& text,
                                  const ConfigOverrides& overrides = {},
                                  bool use_environment = true);

/// config_from_text on a file's contents; ConfigError when unreadable.
ExperimentConfig load_experiment_config(const std::string& path,
                                        const ConfigOverrides& overrides = {},
                                        bool use_environment = true);

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

} // namespace moppo
