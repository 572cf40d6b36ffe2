#include "moppo/policy.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "moppo/errors.hpp"

namespace moppo {

namespace {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kLog2Pi = 1.8378770664093454836;

double clamp_log_std(double v) { return std::min(std::max(v, kLogStdMin), kLogStdMax); }

std::vector<int> trunk_widths(const PolicyConfig& cfg) {
    return {cfg.state_dim + cfg.objectives, cfg.hidden, cfg.hidden};
}
std::vector<int> actor_widths(const PolicyConfig& cfg) {
    return {cfg.hidden + cfg.objectives, cfg.action_dim};
}
std::vector<int> critic_widths(const PolicyConfig& cfg) {
    return {cfg.hidden + cfg.objectives, cfg.objectives};
}

} // namespace

double scalarise(const ObjectiveVector& v, const ScalarisationVector& w) {
    if (v.size() != w.dimension())
        throw DimensionMismatch("scalarise: objective/weight dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s;
}

void PolicyGradients::zero() {
    trunk.zero();
    actor.zero();
    critic.zero();
    std::fill(log_std.begin(), log_std.end(), 0.0);
}

WeightConditionedPolicy::WeightConditionedPolicy(const PolicyConfig& cfg,
                                                 std::uint64_t init_seed)
    : cfg_(cfg),
      trunk_(trunk_widths(cfg), /*tanh_output=*/true),
      actor_(actor_widths(cfg)),
      critic_(critic_widths(cfg)),
      log_std_(static_cast<std::size_t>(cfg.action_dim), 0.0) {
    if (cfg.state_dim < 1 || cfg.action_dim < 1 || cfg.objectives < 2 || cfg.hidden < 1)
        throw ShapeMismatch("invalid policy configuration");
    Rng trunk_rng(Rng::derive({init_seed, 1}));
    Rng actor_rng(Rng::derive({init_seed, 2}));
    Rng critic_rng(Rng::derive({init_seed, 3}));
    trunk_.init_scaled_uniform(trunk_rng);
    actor_.init_scaled_uniform(actor_rng);
    critic_.init_scaled_uniform(critic_rng);
}

std::vector<double> WeightConditionedPolicy::conditioned_input(
    const std::vector<double>& state, const ScalarisationVector& w) const {
    if (static_cast<int>(state.size()) != cfg_.state_dim)
        throw ShapeMismatch("state dimension mismatch");
    if (static_cast<int>(w.dimension()) != cfg_.objectives)
        throw DimensionMismatch("conditioning vector dimension mismatch");
    std::vector<double> in;
    in.reserve(state.size() + w.dimension());
    in.insert(in.end(), state.begin(), state.end());
    in.insert(in.end(), w.weights().begin(), w.weights().end());
    return in;
}

std::vector<double> WeightConditionedPolicy::head_input(
    const std::vector<double>& trunk_out, const ScalarisationVector& w) const {
    std::vector<double> in;
    in.reserve(trunk_out.size() + w.dimension());
    in.insert(in.end(), trunk_out.begin(), trunk_out.end());
    in.insert(in.end(), w.weights().begin(), w.weights().end());
    return in;
}

PolicyForward WeightConditionedPolicy::forward(const std::vector<double>& state,
                                               const ScalarisationVector& w) const {
    PolicyForward fw;
    std::vector<double> t = trunk_.forward(conditioned_input(state, w), &fw.trunk_cache);
    std::vector<double> h = head_input(t, w);
    fw.mean = actor_.forward(h, &fw.actor_cache);
    fw.value = critic_.forward(h, &fw.critic_cache);
    return fw;
}

std::vector<double> WeightConditionedPolicy::sigma() const {
    std::vector<double> s(log_std_.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(clamp_log_std(log_std_[i]));
    return s;
}

double WeightConditionedPolicy::entropy() const {
    double h = 0.5 * static_cast<double>(cfg_.action_dim) * (kLog2Pi + 1.0);
    for (double ls : log_std_) h += clamp_log_std(ls);
    return h;
}

ActionSample WeightConditionedPolicy::act(const std::vector<double>& state,
                                          const ScalarisationVector& w, Rng& rng) const {
    PolicyForward fw = forward(state, w);
    std::vector<double> sig = sigma();
    ActionSample out;
    out.mean = fw.mean;
    out.action.resize(fw.mean.size());
    double lp = -0.5 * static_cast<double>(cfg_.action_dim) * kLog2Pi;
    for (std::size_t d = 0; d < fw.mean.size(); ++d) {
        double eps = rng.normal();
        out.action[d] = fw.mean[d] + sig[d] * eps;
        lp += -0.5 * eps * eps - std::log(sig[d]);
    }
    out.log_prob = lp;
    return out;
}

std::vector<double> WeightConditionedPolicy::mean_action(
    const std::vector<double>& state, const ScalarisationVector& w) const {
    std::vector<double> t = trunk_.forward(conditioned_input(state, w));
    return actor_.forward(head_input(t, w));
}

ObjectiveVector WeightConditionedPolicy::value(const std::vector<double>& state,
                                               const ScalarisationVector& w) const {
    std::vector<double> t = trunk_.forward(conditioned_input(state, w));
    return critic_.forward(head_input(t, w));
}

double WeightConditionedPolicy::log_prob(const std::vector<double>& state,
                                         const ScalarisationVector& w,
                                         const std::vector<double>& action) const {
    std::vector<double> mean = mean_action(state, w);
    if (action.size() != mean.size()) throw ShapeMismatch("action dimension mismatch");
    std::vector<double> sig = sigma();
    double lp = -0.5 * static_cast<double>(cfg_.action_dim) * kLog2Pi;
    for (std::size_t d = 0; d < mean.size(); ++d) {
        double z = (action[d] - mean[d]) / sig[d];
        lp += -0.5 * z * z - std::log(sig[d]);
    }
    return lp;
}

void WeightConditionedPolicy::backward(const PolicyForward& fw,
                                       const std::vector<double>& mean_grad,
                                       const std::vector<double>& value_grad,
                                       const std::vector<double>& log_std_grad,
                                       PolicyGradients& grads) const {
    std::vector<double> head_grad(static_cast<std::size_t>(cfg_.hidden + cfg_.objectives),
                                  0.0);
    if (!mean_grad.empty()) {
        std::vector<double> g = actor_.backward(fw.actor_cache, mean_grad, grads.actor);
        for (std::size_t i = 0; i < head_grad.size(); ++i) head_grad[i] += g[i];
    }
    if (!value_grad.empty()) {
        std::vector<double> g = critic_.backward(fw.critic_cache, value_grad, grads.critic);
        for (std::size_t i = 0; i < head_grad.size(); ++i) head_grad[i] += g[i];
    }
    // Only the trunk part of [trunk_out ‖ w] propagates; w is an input.
    std::vector<double> trunk_grad(head_grad.begin(), head_grad.begin() + cfg_.hidden);
    trunk_.backward(fw.trunk_cache, trunk_grad, grads.trunk);
    if (!log_std_grad.empty()) {
        if (log_std_grad.size() != log_std_.size())
            throw ShapeMismatch("log_std gradient dimension mismatch");
        for (std::size_t d = 0; d < log_std_.size(); ++d) {
            bool saturated = log_std_[d] <= kLogStdMin || log_std_[d] >= kLogStdMax;
            if (!saturated) grads.log_std[d] += log_std_grad[d];
        }
    }
}

PolicyGradients WeightConditionedPolicy::make_gradients() const {
    PolicyGradients g;
    g.trunk.g.assign(trunk_.params().size(), 0.0);
    g.actor.g.assign(actor_.params().size(), 0.0);
    g.critic.g.assign(critic_.params().size(), 0.0);
    g.log_std.assign(log_std_.size(), 0.0);
    return g;
}

PolicySnapshot WeightConditionedPolicy::snapshot() const {
    return {trunk_.params(), actor_.params(), critic_.params(), log_std_};
}

void WeightConditionedPolicy::restore(const PolicySnapshot& snap) {
    trunk_.params() = snap.trunk;
    actor_.params() = snap.actor;
    critic_.params() = snap.critic;
    log_std_ = snap.log_std;
}

void WeightConditionedPolicy::save_checkpoint(const std::string& path, int pivot_index,
                                              std::uint64_t seed, int stage) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CorruptCheckpoint("cannot open checkpoint for writing: " + path);
    os << "moppo-policy 1\n";
    os << "state_dim " << cfg_.state_dim << '\n';
    os << "action_dim " << cfg_.action_dim << '\n';
    os << "objectives " << cfg_.objectives << '\n';
    os << "hidden " << cfg_.hidden << '\n';
    os << "pivot " << pivot_index << '\n';
    os << "seed " << seed << '\n';
    os << "stage " << stage << '\n';
    std::size_t total = trunk_.params().size() + actor_.params().size() +
                        critic_.params().size() + log_std_.size();
    os << "params " << total << '\n';
    save_params_text(os, trunk_.params());
    save_params_text(os, actor_.params());
    save_params_text(os, critic_.params());
    save_params_text(os, log_std_);
}

LoadedCheckpoint WeightConditionedPolicy::load_checkpoint(
    const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorruptCheckpoint("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "moppo-policy" || version != 1)
        throw CorruptCheckpoint("not a policy checkpoint: " + path);
    std::map<std::string, long long> header;
    for (int i = 0; i < 8; ++i) {
        std::string key;
        long long value;
        if (!(is >> key >> value)) throw CorruptCheckpoint("truncated header: " + path);
        header[key] = value;
    }
    for (const char* key :
         {"state_dim", "action_dim", "objectives", "hidden", "pivot", "seed", "stage",
          "params"})
        if (!header.count(key))
            throw CorruptCheckpoint(std::string("missing header field ") + key);

    PolicyConfig cfg;
    cfg.state_dim = static_cast<int>(header["state_dim"]);
    cfg.action_dim = static_cast<int>(header["action_dim"]);
    cfg.objectives = static_cast<int>(header["objectives"]);
    cfg.hidden = static_cast<int>(header["hidden"]);
    WeightConditionedPolicy policy(cfg, /*init_seed=*/0);

    std::size_t total = static_cast<std::size_t>(header["params"]);
    std::size_t expected = policy.trunk_.params().size() + policy.actor_.params().size() +
                           policy.critic_.params().size() + policy.log_std_.size();
    if (total != expected)
        throw CorruptCheckpoint("parameter count does not match the architecture");
    policy.trunk_.params() = load_params_text(is, policy.trunk_.params().size());
    policy.actor_.params() = load_params_text(is, policy.actor_.params().size());
    policy.critic_.params() = load_params_text(is, policy.critic_.params().size());
    policy.log_std_ = load_params_text(is, policy.log_std_.size());

    return {std::move(policy), static_cast<int>(header["pivot"]),
            static_cast<std::uint64_t>(header["seed"]), static_cast<int>(header["stage"])};
}

PolicyOptimiser::PolicyOptimiser(const WeightConditionedPolicy& policy,
                                 const AdamConfig& cfg)
    : cfg_(cfg),
      trunk_(policy.trunk().params().size()),
      actor_(policy.actor().params().size()),
      critic_(policy.critic().params().size()),
      log_std_(policy.log_std().size()) {}

void PolicyOptimiser::step(WeightConditionedPolicy& policy, const PolicyGradients& grads) {
    adam_step(policy.trunk().params(), grads.trunk, trunk_, cfg_);
    adam_step(policy.actor().params(), grads.actor, actor_, cfg_);
    adam_step(policy.critic().params(), grads.critic, critic_, cfg_);
    GradientBuffer ls{grads.log_std};
    adam_step(policy.log_std(), ls, log_std_, cfg_);
}

PolicyOptimiser::Snapshot PolicyOptimiser::snapshot() const {
    return {trunk_, actor_, critic_, log_std_};
}

void PolicyOptimiser::restore(const Snapshot& snap) {
    trunk_ = snap.trunk;
    actor_ = snap.actor;
    critic_ = snap.critic;
    log_std_ = snap.log_std;
}

} // namespace moppo
