#include "moppo/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "moppo/errors.hpp"

namespace moppo {

UniformPoolSampler::UniformPoolSampler(std::vector<ScalarisationVector> pool, Rng& rng)
    : pool_(std::move(pool)), rng_(&rng) {
    if (pool_.empty()) throw EmptyCandidates("uniform sampler over an empty pool");
}

ScalarisationVector UniformPoolSampler::next(Rng&) {
    return pool_[rng_->index(pool_.size())];
}

CyclingSampler::CyclingSampler(std::vector<ScalarisationVector> pool)
    : pool_(std::move(pool)) {
    if (pool_.empty()) throw EmptyCandidates("cycling sampler over an empty pool");
}

ScalarisationVector CyclingSampler::next(Rng&) {
    ScalarisationVector w = pool_[next_ % pool_.size()];
    ++next_;
    return w;
}

RolloutBuffer collect_rollouts(WeightConditionedPolicy& policy, Environment& env,
                               WeightSampler& sampler, int steps, int resample_steps,
                               Rng& rng, CollectState& carry) {
    if (steps < 1) throw ConfigError("rollout collection needs steps >= 1");
    RolloutBuffer buffer;
    buffer.entries.reserve(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t) {
        if (env.done()) {
            env.reset(0);
            if (resample_steps == 0 || !carry.has_w) {
                carry.w = sampler.next(rng);
                carry.has_w = true;
            }
        }
        if (!carry.has_w) {
            carry.w = sampler.next(rng);
            carry.has_w = true;
        }
        if (resample_steps > 0 && t % resample_steps == 0) {
            carry.w = sampler.next(rng);
        }

        RolloutEntry e;
        e.state = env.state();
        e.w = carry.w;
        e.value = policy.value(e.state, e.w);
        ActionSample sample = policy.act(e.state, e.w, rng);
        Transition tr = env.step(sample.action);
        e.action = tr.action;
        e.log_prob = sample.log_prob;
        e.reward = tr.reward;
        e.terminal = tr.terminal;
        buffer.entries.push_back(std::move(e));
    }
    const RolloutEntry& last = buffer.entries.back();
    if (last.terminal) {
        buffer.tail_value.assign(last.reward.size(), 0.0);
    } else {
        buffer.tail_value = policy.value(env.state(), last.w);
    }
    return buffer;
}

GaeResult compute_gae(const RolloutBuffer& buffer, double gamma, double lambda) {
    const std::vector<RolloutEntry>& es = buffer.entries;
    if (es.empty()) throw ConfigError("GAE over an empty buffer");
    std::size_t n = es.size();
    std::size_t m = es[0].reward.size();

    GaeResult out;
    out.advantages_raw.resize(n);
    out.returns.assign(n, ObjectiveVector(m, 0.0));

    double next_adv = 0.0;
    ObjectiveVector next_ret = buffer.tail_value;
    double next_scal_v = scalarise(buffer.tail_value, es.back().w);
    for (std::size_t i = n; i-- > 0;) {
        const RolloutEntry& e = es[i];
        double not_terminal = e.terminal ? 0.0 : 1.0;
        double scal_r = scalarise(e.reward, e.w);
        double scal_v = scalarise(e.value, e.w);
        double delta = scal_r + gamma * next_scal_v * not_terminal - scal_v;
        next_adv = delta + gamma * lambda * not_terminal * next_adv;
        out.advantages_raw[i] = next_adv;
        for (std::size_t j = 0; j < m; ++j)
            out.returns[i][j] = e.reward[j] + gamma * not_terminal * next_ret[j];
        next_ret = out.returns[i];
        next_scal_v = scal_v;
    }

    double mean = 0.0;
    for (double a : out.advantages_raw) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : out.advantages_raw) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    double std_dev = std::sqrt(var);
    out.advantages.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.advantages[i] = (out.advantages_raw[i] - mean) / (std_dev + 1e-8);
    return out;
}

BatchStats compute_batch_gradient(const WeightConditionedPolicy& policy,
                                  const RolloutBuffer& buffer,
                                  const std::vector<std::size_t>& batch,
                                  const std::vector<double>& advantages,
                                  const std::vector<ObjectiveVector>& returns,
                                  const PPOConfig& cfg, PolicyGradients& grads) {
    BatchStats stats;
    if (batch.empty()) return stats;
    double n = static_cast<double>(batch.size());
    std::size_t m = buffer.entries[0].reward.size();
    std::size_t action_dim = buffer.entries[0].action.size();

    std::vector<double> sig = policy.sigma();
    std::vector<double> mean_grad(action_dim), value_grad(m), log_std_grad(action_dim);

    for (std::size_t idx : batch) {
        const RolloutEntry& e = buffer.entries[idx];
        PolicyForward fw = policy.forward(e.state, e.w);

        double lp = -0.5 * static_cast<double>(action_dim) * 1.8378770664093454836;
        std::vector<double> z(action_dim);
        for (std::size_t d = 0; d < action_dim; ++d) {
            z[d] = (e.action[d] - fw.mean[d]) / sig[d];
            lp += -0.5 * z[d] * z[d] - std::log(sig[d]);
        }
        double ratio = std::exp(lp - e.log_prob);
        double adv = advantages[idx];
        double unclipped = ratio * adv;
        double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        stats.actor_loss += -std::min(unclipped, clipped);
        if (std::abs(ratio - 1.0) > cfg.clip) stats.clip_fraction += 1.0;

        // The surrogate only propagates through the unclipped branch; when
        // the clipped branch is strictly smaller its derivative is zero.
        double actor_scale = (unclipped <= clipped) ? -ratio * adv / n : 0.0;
        for (std::size_t d = 0; d < action_dim; ++d) {
            mean_grad[d] = actor_scale * (z[d] / sig[d]);
            log_std_grad[d] = actor_scale * (z[d] * z[d] - 1.0);
        }

        double closs = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double err = fw.value[j] - returns[idx][j];
            closs += err * err;
            value_grad[j] = cfg.value_coef * 2.0 * err / (static_cast<double>(m) * n);
        }
        stats.critic_loss += closs / static_cast<double>(m);

        policy.backward(fw, mean_grad, value_grad, log_std_grad, grads);
    }

    stats.actor_loss /= n;
    stats.critic_loss /= n;
    stats.clip_fraction /= n;
    stats.entropy = policy.entropy();
    // Entropy is state-independent here, so the bonus enters once per batch;
    // its log_std derivative is -entropy_coef per dimension (clamp unmasked
    // on purpose: restoring a saturated log_std is exactly what it is for).
    if (cfg.entropy_coef != 0.0) {
        for (std::size_t d = 0; d < action_dim; ++d)
            grads.log_std[d] += -cfg.entropy_coef;
    }

    auto finite = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    stats.finite = std::isfinite(stats.actor_loss) && std::isfinite(stats.critic_loss) &&
                   finite(grads.trunk.g) && finite(grads.actor.g) &&
                   finite(grads.critic.g) && finite(grads.log_std);
    return stats;
}

PPOStats ppo_update(WeightConditionedPolicy& policy, PolicyOptimiser& optimiser,
                    const RolloutBuffer& buffer, const GaeResult& gae,
                    const PPOConfig& cfg, Rng& rng) {
    if (buffer.entries.empty()) throw ConfigError("update over an empty buffer");
    if (cfg.minibatch < 1 || cfg.epochs < 1)
        throw ConfigError("epochs and minibatch must be >= 1");
    PolicySnapshot snap = policy.snapshot();
    PolicyOptimiser::Snapshot opt_snap = optimiser.snapshot();

    std::size_t n = buffer.entries.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    PolicyGradients grads = policy.make_gradients();
    PPOStats stats;
    long batches = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i) { // Fisher-Yates
            std::size_t j = rng.index(i + 1);
            std::swap(order[i], order[j]);
        }
        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            grads.zero();
            BatchStats bs = compute_batch_gradient(policy, buffer, batch, gae.advantages,
                                                   gae.returns, cfg, grads);
            if (!bs.finite) {
                policy.restore(snap);
                optimiser.restore(opt_snap);
                PPOStats aborted;
                aborted.nan_aborted = true;
                aborted.mean_scalarised_return = buffer_mean_scalarised_return(buffer);
                return aborted;
            }
            optimiser.step(policy, grads);
            stats.actor_loss += bs.actor_loss;
            stats.critic_loss += bs.critic_loss;
            stats.entropy += bs.entropy;
            stats.clip_fraction += bs.clip_fraction;
            ++batches;
        }
    }
    if (batches > 0) {
        stats.actor_loss /= static_cast<double>(batches);
        stats.critic_loss /= static_cast<double>(batches);
        stats.entropy /= static_cast<double>(batches);
        stats.clip_fraction /= static_cast<double>(batches);
    }
    stats.mean_scalarised_return = buffer_mean_scalarised_return(buffer);
    return stats;
}

double buffer_mean_scalarised_return(const RolloutBuffer& buffer) {
    double episode_sum = 0.0;
    double total = 0.0;
    long episodes = 0;
    for (const RolloutEntry& e : buffer.entries) {
        episode_sum += scalarise(e.reward, e.w);
        if (e.terminal) {
            total += episode_sum;
            episode_sum = 0.0;
            ++episodes;
        }
    }
    if (episodes == 0) return episode_sum;
    return total / static_cast<double>(episodes);
}

} // namespace moppo
