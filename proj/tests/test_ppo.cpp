#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "moppo/envs.hpp"
#include "moppo/errors.hpp"
#include "moppo/ppo.hpp"

using namespace moppo;

namespace {

ScalarisationVector sv(std::vector<double> w) {
    return ScalarisationVector::from_weights(std::move(w));
}

PolicyConfig pm2_policy_config(int hidden = 16) {
    PolicyConfig cfg;
    cfg.state_dim = 2;
    cfg.action_dim = 1;
    cfg.objectives = 2;
    cfg.hidden = hidden;
    return cfg;
}

/// Hand-built buffer of scalar-reward steps sharing one conditioning vector.
RolloutBuffer make_buffer(const std::vector<double>& rewards,
                          const std::vector<double>& values, double tail,
                          bool last_terminal) {
    RolloutBuffer buffer;
    ScalarisationVector w = sv({0.5, 0.5});
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        RolloutEntry e;
        e.state = {0.0, 0.0};
        e.action = {0.0};
        e.reward = {rewards[i], rewards[i]}; // w.r = rewards[i]
        e.value = {values[i], values[i]};
        e.w = w;
        e.terminal = last_terminal && i + 1 == rewards.size();
        buffer.entries.push_back(std::move(e));
    }
    buffer.tail_value = {tail, tail};
    return buffer;
}

} // namespace

TEST_CASE("collection fills the buffer to exactly the requested size") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 3);
    FixedSampler sampler(sv({0.5, 0.5}));
    Rng rng(10);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 50, 0, rng, carry);
    REQUIRE(buffer.entries.size() == 50);
    // horizon 50 means the buffer is exactly one full episode
    for (std::size_t i = 0; i + 1 < buffer.entries.size(); ++i)
        CHECK_FALSE(buffer.entries[i].terminal);
    CHECK(buffer.entries.back().terminal);
    CHECK(buffer.tail_value == ObjectiveVector{0.0, 0.0}); // terminal bootstrap
}

TEST_CASE("a constant sampler conditions every step identically") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 3);
    FixedSampler sampler(sv({0.3, 0.7}));
    Rng rng(10);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 120, 0, rng, carry);
    for (const auto& e : buffer.entries) CHECK(e.w == sv({0.3, 0.7}));
}

TEST_CASE("periodic resampling from a two-vector pool yields at most two vectors") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 3);
    std::vector<ScalarisationVector> pool = {sv({1.0, 0.0}), sv({0.0, 1.0})};
    Rng pool_rng(4), rng(10);
    UniformPoolSampler sampler(pool, pool_rng);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 50, 25, rng, carry);
    std::set<ScalarisationVector> distinct;
    for (const auto& e : buffer.entries) distinct.insert(e.w);
    CHECK(distinct.size() <= 2);
    // redraws happen before the 25th and 50th recorded steps, so the blocks
    // of constant conditioning are entries [0, 24), [24, 49) and [49, 50)
    for (int t = 1; t < 24; ++t)
        CHECK(buffer.entries[static_cast<std::size_t>(t)].w == buffer.entries[0].w);
    for (int t = 25; t < 49; ++t)
        CHECK(buffer.entries[static_cast<std::size_t>(t)].w == buffer.entries[24].w);
}

TEST_CASE("an episode spanning buffers keeps its conditioning vector") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 3);
    CyclingSampler sampler({sv({1.0, 0.0}), sv({0.0, 1.0})});
    Rng rng(10);
    CollectState carry;
    auto first = collect_rollouts(policy, *env, sampler, 30, 0, rng, carry);
    auto second = collect_rollouts(policy, *env, sampler, 30, 0, rng, carry);
    // the episode is 50 steps long, so the first 20 steps of the second
    // buffer still belong to the first episode and keep its vector
    for (std::size_t i = 0; i < 20; ++i) CHECK(second.entries[i].w == first.entries[0].w);
    CHECK(second.entries[20].w != first.entries[0].w); // new episode, next vector
}

TEST_CASE("one terminal step has advantage equal to its reward error") {
    RolloutBuffer buffer = make_buffer({1.0}, {0.0}, 0.0, true);
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);
    CHECK(gae.advantages_raw[0] == 1.0);
    CHECK(gae.returns[0] == ObjectiveVector{1.0, 1.0});
}

TEST_CASE("zero rewards and zero values give zero advantages") {
    RolloutBuffer buffer = make_buffer({0.0, 0.0}, {0.0, 0.0}, 0.0, true);
    GaeResult gae = compute_gae(buffer, 0.9, 0.5);
    CHECK(gae.advantages_raw == std::vector<double>{0.0, 0.0});
}

TEST_CASE("three-step recursion matches the hand-computed table") {
    // gamma 0.9, lambda 0.5, rewards 1,1,1, values 0.5, bootstrap 0.5:
    // every delta is 1 + 0.9*0.5 - 0.5 = 0.95, folded back at factor 0.45.
    RolloutBuffer buffer = make_buffer({1.0, 1.0, 1.0}, {0.5, 0.5, 0.5}, 0.5, false);
    GaeResult gae = compute_gae(buffer, 0.9, 0.5);
    REQUIRE(gae.advantages_raw.size() == 3);
    CHECK(gae.advantages_raw[2] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(gae.advantages_raw[1] == doctest::Approx(1.3775).epsilon(1e-12));
    CHECK(gae.advantages_raw[0] == doctest::Approx(1.569875).epsilon(1e-12));

    // per-objective discounted returns bootstrap from the tail value
    CHECK(gae.returns[2][0] == doctest::Approx(1.0 + 0.9 * 0.5));
    CHECK(gae.returns[1][0] == doctest::Approx(1.0 + 0.9 * 1.45));
    CHECK(gae.returns[0][0] == doctest::Approx(1.0 + 0.9 * (1.0 + 0.9 * 1.45)));
}

TEST_CASE("terminal entries cut the bootstrap chain") {
    RolloutBuffer buffer = make_buffer({1.0, 1.0}, {0.0, 0.0}, 99.0, true);
    GaeResult gae = compute_gae(buffer, 0.9, 0.5);
    // last step terminal: its return ignores the (poisoned) tail value
    CHECK(gae.returns[1] == ObjectiveVector{1.0, 1.0});
    CHECK(gae.advantages_raw[1] == 1.0);
}

TEST_CASE("normalised advantages have zero mean and unit spread") {
    RolloutBuffer buffer =
        make_buffer({1.0, -2.0, 0.5, 3.0}, {0.1, 0.2, -0.3, 0.0}, 0.25, false);
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);
    double mean = 0.0;
    for (double a : gae.advantages) mean += a;
    mean /= 4.0;
    CHECK(std::abs(mean) < 1e-12);
    double var = 0.0;
    for (double a : gae.advantages) var += (a - mean) * (a - mean);
    CHECK(std::sqrt(var / 4.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("at unchanged parameters the update gradient is the plain policy gradient") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(8), 17);
    FixedSampler sampler(sv({0.6, 0.4}));
    Rng rng(22);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 16, 0, rng, carry);
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);

    std::vector<std::size_t> batch(buffer.entries.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;

    PPOConfig cfg;
    cfg.value_coef = 0.0; // isolate the actor term
    cfg.entropy_coef = 0.0;
    PolicyGradients clipped = policy.make_gradients();
    clipped.zero();
    BatchStats stats = compute_batch_gradient(policy, buffer, batch, gae.advantages,
                                              gae.returns, cfg, clipped);

    CHECK(stats.clip_fraction == 0.0); // every ratio is exactly 1

    // Reference: gradient of -(1/n) sum_i A_i log pi(a_i | s_i).
    PolicyGradients vanilla = policy.make_gradients();
    vanilla.zero();
    auto sigma = policy.sigma();
    double n = static_cast<double>(batch.size());
    for (std::size_t i : batch) {
        const RolloutEntry& e = buffer.entries[i];
        PolicyForward fw = policy.forward(e.state, e.w);
        std::vector<double> mean_grad(e.action.size()), log_std_grad(e.action.size());
        for (std::size_t d = 0; d < e.action.size(); ++d) {
            double z = (e.action[d] - fw.mean[d]) / sigma[d];
            mean_grad[d] = -gae.advantages[i] * (z / sigma[d]) / n;
            log_std_grad[d] = -gae.advantages[i] * (z * z - 1.0) / n;
        }
        std::vector<double> value_grad(e.reward.size(), 0.0);
        policy.backward(fw, mean_grad, value_grad, log_std_grad, vanilla);
    }

    REQUIRE(clipped.trunk.g.size() == vanilla.trunk.g.size());
    for (std::size_t i = 0; i < clipped.trunk.g.size(); ++i)
        CHECK(clipped.trunk.g[i] == doctest::Approx(vanilla.trunk.g[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < clipped.actor.g.size(); ++i)
        CHECK(clipped.actor.g[i] == doctest::Approx(vanilla.actor.g[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < clipped.log_std.size(); ++i)
        CHECK(clipped.log_std[i] == doctest::Approx(vanilla.log_std[i]).epsilon(1e-9));
    // the critic term was disabled, so those gradients stay zero
    for (double g : clipped.critic.g) CHECK(g == 0.0);
}

TEST_CASE("clipped surrogate never exceeds the raw ratio surrogate") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(8), 29);
    FixedSampler sampler(sv({0.5, 0.5}));
    Rng rng(5);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 64, 0, rng, carry);
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);

    // move the policy so ratios leave 1
    PPOConfig cfg;
    cfg.epochs = 3;
    cfg.minibatch = 32;
    cfg.lr = 1e-2;
    AdamConfig adam;
    adam.lr = cfg.lr;
    PolicyOptimiser opt(policy, adam);
    Rng update_rng(6);
    ppo_update(policy, opt, buffer, gae, cfg, update_rng);

    // per-sample check of min(r A, clip(r) A) <= r A at the moved parameters
    auto sigma = policy.sigma();
    for (std::size_t i = 0; i < buffer.entries.size(); ++i) {
        const RolloutEntry& e = buffer.entries[i];
        double lp = policy.log_prob(e.state, e.w, e.action);
        double ratio = std::exp(lp - e.log_prob);
        double a = gae.advantages[i];
        double clipped = std::clamp(ratio, 0.8, 1.2) * a;
        CHECK(std::min(ratio * a, clipped) <= ratio * a + 1e-12);
    }
}

TEST_CASE("repeated updates on a frozen buffer drive the critic loss down") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 31);
    FixedSampler sampler(sv({0.5, 0.5}));
    Rng rng(7);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 100, 0, rng, carry);
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);

    PPOConfig cfg;
    cfg.epochs = 10;
    cfg.minibatch = 50;
    cfg.lr = 3e-3;
    AdamConfig adam;
    adam.lr = cfg.lr;
    PolicyOptimiser opt(policy, adam);
    Rng update_rng(8);

    PPOStats first = ppo_update(policy, opt, buffer, gae, cfg, update_rng);
    PPOStats second = ppo_update(policy, opt, buffer, gae, cfg, update_rng);
    PPOStats third = ppo_update(policy, opt, buffer, gae, cfg, update_rng);
    CHECK_FALSE(first.nan_aborted);
    CHECK(third.critic_loss < first.critic_loss);
    CHECK(second.critic_loss < first.critic_loss);
}

TEST_CASE("a poisoned buffer aborts the update and restores the parameters") {
    auto env = make_environment("pointmass-2");
    WeightConditionedPolicy policy(pm2_policy_config(), 13);
    FixedSampler sampler(sv({0.5, 0.5}));
    Rng rng(9);
    CollectState carry;
    RolloutBuffer buffer = collect_rollouts(policy, *env, sampler, 32, 0, rng, carry);
    buffer.entries[5].reward[0] = std::nan("");
    GaeResult gae = compute_gae(buffer, 0.99, 0.95);

    PPOConfig cfg;
    cfg.minibatch = 16;
    AdamConfig adam;
    PolicyOptimiser opt(policy, adam);
    auto before = policy.snapshot();
    Rng update_rng(10);
    PPOStats stats = ppo_update(policy, opt, buffer, gae, cfg, update_rng);
    CHECK(stats.nan_aborted);
    CHECK(policy.snapshot().trunk == before.trunk);
    CHECK(policy.snapshot().actor == before.actor);
    CHECK(policy.snapshot().critic == before.critic);
    CHECK(policy.snapshot().log_std == before.log_std);
}

TEST_CASE("mean scalarised return averages completed episodes") {
    RolloutBuffer buffer;
    auto add = [&](double r, bool terminal) {
        RolloutEntry e;
        e.reward = {r, r};
        e.w = sv({0.5, 0.5});
        e.terminal = terminal;
        buffer.entries.push_back(e);
    };
    add(1.0, false);
    add(2.0, true);  // episode sum 3
    add(4.0, true);  // episode sum 4
    add(7.0, false); // incomplete: ignored once any episode completed
    CHECK(buffer_mean_scalarised_return(buffer) == doctest::Approx(3.5));

    buffer.entries.resize(1); // no completed episode: report the partial sum
    CHECK(buffer_mean_scalarised_return(buffer) == doctest::Approx(1.0));
}

TEST_CASE("training on the fast axis of the bandit approaches its optimum") {
    // Conditioned on w = (1, 0), the best arm returns exactly 1.
    auto env = make_environment("concave-bandit");
    PolicyConfig pcfg;
    pcfg.state_dim = 1;
    pcfg.action_dim = 1;
    pcfg.objectives = 2;
    pcfg.hidden = 16;
    WeightConditionedPolicy policy(pcfg, 41);

    PPOConfig cfg;
    cfg.buffer_size = 128;
    cfg.minibatch = 32;
    cfg.epochs = 10;
    cfg.lr = 3e-3;
    AdamConfig adam;
    adam.lr = cfg.lr;
    PolicyOptimiser opt(policy, adam);
    FixedSampler sampler(sv({1.0, 0.0}));
    Rng rng(42), update_rng(43);
    CollectState carry;

    double last_return = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        RolloutBuffer buffer =
            collect_rollouts(policy, *env, sampler, cfg.buffer_size, 0, rng, carry);
        GaeResult gae = compute_gae(buffer, cfg.gamma, cfg.lambda);
        PPOStats stats = ppo_update(policy, opt, buffer, gae, cfg, update_rng);
        REQUIRE_FALSE(stats.nan_aborted);
        last_return = stats.mean_scalarised_return;
    }
    // deterministic evaluation: mean action should score >= 0.95
    env->reset(0);
    auto action = policy.mean_action({0.0}, sv({1.0, 0.0}));
    Transition t = env->step(action);
    CHECK(t.reward[0] >= 0.95);
    CHECK(last_return > 0.8); // sampled returns also close in
}
