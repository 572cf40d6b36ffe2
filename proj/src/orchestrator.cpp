#include "moppo/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "moppo/acquisition.hpp"
#include "moppo/csv.hpp"
#include "moppo/errors.hpp"
#include "moppo/surrogate.hpp"

namespace moppo {

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
    const std::size_t w = workers <= 1
                              ? 1
                              : std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (w <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        threads.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::size_t ParetoArchive::live_policy_count(int stage) const {
    std::set<std::pair<std::uint64_t, int>> keys;
    for (const auto& r : records_) {
        if (stage >= 0 && r.stage > stage) continue;
        keys.insert({r.seed, r.k});
    }
    return keys.size();
}

std::vector<ObjectiveVector> ParetoArchive::values(int stage,
                                                   const std::uint64_t* seed) const {
    std::vector<ObjectiveVector> out;
    for (const auto& r : records_) {
        if (stage >= 0 && r.stage > stage) continue;
        if (seed && r.seed != *seed) continue;
        out.push_back(r.value);
    }
    return out;
}

std::vector<ArchiveRecord> ParetoArchive::front() const {
    const std::vector<ObjectiveVector> kept = pareto_filter(values());
    std::vector<ArchiveRecord> out;
    out.reserve(kept.size());
    std::size_t next = 0;
    // pareto_filter preserves input order and keeps first occurrences, so
    // survivors can be matched back to records in a single forward pass.
    for (const auto& r : records_) {
        if (next < kept.size() && r.value == kept[next]) {
            out.push_back(r);
            ++next;
        }
    }
    return out;
}

ObjectiveVector evaluate_policy(const WeightConditionedPolicy& policy,
                                Environment& env, const ScalarisationVector& w,
                                int episodes) {
    if (episodes < 1) throw ConfigError("evaluation episodes must be >= 1");
    const int m = env.spec().objectives;
    ObjectiveVector total(m, 0.0);
    for (int ep = 0; ep < episodes; ++ep) {
        env.reset(static_cast<std::uint64_t>(ep));
        while (!env.done()) {
            const Transition tr = env.step(policy.mean_action(env.state(), w));
            for (int j = 0; j < m; ++j) total[j] += tr.reward[j];
        }
    }
    for (int j = 0; j < m; ++j) total[j] /= episodes;
    return total;
}

namespace {

/// One policy's full training state: networks, derived random streams, the
/// working pool and the surrogate stack. Everything a stage touches lives
/// here, so trainers can run concurrently without sharing.
struct Trainer {
    std::uint64_t seed;
    int k; // 1-based sub-space index
    const SubSpace* sub;
    std::unique_ptr<Environment> train_env;
    std::unique_ptr<Environment> eval_env;
    WeightConditionedPolicy policy;
    PolicyOptimiser optimiser;
    Rng action_rng, resample_rng, shuffle_rng;
    CollectState carry;
    std::vector<ScalarisationVector> pool;
    long t_prime = 0;       // acquisition counter; advances only when a selection runs
    int iterations_done = 0;
    std::vector<SurrogateDataset> datasets;   // per objective
    std::vector<SurrogateEnsemble> ensembles; // per objective
    bool ensembles_ready = false;
    EvaluationSet prev_fresh;
    std::map<ScalarisationVector, ObjectiveVector> last_value;

    EvaluationSet fresh; // this stage's evaluations
    std::vector<SelectionRow> selections;
    std::vector<SurrogateFitRow> fits;
    std::vector<TrainingRow> training;

    Trainer(const ExperimentConfig& cfg, const MOMDPSpec& spec, const SubSpace& s,
            std::uint64_t seed_)
        : seed(seed_),
          k(s.index),
          sub(&s),
          train_env(make_environment(cfg.env_name)),
          eval_env(make_environment(cfg.env_name)),
          policy(PolicyConfig{spec.state_dim, spec.action_dim, spec.objectives,
                              cfg.hidden},
                 Rng::derive({seed_, static_cast<std::uint64_t>(s.index), 1})),
          optimiser(policy, AdamConfig{cfg.ppo.lr, 0.9, 0.999, 1e-8}),
          action_rng(Rng::derive({seed_, static_cast<std::uint64_t>(s.index), 2})),
          resample_rng(Rng::derive({seed_, static_cast<std::uint64_t>(s.index), 3})),
          shuffle_rng(Rng::derive({seed_, static_cast<std::uint64_t>(s.index), 4})),
          pool{s.pivot},
          datasets(static_cast<std::size_t>(spec.objectives)),
          ensembles(static_cast<std::size_t>(spec.objectives)) {}
};

void run_iterations(Trainer& t, const ExperimentConfig& cfg, WeightSampler& sampler,
                    int stage_label, int iters) {
    for (int i = 0; i < iters; ++i) {
        const RolloutBuffer buf =
            collect_rollouts(t.policy, *t.train_env, sampler, cfg.ppo.buffer_size,
                             cfg.ppo.resample_steps, t.action_rng, t.carry);
        const GaeResult gae = compute_gae(buf, cfg.ppo.gamma, cfg.ppo.lambda);
        const PPOStats stats =
            ppo_update(t.policy, t.optimiser, buf, gae, cfg.ppo, t.shuffle_rng);
        ++t.iterations_done;
        t.training.push_back({stage_label, t.seed, t.k, t.iterations_done, stats});
    }
}

void warm_up(Trainer& t, const ExperimentConfig& cfg) {
    FixedSampler sampler(t.sub->pivot);
    run_iterations(t, cfg, sampler, 0, cfg.schedule.warmup);
}

void train_block(Trainer& t, const ExperimentConfig& cfg, int stage) {
    if (cfg.variant == Variant::Fixed) {
        FixedSampler sampler(t.sub->pivot);
        run_iterations(t, cfg, sampler, stage, cfg.schedule.stage_iters);
    } else if (cfg.variant == Variant::Random) {
        UniformPoolSampler sampler(t.sub->candidates, t.resample_rng);
        run_iterations(t, cfg, sampler, stage, cfg.schedule.stage_iters);
    } else {
        UniformPoolSampler sampler(t.pool, t.resample_rng);
        run_iterations(t, cfg, sampler, stage, cfg.schedule.stage_iters);
    }
}

/// The weight vectors a policy is measured on this stage: the pivot alone
/// for the fixed variant, the whole candidate set for the random variant
/// (its training distribution), and pivot plus working pool for the
/// surrogate-driven variants (everything else reuses last-known values).
std::vector<ScalarisationVector> evaluation_set(const Trainer& t,
                                                const ExperimentConfig& cfg) {
    switch (cfg.variant) {
    case Variant::Fixed:
        return {t.sub->pivot};
    case Variant::Random:
        return t.sub->candidates;
    default:
        break;
    }
    if (cfg.evaluate_all_candidates) return t.sub->candidates;
    std::vector<ScalarisationVector> ws{t.sub->pivot};
    for (const auto& w : t.pool) {
        if (!(w == t.sub->pivot)) ws.push_back(w);
    }
    return ws;
}

void evaluate_stage(Trainer& t, const ExperimentConfig& cfg) {
    t.fresh.clear();
    for (const auto& w : evaluation_set(t, cfg)) {
        const ObjectiveVector v =
            evaluate_policy(t.policy, *t.eval_env, w, cfg.eval_episodes);
        t.fresh.emplace_back(w, v);
        t.last_value[w] = v;
    }
}

/// Appends increment rows for every vector measured both last stage and this
/// one, then refits the per-objective ensembles once two rows exist.
void refit_surrogates(Trainer& t, const ExperimentConfig& cfg, int stage) {
    if (cfg.variant != Variant::Ucb && cfg.variant != Variant::Mean) return;
    if (!t.prev_fresh.empty()) {
        std::map<ScalarisationVector, ObjectiveVector> prev;
        for (const auto& [w, v] : t.prev_fresh) prev[w] = v;
        EvaluationSet before, after;
        for (const auto& [w, v] : t.fresh) {
            auto it = prev.find(w);
            if (it == prev.end()) continue;
            before.emplace_back(w, it->second);
            after.emplace_back(w, v);
        }
        if (!before.empty()) append_stage_data(t.datasets, before, after);
    }
    t.prev_fresh = t.fresh;
    if (stage < 2) return;

    bool all_fitted = true;
    for (std::size_t j = 0; j < t.datasets.size(); ++j) {
        const int rows = static_cast<int>(t.datasets[j].size());
        bool fitted = false;
        if (rows >= 2) {
            Rng bag_rng(Rng::derive({t.seed, static_cast<std::uint64_t>(t.k), 5,
                                     static_cast<std::uint64_t>(stage),
                                     static_cast<std::uint64_t>(j)}));
            try {
                t.ensembles[j] = fit_ensemble(t.datasets[j].rows(), cfg.surrogate, bag_rng);
                fitted = true;
            } catch (const InsufficientData&) {
                fitted = false;
            }
        }
        all_fitted = all_fitted && fitted;
        t.fits.push_back({stage, t.seed, t.k, static_cast<int>(j) + 1, rows, fitted});
    }
    t.ensembles_ready = all_fitted;
}

ObjectiveVector current_value_for(const Trainer& t, const ScalarisationVector& w) {
    auto it = t.last_value.find(w);
    if (it != t.last_value.end()) return it->second;
    // Nearest measured vector; map order breaks ties toward the
    // lexicographically smaller key.
    const ObjectiveVector* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [key, value] : t.last_value) {
        const double d = squared_distance(w, key);
        if (d < best_d) {
            best_d = d;
            best = &value;
        }
    }
    if (!best) throw InvalidStage("no evaluations recorded before selection");
    return *best;
}

/// Replaces the working pool with the N candidates whose optimistic
/// predictions most enlarge the hypervolume over this seed's archive so far.
/// Runs only between stages (a final-stage pool would never be trained on)
/// and only once the ensembles are ready; a skipped stage leaves the pool
/// unchanged and does not advance the exploration schedule.
void select_pool(Trainer& t, const ExperimentConfig& cfg, int stage,
                 const std::vector<ObjectiveVector>& seed_snapshot) {
    if (cfg.variant != Variant::Ucb && cfg.variant != Variant::Mean) return;
    if (stage < 2 || stage >= cfg.schedule.stages) return;
    if (!t.ensembles_ready) return;

    ++t.t_prime;
    const double beta =
        cfg.beta_mode == BetaMode::Zero ? 0.0 : beta_schedule(t.t_prime);

    std::vector<std::pair<ScalarisationVector, ObjectiveVector>> cand;
    cand.reserve(t.sub->candidates.size());
    for (const auto& w : t.sub->candidates) {
        cand.emplace_back(w, current_value_for(t, w));
    }
    const auto scored = score_candidates(t.ensembles, cand, beta);
    const ReferencePoint ref = reference_from_records(seed_snapshot);
    const SelectionResult sel = select_weights(scored, seed_snapshot, ref,
                                               cfg.decomposition.pool_size,
                                               cfg.strategy);
    t.pool.clear();
    int rank = 0;
    for (const auto& pick : sel.picks) {
        t.pool.push_back(pick.w);
        ++rank;
        t.selections.push_back({stage, t.seed, t.k, rank, pick.w, pick.predicted,
                                pick.sigma, beta, pick.hv_if_added});
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, int workers) {
    cfg.validate();
    const std::vector<SubSpace> subspaces = build_decomposition(cfg.decomposition);
    const MOMDPSpec spec = make_environment(cfg.env_name)->spec();

    std::vector<std::unique_ptr<Trainer>> trainers;
    trainers.reserve(cfg.seeds.size() * subspaces.size());
    for (const std::uint64_t seed : cfg.seeds) {
        for (const SubSpace& s : subspaces) {
            trainers.push_back(std::make_unique<Trainer>(cfg, spec, s, seed));
        }
    }
    const std::size_t n = trainers.size();
    const int effective_workers = workers <= 0 ? static_cast<int>(n) : workers;

    RunResult out;
    out.decomposition = subspaces;

    const auto run_start = std::chrono::steady_clock::now();
    auto phase_start = run_start;

    parallel_for(n, effective_workers,
                 [&](std::size_t i) { warm_up(*trainers[i], cfg); });
    out.phase_seconds.push_back(seconds_since(phase_start));

    // Cumulative evaluation vectors per seed, appended in fixed trainer
    // order after each stage's barrier, plus the prefix length at every
    // stage for retrospective metrics.
    std::map<std::uint64_t, std::vector<ObjectiveVector>> seed_values;
    std::map<std::uint64_t, std::vector<std::size_t>> seed_prefix;

    const int total_stages = cfg.schedule.stages;
    for (int stage = 1; stage <= total_stages; ++stage) {
        phase_start = std::chrono::steady_clock::now();

        parallel_for(n, effective_workers,
                     [&](std::size_t i) { evaluate_stage(*trainers[i], cfg); });

        // Single-threaded merge in construction order keeps every output
        // byte independent of worker scheduling.
        for (const auto& t : trainers) {
            double mean_return = 0.0;
            for (const auto& [w, v] : t->fresh) {
                out.archive.append({stage, t->seed, t->k, w, v});
                seed_values[t->seed].push_back(v);
                mean_return += scalarise(v, w);
            }
            mean_return /= static_cast<double>(t->fresh.size());
            out.policy_returns.push_back({stage, t->seed, t->k, mean_return});
        }
        for (const std::uint64_t seed : cfg.seeds) {
            seed_prefix[seed].push_back(seed_values[seed].size());
        }

        parallel_for(n, effective_workers, [&](std::size_t i) {
            Trainer& t = *trainers[i];
            refit_surrogates(t, cfg, stage);
            select_pool(t, cfg, stage, seed_values[t.seed]);
        });

        if (stage < total_stages) {
            parallel_for(n, effective_workers,
                         [&](std::size_t i) { train_block(*trainers[i], cfg, stage); });
        }
        out.phase_seconds.push_back(seconds_since(phase_start));
    }

    for (const auto& t : trainers) {
        out.selections.insert(out.selections.end(), t->selections.begin(),
                              t->selections.end());
        out.surrogate_fits.insert(out.surrogate_fits.end(), t->fits.begin(),
                                  t->fits.end());
        out.training_log.insert(out.training_log.end(), t->training.begin(),
                                t->training.end());
        out.policies.push_back({t->seed, t->k, t->policy});
    }
    std::stable_sort(out.selections.begin(), out.selections.end(),
                     [](const SelectionRow& a, const SelectionRow& b) {
                         return std::tie(a.stage, a.seed, a.k, a.rank) <
                                std::tie(b.stage, b.seed, b.k, b.rank);
                     });
    std::stable_sort(out.surrogate_fits.begin(), out.surrogate_fits.end(),
                     [](const SurrogateFitRow& a, const SurrogateFitRow& b) {
                         return std::tie(a.stage, a.seed, a.k, a.objective) <
                                std::tie(b.stage, b.seed, b.k, b.objective);
                     });
    std::stable_sort(out.training_log.begin(), out.training_log.end(),
                     [](const TrainingRow& a, const TrainingRow& b) {
                         return std::tie(a.stage, a.seed, a.k, a.iteration) <
                                std::tie(b.stage, b.seed, b.k, b.iteration);
                     });

    out.final_ref = reference_from_records(out.archive.values());

    std::vector<std::uint64_t> seeds_sorted = cfg.seeds;
    std::sort(seeds_sorted.begin(), seeds_sorted.end());
    const auto eu_grid =
        generate_simplex_grid(cfg.decomposition.m, cfg.decomposition.step2);
    for (int stage = 1; stage <= total_stages; ++stage) {
        for (const std::uint64_t seed : seeds_sorted) {
            const auto& all = seed_values[seed];
            const std::size_t upto = seed_prefix[seed][static_cast<std::size_t>(stage - 1)];
            const std::vector<ObjectiveVector> prefix(all.begin(),
                                                      all.begin() + static_cast<long>(upto));
            const auto front = pareto_filter(prefix);
            StageMetricsRow row;
            row.stage = stage;
            row.seed = seed;
            row.hv = hypervolume(front, out.final_ref);
            row.eu = expected_utility(front, eu_grid);
            row.sparsity = front.size() >= 2 ? sparsity(front) : 0.0;
            out.stage_metrics.push_back(row);
        }
    }

    out.total_seconds = seconds_since(run_start);
    return out;
}

namespace {

std::vector<std::string> numbered(const char* prefix, int count) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    for (int i = 1; i <= count; ++i) {
        names.push_back(std::string(prefix) + std::to_string(i));
    }
    return names;
}

void append_all(std::vector<std::string>& into, const std::vector<std::string>& from) {
    into.insert(into.end(), from.begin(), from.end());
}

} // namespace

void write_run_outputs(const RunResult& result, const ExperimentConfig& cfg,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/checkpoints");
    const int m = cfg.decomposition.m;
    const auto w_names = numbered("w_", m);
    const auto v_names = numbered("v_", m);

    {
        std::ofstream f(out_dir + "/config.txt", std::ios::binary);
        f << cfg.canonical();
    }

    {
        std::vector<std::string> header{"stage", "seed", "k"};
        append_all(header, w_names);
        append_all(header, v_names);
        CsvFile csv(out_dir + "/archive.csv", header);
        for (const auto& r : result.archive.records()) {
            std::vector<std::string> row{std::to_string(r.stage),
                                         std::to_string(r.seed), std::to_string(r.k)};
            for (int i = 0; i < m; ++i) row.push_back(fmt_weight(r.w[static_cast<std::size_t>(i)]));
            for (int i = 0; i < m; ++i) row.push_back(fmt_full(r.value[static_cast<std::size_t>(i)]));
            csv.row(row);
        }
    }

    {
        CsvFile csv(out_dir + "/stage_reports.csv",
                    {"stage", "seed", "hv", "eu", "sparsity"});
        for (const auto& r : result.stage_metrics) {
            csv.row({std::to_string(r.stage), std::to_string(r.seed), fmt_full(r.hv),
                     fmt_full(r.eu), fmt_full(r.sparsity)});
        }
    }

    {
        CsvFile csv(out_dir + "/hv_curve.csv", {"stage", "seed", "hv"});
        for (const auto& r : result.stage_metrics) {
            csv.row({std::to_string(r.stage), std::to_string(r.seed), fmt_full(r.hv)});
        }
    }

    {
        CsvFile csv(out_dir + "/policy_returns.csv",
                    {"stage", "seed", "k", "mean_scalarised_return"});
        for (const auto& r : result.policy_returns) {
            csv.row({std::to_string(r.stage), std::to_string(r.seed),
                     std::to_string(r.k), fmt_full(r.mean_scalarised_return)});
        }
    }

    {
        std::vector<std::string> header{"stage", "seed", "k", "rank"};
        append_all(header, w_names);
        append_all(header, numbered("predicted_", m));
        append_all(header, numbered("sigma_", m));
        header.push_back("beta");
        header.push_back("hv_if_added");
        CsvFile csv(out_dir + "/selection_log.csv", header);
        for (const auto& r : result.selections) {
            std::vector<std::string> row{std::to_string(r.stage), std::to_string(r.seed),
                                         std::to_string(r.k), std::to_string(r.rank)};
            for (int i = 0; i < m; ++i) row.push_back(fmt_weight(r.w[static_cast<std::size_t>(i)]));
            for (int i = 0; i < m; ++i) row.push_back(fmt_full(r.predicted[static_cast<std::size_t>(i)]));
            for (int i = 0; i < m; ++i) row.push_back(fmt_full(r.sigma[static_cast<std::size_t>(i)]));
            row.push_back(fmt_full(r.beta));
            row.push_back(fmt_full(r.hv_if_added));
            csv.row(row);
        }
    }

    {
        CsvFile csv(out_dir + "/surrogate_fits.csv",
                    {"stage", "seed", "k", "objective", "rows", "fitted"});
        for (const auto& r : result.surrogate_fits) {
            csv.row({std::to_string(r.stage), std::to_string(r.seed),
                     std::to_string(r.k), std::to_string(r.objective),
                     std::to_string(r.rows), r.fitted ? "1" : "0"});
        }
    }

    {
        CsvFile csv(out_dir + "/training_log.csv",
                    {"stage", "seed", "k", "iteration", "actor_loss", "critic_loss",
                     "entropy", "clip_fraction", "mean_return", "nan_aborted"});
        for (const auto& r : result.training_log) {
            csv.row({std::to_string(r.stage), std::to_string(r.seed),
                     std::to_string(r.k), std::to_string(r.iteration),
                     fmt_full(r.stats.actor_loss), fmt_full(r.stats.critic_loss),
                     fmt_full(r.stats.entropy), fmt_full(r.stats.clip_fraction),
                     fmt_full(r.stats.mean_scalarised_return),
                     r.stats.nan_aborted ? "1" : "0"});
        }
    }

    {
        std::vector<std::string> header{"stage", "seed", "k"};
        append_all(header, w_names);
        append_all(header, v_names);
        CsvFile csv(out_dir + "/front.csv", header);
        for (const auto& r : result.archive.front()) {
            std::vector<std::string> row{std::to_string(r.stage),
                                         std::to_string(r.seed), std::to_string(r.k)};
            for (int i = 0; i < m; ++i) row.push_back(fmt_weight(r.w[static_cast<std::size_t>(i)]));
            for (int i = 0; i < m; ++i) row.push_back(fmt_full(r.value[static_cast<std::size_t>(i)]));
            csv.row(row);
        }
    }

    {
        std::vector<std::string> header{"k"};
        append_all(header, w_names);
        CsvFile csv(out_dir + "/pivots.csv", header);
        for (const auto& s : result.decomposition) {
            std::vector<std::string> row{std::to_string(s.index)};
            for (int i = 0; i < m; ++i) row.push_back(fmt_weight(s.pivot[static_cast<std::size_t>(i)]));
            csv.row(row);
        }
    }

    {
        std::vector<std::string> header{"k", "index"};
        append_all(header, w_names);
        CsvFile csv(out_dir + "/candidates.csv", header);
        for (const auto& s : result.decomposition) {
            for (std::size_t c = 0; c < s.candidates.size(); ++c) {
                std::vector<std::string> row{std::to_string(s.index),
                                             std::to_string(c + 1)};
                for (int i = 0; i < m; ++i) {
                    row.push_back(fmt_weight(s.candidates[c][static_cast<std::size_t>(i)]));
                }
                csv.row(row);
            }
        }
    }

    {
        CsvFile csv(out_dir + "/reference.csv", numbered("r_", m));
        std::vector<std::string> row;
        for (int i = 0; i < m; ++i) {
            row.push_back(fmt_full(result.final_ref.values[static_cast<std::size_t>(i)]));
        }
        csv.row(row);
    }

    {
        // Wall-clock only; the one file that is not byte-stable across runs.
        CsvFile csv(out_dir + "/timings.csv", {"phase", "seconds"});
        for (std::size_t i = 0; i < result.phase_seconds.size(); ++i) {
            const std::string name = i == 0 ? "warmup" : "stage_" + std::to_string(i);
            csv.row({name, fmt_full(result.phase_seconds[i])});
        }
        csv.row({"total", fmt_full(result.total_seconds)});
    }

    for (const auto& p : result.policies) {
        const std::string path = out_dir + "/checkpoints/policy_s" +
                                 std::to_string(p.seed) + "_k" + std::to_string(p.k) +
                                 ".txt";
        p.policy.save_checkpoint(path, p.k, p.seed, cfg.schedule.stages);
    }
}

InterpolationResult interpolation_sweep(const std::vector<TrainedPolicy>& policies,
                                        const ExperimentConfig& cfg,
                                        const std::vector<int>& counts,
                                        double interp_step, int workers) {
    if (policies.empty()) throw ConfigError("no policies to evaluate");
    if (counts.empty()) throw ConfigError("interpolation counts are empty");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 1) throw ConfigError("interpolation counts must be >= 1");
        if (i > 0 && counts[i] <= counts[i - 1]) {
            throw ConfigError("interpolation counts must be strictly ascending");
        }
    }

    const std::vector<SubSpace> subspaces = build_decomposition(cfg.decomposition);
    const int max_count = counts.back();

    std::vector<std::vector<ScalarisationVector>> weight_lists(policies.size());
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const int k = policies[i].k;
        if (k < 1 || static_cast<std::size_t>(k) > subspaces.size()) {
            throw ConfigError("policy sub-space index " + std::to_string(k) +
                              " does not match the decomposition");
        }
        weight_lists[i] =
            generate_candidates(subspaces[static_cast<std::size_t>(k - 1)].pivot,
                                interp_step, max_count);
    }

    std::vector<std::vector<ObjectiveVector>> evals(policies.size());
    parallel_for(policies.size(), workers <= 0 ? static_cast<int>(policies.size()) : workers,
                 [&](std::size_t i) {
                     auto env = make_environment(cfg.env_name);
                     evals[i].reserve(weight_lists[i].size());
                     for (const auto& w : weight_lists[i]) {
                         evals[i].push_back(evaluate_policy(policies[i].policy, *env, w,
                                                            cfg.eval_episodes));
                     }
                 });

    std::vector<ObjectiveVector> everything;
    for (const auto& e : evals) everything.insert(everything.end(), e.begin(), e.end());

    InterpolationResult out;
    out.ref = reference_from_records(everything);

    std::vector<std::uint64_t> seeds;
    for (const auto& p : policies) seeds.push_back(p.seed);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    for (const int count : counts) {
        for (const std::uint64_t seed : seeds) {
            std::vector<ObjectiveVector> vals;
            for (std::size_t i = 0; i < policies.size(); ++i) {
                if (policies[i].seed != seed) continue;
                vals.insert(vals.end(), evals[i].begin(),
                            evals[i].begin() + static_cast<long>(count));
            }
            const auto front = pareto_filter(vals);
            InterpolationRow row;
            row.count = count;
            row.seed = seed;
            row.hv = hypervolume(front, out.ref);
            row.sparsity = front.size() >= 2 ? sparsity(front) : 0.0;
            out.rows.push_back(row);
        }
    }
    return out;
}

} // namespace moppo
