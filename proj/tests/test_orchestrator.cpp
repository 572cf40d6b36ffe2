#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "moppo/config.hpp"
#include "moppo/errors.hpp"
#include "moppo/orchestrator.hpp"

using namespace moppo;

namespace {

ScalarisationVector sv(std::vector<double> w) {
    return ScalarisationVector::from_weights(std::move(w));
}

/// Bandit run small enough for unit tests: 3 pivots, 3 candidates each,
/// 2 seeds, 3 stages. Every policy trains 2 + (3-1)*1 = 4 iterations.
ExperimentConfig tiny_config(const std::string& variant) {
    std::string text = "[run]\n"
                       "variant = " + variant + "\n"
                       "env = concave-bandit\n"
                       "seeds = 1, 2\n"
                       "[policy]\n"
                       "hidden = 8\n"
                       "[decomposition]\n"
                       "step1 = 0.5\n"
                       "step2 = 0.25\n"
                       "pivots = 3\n"
                       "candidates = 3\n"
                       "pool = 2\n"
                       "pivot_mode = include-endpoints\n"
                       "[ppo]\n"
                       "buffer = 32\n"
                       "minibatch = 16\n"
                       "epochs = 2\n"
                       "[schedule]\n"
                       "warmup = 2\n"
                       "stage_iters = 1\n"
                       "stages = 3\n"
                       "[surrogate]\n"
                       "bags = 3\n"
                       "[acquisition]\n"
                       "evaluate_all_candidates = true\n";
    return config_from_text(text, {}, false);
}

bool same_stats(const PPOStats& a, const PPOStats& b) {
    return a.actor_loss == b.actor_loss && a.critic_loss == b.critic_loss &&
           a.entropy == b.entropy && a.clip_fraction == b.clip_fraction &&
           a.mean_scalarised_return == b.mean_scalarised_return &&
           a.nan_aborted == b.nan_aborted;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("archive bookkeeping: live policies, per-seed values, front provenance") {
    ParetoArchive archive;
    archive.append({1, 1, 1, sv({1.0, 0.0}), {1.0, 0.0}});
    archive.append({1, 1, 2, sv({0.0, 1.0}), {0.0, 1.0}});
    archive.append({1, 2, 1, sv({1.0, 0.0}), {0.5, 0.5}});
    archive.append({2, 1, 1, sv({1.0, 0.0}), {1.0, 0.0}}); // duplicate value
    archive.append({2, 2, 1, sv({1.0, 0.0}), {0.9, 0.8}});

    CHECK(archive.live_policy_count() == 3);  // (1,1), (1,2), (2,1)
    CHECK(archive.live_policy_count(1) == 3); // stages never add policies

    std::uint64_t seed = 2;
    CHECK(archive.values(-1, &seed).size() == 2);
    CHECK(archive.values(1).size() == 3);

    auto front = archive.front();
    REQUIRE(front.size() == 3);
    // the duplicated (1,0) collapsed onto its stage-1 record
    CHECK(front[0].stage == 1);
    CHECK(front[0].value == ObjectiveVector{1.0, 0.0});
    CHECK(front[1].value == ObjectiveVector{0.0, 1.0});
    CHECK(front[2].value == ObjectiveVector{0.9, 0.8});
}

TEST_CASE("deterministic environments make one evaluation episode enough") {
    auto env = make_environment("concave-bandit");
    PolicyConfig pcfg;
    pcfg.state_dim = 1;
    pcfg.action_dim = 1;
    pcfg.objectives = 2;
    pcfg.hidden = 8;
    WeightConditionedPolicy policy(pcfg, 7);
    ScalarisationVector w = sv({0.5, 0.5});
    ObjectiveVector once = evaluate_policy(policy, *env, w, 1);
    ObjectiveVector many = evaluate_policy(policy, *env, w, 10);
    CHECK(once == many);
    CHECK(once.size() == 2);
}

TEST_CASE("parallel_for covers every index once and forwards exceptions") {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(97, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);

    parallel_for(5, 1, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (std::size_t i = 0; i < 5; ++i) CHECK(hits[i].load() == 2);

    CHECK_THROWS_AS(parallel_for(8, 3,
                                 [](std::size_t i) {
                                     if (i == 5) throw ConfigError("boom");
                                 }),
                    ConfigError);
}

TEST_CASE("every variant trains the same iteration budget") {
    for (const char* variant : {"fixed", "random", "mean", "ucb"}) {
        ExperimentConfig cfg = tiny_config(variant);
        RunResult result = run_experiment(cfg, 1);
        // 3 pivots x 2 seeds, each 2 warm-up + 2 stage blocks of 1 iteration
        std::map<std::pair<std::uint64_t, int>, int> iters;
        for (const auto& row : result.training_log) {
            auto key = std::make_pair(row.seed, row.k);
            iters[key] = std::max(iters[key], row.iteration);
        }
        CHECK(iters.size() == 6);
        for (const auto& [key, count] : iters) CHECK(count == 4);
    }
}

TEST_CASE("the live policy count stays at pivots times seeds at every stage") {
    ExperimentConfig cfg = tiny_config("ucb");
    RunResult result = run_experiment(cfg, 2);
    for (int stage = 1; stage <= cfg.schedule.stages; ++stage)
        CHECK(result.archive.live_policy_count(stage) == 6);
    CHECK(result.archive.live_policy_count() == 6);
}

TEST_CASE("evaluating the whole candidate set archives K x seeds x M rows per stage") {
    ExperimentConfig cfg = tiny_config("random");
    RunResult result = run_experiment(cfg, 1);
    std::map<int, int> rows_per_stage;
    for (const auto& rec : result.archive.records()) rows_per_stage[rec.stage] += 1;
    REQUIRE(rows_per_stage.size() == 3);
    for (const auto& [stage, count] : rows_per_stage) CHECK(count == 3 * 2 * 3);
}

TEST_CASE("per-seed cumulative hypervolume never drops between stages") {
    ExperimentConfig cfg = tiny_config("ucb");
    RunResult result = run_experiment(cfg, 2);
    std::map<std::uint64_t, double> last_hv;
    for (const auto& row : result.stage_metrics) {
        auto it = last_hv.find(row.seed);
        if (it != last_hv.end()) CHECK(row.hv >= it->second);
        last_hv[row.seed] = row.hv;
        CHECK(row.hv > 0.0);
    }
    // one row per (stage, seed)
    CHECK(result.stage_metrics.size() == 6);
}

TEST_CASE("warm-up is variant-independent, step for step") {
    RunResult fixed = run_experiment(tiny_config("fixed"), 1);
    RunResult ucb = run_experiment(tiny_config("ucb"), 2);
    auto warmup_rows = [](const RunResult& r) {
        std::vector<TrainingRow> rows;
        for (const auto& row : r.training_log)
            if (row.stage == 0) rows.push_back(row);
        return rows;
    };
    auto a = warmup_rows(fixed);
    auto b = warmup_rows(ucb);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 12); // 6 policies x 2 warm-up iterations
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].k == b[i].k);
        CHECK(a[i].iteration == b[i].iteration);
        CHECK(same_stats(a[i].stats, b[i].stats));
    }
}

TEST_CASE("a one-vector candidate set makes the random variant replay the fixed one") {
    auto degenerate = [](const std::string& variant) {
        ExperimentConfig cfg = tiny_config(variant);
        cfg.decomposition.candidate_count = 1;
        cfg.decomposition.pool_size = 1;
        cfg.validate();
        return run_experiment(cfg, 1);
    };
    RunResult fixed = degenerate("fixed");
    RunResult random = degenerate("random");

    REQUIRE(fixed.training_log.size() == random.training_log.size());
    for (std::size_t i = 0; i < fixed.training_log.size(); ++i)
        CHECK(same_stats(fixed.training_log[i].stats, random.training_log[i].stats));

    REQUIRE(fixed.archive.records().size() == random.archive.records().size());
    for (std::size_t i = 0; i < fixed.archive.records().size(); ++i) {
        CHECK(fixed.archive.records()[i].value == random.archive.records()[i].value);
        CHECK(fixed.archive.records()[i].w == random.archive.records()[i].w);
    }
}

TEST_CASE("zero exploration weight turns the optimistic variant into the mean one") {
    ExperimentConfig ucb0 = tiny_config("ucb");
    ucb0.beta_mode = BetaMode::Zero;
    RunResult a = run_experiment(ucb0, 1);
    RunResult b = run_experiment(tiny_config("mean"), 2);

    REQUIRE(a.training_log.size() == b.training_log.size());
    for (std::size_t i = 0; i < a.training_log.size(); ++i)
        CHECK(same_stats(a.training_log[i].stats, b.training_log[i].stats));
    REQUIRE(a.selections.size() == b.selections.size());
    for (std::size_t i = 0; i < a.selections.size(); ++i) {
        CHECK(a.selections[i].w == b.selections[i].w);
        CHECK(a.selections[i].beta == 0.0);
        CHECK(b.selections[i].beta == 0.0);
        CHECK(a.selections[i].hv_if_added == b.selections[i].hv_if_added);
    }
    REQUIRE(a.archive.records().size() == b.archive.records().size());
    for (std::size_t i = 0; i < a.archive.records().size(); ++i)
        CHECK(a.archive.records()[i].value == b.archive.records()[i].value);
}

TEST_CASE("pool selection runs between the second and the last stage") {
    ExperimentConfig cfg = tiny_config("ucb");
    RunResult result = run_experiment(cfg, 1);
    REQUIRE_FALSE(result.selections.empty());
    for (const auto& row : result.selections) {
        CHECK(row.stage >= 2);
        CHECK(row.stage < cfg.schedule.stages);
        CHECK(row.beta > 0.0); // schedule mode
        CHECK(row.rank >= 1);
        CHECK(row.rank <= cfg.decomposition.pool_size);
        CHECK(row.hv_if_added >= 0.0);
    }
    // surrogates were fitted before any selection
    REQUIRE_FALSE(result.surrogate_fits.empty());
    for (const auto& fit : result.surrogate_fits) {
        CHECK(fit.stage >= 2);
        if (fit.fitted) CHECK(fit.rows >= 2);
    }

    // a fixed run never selects and never fits
    RunResult fixed = run_experiment(tiny_config("fixed"), 1);
    CHECK(fixed.selections.empty());
    CHECK(fixed.surrogate_fits.empty());
}

TEST_CASE("selections within one stage never repeat a vector") {
    RunResult result = run_experiment(tiny_config("ucb"), 1);
    std::map<std::tuple<int, std::uint64_t, int>, std::set<ScalarisationVector>> seen;
    for (const auto& row : result.selections) {
        auto key = std::make_tuple(row.stage, row.seed, row.k);
        CHECK(seen[key].insert(row.w).second); // second pick of same w would fail
    }
}

TEST_CASE("worker count changes nothing in the written outputs") {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = tiny_config("ucb");
    fs::path dir1 = "orch_workers_one";
    fs::path dir3 = "orch_workers_three";
    write_run_outputs(run_experiment(cfg, 1), cfg, dir1.string());
    write_run_outputs(run_experiment(cfg, 3), cfg, dir3.string());

    for (const char* name :
         {"archive.csv", "stage_reports.csv", "hv_curve.csv", "policy_returns.csv",
          "selection_log.csv", "surrogate_fits.csv", "training_log.csv", "front.csv",
          "pivots.csv", "candidates.csv", "reference.csv", "config.txt"}) {
        INFO(name);
        CHECK(slurp(dir1 / name) == slurp(dir3 / name));
    }
    CHECK(slurp(dir1 / "checkpoints" / "policy_s1_k1.txt") ==
          slurp(dir3 / "checkpoints" / "policy_s1_k1.txt"));
    fs::remove_all(dir1);
    fs::remove_all(dir3);
}

TEST_CASE("written outputs carry the documented headers") {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = tiny_config("mean");
    fs::path dir = "orch_headers_tmp";
    write_run_outputs(run_experiment(cfg, 2), cfg, dir.string());

    auto first_line = [&](const char* name) {
        std::ifstream in(dir / name);
        std::string line;
        std::getline(in, line);
        return line;
    };
    CHECK(first_line("archive.csv") == "stage,seed,k,w_1,w_2,v_1,v_2");
    CHECK(first_line("stage_reports.csv") == "stage,seed,hv,eu,sparsity");
    CHECK(first_line("hv_curve.csv") == "stage,seed,hv");
    CHECK(first_line("policy_returns.csv") == "stage,seed,k,mean_scalarised_return");
    CHECK(first_line("selection_log.csv") ==
          "stage,seed,k,rank,w_1,w_2,predicted_1,predicted_2,sigma_1,sigma_2,beta,"
          "hv_if_added");
    CHECK(first_line("surrogate_fits.csv") == "stage,seed,k,objective,rows,fitted");
    CHECK(first_line("training_log.csv") ==
          "stage,seed,k,iteration,actor_loss,critic_loss,entropy,clip_fraction,"
          "mean_return,nan_aborted");
    CHECK(first_line("front.csv") == "stage,seed,k,w_1,w_2,v_1,v_2");
    CHECK(first_line("pivots.csv") == "k,w_1,w_2");
    CHECK(first_line("candidates.csv") == "k,index,w_1,w_2");
    CHECK(first_line("reference.csv") == "r_1,r_2");
    CHECK(first_line("timings.csv") == "phase,seconds");

    // timings cover warm-up plus each stage
    std::ifstream timings(dir / "timings.csv");
    std::string line;
    int rows = 0;
    while (std::getline(timings, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 1 + 1 + cfg.schedule.stages + 1); // header, warmup, stages, total
    fs::remove_all(dir);
}

TEST_CASE("the front file is the non-dominated subset of the archive") {
    ExperimentConfig cfg = tiny_config("ucb");
    RunResult result = run_experiment(cfg, 1);
    auto front = result.archive.front();
    auto filtered = pareto_filter(result.archive.values());
    REQUIRE(front.size() == filtered.size());
    for (std::size_t i = 0; i < front.size(); ++i) CHECK(front[i].value == filtered[i]);
}

TEST_CASE("interpolation over nested grids reports non-decreasing hypervolume") {
    ExperimentConfig cfg = tiny_config("ucb");
    cfg.eval_episodes = 1;
    RunResult result = run_experiment(cfg, 2);
    InterpolationResult sweep =
        interpolation_sweep(result.policies, cfg, {2, 5, 9}, 0.125, 2);

    REQUIRE(sweep.rows.size() == 6); // 3 counts x 2 seeds
    std::map<std::uint64_t, double> last;
    for (const auto& row : sweep.rows) {
        auto it = last.find(row.seed);
        if (it != last.end()) CHECK(row.hv >= it->second - 1e-15);
        last[row.seed] = row.hv;
        CHECK(row.sparsity >= 0.0);
    }

    CHECK_THROWS_AS(interpolation_sweep(result.policies, cfg, {5, 5}, 0.125, 1),
                    ConfigError);
    CHECK_THROWS_AS(interpolation_sweep(result.policies, cfg, {}, 0.125, 1),
                    ConfigError);
    CHECK_THROWS_AS(interpolation_sweep(result.policies, cfg, {9, 5}, 0.125, 1),
                    ConfigError);
}

TEST_CASE("run results are reproducible call to call") {
    ExperimentConfig cfg = tiny_config("mean");
    RunResult a = run_experiment(cfg, 1);
    RunResult b = run_experiment(cfg, 1);
    REQUIRE(a.archive.records().size() == b.archive.records().size());
    for (std::size_t i = 0; i < a.archive.records().size(); ++i)
        CHECK(a.archive.records()[i].value == b.archive.records()[i].value);
    REQUIRE(a.stage_metrics.size() == b.stage_metrics.size());
    for (std::size_t i = 0; i < a.stage_metrics.size(); ++i) {
        CHECK(a.stage_metrics[i].hv == b.stage_metrics[i].hv);
        CHECK(a.stage_metrics[i].eu == b.stage_metrics[i].eu);
        CHECK(a.stage_metrics[i].sparsity == b.stage_metrics[i].sparsity);
    }
}
