// Command-line front end: train runs, cross-run reports, interpolation
// sweeps, environment listings and config validation. Exit codes: 0 success,
// 2 invalid configuration or input artifacts, 3 runtime failure.

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "moppo/acquisition.hpp"
#include "moppo/config.hpp"
#include "moppo/csv.hpp"
#include "moppo/envs.hpp"
#include "moppo/errors.hpp"
#include "moppo/metrics.hpp"
#include "moppo/orchestrator.hpp"
#include "moppo/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moppo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

int classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) ||
        dynamic_cast<const UnknownVariant*>(&e) ||
        dynamic_cast<const UnknownEnvironment*>(&e) ||
        dynamic_cast<const InvalidWeights*>(&e) ||
        dynamic_cast<const NonDivisibleStep*>(&e) ||
        dynamic_cast<const PivotCountMismatch*>(&e) ||
        dynamic_cast<const InsufficientGrid*>(&e)) {
        return kExitInvalid;
    }
    return kExitRuntime;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string iso_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ConfigOverrides collect_overrides(const std::vector<std::string>& sets,
                                  const std::string& variant,
                                  const std::string& env,
                                  const std::string& seeds, int stages) {
    ConfigOverrides overrides;
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects section.key=value, got '" + s + "'");
        }
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!variant.empty()) overrides.emplace_back("run.variant", variant);
    if (!env.empty()) overrides.emplace_back("run.env", env);
    if (!seeds.empty()) overrides.emplace_back("run.seeds", seeds);
    if (stages > 0) overrides.emplace_back("schedule.stages", std::to_string(stages));
    return overrides;
}

void write_manifest(const std::string& out_dir, const json& manifest) {
    std::ofstream f(out_dir + "/manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              int workers, const ConfigOverrides& overrides) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    fs::create_directories(out_dir);
    const std::uint64_t hash = cfg.hash();
    json manifest;
    manifest["run_id"] = cfg.env_name + "-" + to_string(cfg.variant) + "-" +
                         hex64(hash).substr(0, 12);
    manifest["config_hash"] = hex64(hash);
    manifest["variant"] = to_string(cfg.variant);
    manifest["env"] = cfg.env_name;
    manifest["seeds"] = cfg.seeds;
    manifest["objectives"] = cfg.decomposition.m;
    manifest["started"] = iso_utc_now();
    manifest["status"] = "running";
    write_manifest(out_dir, manifest);

    try {
        const RunResult result = run_experiment(cfg, workers);
        write_run_outputs(result, cfg, out_dir);
        manifest["status"] = "complete";
        manifest["finished"] = iso_utc_now();
        manifest["reference_point"] = result.final_ref.values;
        manifest["outputs"] = json{{"config", "config.txt"},
                                   {"archive", "archive.csv"},
                                   {"stage_reports", "stage_reports.csv"},
                                   {"hv_curve", "hv_curve.csv"},
                                   {"policy_returns", "policy_returns.csv"},
                                   {"selection_log", "selection_log.csv"},
                                   {"surrogate_fits", "surrogate_fits.csv"},
                                   {"training_log", "training_log.csv"},
                                   {"front", "front.csv"},
                                   {"pivots", "pivots.csv"},
                                   {"candidates", "candidates.csv"},
                                   {"reference", "reference.csv"},
                                   {"timings", "timings.csv"},
                                   {"checkpoints", "checkpoints"}};
        write_manifest(out_dir, manifest);
        std::cout << "run " << manifest["run_id"].get<std::string>() << " complete, "
                  << result.archive.records().size() << " archive records, outputs in "
                  << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        manifest["status"] = "failed";
        manifest["finished"] = iso_utc_now();
        manifest["error"] = e.what();
        write_manifest(out_dir, manifest);
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
}

struct LoadedRun {
    std::string dir;
    std::string variant;
    std::string env;
    int objectives = 0;
    ExperimentConfig cfg;
    // archive.csv, kept as raw cells for echoing plus parsed values
    std::vector<std::vector<std::string>> raw_rows;
    std::vector<std::uint64_t> row_seed;
    std::vector<ObjectiveVector> row_value;
    std::vector<std::uint64_t> seeds;
};

/// Reads manifest + archive + config snapshot; throws ConfigError on any
/// missing or corrupt artifact.
LoadedRun load_run(const std::string& dir) {
    LoadedRun run;
    run.dir = dir;

    std::ifstream mf(dir + "/manifest.json", std::ios::binary);
    if (!mf) throw ConfigError("missing manifest: " + dir + "/manifest.json");
    json manifest;
    try {
        mf >> manifest;
        run.variant = manifest.at("variant").get<std::string>();
        run.env = manifest.at("env").get<std::string>();
        run.objectives = manifest.at("objectives").get<int>();
        if (manifest.at("status").get<std::string>() != "complete") {
            throw ConfigError("run " + dir + " is not complete (status '" +
                              manifest.at("status").get<std::string>() + "')");
        }
    } catch (const json::exception& e) {
        throw ConfigError("corrupt manifest in " + dir + ": " + e.what());
    }

    run.cfg = load_experiment_config(dir + "/config.txt", {}, /*use_environment=*/false);

    const auto table = read_csv(dir + "/archive.csv");
    if (table.size() < 2) throw ConfigError("empty archive in " + dir);
    const auto& header = table.front();
    const int m = run.objectives;
    if (static_cast<int>(header.size()) != 3 + 2 * m) {
        throw ConfigError("archive column count mismatch in " + dir);
    }
    std::set<std::uint64_t> seen;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& cells = table[i];
        if (cells.size() != header.size()) {
            throw ConfigError("ragged archive row in " + dir);
        }
        run.raw_rows.push_back(cells);
        run.row_seed.push_back(std::stoull(cells[1]));
        ObjectiveVector v(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            v[static_cast<std::size_t>(j)] = std::stod(cells[static_cast<std::size_t>(3 + m + j)]);
        }
        run.row_value.push_back(std::move(v));
        seen.insert(run.row_seed.back());
    }
    run.seeds.assign(seen.begin(), seen.end());
    return run;
}

struct SeedStats {
    double mean = 0.0;
    double std_dev = 0.0; ///< population standard deviation (0 for one seed)
};

SeedStats stats_of(const std::vector<double>& xs) {
    SeedStats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

std::string mean_pm_std(const SeedStats& s) {
    std::ostringstream os;
    os << std::setprecision(6) << s.mean << " +/- " << std::setprecision(3)
       << s.std_dev;
    return os.str();
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_csv) {
    std::vector<LoadedRun> runs;
    try {
        for (const auto& dir : run_dirs) runs.push_back(load_run(dir));
        for (const auto& r : runs) {
            if (r.objectives != runs.front().objectives) {
                throw ConfigError("runs mix objective counts; cannot share a reference point");
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    // One reference point and one utility grid across every run, so the
    // comparison columns are on the same scale.
    std::vector<ObjectiveVector> pooled;
    double finest_step = 1.0;
    for (const auto& r : runs) {
        pooled.insert(pooled.end(), r.row_value.begin(), r.row_value.end());
        finest_step = std::min(finest_step, r.cfg.decomposition.step2);
    }
    const ReferencePoint ref = reference_from_records(pooled);
    const auto eu_grid =
        generate_simplex_grid(runs.front().objectives, finest_step);

    CsvFile comparison(out_csv,
                       {"run", "variant", "env", "seeds", "hv_mean", "hv_std",
                        "eu_mean", "eu_std", "sparsity_mean", "sparsity_std"});
    std::cout << std::left << std::setw(28) << "run" << std::setw(9) << "variant"
              << std::setw(16) << "env" << std::setw(24) << "hv" << std::setw(24)
              << "eu" << std::setw(24) << "sparsity" << "\n";

    for (const auto& r : runs) {
        std::vector<double> hvs, eus, sps;
        for (const std::uint64_t seed : r.seeds) {
            std::vector<ObjectiveVector> vals;
            for (std::size_t i = 0; i < r.row_value.size(); ++i) {
                if (r.row_seed[i] == seed) vals.push_back(r.row_value[i]);
            }
            const auto front = pareto_filter(vals);
            hvs.push_back(hypervolume(front, ref));
            eus.push_back(expected_utility(front, eu_grid));
            sps.push_back(front.size() >= 2 ? sparsity(front) : 0.0);
        }
        const SeedStats hv = stats_of(hvs), eu = stats_of(eus), sp = stats_of(sps);
        comparison.row({r.dir, r.variant, r.env, std::to_string(r.seeds.size()),
                        fmt_full(hv.mean), fmt_full(hv.std_dev), fmt_full(eu.mean),
                        fmt_full(eu.std_dev), fmt_full(sp.mean), fmt_full(sp.std_dev)});
        std::cout << std::left << std::setw(28) << r.dir << std::setw(9) << r.variant
                  << std::setw(16) << r.env << std::setw(24) << mean_pm_std(hv)
                  << std::setw(24) << mean_pm_std(eu) << std::setw(24)
                  << mean_pm_std(sp) << "\n";

        // Fig-3-style front data: the non-dominated archive rows, echoed with
        // their original cells so re-reporting never perturbs a byte.
        const auto kept = pareto_filter(r.row_value);
        CsvFile pf(r.dir + "/pf.csv", {"stage", "seed", "k", "w", "v"});
        std::size_t next = 0;
        for (std::size_t i = 0; i < r.row_value.size() && next < kept.size(); ++i) {
            if (!(r.row_value[i] == kept[next])) continue;
            ++next;
            const auto& cells = r.raw_rows[i];
            const int m = r.objectives;
            std::string w_joined, v_joined;
            for (int j = 0; j < m; ++j) {
                if (j) {
                    w_joined += ";";
                    v_joined += ";";
                }
                w_joined += cells[static_cast<std::size_t>(3 + j)];
                v_joined += cells[static_cast<std::size_t>(3 + m + j)];
            }
            pf.row({cells[0], cells[1], cells[2], w_joined, v_joined});
        }
    }
    std::cout << "comparison written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_interpolate(const std::string& run_dir, const std::vector<int>& counts,
                    double step, int workers) {
    ExperimentConfig cfg;
    std::vector<TrainedPolicy> policies;
    try {
        std::ifstream mf(run_dir + "/manifest.json", std::ios::binary);
        if (!mf) throw ConfigError("missing manifest: " + run_dir + "/manifest.json");
        json manifest;
        try {
            mf >> manifest;
            if (manifest.at("status").get<std::string>() != "complete") {
                throw ConfigError("run " + run_dir + " is not complete");
            }
        } catch (const json::exception& e) {
            throw ConfigError("corrupt manifest in " + run_dir + ": " + e.what());
        }
        cfg = load_experiment_config(run_dir + "/config.txt", {},
                                     /*use_environment=*/false);

        if (counts.empty()) throw ConfigError("no interpolation counts given");
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] < 1) throw ConfigError("counts must be >= 1");
            if (i > 0 && counts[i] <= counts[i - 1]) {
                throw ConfigError("counts must be strictly ascending");
            }
        }
        if (step <= 0.0) {
            const int m = cfg.decomposition.m;
            if (m == 2) {
                step = 0.001;
            } else if (m == 3) {
                step = 0.02;
            } else {
                throw ConfigError("pass --step for " + std::to_string(m) +
                                  "-objective runs");
            }
        }
        for (const std::uint64_t seed : cfg.seeds) {
            for (int k = 1; k <= cfg.decomposition.pivot_count; ++k) {
                const std::string path = run_dir + "/checkpoints/policy_s" +
                                         std::to_string(seed) + "_k" +
                                         std::to_string(k) + ".txt";
                if (!fs::exists(path)) {
                    throw ConfigError("checkpoint missing: " + path);
                }
                auto loaded = WeightConditionedPolicy::load_checkpoint(path);
                policies.push_back(
                    {loaded.seed, loaded.pivot_index, std::move(loaded.policy)});
            }
        }
    } catch (const CorruptCheckpoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        const InterpolationResult result =
            interpolation_sweep(policies, cfg, counts, step, workers);
        CsvFile hv_csv(run_dir + "/hv_vs_n.csv", {"count", "seed", "hv"});
        CsvFile sp_csv(run_dir + "/sparsity_vs_n.csv", {"count", "seed", "sparsity"});
        for (const auto& row : result.rows) {
            hv_csv.row({std::to_string(row.count), std::to_string(row.seed),
                        fmt_full(row.hv)});
            sp_csv.row({std::to_string(row.count), std::to_string(row.seed),
                        fmt_full(row.sparsity)});
        }
        std::cout << "interpolation over " << counts.size() << " counts written to "
                  << run_dir << "/hv_vs_n.csv and sparsity_vs_n.csv\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
}

int cmd_envs() {
    std::cout << std::left << std::setw(16) << "name" << std::setw(11) << "states"
              << std::setw(11) << "actions" << std::setw(12) << "objectives"
              << "horizon\n";
    for (const auto& name : list_environments()) {
        const auto env = make_environment(name);
        const MOMDPSpec& s = env->spec();
        std::cout << std::left << std::setw(16) << s.name << std::setw(11)
                  << s.state_dim << std::setw(11) << s.action_dim << std::setw(12)
                  << s.objectives << s.horizon << "\n";
    }
    return kExitOk;
}

int cmd_trace(const std::string& env_name, const std::string& out_path,
              std::uint64_t seed) {
    std::unique_ptr<Environment> env;
    try {
        env = make_environment(env_name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    Rng rng(Rng::derive({seed, 77}));
    env->reset(seed);
    std::vector<Transition> trace;
    while (!env->done()) {
        std::vector<double> action;
        for (const auto& [lo, hi] : env->spec().action_bounds) {
            action.push_back(rng.uniform(lo, hi));
        }
        trace.push_back(env->step(action));
    }
    write_trace_csv(out_path, trace);
    std::cout << trace.size() << " steps written to " << out_path << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path, const ConfigOverrides& overrides) {
    try {
        const ExperimentConfig cfg = load_experiment_config(config_path, overrides);
        const auto subspaces = build_decomposition(cfg.decomposition);
        std::cout << cfg.canonical();
        std::cout << "# config hash " << hex64(cfg.hash()) << "\n";
        std::cout << "# decomposition: " << subspaces.size() << " sub-spaces, "
                  << subspaces.front().candidates.size()
                  << " candidates each, pool size " << cfg.decomposition.pool_size
                  << "\n";
        std::cout << "config OK\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-objective PPO by scalarisation-space decomposition"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Run one experiment end to end");
    std::string train_config, train_out = "run";
    std::string ov_variant, ov_env, ov_seeds;
    int ov_stages = 0;
    int workers = 0;
    std::vector<std::string> sets;
    train->add_option("config", train_config, "config file path")->required();
    train->add_option("--out", train_out, "output directory (default ./run)");
    train->add_option("--workers", workers,
                      "max concurrent trainers (default: one per policy)");
    train->add_option("--variant", ov_variant, "override run.variant");
    train->add_option("--env", ov_env, "override run.env");
    train->add_option("--seeds", ov_seeds, "override run.seeds, e.g. 1,2,3");
    train->add_option("--stages", ov_stages, "override schedule.stages");
    train->add_option("--set", sets, "generic override section.key=value");

    // report
    auto* report = app.add_subcommand("report", "Compare completed runs");
    std::vector<std::string> report_dirs;
    std::string report_out = "comparison.csv";
    report->add_option("run_dirs", report_dirs, "run directories")->required();
    report->add_option("--out", report_out, "comparison CSV path");

    // interpolate
    auto* interp = app.add_subcommand(
        "interpolate", "Evaluate checkpoints on nested finer weight grids");
    std::string interp_dir;
    std::vector<int> interp_counts;
    double interp_step = 0.0;
    int interp_workers = 0;
    interp->add_option("run_dir", interp_dir, "completed run directory")->required();
    interp->add_option("--counts", interp_counts, "ascending grid sizes, e.g. 10 20 50")
        ->required();
    interp->add_option("--step", interp_step,
                       "fine grid spacing (default 0.001 for 2 objectives, 0.02 for 3)");
    interp->add_option("--workers", interp_workers, "max concurrent evaluators");

    // envs
    app.add_subcommand("envs", "List bundled environments");

    // trace
    auto* trace = app.add_subcommand("trace", "Export one random-action episode as CSV");
    std::string trace_env, trace_out = "trace.csv";
    std::uint64_t trace_seed = 1;
    trace->add_option("env", trace_env, "environment name")->required();
    trace->add_option("--out", trace_out, "trace CSV path");
    trace->add_option("--seed", trace_seed, "action seed");

    // validate
    auto* validate = app.add_subcommand("validate", "Resolve and check a config");
    std::string validate_config;
    std::vector<std::string> validate_sets;
    validate->add_option("config", validate_config, "config file path")->required();
    validate->add_option("--set", validate_sets, "generic override section.key=value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            ConfigOverrides overrides;
            try {
                overrides = collect_overrides(sets, ov_variant, ov_env, ov_seeds, ov_stages);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInvalid;
            }
            return cmd_train(train_config, train_out, workers, overrides);
        }
        if (report->parsed()) return cmd_report(report_dirs, report_out);
        if (interp->parsed()) {
            return cmd_interpolate(interp_dir, interp_counts, interp_step,
                                   interp_workers);
        }
        if (app.get_subcommand("envs")->parsed()) return cmd_envs();
        if (trace->parsed()) return cmd_trace(trace_env, trace_out, trace_seed);
        if (validate->parsed()) {
            ConfigOverrides overrides;
            try {
                overrides = collect_overrides(validate_sets, "", "", "", 0);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitInvalid;
            }
            return cmd_validate(validate_config, overrides);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
    return kExitOk;
}
