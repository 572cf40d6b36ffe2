// End-to-end contract of the moppo command-line tool: exit codes, printed
// messages, manifest fields and the files each subcommand leaves behind.
// Runs the real binary (path in argv[1]) inside a scratch directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_checks = 0;
int g_failures = 0;

#define CHECK_MSG(cond, msg)                                                      \
    do {                                                                          \
        ++g_checks;                                                               \
        if (!(cond)) {                                                            \
            ++g_failures;                                                         \
            std::cout << "[FAIL] " << msg << " (line " << __LINE__ << ")\n";      \
        }                                                                         \
    } while (0)

std::string g_moppo;
fs::path g_scratch;

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

CmdResult run_cmd(const std::string& args) {
    const fs::path out = g_scratch / "stdout.txt";
    const fs::path err = g_scratch / "stderr.txt";
    const std::string full = "\"" + g_moppo + "\" " + args + " >" + out.string() +
                             " 2>" + err.string();
    const int rc = std::system(full.c_str());
    CmdResult r;
    if (rc >= 0 && WIFEXITED(rc)) r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

/// Small bandit experiment: finishes in seconds, still exercises selection.
const char* kTinyConfig = "[run]\n"
                          "variant = ucb\n"
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

void test_envs_listing() {
    CmdResult r = run_cmd("envs");
    CHECK_MSG(r.exit_code == 0, "envs exits 0");
    CHECK_MSG(contains(r.out, "concave-bandit"), "envs lists concave-bandit");
    CHECK_MSG(contains(r.out, "pointmass-2"), "envs lists pointmass-2");
    CHECK_MSG(contains(r.out, "pointmass-3"), "envs lists pointmass-3");
}

void test_validate() {
    const fs::path cfg = g_scratch / "tiny.ini";
    std::ofstream(cfg) << kTinyConfig;

    CmdResult ok = run_cmd("validate " + cfg.string());
    CHECK_MSG(ok.exit_code == 0, "validate exits 0 on a good config");
    CHECK_MSG(contains(ok.out, "# config hash "), "validate prints the config hash");
    CHECK_MSG(contains(ok.out, "3 sub-spaces, 3 candidates each, pool size 2"),
              "validate prints the decomposition summary");
    CHECK_MSG(contains(ok.out, "config OK"), "validate prints config OK");

    // the hash is 16 lowercase hex digits
    const auto pos = ok.out.find("# config hash ");
    std::string hash = ok.out.substr(pos + 14, 16);
    CHECK_MSG(hash.find_first_not_of("0123456789abcdef") == std::string::npos,
              "config hash is lowercase hex");

    CmdResult bad = run_cmd("validate " + cfg.string() + " --set run.env=gridworld");
    CHECK_MSG(bad.exit_code == 2, "unknown environment exits 2");
    CHECK_MSG(contains(bad.err, "error: unknown environment: gridworld"),
              "unknown environment is named on stderr");

    CmdResult badkey = run_cmd("validate " + cfg.string() + " --set ppo.nonsense=1");
    CHECK_MSG(badkey.exit_code == 2, "unknown override key exits 2");

    CmdResult missing = run_cmd("validate " + (g_scratch / "no_such.ini").string());
    CHECK_MSG(missing.exit_code == 2, "missing config file exits 2");
    CHECK_MSG(contains(missing.err, "error: "), "missing config reports on stderr");
}

void test_train_and_manifest() {
    const fs::path cfg = g_scratch / "tiny.ini";
    const fs::path out = g_scratch / "run_ucb";
    CmdResult r = run_cmd("train " + cfg.string() + " --out " + out.string() +
                          " --workers 1");
    CHECK_MSG(r.exit_code == 0, "train exits 0");
    CHECK_MSG(contains(r.out, "run concave-bandit-ucb-"), "train prints the run id");
    // 3 stages x 3 pivots x 2 seeds x 3 candidates evaluated per stage
    CHECK_MSG(contains(r.out, " complete, 54 archive records, outputs in " +
                                  out.string()),
              "train reports the archive size and output directory");

    json manifest = json::parse(slurp(out / "manifest.json"));
    CHECK_MSG(manifest.at("status") == "complete", "manifest status is complete");
    CHECK_MSG(manifest.at("variant") == "ucb", "manifest records the variant");
    CHECK_MSG(manifest.at("env") == "concave-bandit", "manifest records the env");
    CHECK_MSG(manifest.at("objectives") == 2, "manifest records the objective count");
    CHECK_MSG(manifest.at("seeds") == json::array({1, 2}), "manifest records seeds");
    CHECK_MSG(manifest.at("config_hash").get<std::string>().size() == 16,
              "manifest hash is 16 hex digits");
    CHECK_MSG(contains(manifest.at("run_id").get<std::string>(),
                       "concave-bandit-ucb-"),
              "manifest run id embeds env and variant");
    CHECK_MSG(manifest.at("reference_point").size() == 2,
              "manifest carries the reference point");

    for (const char* name :
         {"config.txt", "archive.csv", "stage_reports.csv", "hv_curve.csv",
          "policy_returns.csv", "selection_log.csv", "surrogate_fits.csv",
          "training_log.csv", "front.csv", "pivots.csv", "candidates.csv",
          "reference.csv", "timings.csv"}) {
        CHECK_MSG(fs::exists(out / name), std::string("train writes ") + name);
    }
    for (std::uint64_t seed : {1, 2}) {
        for (int k = 1; k <= 3; ++k) {
            const fs::path ck = out / "checkpoints" /
                                ("policy_s" + std::to_string(seed) + "_k" +
                                 std::to_string(k) + ".txt");
            CHECK_MSG(fs::exists(ck), "train writes checkpoint " + ck.string());
        }
    }

    // archive.csv: header + 54 rows
    CHECK_MSG(line_count(out / "archive.csv") == 55, "archive row count matches");
    // hv_curve.csv: header + stages x seeds
    CHECK_MSG(line_count(out / "hv_curve.csv") == 1 + 3 * 2,
              "hv curve has one row per stage and seed");

    // the config snapshot reloads into the same hash even with stray
    // environment variables around
    CmdResult revalidate = run_cmd("validate " + (out / "config.txt").string());
    CHECK_MSG(revalidate.exit_code == 0, "the config snapshot revalidates");
    CHECK_MSG(contains(revalidate.out,
                       "# config hash " +
                           manifest.at("config_hash").get<std::string>()),
              "snapshot hash matches the manifest hash");
}

void test_worker_invariance_and_stage_override() {
    const fs::path cfg = g_scratch / "tiny.ini";
    const fs::path out3 = g_scratch / "run_ucb_w3";
    CmdResult r = run_cmd("train " + cfg.string() + " --out " + out3.string() +
                          " --workers 3");
    CHECK_MSG(r.exit_code == 0, "train with three workers exits 0");
    const fs::path out1 = g_scratch / "run_ucb";
    for (const char* name : {"archive.csv", "stage_reports.csv", "training_log.csv",
                             "selection_log.csv", "front.csv"}) {
        CHECK_MSG(slurp(out1 / name) == slurp(out3 / name),
                  std::string(name) + " is byte-identical across worker counts");
    }

    // --stages truncates the schedule
    const fs::path short_out = g_scratch / "run_short";
    CmdResult s = run_cmd("train " + cfg.string() + " --out " + short_out.string() +
                          " --workers 1 --stages 2");
    CHECK_MSG(s.exit_code == 0, "train --stages 2 exits 0");
    CHECK_MSG(line_count(short_out / "hv_curve.csv") == 1 + 2 * 2,
              "--stages 2 leaves two stages per seed in the hv curve");
}

void test_train_error_paths() {
    const fs::path cfg = g_scratch / "tiny.ini";
    CmdResult bad_env = run_cmd("train " + cfg.string() + " --out " +
                                (g_scratch / "run_bad").string() + " --env nowhere");
    CHECK_MSG(bad_env.exit_code == 2, "train with unknown env exits 2");
    CHECK_MSG(contains(bad_env.err, "error: unknown environment: nowhere"),
              "train names the unknown environment");
    CHECK_MSG(!fs::exists(g_scratch / "run_bad" / "manifest.json"),
              "a config rejected before the run leaves no manifest");

    CmdResult bad_set = run_cmd("train " + cfg.string() + " --out " +
                                (g_scratch / "run_bad2").string() + " --set malformed");
    CHECK_MSG(bad_set.exit_code == 2, "malformed --set exits 2");
    CHECK_MSG(contains(bad_set.err, "--set expects section.key=value"),
              "malformed --set is explained");
}

void test_report() {
    const fs::path cfg = g_scratch / "tiny.ini";
    const fs::path fixed_out = g_scratch / "run_fixed";
    CmdResult t = run_cmd("train " + cfg.string() + " --out " + fixed_out.string() +
                          " --workers 1 --variant fixed");
    CHECK_MSG(t.exit_code == 0, "fixed-variant train exits 0");

    const fs::path ucb_out = g_scratch / "run_ucb";
    const fs::path comparison = g_scratch / "comparison.csv";
    CmdResult r = run_cmd("report " + ucb_out.string() + " " + fixed_out.string() +
                          " --out " + comparison.string());
    CHECK_MSG(r.exit_code == 0, "report exits 0");
    CHECK_MSG(contains(r.out, "comparison written to " + comparison.string()),
              "report prints where the comparison went");
    CHECK_MSG(contains(r.out, "ucb"), "report table names the ucb run");
    CHECK_MSG(contains(r.out, "fixed"), "report table names the fixed run");
    CHECK_MSG(contains(r.out, "+/-"), "report prints mean +/- std");

    std::ifstream comp(comparison);
    std::string header;
    std::getline(comp, header);
    CHECK_MSG(header == "run,variant,env,seeds,hv_mean,hv_std,eu_mean,eu_std,"
                        "sparsity_mean,sparsity_std",
              "comparison header is stable");
    CHECK_MSG(line_count(comparison) == 3, "comparison has one row per run");

    CHECK_MSG(fs::exists(ucb_out / "pf.csv"), "report writes pf.csv per run");
    const std::string pf_before = slurp(ucb_out / "pf.csv");
    CmdResult again = run_cmd("report " + ucb_out.string() + " " +
                              fixed_out.string() + " --out " + comparison.string());
    CHECK_MSG(again.exit_code == 0, "re-report exits 0");
    CHECK_MSG(slurp(ucb_out / "pf.csv") == pf_before, "re-reporting is idempotent");

    CmdResult missing = run_cmd("report " + (g_scratch / "nowhere").string());
    CHECK_MSG(missing.exit_code == 2, "report on a missing dir exits 2");
    CHECK_MSG(contains(missing.err, "missing manifest"),
              "report names the missing manifest");
}

void test_single_seed_std_is_zero() {
    const fs::path cfg = g_scratch / "tiny.ini";
    const fs::path out = g_scratch / "run_one_seed";
    CmdResult t = run_cmd("train " + cfg.string() + " --out " + out.string() +
                          " --workers 1 --seeds 5");
    CHECK_MSG(t.exit_code == 0, "single-seed train exits 0");
    const fs::path comparison = g_scratch / "one_seed.csv";
    CmdResult r = run_cmd("report " + out.string() + " --out " + comparison.string());
    CHECK_MSG(r.exit_code == 0, "single-seed report exits 0");

    std::ifstream comp(comparison);
    std::string header, row;
    std::getline(comp, header);
    std::getline(comp, row);
    std::vector<std::string> cells;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    CHECK_MSG(cells.size() == 10, "comparison row has ten cells");
    CHECK_MSG(cells[3] == "1", "seed count column is 1");
    CHECK_MSG(std::stod(cells[5]) == 0.0, "hv std is zero for one seed");
    CHECK_MSG(std::stod(cells[7]) == 0.0, "eu std is zero for one seed");
    CHECK_MSG(std::stod(cells[9]) == 0.0, "sparsity std is zero for one seed");
}

void test_interpolate() {
    const fs::path run_dir = g_scratch / "run_ucb";
    CmdResult r = run_cmd("interpolate " + run_dir.string() +
                          " --counts 2 5 --step 0.25 --workers 2");
    CHECK_MSG(r.exit_code == 0, "interpolate exits 0");
    CHECK_MSG(contains(r.out, "interpolation over 2 counts written to " +
                                  run_dir.string() + "/hv_vs_n.csv"),
              "interpolate prints its outputs");
    CHECK_MSG(line_count(run_dir / "hv_vs_n.csv") == 1 + 2 * 2,
              "hv_vs_n has one row per count and seed");
    CHECK_MSG(line_count(run_dir / "sparsity_vs_n.csv") == 1 + 2 * 2,
              "sparsity_vs_n has one row per count and seed");

    std::ifstream hv(run_dir / "hv_vs_n.csv");
    std::string header;
    std::getline(hv, header);
    CHECK_MSG(header == "count,seed,hv", "hv_vs_n header is stable");

    CmdResult bad = run_cmd("interpolate " + run_dir.string() +
                            " --counts 5 2 --step 0.25");
    CHECK_MSG(bad.exit_code == 2, "non-ascending counts exit 2");
    CHECK_MSG(contains(bad.err, "strictly ascending"),
              "non-ascending counts are explained");

    CmdResult nodir = run_cmd("interpolate " + (g_scratch / "void").string() +
                              " --counts 2 5");
    CHECK_MSG(nodir.exit_code == 2, "interpolate on a missing dir exits 2");
}

void test_trace() {
    const fs::path bandit_trace = g_scratch / "bandit_trace.csv";
    CmdResult r = run_cmd("trace concave-bandit --out " + bandit_trace.string() +
                          " --seed 3");
    CHECK_MSG(r.exit_code == 0, "trace exits 0");
    CHECK_MSG(contains(r.out, "1 steps written to " + bandit_trace.string()),
              "bandit trace is one step");
    CHECK_MSG(line_count(bandit_trace) == 2, "bandit trace file is header plus one row");
    std::ifstream in(bandit_trace);
    std::string header;
    std::getline(in, header);
    CHECK_MSG(header == "step,s_1,a_1,r_1,r_2", "trace header is stable");

    const fs::path pm_trace = g_scratch / "pm_trace.csv";
    CmdResult pm = run_cmd("trace pointmass-2 --out " + pm_trace.string());
    CHECK_MSG(pm.exit_code == 0, "pointmass trace exits 0");
    CHECK_MSG(contains(pm.out, "50 steps written to"), "pointmass trace is 50 steps");
    CHECK_MSG(line_count(pm_trace) == 51, "pointmass trace file is header plus 50 rows");

    CmdResult bad = run_cmd("trace mars-rover --out " + pm_trace.string());
    CHECK_MSG(bad.exit_code == 2, "trace with unknown env exits 2");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_contract <path-to-moppo-binary>\n";
        return 2;
    }
    g_moppo = fs::absolute(argv[1]).string();
    g_scratch = fs::temp_directory_path() / "moppo_cli_contract";
    fs::remove_all(g_scratch);
    fs::create_directories(g_scratch);

    test_envs_listing();
    test_validate();
    test_train_and_manifest();
    test_worker_invariance_and_stage_override();
    test_train_error_paths();
    test_report();
    test_single_seed_std_is_zero();
    test_interpolate();
    test_trace();

    fs::remove_all(g_scratch);
    std::cout << (g_failures == 0 ? "all " : "FAILED: ") << g_checks
              << " checks, " << g_failures << " failures\n";
    return g_failures == 0 ? 0 : 1;
}
