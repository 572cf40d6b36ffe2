#include "moppo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "moppo/csv.hpp"
#include "moppo/envs.hpp"
#include "moppo/errors.hpp"

namespace moppo {

Variant parse_variant(const std::string& name) {
    if (name == "fixed") return Variant::Fixed;
    if (name == "random") return Variant::Random;
    if (name == "mean") return Variant::Mean;
    if (name == "ucb") return Variant::Ucb;
    throw UnknownVariant("unknown variant '" + name +
                         "' (expected fixed, random, mean or ucb)");
}

std::string to_string(Variant variant) {
    switch (variant) {
    case Variant::Fixed: return "fixed";
    case Variant::Random: return "random";
    case Variant::Mean: return "mean";
    case Variant::Ucb: return "ucb";
    }
    throw UnknownVariant("invalid variant value");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": '" + value +
                          "' is not a number");
    }
}

long long parse_int(const std::string& section, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": '" + value +
                          "' is not an integer");
    }
}

bool parse_bool(const std::string& section, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": '" + value +
                      "' is not a boolean (true/false)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& section,
                                       const std::string& key,
                                       const std::string& value) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        try {
            std::size_t used = 0;
            unsigned long long v = std::stoull(part, &used);
            if (used != part.size()) throw std::invalid_argument("trailing");
            seeds.push_back(static_cast<std::uint64_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("[" + section + "] " + key + ": '" + part +
                              "' is not a seed (non-negative integer)");
        }
    }
    if (seeds.empty()) {
        throw ConfigError("[" + section + "] " + key + ": empty seed list");
    }
    return seeds;
}

/// Tracks which keys were consumed so leftovers can be reported as unknown.
class Reader {
public:
    explicit Reader(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& section, const std::string& key) const {
        auto s = raw_.sections.find(section);
        return s != raw_.sections.end() && s->second.count(key) > 0;
    }

    std::string take(const std::string& section, const std::string& key,
                     const std::string& fallback) {
        consumed_.insert(section + "." + key);
        auto s = raw_.sections.find(section);
        if (s == raw_.sections.end()) return fallback;
        auto k = s->second.find(key);
        if (k == s->second.end()) return fallback;
        return k->second;
    }

    double take_double(const std::string& s, const std::string& k, double fb) {
        std::string v = take(s, k, "");
        return v.empty() && !has_consumed_value(s, k) ? fb : parse_double(s, k, v);
    }

    // take() already records consumption; this distinguishes "absent" from
    // "present but empty", which is a value error.
    bool has_consumed_value(const std::string& s, const std::string& k) const {
        auto sec = raw_.sections.find(s);
        if (sec == raw_.sections.end()) return false;
        return sec->second.count(k) > 0;
    }

    int take_int(const std::string& s, const std::string& k, int fb) {
        std::string v = take(s, k, "");
        if (v.empty() && !has_consumed_value(s, k)) return fb;
        long long x = parse_int(s, k, v);
        if (x < -2147483648LL || x > 2147483647LL) {
            throw ConfigError("[" + s + "] " + k + ": out of range");
        }
        return static_cast<int>(x);
    }

    bool take_bool(const std::string& s, const std::string& k, bool fb) {
        std::string v = take(s, k, "");
        return v.empty() && !has_consumed_value(s, k) ? fb : parse_bool(s, k, v);
    }

    std::string take_string(const std::string& s, const std::string& k,
                            const std::string& fb) {
        std::string v = take(s, k, fb);
        return v;
    }

    void finish() const {
        for (const auto& [section, kv] : raw_.sections) {
            for (const auto& [key, value] : kv) {
                (void)value;
                if (consumed_.count(section + "." + key) == 0) {
                    throw ConfigError("unknown config key [" + section + "] " + key);
                }
            }
        }
    }

private:
    RawConfig raw_;
    std::set<std::string> consumed_;
};

// Every recognised (section, key) pair; drives environment-variable lookup.
const std::vector<std::pair<const char*, const char*>> kSchema = {
    {"run", "variant"},
    {"run", "env"},
    {"run", "seeds"},
    {"decomposition", "step1"},
    {"decomposition", "step2"},
    {"decomposition", "pivots"},
    {"decomposition", "candidates"},
    {"decomposition", "pool"},
    {"decomposition", "pivot_mode"},
    {"policy", "hidden"},
    {"ppo", "gamma"},
    {"ppo", "lambda"},
    {"ppo", "clip"},
    {"ppo", "lr"},
    {"ppo", "value_coef"},
    {"ppo", "entropy_coef"},
    {"ppo", "epochs"},
    {"ppo", "minibatch"},
    {"ppo", "buffer"},
    {"ppo", "resample_steps"},
    {"schedule", "warmup"},
    {"schedule", "stage_iters"},
    {"schedule", "stages"},
    {"surrogate", "lambda"},
    {"surrogate", "rho"},
    {"surrogate", "max_iter"},
    {"surrogate", "tol"},
    {"surrogate", "bags"},
    {"surrogate", "bootstrap"},
    {"acquisition", "strategy"},
    {"acquisition", "beta"},
    {"acquisition", "evaluate_all_candidates"},
    {"evaluation", "episodes"},
};

void apply_override(RawConfig& raw, const std::string& dotted,
                    const std::string& value) {
    auto dot = dotted.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
        throw ConfigError("override '" + dotted + "' is not of the form section.key");
    }
    raw.sections[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
}

void apply_environment(RawConfig& raw) {
    for (const auto& [section, key] : kSchema) {
        std::string var = "MOPPO_" + upper(section) + "_" + upper(key);
        if (const char* v = std::getenv(var.c_str())) {
            raw.sections[section][key] = v;
        }
    }
}

struct DecompositionDefaults {
    double step1, step2;
    int pivots, candidates, pool;
    PivotMode mode;
};

/// Published setups for the bundled problem sizes; anything else must spell
/// out the decomposition in full.
bool default_decomposition(int m, Variant variant, DecompositionDefaults& out) {
    const bool surrogate_driven = variant == Variant::Ucb || variant == Variant::Mean;
    if (m == 2) {
        out.step1 = 0.1;
        out.pivots = 10;
        out.mode = PivotMode::DropLast;
        out.step2 = surrogate_driven ? 0.01 : 0.1;
        out.candidates = surrogate_driven ? 100 : 10;
        out.pool = variant == Variant::Fixed ? 1 : 10;
        return true;
    }
    if (m == 3) {
        out.step1 = 0.1;
        out.pivots = 36;
        out.mode = PivotMode::InteriorOnly;
        out.step2 = surrogate_driven ? 0.05 : 0.1;
        out.candidates = surrogate_driven ? 117 : 36;
        out.pool = variant == Variant::Fixed ? 1 : 10;
        return true;
    }
    return false;
}

} // namespace

RawConfig parse_config_text(const std::string& text) {
    RawConfig raw;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header '" + line + "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": empty section name");
            }
            raw.sections[section]; // a header alone is legal
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        }
        if (section.empty()) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key before any [section] header");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        raw.sections[section][key] = value;
    }
    return raw;
}

ExperimentConfig config_from_text(const std::string& text,
                                  const ConfigOverrides& overrides,
                                  bool use_environment) {
    RawConfig raw = parse_config_text(text);
    if (use_environment) apply_environment(raw);
    for (const auto& [dotted, value] : overrides) apply_override(raw, dotted, value);

    Reader r(std::move(raw));
    ExperimentConfig cfg;

    cfg.variant = parse_variant(r.take_string("run", "variant", "ucb"));
    cfg.env_name = r.take_string("run", "env", "pointmass-2");
    cfg.seeds = parse_seeds("run", "seeds", r.take_string("run", "seeds", "1,2,3"));

    // The objective count comes from the environment, never from the file.
    const int m = make_environment(cfg.env_name)->spec().objectives;

    DecompositionDefaults dd{};
    const bool have_defaults = default_decomposition(m, cfg.variant, dd);
    auto require = [&](const char* key) -> std::string {
        if (!have_defaults && !r.has("decomposition", key)) {
            throw ConfigError(std::string("[decomposition] ") + key +
                              " is required for " + std::to_string(m) +
                              "-objective environments");
        }
        return key;
    };
    cfg.decomposition.m = m;
    cfg.decomposition.step1 = r.take_double("decomposition", require("step1").c_str(), dd.step1);
    cfg.decomposition.step2 = r.take_double("decomposition", require("step2").c_str(), dd.step2);
    cfg.decomposition.pivot_count = r.take_int("decomposition", require("pivots").c_str(), dd.pivots);
    cfg.decomposition.candidate_count = r.take_int("decomposition", require("candidates").c_str(), dd.candidates);
    cfg.decomposition.pool_size = r.take_int("decomposition", require("pool").c_str(), dd.pool);
    {
        std::string fallback = have_defaults ? to_string(dd.mode) : "";
        std::string mode = r.take_string("decomposition", require("pivot_mode").c_str(), fallback);
        cfg.decomposition.pivot_mode = parse_pivot_mode(mode);
    }

    cfg.hidden = r.take_int("policy", "hidden", 64);

    cfg.ppo.gamma = r.take_double("ppo", "gamma", 0.99);
    cfg.ppo.lambda = r.take_double("ppo", "lambda", 0.95);
    cfg.ppo.clip = r.take_double("ppo", "clip", 0.2);
    cfg.ppo.lr = r.take_double("ppo", "lr", 3e-4);
    cfg.ppo.value_coef = r.take_double("ppo", "value_coef", 0.5);
    cfg.ppo.entropy_coef = r.take_double("ppo", "entropy_coef", 0.0);
    cfg.ppo.epochs = r.take_int("ppo", "epochs", 10);
    cfg.ppo.minibatch = r.take_int("ppo", "minibatch", 64);
    cfg.ppo.buffer_size = r.take_int("ppo", "buffer", 2500);
    cfg.ppo.resample_steps = r.take_int("ppo", "resample_steps", 0);

    cfg.schedule.warmup = r.take_int("schedule", "warmup", 20);
    cfg.schedule.stage_iters = r.take_int("schedule", "stage_iters", 10);
    cfg.schedule.stages = r.take_int("schedule", "stages", 6);

    cfg.surrogate.lambda = r.take_double("surrogate", "lambda", 1e-3);
    cfg.surrogate.rho = r.take_double("surrogate", "rho", 0.5);
    cfg.surrogate.max_iter = r.take_int("surrogate", "max_iter", 10000);
    cfg.surrogate.tol = r.take_double("surrogate", "tol", 1e-7);
    cfg.surrogate.bags = r.take_int("surrogate", "bags", 10);
    cfg.surrogate.bootstrap = r.take_bool("surrogate", "bootstrap", true);

    cfg.strategy = parse_selection_strategy(
        r.take_string("acquisition", "strategy", "sequential_greedy"));
    {
        std::string beta = r.take_string("acquisition", "beta", "auto");
        if (beta == "auto") {
            cfg.beta_mode = cfg.variant == Variant::Mean ? BetaMode::Zero
                                                         : BetaMode::Schedule;
        } else if (beta == "schedule") {
            cfg.beta_mode = BetaMode::Schedule;
        } else if (beta == "zero") {
            cfg.beta_mode = BetaMode::Zero;
        } else {
            throw ConfigError("[acquisition] beta: '" + beta +
                              "' is not one of auto, schedule, zero");
        }
    }
    cfg.evaluate_all_candidates =
        r.take_bool("acquisition", "evaluate_all_candidates", false);

    cfg.eval_episodes = r.take_int("evaluation", "episodes", 1);

    r.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        const ConfigOverrides& overrides,
                                        bool use_environment) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_text(ss.str(), overrides, use_environment);
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("seed list contains duplicates");
    }
    decomposition.validate();
    if (hidden < 1) throw ConfigError("policy hidden width must be >= 1");
    if (ppo.gamma <= 0.0 || ppo.gamma > 1.0) throw ConfigError("gamma must be in (0, 1]");
    if (ppo.lambda < 0.0 || ppo.lambda > 1.0) throw ConfigError("lambda must be in [0, 1]");
    if (ppo.clip <= 0.0) throw ConfigError("clip must be positive");
    if (ppo.lr <= 0.0) throw ConfigError("lr must be positive");
    if (ppo.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (ppo.minibatch < 1) throw ConfigError("minibatch must be >= 1");
    if (ppo.buffer_size < 1) throw ConfigError("buffer must be >= 1");
    if (ppo.resample_steps < 0) throw ConfigError("resample_steps must be >= 0");
    if (schedule.warmup < 1) throw ConfigError("warmup must be >= 1");
    if (schedule.stage_iters < 1) throw ConfigError("stage_iters must be >= 1");
    if (schedule.stages < 1) throw ConfigError("stages must be >= 1");
    if (surrogate.lambda < 0.0) throw ConfigError("surrogate lambda must be >= 0");
    if (surrogate.rho < 0.0 || surrogate.rho > 1.0)
        throw ConfigError("surrogate rho must be in [0, 1]");
    if (surrogate.max_iter < 1) throw ConfigError("surrogate max_iter must be >= 1");
    if (surrogate.tol <= 0.0) throw ConfigError("surrogate tol must be positive");
    if (surrogate.bags < 1) throw ConfigError("surrogate bags must be >= 1");
    if (eval_episodes < 1) throw ConfigError("evaluation episodes must be >= 1");
}

std::string ExperimentConfig::canonical() const {
    std::string out;
    auto kv = [&out](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    };
    auto num = [](double v) { return fmt_full(v); };

    out += "[run]\n";
    kv("variant", to_string(variant));
    kv("env", env_name);
    {
        std::string joined;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (i) joined += ",";
            joined += std::to_string(seeds[i]);
        }
        kv("seeds", joined);
    }
    out += "[decomposition]\n";
    kv("step1", num(decomposition.step1));
    kv("step2", num(decomposition.step2));
    kv("pivots", std::to_string(decomposition.pivot_count));
    kv("candidates", std::to_string(decomposition.candidate_count));
    kv("pool", std::to_string(decomposition.pool_size));
    kv("pivot_mode", to_string(decomposition.pivot_mode));
    out += "[policy]\n";
    kv("hidden", std::to_string(hidden));
    out += "[ppo]\n";
    kv("gamma", num(ppo.gamma));
    kv("lambda", num(ppo.lambda));
    kv("clip", num(ppo.clip));
    kv("lr", num(ppo.lr));
    kv("value_coef", num(ppo.value_coef));
    kv("entropy_coef", num(ppo.entropy_coef));
    kv("epochs", std::to_string(ppo.epochs));
    kv("minibatch", std::to_string(ppo.minibatch));
    kv("buffer", std::to_string(ppo.buffer_size));
    kv("resample_steps", std::to_string(ppo.resample_steps));
    out += "[schedule]\n";
    kv("warmup", std::to_string(schedule.warmup));
    kv("stage_iters", std::to_string(schedule.stage_iters));
    kv("stages", std::to_string(schedule.stages));
    out += "[surrogate]\n";
    kv("lambda", num(surrogate.lambda));
    kv("rho", num(surrogate.rho));
    kv("max_iter", std::to_string(surrogate.max_iter));
    kv("tol", num(surrogate.tol));
    kv("bags", std::to_string(surrogate.bags));
    kv("bootstrap", surrogate.bootstrap ? "true" : "false");
    out += "[acquisition]\n";
    kv("strategy", to_string(strategy));
    kv("beta", beta_mode == BetaMode::Zero ? "zero" : "schedule");
    kv("evaluate_all_candidates", evaluate_all_candidates ? "true" : "false");
    out += "[evaluation]\n";
    kv("episodes", std::to_string(eval_episodes));
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

} // namespace moppo
