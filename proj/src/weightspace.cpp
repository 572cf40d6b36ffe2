#include "moppo/weightspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "moppo/csv.hpp"

namespace moppo {

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kStepTolerance = 1e-9;

long integer_ratio(double num, double den, const char* what) {
    double ratio = num / den;
    long rounded = std::lround(ratio);
    if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > kStepTolerance)
        throw NonDivisibleStep(std::string(what) + ": " + std::to_string(num) + "/" +
                               std::to_string(den) + " is not an integer");
    return rounded;
}

void compositions(int parts, long total, std::vector<long>& prefix,
                  const std::function<void(const std::vector<long>&)>& emit) {
    if (parts == 1) {
        prefix.push_back(total);
        emit(prefix);
        prefix.pop_back();
        return;
    }
    for (long c = 0; c <= total; ++c) {
        prefix.push_back(c);
        compositions(parts - 1, total - c, prefix, emit);
        prefix.pop_back();
    }
}

} // namespace

ScalarisationVector ScalarisationVector::from_weights(std::vector<double> w) {
    if (w.size() < 2)
        throw InvalidWeights("scalarisation vector needs at least 2 components");
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0)
            throw InvalidWeights("scalarisation components must be finite and >= 0");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw InvalidWeights("scalarisation components must sum to 1");
    return ScalarisationVector(std::move(w));
}

ScalarisationVector ScalarisationVector::from_grid(const std::vector<long>& counts,
                                                   long denom) {
    if (counts.size() < 2) throw InvalidWeights("grid vector needs at least 2 components");
    long total = 0;
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) throw InvalidWeights("grid counts must be >= 0");
        total += counts[i];
        w[i] = static_cast<double>(counts[i]) / static_cast<double>(denom);
    }
    if (total != denom) throw InvalidWeights("grid counts must sum to the denominator");
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    return ScalarisationVector(std::move(w));
}

double squared_distance(const ScalarisationVector& a, const ScalarisationVector& b) {
    if (a.dimension() != b.dimension())
        throw DimensionMismatch("scalarisation vectors of different dimension");
    double d = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

PivotMode parse_pivot_mode(const std::string& name) {
    if (name == "include-endpoints") return PivotMode::IncludeEndpoints;
    if (name == "drop-last") return PivotMode::DropLast;
    if (name == "interior-only") return PivotMode::InteriorOnly;
    throw ConfigError("unknown pivot mode: " + name);
}

std::string to_string(PivotMode mode) {
    switch (mode) {
        case PivotMode::IncludeEndpoints: return "include-endpoints";
        case PivotMode::DropLast: return "drop-last";
        case PivotMode::InteriorOnly: return "interior-only";
    }
    return "?";
}

void DecompositionConfig::validate() const {
    if (m < 2) throw ConfigError("decomposition: m must be >= 2");
    if (!(step2 > 0.0 && step2 <= step1 && step1 <= 1.0))
        throw ConfigError("decomposition: need 0 < step2 <= step1 <= 1");
    integer_ratio(1.0, step1, "1/step1");
    integer_ratio(1.0, step2, "1/step2");
    integer_ratio(step1, step2, "step1/step2");
    if (pivot_count < 1) throw ConfigError("decomposition: K must be >= 1");
    if (candidate_count < 1) throw ConfigError("decomposition: M must be >= 1");
    if (pool_size < 1 || pool_size > candidate_count)
        throw ConfigError("decomposition: need 1 <= N <= M");
}

std::vector<ScalarisationVector> generate_simplex_grid(int m, double step) {
    if (m < 2) throw InvalidWeights("simplex grid needs m >= 2");
    if (!(step > 0.0 && step <= 1.0)) throw NonDivisibleStep("step must be in (0, 1]");
    long levels = integer_ratio(1.0, step, "1/step");
    std::vector<ScalarisationVector> grid;
    std::vector<long> prefix;
    compositions(m, levels, prefix, [&](const std::vector<long>& counts) {
        grid.push_back(ScalarisationVector::from_grid(counts, levels));
    });
    return grid;
}

std::vector<ScalarisationVector> generate_pivots(int m, double step1, PivotMode mode,
                                                 int expected_k) {
    std::vector<ScalarisationVector> grid = generate_simplex_grid(m, step1);
    std::vector<ScalarisationVector> pivots;
    switch (mode) {
        case PivotMode::IncludeEndpoints:
            pivots = grid;
            break;
        case PivotMode::DropLast:
            pivots.assign(grid.begin(), grid.end() - 1);
            break;
        case PivotMode::InteriorOnly: {
            double cutoff = step1 / 2.0;
            for (const ScalarisationVector& w : grid) {
                bool interior = true;
                for (std::size_t i = 0; i < w.dimension(); ++i)
                    if (w[i] < cutoff) interior = false;
                if (interior) pivots.push_back(w);
            }
            break;
        }
    }
    if (static_cast<int>(pivots.size()) != expected_k)
        throw PivotCountMismatch("pivot mode " + to_string(mode) + " yields " +
                                 std::to_string(pivots.size()) + " pivots, configured K = " +
                                 std::to_string(expected_k));
    return pivots;
}

std::vector<ScalarisationVector> generate_candidates(const ScalarisationVector& pivot,
                                                     double step2, int count) {
    std::vector<ScalarisationVector> grid =
        generate_simplex_grid(static_cast<int>(pivot.dimension()), step2);
    if (static_cast<int>(grid.size()) < count)
        throw InsufficientGrid("fine grid has " + std::to_string(grid.size()) +
                               " points, need " + std::to_string(count));
    std::sort(grid.begin(), grid.end(), [&](const ScalarisationVector& a,
                                            const ScalarisationVector& b) {
        double da = squared_distance(a, pivot);
        double db = squared_distance(b, pivot);
        if (da != db) return da < db;
        return a < b;
    });
    grid.resize(static_cast<std::size_t>(count));
    return grid;
}

std::size_t nearest_index(const std::vector<ScalarisationVector>& pivots,
                          const ScalarisationVector& w) {
    if (pivots.empty()) throw EmptyCandidates("nearest_index over empty pivot set");
    std::size_t best = 0;
    double best_d = squared_distance(pivots[0], w);
    for (std::size_t i = 1; i < pivots.size(); ++i) {
        double d = squared_distance(pivots[i], w);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

bool in_cell(const std::vector<ScalarisationVector>& pivots, std::size_t k,
             const ScalarisationVector& w) {
    return nearest_index(pivots, w) == k;
}

std::vector<SubSpace> build_decomposition(const DecompositionConfig& cfg) {
    cfg.validate();
    std::vector<ScalarisationVector> pivots =
        generate_pivots(cfg.m, cfg.step1, cfg.pivot_mode, cfg.pivot_count);
    std::vector<SubSpace> subs;
    subs.reserve(pivots.size());
    for (std::size_t i = 0; i < pivots.size(); ++i) {
        SubSpace s;
        s.index = static_cast<int>(i) + 1;
        s.pivot = pivots[i];
        s.candidates = generate_candidates(pivots[i], cfg.step2, cfg.candidate_count);
        subs.push_back(std::move(s));
    }
    return subs;
}

void write_weights_csv(const std::string& path,
                       const std::vector<ScalarisationVector>& ws) {
    if (ws.empty()) throw EmptyFront("no weight vectors to export");
    std::vector<std::string> header;
    for (std::size_t j = 0; j < ws[0].dimension(); ++j)
        header.push_back("w_" + std::to_string(j + 1));
    CsvFile csv(path, header);
    for (const ScalarisationVector& w : ws) {
        std::vector<std::string> cells;
        for (std::size_t j = 0; j < w.dimension(); ++j) cells.push_back(fmt_weight(w[j]));
        csv.row(cells);
    }
}

} // namespace moppo
