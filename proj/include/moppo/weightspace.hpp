#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moppo/errors.hpp"

namespace moppo {

/// A vector of objective values. Length equals the number of objectives m.
using ObjectiveVector = std::vector<double>;

/**
 * @brief A point on the (m-1)-simplex used to scalarise objectives.
 *
 * Invariants: m >= 2, every component >= 0 and finite, components sum to 1
 * within 1e-9. Vectors built from the same rational coordinates are
 * bit-identical regardless of the grid they came from (c/L and (c*k)/(L*k)
 * divide to the same double), so equality is plain component equality and
 * vectors are safe to use as map keys.
 */
class ScalarisationVector {
public:
    /// Empty placeholder (dimension 0); only valid as an assignment target.
    ScalarisationVector() = default;

    /// Validates and wraps an explicit weight list. Throws InvalidWeights.
    static ScalarisationVector from_weights(std::vector<double> w);

    /// Builds counts[i]/denom and renormalises once. counts must be
    /// non-negative and sum to denom.
    static ScalarisationVector from_grid(const std::vector<long>& counts, long denom);

    const std::vector<double>& weights() const { return w_; }
    std::size_t dimension() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }

    bool operator==(const ScalarisationVector& o) const { return w_ == o.w_; }
    bool operator!=(const ScalarisationVector& o) const { return w_ != o.w_; }
    /// Lexicographic order; gives weight sets a canonical ordering.
    bool operator<(const ScalarisationVector& o) const { return w_ < o.w_; }

private:
    explicit ScalarisationVector(std::vector<double> w) : w_(std::move(w)) {}
    std::vector<double> w_;
};

double squared_distance(const ScalarisationVector& a, const ScalarisationVector& b);

/// How the pivot set is taken from the coarse grid.
enum class PivotMode {
    IncludeEndpoints, ///< full coarse grid
    DropLast,         ///< full grid minus its lexicographically last element
    InteriorOnly,     ///< only points with every component > 0
};

PivotMode parse_pivot_mode(const std::string& name); // throws ConfigError
std::string to_string(PivotMode mode);

/**
 * @brief Two-layer decomposition parameters.
 *
 * step1 spaces the K pivot vectors, step2 spaces the fine candidate grid
 * from which each sub-space draws its M candidates; N is the working pool
 * size selected per sub-space. Requires 0 < step2 <= step1 <= 1, both steps
 * dividing 1, step2 dividing step1 (so pivots lie on the fine grid),
 * K >= 1, M >= 1 and N <= M.
 */
struct DecompositionConfig {
    int m = 2;
    double step1 = 0.1;
    double step2 = 0.01;
    int pivot_count = 10;     ///< K
    int candidate_count = 100; ///< M
    int pool_size = 10;       ///< N
    PivotMode pivot_mode = PivotMode::DropLast;

    void validate() const; // throws ConfigError / NonDivisibleStep
};

/// One sub-space of the decomposition: a pivot and the M fine-grid vectors
/// nearest to it. candidates[0] == pivot (the pivot lies on the fine grid
/// and is its own nearest point).
struct SubSpace {
    int index = 0; ///< k, 1-based
    ScalarisationVector pivot;
    std::vector<ScalarisationVector> candidates;
};

/**
 * @brief All simplex points whose components are multiples of step.
 *
 * Requires 1/step to be an integer within 1e-9 (NonDivisibleStep otherwise).
 * Returns C(1/step + m - 1, m - 1) vectors in ascending lexicographic order,
 * duplicate-free, each summing to 1 within 1e-9.
 */
std::vector<ScalarisationVector> generate_simplex_grid(int m, double step);

/// Pivot set for the given mode. Throws PivotCountMismatch when the mode
/// yields a different count than expected_k.
std::vector<ScalarisationVector> generate_pivots(int m, double step1, PivotMode mode,
                                                 int expected_k);

/// The count nearest step2-grid points to pivot (squared Euclidean distance,
/// ties broken lexicographically). Deterministic and duplicate-free; throws
/// InsufficientGrid when the grid has fewer than count points.
std::vector<ScalarisationVector> generate_candidates(const ScalarisationVector& pivot,
                                                     double step2, int count);

/// Index of the nearest pivot (squared Euclidean); ties go to the lower index.
std::size_t nearest_index(const std::vector<ScalarisationVector>& pivots,
                          const ScalarisationVector& w);

/// True when w's nearest pivot (lower-index tie break) is pivots[k].
bool in_cell(const std::vector<ScalarisationVector>& pivots, std::size_t k,
             const ScalarisationVector& w);

/// Builds the full decomposition: K sub-spaces with M candidates each.
std::vector<SubSpace> build_decomposition(const DecompositionConfig& cfg);

/// One row per vector, m columns w_1..w_m, 9 decimal digits.
void write_weights_csv(const std::string& path,
                       const std::vector<ScalarisationVector>& ws);

} // namespace moppo
