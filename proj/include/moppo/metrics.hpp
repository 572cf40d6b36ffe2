#pragma once

#include <vector>

#include "moppo/weightspace.hpp"

namespace moppo {

/// Lower corner for hypervolume computation. Valid uses require every
/// contributing point to exceed it strictly in all components; points that
/// do not are dropped (their box is empty).
struct ReferencePoint {
    std::vector<double> values;
};

/// True when a weakly dominates b under maximisation: a >= b everywhere and
/// a > b somewhere. Equal vectors do not dominate each other.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/**
 * @brief Non-dominated subset of a point set (maximisation).
 *
 * Survivors keep their input order; exact duplicates collapse to the first
 * occurrence. Idempotent: filtering a filtered front is the identity.
 */
std::vector<ObjectiveVector> pareto_filter(const std::vector<ObjectiveVector>& points);

/**
 * @brief Exact hypervolume of the region dominated by the front above ref.
 *
 * Two objectives use a sort-and-sweep, three objectives slice along the
 * third axis into two-objective sub-problems; four or more throw
 * DimensionUnsupported. Points not strictly above ref in every component
 * contribute nothing. Throws EmptyFront on an empty input front.
 */
double hypervolume(const std::vector<ObjectiveVector>& front, const ReferencePoint& ref);

/// Mean over the weight set of the best scalarised value max_p w.p.
/// Throws EmptyFront when the front or the weight set is empty.
double expected_utility(const std::vector<ObjectiveVector>& front,
                        const std::vector<ScalarisationVector>& weights);

/**
 * @brief Mean squared gap between neighbouring front points, per objective.
 *
 * Sorts the front independently on each objective j and sums the squared
 * consecutive differences of that component, normalised by |front| - 1.
 * Lower is denser. Throws FrontTooSmall for fewer than two points.
 */
double sparsity(const std::vector<ObjectiveVector>& front);

/// Componentwise minimum over the records minus 1% of the componentwise
/// range (at least a hair below the minimum, so HV boxes stay non-empty).
ReferencePoint reference_from_records(const std::vector<ObjectiveVector>& records);

} // namespace moppo
