#include "moppo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "moppo/errors.hpp"

namespace moppo {

namespace {

void check_uniform_dimension(const std::vector<ObjectiveVector>& points) {
    for (const ObjectiveVector& p : points)
        if (p.size() != points.front().size())
            throw DimensionMismatch("objective vectors of mixed dimension");
}

/// Sweep over points sorted by first component descending. `points` must
/// already exclude anything not strictly above ref in both components.
double hv2(std::vector<ObjectiveVector> points, double rx, double ry) {
    std::sort(points.begin(), points.end(), [](const ObjectiveVector& a,
                                               const ObjectiveVector& b) {
        if (a[0] != b[0]) return a[0] > b[0];
        return a[1] > b[1];
    });
    double hv = 0.0;
    double y_max = ry;
    for (const ObjectiveVector& p : points) {
        if (p[1] > y_max) {
            hv += (p[0] - rx) * (p[1] - y_max);
            y_max = p[1];
        }
    }
    return hv;
}

} // namespace

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("objective vectors of different dimension");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strict = true;
    }
    return strict;
}

std::vector<ObjectiveVector> pareto_filter(const std::vector<ObjectiveVector>& points) {
    if (points.empty()) return {};
    check_uniform_dimension(points);

    // Sort indices lexicographically descending: any dominator of a point
    // sorts before it, so one pass against the kept set suffices.
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a] != points[b]) return points[b] < points[a];
        return a < b; // duplicates: earliest input index first
    });

    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool drop = false;
        for (std::size_t k : kept) {
            if (points[k] == points[idx] || dominates(points[k], points[idx])) {
                drop = true;
                break;
            }
        }
        if (!drop) kept.push_back(idx);
    }

    std::sort(kept.begin(), kept.end());
    std::vector<ObjectiveVector> front;
    front.reserve(kept.size());
    for (std::size_t idx : kept) front.push_back(points[idx]);
    return front;
}

double hypervolume(const std::vector<ObjectiveVector>& front, const ReferencePoint& ref) {
    if (front.empty()) throw EmptyFront("hypervolume of an empty front");
    check_uniform_dimension(front);
    std::size_t m = front.front().size();
    if (m != ref.values.size())
        throw DimensionMismatch("reference point dimension mismatch");
    if (m != 2 && m != 3)
        throw DimensionUnsupported("exact hypervolume supports m = 2 or 3, got m = " +
                                   std::to_string(m));

    // Only points strictly above ref in every component enclose volume.
    std::vector<ObjectiveVector> pts;
    for (const ObjectiveVector& p : front) {
        bool inside = true;
        for (std::size_t j = 0; j < m; ++j)
            if (!(p[j] > ref.values[j])) inside = false;
        if (inside) pts.push_back(p);
    }
    if (pts.empty()) return 0.0;

    if (m == 2) return hv2(std::move(pts), ref.values[0], ref.values[1]);

    // m == 3: slice along the third axis; each slab's cross-section is the
    // two-objective hypervolume of all points reaching above the slab.
    std::sort(pts.begin(), pts.end(), [](const ObjectiveVector& a,
                                         const ObjectiveVector& b) {
        return a[2] > b[2];
    });
    double hv = 0.0;
    std::vector<ObjectiveVector> active;
    std::size_t i = 0;
    while (i < pts.size()) {
        double z = pts[i][2];
        while (i < pts.size() && pts[i][2] == z) {
            active.push_back({pts[i][0], pts[i][1]});
            ++i;
        }
        double z_next = (i < pts.size()) ? pts[i][2] : ref.values[2];
        hv += (z - z_next) * hv2(active, ref.values[0], ref.values[1]);
    }
    return hv;
}

double expected_utility(const std::vector<ObjectiveVector>& front,
                        const std::vector<ScalarisationVector>& weights) {
    if (front.empty()) throw EmptyFront("expected utility of an empty front");
    if (weights.empty()) throw EmptyFront("expected utility over an empty weight set");
    check_uniform_dimension(front);
    std::size_t m = front.front().size();
    double total = 0.0;
    for (const ScalarisationVector& w : weights) {
        if (w.dimension() != m)
            throw DimensionMismatch("weight dimension mismatch in expected utility");
        double best = -std::numeric_limits<double>::infinity();
        for (const ObjectiveVector& p : front) {
            double u = 0.0;
            for (std::size_t j = 0; j < m; ++j) u += w[j] * p[j];
            best = std::max(best, u);
        }
        total += best;
    }
    return total / static_cast<double>(weights.size());
}

double sparsity(const std::vector<ObjectiveVector>& front) {
    if (front.size() < 2)
        throw FrontTooSmall("sparsity needs at least two points, got " +
                            std::to_string(front.size()));
    check_uniform_dimension(front);
    std::size_t m = front.front().size();
    double total = 0.0;
    std::vector<double> column(front.size());
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < front.size(); ++i) column[i] = front[i][j];
        std::sort(column.begin(), column.end());
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            double gap = column[i + 1] - column[i];
            total += gap * gap;
        }
    }
    return total / static_cast<double>(front.size() - 1);
}

ReferencePoint reference_from_records(const std::vector<ObjectiveVector>& records) {
    if (records.empty()) throw EmptyFront("reference point from no records");
    check_uniform_dimension(records);
    std::size_t m = records.front().size();
    ReferencePoint ref;
    ref.values.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = records[0][j];
        double hi = records[0][j];
        for (const ObjectiveVector& p : records) {
            lo = std::min(lo, p[j]);
            hi = std::max(hi, p[j]);
        }
        ref.values[j] = lo - std::max(0.01 * (hi - lo), 1e-9);
    }
    return ref;
}

} // namespace moppo
