#include "moppo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moppo/errors.hpp"

namespace moppo {

void SurrogateDataset::append(const ScalarisationVector& w, double delta) {
    rows_.push_back({w.weights(), delta});
}

void append_stage_data(std::vector<SurrogateDataset>& per_objective,
                       const EvaluationSet& previous, const EvaluationSet& current) {
    if (previous.size() != current.size())
        throw KeyMismatch("evaluation snapshots cover different weight counts");
    EvaluationSet prev = previous;
    EvaluationSet cur = current;
    auto by_w = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::sort(prev.begin(), prev.end(), by_w);
    std::sort(cur.begin(), cur.end(), by_w);
    for (std::size_t i = 0; i < prev.size(); ++i)
        if (prev[i].first != cur[i].first)
            throw KeyMismatch("evaluation snapshots cover different weight vectors");
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const ObjectiveVector& a = prev[i].second;
        const ObjectiveVector& b = cur[i].second;
        if (a.size() != per_objective.size() || b.size() != per_objective.size())
            throw DimensionMismatch("objective count does not match the dataset list");
        for (std::size_t j = 0; j < per_objective.size(); ++j)
            per_objective[j].append(cur[i].first, b[j] - a[j]);
    }
}

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

} // namespace

LinearModel fit_elastic_net(const std::vector<RegressionRow>& rows,
                            const ElasticNetConfig& cfg) {
    if (rows.size() < 2)
        throw InsufficientData("elastic net needs at least two rows, got " +
                               std::to_string(rows.size()));
    std::size_t n = rows.size();
    std::size_t d = rows[0].x.size();
    for (const RegressionRow& r : rows)
        if (r.x.size() != d) throw DimensionMismatch("regression rows of mixed dimension");

    LinearModel model;
    model.coef.assign(d, 0.0);

    // Per-coordinate curvature (1/n) Σ x²  plus the ridge share.
    std::vector<double> curvature(d, 0.0);
    for (const RegressionRow& r : rows)
        for (std::size_t i = 0; i < d; ++i) curvature[i] += r.x[i] * r.x[i];
    for (std::size_t i = 0; i < d; ++i)
        curvature[i] = curvature[i] / static_cast<double>(n) + cfg.lambda * (1.0 - cfg.rho);

    double y_mean = 0.0;
    for (const RegressionRow& r : rows) y_mean += r.y;
    y_mean /= static_cast<double>(n);
    model.intercept = y_mean;

    // residual[t] = y_t - intercept - coef . x_t, kept incrementally.
    std::vector<double> residual(n);
    for (std::size_t t = 0; t < n; ++t) residual[t] = rows[t].y - model.intercept;

    double l1 = cfg.lambda * cfg.rho;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        double max_change = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (curvature[i] == 0.0) continue; // constant-zero feature
            double old = model.coef[i];
            double rho_i = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                rho_i += rows[t].x[i] * (residual[t] + old * rows[t].x[i]);
            rho_i /= static_cast<double>(n);
            double updated = soft_threshold(rho_i, l1) / curvature[i];
            if (updated != old) {
                double diff = updated - old;
                for (std::size_t t = 0; t < n; ++t) residual[t] -= diff * rows[t].x[i];
                model.coef[i] = updated;
                max_change = std::max(max_change, std::abs(diff));
            }
        }
        double shift = 0.0;
        for (std::size_t t = 0; t < n; ++t) shift += residual[t];
        shift /= static_cast<double>(n);
        if (shift != 0.0) {
            model.intercept += shift;
            for (std::size_t t = 0; t < n; ++t) residual[t] -= shift;
            max_change = std::max(max_change, std::abs(shift));
        }
        model.iterations = iter;
        if (max_change < cfg.tol) {
            model.converged = true;
            break;
        }
    }
    return model;
}

double predict(const LinearModel& model, const std::vector<double>& x) {
    if (x.size() != model.coef.size())
        throw DimensionMismatch("prediction feature dimension mismatch");
    double y = model.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) y += model.coef[i] * x[i];
    return y;
}

SurrogateEnsemble fit_ensemble(const std::vector<RegressionRow>& rows,
                               const ElasticNetConfig& cfg, Rng& rng) {
    if (cfg.bags < 1) throw ConfigError("ensemble needs at least one member");
    SurrogateEnsemble ensemble;
    ensemble.members.reserve(static_cast<std::size_t>(cfg.bags));
    for (int b = 0; b < cfg.bags; ++b) {
        if (cfg.bootstrap) {
            std::vector<RegressionRow> sample;
            sample.reserve(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                sample.push_back(rows[rng.index(rows.size())]);
            ensemble.members.push_back(fit_elastic_net(sample, cfg));
        } else {
            ensemble.members.push_back(fit_elastic_net(rows, cfg));
        }
    }
    return ensemble;
}

EnsemblePrediction predict_ensemble(const SurrogateEnsemble& ensemble,
                                    const std::vector<double>& x) {
    if (!ensemble.fitted()) throw UnfittedSurrogate("prediction from an unfitted ensemble");
    EnsemblePrediction out;
    std::vector<double> preds;
    preds.reserve(ensemble.members.size());
    for (const LinearModel& m : ensemble.members) preds.push_back(predict(m, x));
    for (double p : preds) out.mean += p;
    out.mean /= static_cast<double>(preds.size());
    double var = 0.0;
    for (double p : preds) var += (p - out.mean) * (p - out.mean);
    var /= static_cast<double>(preds.size());
    out.sigma = std::sqrt(var);
    return out;
}

double predict_objective(const SurrogateEnsemble& ensemble, double current_value,
                         const ScalarisationVector& w) {
    return current_value + predict_ensemble(ensemble, w.weights()).mean;
}

} // namespace moppo
