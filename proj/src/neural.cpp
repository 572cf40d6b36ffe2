#include "moppo/neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "moppo/csv.hpp"
#include "moppo/errors.hpp"

namespace moppo {

DenseNet::DenseNet(std::vector<int> widths, bool tanh_output)
    : widths_(std::move(widths)), tanh_output_(tanh_output) {
    if (widths_.size() < 2) throw ShapeMismatch("network needs at least two widths");
    int count = 0;
    for (std::size_t l = 1; l < widths_.size(); ++l) {
        if (widths_[l] < 1 || widths_[l - 1] < 1)
            throw ShapeMismatch("layer widths must be >= 1");
        layer_offsets_.push_back(count);
        count += widths_[l] * (widths_[l - 1] + 1);
    }
    params_.assign(count, 0.0);
}

void DenseNet::init_scaled_uniform(Rng& rng) {
    for (std::size_t l = 1; l < widths_.size(); ++l) {
        int fan_in = widths_[l - 1];
        int fan_out = widths_[l];
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        int off = layer_offsets_[l - 1];
        for (int i = 0; i < fan_out * fan_in; ++i)
            params_[off + i] = rng.uniform(-bound, bound);
        for (int i = 0; i < fan_out; ++i) params_[off + fan_out * fan_in + i] = 0.0;
    }
}

std::vector<double> DenseNet::forward(const std::vector<double>& input,
                                      ForwardCache* cache) const {
    if (static_cast<int>(input.size()) != widths_.front())
        throw ShapeMismatch("input has size " + std::to_string(input.size()) +
                            ", expected " + std::to_string(widths_.front()));
    if (cache) {
        cache->acts.clear();
        cache->acts.push_back(input);
    }
    std::vector<double> a = input;
    for (std::size_t l = 1; l < widths_.size(); ++l) {
        int n_in = widths_[l - 1];
        int n_out = widths_[l];
        int off = layer_offsets_[l - 1];
        const double* W = params_.data() + off;
        const double* b = params_.data() + off + n_out * n_in;
        std::vector<double> z(n_out);
        for (int i = 0; i < n_out; ++i) {
            double acc = b[i];
            const double* row = W + i * n_in;
            for (int j = 0; j < n_in; ++j) acc += row[j] * a[j];
            z[i] = acc;
        }
        bool apply_tanh = (l + 1 < widths_.size()) || tanh_output_;
        if (apply_tanh)
            for (double& v : z) v = std::tanh(v);
        a = std::move(z);
        if (cache) cache->acts.push_back(a);
    }
    for (double v : a)
        if (!std::isfinite(v)) throw NonFiniteParameters("non-finite network output");
    return a;
}

std::vector<double> DenseNet::backward(const ForwardCache& cache,
                                       const std::vector<double>& output_grad,
                                       GradientBuffer& grad) const {
    if (cache.acts.size() != widths_.size())
        throw StaleCache("cache depth does not match the network");
    for (std::size_t l = 0; l < widths_.size(); ++l)
        if (static_cast<int>(cache.acts[l].size()) != widths_[l])
            throw StaleCache("cache layer width does not match the network");
    if (static_cast<int>(output_grad.size()) != widths_.back())
        throw ShapeMismatch("output gradient has the wrong size");
    if (grad.g.size() != params_.size()) grad.g.assign(params_.size(), 0.0);

    std::vector<double> delta = output_grad;
    if (tanh_output_) {
        const std::vector<double>& a = cache.acts.back();
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= 1.0 - a[i] * a[i];
    }
    for (std::size_t l = widths_.size() - 1; l >= 1; --l) {
        int n_in = widths_[l - 1];
        int n_out = widths_[l];
        int off = layer_offsets_[l - 1];
        const double* W = params_.data() + off;
        const std::vector<double>& a_prev = cache.acts[l - 1];

        double* gW = grad.g.data() + off;
        double* gb = grad.g.data() + off + n_out * n_in;
        for (int i = 0; i < n_out; ++i) {
            double d = delta[i];
            double* grow = gW + i * n_in;
            for (int j = 0; j < n_in; ++j) grow[j] += d * a_prev[j];
            gb[i] += d;
        }

        std::vector<double> prev(n_in, 0.0);
        for (int i = 0; i < n_out; ++i) {
            double d = delta[i];
            const double* row = W + i * n_in;
            for (int j = 0; j < n_in; ++j) prev[j] += row[j] * d;
        }
        if (l - 1 >= 1) { // hidden layers are tanh outputs
            for (int j = 0; j < n_in; ++j) prev[j] *= 1.0 - a_prev[j] * a_prev[j];
        }
        delta = std::move(prev);
    }
    return delta;
}

void adam_step(std::vector<double>& params, const GradientBuffer& grad,
               AdamState& state, const AdamConfig& cfg) {
    if (grad.g.size() != params.size())
        throw ShapeMismatch("gradient size does not match parameters");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.t = 0;
    }
    state.t += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grad.g[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void save_params_text(std::ostream& os, const std::vector<double>& params) {
    for (double v : params) os << fmt_full(v) << '\n';
}

std::vector<double> load_params_text(std::istream& is, std::size_t expected) {
    std::vector<double> params;
    params.reserve(expected);
    double v;
    while (params.size() < expected && (is >> v)) params.push_back(v);
    if (params.size() != expected)
        throw CorruptCheckpoint("expected " + std::to_string(expected) +
                                " parameters, read " + std::to_string(params.size()));
    return params;
}

} // namespace moppo
