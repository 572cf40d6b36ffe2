#pragma once

#include <algorithm>
#include <iosfwd>
#include <string>
#include <vector>

#include "moppo/rng.hpp"

namespace moppo {

/// Gradient accumulator with the same flat layout as the network parameters.
struct GradientBuffer {
    std::vector<double> g;

    void zero() { std::fill(g.begin(), g.end(), 0.0); }
};

/// Per-layer activations captured by a forward pass: acts[0] is the input,
/// acts[L] the output. Consumed by backward(); invalidated by any change to
/// the network's architecture.
struct ForwardCache {
    std::vector<std::vector<double>> acts;
};

/**
 * @brief Fully connected network with tanh hidden units.
 *
 * The output layer is the identity by default; an optional tanh output is
 * used where the caller stacks further layers on top. Parameters live in one
 * flat vector laid out layer by layer, weights row-major then biases:
 *
 *   [W1 (n1 x n0), b1 (n1), W2 (n2 x n1), b2 (n2), ...]
 *
 * Initialisation draws weights uniformly from ±sqrt(6 / (fan_in + fan_out))
 * and zeroes biases.
 */
class DenseNet {
public:
    DenseNet(std::vector<int> widths, bool tanh_output = false);

    const std::vector<int>& widths() const { return widths_; }
    bool tanh_output() const { return tanh_output_; }
    int parameter_count() const { return static_cast<int>(params_.size()); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    void init_scaled_uniform(Rng& rng);

    /// Runs the network. Fills `cache` (when given) for a later backward().
    /// Throws ShapeMismatch on a wrong input size and NonFiniteParameters
    /// when the output contains NaN or Inf.
    std::vector<double> forward(const std::vector<double>& input,
                                ForwardCache* cache = nullptr) const;

    /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output), and
    /// returns d(loss)/d(input). Throws StaleCache when the cache does not
    /// match this network's layout.
    std::vector<double> backward(const ForwardCache& cache,
                                 const std::vector<double>& output_grad,
                                 GradientBuffer& grad) const;

private:
    std::vector<int> widths_;
    bool tanh_output_;
    std::vector<double> params_;
    std::vector<int> layer_offsets_; ///< start of each layer's weights in params_
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates plus the step counter.
struct AdamState {
    std::vector<double> m, v;
    long t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One Adam update in place. A zero gradient leaves parameters unchanged.
void adam_step(std::vector<double>& params, const GradientBuffer& grad,
               AdamState& state, const AdamConfig& cfg);

/// Writes values one per line in a decimal form that round-trips bit-exactly.
void save_params_text(std::ostream& os, const std::vector<double>& params);

/// Reads exactly `expected` values; throws CorruptCheckpoint otherwise.
std::vector<double> load_params_text(std::istream& is, std::size_t expected);

} // namespace moppo
