#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

#include "aqtriad/nn/cells.hpp"
#include "aqtriad/rng.hpp"

namespace aqtriad::nn {

enum class Mode { Train, Eval };

struct NetworkShape {
  CellKind cell = CellKind::Lstm;
  std::size_t input = 0;
  std::size_t hidden = 200;  ///< units per direction
  std::size_t layers = 5;
  double dropout = 0.25;  ///< between stacked layers, train mode only

  std::size_t layer_input(std::size_t layer) const { return layer == 0 ? input : 2 * hidden; }
  bool operator==(const NetworkShape&) const = default;
};

/// Exact trainable-parameter count, including the 2*hidden+1 affine head.
std::size_t param_count(const NetworkShape& shape);

/// Stacked bidirectional recurrent regressor with all parameters in one flat
/// buffer: per layer, forward cell then backward cell (W, U, b each), then the
/// head weights (2*hidden) and head bias.
class StackedBiRnn {
 public:
  StackedBiRnn() = default;
  /// Zero-initialized parameters.
  explicit StackedBiRnn(const NetworkShape& shape);

  const NetworkShape& shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  /// dir 0 runs left-to-right, dir 1 right-to-left.
  CellView cell(std::size_t layer, int dir) const;
  CellGradView cell_grad(std::span<double> grad, std::size_t layer, int dir) const;
  std::size_t cell_offset(std::size_t layer, int dir) const;
  std::size_t head_offset() const { return head_offset_; }
  double head_bias() const { return params_[head_offset_ + 2 * shape_.hidden]; }
  void set_head_bias(double b) { params_[head_offset_ + 2 * shape_.hidden] = b; }

  /// Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) weights, LSTM forget bias 1.0,
  /// head uniform(-1/sqrt(2*hidden), ...) with zero bias.
  void init_uniform(Rng& rng);

  bool operator==(const StackedBiRnn& o) const { return shape_ == o.shape_ && params_ == o.params_; }

 private:
  NetworkShape shape_;
  std::vector<double> params_;
  std::vector<std::size_t> cell_offsets_;
  std::size_t head_offset_ = 0;
};

/// Inverted-dropout scale factors (0 or 1/(1-rate)) for the inputs of layers
/// 1..layers-1; one steps x 2*hidden block per layer.
struct DropoutMasks {
  std::vector<std::vector<double>> scale;
};

DropoutMasks sample_dropout_masks(const NetworkShape& shape, std::size_t steps, Rng& rng);

/// Train mode zeroes each element with probability `rate` and scales
/// survivors by 1/(1-rate); eval mode is the identity.
std::vector<double> apply_dropout(std::span<const double> v, double rate, Rng& rng, Mode mode);

/// Forward activations kept for backpropagation; reusable across calls.
struct Workspace {
  void prepare(const NetworkShape& shape, std::size_t steps);

  NetworkShape shape{};
  std::size_t steps = 0;
  // indexed [layer * 2 + dir], each `steps` rows
  std::vector<std::vector<double>> gates, cell, hidden;
  std::vector<std::vector<double>> layer_in;  // post-dropout inputs of layers >= 1
  std::vector<double> dout, din, dh, dc, dh_prev, dc_prev, scratch, zeros, head_in;
};

/// Prediction for a window of `steps` input vectors (row-major, steps x input).
/// Train mode with dropout > 0 requires `masks`.
double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps, Mode mode,
                     const DropoutMasks* masks, Workspace& ws);

/// Eval-mode convenience overload with a private workspace.
double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps);

/// Train-mode convenience overload that samples its own dropout masks.
double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps, Mode mode, Rng& rng);

struct LossAndPrediction {
  double loss = 0.0;
  double prediction = 0.0;
};

/// Squared-error loss (prediction - target)^2 and its gradient, accumulated
/// into `grad` (same layout as the parameters).
LossAndPrediction birnn_backward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps,
                                 double target, Mode mode, const DropoutMasks* masks, Workspace& ws,
                                 std::span<double> grad);

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the pre-clip norm.
double clip_global_norm(std::span<double> grad, double max_norm);

nlohmann::json to_json(const StackedBiRnn& net);
StackedBiRnn network_from_json(const nlohmann::json& j);

}  // namespace aqtriad::nn
