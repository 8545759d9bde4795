#include "aqtriad/nn/birnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aqtriad/errors.hpp"

namespace aqtriad::nn {

std::size_t param_count(const NetworkShape& shape) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    n += 2 * cell_param_count(shape.cell, shape.layer_input(l), shape.hidden);
  }
  return n + 2 * shape.hidden + 1;
}

StackedBiRnn::StackedBiRnn(const NetworkShape& shape) : shape_(shape) {
  if (shape.input == 0 || shape.hidden == 0 || shape.layers == 0) {
    fail(ErrorKind::Argument, "network dimensions must be positive");
  }
  if (!(shape.dropout >= 0.0 && shape.dropout < 1.0)) fail(ErrorKind::Argument, "dropout must be in [0,1)");
  std::size_t off = 0;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    for (int d = 0; d < 2; ++d) {
      cell_offsets_.push_back(off);
      off += cell_param_count(shape.cell, shape.layer_input(l), shape.hidden);
    }
  }
  head_offset_ = off;
  params_.assign(param_count(shape), 0.0);
}

std::size_t StackedBiRnn::cell_offset(std::size_t layer, int dir) const {
  return cell_offsets_[layer * 2 + static_cast<std::size_t>(dir)];
}

CellView StackedBiRnn::cell(std::size_t layer, int dir) const {
  const std::size_t in = shape_.layer_input(layer);
  const std::size_t H = shape_.hidden;
  const std::size_t rows = gate_count(shape_.cell) * H;
  const double* base = params_.data() + cell_offset(layer, dir);
  return {shape_.cell, in, H, base, base + rows * in, base + rows * (in + H)};
}

CellGradView StackedBiRnn::cell_grad(std::span<double> grad, std::size_t layer, int dir) const {
  const std::size_t in = shape_.layer_input(layer);
  const std::size_t H = shape_.hidden;
  const std::size_t rows = gate_count(shape_.cell) * H;
  double* base = grad.data() + cell_offset(layer, dir);
  return {base, base + rows * in, base + rows * (in + H)};
}

void StackedBiRnn::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
  std::uniform_real_distribution<double> cell_dist(-bound, bound);
  for (std::size_t i = 0; i < head_offset_; ++i) params_[i] = cell_dist(rng);
  if (shape_.cell == CellKind::Lstm) {
    const std::size_t H = shape_.hidden;
    for (std::size_t l = 0; l < shape_.layers; ++l) {
      for (int d = 0; d < 2; ++d) {
        const std::size_t in = shape_.layer_input(l);
        const std::size_t b = cell_offset(l, d) + 4 * H * (in + H);
        std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(b + H), H, 1.0);
      }
    }
  }
  const double head_bound = 1.0 / std::sqrt(2.0 * static_cast<double>(shape_.hidden));
  std::uniform_real_distribution<double> head_dist(-head_bound, head_bound);
  for (std::size_t i = 0; i < 2 * shape_.hidden; ++i) params_[head_offset_ + i] = head_dist(rng);
  params_[head_offset_ + 2 * shape_.hidden] = 0.0;
}

DropoutMasks sample_dropout_masks(const NetworkShape& shape, std::size_t steps, Rng& rng) {
  DropoutMasks m;
  if (shape.dropout <= 0.0) return m;
  std::bernoulli_distribution keep(1.0 - shape.dropout);
  const double scale = 1.0 / (1.0 - shape.dropout);
  m.scale.resize(shape.layers);
  for (std::size_t l = 1; l < shape.layers; ++l) {
    auto& s = m.scale[l];
    s.resize(steps * 2 * shape.hidden);
    for (auto& v : s) v = keep(rng) ? scale : 0.0;
  }
  return m;
}

std::vector<double> apply_dropout(std::span<const double> v, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::Argument, "dropout rate must be in [0,1)");
  std::vector<double> out(v.begin(), v.end());
  if (mode == Mode::Eval || rate == 0.0) return out;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (auto& x : out) x = keep(rng) ? x * scale : 0.0;
  return out;
}

void Workspace::prepare(const NetworkShape& s, std::size_t n) {
  if (shape == s && steps == n && !hidden.empty()) return;
  shape = s;
  steps = n;
  const std::size_t H = s.hidden;
  const std::size_t G = gate_count(s.cell);
  gates.assign(2 * s.layers, std::vector<double>(n * G * H));
  cell.assign(2 * s.layers, std::vector<double>(s.cell == CellKind::Lstm ? n * H : 0));
  hidden.assign(2 * s.layers, std::vector<double>(n * H));
  layer_in.assign(s.layers, std::vector<double>());
  for (std::size_t l = 1; l < s.layers; ++l) layer_in[l].assign(n * 2 * H, 0.0);
  const std::size_t max_in = std::max(s.input, 2 * H);
  dout.assign(n * 2 * H, 0.0);
  din.assign(n * max_in, 0.0);
  dh.assign(H, 0.0);
  dc.assign(H, 0.0);
  dh_prev.assign(H, 0.0);
  dc_prev.assign(H, 0.0);
  scratch.assign(5 * H, 0.0);
  zeros.assign(H, 0.0);
  head_in.assign(2 * H, 0.0);
}

namespace {

void check_window(const StackedBiRnn& net, std::span<const double> window, std::size_t steps) {
  if (steps == 0) fail(ErrorKind::Argument, "empty window");
  if (window.size() != steps * net.shape().input) {
    fail(ErrorKind::Argument, "window size " + std::to_string(window.size()) + " does not match " +
                                  std::to_string(steps) + " steps of " + std::to_string(net.shape().input));
  }
}

}  // namespace

double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps, Mode mode,
                     const DropoutMasks* masks, Workspace& ws) {
  check_window(net, window, steps);
  const auto& shape = net.shape();
  const bool drop = mode == Mode::Train && shape.dropout > 0.0 && shape.layers > 1;
  if (drop && (masks == nullptr || masks->scale.size() != shape.layers)) {
    fail(ErrorKind::Argument, "train-mode dropout requires sampled masks");
  }
  ws.prepare(shape, steps);
  const std::size_t H = shape.hidden;
  const std::size_t G = gate_count(shape.cell);
  const double* zeros = ws.zeros.data();
  double* scratch = ws.scratch.data();

  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t in = shape.layer_input(l);
    const double* input = l == 0 ? window.data() : ws.layer_in[l].data();
    for (int d = 0; d < 2; ++d) {
      const CellView p = net.cell(l, d);
      auto& gates = ws.gates[l * 2 + d];
      auto& cells = ws.cell[l * 2 + d];
      auto& hid = ws.hidden[l * 2 + d];
      for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = d == 0 ? k : steps - 1 - k;
        const bool first = k == 0;
        const std::size_t prev = d == 0 ? t - 1 : t + 1;
        const double* h_prev = first ? zeros : hid.data() + prev * H;
        if (shape.cell == CellKind::Lstm) {
          const double* c_prev = first ? zeros : cells.data() + prev * H;
          lstm_step(p, input + t * in, h_prev, c_prev, gates.data() + t * G * H, cells.data() + t * H,
                    hid.data() + t * H);
        } else {
          gru_step(p, input + t * in, h_prev, gates.data() + t * G * H, hid.data() + t * H, scratch);
        }
      }
    }
    if (l + 1 < shape.layers) {
      auto& next = ws.layer_in[l + 1];
      const auto& hf = ws.hidden[l * 2];
      const auto& hb = ws.hidden[l * 2 + 1];
      for (std::size_t t = 0; t < steps; ++t) {
        double* row = next.data() + t * 2 * H;
        std::copy_n(hf.data() + t * H, H, row);
        std::copy_n(hb.data() + t * H, H, row + H);
      }
      if (drop) {
        const auto& m = masks->scale[l + 1];
        for (std::size_t i = 0; i < next.size(); ++i) next[i] *= m[i];
      }
    }
  }

  const std::size_t top = shape.layers - 1;
  std::copy_n(ws.hidden[top * 2].data() + (steps - 1) * H, H, ws.head_in.data());
  std::copy_n(ws.hidden[top * 2 + 1].data(), H, ws.head_in.data() + H);
  const auto params = net.params();
  const double* head = params.data() + net.head_offset();
  return dot(head, ws.head_in.data(), 2 * H) + head[2 * H];
}

double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps) {
  Workspace ws;
  return birnn_forward(net, window, steps, Mode::Eval, nullptr, ws);
}

double birnn_forward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps, Mode mode,
                     Rng& rng) {
  Workspace ws;
  if (mode == Mode::Eval) return birnn_forward(net, window, steps, mode, nullptr, ws);
  const auto masks = sample_dropout_masks(net.shape(), steps, rng);
  return birnn_forward(net, window, steps, mode, &masks, ws);
}

LossAndPrediction birnn_backward(const StackedBiRnn& net, std::span<const double> window, std::size_t steps,
                                 double target, Mode mode, const DropoutMasks* masks, Workspace& ws,
                                 std::span<double> grad) {
  if (grad.size() != net.size()) fail(ErrorKind::Argument, "gradient buffer size mismatch");
  const double pred = birnn_forward(net, window, steps, mode, masks, ws);
  const auto& shape = net.shape();
  const bool drop = mode == Mode::Train && shape.dropout > 0.0 && shape.layers > 1;
  const std::size_t H = shape.hidden;
  const std::size_t G = gate_count(shape.cell);
  const double err = pred - target;
  const double dpred = 2.0 * err;

  const auto params = net.params();
  const double* head = params.data() + net.head_offset();
  double* ghead = grad.data() + net.head_offset();
  for (std::size_t j = 0; j < 2 * H; ++j) ghead[j] += dpred * ws.head_in[j];
  ghead[2 * H] += dpred;

  std::fill(ws.dout.begin(), ws.dout.end(), 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    ws.dout[(steps - 1) * 2 * H + j] += dpred * head[j];
    ws.dout[H + j] += dpred * head[H + j];
  }

  const double* zeros = ws.zeros.data();
  for (std::size_t l = shape.layers; l-- > 0;) {
    const std::size_t in = shape.layer_input(l);
    const double* input = l == 0 ? window.data() : ws.layer_in[l].data();
    std::fill(ws.din.begin(), ws.din.begin() + static_cast<std::ptrdiff_t>(steps * in), 0.0);
    for (int d = 0; d < 2; ++d) {
      const CellView p = net.cell(l, d);
      const CellGradView g = net.cell_grad(grad, l, d);
      const auto& gates = ws.gates[l * 2 + d];
      const auto& cells = ws.cell[l * 2 + d];
      const auto& hid = ws.hidden[l * 2 + d];
      std::fill(ws.dh_prev.begin(), ws.dh_prev.end(), 0.0);
      std::fill(ws.dc_prev.begin(), ws.dc_prev.end(), 0.0);
      // walk the recurrence in reverse processing order
      for (std::size_t k = steps; k-- > 0;) {
        const std::size_t t = d == 0 ? k : steps - 1 - k;
        const bool first = k == 0;
        const std::size_t prev = d == 0 ? t - 1 : t + 1;
        const double* dout = ws.dout.data() + t * 2 * H + (d == 0 ? 0 : H);
        for (std::size_t j = 0; j < H; ++j) ws.dh[j] = dout[j] + ws.dh_prev[j];
        const double* h_prev = first ? zeros : hid.data() + prev * H;
        if (shape.cell == CellKind::Lstm) {
          std::copy(ws.dc_prev.begin(), ws.dc_prev.end(), ws.dc.begin());
          const double* c_prev = first ? zeros : cells.data() + prev * H;
          lstm_step_backward(p, g, input + t * in, h_prev, c_prev, gates.data() + t * G * H, cells.data() + t * H,
                             ws.dh.data(), ws.dc.data(), ws.din.data() + t * in, ws.dh_prev.data(),
                             ws.dc_prev.data(), ws.scratch.data());
        } else {
          gru_step_backward(p, g, input + t * in, h_prev, gates.data() + t * G * H, ws.dh.data(),
                            ws.din.data() + t * in, ws.dh_prev.data(), ws.scratch.data());
        }
      }
    }
    if (l > 0) {
      for (std::size_t i = 0; i < steps * 2 * H; ++i) {
        ws.dout[i] = drop ? ws.din[i] * masks->scale[l][i] : ws.din[i];
      }
    }
  }
  return {err * err, pred};
}

double clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grad) g *= s;
  }
  return norm;
}

nlohmann::json to_json(const StackedBiRnn& net) {
  const auto& s = net.shape();
  return {{"cell", to_string(s.cell)}, {"input", s.input},   {"hidden", s.hidden},
          {"layers", s.layers},        {"dropout", s.dropout}, {"params", std::vector<double>(net.params().begin(), net.params().end())}};
}

StackedBiRnn network_from_json(const nlohmann::json& j) {
  NetworkShape s;
  s.cell = parse_cell_kind(j.at("cell").get<std::string>());
  s.input = j.at("input").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::size_t>();
  s.layers = j.at("layers").get<std::size_t>();
  s.dropout = j.at("dropout").get<double>();
  StackedBiRnn net(s);
  const auto& p = j.at("params");
  if (p.size() != net.size()) fail(ErrorKind::Parse, "network parameter count mismatch");
  for (std::size_t i = 0; i < net.size(); ++i) net.params()[i] = p[i].get<double>();
  return net;
}

}  // namespace aqtriad::nn
