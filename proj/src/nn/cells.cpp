#include "aqtriad/nn/cells.hpp"

#include <cmath>
#include <string>

#include "aqtriad/errors.hpp"

namespace aqtriad::nn {

const char* to_string(CellKind kind) { return kind == CellKind::Lstm ? "lstm" : "gru"; }

CellKind parse_cell_kind(const std::string& text) {
  if (text == "lstm") return CellKind::Lstm;
  if (text == "gru") return CellKind::Gru;
  fail(ErrorKind::Argument, "unknown cell kind '" + text + "'");
}

void lstm_step(const CellView& p, const double* x, const double* h_prev, const double* c_prev, double* gates,
               double* c, double* h) {
  const std::size_t H = p.hidden;
  const std::size_t rows = 4 * H;
  for (std::size_t r = 0; r < rows; ++r) {
    gates[r] = p.b[r] + dot(p.w + r * p.input, x, p.input) + dot(p.u + r * H, h_prev, H);
  }
  double* gi = gates;
  double* gf = gates + H;
  double* gg = gates + 2 * H;
  double* go = gates + 3 * H;
  for (std::size_t j = 0; j < H; ++j) {
    gi[j] = sigmoid(gi[j]);
    gf[j] = sigmoid(gf[j]);
    gg[j] = std::tanh(gg[j]);
    go[j] = sigmoid(go[j]);
    c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
    h[j] = go[j] * std::tanh(c[j]);
  }
}

void lstm_step_backward(const CellView& p, const CellGradView& g, const double* x, const double* h_prev,
                        const double* c_prev, const double* gates, const double* c, const double* dh,
                        const double* dc, double* dx, double* dh_prev, double* dc_prev, double* scratch) {
  const std::size_t H = p.hidden;
  const double* gi = gates;
  const double* gf = gates + H;
  const double* gg = gates + 2 * H;
  const double* go = gates + 3 * H;
  double* da = scratch;  // 4H pre-activation gradients
  for (std::size_t j = 0; j < H; ++j) {
    const double tc = std::tanh(c[j]);
    const double dct = dc[j] + dh[j] * go[j] * (1.0 - tc * tc);
    da[j] = dct * gg[j] * gi[j] * (1.0 - gi[j]);
    da[H + j] = dct * c_prev[j] * gf[j] * (1.0 - gf[j]);
    da[2 * H + j] = dct * gi[j] * (1.0 - gg[j] * gg[j]);
    da[3 * H + j] = dh[j] * tc * go[j] * (1.0 - go[j]);
    dc_prev[j] = dct * gf[j];
  }
  const std::size_t rows = 4 * H;
  outer_acc(g.w, rows, p.input, da, x);
  outer_acc(g.u, rows, H, da, h_prev);
  for (std::size_t r = 0; r < rows; ++r) g.b[r] += da[r];
  gemv_t_acc(p.w, rows, p.input, da, dx);
  for (std::size_t j = 0; j < H; ++j) dh_prev[j] = 0.0;
  gemv_t_acc(p.u, rows, H, da, dh_prev);
}

void gru_step(const CellView& p, const double* x, const double* h_prev, double* gates, double* h, double* scratch) {
  const std::size_t H = p.hidden;
  double* z = gates;
  double* r = gates + H;
  double* n = gates + 2 * H;
  for (std::size_t row = 0; row < 2 * H; ++row) {
    gates[row] = sigmoid(p.b[row] + dot(p.w + row * p.input, x, p.input) + dot(p.u + row * H, h_prev, H));
  }
  double* rh = scratch;
  for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h_prev[j];
  for (std::size_t j = 0; j < H; ++j) {
    const std::size_t row = 2 * H + j;
    n[j] = std::tanh(p.b[row] + dot(p.w + row * p.input, x, p.input) + dot(p.u + row * H, rh, H));
  }
  for (std::size_t j = 0; j < H; ++j) h[j] = (1.0 - z[j]) * h_prev[j] + z[j] * n[j];
}

void gru_step_backward(const CellView& p, const CellGradView& g, const double* x, const double* h_prev,
                       const double* gates, const double* dh, double* dx, double* dh_prev, double* scratch) {
  const std::size_t H = p.hidden;
  const double* z = gates;
  const double* r = gates + H;
  const double* n = gates + 2 * H;
  double* da = scratch;         // 3H
  double* rh = scratch + 3 * H;  // H
  double* drh = scratch + 4 * H;  // H

  for (std::size_t j = 0; j < H; ++j) {
    rh[j] = r[j] * h_prev[j];
    drh[j] = 0.0;
    dh_prev[j] = dh[j] * (1.0 - z[j]);
    da[j] = dh[j] * (n[j] - h_prev[j]) * z[j] * (1.0 - z[j]);
    da[2 * H + j] = dh[j] * z[j] * (1.0 - n[j] * n[j]);
  }
  const double* wn = p.w + 2 * H * p.input;
  const double* un = p.u + 2 * H * H;
  // candidate block: recurrent input is r*h
  gemv_t_acc(un, H, H, da + 2 * H, drh);
  outer_acc(g.u + 2 * H * H, H, H, da + 2 * H, rh);
  for (std::size_t j = 0; j < H; ++j) {
    da[H + j] = drh[j] * h_prev[j] * r[j] * (1.0 - r[j]);
    dh_prev[j] += drh[j] * r[j];
  }
  outer_acc(g.w, 3 * H, p.input, da, x);
  outer_acc(g.u, 2 * H, H, da, h_prev);
  for (std::size_t row = 0; row < 3 * H; ++row) g.b[row] += da[row];
  gemv_t_acc(p.w, 2 * H, p.input, da, dx);
  gemv_t_acc(wn, H, p.input, da + 2 * H, dx);
  gemv_t_acc(p.u, 2 * H, H, da, dh_prev);
}

CellParams::CellParams(CellKind k, std::size_t input, std::size_t hidden)
    : kind(k), w(gate_count(k) * hidden, input), u(gate_count(k) * hidden, hidden), b(gate_count(k) * hidden, 0.0) {}

CellView CellParams::view() const { return {kind, input(), hidden(), w.data.data(), u.data.data(), b.data()}; }

namespace {

void check_dims(const CellParams& p, std::size_t x, std::size_t h) {
  if (x != p.input() || h != p.hidden()) {
    fail(ErrorKind::Argument, "cell dimension mismatch: expected input " + std::to_string(p.input()) + ", hidden " +
                                  std::to_string(p.hidden()));
  }
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> lstm_cell_forward(const CellParams& p, std::span<const double> x,
                                                                      std::span<const double> h,
                                                                      std::span<const double> c) {
  if (p.kind != CellKind::Lstm) fail(ErrorKind::Argument, "lstm_cell_forward on a GRU cell");
  check_dims(p, x.size(), h.size());
  if (c.size() != p.hidden()) fail(ErrorKind::Argument, "memory state size mismatch");
  std::vector<double> gates(4 * p.hidden()), c_out(p.hidden()), h_out(p.hidden());
  lstm_step(p.view(), x.data(), h.data(), c.data(), gates.data(), c_out.data(), h_out.data());
  return {std::move(h_out), std::move(c_out)};
}

std::vector<double> gru_cell_forward(const CellParams& p, std::span<const double> x, std::span<const double> h) {
  if (p.kind != CellKind::Gru) fail(ErrorKind::Argument, "gru_cell_forward on an LSTM cell");
  check_dims(p, x.size(), h.size());
  std::vector<double> gates(3 * p.hidden()), h_out(p.hidden()), scratch(p.hidden());
  gru_step(p.view(), x.data(), h.data(), gates.data(), h_out.data(), scratch.data());
  return h_out;
}

}  // namespace aqtriad::nn
