#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqtriad/nn/matrix.hpp"

namespace aqtriad::nn {

enum class CellKind { Lstm, Gru };

const char* to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& text);

/// Gate blocks per cell: LSTM [input, forget, cell, output], GRU [update, reset, candidate].
constexpr std::size_t gate_count(CellKind kind) { return kind == CellKind::Lstm ? 4 : 3; }

/// gates * hidden * (input + hidden + 1).
constexpr std::size_t cell_param_count(CellKind kind, std::size_t input, std::size_t hidden) {
  return gate_count(kind) * hidden * (input + hidden + 1);
}

/// Non-owning view of one cell's parameters: W is (G*hidden x input), U is
/// (G*hidden x hidden), b is G*hidden, gate blocks stacked in the order above.
struct CellView {
  CellKind kind = CellKind::Lstm;
  std::size_t input = 0;
  std::size_t hidden = 0;
  const double* w = nullptr;
  const double* u = nullptr;
  const double* b = nullptr;
};

struct CellGradView {
  double* w = nullptr;
  double* u = nullptr;
  double* b = nullptr;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM step. `gates` receives the 4*hidden post-activation gate values.
void lstm_step(const CellView& p, const double* x, const double* h_prev, const double* c_prev, double* gates,
               double* c, double* h);

/// Backward through one LSTM step. `dh` and `dc` are the total gradients
/// flowing into h_t and c_t; writes dh_prev/dc_prev, accumulates dx and params.
void lstm_step_backward(const CellView& p, const CellGradView& g, const double* x, const double* h_prev,
                        const double* c_prev, const double* gates, const double* c, const double* dh,
                        const double* dc, double* dx, double* dh_prev, double* dc_prev, double* scratch);

/// One GRU step: z = s(.), r = s(.), n = tanh(W_n x + U_n (r*h) + b_n),
/// h' = (1-z)*h + z*n. `gates` receives [z, r, n].
void gru_step(const CellView& p, const double* x, const double* h_prev, double* gates, double* h, double* scratch);

void gru_step_backward(const CellView& p, const CellGradView& g, const double* x, const double* h_prev,
                       const double* gates, const double* dh, double* dx, double* dh_prev, double* scratch);

/// Owning single-cell parameter set, used for standalone cell evaluation.
struct CellParams {
  CellKind kind = CellKind::Lstm;
  Matrix w;  ///< G*hidden x input
  Matrix u;  ///< G*hidden x hidden
  std::vector<double> b;

  CellParams(CellKind kind, std::size_t input, std::size_t hidden);
  std::size_t input() const { return w.cols; }
  std::size_t hidden() const { return u.cols; }
  CellView view() const;
  std::size_t param_count() const { return w.data.size() + u.data.size() + b.size(); }
};

/// (h', c') from one LSTM step. Throws Argument on dimension mismatch.
std::pair<std::vector<double>, std::vector<double>> lstm_cell_forward(const CellParams& p, std::span<const double> x,
                                                                      std::span<const double> h,
                                                                      std::span<const double> c);
std::vector<double> gru_cell_forward(const CellParams& p, std::span<const double> x, std::span<const double> h);

}  // namespace aqtriad::nn
