#pragma once

#include "glyco/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace glyco {

// Wide-and-deep regressor. Deep branch: a 2-layer LSTM over the fused
// sequence, a shared per-timestep projection to one scalar (N values), then a
// 100-sigmoid and a 50-sigmoid dense layer into a linear output. Wide branch:
// an affine score over the 8 tabular features. Prediction = deep + wide.
//
// All trainable parameters live in one flat double vector with a fixed,
// documented order (see README "Checkpoint format"):
//   per LSTM layer, gates in order input, forget, output, candidate:
//     W_gate (hidden x (d_in + hidden), row-major over [x; h_prev]), b_gate
//   head: proj_w (hidden), proj_b, dense1_w (100 x N), dense1_b,
//         dense2_w (50 x 100), dense2_b, out_w (50), out_b
//   wide: wide_w (8), wide_b

enum class Gate { input = 0, forget = 1, output = 2, candidate = 3 };
inline constexpr int kGateCount = 4;
inline constexpr int kLstmLayers = 2;

struct ModelDims {
  bool has_deep = true;
  bool has_wide = true;
  int input_dim = 9;   // sequence feature width (9 or 1)
  int hidden_dim = 64;
  int seq_len = 0;     // N, fixed at construction
  int dense1 = 100;
  int dense2 = 50;
  int wide_dim = kTabularFeatureCount;
  bool wide_sigmoid = false; // sensitivity knob; regression default is affine

  bool operator==(const ModelDims&) const = default;

  int layer_input_dim(int layer) const { return layer == 0 ? input_dim : hidden_dim; }
  std::size_t param_count() const;
};

struct Normalizer {
  double mean = 0.0;
  double std = 1.0; // always > 0

  bool operator==(const Normalizer&) const = default;
};

class ModelParams {
public:
  explicit ModelParams(const ModelDims& dims); // all parameters zero

  // Gate weights uniform in +-1/sqrt(fan_in), forget bias 1, dense layers the
  // same fan-in rule, wide branch zero.
  static ModelParams random_init(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> gate_w(int layer, Gate g);
  std::span<const double> gate_w(int layer, Gate g) const;
  std::span<double> gate_b(int layer, Gate g);
  std::span<const double> gate_b(int layer, Gate g) const;
  std::span<double> proj_w();
  std::span<const double> proj_w() const;
  std::span<double> dense1_w();
  std::span<const double> dense1_w() const;
  std::span<double> dense1_b();
  std::span<const double> dense1_b() const;
  std::span<double> dense2_w();
  std::span<const double> dense2_w() const;
  std::span<double> dense2_b();
  std::span<const double> dense2_b() const;
  std::span<double> out_w();
  std::span<const double> out_w() const;
  std::span<double> wide_w();
  std::span<const double> wide_w() const;
  double& proj_b();
  double proj_b() const;
  double& out_b();
  double out_b() const;
  double& wide_b();
  double wide_b() const;

  // Z-score statistics fitted on training data; stored with the parameters so
  // inference is self-contained.
  std::vector<Normalizer> seq_norm; // input_dim entries (when has_deep)
  std::vector<Normalizer> tab_norm; // wide_dim entries (when has_wide)

  // Bumped by every optimizer step; outstanding tapes become stale.
  std::uint64_t revision() const { return revision_; }
  void mark_mutated() { ++revision_; }

private:
  ModelDims dims_;
  std::vector<double> values_;
  std::uint64_t revision_ = 0;

  std::size_t gate_w_offset(int layer, Gate g) const;
  std::size_t gate_b_offset(int layer, Gate g) const;
  std::size_t head_offset() const;
  std::size_t wide_offset() const;
};

// Everything backward needs from one forward pass.
struct Tape {
  ModelDims dims;
  std::uint64_t params_revision = 0;
  bool collected = false;

  std::vector<double> seq_input;              // N x input_dim (normalized)
  std::array<std::vector<double>, kLstmLayers> h;       // N x hidden
  std::array<std::vector<double>, kLstmLayers> c;       // N x hidden
  std::array<std::vector<double>, kLstmLayers> tanh_c;  // N x hidden
  std::array<std::vector<double>, kLstmLayers> gates;   // N x 4*hidden (i,f,o,g)
  std::vector<double> proj_out;               // N
  std::vector<double> a1;                     // dense1 activations
  std::vector<double> a2;                     // dense2 activations
  std::vector<double> tab_input;              // normalized tabular
  double prediction = 0.0;
};

// Numerically stable logistic.
double sigmoid(double x);

// One LSTM cell update: i,f,o = sigmoid(affine([x; h_prev])),
// g = tanh(affine([x; h_prev])), c = f.c_prev + i.g, h = o.tanh(c).
// gates_out, when non-null, receives the 4*hidden post-activation gates.
void lstm_cell_step(const ModelParams& params, int layer, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev,
                    std::span<double> h_out, std::span<double> c_out,
                    std::span<double> gates_out = {});

// Deep branch over a normalized N x input_dim sequence (row-major).
double deep_forward(const ModelParams& params, std::span<const double> seq_normalized,
                    Tape* tape = nullptr);

// Wide branch over normalized tabular features (affine; optional sigmoid).
double wide_forward(const ModelParams& params, std::span<const double> tab_normalized);

struct SeqMatrix {
  std::size_t len = 0;
  std::size_t width = 0;
  std::vector<double> data; // row-major, len x width
};

std::vector<double> normalize_sequence(const ModelParams& params, const SeqMatrix& raw);
std::vector<double> normalize_tabular(const ModelParams& params,
                                      std::span<const double> raw);

// Full prediction on raw inputs; applies the stored normalizers, then returns
// deep + wide (each branch contributing 0 when absent).
double model_forward(const ModelParams& params, const SeqMatrix* seq,
                     std::span<const double> tabular, Tape* tape = nullptr);

// Exact gradients of (upstream_grad * prediction) w.r.t. every parameter, in
// flat layout order, via backpropagation through time.
std::vector<double> model_backward(const ModelParams& params, const Tape& tape,
                                   double upstream_grad);

} // namespace glyco
