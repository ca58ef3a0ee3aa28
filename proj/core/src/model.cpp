#include "glyco/model.hpp"

#include "glyco/errors.hpp"
#include "glyco/rng.hpp"

#include <cmath>

namespace glyco {

namespace {

std::size_t gate_block(int d_in, int hidden) {
  return static_cast<std::size_t>(hidden) * (d_in + hidden) + hidden;
}

std::size_t lstm_layer_size(const ModelDims& d, int layer) {
  return kGateCount * gate_block(d.layer_input_dim(layer), d.hidden_dim);
}

std::size_t lstm_total(const ModelDims& d) {
  std::size_t total = 0;
  for (int l = 0; l < kLstmLayers; ++l) total += lstm_layer_size(d, l);
  return total;
}

std::size_t head_total(const ModelDims& d) {
  return static_cast<std::size_t>(d.hidden_dim) + 1 +
         static_cast<std::size_t>(d.dense1) * d.seq_len + d.dense1 +
         static_cast<std::size_t>(d.dense2) * d.dense1 + d.dense2 +
         static_cast<std::size_t>(d.dense2) + 1;
}

} // namespace

std::size_t ModelDims::param_count() const {
  std::size_t n = 0;
  if (has_deep) n += lstm_total(*this) + head_total(*this);
  if (has_wide) n += static_cast<std::size_t>(wide_dim) + 1;
  return n;
}

ModelParams::ModelParams(const ModelDims& dims) : dims_(dims) {
  if (dims.has_deep &&
      (dims.input_dim <= 0 || dims.hidden_dim <= 0 || dims.seq_len <= 0 ||
       dims.dense1 <= 0 || dims.dense2 <= 0))
    raise(Errc::dimension_mismatch, "deep branch dimensions must be positive");
  if (dims.has_wide && dims.wide_dim <= 0)
    raise(Errc::dimension_mismatch, "wide branch width must be positive");
  if (!dims.has_deep && !dims.has_wide)
    raise(Errc::dimension_mismatch, "model needs at least one branch");
  values_.assign(dims.param_count(), 0.0);
  if (dims.has_deep) seq_norm.assign(dims.input_dim, Normalizer{});
  if (dims.has_wide) tab_norm.assign(dims.wide_dim, Normalizer{});
}

std::size_t ModelParams::gate_w_offset(int layer, Gate g) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) off += lstm_layer_size(dims_, l);
  off += static_cast<std::size_t>(g) *
         gate_block(dims_.layer_input_dim(layer), dims_.hidden_dim);
  return off;
}

std::size_t ModelParams::gate_b_offset(int layer, Gate g) const {
  const int d_in = dims_.layer_input_dim(layer);
  return gate_w_offset(layer, g) +
         static_cast<std::size_t>(dims_.hidden_dim) * (d_in + dims_.hidden_dim);
}

std::size_t ModelParams::head_offset() const { return lstm_total(dims_); }

std::size_t ModelParams::wide_offset() const {
  return dims_.has_deep ? head_offset() + head_total(dims_) : 0;
}

namespace {

// Head sections, as offsets past head_offset().
struct HeadOffsets {
  std::size_t proj_w, proj_b, d1_w, d1_b, d2_w, d2_b, out_w, out_b;
};

HeadOffsets head_offsets(const ModelDims& d) {
  HeadOffsets o{};
  o.proj_w = 0;
  o.proj_b = o.proj_w + d.hidden_dim;
  o.d1_w = o.proj_b + 1;
  o.d1_b = o.d1_w + static_cast<std::size_t>(d.dense1) * d.seq_len;
  o.d2_w = o.d1_b + d.dense1;
  o.d2_b = o.d2_w + static_cast<std::size_t>(d.dense2) * d.dense1;
  o.out_w = o.d2_b + d.dense2;
  o.out_b = o.out_w + d.dense2;
  return o;
}

} // namespace

std::span<double> ModelParams::gate_w(int layer, Gate g) {
  const int d_in = dims_.layer_input_dim(layer);
  return std::span<double>(values_)
      .subspan(gate_w_offset(layer, g),
               static_cast<std::size_t>(dims_.hidden_dim) * (d_in + dims_.hidden_dim));
}

std::span<const double> ModelParams::gate_w(int layer, Gate g) const {
  const int d_in = dims_.layer_input_dim(layer);
  return std::span<const double>(values_)
      .subspan(gate_w_offset(layer, g),
               static_cast<std::size_t>(dims_.hidden_dim) * (d_in + dims_.hidden_dim));
}

std::span<double> ModelParams::gate_b(int layer, Gate g) {
  return std::span<double>(values_).subspan(gate_b_offset(layer, g), dims_.hidden_dim);
}

std::span<const double> ModelParams::gate_b(int layer, Gate g) const {
  return std::span<const double>(values_).subspan(gate_b_offset(layer, g), dims_.hidden_dim);
}

std::span<double> ModelParams::proj_w() {
  return std::span<double>(values_).subspan(head_offset() + head_offsets(dims_).proj_w,
                                            dims_.hidden_dim);
}
std::span<const double> ModelParams::proj_w() const {
  return std::span<const double>(values_).subspan(head_offset() + head_offsets(dims_).proj_w,
                                                  dims_.hidden_dim);
}
double& ModelParams::proj_b() { return values_[head_offset() + head_offsets(dims_).proj_b]; }
double ModelParams::proj_b() const {
  return values_[head_offset() + head_offsets(dims_).proj_b];
}

std::span<double> ModelParams::dense1_w() {
  return std::span<double>(values_).subspan(
      head_offset() + head_offsets(dims_).d1_w,
      static_cast<std::size_t>(dims_.dense1) * dims_.seq_len);
}
std::span<const double> ModelParams::dense1_w() const {
  return std::span<const double>(values_).subspan(
      head_offset() + head_offsets(dims_).d1_w,
      static_cast<std::size_t>(dims_.dense1) * dims_.seq_len);
}
std::span<double> ModelParams::dense1_b() {
  return std::span<double>(values_).subspan(head_offset() + head_offsets(dims_).d1_b,
                                            dims_.dense1);
}
std::span<const double> ModelParams::dense1_b() const {
  return std::span<const double>(values_).subspan(head_offset() + head_offsets(dims_).d1_b,
                                                  dims_.dense1);
}
std::span<double> ModelParams::dense2_w() {
  return std::span<double>(values_).subspan(
      head_offset() + head_offsets(dims_).d2_w,
      static_cast<std::size_t>(dims_.dense2) * dims_.dense1);
}
std::span<const double> ModelParams::dense2_w() const {
  return std::span<const double>(values_).subspan(
      head_offset() + head_offsets(dims_).d2_w,
      static_cast<std::size_t>(dims_.dense2) * dims_.dense1);
}
std::span<double> ModelParams::dense2_b() {
  return std::span<double>(values_).subspan(head_offset() + head_offsets(dims_).d2_b,
                                            dims_.dense2);
}
std::span<const double> ModelParams::dense2_b() const {
  return std::span<const double>(values_).subspan(head_offset() + head_offsets(dims_).d2_b,
                                                  dims_.dense2);
}
std::span<double> ModelParams::out_w() {
  return std::span<double>(values_).subspan(head_offset() + head_offsets(dims_).out_w,
                                            dims_.dense2);
}
std::span<const double> ModelParams::out_w() const {
  return std::span<const double>(values_).subspan(head_offset() + head_offsets(dims_).out_w,
                                                  dims_.dense2);
}
double& ModelParams::out_b() { return values_[head_offset() + head_offsets(dims_).out_b]; }
double ModelParams::out_b() const {
  return values_[head_offset() + head_offsets(dims_).out_b];
}

std::span<double> ModelParams::wide_w() {
  return std::span<double>(values_).subspan(wide_offset(), dims_.wide_dim);
}
std::span<const double> ModelParams::wide_w() const {
  return std::span<const double>(values_).subspan(wide_offset(), dims_.wide_dim);
}
double& ModelParams::wide_b() { return values_[wide_offset() + dims_.wide_dim]; }
double ModelParams::wide_b() const { return values_[wide_offset() + dims_.wide_dim]; }

ModelParams ModelParams::random_init(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p(dims);
  rng::SplitMix64 stream(rng::derive_seed(seed, 0));
  auto fill = [&stream](std::span<double> w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = stream.uniform(-bound, bound);
  };
  if (dims.has_deep) {
    for (int l = 0; l < kLstmLayers; ++l) {
      const int fan = dims.layer_input_dim(l) + dims.hidden_dim;
      for (int g = 0; g < kGateCount; ++g) fill(p.gate_w(l, static_cast<Gate>(g)), fan);
      // Forget bias 1 keeps early memory open; other gate biases stay zero.
      for (double& b : p.gate_b(l, Gate::forget)) b = 1.0;
    }
    fill(p.proj_w(), dims.hidden_dim);
    fill(p.dense1_w(), dims.seq_len);
    fill(p.dense2_w(), dims.dense1);
    fill(p.out_w(), dims.dense2);
  }
  // Wide branch weights stay zero at init.
  return p;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void lstm_cell_step(const ModelParams& params, int layer, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev,
                    std::span<double> h_out, std::span<double> c_out,
                    std::span<double> gates_out) {
  const ModelDims& d = params.dims();
  const int H = d.hidden_dim;
  const int d_in = d.layer_input_dim(layer);
  if (layer < 0 || layer >= kLstmLayers)
    raise(Errc::dimension_mismatch, "layer index out of range");
  if (x.size() != static_cast<std::size_t>(d_in) ||
      h_prev.size() != static_cast<std::size_t>(H) ||
      c_prev.size() != static_cast<std::size_t>(H) ||
      h_out.size() != static_cast<std::size_t>(H) ||
      c_out.size() != static_cast<std::size_t>(H))
    raise(Errc::dimension_mismatch, "lstm_cell_step operand sizes do not match dims");
  if (!gates_out.empty() &&
      gates_out.size() != static_cast<std::size_t>(kGateCount) * H)
    raise(Errc::dimension_mismatch, "gates_out must hold 4*hidden values");

  double local_gates[4];
  for (int r = 0; r < H; ++r) {
    double z[kGateCount];
    for (int g = 0; g < kGateCount; ++g) {
      const auto w = params.gate_w(layer, static_cast<Gate>(g));
      const double* row = w.data() + static_cast<std::size_t>(r) * (d_in + H);
      double acc = params.gate_b(layer, static_cast<Gate>(g))[r];
      for (int j = 0; j < d_in; ++j) acc += row[j] * x[j];
      for (int j = 0; j < H; ++j) acc += row[d_in + j] * h_prev[j];
      z[g] = acc;
    }
    local_gates[0] = sigmoid(z[0]);          // input
    local_gates[1] = sigmoid(z[1]);          // forget
    local_gates[2] = sigmoid(z[2]);          // output
    local_gates[3] = std::tanh(z[3]);        // candidate
    const double c = local_gates[1] * c_prev[r] + local_gates[0] * local_gates[3];
    c_out[r] = c;
    h_out[r] = local_gates[2] * std::tanh(c);
    if (!gates_out.empty())
      for (int g = 0; g < kGateCount; ++g) gates_out[g * H + r] = local_gates[g];
  }
}

namespace {

// Runs one LSTM layer over the whole sequence; h_seq/c_seq/tanh_c/gates are
// N x H (gates N x 4H) outputs.
void run_lstm_layer(const ModelParams& params, int layer, const double* input, int in_stride,
                    int n, std::vector<double>& h_seq, std::vector<double>& c_seq,
                    std::vector<double>& tanh_c_seq, std::vector<double>* gates_seq) {
  const ModelDims& d = params.dims();
  const int H = d.hidden_dim;
  const int d_in = d.layer_input_dim(layer);

  h_seq.assign(static_cast<std::size_t>(n) * H, 0.0);
  c_seq.assign(static_cast<std::size_t>(n) * H, 0.0);
  tanh_c_seq.assign(static_cast<std::size_t>(n) * H, 0.0);
  if (gates_seq) gates_seq->assign(static_cast<std::size_t>(n) * kGateCount * H, 0.0);

  const double* w[kGateCount];
  const double* b[kGateCount];
  for (int g = 0; g < kGateCount; ++g) {
    w[g] = params.gate_w(layer, static_cast<Gate>(g)).data();
    b[g] = params.gate_b(layer, static_cast<Gate>(g)).data();
  }

  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (int t = 0; t < n; ++t) {
    const double* x = input + static_cast<std::size_t>(t) * in_stride;
    double* h_t = h_seq.data() + static_cast<std::size_t>(t) * H;
    double* c_t = c_seq.data() + static_cast<std::size_t>(t) * H;
    double* tc_t = tanh_c_seq.data() + static_cast<std::size_t>(t) * H;
    for (int r = 0; r < H; ++r) {
      double z[kGateCount];
      const std::size_t row_off = static_cast<std::size_t>(r) * (d_in + H);
      for (int g = 0; g < kGateCount; ++g) {
        const double* row = w[g] + row_off;
        double acc = b[g][r];
        for (int j = 0; j < d_in; ++j) acc += row[j] * x[j];
        for (int j = 0; j < H; ++j) acc += row[d_in + j] * h_prev[j];
        z[g] = acc;
      }
      const double gi = sigmoid(z[0]);
      const double gf = sigmoid(z[1]);
      const double go = sigmoid(z[2]);
      const double gc = std::tanh(z[3]);
      const double c = gf * c_prev[r] + gi * gc;
      const double tc = std::tanh(c);
      c_t[r] = c;
      tc_t[r] = tc;
      h_t[r] = go * tc;
      if (gates_seq) {
        double* gs = gates_seq->data() +
                     (static_cast<std::size_t>(t) * kGateCount + 0) * H;
        gs[0 * H + r] = gi;
        gs[1 * H + r] = gf;
        gs[2 * H + r] = go;
        gs[3 * H + r] = gc;
      }
    }
    std::copy(h_t, h_t + H, h_prev.begin());
    std::copy(c_t, c_t + H, c_prev.begin());
  }
}

} // namespace

double deep_forward(const ModelParams& params, std::span<const double> seq_normalized,
                    Tape* tape) {
  const ModelDims& d = params.dims();
  if (!d.has_deep) raise(Errc::dimension_mismatch, "model has no deep branch");
  const int N = d.seq_len;
  const int H = d.hidden_dim;
  if (seq_normalized.size() != static_cast<std::size_t>(N) * d.input_dim)
    raise(Errc::length_mismatch,
          "sequence has " + std::to_string(seq_normalized.size() / std::max(d.input_dim, 1)) +
              " steps, model expects " + std::to_string(N));

  std::vector<double> h_local[kLstmLayers], c_local[kLstmLayers], tc_local[kLstmLayers];
  std::vector<double>* h[kLstmLayers];
  std::vector<double>* c[kLstmLayers];
  std::vector<double>* tc[kLstmLayers];
  std::vector<double>* gates[kLstmLayers];
  for (int l = 0; l < kLstmLayers; ++l) {
    h[l] = tape ? &tape->h[l] : &h_local[l];
    c[l] = tape ? &tape->c[l] : &c_local[l];
    tc[l] = tape ? &tape->tanh_c[l] : &tc_local[l];
    gates[l] = tape ? &tape->gates[l] : nullptr;
  }

  run_lstm_layer(params, 0, seq_normalized.data(), d.input_dim, N, *h[0], *c[0], *tc[0],
                 gates[0]);
  run_lstm_layer(params, 1, h[0]->data(), H, N, *h[1], *c[1], *tc[1], gates[1]);

  const auto proj_w = params.proj_w();
  const double proj_b = params.proj_b();
  std::vector<double> proj(N, 0.0);
  for (int t = 0; t < N; ++t) {
    const double* h2 = h[1]->data() + static_cast<std::size_t>(t) * H;
    double acc = proj_b;
    for (int k = 0; k < H; ++k) acc += proj_w[k] * h2[k];
    proj[t] = acc;
  }

  const auto w1 = params.dense1_w();
  const auto b1 = params.dense1_b();
  std::vector<double> a1(d.dense1, 0.0);
  for (int r = 0; r < d.dense1; ++r) {
    const double* row = w1.data() + static_cast<std::size_t>(r) * N;
    double acc = b1[r];
    for (int t = 0; t < N; ++t) acc += row[t] * proj[t];
    a1[r] = sigmoid(acc);
  }

  const auto w2 = params.dense2_w();
  const auto b2 = params.dense2_b();
  std::vector<double> a2(d.dense2, 0.0);
  for (int r = 0; r < d.dense2; ++r) {
    const double* row = w2.data() + static_cast<std::size_t>(r) * d.dense1;
    double acc = b2[r];
    for (int j = 0; j < d.dense1; ++j) acc += row[j] * a1[j];
    a2[r] = sigmoid(acc);
  }

  const auto ow = params.out_w();
  double out = params.out_b();
  for (int r = 0; r < d.dense2; ++r) out += ow[r] * a2[r];

  if (tape) {
    tape->seq_input.assign(seq_normalized.begin(), seq_normalized.end());
    tape->proj_out = std::move(proj);
    tape->a1 = std::move(a1);
    tape->a2 = std::move(a2);
  }
  return out;
}

double wide_forward(const ModelParams& params, std::span<const double> tab_normalized) {
  const ModelDims& d = params.dims();
  if (!d.has_wide) raise(Errc::dimension_mismatch, "model has no wide branch");
  if (tab_normalized.size() != static_cast<std::size_t>(d.wide_dim))
    raise(Errc::dimension_mismatch, "wide branch expects " + std::to_string(d.wide_dim) +
                                        " features, got " +
                                        std::to_string(tab_normalized.size()));
  const auto w = params.wide_w();
  double acc = 0.0; // left-to-right accumulation, then bias
  for (int i = 0; i < d.wide_dim; ++i) acc += w[i] * tab_normalized[i];
  acc += params.wide_b();
  return d.wide_sigmoid ? sigmoid(acc) : acc;
}

std::vector<double> normalize_sequence(const ModelParams& params, const SeqMatrix& raw) {
  const ModelDims& d = params.dims();
  if (raw.width != static_cast<std::size_t>(d.input_dim))
    raise(Errc::dimension_mismatch, "sequence width " + std::to_string(raw.width) +
                                        " != model input_dim " + std::to_string(d.input_dim));
  if (params.seq_norm.size() != static_cast<std::size_t>(d.input_dim))
    raise(Errc::dimension_mismatch, "sequence normalizers not fitted");
  std::vector<double> out(raw.data.size());
  for (std::size_t t = 0; t < raw.len; ++t)
    for (std::size_t j = 0; j < raw.width; ++j) {
      const Normalizer& n = params.seq_norm[j];
      out[t * raw.width + j] = (raw.data[t * raw.width + j] - n.mean) / n.std;
    }
  return out;
}

std::vector<double> normalize_tabular(const ModelParams& params,
                                      std::span<const double> raw) {
  const ModelDims& d = params.dims();
  if (raw.size() != static_cast<std::size_t>(d.wide_dim) ||
      params.tab_norm.size() != raw.size())
    raise(Errc::dimension_mismatch, "tabular width mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = (raw[i] - params.tab_norm[i].mean) / params.tab_norm[i].std;
  return out;
}

double model_forward(const ModelParams& params, const SeqMatrix* seq,
                     std::span<const double> tabular, Tape* tape) {
  const ModelDims& d = params.dims();
  double deep = 0.0;
  double wide = 0.0;
  if (d.has_deep) {
    if (!seq) raise(Errc::missing_modality, "experiment requires a fused sequence");
    if (seq->len != static_cast<std::size_t>(d.seq_len))
      raise(Errc::length_mismatch, "sequence length " + std::to_string(seq->len) +
                                       " != model N " + std::to_string(d.seq_len));
    deep = deep_forward(params, normalize_sequence(params, *seq), tape);
  }
  if (d.has_wide) {
    if (tabular.empty()) raise(Errc::missing_modality, "experiment requires tabular features");
    auto tab = normalize_tabular(params, tabular);
    wide = wide_forward(params, tab);
    if (tape) tape->tab_input = std::move(tab);
  }
  const double pred = deep + wide;
  if (tape) {
    tape->dims = d;
    tape->params_revision = params.revision();
    tape->collected = true;
    tape->prediction = pred;
  }
  return pred;
}

namespace {

// Backpropagation through time for one layer. upstream is N x H of dL/dh.
// dx_out (N x d_in), when non-null, receives dL/dx for chaining to the layer
// below. Parameter gradients land in grads at this layer's flat offsets.
void lstm_backward_layer(const ModelParams& params, int layer, const Tape& tape,
                         const std::vector<double>& upstream, std::vector<double>& grads,
                         std::vector<double>* dx_out, std::size_t layer_offset) {
  const ModelDims& d = params.dims();
  const int H = d.hidden_dim;
  const int d_in = d.layer_input_dim(layer);
  const int N = d.seq_len;
  const std::size_t block = gate_block(d_in, H);
  const std::size_t w_size = static_cast<std::size_t>(H) * (d_in + H);

  const double* w[kGateCount];
  double* gw[kGateCount];
  double* gb[kGateCount];
  for (int g = 0; g < kGateCount; ++g) {
    w[g] = params.gate_w(layer, static_cast<Gate>(g)).data();
    gw[g] = grads.data() + layer_offset + g * block;
    gb[g] = grads.data() + layer_offset + g * block + w_size;
  }

  if (dx_out) dx_out->assign(static_cast<std::size_t>(N) * d_in, 0.0);

  std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
  std::vector<double> dz(static_cast<std::size_t>(kGateCount) * H, 0.0);
  for (int t = N - 1; t >= 0; --t) {
    const double* gates = tape.gates[layer].data() +
                          static_cast<std::size_t>(t) * kGateCount * H;
    const double* tc = tape.tanh_c[layer].data() + static_cast<std::size_t>(t) * H;
    const double* c_prev =
        t > 0 ? tape.c[layer].data() + static_cast<std::size_t>(t - 1) * H : nullptr;
    const double* h_prev =
        t > 0 ? tape.h[layer].data() + static_cast<std::size_t>(t - 1) * H : nullptr;
    const double* x =
        layer == 0 ? tape.seq_input.data() + static_cast<std::size_t>(t) * d_in
                   : tape.h[0].data() + static_cast<std::size_t>(t) * d_in;

    for (int k = 0; k < H; ++k) {
      const double gi = gates[0 * H + k];
      const double gf = gates[1 * H + k];
      const double go = gates[2 * H + k];
      const double gc = gates[3 * H + k];
      const double dh = upstream[static_cast<std::size_t>(t) * H + k] + dh_carry[k];
      const double dout_gate = dh * tc[k];
      const double dc = dh * go * (1.0 - tc[k] * tc[k]) + dc_carry[k];
      const double cp = c_prev ? c_prev[k] : 0.0;
      dz[0 * H + k] = dc * gc * gi * (1.0 - gi);
      dz[1 * H + k] = dc * cp * gf * (1.0 - gf);
      dz[2 * H + k] = dout_gate * go * (1.0 - go);
      dz[3 * H + k] = dc * gi * (1.0 - gc * gc);
      dc_carry[k] = dc * gf;
    }

    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    double* dx_t = dx_out ? dx_out->data() + static_cast<std::size_t>(t) * d_in : nullptr;
    for (int g = 0; g < kGateCount; ++g) {
      for (int r = 0; r < H; ++r) {
        const double dzv = dz[static_cast<std::size_t>(g) * H + r];
        if (dzv == 0.0) continue;
        const std::size_t row_off = static_cast<std::size_t>(r) * (d_in + H);
        const double* wrow = w[g] + row_off;
        double* gwrow = gw[g] + row_off;
        for (int j = 0; j < d_in; ++j) {
          gwrow[j] += dzv * x[j];
          if (dx_t) dx_t[j] += dzv * wrow[j];
        }
        if (h_prev) {
          for (int j = 0; j < H; ++j) {
            gwrow[d_in + j] += dzv * h_prev[j];
            dh_carry[j] += dzv * wrow[d_in + j];
          }
        } else {
          for (int j = 0; j < H; ++j) dh_carry[j] += dzv * wrow[d_in + j];
        }
        gb[g][r] += dzv;
      }
    }
  }
}

} // namespace

std::vector<double> model_backward(const ModelParams& params, const Tape& tape,
                                   double upstream_grad) {
  const ModelDims& d = params.dims();
  if (!tape.collected) raise(Errc::stale_tape, "tape was not produced by a forward pass");
  if (tape.params_revision != params.revision())
    raise(Errc::stale_tape, "parameters changed since the tape was recorded");
  if (!(tape.dims == d)) raise(Errc::dimension_mismatch, "tape dims do not match model");

  std::vector<double> grads(params.values().size(), 0.0);
  const double u = upstream_grad;

  if (d.has_wide) {
    const auto w = params.wide_w();
    const std::size_t wide_off = w.data() - params.values().data();
    double du = u;
    if (d.wide_sigmoid) {
      double z = 0.0;
      for (int i = 0; i < d.wide_dim; ++i) z += w[i] * tape.tab_input[i];
      z += params.wide_b();
      const double s = sigmoid(z);
      du = u * s * (1.0 - s);
    }
    for (int i = 0; i < d.wide_dim; ++i) grads[wide_off + i] += du * tape.tab_input[i];
    grads[wide_off + d.wide_dim] += du;
  }

  if (d.has_deep) {
    const int N = d.seq_len;
    const int H = d.hidden_dim;
    const auto ow = params.out_w();
    const auto w2 = params.dense2_w();
    const auto w1 = params.dense1_w();
    const auto pw = params.proj_w();

    const std::size_t proj_w_off = pw.data() - params.values().data();
    const std::size_t d1w_off = w1.data() - params.values().data();
    const std::size_t d2w_off = w2.data() - params.values().data();
    const std::size_t ow_off = ow.data() - params.values().data();

    // Output layer.
    std::vector<double> da2(d.dense2, 0.0);
    for (int r = 0; r < d.dense2; ++r) {
      grads[ow_off + r] += u * tape.a2[r];
      da2[r] = u * ow[r];
    }
    grads[ow_off + d.dense2] += u; // out_b

    // dense2 (sigmoid).
    std::vector<double> da1(d.dense1, 0.0);
    for (int r = 0; r < d.dense2; ++r) {
      const double dz = da2[r] * tape.a2[r] * (1.0 - tape.a2[r]);
      const std::size_t row = static_cast<std::size_t>(r) * d.dense1;
      for (int j = 0; j < d.dense1; ++j) {
        grads[d2w_off + row + j] += dz * tape.a1[j];
        da1[j] += dz * w2[row + j];
      }
      grads[d2w_off + static_cast<std::size_t>(d.dense2) * d.dense1 + r] += dz; // b2
    }

    // dense1 (sigmoid).
    std::vector<double> ds(N, 0.0);
    for (int r = 0; r < d.dense1; ++r) {
      const double dz = da1[r] * tape.a1[r] * (1.0 - tape.a1[r]);
      const std::size_t row = static_cast<std::size_t>(r) * N;
      for (int t = 0; t < N; ++t) {
        grads[d1w_off + row + t] += dz * tape.proj_out[t];
        ds[t] += dz * w1[row + t];
      }
      grads[d1w_off + static_cast<std::size_t>(d.dense1) * N + r] += dz; // b1
    }

    // Shared projection, then BPTT through both layers.
    std::vector<double> dh2(static_cast<std::size_t>(N) * H, 0.0);
    double dproj_b = 0.0;
    for (int t = 0; t < N; ++t) {
      const double dst = ds[t];
      dproj_b += dst;
      const double* h2 = tape.h[1].data() + static_cast<std::size_t>(t) * H;
      for (int k = 0; k < H; ++k) {
        grads[proj_w_off + k] += dst * h2[k];
        dh2[static_cast<std::size_t>(t) * H + k] = dst * pw[k];
      }
    }
    grads[proj_w_off + H] += dproj_b; // proj_b

    std::size_t layer1_off = lstm_layer_size(d, 0);
    std::vector<double> dh1;
    lstm_backward_layer(params, 1, tape, dh2, grads, &dh1, layer1_off);
    lstm_backward_layer(params, 0, tape, dh1, grads, nullptr, 0);
  }

  return grads;
}

} // namespace glyco
