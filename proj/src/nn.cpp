// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "flowdisagg/errors.hpp"

namespace flowdisagg::nn {
namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// Gate activations for one step; `gates` receives (i, f, g, o) and
// `cell`/`hidden` the new state.
void lstm_cell(const LstmParams& p, std::span<const double> x,
               std::span<const double> h_prev, std::span<const double> c_prev,
               std::span<double> gates, std::span<double> cell,
               std::span<double> hidden) {
  const std::size_t H = p.hidden_size;
  const std::size_t I = p.input_size;
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double s = p.bias[r];
    const double* wi = p.w_input.data().data() + r * I;
    for (std::size_t j = 0; j < I; ++j) s += wi[j] * x[j];
    const double* wh = p.w_hidden.data().data() + r * H;
    for (std::size_t j = 0; j < H; ++j) s += wh[j] * h_prev[j];
    gates[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(s) : sigmoid(s);
  }
  for (std::size_t u = 0; u < H; ++u) {
    const double i = gates[u];
    const double f = gates[H + u];
    const double g = gates[2 * H + u];
    const double o = gates[3 * H + u];
    cell[u] = f * c_prev[u] + i * g;
    hidden[u] = o * std::tanh(cell[u]);
  }
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case Activation::Identity:
      return z;
  }
  return z;
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double out) {
  switch (a) {
    case Activation::Tanh:
      return 1.0 - out * out;
    case Activation::Relu:
      return out > 0.0 ? 1.0 : 0.0;
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// LSTM

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) {
    throw ShapeError("LSTM sizes must be positive");
  }
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = Matrix(4 * hidden_size, input_size);
  p.w_hidden = Matrix(4 * hidden_size, hidden_size);
  p.bias.assign(4 * hidden_size, 0.0);
  return p;
}

void LstmParams::validate() const {
  const std::size_t G = 4 * hidden_size;
  if (input_size == 0 || hidden_size == 0 || w_input.rows() != G ||
      w_input.cols() != input_size || w_hidden.rows() != G ||
      w_hidden.cols() != hidden_size || bias.size() != G) {
    throw ShapeError("inconsistent LSTM parameter shapes");
  }
  if (!all_finite(w_input.data()) || !all_finite(w_hidden.data()) ||
      !all_finite(bias)) {
    throw DataError("non-finite LSTM parameter");
  }
}

std::vector<TensorView> LstmParams::tensors() {
  return {{"lstm.w_input", w_input.data()},
          {"lstm.w_hidden", w_hidden.data()},
          {"lstm.bias", bias}};
}

std::vector<ConstTensorView> LstmParams::tensors() const {
  return {{"lstm.w_input", w_input.data()},
          {"lstm.w_hidden", w_hidden.data()},
          {"lstm.bias", bias}};
}

LstmState lstm_step(const LstmParams& params, std::span<const double> input,
                    const LstmState& state) {
  if (input.size() != params.input_size) {
    throw ShapeError("LSTM input has " + std::to_string(input.size()) +
                     " entries, expected " +
                     std::to_string(params.input_size));
  }
  if (state.hidden.size() != params.hidden_size ||
      state.cell.size() != params.hidden_size) {
    throw ShapeError("LSTM state size does not match hidden_size");
  }
  std::vector<double> gates(4 * params.hidden_size);
  LstmState next{std::vector<double>(params.hidden_size),
                 std::vector<double>(params.hidden_size)};
  lstm_cell(params, input, state.hidden, state.cell, gates, next.cell,
            next.hidden);
  return next;
}

std::vector<double> lstm_forward(const LstmParams& params,
                                 const Matrix& sequence, LstmCache* cache) {
  const std::size_t T = sequence.rows();
  const std::size_t H = params.hidden_size;
  if (T == 0) throw ShapeError("LSTM sequence is empty");
  if (sequence.cols() != params.input_size) {
    throw ShapeError("LSTM input at step 0 has " +
                     std::to_string(sequence.cols()) + " entries, expected " +
                     std::to_string(params.input_size));
  }

  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  c.input_size = params.input_size;
  c.hidden_size = H;
  c.inputs = sequence;
  c.gates = Matrix(T, 4 * H);
  c.cells = Matrix(T, H);
  c.hiddens = Matrix(T, H);

  const std::vector<double> zero(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::span<const double> h_prev =
        t ? std::as_const(c.hiddens).row(t - 1) : zero;
    const std::span<const double> c_prev =
        t ? std::as_const(c.cells).row(t - 1) : zero;
    lstm_cell(params, sequence.row(t), h_prev, c_prev, c.gates.row(t),
              c.cells.row(t), c.hiddens.row(t));
  }
  const auto last = c.hiddens.row(T - 1);
  return {last.begin(), last.end()};
}

void lstm_backward(const LstmParams& params, const LstmCache& cache,
                   std::span<const double> d_final_hidden, LstmParams& grads) {
  const std::size_t H = params.hidden_size;
  const std::size_t I = params.input_size;
  const std::size_t T = cache.steps();
  if (cache.hidden_size != H || cache.input_size != I || T == 0 ||
      cache.gates.rows() != T || cache.gates.cols() != 4 * H ||
      cache.inputs.cols() != I) {
    throw ShapeError("LSTM cache does not match parameters (stale cache?)");
  }
  if (d_final_hidden.size() != H) {
    throw ShapeError("LSTM output gradient has wrong size");
  }
  if (grads.hidden_size != H || grads.input_size != I) {
    throw ShapeError("LSTM gradient buffer has wrong shape");
  }

  std::vector<double> dh(d_final_hidden.begin(), d_final_hidden.end());
  std::vector<double> dc(H, 0.0);
  std::vector<double> da(4 * H);
  std::vector<double> dh_prev(H);
  const std::vector<double> zero(H, 0.0);

  for (std::size_t t = T; t-- > 0;) {
    const auto gates = cache.gates.row(t);
    const auto cell = cache.cells.row(t);
    std::span<const double> c_prev = t ? cache.cells.row(t - 1) : zero;
    std::span<const double> h_prev = t ? cache.hiddens.row(t - 1) : zero;

    for (std::size_t u = 0; u < H; ++u) {
      const double i = gates[u];
      const double f = gates[H + u];
      const double g = gates[2 * H + u];
      const double o = gates[3 * H + u];
      const double tc = std::tanh(cell[u]);
      const double d_o = dh[u] * tc;
      const double d_c = dc[u] + dh[u] * o * (1.0 - tc * tc);
      da[u] = d_c * g * i * (1.0 - i);
      da[H + u] = d_c * c_prev[u] * f * (1.0 - f);
      da[2 * H + u] = d_c * i * (1.0 - g * g);
      da[3 * H + u] = d_o * o * (1.0 - o);
      dc[u] = d_c * f;
    }

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    const auto x = cache.inputs.row(t);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double a = da[r];
      double* gwi = grads.w_input.data().data() + r * I;
      for (std::size_t j = 0; j < I; ++j) gwi[j] += a * x[j];
      double* gwh = grads.w_hidden.data().data() + r * H;
      const double* wh = params.w_hidden.data().data() + r * H;
      for (std::size_t j = 0; j < H; ++j) {
        gwh[j] += a * h_prev[j];
        dh_prev[j] += wh[j] * a;
      }
      grads.bias[r] += a;
    }
    dh.swap(dh_prev);
  }
}

// ---------------------------------------------------------------------------
// Feedforward

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name +
                    "' (supported: tanh, relu, identity)");
}

FfnParams FfnParams::zeros(std::vector<std::size_t> sizes,
                           Activation activation) {
  if (sizes.size() < 2) throw ShapeError("FFN needs at least two layer sizes");
  if (sizes.back() != 1) throw ShapeError("FFN output layer must have 1 unit");
  for (auto s : sizes) {
    if (s == 0) throw ShapeError("FFN layer sizes must be positive");
  }
  FfnParams p;
  p.sizes = std::move(sizes);
  p.activation = activation;
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    p.weights.emplace_back(p.sizes[l + 1], p.sizes[l]);
    p.biases.emplace_back(p.sizes[l + 1], 0.0);
  }
  return p;
}

void FfnParams::validate() const {
  if (sizes.size() < 2 || sizes.back() != 1 ||
      weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
    throw ShapeError("inconsistent FFN layer structure");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != sizes[l + 1] || weights[l].cols() != sizes[l] ||
        biases[l].size() != sizes[l + 1]) {
      throw ShapeError("FFN layer " + std::to_string(l) + " has wrong shape");
    }
    if (!all_finite(weights[l].data()) || !all_finite(biases[l])) {
      throw DataError("non-finite FFN parameter in layer " +
                      std::to_string(l));
    }
  }
}

std::vector<TensorView> FfnParams::tensors() {
  std::vector<TensorView> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back({"ffn.w" + std::to_string(l), weights[l].data()});
    out.push_back({"ffn.b" + std::to_string(l), biases[l]});
  }
  return out;
}

std::vector<ConstTensorView> FfnParams::tensors() const {
  std::vector<ConstTensorView> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back({"ffn.w" + std::to_string(l), weights[l].data()});
    out.push_back({"ffn.b" + std::to_string(l), biases[l]});
  }
  return out;
}

double ffn_forward(const FfnParams& params, std::span<const double> input,
                   FfnCache* cache) {
  if (input.size() != params.input_size()) {
    throw ShapeError("FFN input has " + std::to_string(input.size()) +
                     " entries, expected " +
                     std::to_string(params.input_size()));
  }
  FfnCache local;
  FfnCache& c = cache ? *cache : local;
  const std::size_t L = params.layers();
  c.input_size = input.size();
  c.activations.resize(L + 1);
  c.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& w = params.weights[l];
    const auto& prev = c.activations[l];
    auto& out = c.activations[l + 1];
    out.resize(w.rows());
    const bool hidden = l + 1 < L;
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double s = params.biases[l][r];
      const double* wr = w.data().data() + r * w.cols();
      for (std::size_t j = 0; j < w.cols(); ++j) s += wr[j] * prev[j];
      out[r] = hidden ? activate(params.activation, s) : s;
    }
  }
  return c.activations[L][0];
}

void ffn_backward(const FfnParams& params, const FfnCache& cache,
                  double d_output, FfnParams& grads,
                  std::span<double> d_input) {
  const std::size_t L = params.layers();
  if (cache.activations.size() != L + 1 ||
      cache.input_size != params.input_size() ||
      cache.activations[L].size() != 1) {
    throw ShapeError("FFN cache does not match parameters (stale cache?)");
  }
  if (grads.layers() != L) throw ShapeError("FFN gradient buffer has wrong shape");
  if (!d_input.empty() && d_input.size() != params.input_size()) {
    throw ShapeError("FFN input gradient buffer has wrong size");
  }

  std::vector<double> delta{d_output};
  std::vector<double> prev_delta;
  for (std::size_t l = L; l-- > 0;) {
    const Matrix& w = params.weights[l];
    const auto& a_prev = cache.activations[l];
    Matrix& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    prev_delta.assign(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double d = delta[r];
      double* gwr = gw.data().data() + r * w.cols();
      const double* wr = w.data().data() + r * w.cols();
      for (std::size_t j = 0; j < w.cols(); ++j) {
        gwr[j] += d * a_prev[j];
        prev_delta[j] += wr[j] * d;
      }
      gb[r] += d;
    }
    if (l > 0) {
      for (std::size_t j = 0; j < prev_delta.size(); ++j) {
        prev_delta[j] *= activate_grad(params.activation, a_prev[j]);
      }
    } else if (!d_input.empty()) {
      std::copy(prev_delta.begin(), prev_delta.end(), d_input.begin());
    }
    delta.swap(prev_delta);
  }
}

// ---------------------------------------------------------------------------
// Loss

double mse_loss(std::span<const double> predictions,
                std::span<const double> targets) {
  if (predictions.empty()) throw ShapeError("mse_loss of empty input");
  if (predictions.size() != targets.size()) {
    throw ShapeError("mse_loss: prediction and target lengths differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Parameter utilities

std::size_t parameter_count(std::span<const ConstTensorView> tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

std::vector<double> flatten(std::span<const ConstTensorView> tensors) {
  std::vector<double> flat;
  flat.reserve(parameter_count(tensors));
  for (const auto& t : tensors) {
    flat.insert(flat.end(), t.values.begin(), t.values.end());
  }
  return flat;
}

void unflatten(std::span<const double> flat,
               std::span<const TensorView> tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  if (n != flat.size()) throw ShapeError("flat parameter vector has wrong size");
  std::size_t off = 0;
  for (const auto& t : tensors) {
    std::copy_n(flat.begin() + static_cast<long>(off), t.values.size(),
                t.values.begin());
    off += t.values.size();
  }
}

namespace {
void fill_uniform(std::span<double> v, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& x : v) x = dist(rng);
}
}  // namespace

void init_uniform(LstmParams& params, std::mt19937_64& rng) {
  const double r =
      1.0 / std::sqrt(static_cast<double>(params.input_size + params.hidden_size));
  fill_uniform(params.w_input.data(), r, rng);
  fill_uniform(params.w_hidden.data(), r, rng);
  fill_uniform(params.bias, r, rng);
}

void init_uniform(FfnParams& params, std::mt19937_64& rng) {
  for (std::size_t l = 0; l < params.layers(); ++l) {
    const double r = 1.0 / std::sqrt(static_cast<double>(params.sizes[l]));
    fill_uniform(params.weights[l].data(), r, rng);
    fill_uniform(params.biases[l], r, rng);
  }
}

// ---------------------------------------------------------------------------
// Adam

AdamState make_adam(std::span<const ConstTensorView> params,
                    double learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  AdamState s;
  s.learning_rate = learning_rate;
  for (const auto& t : params) {
    s.first_moment.emplace_back(t.values.size(), 0.0);
    s.second_moment.emplace_back(t.values.size(), 0.0);
  }
  return s;
}

void adam_update(AdamState& state, std::span<const TensorView> params,
                 std::span<const ConstTensorView> grads) {
  if (params.size() != grads.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("optimizer: tensor count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::size_t n = params[k].values.size();
    if (grads[k].values.size() != n || state.first_moment[k].size() != n ||
        state.second_moment[k].size() != n) {
      throw ShapeError("optimizer: shape mismatch for " + params[k].name);
    }
    if (!all_finite(grads[k].values)) {
      throw NumericError("non-finite gradient in '" + grads[k].name + "'");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const auto g = grads[k].values;
    auto p = params[k].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Finite-difference check

GradcheckResult gradcheck(const LossFn& loss, std::span<const double> params,
                          std::span<const double> analytic, double epsilon,
                          std::size_t max_checked, std::uint64_t seed) {
  if (!(epsilon > 0.0) || epsilon > 1e-2) {
    throw ConfigError("gradcheck epsilon must lie in (0, 1e-2]");
  }
  if (analytic.size() != params.size()) {
    throw ShapeError("gradcheck: gradient and parameter sizes differ");
  }
  std::vector<std::size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (max_checked > 0 && indices.size() > max_checked) {
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(max_checked);
    std::sort(indices.begin(), indices.end());
  }

  std::vector<double> theta(params.begin(), params.end());
  if (!std::isfinite(loss(theta))) {
    throw NumericError("gradcheck: non-finite loss at the base point");
  }
  GradcheckResult result;
  for (std::size_t idx : indices) {
    const double saved = theta[idx];
    theta[idx] = saved + epsilon;
    const double up = loss(theta);
    theta[idx] = saved - epsilon;
    const double down = loss(theta);
    theta[idx] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("gradcheck: non-finite loss at parameter " +
                         std::to_string(idx));
    }
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (result.checked == 0 || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = idx;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace flowdisagg::nn
