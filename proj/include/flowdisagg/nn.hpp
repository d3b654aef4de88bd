// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowdisagg/matrix.hpp"

namespace flowdisagg::nn {

/// Named mutable window onto one parameter (or gradient) tensor.
struct TensorView {
  std::string name;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  std::span<const double> values;
};

// ---------------------------------------------------------------------------
// LSTM

/// Single-layer LSTM. Gate rows are stacked in blocks of `hidden_size` in the
/// order input, forget, cell candidate, output:
///   i = σ(Wi x + Ui h + bi)   f = σ(Wf x + Uf h + bf)
///   g = tanh(Wg x + Ug h + bg) o = σ(Wo x + Uo h + bo)
///   c' = f ⊙ c + i ⊙ g        h' = o ⊙ tanh(c')
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix w_input;             // 4H × I
  Matrix w_hidden;            // 4H × H
  std::vector<double> bias;   // 4H

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);
  void validate() const;
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct LstmState {
  std::vector<double> hidden;
  std::vector<double> cell;
};

/// Everything backward needs from a forward pass.
struct LstmCache {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix inputs;   // T × I
  Matrix gates;    // T × 4H, post-activation (i, f, g, o)
  Matrix cells;    // T × H
  Matrix hiddens;  // T × H
  std::size_t steps() const noexcept { return inputs.rows(); }
};

/// One recurrence step from `state`.
LstmState lstm_step(const LstmParams& params, std::span<const double> input,
                    const LstmState& state);

/// Runs the sequence (one row per step) from zero hidden and cell state and
/// returns the final hidden state. Throws ShapeError naming the step on a
/// width mismatch.
std::vector<double> lstm_forward(const LstmParams& params,
                                 const Matrix& sequence,
                                 LstmCache* cache = nullptr);

/// Backpropagation through time for a loss that depends on the final hidden
/// state only. Accumulates into `grads` (same shapes as params).
void lstm_backward(const LstmParams& params, const LstmCache& cache,
                   std::span<const double> d_final_hidden, LstmParams& grads);

// ---------------------------------------------------------------------------
// Feedforward

enum class Activation { Tanh, Relu, Identity };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& name);

/// Fully connected net: sizes = {input, hidden..., 1}. Hidden layers use
/// `activation`, the output unit is linear.
struct FfnParams {
  std::vector<std::size_t> sizes;
  Activation activation = Activation::Tanh;
  std::vector<Matrix> weights;              // layer l: sizes[l+1] × sizes[l]
  std::vector<std::vector<double>> biases;  // layer l: sizes[l+1]

  static FfnParams zeros(std::vector<std::size_t> sizes,
                         Activation activation = Activation::Tanh);
  void validate() const;
  std::size_t input_size() const noexcept { return sizes.front(); }
  std::size_t layers() const noexcept { return weights.size(); }
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;

  friend bool operator==(const FfnParams&, const FfnParams&) = default;
};

struct FfnCache {
  std::size_t input_size = 0;
  /// activations[0] is the input, activations[l] the output of layer l.
  std::vector<std::vector<double>> activations;
};

double ffn_forward(const FfnParams& params, std::span<const double> input,
                   FfnCache* cache = nullptr);

/// Accumulates dL/dθ into `grads` given dL/dy, and writes dL/dinput into
/// `d_input` when it is non-empty.
void ffn_backward(const FfnParams& params, const FfnCache& cache,
                  double d_output, FfnParams& grads,
                  std::span<double> d_input = {});

// ---------------------------------------------------------------------------
// Loss

/// Mean of squared differences. Throws on empty or unequal inputs.
double mse_loss(std::span<const double> predictions,
                std::span<const double> targets);

// ---------------------------------------------------------------------------
// Parameter utilities

std::size_t parameter_count(std::span<const ConstTensorView> tensors);
std::vector<double> flatten(std::span<const ConstTensorView> tensors);
void unflatten(std::span<const double> flat, std::span<const TensorView> tensors);

/// Uniform in [-r, r], r = 1/sqrt(fan_in). LSTM fan-in is input + hidden.
void init_uniform(LstmParams& params, std::mt19937_64& rng);
void init_uniform(FfnParams& params, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Zeroed moments shaped like `params`.
AdamState make_adam(std::span<const ConstTensorView> params,
                    double learning_rate = 1e-3);

/// One bias-corrected Adam update, in place. Throws NumericError naming the
/// tensor when a gradient is non-finite (nothing is modified in that case).
void adam_update(AdamState& state, std::span<const TensorView> params,
                 std::span<const ConstTensorView> grads);

// ---------------------------------------------------------------------------
// Finite-difference check

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossFn = std::function<double(std::span<const double>)>;

/// Central differences (f(θ+ε) − f(θ−ε)) / 2ε against `analytic`. Checks every
/// coordinate, or a seeded random subset of `max_checked` coordinates when
/// there are more. Relative error is |a − n| / max(|a|, |n|, 1e-8).
GradcheckResult gradcheck(const LossFn& loss, std::span<const double> params,
                          std::span<const double> analytic,
                          double epsilon = 1e-5,
                          std::size_t max_checked = 10000,
                          std::uint64_t seed = 0);

}  // namespace flowdisagg::nn
