// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdisagg/nn.hpp"
#include "flowdisagg/scaler.hpp"
#include "flowdisagg/windows.hpp"

namespace flowdisagg {

/// Architecture and loss settings stored with a model.
struct ModelConfig {
  std::vector<std::string> weather_names{"precipitation", "temperature"};
  std::size_t context_days = kDefaultContextDays;
  std::size_t hidden_size = 16;
  std::vector<std::size_t> ffn_hidden{32, 32};
  nn::Activation activation = nn::Activation::Tanh;
  double loss1_weight = 1.0;
  double loss2_weight = 1.0;
  /// Clamp corrected hourly flow at zero. Off by default: clamping breaks
  /// exact mean conservation.
  bool clamp_negative = false;

  std::size_t weather_count() const noexcept { return weather_names.size(); }
  std::vector<std::size_t> ffn_sizes() const;
};

struct TrainConfig {
  ModelConfig model;
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  /// Leading fraction of windows (chronological) used for training.
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  double std_floor = kDefaultStdFloor;
  /// Worker threads for the batch gradient; 0 uses the OpenMP default and 1
  /// runs the serial kernel. Results are identical either way.
  int threads = 0;
};

/// LSTM + FFN weights. Also used as the gradient container.
struct NetworkParams {
  nn::LstmParams lstm;
  nn::FfnParams ffn;

  static NetworkParams zeros(const ModelConfig& config);
  NetworkParams zeros_like() const;
  void set_zero();
  std::vector<nn::TensorView> tensors();
  std::vector<nn::ConstTensorView> tensors() const;
  std::vector<double> flat() const;
  void assign_flat(std::span<const double> flat);
  std::size_t size() const;
  /// this += other, tensor by tensor.
  void add(const NetworkParams& other);
  void scale(double factor);

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct DisaggModel {
  ModelConfig config;
  NetworkParams params;
  Scaler daily_weather_scaler;
  Scaler hourly_weather_scaler;
  Scaler flow_scaler;
  std::uint64_t seed = 0;

  /// Checks that the FFN input equals hidden + weather features and that the
  /// scalers match the configured variables.
  void validate() const;
};

/// Seeded uniform initialization; scalers are identity until fitted.
DisaggModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Scalers with mean 0 and std 1 for every feature.
void set_identity_scalers(DisaggModel& model);

struct LossBreakdown {
  double loss1 = 0.0;  // daily branch (already weighted)
  double loss2 = 0.0;  // mean-of-hourly branch (already weighted)
  double total = 0.0;  // loss1 + loss2
};

/// A window mapped into normalized space.
struct ScaledWindow {
  Matrix context;
  std::vector<double> daily_weather;
  Matrix hourly_weather;
  double target = 0.0;
};

ScaledWindow scale_window(const DisaggModel& model, const FeatureWindow& w);

/// Normalized daily flow prediction.
double daily_forward(const DisaggModel& model, const FeatureWindow& w);

/// 24 normalized hourly predictions sharing one LSTM summary.
std::vector<double> hourly_forward(const DisaggModel& model,
                                   const FeatureWindow& w);

LossBreakdown compute_losses(const DisaggModel& model, const FeatureWindow& w);

struct LossWeights {
  double daily = 1.0;
  double hourly = 1.0;
};

/// Reusable per-thread buffers for window_gradient.
struct WindowWorkspace {
  nn::LstmCache lstm;
  std::vector<nn::FfnCache> ffn;
  std::vector<double> input;
  std::vector<double> d_input;
  std::vector<double> d_hidden;
};

LossBreakdown window_loss(const NetworkParams& params, const ScaledWindow& w,
                          LossWeights weights);

/// Loss of one window and its gradient, accumulated into `grads`.
LossBreakdown window_gradient(const NetworkParams& params,
                              const ScaledWindow& w, LossWeights weights,
                              NetworkParams& grads, WindowWorkspace& ws);

struct ChronologicalSplit {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// First floor(n·fraction) windows train (at least one), the rest test.
ChronologicalSplit split_chronological(std::size_t n, double train_fraction);

struct TrainResult {
  DisaggModel model;
  /// Loss at the start of each epoch (before that epoch's update).
  std::vector<LossBreakdown> history;
  nn::AdamState optimizer;
};

/// Full-batch Adam on the mean total loss. Scalers are fitted on `windows`
/// only; pass the training split. Deterministic for a fixed config.seed.
TrainResult train(std::span<const FeatureWindow> windows,
                  const TrainConfig& config);

struct DisaggResult {
  UtcDay day;
  std::vector<double> hourly_flow_raw;
  std::vector<double> hourly_flow_corrected;
  double daily_avg_observed = 0.0;
  std::optional<std::vector<double>> truth;
};

/// Shifts every value by (daily_avg − mean(raw)) so the mean equals
/// daily_avg; differences between hours are untouched.
std::vector<double> mean_correct(std::span<const double> raw, double daily_avg);

DisaggResult disaggregate_day(const DisaggModel& model, const FeatureWindow& w);

}  // namespace flowdisagg
