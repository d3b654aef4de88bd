// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/disagg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "flowdisagg/errors.hpp"
#include "flowdisagg/kernels.hpp"

namespace flowdisagg {

std::vector<std::size_t> ModelConfig::ffn_sizes() const {
  std::vector<std::size_t> sizes{hidden_size + weather_count()};
  sizes.insert(sizes.end(), ffn_hidden.begin(), ffn_hidden.end());
  sizes.push_back(1);
  return sizes;
}

// ---------------------------------------------------------------------------
// NetworkParams

NetworkParams NetworkParams::zeros(const ModelConfig& config) {
  if (config.weather_names.empty()) {
    throw ConfigError("model needs at least one weather variable");
  }
  NetworkParams p;
  p.lstm = nn::LstmParams::zeros(config.weather_count() + 1, config.hidden_size);
  p.ffn = nn::FfnParams::zeros(config.ffn_sizes(), config.activation);
  return p;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams p;
  p.lstm = nn::LstmParams::zeros(lstm.input_size, lstm.hidden_size);
  p.ffn = nn::FfnParams::zeros(ffn.sizes, ffn.activation);
  return p;
}

void NetworkParams::set_zero() {
  for (auto& t : tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
}

std::vector<nn::TensorView> NetworkParams::tensors() {
  auto out = lstm.tensors();
  auto f = ffn.tensors();
  out.insert(out.end(), f.begin(), f.end());
  return out;
}

std::vector<nn::ConstTensorView> NetworkParams::tensors() const {
  auto out = lstm.tensors();
  auto f = ffn.tensors();
  out.insert(out.end(), f.begin(), f.end());
  return out;
}

std::vector<double> NetworkParams::flat() const {
  return nn::flatten(tensors());
}

void NetworkParams::assign_flat(std::span<const double> flat) {
  nn::unflatten(flat, tensors());
}

std::size_t NetworkParams::size() const {
  return nn::parameter_count(tensors());
}

void NetworkParams::add(const NetworkParams& other) {
  auto dst = tensors();
  const auto src = other.tensors();
  if (dst.size() != src.size()) throw ShapeError("parameter sets differ");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k].values.size() != src[k].values.size()) {
      throw ShapeError("parameter tensor " + dst[k].name + " differs in size");
    }
    for (std::size_t i = 0; i < dst[k].values.size(); ++i) {
      dst[k].values[i] += src[k].values[i];
    }
  }
}

void NetworkParams::scale(double factor) {
  for (auto& t : tensors()) {
    for (double& v : t.values) v *= factor;
  }
}

// ---------------------------------------------------------------------------
// Model

void DisaggModel::validate() const {
  params.lstm.validate();
  params.ffn.validate();
  const std::size_t nw = config.weather_count();
  if (params.lstm.input_size != nw + 1) {
    throw ShapeError("LSTM input must be weather features + flow");
  }
  if (params.lstm.hidden_size != config.hidden_size) {
    throw ShapeError("LSTM hidden size differs from config");
  }
  if (params.ffn.input_size() != config.hidden_size + nw) {
    throw ShapeError("FFN input must equal hidden size + weather features");
  }
  daily_weather_scaler.check_order(config.weather_names);
  hourly_weather_scaler.check_order(config.weather_names);
  flow_scaler.check_order({"flow"});
}

void set_identity_scalers(DisaggModel& model) {
  const auto& names = model.config.weather_names;
  model.daily_weather_scaler =
      Scaler(names, std::vector<double>(names.size(), 0.0),
             std::vector<double>(names.size(), 1.0));
  model.hourly_weather_scaler = model.daily_weather_scaler;
  model.flow_scaler = Scaler({"flow"}, {0.0}, {1.0});
}

DisaggModel init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.context_days == 0) throw ConfigError("context_days must be > 0");
  DisaggModel m;
  m.config = config;
  m.seed = seed;
  m.params = NetworkParams::zeros(config);
  std::mt19937_64 rng(seed);
  nn::init_uniform(m.params.lstm, rng);
  nn::init_uniform(m.params.ffn, rng);
  set_identity_scalers(m);
  return m;
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

void check_schema(const DisaggModel& model, const FeatureWindow& w) {
  const std::size_t nw = model.config.weather_count();
  if (w.daily_weather.size() != nw || w.context.cols() != nw + 1 ||
      w.hourly_weather.cols() != nw) {
    throw ShapeError("feature-schema mismatch: model expects " +
                     std::to_string(nw) + " weather features");
  }
  if (w.context.rows() != model.config.context_days) {
    throw ShapeError("window has " + std::to_string(w.context.rows()) +
                     " context days, model expects " +
                     std::to_string(model.config.context_days));
  }
  if (w.hourly_weather.rows() != kHoursPerDay) {
    throw ShapeError("window for " + format_day(w.day) + " has " +
                     std::to_string(w.hourly_weather.rows()) +
                     " hourly rows, expected 24");
  }
}

// FFN input = LSTM summary ++ weather row.
void concat(std::vector<double>& out, std::span<const double> hidden,
            std::span<const double> weather) {
  out.resize(hidden.size() + weather.size());
  std::copy(hidden.begin(), hidden.end(), out.begin());
  std::copy(weather.begin(), weather.end(),
            out.begin() + static_cast<long>(hidden.size()));
}

}  // namespace

ScaledWindow scale_window(const DisaggModel& model, const FeatureWindow& w) {
  check_schema(model, w);
  const std::size_t nw = model.config.weather_count();
  ScaledWindow s;
  s.context = w.context;
  for (std::size_t r = 0; r < s.context.rows(); ++r) {
    auto row = s.context.row(r);
    for (std::size_t c = 0; c < nw; ++c) {
      row[c] = model.daily_weather_scaler.apply(c, row[c]);
    }
    row[nw] = model.flow_scaler.apply(0, row[nw]);
  }
  s.daily_weather = w.daily_weather;
  model.daily_weather_scaler.apply_row(s.daily_weather);
  s.hourly_weather = w.hourly_weather;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    model.hourly_weather_scaler.apply_row(s.hourly_weather.row(h));
  }
  s.target = model.flow_scaler.apply(0, w.daily_flow);
  return s;
}

double daily_forward(const DisaggModel& model, const FeatureWindow& w) {
  const ScaledWindow s = scale_window(model, w);
  const auto h = nn::lstm_forward(model.params.lstm, s.context);
  std::vector<double> input;
  concat(input, h, s.daily_weather);
  return nn::ffn_forward(model.params.ffn, input);
}

std::vector<double> hourly_forward(const DisaggModel& model,
                                   const FeatureWindow& w) {
  const ScaledWindow s = scale_window(model, w);
  const auto h = nn::lstm_forward(model.params.lstm, s.context);
  std::vector<double> out(kHoursPerDay);
  std::vector<double> input;
  for (std::size_t k = 0; k < kHoursPerDay; ++k) {
    concat(input, h, s.hourly_weather.row(k));
    out[k] = nn::ffn_forward(model.params.ffn, input);
  }
  return out;
}

LossBreakdown compute_losses(const DisaggModel& model, const FeatureWindow& w) {
  return window_loss(model.params, scale_window(model, w),
                     {model.config.loss1_weight, model.config.loss2_weight});
}

LossBreakdown window_loss(const NetworkParams& params, const ScaledWindow& w,
                          LossWeights weights) {
  const auto h = nn::lstm_forward(params.lstm, w.context);
  std::vector<double> input;
  concat(input, h, w.daily_weather);
  const double daily = nn::ffn_forward(params.ffn, input);
  double sum = 0.0;
  for (std::size_t k = 0; k < kHoursPerDay; ++k) {
    concat(input, h, w.hourly_weather.row(k));
    sum += nn::ffn_forward(params.ffn, input);
  }
  const double mean = sum / static_cast<double>(kHoursPerDay);
  LossBreakdown out;
  out.loss1 = weights.daily * nn::mse_loss({&daily, 1}, {&w.target, 1});
  out.loss2 = weights.hourly * nn::mse_loss({&mean, 1}, {&w.target, 1});
  out.total = out.loss1 + out.loss2;
  return out;
}

LossBreakdown window_gradient(const NetworkParams& params,
                              const ScaledWindow& w, LossWeights weights,
                              NetworkParams& grads, WindowWorkspace& ws) {
  const std::size_t H = params.lstm.hidden_size;
  ws.ffn.resize(kHoursPerDay + 1);

  const auto h = nn::lstm_forward(params.lstm, w.context, &ws.lstm);
  concat(ws.input, h, w.daily_weather);
  const double daily = nn::ffn_forward(params.ffn, ws.input, &ws.ffn[0]);
  double sum = 0.0;
  for (std::size_t k = 0; k < kHoursPerDay; ++k) {
    concat(ws.input, h, w.hourly_weather.row(k));
    sum += nn::ffn_forward(params.ffn, ws.input, &ws.ffn[k + 1]);
  }
  const double mean = sum / static_cast<double>(kHoursPerDay);

  const double r1 = daily - w.target;
  const double r2 = mean - w.target;
  LossBreakdown out;
  out.loss1 = weights.daily * r1 * r1;
  out.loss2 = weights.hourly * r2 * r2;
  out.total = out.loss1 + out.loss2;

  ws.d_hidden.assign(H, 0.0);
  ws.d_input.resize(params.ffn.input_size());
  const double d_daily = 2.0 * weights.daily * r1;
  nn::ffn_backward(params.ffn, ws.ffn[0], d_daily, grads.ffn, ws.d_input);
  for (std::size_t j = 0; j < H; ++j) ws.d_hidden[j] += ws.d_input[j];

  const double d_hour =
      2.0 * weights.hourly * r2 / static_cast<double>(kHoursPerDay);
  for (std::size_t k = 0; k < kHoursPerDay; ++k) {
    nn::ffn_backward(params.ffn, ws.ffn[k + 1], d_hour, grads.ffn, ws.d_input);
    for (std::size_t j = 0; j < H; ++j) ws.d_hidden[j] += ws.d_input[j];
  }
  nn::lstm_backward(params.lstm, ws.lstm, ws.d_hidden, grads.lstm);
  return out;
}

// ---------------------------------------------------------------------------
// Training

ChronologicalSplit split_chronological(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }
  ChronologicalSplit s;
  if (n == 0) return s;
  s.train_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(n) *
                                             train_fraction)));
  s.train_count = std::min(s.train_count, n);
  s.test_count = n - s.train_count;
  return s;
}

namespace {

// Scalers see each training day once: context days and target days are
// collected by date, hourly rows from the target days.
void fit_scalers(DisaggModel& model, std::span<const FeatureWindow> windows,
                 double floor) {
  const std::size_t nw = model.config.weather_count();
  std::set<UtcDay> seen;
  std::vector<double> daily_rows;
  std::vector<double> flows;
  std::vector<double> hourly_rows;
  auto add_day = [&](UtcDay day, std::span<const double> weather, double flow) {
    if (!seen.insert(day).second) return;
    daily_rows.insert(daily_rows.end(), weather.begin(), weather.end());
    flows.push_back(flow);
  };
  for (const auto& w : windows) {
    const auto ctx = w.context.rows();
    for (std::size_t i = 0; i < ctx; ++i) {
      const auto day = w.day - std::chrono::days{static_cast<long>(ctx - i)};
      add_day(day, w.context.row(i).first(nw), w.context(i, nw));
    }
    add_day(w.day, w.daily_weather, w.daily_flow);
    hourly_rows.insert(hourly_rows.end(), w.hourly_weather.data().begin(),
                       w.hourly_weather.data().end());
  }
  const std::size_t n_hourly = hourly_rows.size() / nw;
  const auto& names = model.config.weather_names;
  const std::size_t n_daily = daily_rows.size() / nw;
  const std::size_t n_flow = flows.size();
  model.daily_weather_scaler =
      Scaler::fit(names, Matrix(n_daily, nw, std::move(daily_rows)), floor);
  model.hourly_weather_scaler =
      Scaler::fit(names, Matrix(n_hourly, nw, std::move(hourly_rows)), floor);
  model.flow_scaler =
      Scaler::fit({"flow"}, Matrix(n_flow, 1, std::move(flows)), floor);
}

}  // namespace

TrainResult train(std::span<const FeatureWindow> windows,
                  const TrainConfig& config) {
  if (windows.empty()) throw ConfigError("train: no training windows");
  TrainResult result;
  result.model = init_model(config.model, config.seed);
  DisaggModel& model = result.model;
  for (const auto& w : windows) {
    check_window(w);
    check_schema(model, w);
  }
  fit_scalers(model, windows, config.std_floor);

  std::vector<ScaledWindow> scaled;
  scaled.reserve(windows.size());
  for (const auto& w : windows) scaled.push_back(scale_window(model, w));

  result.optimizer = nn::make_adam(
      std::as_const(model.params).tensors(), config.learning_rate);
  const LossWeights weights{config.model.loss1_weight,
                            config.model.loss2_weight};
  BatchGradient kernel(model.params, scaled.size());
  NetworkParams grads = model.params.zeros_like();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const LossBreakdown loss =
        config.threads == 1
            ? kernel.serial(model.params, scaled, weights, grads)
            : kernel.parallel(model.params, scaled, weights, grads,
                              config.threads);
    if (!std::isfinite(loss.total)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(loss);
    try {
      nn::adam_update(result.optimizer, model.params.tensors(),
                      std::as_const(grads).tensors());
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at epoch " +
                         std::to_string(epoch));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prediction and post-processing

std::vector<double> mean_correct(std::span<const double> raw,
                                 double daily_avg) {
  if (raw.empty()) throw ShapeError("mean_correct of empty input");
  if (!std::isfinite(daily_avg)) {
    throw DataError("mean_correct: non-finite daily average");
  }
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw DataError("mean_correct: non-finite input");
    sum += v;
  }
  const double shift = daily_avg - sum / static_cast<double>(raw.size());
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v += shift;
  return out;
}

DisaggResult disaggregate_day(const DisaggModel& model,
                              const FeatureWindow& w) {
  const auto normalized = hourly_forward(model, w);
  DisaggResult r;
  r.day = w.day;
  r.daily_avg_observed = w.daily_flow;
  r.hourly_flow_raw.resize(normalized.size());
  for (std::size_t k = 0; k < normalized.size(); ++k) {
    r.hourly_flow_raw[k] = model.flow_scaler.invert(0, normalized[k]);
  }
  r.hourly_flow_corrected = mean_correct(r.hourly_flow_raw, w.daily_flow);
  if (model.config.clamp_negative) {
    for (double& v : r.hourly_flow_corrected) v = std::max(v, 0.0);
  }
  r.truth = w.hourly_flow;
  return r;
}

}  // namespace flowdisagg
