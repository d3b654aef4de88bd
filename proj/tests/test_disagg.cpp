// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "flowdisagg/disagg.hpp"
#include "flowdisagg/errors.hpp"
#include "flowdisagg/kernels.hpp"
#include "flowdisagg/synth.hpp"
#include "support.hpp"

using namespace flowdisagg;

namespace {

std::vector<FeatureWindow> synth_windows(std::size_t days, std::uint64_t seed = 42) {
  SynthConfig sc;
  sc.n_days = days;
  sc.seed = seed;
  const SynthData d = synth_generate(sc);
  return build_windows(d.daily_weather, d.daily_flow, d.hourly_weather,
                       &d.hourly_flow)
      .windows;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.hidden_size = 4;
  c.ffn_hidden = {8, 8};
  return c;
}

// Model at seeded init with scalers fitted on `windows`.
DisaggModel fitted_init(const std::vector<FeatureWindow>& windows,
                        const ModelConfig& mc, std::uint64_t seed = 3) {
  TrainConfig tc;
  tc.model = mc;
  tc.epochs = 0;
  tc.seed = seed;
  return train(windows, tc).model;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(Disagg, ZeroModelOutputsBias) {
  const auto windows = synth_windows(20);
  DisaggModel m = fitted_init(windows, tiny_config());
  m.params.set_zero();
  m.params.ffn.biases.back()[0] = 0.37;
  for (const auto& w : windows) {
    EXPECT_EQ(daily_forward(m, w), 0.37);
    EXPECT_EQ(hourly_forward(m, w), std::vector<double>(24, 0.37));
  }
}

TEST(Disagg, ZeroModelLosses) {
  const auto windows = synth_windows(20);
  DisaggModel m = fitted_init(windows, tiny_config());
  m.params.set_zero();
  const double b = -0.2;
  m.params.ffn.biases.back()[0] = b;
  const auto& w = windows[3];
  const double t = m.flow_scaler.apply(0, w.daily_flow);
  const auto l = compute_losses(m, w);
  EXPECT_EQ(l.loss1, (b - t) * (b - t));
  EXPECT_NEAR(l.loss2, (b - t) * (b - t), 1e-15);  // mean of 24 copies of b
  EXPECT_EQ(l.total, l.loss1 + l.loss2);

  m.params.ffn.biases.back()[0] = t;  // exact predictor in both branches
  const auto z = compute_losses(m, w);
  EXPECT_EQ(z.loss1, 0.0);
  EXPECT_LT(z.loss2, 1e-30);
  EXPECT_EQ(z.total, z.loss1 + z.loss2);
}

TEST(Disagg, PureAndHiddenStateReuse) {
  const auto windows = synth_windows(20);
  const DisaggModel m = fitted_init(windows, tiny_config());
  FeatureWindow w = windows[5];
  const FeatureWindow copy = w;
  EXPECT_EQ(daily_forward(m, w), daily_forward(m, copy));
  for (std::size_t h = 0; h < 24; ++h) {
    for (std::size_t c = 0; c < w.hourly_weather.cols(); ++c) {
      w.hourly_weather(h, c) = w.hourly_weather(0, c);
    }
  }
  const auto out = hourly_forward(m, w);
  for (double v : out) EXPECT_EQ(v, out[0]);

  const DisaggResult r = disaggregate_day(m, w);
  for (double v : r.hourly_flow_corrected) {
    EXPECT_NEAR(v, w.daily_flow, 1e-12 * std::max(1.0, w.daily_flow));
  }
}

TEST(Disagg, SchemaMismatch) {
  const auto windows = synth_windows(20);
  const DisaggModel m = fitted_init(windows, tiny_config());
  FeatureWindow w = windows[0];
  w.hourly_weather = Matrix(23, 2, 0.0);
  EXPECT_THROW(hourly_forward(m, w), ShapeError);
  FeatureWindow v = windows[0];
  v.daily_weather.push_back(1.0);
  EXPECT_THROW(daily_forward(m, v), ShapeError);
}

TEST(Disagg, ModelGradcheck) {
  const auto windows = synth_windows(16);
  const DisaggModel m = fitted_init(windows, tiny_config());
  const LossWeights lw{1.0, 1.0};
  for (std::size_t i : {0u, 4u, 9u}) {
    const ScaledWindow sw = scale_window(m, windows[i]);
    NetworkParams g = m.params.zeros_like();
    WindowWorkspace ws;
    const auto l = window_gradient(m.params, sw, lw, g, ws);
    EXPECT_EQ(l.total, window_loss(m.params, sw, lw).total);
    const auto r = nn::gradcheck(
        [&](std::span<const double> theta) {
          NetworkParams q = m.params;
          q.assign_flat(theta);
          return window_loss(q, sw, lw).total;
        },
        m.params.flat(), g.flat());
    EXPECT_EQ(r.checked, m.params.size());
    EXPECT_LT(r.max_relative_error, 1e-4) << "window " << i << " worst "
                                          << r.worst_index;
  }
}

TEST(Disagg, DeadPathsHaveExactlyZeroGradient) {
  // One context day: h0 = c0 = 0, so the recurrent weights and the forget
  // gate never influence the loss.
  auto mc = tiny_config();
  mc.context_days = 1;
  SynthConfig sc;
  sc.n_days = 12;
  const SynthData d = synth_generate(sc);
  const auto windows = build_windows(d.daily_weather, d.daily_flow,
                                     d.hourly_weather, nullptr, 1)
                           .windows;
  const DisaggModel m = fitted_init(windows, mc);
  const ScaledWindow sw = scale_window(m, windows[2]);
  NetworkParams g = m.params.zeros_like();
  WindowWorkspace ws;
  window_gradient(m.params, sw, {1.0, 1.0}, g, ws);
  const std::size_t H = mc.hidden_size;
  for (double v : g.lstm.w_hidden.data()) EXPECT_EQ(v, 0.0);
  for (std::size_t r = H; r < 2 * H; ++r) {
    EXPECT_EQ(g.lstm.bias[r], 0.0);
    for (std::size_t c = 0; c < g.lstm.input_size; ++c) {
      EXPECT_EQ(g.lstm.w_input(r, c), 0.0);
    }
  }
}

TEST(Disagg, LossWeightZeroDropsBranch) {
  const auto windows = synth_windows(16);
  const DisaggModel m = fitted_init(windows, tiny_config());
  const ScaledWindow sw = scale_window(m, windows[2]);
  NetworkParams both = m.params.zeros_like(), daily = both, hourly = both;
  WindowWorkspace ws;
  const auto lb = window_gradient(m.params, sw, {1.0, 1.0}, both, ws);
  const auto ld = window_gradient(m.params, sw, {1.0, 0.0}, daily, ws);
  const auto lh = window_gradient(m.params, sw, {0.0, 1.0}, hourly, ws);
  EXPECT_EQ(ld.loss2, 0.0);
  EXPECT_EQ(lh.loss1, 0.0);
  EXPECT_EQ(ld.loss1, lb.loss1);
  EXPECT_EQ(lh.loss2, lb.loss2);
  const auto fb = both.flat(), fd = daily.flat(), fh = hourly.flat();
  for (std::size_t i = 0; i < fb.size(); ++i) {
    EXPECT_NEAR(fb[i], fd[i] + fh[i], 1e-14);
  }
}

TEST(Disagg, MeanCorrect) {
  const std::vector<double> raw{1.0, 2.0, 3.0};  // mean 2
  EXPECT_EQ(mean_correct(raw, 2.5), (std::vector<double>{1.5, 2.5, 3.5}));
  EXPECT_EQ(mean_correct(raw, 2.0), raw);
  EXPECT_THROW(mean_correct(std::vector<double>{1.0, std::nan("")}, 1.0), Error);

  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(5.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> r(24);
    for (double& x : r) x = g(rng);
    const double avg = std::abs(g(rng));
    const auto c = mean_correct(r, avg);
    const double shift = avg - mean_of(r);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < 24; ++i) {
      lo = std::min(lo, c[i] - r[i]);
      hi = std::max(hi, c[i] - r[i]);
    }
    EXPECT_LT(hi - lo, 1e-12);
    EXPECT_NEAR(lo, shift, 1e-12);
    EXPECT_LE(std::abs(mean_of(c) - avg), 1e-9 * std::max(1.0, avg));
  }
}

TEST(Disagg, DisaggregateDayConserves) {
  const auto windows = synth_windows(30);
  const DisaggModel m = fitted_init(windows, tiny_config());
  for (const auto& w : windows) {
    const auto r = disaggregate_day(m, w);
    EXPECT_EQ(r.day, w.day);
    EXPECT_EQ(r.daily_avg_observed, w.daily_flow);
    ASSERT_EQ(r.hourly_flow_raw.size(), 24u);
    EXPECT_LE(std::abs(mean_of(r.hourly_flow_corrected) - w.daily_flow),
              1e-9 * std::max(1.0, w.daily_flow));
    ASSERT_TRUE(r.truth);
  }
}

TEST(Disagg, ClampNegativeOption) {
  const auto windows = synth_windows(20);
  DisaggModel m = fitted_init(windows, tiny_config());
  m.params.set_zero();
  // wild hourly swings driven by temperature
  m.params.ffn.weights[0](0, m.config.hidden_size + 1) = 3.0;
  m.params.ffn.weights[1](0, 0) = 3.0;
  m.params.ffn.weights[2](0, 0) = 50.0;
  const auto raw = disaggregate_day(m, windows[4]);
  m.config.clamp_negative = true;
  const auto clamped = disaggregate_day(m, windows[4]);
  for (double v : clamped.hourly_flow_corrected) EXPECT_GE(v, 0.0);
  bool had_negative = false;
  for (double v : raw.hourly_flow_corrected) had_negative = had_negative || v < 0.0;
  EXPECT_TRUE(had_negative);
}

TEST(Disagg, SplitChronological) {
  EXPECT_EQ(split_chronological(394, 0.8).train_count, 315u);
  EXPECT_EQ(split_chronological(394, 0.8).test_count, 79u);
  EXPECT_EQ(split_chronological(1, 0.8).train_count, 1u);
  EXPECT_EQ(split_chronological(10, 1.0).test_count, 0u);
  EXPECT_THROW(split_chronological(10, 0.0), ConfigError);
  EXPECT_THROW(split_chronological(10, 1.5), ConfigError);
}

TEST(Train, ZeroEpochsKeepsInit) {
  const auto windows = synth_windows(20);
  TrainConfig tc;
  tc.model = tiny_config();
  tc.epochs = 0;
  tc.seed = 99;
  const auto r = train(windows, tc);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.model.params, init_model(tc.model, 99).params);
  EXPECT_THROW(train({}, tc), ConfigError);
}

TEST(Train, DeterministicAndDecreasing) {
  const auto windows = synth_windows(40);
  TrainConfig tc;
  tc.model = tiny_config();
  tc.epochs = 40;
  tc.learning_rate = 1e-2;
  const auto a = train(windows, tc);
  const auto b = train(windows, tc);
  ASSERT_EQ(a.history.size(), 40u);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].total, b.history[e].total);
    EXPECT_EQ(a.history[e].total, a.history[e].loss1 + a.history[e].loss2);
  }
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_LT(a.history.back().total, a.history.front().total);
  EXPECT_EQ(a.optimizer.step, 40u);
}

TEST(Train, ScalersSeeTrainingWindowsOnly) {
  const auto windows = synth_windows(60);
  TrainConfig tc;
  tc.model = tiny_config();
  tc.epochs = 0;
  const std::span<const FeatureWindow> first(windows.data(), 10);
  const auto r = train(first, tc);
  // 10 windows cover days 0..15 of the series, each counted once.
  std::vector<double> flows;
  for (std::size_t i = 0; i < 6; ++i) flows.push_back(first[0].context(i, 2));
  for (const auto& w : first) flows.push_back(w.daily_flow);
  EXPECT_NEAR(r.model.flow_scaler.mean()[0], mean_of(flows), 1e-12);
}

TEST(Train, DiagnosesNonFiniteLoss) {
  const auto windows = synth_windows(20);
  TrainConfig tc;
  tc.model = tiny_config();
  tc.model.activation = nn::Activation::Identity;
  tc.epochs = 5;
  tc.learning_rate = 1e120;  // first step overflows the forward pass
  try {
    train(windows, tc);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}
