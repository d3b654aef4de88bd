// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "flowdisagg/kernels.hpp"
#include "flowdisagg/synth.hpp"

using namespace flowdisagg;

namespace {

struct Fixture {
  std::vector<FeatureWindow> windows;
  DisaggModel model;
  std::vector<ScaledWindow> scaled;
};

Fixture make(std::size_t days) {
  SynthConfig sc;
  sc.n_days = days;
  const SynthData d = synth_generate(sc);
  Fixture f;
  f.windows = build_windows(d.daily_weather, d.daily_flow, d.hourly_weather,
                            &d.hourly_flow)
                  .windows;
  TrainConfig tc;
  tc.epochs = 0;
  f.model = train(f.windows, tc).model;
  for (const auto& w : f.windows) f.scaled.push_back(scale_window(f.model, w));
  return f;
}

}  // namespace

TEST(Kernels, BatchGradientSerialMatchesParallelBitForBit) {
  const Fixture f = make(80);
  BatchGradient bg(f.model.params, f.scaled.size());
  NetworkParams gs = f.model.params.zeros_like();
  const auto ls = bg.serial(f.model.params, f.scaled, {1.0, 1.0}, gs);
  for (int threads : {0, 1, 2, 3, 7}) {
    NetworkParams gp = f.model.params.zeros_like();
    const auto lp = bg.parallel(f.model.params, f.scaled, {1.0, 1.0}, gp, threads);
    EXPECT_EQ(ls.total, lp.total) << threads;
    EXPECT_EQ(ls.loss1, lp.loss1);
    EXPECT_EQ(gs, gp) << "threads " << threads;
  }
}

TEST(Kernels, BatchMeanOfWindowGradients) {
  const Fixture f = make(30);
  BatchGradient bg(f.model.params, f.scaled.size());
  NetworkParams g = f.model.params.zeros_like();
  const auto l = bg.serial(f.model.params, f.scaled, {1.0, 0.5}, g);

  NetworkParams sum = f.model.params.zeros_like();
  double total = 0.0;
  WindowWorkspace ws;
  for (const auto& sw : f.scaled) {
    total += window_gradient(f.model.params, sw, {1.0, 0.5}, sum, ws).total;
  }
  const double n = static_cast<double>(f.scaled.size());
  EXPECT_NEAR(l.total, total / n, 1e-14);
  EXPECT_NEAR(batch_loss(f.model.params, f.scaled, {1.0, 0.5}).total, l.total, 1e-14);
  const auto a = g.flat(), b = sum.flat();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i] / n, 1e-13);
}

TEST(Kernels, ReusedBuffersDoNotLeak) {
  const Fixture f = make(30);
  BatchGradient bg(f.model.params, f.scaled.size());
  NetworkParams g1 = f.model.params.zeros_like(), g2 = g1;
  bg.parallel(f.model.params, f.scaled, {1.0, 1.0}, g1);
  bg.parallel(f.model.params, f.scaled, {1.0, 1.0}, g2);
  EXPECT_EQ(g1, g2);
  // smaller batch on the same buffers
  NetworkParams g3 = g1.zeros_like(), g4 = g1.zeros_like();
  const std::span<const ScaledWindow> head(f.scaled.data(), 5);
  bg.parallel(f.model.params, head, {1.0, 1.0}, g3, 3);
  BatchGradient fresh(f.model.params, 5);
  fresh.serial(f.model.params, head, {1.0, 1.0}, g4);
  EXPECT_EQ(g3, g4);
}

TEST(Kernels, DisaggregateSerialMatchesParallel) {
  const Fixture f = make(60);
  const auto s = disaggregate_serial(f.model, f.windows);
  for (int threads : {0, 2, 5}) {
    const auto p = disaggregate_parallel(f.model, f.windows, threads);
    ASSERT_EQ(s.size(), p.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(s[i].day, p[i].day);
      EXPECT_EQ(s[i].hourly_flow_raw, p[i].hourly_flow_raw);
      EXPECT_EQ(s[i].hourly_flow_corrected, p[i].hourly_flow_corrected);
      EXPECT_EQ(s[i].truth, p[i].truth);
    }
  }
  EXPECT_GE(available_threads(), 1);
}

TEST(Kernels, TrainingThreadsIrrelevant) {
  const Fixture f = make(40);
  TrainConfig tc;
  tc.model.hidden_size = 4;
  tc.model.ffn_hidden = {8};
  tc.epochs = 5;
  tc.threads = 1;
  const auto a = train(f.windows, tc);
  tc.threads = 4;
  const auto b = train(f.windows, tc);
  EXPECT_EQ(a.model.params, b.model.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].total, b.history[e].total);
  }
}
