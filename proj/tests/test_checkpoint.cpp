// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "flowdisagg/checkpoint.hpp"
#include "flowdisagg/errors.hpp"
#include "flowdisagg/kernels.hpp"
#include "flowdisagg/synth.hpp"
#include "support.hpp"

using namespace flowdisagg;

namespace {

std::vector<FeatureWindow> windows_of(std::size_t days) {
  SynthConfig sc;
  sc.n_days = days;
  const SynthData d = synth_generate(sc);
  return build_windows(d.daily_weather, d.daily_flow, d.hourly_weather,
                       &d.hourly_flow)
      .windows;
}

Checkpoint trained(const std::vector<FeatureWindow>& w) {
  TrainConfig tc;
  tc.model.hidden_size = 5;
  tc.model.ffn_hidden = {7, 3};
  tc.model.activation = nn::Activation::Relu;
  tc.model.loss2_weight = 0.25;
  tc.epochs = 10;
  tc.seed = 17;
  auto r = train(w, tc);
  return Checkpoint{r.model, r.optimizer, 0.7};
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const auto w = windows_of(40);
  const Checkpoint c = trained(w);
  fdtest::TempDir dir;
  const auto path = dir.path() / "ckpt.json";
  save_checkpoint(c, path);
  const Checkpoint back = load_checkpoint(path);

  EXPECT_EQ(back.model.params, c.model.params);
  EXPECT_EQ(back.model.daily_weather_scaler, c.model.daily_weather_scaler);
  EXPECT_EQ(back.model.hourly_weather_scaler, c.model.hourly_weather_scaler);
  EXPECT_EQ(back.model.flow_scaler, c.model.flow_scaler);
  EXPECT_EQ(back.model.seed, 17u);
  EXPECT_EQ(back.model.config.hidden_size, 5u);
  EXPECT_EQ(back.model.config.ffn_hidden, (std::vector<std::size_t>{7, 3}));
  EXPECT_EQ(back.model.config.activation, nn::Activation::Relu);
  EXPECT_EQ(back.model.config.loss2_weight, 0.25);
  EXPECT_EQ(back.model.config.weather_names, c.model.config.weather_names);
  EXPECT_EQ(back.train_fraction, 0.7);
  ASSERT_TRUE(back.optimizer);
  EXPECT_EQ(back.optimizer->step, c.optimizer->step);

  const auto a = disaggregate_serial(c.model, w);
  const auto b = disaggregate_serial(back.model, w);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hourly_flow_raw, b[i].hourly_flow_raw);
    EXPECT_EQ(a[i].hourly_flow_corrected, b[i].hourly_flow_corrected);
  }
  EXPECT_EQ(checkpoint_to_json(back), checkpoint_to_json(c));
}

TEST(Checkpoint, Rejects) {
  fdtest::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir.path() / "absent.json"), IoError);
  EXPECT_THROW(checkpoint_from_json("{not json"), ParseError);
  EXPECT_THROW(checkpoint_from_json("{}"), Error);

  const auto w = windows_of(20);
  std::string text = checkpoint_to_json(trained(w));
  const auto pos = text.find("\"hidden_size\"");
  ASSERT_NE(pos, std::string::npos);
  const auto colon = text.find(':', pos);
  const auto end = text.find_first_of(",}", colon);
  text.replace(colon + 1, end - colon - 1, "6");
  EXPECT_THROW(checkpoint_from_json(text), Error);
}
