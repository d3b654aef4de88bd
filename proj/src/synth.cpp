// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw ConfigError("invalid synthetic config: " + what);
  };
  if (n_days < 8) fail("n_days must be >= 8");
  if (!(reservoir_k > 0.0 && reservoir_k < 1.0)) fail("k must lie in (0, 1)");
  if (!(event_probability >= 0.0 && event_probability <= 1.0)) {
    fail("event probability must lie in [0, 1]");
  }
  if (!(mean_intensity > 0.0)) fail("mean intensity must be positive");
  if (!(temp_amplitude >= 0.0)) fail("temperature amplitude must be >= 0");
  if (!(temp_noise_sd >= 0.0)) fail("temperature noise sd must be >= 0");
  if (!(temp_noise_corr >= 0.0 && temp_noise_corr < 1.0)) {
    fail("temperature noise correlation must lie in [0, 1)");
  }
  if (!(melt_coefficient >= 0.0)) fail("melt coefficient must be >= 0");
  if (!(initial_storage >= 0.0)) fail("initial storage must be >= 0");
  if (!(catchment_area_km2 > 0.0)) fail("catchment area must be positive");
  if (!std::isfinite(temp_mean) || !std::isfinite(peak_hour)) {
    fail("temperature parameters must be finite");
  }
}

double mm_per_hour_to_m3s(double mm_per_hour, double area_km2) noexcept {
  // 1 mm over 1 km² = 1000 m³, spread over 3600 s.
  return mm_per_hour * area_km2 * 1000.0 / 3600.0;
}

SynthData synth_generate(const SynthConfig& config) {
  config.validate();
  const std::size_t hours = config.n_days * 24;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> intensity(1.0 / config.mean_intensity);

  Matrix weather(hours, 2);
  Matrix flow(hours, 1);
  MassBalance mb;
  mb.initial_storage = config.initial_storage;

  const double phi = config.temp_noise_corr;
  const double innovation = config.temp_noise_sd * std::sqrt(1.0 - phi * phi);
  double noise = config.temp_noise_sd * normal(rng);
  double storage = config.initial_storage;
  const double two_pi = 2.0 * std::numbers::pi;

  for (std::size_t t = 0; t < hours; ++t) {
    const double hour = static_cast<double>(t % 24);
    if (t > 0) noise = phi * noise + innovation * normal(rng);
    const double temp =
        config.temp_mean +
        config.temp_amplitude *
            std::sin(two_pi * (hour - config.peak_hour + 6.0) / 24.0) +
        noise;
    const double wet = uniform(rng);
    const double amount = intensity(rng);
    const double precip = wet < config.event_probability ? amount : 0.0;
    const double melt = config.melt_coefficient * std::max(0.0, temp);

    const double outflow = config.reservoir_k * storage;
    storage = storage + precip + melt - outflow;

    mb.precipitation += precip;
    mb.melt += melt;
    mb.outflow += outflow;
    weather(t, 0) = precip;
    weather(t, 1) = temp;
    flow(t, 0) = mm_per_hour_to_m3s(outflow, config.catchment_area_km2);
  }
  mb.final_storage = storage;

  const UtcTime start{config.start};
  SynthData out;
  out.hourly_weather = TimeSeries(start, Resolution::Hourly,
                                  {"precipitation", "temperature"},
                                  std::move(weather));
  out.hourly_flow =
      TimeSeries(start, Resolution::Hourly, {"flow"}, std::move(flow));
  out.daily_weather = aggregate_hourly_to_daily(
      out.hourly_weather, {{"precipitation", AggregateRule::Sum},
                           {"temperature", AggregateRule::Mean}});
  out.daily_flow = aggregate_hourly_to_daily(
      out.hourly_flow, {{"flow", AggregateRule::Mean}});
  out.balance = mb;
  return out;
}

}  // namespace flowdisagg
