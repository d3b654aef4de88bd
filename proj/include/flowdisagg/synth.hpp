// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

/// Hourly linear-reservoir catchment driven by seeded weather.
///
///   T(t) = temp_mean + temp_amplitude·sin(2π(hour − peak_hour + 6)/24) + n(t)
///   n(t) = φ·n(t−1) + σ√(1−φ²)·ε          (AR(1), stationary sd σ)
///   P(t) = Exp(mean_intensity) with probability event_probability, else 0
///   M(t) = melt_coefficient · max(0, T(t))
///   Q(t) = k·S(t),  S(t+1) = S(t) + P(t) + M(t) − Q(t)
///
/// Storage and fluxes are mm over the catchment; flow is reported in m³/s.
struct SynthConfig {
  std::size_t n_days = 400;
  std::uint64_t seed = 42;
  UtcDay start = UtcDay{std::chrono::year{2018} / std::chrono::December / 4};
  double reservoir_k = 0.05;          // 1/h, in (0, 1)
  double event_probability = 0.08;    // per hour, in [0, 1]
  double mean_intensity = 1.0;        // mm/h, > 0
  double temp_mean = 2.0;             // °C
  double temp_amplitude = 6.0;        // °C, >= 0
  double peak_hour = 15.0;            // hour of the diurnal maximum
  double temp_noise_sd = 1.0;         // °C, >= 0
  double temp_noise_corr = 0.98;      // hourly AR(1) coefficient, in [0, 1)
  double melt_coefficient = 0.15;     // mm/(°C·h), >= 0
  double initial_storage = 12.0;      // mm, >= 0
  double catchment_area_km2 = 50.0;   // > 0

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Totals in mm over the whole run.
struct MassBalance {
  double initial_storage = 0.0;
  double precipitation = 0.0;
  double melt = 0.0;
  double outflow = 0.0;
  double final_storage = 0.0;
  /// initial + precipitation + melt − outflow − final (zero up to rounding).
  double residual() const noexcept {
    return initial_storage + precipitation + melt - outflow - final_storage;
  }
};

struct SynthData {
  TimeSeries hourly_weather;  // precipitation (mm), temperature (°C)
  TimeSeries hourly_flow;     // flow (m³/s)
  TimeSeries daily_weather;   // precipitation summed, temperature averaged
  TimeSeries daily_flow;      // daily mean of hourly flow
  MassBalance balance;
};

SynthData synth_generate(const SynthConfig& config);

/// mm/h over `area_km2` → m³/s.
double mm_per_hour_to_m3s(double mm_per_hour, double area_km2) noexcept;

}  // namespace flowdisagg
