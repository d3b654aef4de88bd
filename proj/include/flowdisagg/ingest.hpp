// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flowdisagg/timeseries.hpp"
#include "flowdisagg/transport.hpp"

namespace flowdisagg {

struct StationSpec {
  /// HydAPI station id ("<regine>.<main>.<point>").
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string name;

  /// Throws ConfigError when |lat| > 90 or |lon| > 180.
  void validate() const;
};

/// Kirkevoll bru (Vestfold og Telemark). The station id is a placeholder
/// ("kirkevoll-bru"); pass the real HydAPI id with --station-id for live
/// fetches.
StationSpec kirkevoll_bru();

/// Default study period: 2018-12-04 to 2021-01-07.
inline constexpr auto kDefaultStart =
    std::chrono::year{2018} / std::chrono::December / 4;
inline constexpr auto kDefaultEnd =
    std::chrono::year{2021} / std::chrono::January / 7;

struct FetchRequest {
  StationSpec station;
  UtcDay start;  // inclusive
  UtcDay end;    // inclusive
  Resolution resolution = Resolution::Daily;
  std::vector<std::string> variables;
  /// Environment variable holding the HydAPI key.
  std::string credential_env = "HYDAPI_KEY";

  /// Throws ConfigError unless start < end and variables is non-empty.
  void validate() const;
};

/// Write-once CSV cache: `<key>.csv` plus a `<key>.json` manifest with the
/// request parameters and fetch time. A key, once written, is never
/// overwritten.
class SeriesCache {
 public:
  explicit SeriesCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::optional<TimeSeries> load(const std::string& key,
                                 Resolution resolution) const;
  /// Stores unless the key already exists; returns false in that case.
  bool store(const std::string& key, const TimeSeries& series,
             const std::string& manifest_json);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/// Cache key for a request against `source` ("hydapi" / "openmeteo").
std::string cache_key(const std::string& source, const FetchRequest& request);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

struct FetchResult {
  TimeSeries series;
  bool from_cache = false;
};

/// NVE HydAPI observations client (GET /api/v1/Observations, X-API-Key
/// header). Flow is parameter 1001 (discharge, m³/s).
class HydApiClient {
 public:
  static constexpr const char* kBaseUrl =
      "https://hydapi.nve.no/api/v1/Observations";
  static constexpr int kDischargeParameter = 1001;

  HydApiClient(Transport& transport, SeriesCache* cache, RetryPolicy retry = {},
               EnvLookup env = process_env);

  /// Request variables must be {"flow"}. Served from the cache when present;
  /// otherwise needs the API key (ConfigError when unset).
  FetchResult fetch_flow(const FetchRequest& request);

  std::string request_url(const FetchRequest& request) const;

 private:
  Transport& transport_;
  SeriesCache* cache_;
  RetryPolicy retry_;
  EnvLookup env_;
};

/// Parses a HydAPI Observations payload into a series named `flow` spanning
/// [start, end]. Observations absent from the payload or with a null value
/// become missing rows; daily timestamps are assigned to their UTC day.
TimeSeries parse_hydapi(const std::string& body, Resolution resolution,
                        UtcDay start, UtcDay end);

/// Open-Meteo historical archive client.
class OpenMeteoClient {
 public:
  static constexpr const char* kBaseUrl =
      "https://archive-api.open-meteo.com/v1/archive";

  OpenMeteoClient(Transport& transport, SeriesCache* cache,
                  RetryPolicy retry = {});

  FetchResult fetch_weather(const FetchRequest& request);
  std::string request_url(const FetchRequest& request) const;

 private:
  Transport& transport_;
  SeriesCache* cache_;
  RetryPolicy retry_;
};

/// Internal names accepted for weather requests at `resolution`.
std::vector<std::string> supported_weather_variables(Resolution resolution);

/// Open-Meteo field for an internal variable name; ConfigError listing the
/// supported names otherwise.
std::string open_meteo_field(const std::string& variable, Resolution resolution);

/// Parses the archive payload (`hourly` or `daily` block, null = missing).
TimeSeries parse_open_meteo(const std::string& body, Resolution resolution,
                            const std::vector<std::string>& variables);

}  // namespace flowdisagg
