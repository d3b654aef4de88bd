// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/ingest.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "flowdisagg/csv.hpp"
#include "flowdisagg/errors.hpp"

namespace flowdisagg {

using nlohmann::json;

void StationSpec::validate() const {
  if (!(std::abs(latitude) <= 90.0) || !(std::abs(longitude) <= 180.0)) {
    throw ConfigError("station coordinates out of range");
  }
}

StationSpec kirkevoll_bru() {
  return {"kirkevoll-bru", 59.69003, 9.03762, "Kirkevoll bru"};
}

void FetchRequest::validate() const {
  station.validate();
  if (!(start < end)) {
    throw ConfigError("fetch range is empty: start " + format_day(start) +
                      " must precede end " + format_day(end));
  }
  if (variables.empty()) throw ConfigError("fetch request has no variables");
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cache

SeriesCache::SeriesCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<TimeSeries> SeriesCache::load(const std::string& key,
                                            Resolution resolution) const {
  std::lock_guard lock(mutex_);
  const auto path = dir_ / (key + ".csv");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_csv(path, resolution);
}

bool SeriesCache::store(const std::string& key, const TimeSeries& series,
                        const std::string& manifest_json) {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache dir " + dir_.string());
  const auto csv = dir_ / (key + ".csv");
  if (std::filesystem::exists(csv)) return false;
  const auto tmp = dir_ / (key + ".csv.tmp");
  write_csv(series, tmp);
  {
    std::ofstream m(dir_ / (key + ".json"), std::ios::binary);
    if (!m) throw IoError("cannot write cache manifest for " + key);
    m << manifest_json;
  }
  std::filesystem::rename(tmp, csv, ec);
  if (ec) throw IoError("cannot finalize cache entry " + csv.string());
  return true;
}

std::string cache_key(const std::string& source, const FetchRequest& request) {
  std::string key = source + "_";
  key += source == "hydapi" ? request.station.station_id
                            : format_number(request.station.latitude) + "_" +
                                  format_number(request.station.longitude);
  key += "_" + format_day(request.start) + "_" + format_day(request.end) + "_" +
         to_string(request.resolution);
  for (const auto& v : request.variables) key += "_" + v;
  for (char& c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      c = '_';
    }
  }
  return key;
}

namespace {

std::string manifest(const std::string& source, const FetchRequest& r,
                     const std::string& url, const TimeSeries& s) {
  const auto now = std::chrono::floor<std::chrono::seconds>(
      std::chrono::system_clock::now());
  json j = {{"source", source},
            {"station_id", r.station.station_id},
            {"station_name", r.station.name},
            {"latitude", r.station.latitude},
            {"longitude", r.station.longitude},
            {"start", format_day(r.start)},
            {"end", format_day(r.end)},
            {"resolution", to_string(r.resolution)},
            {"variables", r.variables},
            {"url", url},
            {"rows", s.rows()},
            {"missing", s.missing_count()},
            {"fetched_at", format_utc(UtcTime{now})}};
  return j.dump(2) + "\n";
}

const json& at_path(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError("missing field '" + key + "'", path);
  }
  return j.at(key);
}

double value_or_missing(const json& v, const std::string& path) {
  if (v.is_null()) return kMissing;
  if (!v.is_number()) throw ParseError("expected a number or null", path);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError("non-finite value", path);
  return x;
}

json parse_json(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("payload is not valid JSON: ") + e.what(),
                     "$");
  }
}

std::size_t row_for(UtcTime t, UtcTime start, Resolution res,
                    const std::string& path) {
  const auto step = step_of(res);
  if (t < start || (t - start) % step != std::chrono::seconds{0}) {
    throw ParseError("timestamp " + format_utc(t) + " not on the " +
                         to_string(res) + " grid",
                     path);
  }
  return static_cast<std::size_t>((t - start) / step);
}

}  // namespace

// ---------------------------------------------------------------------------
// HydAPI

HydApiClient::HydApiClient(Transport& transport, SeriesCache* cache,
                           RetryPolicy retry, EnvLookup env)
    : transport_(transport),
      cache_(cache),
      retry_(std::move(retry)),
      env_(std::move(env)) {}

std::string HydApiClient::request_url(const FetchRequest& r) const {
  const std::string range = format_utc(UtcTime{r.start}) + "/" +
                            format_utc(UtcTime{r.end + std::chrono::days{1}});
  return build_url(
      kBaseUrl,
      {{"StationId", r.station.station_id},
       {"Parameter", std::to_string(kDischargeParameter)},
       {"ResolutionTime", r.resolution == Resolution::Daily ? "day" : "60"},
       {"ReferenceTime", range}});
}

FetchResult HydApiClient::fetch_flow(const FetchRequest& request) {
  request.validate();
  if (request.variables != std::vector<std::string>{"flow"}) {
    throw ConfigError("HydAPI requests support the single variable 'flow'");
  }
  const std::string key = cache_key("hydapi", request);
  if (cache_) {
    if (auto hit = cache_->load(key, request.resolution)) {
      return {std::move(*hit), true};
    }
  }
  const auto api_key = env_(request.credential_env);
  if (!api_key) {
    throw ConfigError("HydAPI key missing: set " + request.credential_env);
  }
  const std::string url = request_url(request);
  HttpRequest http{url, {{"X-API-Key", *api_key}, {"Accept", "application/json"}}};
  const HttpResponse resp = get_with_retry(transport_, http, retry_);
  TimeSeries series =
      parse_hydapi(resp.body, request.resolution, request.start, request.end);
  if (cache_) {
    cache_->store(key, series, manifest("hydapi", request, url, series));
  }
  return {std::move(series), false};
}

TimeSeries parse_hydapi(const std::string& body, Resolution resolution,
                        UtcDay start, UtcDay end) {
  const json j = parse_json(body);
  const json& data = at_path(j, "data", "$");
  if (!data.is_array() || data.empty()) {
    throw ParseError("'data' must be a non-empty array", "$.data");
  }
  const json& obs = at_path(data[0], "observations", "$.data[0]");
  if (!obs.is_array()) {
    throw ParseError("'observations' must be an array",
                     "$.data[0].observations");
  }
  const UtcTime t0{start};
  const auto rows = static_cast<std::size_t>(
      (UtcTime{end + std::chrono::days{1}} - t0) / step_of(resolution));
  Matrix values(rows, 1, kMissing);
  std::vector<bool> filled(rows, false);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string path =
        "$.data[0].observations[" + std::to_string(i) + "]";
    const json& time = at_path(obs[i], "time", path);
    if (!time.is_string()) throw ParseError("time must be a string", path + ".time");
    UtcTime t;
    try {
      t = parse_utc(time.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(e.what(), path + ".time");
    }
    if (resolution == Resolution::Daily) t = UtcTime{day_of(t)};
    if (t < t0 || t >= UtcTime{end + std::chrono::days{1}}) continue;
    const std::size_t r = row_for(t, t0, resolution, path + ".time");
    if (filled[r]) throw ParseError("duplicate observation", path + ".time");
    filled[r] = true;
    values(r, 0) = value_or_missing(at_path(obs[i], "value", path),
                                    path + ".value");
  }
  return TimeSeries(t0, resolution, {"flow"}, std::move(values));
}

// ---------------------------------------------------------------------------
// Open-Meteo

namespace {

struct WeatherField {
  const char* name;
  const char* hourly;
  const char* daily;
};

constexpr WeatherField kWeatherFields[] = {
    {"precipitation", "precipitation", "precipitation_sum"},
    {"temperature", "temperature_2m", "temperature_2m_mean"},
    {"rain", "rain", "rain_sum"},
    {"snowfall", "snowfall", "snowfall_sum"},
    {"relative_humidity", "relative_humidity_2m", "relative_humidity_2m_mean"},
};

}  // namespace

std::vector<std::string> supported_weather_variables(Resolution) {
  std::vector<std::string> out;
  for (const auto& f : kWeatherFields) out.emplace_back(f.name);
  return out;
}

std::string open_meteo_field(const std::string& variable,
                             Resolution resolution) {
  for (const auto& f : kWeatherFields) {
    if (variable == f.name) {
      return resolution == Resolution::Hourly ? f.hourly : f.daily;
    }
  }
  std::string supported;
  for (const auto& f : kWeatherFields) {
    supported += (supported.empty() ? "" : ", ") + std::string(f.name);
  }
  throw ConfigError("unknown weather variable '" + variable +
                    "' (supported: " + supported + ")");
}

OpenMeteoClient::OpenMeteoClient(Transport& transport, SeriesCache* cache,
                                 RetryPolicy retry)
    : transport_(transport), cache_(cache), retry_(std::move(retry)) {}

std::string OpenMeteoClient::request_url(const FetchRequest& r) const {
  std::string fields;
  for (const auto& v : r.variables) {
    fields += (fields.empty() ? "" : ",") + open_meteo_field(v, r.resolution);
  }
  return build_url(
      kBaseUrl,
      {{"latitude", format_number(r.station.latitude)},
       {"longitude", format_number(r.station.longitude)},
       {"start_date", format_day(r.start)},
       {"end_date", format_day(r.end)},
       {r.resolution == Resolution::Hourly ? "hourly" : "daily", fields},
       {"timezone", "GMT"}});
}

FetchResult OpenMeteoClient::fetch_weather(const FetchRequest& request) {
  request.validate();
  for (const auto& v : request.variables) open_meteo_field(v, request.resolution);
  const std::string key = cache_key("openmeteo", request);
  if (cache_) {
    if (auto hit = cache_->load(key, request.resolution)) {
      return {std::move(*hit), true};
    }
  }
  const std::string url = request_url(request);
  const HttpResponse resp =
      get_with_retry(transport_, {url, {{"Accept", "application/json"}}}, retry_);
  TimeSeries series =
      parse_open_meteo(resp.body, request.resolution, request.variables);
  if (cache_) {
    cache_->store(key, series, manifest("openmeteo", request, url, series));
  }
  return {std::move(series), false};
}

TimeSeries parse_open_meteo(const std::string& body, Resolution resolution,
                            const std::vector<std::string>& variables) {
  const json j = parse_json(body);
  const std::string block =
      resolution == Resolution::Hourly ? "hourly" : "daily";
  const json& data = at_path(j, block, "$");
  const std::string base = "$." + block;
  const json& times = at_path(data, "time", base);
  if (!times.is_array() || times.empty()) {
    throw ParseError("'time' must be a non-empty array", base + ".time");
  }
  std::vector<UtcTime> stamps;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::string path = base + ".time[" + std::to_string(i) + "]";
    if (!times[i].is_string()) throw ParseError("time must be a string", path);
    try {
      stamps.push_back(parse_utc(times[i].get<std::string>()));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), path);
    }
    if (i > 0 && stamps[i] <= stamps[i - 1]) {
      throw ParseError("times not increasing", path);
    }
  }
  const UtcTime start = stamps.front();
  const std::size_t rows =
      row_for(stamps.back(), start, resolution, base + ".time") + 1;
  Matrix values(rows, variables.size(), kMissing);
  for (std::size_t c = 0; c < variables.size(); ++c) {
    const std::string field = open_meteo_field(variables[c], resolution);
    const json& arr = at_path(data, field, base);
    const std::string path = base + "." + field;
    if (!arr.is_array() || arr.size() != stamps.size()) {
      throw ParseError("array length differs from 'time'", path);
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = path + "[" + std::to_string(i) + "]";
      const std::size_t r = row_for(stamps[i], start, resolution, where);
      values(r, c) = value_or_missing(arr[i], where);
    }
  }
  return TimeSeries(start, resolution, variables, std::move(values));
}

}  // namespace flowdisagg
