// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "flowdisagg/checkpoint.hpp"
#include "flowdisagg/csv.hpp"
#include "flowdisagg/disagg.hpp"
#include "flowdisagg/errors.hpp"
#include "flowdisagg/eval.hpp"
#include "flowdisagg/kernels.hpp"
#include "flowdisagg/results_io.hpp"
#include "flowdisagg/synth.hpp"
#include "flowdisagg/utc.hpp"
#include "flowdisagg/windows.hpp"

namespace flowdisagg {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig::RunConfig() {
  const SynthConfig s;
  days = s.n_days;
  reservoir_k = s.reservoir_k;
  event_probability = s.event_probability;
  mean_intensity = s.mean_intensity;
  temp_mean = s.temp_mean;
  temp_amplitude = s.temp_amplitude;
  peak_hour = s.peak_hour;
  temp_noise_sd = s.temp_noise_sd;
  temp_noise_corr = s.temp_noise_corr;
  melt_coefficient = s.melt_coefficient;
  initial_storage = s.initial_storage;
  catchment_area_km2 = s.catchment_area_km2;

  const TrainConfig t;
  epochs = t.epochs;
  learning_rate = t.learning_rate;
  hidden_size = t.model.hidden_size;
  ffn_hidden = t.model.ffn_hidden;
  activation = nn::to_string(t.model.activation);
  context_days = t.model.context_days;
  loss1_weight = t.model.loss1_weight;
  loss2_weight = t.model.loss2_weight;
  train_fraction = t.train_fraction;
  threads = t.threads;
  clamp_negative = t.model.clamp_negative;
  seed = t.seed;

  const StationSpec st = kirkevoll_bru();
  station_id = st.station_id;
  latitude = st.latitude;
  longitude = st.longitude;
  start = format_day(UtcDay{kDefaultStart});
  end = format_day(UtcDay{kDefaultEnd});
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    RunConfig, command, seed, offline, out, cache_dir, data_dir, checkpoint,
    results, station_id, latitude, longitude, start, end, weather, days,
    reservoir_k, event_probability, mean_intensity, temp_mean, temp_amplitude,
    peak_hour, temp_noise_sd, temp_noise_corr, melt_coefficient,
    initial_storage, catchment_area_km2, epochs, learning_rate, hidden_size,
    ffn_hidden, activation, context_days, loss1_weight, loss2_weight,
    train_fraction, threads, clamp_negative, span, truth, figure_days)

std::string run_config_to_json(const RunConfig& config) {
  return json(config).dump(2) + "\n";
}

void apply_config_json(RunConfig& config, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  const json known = json(RunConfig{});
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  json merged = json(config);
  merged.update(doc);
  try {
    config = merged.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value in config file: ") + e.what());
  }
}

namespace {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

fs::path out_dir(const RunConfig& c) { return fs::path(c.out); }
fs::path data_dir(const RunConfig& c) {
  return c.data_dir.empty() ? out_dir(c) : fs::path(c.data_dir);
}
fs::path cache_dir(const RunConfig& c) {
  return c.cache_dir.empty() ? out_dir(c) / "cache" : fs::path(c.cache_dir);
}
fs::path checkpoint_path(const RunConfig& c) {
  return c.checkpoint.empty() ? out_dir(c) / "checkpoint.json"
                              : fs::path(c.checkpoint);
}
fs::path results_path(const RunConfig& c) {
  return c.results.empty() ? out_dir(c) / "results.csv" : fs::path(c.results);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

void echo_config(const RunConfig& c) {
  ensure_dir(out_dir(c));
  write_text(out_dir(c) / ("run_config_" + c.command + ".json"),
             run_config_to_json(c));
}

TimeSeries read_input(const fs::path& dir, const std::string& name,
                      Resolution res) {
  const fs::path p = dir / name;
  if (!fs::exists(p)) throw IoError("missing input " + p.string());
  return read_csv(p, res);
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.weather_names = c.weather;
  m.context_days = c.context_days;
  m.hidden_size = c.hidden_size;
  m.ffn_hidden = c.ffn_hidden;
  m.activation = nn::activation_from_string(c.activation);
  m.loss1_weight = c.loss1_weight;
  m.loss2_weight = c.loss2_weight;
  m.clamp_negative = c.clamp_negative;
  return m;
}

SynthConfig synth_config(const RunConfig& c) {
  SynthConfig s;
  s.n_days = c.days;
  s.seed = c.seed;
  s.reservoir_k = c.reservoir_k;
  s.event_probability = c.event_probability;
  s.mean_intensity = c.mean_intensity;
  s.temp_mean = c.temp_mean;
  s.temp_amplitude = c.temp_amplitude;
  s.peak_hour = c.peak_hour;
  s.temp_noise_sd = c.temp_noise_sd;
  s.temp_noise_corr = c.temp_noise_corr;
  s.melt_coefficient = c.melt_coefficient;
  s.initial_storage = c.initial_storage;
  s.catchment_area_km2 = c.catchment_area_km2;
  return s;
}

// Windows from the CSVs in `dir`, using `weather` columns.
WindowSet load_windows(const fs::path& dir,
                       const std::vector<std::string>& weather,
                       std::size_t context_days, bool with_truth) {
  const TimeSeries dw =
      read_input(dir, "daily_weather.csv", Resolution::Daily).select(weather);
  const TimeSeries df = read_input(dir, "daily_flow.csv", Resolution::Daily);
  const TimeSeries hw =
      read_input(dir, "hourly_weather.csv", Resolution::Hourly).select(weather);
  std::optional<TimeSeries> hf;
  if (with_truth && fs::exists(dir / "hourly_flow.csv")) {
    hf = read_csv(dir / "hourly_flow.csv", Resolution::Hourly);
  }
  WindowSet ws =
      build_windows(dw, df, hw, hf ? &*hf : nullptr, context_days);
  if (ws.windows.empty()) throw DataError(ws.diagnostic);
  return ws;
}

std::string summary_line(const std::string& name, const TimeSeries& s,
                         bool from_cache) {
  json j;
  j["series"] = name;
  j["rows"] = s.rows();
  j["missing"] = s.missing_count();
  j["from_cache"] = from_cache;
  return j.dump();
}

int cmd_fetch(const RunConfig& c, const CliEnvironment& env, Io io) {
  std::unique_ptr<Transport> owned;
  Transport* transport = env.transport;
  if (c.offline) {
    owned = std::make_unique<OfflineTransport>();
    transport = owned.get();
  } else if (!transport) {
    owned = std::make_unique<CurlTransport>();
    transport = owned.get();
  }
  RetryPolicy retry;
  if (env.sleep) retry.sleep = env.sleep;

  FetchRequest base;
  base.station = kirkevoll_bru();
  base.station.station_id = c.station_id;
  base.station.latitude = c.latitude;
  base.station.longitude = c.longitude;
  base.start = parse_day(c.start);
  base.end = parse_day(c.end);

  SeriesCache cache(cache_dir(c));
  HydApiClient hydapi(*transport, &cache, retry, env.env);
  OpenMeteoClient meteo(*transport, &cache, retry);

  FetchRequest flow_req = base;
  flow_req.resolution = Resolution::Daily;
  flow_req.variables = {"flow"};
  FetchRequest dw_req = base;
  dw_req.resolution = Resolution::Daily;
  dw_req.variables = c.weather;
  FetchRequest hw_req = dw_req;
  hw_req.resolution = Resolution::Hourly;

  const FetchResult flow = hydapi.fetch_flow(flow_req);
  const FetchResult dw = meteo.fetch_weather(dw_req);
  const FetchResult hw = meteo.fetch_weather(hw_req);

  ensure_dir(out_dir(c));
  write_csv(flow.series, out_dir(c) / "daily_flow.csv");
  write_csv(dw.series, out_dir(c) / "daily_weather.csv");
  write_csv(hw.series, out_dir(c) / "hourly_weather.csv");
  const std::pair<const char*, const FetchResult*> all[] = {
      {"daily_flow", &flow}, {"daily_weather", &dw}, {"hourly_weather", &hw}};
  for (const auto& [name, r] : all) {
    if (r->from_cache) io.err << name << ": served from cache\n";
    io.out << summary_line(name, r->series, r->from_cache) << '\n';
  }
  return kExitOk;
}

int cmd_synth(const RunConfig& c, Io io) {
  const SynthConfig sc = synth_config(c);
  const SynthData d = synth_generate(sc);
  ensure_dir(out_dir(c));
  write_csv(d.hourly_weather, out_dir(c) / "hourly_weather.csv");
  write_csv(d.hourly_flow, out_dir(c) / "hourly_flow.csv");
  write_csv(d.daily_weather, out_dir(c) / "daily_weather.csv");
  write_csv(d.daily_flow, out_dir(c) / "daily_flow.csv");
  json j;
  j["days"] = sc.n_days;
  j["initial_storage_mm"] = d.balance.initial_storage;
  j["precipitation_mm"] = d.balance.precipitation;
  j["melt_mm"] = d.balance.melt;
  j["outflow_mm"] = d.balance.outflow;
  j["final_storage_mm"] = d.balance.final_storage;
  j["residual_mm"] = d.balance.residual();
  io.out << j.dump() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& c, Io io) {
  TrainConfig tc;
  tc.model = model_config(c);
  tc.epochs = c.epochs;
  tc.learning_rate = c.learning_rate;
  tc.train_fraction = c.train_fraction;
  tc.seed = c.seed;
  tc.threads = c.threads;

  const WindowSet ws = load_windows(data_dir(c), tc.model.weather_names,
                                    tc.model.context_days, false);
  if (ws.skipped > 0) {
    io.err << ws.skipped << " candidate days skipped (incomplete data)\n";
  }
  const auto split = split_chronological(ws.windows.size(), tc.train_fraction);
  const std::span<const FeatureWindow> train_span(ws.windows.data(),
                                                  split.train_count);
  const TrainResult r = train(train_span, tc);

  ensure_dir(out_dir(c));
  save_checkpoint(Checkpoint{r.model, r.optimizer, tc.train_fraction},
                  checkpoint_path(c));
  std::ostringstream hist;
  hist << "epoch,loss1,loss2,total\n";
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    hist << e << ',' << format_number(r.history[e].loss1) << ','
         << format_number(r.history[e].loss2) << ','
         << format_number(r.history[e].total) << '\n';
  }
  write_text(out_dir(c) / "loss_history.csv", hist.str());

  json j;
  j["windows"] = ws.windows.size();
  j["train_windows"] = split.train_count;
  j["test_windows"] = split.test_count;
  j["epochs"] = tc.epochs;
  if (!r.history.empty()) {
    j["initial_loss"] = r.history.front().total;
    j["final_loss"] = r.history.back().total;
  }
  io.out << j.dump() << '\n';
  return kExitOk;
}

int cmd_disagg(const RunConfig& c, Io io) {
  const fs::path ckpt_path = checkpoint_path(c);
  if (!fs::exists(ckpt_path)) {
    throw IoError("checkpoint not found: " + ckpt_path.string());
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ModelConfig& mc = ckpt.model.config;
  const WindowSet ws =
      load_windows(data_dir(c), mc.weather_names, mc.context_days, true);
  const auto split =
      split_chronological(ws.windows.size(), ckpt.train_fraction);
  std::span<const FeatureWindow> span(ws.windows);
  if (c.span == "train") {
    span = span.first(split.train_count);
  } else if (c.span == "test") {
    span = span.subspan(split.train_count);
  } else if (c.span != "all") {
    throw ConfigError("--span must be test, train or all");
  }
  if (span.empty()) throw DataError("no windows in the '" + c.span + "' span");

  const std::vector<DisaggResult> results =
      c.threads == 1 ? disaggregate_serial(ckpt.model, span)
                     : disaggregate_parallel(ckpt.model, span, c.threads);
  ensure_dir(results_path(c).parent_path().empty()
                 ? fs::path(".")
                 : results_path(c).parent_path());
  write_results_csv(results, results_path(c));

  double worst = 0.0;
  for (const auto& r : results) {
    worst = std::max(worst, mean_preservation_error(r.hourly_flow_corrected,
                                                    r.daily_avg_observed));
  }
  json j;
  j["days"] = results.size();
  j["span"] = c.span;
  j["first_day"] = format_day(results.front().day);
  j["last_day"] = format_day(results.back().day);
  j["max_mean_preservation_error"] = worst;
  io.out << j.dump() << '\n';
  return kExitOk;
}

// Daily series over the result days, missing in between.
TimeSeries results_daily(std::span<const DisaggResult> results) {
  const UtcDay first = results.front().day;
  const UtcDay last = results.back().day;
  const auto n = static_cast<std::size_t>((last - first).count()) + 1;
  Matrix m(n, 1, kMissing);
  for (const auto& r : results) {
    m(static_cast<std::size_t>((r.day - first).count()), 0) =
        r.daily_avg_observed;
  }
  return TimeSeries(UtcTime{first}, Resolution::Daily, {"flow"}, std::move(m));
}

int cmd_eval(const RunConfig& c, Io io) {
  const fs::path rp = results_path(c);
  if (!fs::exists(rp)) throw IoError("results not found: " + rp.string());
  std::vector<DisaggResult> results = read_results_csv(rp);
  if (results.empty()) throw DataError("results file holds no days");
  std::sort(results.begin(), results.end(),
            [](const auto& a, const auto& b) { return a.day < b.day; });

  const TimeSeries daily_flow =
      read_input(data_dir(c), "daily_flow.csv", Resolution::Daily);
  std::map<std::string, TimeSeries> methods;
  methods.emplace("model", results_to_series(results, true));
  methods.emplace("linear_interpolation", linear_interpolate(daily_flow));
  methods.emplace("uniform", uniform_disaggregate(daily_flow));

  TimeSeries truth = methods.at("model");
  if (c.truth == "data") {
    truth = read_input(data_dir(c), "hourly_flow.csv", Resolution::Hourly);
  } else if (c.truth != "model") {
    throw ConfigError("--truth must be data or model");
  }
  const EvalReport report =
      compare_methods(methods, truth, results_daily(results));

  ensure_dir(out_dir(c));
  write_report_csv(report, out_dir(c) / "report.csv");
  write_summary_csv(report, out_dir(c) / "summary.csv");
  for (const auto& note : report.notes) io.err << note << '\n';

  const std::size_t n_fig = std::min(c.figure_days, results.size());
  if (n_fig > 0) {
    std::vector<UtcDay> days;
    for (std::size_t i = 0; i < n_fig; ++i) {
      // spread over the span
      const std::size_t idx =
          n_fig == 1 ? 0 : i * (results.size() - 1) / (n_fig - 1);
      days.push_back(results[idx].day);
    }
    days.erase(std::unique(days.begin(), days.end()), days.end());
    emit_figure_data(report, results, out_dir(c) / "figures", days);
  }

  json j = json::array();
  for (const auto& s : report.summary) {
    json row;
    row["method"] = s.method;
    row["days"] = s.days;
    row["mae"] = s.mae;
    row["rmse"] = s.rmse;
    row["mean_preservation_error"] = s.mean_preservation_error;
    row["variance_ratio"] =
        s.variance_ratio ? json(*s.variance_ratio) : json(nullptr);
    row["negative_predictions"] = s.negative_predictions;
    j.push_back(row);
  }
  io.out << j.dump() << '\n';
  return kExitOk;
}

// --config value, found before the real parse so file values become the
// defaults that flags then override.
std::optional<std::string> find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.substr(0, 9) == "--config=") return std::string(a.substr(9));
  }
  return std::nullopt;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int dispatch(int argc, const char* const* argv, const CliEnvironment& env,
             Io io) {
  RunConfig c;
  if (auto p = find_config_path(argc, argv)) {
    apply_config_json(c, read_file(*p));
  }

  CLI::App app{"Daily-to-hourly streamflow disaggregation"};
  app.name("flowdisagg");
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_flag("--offline", c.offline, "Never touch the network");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", c.out, "Output directory")->capture_default_str();

  auto* fetch = app.add_subcommand("fetch", "Download flow and weather into the cache");
  fetch->add_option("--cache-dir", c.cache_dir, "Cache directory (default <out>/cache)");
  fetch->add_option("--station-id", c.station_id, "HydAPI station id")->capture_default_str();
  fetch->add_option("--lat", c.latitude, "Latitude")->capture_default_str();
  fetch->add_option("--lon", c.longitude, "Longitude")->capture_default_str();
  fetch->add_option("--start", c.start, "First day (YYYY-MM-DD)")->capture_default_str();
  fetch->add_option("--end", c.end, "Last day, inclusive")->capture_default_str();
  fetch->add_option("--weather", c.weather, "Weather variables")->delimiter(',');

  auto* synth = app.add_subcommand("synth", "Generate a synthetic catchment");
  synth->add_option("--days", c.days, "Number of days")->capture_default_str();
  synth->add_option("--k", c.reservoir_k, "Reservoir constant (1/h)")->capture_default_str();
  synth->add_option("--event-probability", c.event_probability)->capture_default_str();
  synth->add_option("--mean-intensity", c.mean_intensity)->capture_default_str();
  synth->add_option("--temp-mean", c.temp_mean)->capture_default_str();
  synth->add_option("--temp-amplitude", c.temp_amplitude)->capture_default_str();
  synth->add_option("--peak-hour", c.peak_hour)->capture_default_str();
  synth->add_option("--temp-noise-sd", c.temp_noise_sd)->capture_default_str();
  synth->add_option("--temp-noise-corr", c.temp_noise_corr)->capture_default_str();
  synth->add_option("--melt-coefficient", c.melt_coefficient)->capture_default_str();
  synth->add_option("--initial-storage", c.initial_storage)->capture_default_str();
  synth->add_option("--area", c.catchment_area_km2, "Catchment area (km2)")->capture_default_str();

  auto* trn = app.add_subcommand("train", "Fit the model on a data directory");
  bool serial = false;
  trn->add_option("--data", c.data_dir, "Input CSV directory (default <out>)");
  trn->add_option("--checkpoint", c.checkpoint, "Checkpoint path");
  trn->add_option("--epochs", c.epochs)->capture_default_str();
  trn->add_option("--lr", c.learning_rate)->capture_default_str();
  trn->add_option("--hidden", c.hidden_size, "LSTM hidden size")->capture_default_str();
  trn->add_option("--ffn-hidden", c.ffn_hidden, "FFN hidden widths")->delimiter(',');
  trn->add_option("--activation", c.activation)
      ->check(CLI::IsMember({"tanh", "relu", "identity"}))
      ->capture_default_str();
  trn->add_option("--context-days", c.context_days)->capture_default_str();
  trn->add_option("--loss1-weight", c.loss1_weight)->capture_default_str();
  trn->add_option("--loss2-weight", c.loss2_weight)->capture_default_str();
  trn->add_option("--train-fraction", c.train_fraction)->capture_default_str();
  trn->add_option("--weather", c.weather, "Weather variables")->delimiter(',');
  trn->add_flag("--clamp-negative", c.clamp_negative);
  auto* threads_opt = trn->add_option("--threads", c.threads, "0 = OpenMP default");
  trn->add_flag("--serial", serial, "Use the serial kernel")->excludes(threads_opt);

  auto* dis = app.add_subcommand("disagg", "Disaggregate days with a checkpoint");
  dis->add_option("--data", c.data_dir, "Input CSV directory (default <out>)");
  dis->add_option("--checkpoint", c.checkpoint, "Checkpoint path");
  dis->add_option("--results", c.results, "Results CSV path");
  dis->add_option("--span", c.span)
      ->check(CLI::IsMember({"test", "train", "all"}))
      ->capture_default_str();
  auto* dthreads = dis->add_option("--threads", c.threads);
  bool dserial = false;
  dis->add_flag("--serial", dserial)->excludes(dthreads);

  auto* ev = app.add_subcommand("eval", "Compare the model with baselines");
  ev->add_option("--data", c.data_dir, "Input CSV directory (default <out>)");
  ev->add_option("--results", c.results, "Results CSV path");
  ev->add_option("--truth", c.truth)
      ->check(CLI::IsMember({"data", "model"}))
      ->capture_default_str();
  ev->add_option("--figure-days", c.figure_days, "Days to plot")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (serial || dserial) c.threads = 1;
  c.command = app.get_subcommands().front()->get_name();
  echo_config(c);

  if (c.command == "fetch") return cmd_fetch(c, env, io);
  if (c.command == "synth") return cmd_synth(c, io);
  if (c.command == "train") return cmd_train(c, io);
  if (c.command == "disagg") return cmd_disagg(c, io);
  return cmd_eval(c, io);
}

}  // namespace

int run_cli(int argc, const char* const* argv, const CliEnvironment& env) {
  Io io{env.out ? *env.out : std::cout, env.err ? *env.err : std::cerr};
  try {
    return dispatch(argc, argv, env, io);
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NetworkError& e) {
    io.err << "network error: " << e.what() << '\n';
    return kExitNetwork;
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int run_cli(const std::vector<std::string>& args, const CliEnvironment& env) {
  std::vector<const char*> argv{"flowdisagg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), env);
}

}  // namespace flowdisagg
