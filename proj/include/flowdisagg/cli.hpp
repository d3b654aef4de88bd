// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowdisagg/ingest.hpp"
#include "flowdisagg/transport.hpp"

namespace flowdisagg {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,   // usage, config, I/O, missing checkpoint
  kExitNetwork = 2,
  kExitParse = 3,
  kExitData = 4,     // numeric or data problems
};

/// Effective settings of one invocation. Built from defaults, then the JSON
/// config file, then command-line flags; echoed as run_config_<cmd>.json.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 42;
  bool offline = false;
  std::string out = ".";
  std::string cache_dir;    // default <out>/cache
  std::string data_dir;     // default <out>
  std::string checkpoint;   // default <out>/checkpoint.json
  std::string results;      // default <out>/results.csv

  // fetch
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string start;
  std::string end;
  std::vector<std::string> weather{"precipitation", "temperature"};

  // synth
  std::size_t days = 400;
  double reservoir_k = 0.05;
  double event_probability = 0.08;
  double mean_intensity = 1.0;
  double temp_mean = 2.0;
  double temp_amplitude = 6.0;
  double peak_hour = 15.0;
  double temp_noise_sd = 1.0;
  double temp_noise_corr = 0.98;
  double melt_coefficient = 0.15;
  double initial_storage = 12.0;
  double catchment_area_km2 = 50.0;

  // train
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::size_t hidden_size = 16;
  std::vector<std::size_t> ffn_hidden{32, 32};
  std::string activation = "tanh";
  std::size_t context_days = 6;
  double loss1_weight = 1.0;
  double loss2_weight = 1.0;
  double train_fraction = 0.8;
  int threads = 0;
  bool clamp_negative = false;

  // disagg
  std::string span = "test";

  // eval
  std::string truth = "data";
  std::size_t figure_days = 3;

  RunConfig();
};

std::string run_config_to_json(const RunConfig& config);
/// Overlays the keys present in `text` onto `config`. Unknown keys and type
/// mismatches are ConfigErrors.
void apply_config_json(RunConfig& config, const std::string& text);

struct CliEnvironment {
  /// Null: libcurl (or the offline transport with --offline).
  Transport* transport = nullptr;
  std::ostream* out = nullptr;  // null: std::cout
  std::ostream* err = nullptr;  // null: std::cerr
  EnvLookup env = process_env;
  /// Backoff sleep for retries; null sleeps for real.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Runs the command line and returns the exit code. Never throws.
int run_cli(int argc, const char* const* argv, const CliEnvironment& env = {});

/// Convenience overload; args excludes the program name.
int run_cli(const std::vector<std::string>& args,
            const CliEnvironment& env = {});

}  // namespace flowdisagg
