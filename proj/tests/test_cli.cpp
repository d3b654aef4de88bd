// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "flowdisagg/checkpoint.hpp"
#include "flowdisagg/cli.hpp"
#include "flowdisagg/csv.hpp"
#include "flowdisagg/kernels.hpp"
#include "flowdisagg/results_io.hpp"
#include "flowdisagg/synth.hpp"
#include "support.hpp"

using namespace flowdisagg;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args, Transport* transport = nullptr,
        EnvLookup env = [](const std::string&) { return std::nullopt; }) {
  std::ostringstream out, err;
  CliEnvironment e;
  e.transport = transport;
  e.out = &out;
  e.err = &err;
  e.env = std::move(env);
  e.sleep = [](std::chrono::milliseconds) {};
  Run r;
  r.code = run_cli(args, e);
  r.out = out.str();
  r.err = err.str();
  return r;
}

EnvLookup with_key() {
  return [](const std::string& n) -> std::optional<std::string> {
    if (n == "HYDAPI_KEY") return "k";
    return std::nullopt;
  };
}

FetchRequest weather_req(Resolution res) {
  FetchRequest r;
  r.station = kirkevoll_bru();
  r.start = fdtest::day("2020-01-01");
  r.end = fdtest::day("2020-01-02");
  r.resolution = res;
  r.variables = {"precipitation", "temperature"};
  return r;
}

void add_routes(CannedTransport& t, const std::string& hyd = "hydapi_daily.json") {
  OpenMeteoClient om(t, nullptr);
  t.add_route(om.request_url(weather_req(Resolution::Daily)),
              {200, fdtest::fixture("openmeteo_daily.json")});
  t.add_route(om.request_url(weather_req(Resolution::Hourly)),
              {200, fdtest::fixture("openmeteo_hourly.json")});
  t.add_route(HydApiClient::kBaseUrl, {200, fdtest::fixture(hyd)});
}

std::vector<std::string> fetch_args(const fs::path& out) {
  return {"fetch", "--out", out.string(), "--start", "2020-01-01", "--end", "2020-01-02"};
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST(Cli, UsageExitCodes) {
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"bogus"}).code, kExitConfig);
  EXPECT_EQ(cli({"synth", "--days", "abc"}).code, kExitConfig);
  EXPECT_EQ(cli({"train", "--serial", "--threads", "2"}).code, kExitConfig);
  EXPECT_EQ(cli({"eval", "--truth", "guess"}).code, kExitConfig);
}

TEST(Cli, MissingInputsAreExitOne) {
  fdtest::TempDir dir;
  EXPECT_EQ(cli({"disagg", "--out", s(dir.path())}).code, kExitConfig);
  EXPECT_EQ(cli({"train", "--out", s(dir.path())}).code, kExitConfig);
  EXPECT_EQ(cli({"eval", "--out", s(dir.path())}).code, kExitConfig);
  EXPECT_EQ(cli({"synth", "--out", s(dir.path()), "--k", "2"}).code, kExitConfig);
}

TEST(Cli, SynthMatchesLibrary) {
  fdtest::TempDir dir;
  const auto r = cli({"synth", "--out", s(dir.path()), "--days", "12", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LT(std::abs(j.at("residual_mm").get<double>()), 1e-9);

  SynthConfig sc;
  sc.n_days = 12;
  sc.seed = 5;
  const SynthData d = synth_generate(sc);
  const auto hf = read_csv(dir / "hourly_flow.csv", Resolution::Hourly);
  const auto hw = read_csv(dir / "hourly_weather.csv", Resolution::Hourly);
  EXPECT_EQ(hf.values(), d.hourly_flow.values());
  EXPECT_EQ(hw.values(), d.hourly_weather.values());
  EXPECT_EQ(hw.start(), d.hourly_weather.start());
  EXPECT_TRUE(fs::exists(dir / "run_config_synth.json"));
}

TEST(Cli, ConfigPrecedence) {
  fdtest::TempDir dir;
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"days": 9, "seed": 3})";
  ASSERT_EQ(cli({"synth", "--out", s(dir.path()), "--config", s(cfg)}).code, 0);
  EXPECT_EQ(read_csv(dir / "daily_flow.csv", Resolution::Daily).rows(), 9u);
  auto echoed = nlohmann::json::parse(fdtest::slurp(dir / "run_config_synth.json"));
  EXPECT_EQ(echoed.at("seed"), 3);

  ASSERT_EQ(cli({"synth", "--out", s(dir.path()), "--config", s(cfg), "--days", "8"}).code, 0);
  EXPECT_EQ(read_csv(dir / "daily_flow.csv", Resolution::Daily).rows(), 8u);
  echoed = nlohmann::json::parse(fdtest::slurp(dir / "run_config_synth.json"));
  EXPECT_EQ(echoed.at("days"), 8);
  EXPECT_EQ(echoed.at("seed"), 3);

  // the echoed file replays the run
  fdtest::TempDir other;
  ASSERT_EQ(cli({"synth", "--config", s(dir / "run_config_synth.json"), "--out",
                 s(other.path())}).code,
            0);
  EXPECT_EQ(fdtest::slurp(other / "hourly_flow.csv"), fdtest::slurp(dir / "hourly_flow.csv"));

  std::ofstream(cfg) << R"({"dayz": 9})";
  EXPECT_EQ(cli({"synth", "--out", s(dir.path()), "--config", s(cfg)}).code, kExitConfig);
  std::ofstream(cfg) << R"({"days": "many"})";
  EXPECT_EQ(cli({"synth", "--out", s(dir.path()), "--config", s(cfg)}).code, kExitConfig);
  EXPECT_EQ(cli({"synth", "--config", s(dir / "absent.json")}).code, kExitConfig);
}

TEST(Cli, PipelineMatchesLibrary) {
  fdtest::TempDir dir;
  const std::string out = s(dir.path());
  ASSERT_EQ(cli({"synth", "--out", out, "--days", "40"}).code, 0);
  const auto t = cli({"train", "--out", out, "--epochs", "5", "--hidden", "4",
                      "--ffn-hidden", "6,5"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto tj = nlohmann::json::parse(t.out);
  EXPECT_EQ(tj.at("windows"), 34);
  EXPECT_EQ(tj.at("train_windows"), 27);
  EXPECT_EQ(fdtest::slurp(dir / "loss_history.csv").rfind("epoch,loss1,loss2,total\n", 0), 0u);

  SynthConfig sc;
  sc.n_days = 40;
  const SynthData d = synth_generate(sc);
  const auto windows = build_windows(d.daily_weather, d.daily_flow, d.hourly_weather,
                                     &d.hourly_flow)
                           .windows;
  TrainConfig tc;
  tc.model.hidden_size = 4;
  tc.model.ffn_hidden = {6, 5};
  tc.epochs = 5;
  const auto lib = train(std::span(windows).first(27), tc);
  const Checkpoint ck = load_checkpoint(dir / "checkpoint.json");
  EXPECT_EQ(ck.model.params, lib.model.params);

  const auto serial = cli({"disagg", "--out", out, "--serial"});
  ASSERT_EQ(serial.code, 0) << serial.err;
  const auto dj = nlohmann::json::parse(serial.out);
  EXPECT_EQ(dj.at("days"), 7);
  EXPECT_LT(dj.at("max_mean_preservation_error").get<double>(), 1e-9);
  const auto serial_csv = fdtest::slurp(dir / "results.csv");
  ASSERT_EQ(cli({"disagg", "--out", out, "--threads", "3"}).code, 0);
  EXPECT_EQ(fdtest::slurp(dir / "results.csv"), serial_csv);

  const auto expect = disaggregate_serial(lib.model, std::span(windows).subspan(27));
  const auto got = read_results_csv(dir / "results.csv");
  ASSERT_EQ(got.size(), expect.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].day, expect[i].day);
    EXPECT_EQ(got[i].hourly_flow_corrected, expect[i].hourly_flow_corrected);
  }

  const auto ev = cli({"eval", "--out", out, "--figure-days", "2"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(dir / "figures")) {
    svgs += e.path().extension() == ".svg";
  }
  EXPECT_EQ(svgs, 2u);

  const auto self = cli({"eval", "--out", out, "--truth", "model"});
  ASSERT_EQ(self.code, 0);
  for (const auto& row : nlohmann::json::parse(self.out)) {
    if (row.at("method") == "model") {
      EXPECT_EQ(row.at("mae"), 0.0);
      EXPECT_EQ(row.at("rmse"), 0.0);
    }
  }
}

TEST(Cli, DataErrorIsExitFour) {
  fdtest::TempDir dir;
  ASSERT_EQ(cli({"synth", "--out", s(dir.path()), "--days", "8"}).code, 0);
  EXPECT_EQ(cli({"synth", "--out", s(dir.path()), "--days", "7"}).code, kExitConfig);
  const auto r = cli({"train", "--out", s(dir.path()), "--epochs", "1", "--context-days", "8"});
  EXPECT_EQ(r.code, kExitData) << r.err;
}

TEST(Cli, FetchOnlineThenOffline) {
  fdtest::TempDir dir;
  CannedTransport t;
  add_routes(t);
  const auto first = cli(fetch_args(dir.path()), &t, with_key());
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(t.calls(), 3u);
  EXPECT_EQ(read_csv(dir / "daily_flow.csv", Resolution::Daily).rows(), 2u);
  EXPECT_EQ(read_csv(dir / "hourly_weather.csv", Resolution::Hourly).rows(), 48u);

  auto args = fetch_args(dir.path());
  args.push_back("--offline");
  const auto second = cli(args, nullptr);  // no key needed either
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_NE(second.err.find("served from cache"), std::string::npos);
  EXPECT_EQ(second.out, [&] {
    std::string o = first.out;
    for (std::size_t p; (p = o.find("\"from_cache\":false")) != std::string::npos;) {
      o.replace(p, 18, "\"from_cache\":true");
    }
    return o;
  }());
}

TEST(Cli, FetchFailures) {
  fdtest::TempDir cold;
  auto offline = fetch_args(cold.path());
  offline.push_back("--offline");
  EXPECT_EQ(cli(offline, nullptr, with_key()).code, kExitNetwork);

  fdtest::TempDir a;
  CannedTransport t;
  add_routes(t);
  EXPECT_EQ(cli(fetch_args(a.path()), &t).code, kExitConfig);  // no key

  fdtest::TempDir b;
  CannedTransport bad;
  add_routes(bad, "hydapi_truncated.json");
  EXPECT_EQ(cli(fetch_args(b.path()), &bad, with_key()).code, kExitParse);

  fdtest::TempDir c;
  CannedTransport empty;  // everything 404s
  EXPECT_EQ(cli(fetch_args(c.path()), &empty, with_key()).code, kExitNetwork);

  fdtest::TempDir d;
  auto weird = fetch_args(d.path());
  weird.insert(weird.end(), {"--weather", "fog"});
  EXPECT_EQ(cli(weird, &t, with_key()).code, kExitConfig);
}
