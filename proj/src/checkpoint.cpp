// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "flowdisagg-checkpoint";
constexpr int kVersion = 1;

json scaler_json(const Scaler& s) {
  return {{"names", s.names()}, {"mean", s.mean()}, {"std", s.stddev()}};
}

Scaler scaler_from(const json& j) {
  return Scaler(j.at("names").get<std::vector<std::string>>(),
                j.at("mean").get<std::vector<double>>(),
                j.at("std").get<std::vector<double>>());
}

json tensors_json(const std::vector<nn::ConstTensorView>& tensors) {
  json out = json::object();
  for (const auto& t : tensors) {
    out[t.name] = std::vector<double>(t.values.begin(), t.values.end());
  }
  return out;
}

void tensors_from(const json& j, const std::vector<nn::TensorView>& tensors) {
  for (const auto& t : tensors) {
    if (!j.contains(t.name)) {
      throw ParseError("checkpoint is missing tensor", "parameters." + t.name);
    }
    const auto values = j.at(t.name).get<std::vector<double>>();
    if (values.size() != t.values.size()) {
      throw ParseError("tensor has " + std::to_string(values.size()) +
                           " values, expected " +
                           std::to_string(t.values.size()),
                       "parameters." + t.name);
    }
    std::copy(values.begin(), values.end(), t.values.begin());
  }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const DisaggModel& m = ckpt.model;
  const ModelConfig& c = m.config;
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["seed"] = m.seed;
  j["train_fraction"] = ckpt.train_fraction;
  j["config"] = {{"weather_names", c.weather_names},
                 {"context_days", c.context_days},
                 {"hidden_size", c.hidden_size},
                 {"ffn_hidden", c.ffn_hidden},
                 {"activation", nn::to_string(c.activation)},
                 {"loss1_weight", c.loss1_weight},
                 {"loss2_weight", c.loss2_weight},
                 {"clamp_negative", c.clamp_negative}};
  j["dimensions"] = {{"lstm_input", m.params.lstm.input_size},
                     {"lstm_hidden", m.params.lstm.hidden_size},
                     {"ffn_sizes", m.params.ffn.sizes}};
  j["parameters"] = tensors_json(m.params.tensors());
  j["scalers"] = {{"daily_weather", scaler_json(m.daily_weather_scaler)},
                  {"hourly_weather", scaler_json(m.hourly_weather_scaler)},
                  {"flow", scaler_json(m.flow_scaler)}};
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    const auto names = m.params.tensors();
    json first = json::object();
    json second = json::object();
    for (std::size_t k = 0; k < names.size() && k < o.first_moment.size();
         ++k) {
      first[names[k].name] = o.first_moment[k];
      second[names[k].name] = o.second_moment[k];
    }
    j["optimizer"] = {{"algorithm", "adam"},
                      {"learning_rate", o.learning_rate},
                      {"beta1", o.beta1},
                      {"beta2", o.beta2},
                      {"epsilon", o.epsilon},
                      {"step", o.step},
                      {"first_moment", first},
                      {"second_moment", second}};
  }
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(),
                     "$");
  }
  try {
    if (j.value("format", "") != kFormat) {
      throw ParseError("not a flowdisagg checkpoint", "format");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw ParseError("unsupported checkpoint version", "version");
    }
    Checkpoint ckpt;
    ckpt.train_fraction = j.value("train_fraction", 0.8);
    DisaggModel& m = ckpt.model;
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& c = j.at("config");
    m.config.weather_names =
        c.at("weather_names").get<std::vector<std::string>>();
    m.config.context_days = c.at("context_days").get<std::size_t>();
    m.config.hidden_size = c.at("hidden_size").get<std::size_t>();
    m.config.ffn_hidden = c.at("ffn_hidden").get<std::vector<std::size_t>>();
    m.config.activation =
        nn::activation_from_string(c.at("activation").get<std::string>());
    m.config.loss1_weight = c.at("loss1_weight").get<double>();
    m.config.loss2_weight = c.at("loss2_weight").get<double>();
    m.config.clamp_negative = c.at("clamp_negative").get<bool>();

    const json& d = j.at("dimensions");
    if (d.at("lstm_input").get<std::size_t>() !=
            m.config.weather_count() + 1 ||
        d.at("lstm_hidden").get<std::size_t>() != m.config.hidden_size ||
        d.at("ffn_sizes").get<std::vector<std::size_t>>() !=
            m.config.ffn_sizes()) {
      throw ParseError("dimensions disagree with config", "dimensions");
    }
    m.params = NetworkParams::zeros(m.config);
    tensors_from(j.at("parameters"), m.params.tensors());

    const json& s = j.at("scalers");
    m.daily_weather_scaler = scaler_from(s.at("daily_weather"));
    m.hourly_weather_scaler = scaler_from(s.at("hourly_weather"));
    m.flow_scaler = scaler_from(s.at("flow"));
    m.validate();

    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      if (o.at("algorithm").get<std::string>() != "adam") {
        throw ParseError("unknown optimizer", "optimizer.algorithm");
      }
      nn::AdamState st;
      st.learning_rate = o.at("learning_rate").get<double>();
      st.beta1 = o.at("beta1").get<double>();
      st.beta2 = o.at("beta2").get<double>();
      st.epsilon = o.at("epsilon").get<double>();
      st.step = o.at("step").get<std::uint64_t>();
      for (const auto& t : std::as_const(m.params).tensors()) {
        auto m1 = o.at("first_moment").at(t.name).get<std::vector<double>>();
        auto m2 = o.at("second_moment").at(t.name).get<std::vector<double>>();
        if (m1.size() != t.values.size() || m2.size() != t.values.size()) {
          throw ParseError("moment shape mismatch", "optimizer." + t.name);
        }
        st.first_moment.push_back(std::move(m1));
        st.second_moment.push_back(std::move(m2));
      }
      ckpt.optimizer = std::move(st);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), "$");
  }
}

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt);
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace flowdisagg
