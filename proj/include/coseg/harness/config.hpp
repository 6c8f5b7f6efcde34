#pragma once

// Experiment configuration: one training/evaluation run, read from a
// "key = value" text file (# starts a comment) and serialisable to JSON.

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coseg/metrics/metrics.hpp"
#include "coseg/model/network.hpp"

namespace coseg::harness {

using json = nlohmann::json;

/// Split whose loss drives the LR scheduler, early stopping and best-checkpoint selection.
enum class MonitorSplit { train, val, test };

inline std::string to_string(MonitorSplit m) {
  switch (m) {
    case MonitorSplit::train: return "train";
    case MonitorSplit::val: return "val";
    case MonitorSplit::test: return "test";
  }
  return "?";
}

inline MonitorSplit monitor_from_string(const std::string& s) {
  if (s == "train") return MonitorSplit::train;
  if (s == "val") return MonitorSplit::val;
  if (s == "test") return MonitorSplit::test;
  throw ConfigError("unknown monitor split '" + s + "' (train|val|test)");
}

struct ExperimentConfig {
  std::string name = "run";
  ModelConfig model;
  LossConfig loss;
  metrics::MetricConfig metric;
  double lr = 1e-4;
  int batch = 8;
  double plateau_factor = 0.5;
  int patience = 25;
  int early_stop_epochs = 25;
  MonitorSplit monitor = MonitorSplit::val;
  double val_fraction = 0.1;
  int runs = 3;
  std::uint64_t seed = 0;
  int max_epochs = 0;  // must be set explicitly
  int image_size = 256;

  void validate() const {
    model.validate();
    loss.validate();
    metric.validate();
    if (!(lr > 0)) throw ConfigError("lr must be > 0");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (!(plateau_factor > 0 && plateau_factor < 1)) throw ConfigError("plateau_factor must be in (0,1)");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (early_stop_epochs < 1) throw ConfigError("early_stop must be >= 1");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be set to a value >= 1");
    if (!(val_fraction > 0 && val_fraction < 1) && monitor == MonitorSplit::val)
      throw ConfigError("val_fraction must be in (0,1) when monitoring the validation split");
    if (image_size < 1 || image_size % model.backbone.total_stride() != 0)
      throw ConfigError("image_size must be a positive multiple of " + std::to_string(model.backbone.total_stride()));
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

template <class V>
std::string join(const std::vector<V>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace detail

/// Applies one key/value pair. Unknown keys are rejected.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  auto& bb = c.model.backbone;
  auto& sup = c.model.supervision;
  if (key == "name") c.name = value;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "max_epochs") c.max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "base_channels") bb.base_channels = static_cast<int>(parse_int(key, value));
  else if (key == "in_channels") bb.in_channels = static_cast<int>(parse_int(key, value));
  else if (key == "blocks_per_stage") bb.blocks_per_stage = static_cast<int>(parse_int(key, value));
  else if (key == "stride_plan") {
    const auto v = parse_list(key, value);
    if (v.size() != kStages) throw ConfigError("stride_plan needs 5 entries");
    for (int i = 0; i < kStages; ++i) bb.stride_plan[static_cast<std::size_t>(i)] = static_cast<int>(v[i]);
  } else if (key == "l") {
    sup.l = static_cast<int>(parse_int(key, value));
    sup.zeta.assign(static_cast<std::size_t>(std::clamp(sup.l, 0, kStages)), 1.0);
    sup.omega.assign(static_cast<std::size_t>(std::clamp(kStages - sup.l, 0, kStages)), 1.0);
  } else if (key == "esm") sup.esm = parse_bool(key, value);
  else if (key == "assm") sup.assm = parse_bool(key, value);
  else if (key == "esm_decoder") sup.esm_decoder = parse_bool(key, value);
  else if (key == "assm_decoder") sup.assm_decoder = parse_bool(key, value);
  else if (key == "zeta") sup.zeta = parse_list(key, value);
  else if (key == "omega") sup.omega = parse_list(key, value);
  else if (key == "afm") c.model.afm = parse_bool(key, value);
  else if (key == "fusion") {
    try {
      c.model.fusion = fusion_mode_from_string(value);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "theta") c.loss.theta = parse_double(key, value);
  else if (key == "beta") c.loss.beta = parse_double(key, value);
  else if (key == "epsilon") c.loss.epsilon = parse_double(key, value);
  else if (key == "normalized_multistage") c.loss.normalized_multistage = parse_bool(key, value);
  else if (key == "alpha") c.metric.alpha = parse_double(key, value);
  else if (key == "eval_threshold") c.metric.eval_threshold = parse_double(key, value);
  else if (key == "e_thresholds") c.metric.e_thresholds = static_cast<int>(parse_int(key, value));
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "batch") c.batch = static_cast<int>(parse_int(key, value));
  else if (key == "plateau_factor") c.plateau_factor = parse_double(key, value);
  else if (key == "patience") c.patience = static_cast<int>(parse_int(key, value));
  else if (key == "early_stop") c.early_stop_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "monitor") c.monitor = monitor_from_string(value);
  else if (key == "val_fraction") c.val_fraction = parse_double(key, value);
  else if (key == "runs") c.runs = static_cast<int>(parse_int(key, value));
  else if (key == "image_size") c.image_size = static_cast<int>(parse_int(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Parses "key = value" lines on top of `base`. Keys are applied in file order,
/// so "l" should precede explicit "zeta"/"omega".
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, std::move(base));
}

/// Renders a config in the same key = value format parse_config accepts.
inline std::string format_config(const ExperimentConfig& c) {
  using detail::join;
  const auto& bb = c.model.backbone;
  const auto& sup = c.model.supervision;
  std::ostringstream os;
  os.precision(17);
  os << "name = " << c.name << "\nseed = " << c.seed << "\nmax_epochs = " << c.max_epochs
     << "\nbase_channels = " << bb.base_channels << "\nin_channels = " << bb.in_channels
     << "\nblocks_per_stage = " << bb.blocks_per_stage
     << "\nstride_plan = " << join(std::vector<int>(bb.stride_plan.begin(), bb.stride_plan.end())) << "\nl = " << sup.l
     << "\nesm = " << std::boolalpha << sup.esm << "\nassm = " << sup.assm << "\nesm_decoder = " << sup.esm_decoder
     << "\nassm_decoder = " << sup.assm_decoder << "\nzeta = " << join(sup.zeta) << "\nomega = " << join(sup.omega)
     << "\nafm = " << c.model.afm << "\nfusion = " << to_string(c.model.fusion) << "\ntheta = " << c.loss.theta
     << "\nbeta = " << c.loss.beta << "\nepsilon = " << c.loss.epsilon
     << "\nnormalized_multistage = " << c.loss.normalized_multistage << "\nalpha = " << c.metric.alpha
     << "\neval_threshold = " << c.metric.eval_threshold << "\ne_thresholds = " << c.metric.e_thresholds
     << "\nlr = " << c.lr << "\nbatch = " << c.batch << "\nplateau_factor = " << c.plateau_factor
     << "\npatience = " << c.patience << "\nearly_stop = " << c.early_stop_epochs
     << "\nmonitor = " << to_string(c.monitor) << "\nval_fraction = " << c.val_fraction << "\nruns = " << c.runs
     << "\nimage_size = " << c.image_size << "\n";
  return os.str();
}

inline json model_to_json(const ModelConfig& m) {
  const auto& bb = m.backbone;
  const auto& sup = m.supervision;
  return json{{"backbone",
               {{"base_channels", bb.base_channels},
                {"in_channels", bb.in_channels},
                {"blocks_per_stage", bb.blocks_per_stage},
                {"stride_plan", std::vector<int>(bb.stride_plan.begin(), bb.stride_plan.end())}}},
              {"supervision",
               {{"l", sup.l},
                {"esm", sup.esm},
                {"assm", sup.assm},
                {"esm_decoder", sup.esm_decoder},
                {"assm_decoder", sup.assm_decoder},
                {"zeta", sup.zeta},
                {"omega", sup.omega}}},
              {"afm", m.afm},
              {"fusion", to_string(m.fusion)}};
}

inline ModelConfig model_from_json(const json& j) {
  try {
    ModelConfig m;
    const auto& b = j.at("backbone");
    m.backbone.base_channels = b.at("base_channels").get<int>();
    m.backbone.in_channels = b.at("in_channels").get<int>();
    m.backbone.blocks_per_stage = b.at("blocks_per_stage").get<int>();
    const auto plan = b.at("stride_plan").get<std::vector<int>>();
    if (plan.size() != kStages) throw ConfigError("stride_plan needs 5 entries");
    std::copy(plan.begin(), plan.end(), m.backbone.stride_plan.begin());
    const auto& s = j.at("supervision");
    m.supervision.l = s.at("l").get<int>();
    m.supervision.esm = s.at("esm").get<bool>();
    m.supervision.assm = s.at("assm").get<bool>();
    m.supervision.esm_decoder = s.at("esm_decoder").get<bool>();
    m.supervision.assm_decoder = s.at("assm_decoder").get<bool>();
    m.supervision.zeta = s.at("zeta").get<std::vector<double>>();
    m.supervision.omega = s.at("omega").get<std::vector<double>>();
    m.afm = j.at("afm").get<bool>();
    m.fusion = fusion_mode_from_string(j.at("fusion").get<std::string>());
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

inline json config_to_json(const ExperimentConfig& c) {
  return json{{"name", c.name},
              {"model", model_to_json(c.model)},
              {"loss",
               {{"theta", c.loss.theta},
                {"beta", c.loss.beta},
                {"epsilon", c.loss.epsilon},
                {"normalized_multistage", c.loss.normalized_multistage}}},
              {"metric",
               {{"alpha", c.metric.alpha},
                {"eval_threshold", c.metric.eval_threshold},
                {"e_thresholds", c.metric.e_thresholds}}},
              {"optimizer", {{"kind", "adam"}, {"lr", c.lr}, {"batch", c.batch}}},
              {"scheduler",
               {{"plateau_factor", c.plateau_factor}, {"patience", c.patience}, {"monitor", to_string(c.monitor)}}},
              {"early_stop_epochs", c.early_stop_epochs},
              {"val_fraction", c.val_fraction},
              {"runs", c.runs},
              {"seed", c.seed},
              {"max_epochs", c.max_epochs},
              {"image_size", c.image_size}};
}

}  // namespace coseg::harness
