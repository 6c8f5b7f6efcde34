#pragma once

// Experiment grids: supervision split sweep, module ablations and fusion
// comparison. Each cell is a full ExperimentConfig seeded independently of its
// position, so rows do not depend on grid order.

#include <functional>
#include <sstream>

#include "coseg/harness/reference_tables.hpp"
#include "coseg/harness/trainer.hpp"

namespace coseg::harness {

struct ModuleToggles {
  bool esm = false;
  bool assm = false;
  bool assm_decoder = false;  // ASSM*
  bool esm_decoder = false;   // ESM*
  bool afm = false;
  friend bool operator==(const ModuleToggles&, const ModuleToggles&) = default;
};

struct GridRow {
  std::string label;
  ExperimentConfig cfg;
  json reference;  // published values for this row ("mean±std" strings)
  std::optional<MetricSummary> summary;
  std::string error;  // set when the cell failed
};

struct GridTable {
  std::string name;
  std::vector<std::string> columns;  // config columns, in display order
  std::vector<GridRow> rows;
};

inline std::string toggles_label(const ModuleToggles& t) {
  std::vector<std::string> parts;
  if (t.esm) parts.emplace_back("ESM");
  if (t.assm) parts.emplace_back("ASSM");
  if (t.assm_decoder) parts.emplace_back("ASSM*");
  if (t.esm_decoder) parts.emplace_back("ESM*");
  if (t.afm) parts.emplace_back("AFM");
  if (parts.empty()) return "ResUNet";
  std::string s = "ResUNet";
  for (const auto& p : parts) s += "+" + p;
  return s;
}

inline ModuleToggles toggles_of(const ExperimentConfig& c) {
  const auto& s = c.model.supervision;
  return {s.esm, s.assm, s.assm_decoder, s.esm_decoder, c.model.afm};
}

inline ExperimentConfig with_toggles(ExperimentConfig c, const ModuleToggles& t) {
  auto& s = c.model.supervision;
  s.esm = t.esm;
  s.assm = t.assm;
  s.assm_decoder = t.assm_decoder;
  s.esm_decoder = t.esm_decoder;
  c.model.afm = t.afm;
  if (t.afm) c.model.fusion = FusionMode::attention;
  c.name = toggles_label(t);
  return c;
}

/// Split sweep l = 1..5 with encoder ESM + ASSM and attention fusion.
inline GridTable split_grid(const ExperimentConfig& base) {
  GridTable t{"table3", {"l", "ESM stages", "ASSM stages"}, {}};
  const auto& ref = reference_tables().at("table3").at("rows");
  for (int l = 1; l <= kStages; ++l) {
    ExperimentConfig c = base;
    const auto sup = SupervisionConfig::split(l, Side::encoder);
    c.model.supervision = sup;
    c.model.afm = true;
    c.model.fusion = FusionMode::attention;
    c.name = "ResUNet_C" + std::to_string(l) + "F";
    t.rows.push_back({c.name, c, ref.at(static_cast<std::size_t>(l - 1)), std::nullopt, ""});
  }
  return t;
}

/// The 17 toggle combinations of the module ablation, in published order.
inline std::vector<ModuleToggles> ablation_toggles() {
  std::vector<ModuleToggles> out;
  for (const auto& r : reference_tables().at("table4").at("rows"))
    out.push_back({r.at("ESM").get<bool>(), r.at("ASSM").get<bool>(), r.at("ASSM*").get<bool>(),
                   r.at("ESM*").get<bool>(), r.at("AFM").get<bool>()});
  return out;
}

/// Module ablation grid. The split l comes from `base` (default 2).
inline GridTable ablation_grid(const ExperimentConfig& base) {
  GridTable t{"table4", {"ESM", "ASSM", "ASSM*", "ESM*", "AFM"}, {}};
  const auto& ref = reference_tables().at("table4").at("rows");
  const auto toggles = ablation_toggles();
  for (std::size_t i = 0; i < toggles.size(); ++i) {
    ExperimentConfig c = with_toggles(base, toggles[i]);
    t.rows.push_back({c.name, c, ref.at(i), std::nullopt, ""});
  }
  return t;
}

/// Add / Concatenate / Attention fusion on a shared configuration and seed.
inline GridTable fusion_grid(const ExperimentConfig& base) {
  GridTable t{"table5", {"fusion"}, {}};
  const auto& ref = reference_tables().at("table5").at("rows");
  const std::array<std::pair<FusionMode, const char*>, 3> modes{
      {{FusionMode::add, "Add"}, {FusionMode::concatenate, "Concatenate"}, {FusionMode::attention, "Attention"}}};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    ExperimentConfig c = base;
    c.model.afm = true;
    c.model.fusion = modes[i].first;
    c.name = modes[i].second;
    t.rows.push_back({c.name, c, ref.at(i), std::nullopt, ""});
  }
  return t;
}

using CellRunner = std::function<MetricSummary(const ExperimentConfig&)>;

/// Runs every cell; a failing cell records its error and the grid continues.
inline void run_grid(GridTable& table, const CellRunner& runner, std::ostream* progress = nullptr) {
  if (table.rows.empty()) throw ConfigError("grid is empty");
  for (auto& row : table.rows) {
    if (progress) *progress << "[" << table.name << "] " << row.label << std::endl;
    try {
      row.summary = runner(row.cfg);
      row.error.clear();
    } catch (const std::exception& e) {
      row.summary.reset();
      row.error = e.what();
      if (progress) *progress << "  failed: " << row.error << std::endl;
    }
  }
}

/// Runner that trains cfg.runs models per cell and evaluates each on the test split.
inline CellRunner training_runner(const DataSplits& data, std::filesystem::path out_dir = {},
                                  std::ostream* progress = nullptr) {
  return [&data, out_dir, progress](const ExperimentConfig& cfg) {
    TrainOptions opt;
    if (!out_dir.empty()) opt.out_dir = out_dir / cfg.name;
    opt.progress = progress;
    return run_experiment(cfg, data, opt).summary;
  };
}

inline json config_columns(const GridTable& t, const GridRow& r) {
  const auto& c = r.cfg;
  const auto& s = c.model.supervision;
  json j = json::object();
  if (t.name == "table3") {
    j["l"] = s.l;
    j["ESM stages"] = detail::join(stage_range(1, s.l));
    j["ASSM stages"] = detail::join(stage_range(s.l + 1, kStages));
  } else if (t.name == "table4") {
    const auto tg = toggles_of(c);
    j["ESM"] = tg.esm;
    j["ASSM"] = tg.assm;
    j["ASSM*"] = tg.assm_decoder;
    j["ESM*"] = tg.esm_decoder;
    j["AFM"] = tg.afm;
  } else {
    j["fusion"] = to_string(c.model.fusion);
  }
  return j;
}

inline json grid_to_json(const GridTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row{{"label", r.label}, {"config", config_columns(t, r)}, {"seed", r.cfg.seed}, {"runs", r.cfg.runs}};
    if (r.summary) row["result"] = summary_to_json(*r.summary);
    if (!r.error.empty()) row["error"] = r.error;
    json ref = json::object();
    for (auto it = r.reference.begin(); it != r.reference.end(); ++it)
      if (it.value().is_string() && it.key() != "method") ref[it.key()] = it.value();
    row["reference"] = ref;
    rows.push_back(row);
  }
  return json{{"table", t.name}, {"columns", t.columns}, {"rows", rows}};
}

inline std::string percent(double mean, double sd) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100 * mean << "±" << 100 * sd;
  return os.str();
}

/// CSV: label, config columns, measured metrics (percent mean±std), reference columns, error.
inline std::string grid_to_csv(const GridTable& t) {
  static const std::array<const char*, 6> metric_names{"Dice", "Sens", "Prec", "MAE", "E_phi", "S_alpha"};
  std::ostringstream os;
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  os << "label";
  for (const auto& c : t.columns) os << ',' << c;
  for (const auto* m : metric_names) os << ',' << m;
  for (const auto* m : metric_names) os << ",ref_" << m;
  os << ",error\n";
  for (const auto& r : t.rows) {
    os << quote(r.label);
    const json cols = config_columns(t, r);
    for (const auto& c : t.columns) {
      const auto& v = cols.at(c);
      os << ',' << quote(v.is_string() ? v.get<std::string>() : v.dump());
    }
    if (r.summary) {
      const auto& m = r.summary->mean;
      const auto& s = r.summary->std;
      os << ',' << percent(m.dice, s.dice) << ',' << percent(m.sens, s.sens) << ',' << percent(m.prec, s.prec) << ','
         << percent(m.mae, s.mae) << ',' << percent(m.e_phi_mean, s.e_phi_mean) << ','
         << percent(m.s_alpha, s.s_alpha);
    } else {
      os << ",,,,,,";
    }
    for (const auto* m : metric_names) os << ',' << (r.reference.contains(m) ? r.reference.at(m).get<std::string>() : "");
    os << ',' << quote(r.error) << '\n';
  }
  return os.str();
}

}  // namespace coseg::harness
