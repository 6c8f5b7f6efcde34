// Command-line front end: synth, train, eval, ablate, compare-fusion, score.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "coseg/data/synth.hpp"
#include "coseg/harness/dump.hpp"
#include "coseg/harness/grid.hpp"

namespace fs = std::filesystem;
using namespace coseg;
using namespace coseg::harness;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string device = "cpu";
  std::string dump_stages;
  std::string dump_fusion;
};

void add_common(CLI::App* cmd, Common& c, bool needs_data = true) {
  cmd->add_option("-c,--config", c.config, "key = value config file");
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  auto* d = cmd->add_option("-d,--data", c.data, "dataset root (manifest.tsv, images/, masks/)");
  if (needs_data) d->required();
  cmd->add_option("-o,--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  cmd->add_option("--device", c.device, "compute device")->check(CLI::IsMember({"cpu"}));
}

void apply_overrides(ExperimentConfig& cfg, const Common& c) {
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (c.seed) cfg.seed = *c.seed;
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  apply_overrides(cfg, c);
  cfg.validate();
  return cfg;
}

DataSplits load_splits(const std::string& root, int size) {
  DataSplits d;
  d.train = data::load_dataset(root, "train", size, size);
  d.test = data::load_dataset(root, "test", size, size);
  if (d.train.empty()) throw data::DataError("no 'train' entries in " + root + "/manifest.tsv");
  if (d.test.empty()) throw data::DataError("no 'test' entries in " + root + "/manifest.tsv");
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Stage and fusion dumps for the first test sample.
void dump_diagnostics(Network<float>& net, const Samples& samples, const Common& c) {
  if (c.dump_stages.empty() && c.dump_fusion.empty()) return;
  NoGradGuard guard;
  net.eval();
  Batch b = make_batch(samples, {0});
  const auto out = net.forward(Var<float>(b.x));
  if (!c.dump_stages.empty()) dump_stages(c.dump_stages, out, "");
  if (!c.dump_fusion.empty()) dump_fusion(c.dump_fusion, out.fusion, "");
}

json epochs_to_json(const RunResult& r) {
  json a = json::array();
  for (const auto& e : r.epochs)
    a.push_back({{"epoch", e.epoch},
                 {"train_total", e.train.total},
                 {"train_edge", e.train.edge},
                 {"train_semantic", e.train.semantic},
                 {"train_fusion", e.train.fusion},
                 {"monitored", e.monitored},
                 {"lr", e.lr},
                 {"improved", e.improved}});
  return a;
}

int cmd_train(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const DataSplits data = load_splits(c.data, cfg.image_size);
  const fs::path out = c.out.empty() ? fs::path("runs") / cfg.name : fs::path(c.out);
  write_text(out / "config.txt", format_config(cfg));
  TrainOptions opt{out, &std::cerr};
  const ExperimentResult res = run_experiment(cfg, data, opt);
  json runs = json::array();
  for (const auto& r : res.runs)
    runs.push_back({{"best_checkpoint", r.best_checkpoint.string()},
                    {"best_epoch", r.best_epoch},
                    {"best_monitored_loss", r.best_monitored},
                    {"seconds", r.seconds},
                    {"epochs", epochs_to_json(r)},
                    {"test", report_to_json(r.report)}});
  const json report{{"config", config_to_json(cfg)}, {"summary", summary_to_json(res.summary)}, {"runs", runs}};
  write_text(out / "report.json", report.dump(2) + "\n");
  dump_diagnostics(*res.runs.front().model, data.test, c);
  std::cout << json{{"dice", res.summary.mean.dice}, {"dice_std", res.summary.std.dice}, {"out", out.string()}}.dump()
            << "\n";
  return 0;
}

int cmd_eval(const Common& c, const std::vector<std::string>& checkpoints, const std::string& split) {
  if (checkpoints.empty()) throw std::runtime_error("eval: at least one --checkpoint is required");
  // Without a config the model layout comes from the first checkpoint.
  ExperimentConfig cfg;
  if (!c.config.empty())
    cfg = load_config(c.config);
  else
    cfg.model = read_checkpoint(checkpoints.front()).model;
  apply_overrides(cfg, c);
  if (cfg.max_epochs < 1) cfg.max_epochs = 1;  // unused for evaluation
  cfg.validate();
  const Samples samples = data::load_dataset(c.data, split, cfg.image_size, cfg.image_size);
  if (samples.empty()) throw data::DataError("split '" + split + "' is empty in " + c.data);
  const MetricSummary s = evaluate_checkpoints({checkpoints.begin(), checkpoints.end()}, samples, cfg);
  json report = summary_to_json(s);
  report["split"] = split;
  report["checkpoints"] = checkpoints;
  if (!c.out.empty()) write_text(fs::path(c.out) / "eval.json", report.dump(2) + "\n");
  if (!c.dump_stages.empty() || !c.dump_fusion.empty()) {
    auto net = load_checkpoint<float>(checkpoints.front(), &cfg.model);
    dump_diagnostics(*net, samples, c);
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_grid(const Common& c, const std::string& which) {
  const ExperimentConfig cfg = resolve_config(c);
  const DataSplits data = load_splits(c.data, cfg.image_size);
  GridTable table = which == "table3"   ? split_grid(cfg)
                    : which == "table4" ? ablation_grid(cfg)
                                        : fusion_grid(cfg);
  const fs::path out = c.out.empty() ? fs::path("runs") / table.name : fs::path(c.out);
  run_grid(table, training_runner(data, out, &std::cerr), &std::cerr);
  write_text(out / (table.name + ".json"), grid_to_json(table).dump(2) + "\n");
  write_text(out / (table.name + ".csv"), grid_to_csv(table));
  std::cout << grid_to_csv(table);
  // Failed cells are recorded in the outputs; still signal them.
  for (const auto& r : table.rows)
    if (!r.error.empty()) return 2;
  return 0;
}

int cmd_score(const std::string& pred_dir, const std::string& gt_dir, const std::string& out, double threshold) {
  metrics::MetricConfig mc;
  mc.eval_threshold = threshold;
  std::vector<fs::path> gts;
  if (!fs::is_directory(gt_dir)) throw io::IoError("not a directory: " + gt_dir);
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && e.path().extension() == ".png") gts.push_back(e.path());
  std::sort(gts.begin(), gts.end());
  if (gts.empty()) throw io::IoError("no .png files in " + gt_dir);
  std::vector<Image<float>> preds;
  std::vector<BinaryMask> masks;
  std::vector<std::string> names;
  for (const auto& g : gts) {
    const fs::path p = fs::path(pred_dir) / g.filename();
    const io::GrayImage pi = io::read_png(p);
    const io::GrayImage gi = io::read_png(g);
    if (pi.pixels.height != gi.pixels.height || pi.pixels.width != gi.pixels.width)
      throw ShapeError("size mismatch between " + p.string() + " and " + g.string());
    Image<float> prob(pi.pixels.height, pi.pixels.width);
    for (std::size_t i = 0; i < prob.size(); ++i)
      prob.data[i] = static_cast<float>(pi.pixels.data[i] / pi.max_value());
    BinaryMask m(gi.pixels.height, gi.pixels.width);
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = gi.pixels.data[i] > 0 ? 1 : 0;
    preds.push_back(std::move(prob));
    masks.push_back(std::move(m));
    names.push_back(g.filename().string());
  }
  const auto report = metrics::evaluate_pairs(preds, masks, mc);
  json j = report_to_json(report);
  for (std::size_t i = 0; i < names.size(); ++i) j["per_slice"][i]["file"] = names[i];
  std::ostringstream csv;
  csv << std::setprecision(10) << "file,dice,sens,prec,mae,e_phi_mean,s_alpha\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& m = report.per_slice[i];
    csv << names[i] << ',' << m.dice << ',' << m.sens << ',' << m.prec << ',' << m.mae << ',' << m.e_phi_mean << ','
        << m.s_alpha << '\n';
  }
  csv << "mean," << report.dice << ',' << report.sens << ',' << report.prec << ',' << report.mae << ','
      << report.e_phi_mean << ',' << report.s_alpha << '\n';
  if (!out.empty()) {
    write_text(fs::path(out) / "score.json", j.dump(2) + "\n");
    write_text(fs::path(out) / "score.csv", csv.str());
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-supervised encoder-decoder segmentation for lung CT infection"};
  app.require_subcommand(1);

  Common common;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  int n = 100, size = 64, test_count = -1;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  synth->add_option("--n", n, "number of slices")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--size", size, "slice width/height")->check(CLI::Range(8, 4096));
  synth->add_option("--test", test_count, "slices assigned to the test split (default 10%)");
  synth->add_option("-o,--out", synth_out, "output root")->required();

  auto* train = app.add_subcommand("train", "train cfg.runs models and report test metrics");
  add_common(train, common);
  train->add_option("--dump-stages", common.dump_stages, "write per-stage predictions of the first test slice");
  train->add_option("--dump-fusion", common.dump_fusion, "write P1, 1-P1, Y1, S_p of the first test slice");

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on a split");
  add_common(eval, common);
  std::vector<std::string> checkpoints;
  std::string split = "test";
  eval->add_option("--checkpoint", checkpoints, "checkpoint file, repeatable (one per run)")->required();
  eval->add_option("--split", split, "manifest split to evaluate");
  eval->add_option("--dump-stages", common.dump_stages, "write per-stage predictions of the first slice");
  eval->add_option("--dump-fusion", common.dump_fusion, "write P1, 1-P1, Y1, S_p of the first slice");

  auto* ablate = app.add_subcommand("ablate", "run the split sweep or the module ablation grid");
  add_common(ablate, common);
  std::string grid = "table4";
  ablate->add_option("--grid", grid, "table3 (split sweep) or table4 (module toggles)")
      ->check(CLI::IsMember({"table3", "table4"}));

  auto* fusion = app.add_subcommand("compare-fusion", "compare add, concatenate and attention fusion");
  add_common(fusion, common);

  auto* score = app.add_subcommand("score", "score prediction images against ground-truth masks");
  std::string pred_dir, gt_dir, score_out;
  double threshold = 0.5;
  score->add_option("--pred", pred_dir, "directory of prediction images")->required();
  score->add_option("--gt", gt_dir, "directory of ground-truth masks (same file names)")->required();
  score->add_option("-o,--out", score_out, "directory for score.json / score.csv");
  score->add_option("--threshold", threshold, "binarisation threshold for Dice/Sens/Prec");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto pairs = data::synth_generate(n, synth_seed, size);
      const int tc = test_count >= 0 ? test_count : std::max(1, n / 10);
      if (tc >= n) throw data::DataError("--test must leave at least one training slice");
      data::write_dataset(synth_out, pairs, tc);
      std::cout << "wrote " << n << " slices (" << tc << " test) to " << synth_out << "\n";
      return 0;
    }
    if (train->parsed()) return cmd_train(common);
    if (eval->parsed()) return cmd_eval(common, checkpoints, split);
    if (ablate->parsed()) return cmd_grid(common, grid);
    if (fusion->parsed()) return cmd_grid(common, "table5");
    if (score->parsed()) return cmd_score(pred_dir, gt_dir, score_out, threshold);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
