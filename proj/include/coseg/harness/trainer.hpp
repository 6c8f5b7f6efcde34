#pragma once

// Training and evaluation driver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include "coseg/data/dataset.hpp"
#include "coseg/harness/checkpoint.hpp"
#include "coseg/nn/optim.hpp"

namespace coseg::harness {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Samples = std::vector<data::Sample>;

struct Batch {
  Tensor<float> x;
  Targets<float> targets;
};

inline Batch make_batch(const Samples& samples, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ShapeError("make_batch: empty batch");
  const auto& first = samples.at(idx[0]);
  const int h = first.x.height;
  const int w = first.x.width;
  const int n = static_cast<int>(idx.size());
  Batch b{Tensor<float>(Shape{n, 1, h, w}), {Tensor<float>(Shape{n, 1, h, w}), Tensor<float>(Shape{n, 1, h, w})}};
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < n; ++k) {
    const auto& s = samples.at(idx[static_cast<std::size_t>(k)]);
    if (s.x.height != h || s.x.width != w) throw ShapeError("make_batch: samples differ in size");
    for (std::size_t i = 0; i < plane; ++i) {
      b.x[k * plane + i] = s.x.data[i];
      b.targets.mask[k * plane + i] = s.y_mask.data[i];
      b.targets.edge[k * plane + i] = s.y_edge.data[i];
    }
  }
  return b;
}

inline std::vector<std::vector<std::size_t>> batches(std::vector<std::size_t> order, int batch) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch))
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch)));
  return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Seeded split of `all` into (train, val); val holds round(fraction * n) samples, at least one.
inline std::pair<Samples, Samples> carve_validation(const Samples& all, double fraction, std::uint64_t seed) {
  if (all.size() < 2) throw TrainingError("need at least 2 training samples to carve a validation split");
  auto order = iota_indices(all.size());
  std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto nval = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * all.size())), 1,
                                            all.size() - 1);
  Samples train, val;
  for (std::size_t i = 0; i < order.size(); ++i) (i < nval ? val : train).push_back(all[order[i]]);
  return {std::move(train), std::move(val)};
}

/// Mean joint loss over a split in eval mode.
inline LossBreakdown split_loss(Network<float>& net, const Samples& samples, const ExperimentConfig& cfg) {
  if (samples.empty()) throw TrainingError("cannot compute the loss of an empty split");
  NoGradGuard guard;
  const bool was_training = net.is_training();
  net.eval();
  LossBreakdown acc;
  for (const auto& idx : batches(iota_indices(samples.size()), cfg.batch)) {
    Batch b = make_batch(samples, idx);
    auto out = net.forward(Var<float>(b.x));
    const auto lb = net.loss(out, b.targets, cfg.loss).breakdown;
    const double k = static_cast<double>(idx.size());
    acc.edge += k * lb.edge;
    acc.semantic += k * lb.semantic;
    acc.fusion += k * lb.fusion;
    acc.total += k * lb.total;
  }
  net.train(was_training);
  const double n = static_cast<double>(samples.size());
  return {acc.edge / n, acc.semantic / n, acc.fusion / n, acc.total / n};
}

/// Fused probability maps for every sample (eval mode).
inline std::vector<Image<float>> predict(Network<float>& net, const Samples& samples, int batch) {
  NoGradGuard guard;
  const bool was_training = net.is_training();
  net.eval();
  std::vector<Image<float>> out;
  for (const auto& idx : batches(iota_indices(samples.size()), batch)) {
    Batch b = make_batch(samples, idx);
    auto res = net.forward(Var<float>(b.x));
    for (int k = 0; k < static_cast<int>(idx.size()); ++k) out.push_back(to_image(res.prob().value(), k, 0));
  }
  net.train(was_training);
  return out;
}

inline metrics::MetricReport evaluate_network(Network<float>& net, const Samples& samples,
                                              const ExperimentConfig& cfg) {
  if (samples.empty()) throw TrainingError("evaluation split is empty");
  const auto preds = predict(net, samples, cfg.batch);
  std::vector<BinaryMask> gts;
  for (const auto& s : samples) gts.push_back(s.y_mask);
  return metrics::evaluate_pairs(preds, gts, cfg.metric);
}

struct StepRecord {
  long step = 0;
  int epoch = 0;
  LossBreakdown loss;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;  // mean of the step losses
  double monitored = 0;
  double lr = 0;
  bool improved = false;
};

struct RunResult {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::filesystem::path best_checkpoint;  // empty when no output directory was given
  int best_epoch = -1;
  double best_monitored = 0;
  metrics::MetricReport report;  // best weights on the test split
  double seconds = 0;
  std::shared_ptr<Network<float>> model;  // best weights
};

struct DataSplits {
  Samples train;
  Samples test;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // checkpoint + step log; skipped if empty
  std::ostream* progress = nullptr;
};

inline void write_step_header(std::ostream& os) { os << "step,epoch,edge,semantic,fusion,total\n"; }

inline void write_step(std::ostream& os, const StepRecord& r) {
  os << r.step << ',' << r.epoch << ',' << std::setprecision(9) << r.loss.edge << ',' << r.loss.semantic << ','
     << r.loss.fusion << ',' << r.loss.total << '\n';
}

/// One training run: Adam on the joint loss, plateau LR halving and early
/// stopping on the monitored split, best weights kept (and saved if out_dir is set).
inline RunResult train(const ExperimentConfig& cfg, const DataSplits& data, const TrainOptions& opt = {}) {
  cfg.validate();
  if (data.train.empty()) throw TrainingError("training split is empty");
  if (data.test.empty()) throw TrainingError("test split is empty");
  const auto t0 = std::chrono::steady_clock::now();

  Samples train_set = data.train;
  Samples val_set;
  if (cfg.monitor == MonitorSplit::val) std::tie(train_set, val_set) = carve_validation(data.train, cfg.val_fraction, cfg.seed);
  const Samples& monitor_set =
      cfg.monitor == MonitorSplit::train ? train_set : (cfg.monitor == MonitorSplit::val ? val_set : data.test);

  RunResult result;
  result.model = std::make_shared<Network<float>>(cfg.model, cfg.seed);
  Network<float>& net = *result.model;
  nn::Adam<float> adam(net.parameters(), {.lr = cfg.lr});
  nn::PlateauScheduler scheduler(cfg.plateau_factor, cfg.patience);
  nn::EarlyStopping stopper(cfg.early_stop_epochs);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::ofstream log;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    log.open(opt.out_dir / "steps.csv");
    if (!log) throw TrainingError("cannot write " + (opt.out_dir / "steps.csv").string());
    write_step_header(log);
    result.best_checkpoint = opt.out_dir / "best.ckpt";
  }

  StateSnapshot<float> best_state;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    net.train();
    auto order = iota_indices(train_set.size());
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord er;
    er.epoch = epoch;
    er.lr = adam.lr();
    int nsteps = 0;
    for (const auto& idx : batches(order, cfg.batch)) {
      Batch b = make_batch(train_set, idx);
      adam.zero_grad();
      auto out = net.forward(Var<float>(b.x));
      auto terms = net.loss(out, b.targets, cfg.loss);
      if (!std::isfinite(terms.breakdown.total))
        throw TrainingError("loss diverged (non-finite) at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step + 1));
      backward(terms.total);
      adam.step();
      StepRecord sr{++step, epoch, terms.breakdown};
      if (log) write_step(log, sr);
      result.steps.push_back(sr);
      er.train.edge += sr.loss.edge;
      er.train.semantic += sr.loss.semantic;
      er.train.fusion += sr.loss.fusion;
      er.train.total += sr.loss.total;
      ++nsteps;
    }
    er.train.edge /= nsteps;
    er.train.semantic /= nsteps;
    er.train.fusion /= nsteps;
    er.train.total /= nsteps;

    er.monitored = split_loss(net, monitor_set, cfg).total;
    if (!std::isfinite(er.monitored)) throw TrainingError("monitored loss diverged at epoch " + std::to_string(epoch));
    er.improved = stopper.update(er.monitored);
    if (er.improved) {
      best_state = snapshot(net);
      result.best_epoch = epoch;
      result.best_monitored = er.monitored;
      if (!result.best_checkpoint.empty())
        save_checkpoint(result.best_checkpoint, net, json{{"epoch", epoch}, {"monitored_loss", er.monitored}});
    }
    adam.set_lr(scheduler.step(er.monitored, adam.lr()));
    result.epochs.push_back(er);
    if (opt.progress)
      *opt.progress << "epoch " << epoch << " train " << er.train.total << " monitored(" << to_string(cfg.monitor)
                    << ") " << er.monitored << " lr " << er.lr << (er.improved ? " *" : "") << std::endl;
    if (stopper.should_stop()) break;
  }

  restore(net, best_state);
  net.eval();
  result.report = evaluate_network(net, data.test, cfg);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Mean and spread of the aggregate metrics over several runs.
struct MetricSummary {
  metrics::SliceMetrics mean;
  metrics::SliceMetrics std;  // sample standard deviation (0 for a single run)
  std::vector<metrics::MetricReport> runs;
};

inline MetricSummary summarize(const std::vector<metrics::MetricReport>& reports) {
  if (reports.empty()) throw TrainingError("nothing to summarize");
  MetricSummary s;
  s.runs = reports;
  const double n = static_cast<double>(reports.size());
  auto fields = [](auto& m) {
    return std::array<decltype(&m.dice), 6>{&m.dice, &m.sens, &m.prec, &m.mae, &m.e_phi_mean, &m.s_alpha};
  };
  auto mean_f = fields(s.mean);
  auto std_f = fields(s.std);
  for (std::size_t f = 0; f < 6; ++f) {
    double sum = 0;
    for (const auto& r : reports) sum += *fields(r)[f];
    const double m = sum / n;
    double sq = 0;
    for (const auto& r : reports) sq += (*fields(r)[f] - m) * (*fields(r)[f] - m);
    *mean_f[f] = m;
    *std_f[f] = reports.size() > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  }
  return s;
}

struct ExperimentResult {
  std::vector<RunResult> runs;
  MetricSummary summary;
};

/// cfg.runs independent runs; run r uses seed cfg.seed + r.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const DataSplits& data,
                                       const TrainOptions& opt = {}) {
  cfg.validate();
  ExperimentResult res;
  std::vector<metrics::MetricReport> reports;
  for (int r = 0; r < cfg.runs; ++r) {
    ExperimentConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    TrainOptions o = opt;
    if (!opt.out_dir.empty()) o.out_dir = opt.out_dir / ("run" + std::to_string(r));
    res.runs.push_back(train(c, data, o));
    reports.push_back(res.runs.back().report);
  }
  res.summary = summarize(reports);
  return res;
}

/// Evaluates saved checkpoints on a split; the model config must match `cfg.model`.
inline MetricSummary evaluate_checkpoints(const std::vector<std::filesystem::path>& checkpoints, const Samples& data,
                                          const ExperimentConfig& cfg) {
  if (checkpoints.empty()) throw TrainingError("no checkpoints given");
  if (data.empty()) throw TrainingError("evaluation split is empty");
  std::vector<metrics::MetricReport> reports;
  for (const auto& path : checkpoints) {
    auto net = load_checkpoint<float>(path, &cfg.model);
    reports.push_back(evaluate_network(*net, data, cfg));
  }
  return summarize(reports);
}

inline json metrics_to_json(const metrics::SliceMetrics& m) {
  return json{{"dice", m.dice}, {"sens", m.sens}, {"prec", m.prec},
              {"mae", m.mae},   {"e_phi_mean", m.e_phi_mean}, {"s_alpha", m.s_alpha}};
}

inline json report_to_json(const metrics::MetricReport& r) {
  json j = metrics_to_json({r.dice, r.sens, r.prec, r.mae, r.e_phi_mean, r.s_alpha});
  json slices = json::array();
  for (const auto& s : r.per_slice) slices.push_back(metrics_to_json(s));
  j["per_slice"] = slices;
  return j;
}

inline json summary_to_json(const MetricSummary& s) {
  json runs = json::array();
  for (const auto& r : s.runs)
    runs.push_back(metrics_to_json({r.dice, r.sens, r.prec, r.mae, r.e_phi_mean, r.s_alpha}));
  return json{{"mean", metrics_to_json(s.mean)}, {"std", metrics_to_json(s.std)}, {"runs", runs}};
}

}  // namespace coseg::harness
