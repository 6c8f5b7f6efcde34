// Acceptance run: prints one PASS/FAIL line per criterion, exits non-zero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/common.hpp"
#include "../support/gradcheck.hpp"
#include "coseg/data/synth.hpp"
#include "coseg/harness/grid.hpp"

using namespace coseg;
using namespace coseg::harness;
using testing_support::as_tensor;
using testing_support::random_binary_tensor;
using testing_support::random_tensor;
using testing_support::to_mask;
using testing_support::to_soft;

namespace {

// Collects failed sub-checks of one criterion.
struct Report {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ----------------------------------------------------------------- 1. gradients

template <class T>
std::vector<Var<T>> feature_maps(const BackboneConfig& bb, int top, std::uint64_t seed, bool grad) {
  std::vector<Var<T>> maps;
  for (int i = 1; i <= kStages; ++i) {
    const int s = std::max(top >> (i - 1), 1);
    maps.emplace_back(random_tensor<T>(Shape{1, bb.channels(i), s, s}, seed + i), grad);
  }
  return maps;
}

std::vector<Tensor<double>> values_of(const std::vector<Var<double>>& v) {
  std::vector<Tensor<double>> out;
  for (const auto& x : v) out.push_back(x.value());
  return out;
}

std::vector<Var<double>> wrap(const std::vector<Tensor<double>>& t) {
  std::vector<Var<double>> out;
  for (const auto& x : t) out.emplace_back(x);
  return out;
}

// Relative error of the float gradient against double finite differences, pooled over every map.
template <class F>
double map_gradient_error(std::vector<Var<float>>& vf, std::vector<Tensor<double>>& td, F&& f) {
  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < td.size(); ++i) {
    const auto idx = gradcheck::indices(td[i].size());
    const auto a = gradcheck::pick(vf[i].grad(), idx);
    const auto n = gradcheck::numeric_piecewise(td[i], idx, [&] { return f(wrap(td)); });
    analytic.insert(analytic.end(), a.begin(), a.end());
    numeric.insert(numeric.end(), n.begin(), n.end());
  }
  return gradcheck::relative_error(analytic, numeric);
}

Report criterion_gradients() {
  Report r;
  const double tol = 1e-3;
  const LossConfig lc;
  BackboneConfig bb;
  bb.base_channels = 2;
  const int side = 8;

  const auto mask64 = random_binary_tensor<double>(Shape{1, 1, side, side}, 5, 0.4);
  BinaryMask mask_img(side, side);
  for (std::size_t k = 0; k < mask_img.size(); ++k) mask_img.data[k] = mask64[k] > 0.5 ? 1 : 0;
  const auto edge64 = as_tensor<double>(edge_targets_from_mask(mask_img));
  const auto maskf = mask64.cast<float>();
  const auto edgef = edge64.cast<float>();
  const std::vector<double> zeta{1.0, 0.7}, omega{1.0, 0.5, 1.5};

  {  // dice_loss
    const auto g = random_binary_tensor<double>(Shape{2, 1, side, side}, 1);
    Tensor<double> p = random_tensor<double>(Shape{2, 1, side, side}, 2, 0.05, 0.95);
    Var<float> pf(p.cast<float>(), true);
    backward(dice_loss(pf, g.cast<float>(), lc.epsilon));
    const auto idx = gradcheck::indices(p.size());
    const auto num = gradcheck::numeric(p, idx, [&] { return dice_loss(Var<double>(p), g, lc.epsilon).item(); });
    const double e = gradcheck::relative_error(gradcheck::pick(pf.grad(), idx), num);
    r.note("dice_loss " + fmt(e));
    r.expect(e <= tol, "dice_loss gradient error " + fmt(e));
  }

  nn::Initializer init_f(3), init_d(3);
  SupervisedHeads<float> esm_f(stage_range(1, 2), Side::encoder, bb, init_f);
  SupervisedHeads<float> assm_f(stage_range(3, 5), Side::encoder, bb, init_f);
  FusionModule<float> fuse_f(FusionMode::attention, bb, init_f);
  SupervisedHeads<double> esm_d(stage_range(1, 2), Side::encoder, bb, init_d);
  SupervisedHeads<double> assm_d(stage_range(3, 5), Side::encoder, bb, init_d);
  FusionModule<double> fuse_d(FusionMode::attention, bb, init_d);
  nn::copy_state(esm_f, esm_d);
  nn::copy_state(assm_f, assm_d);
  nn::copy_state(fuse_f, fuse_d);

  {  // edge head
    auto vf = feature_maps<float>(bb, side, 10, true);
    auto td = values_of(feature_maps<double>(bb, side, 10, false));
    backward(edge_head(esm_f, vf, edgef, zeta, lc).loss);
    const double e = map_gradient_error(
        vf, td, [&](const std::vector<Var<double>>& v) { return edge_head(esm_d, v, edge64, zeta, lc).loss.item(); });
    r.note("edge_head " + fmt(e));
    r.expect(e <= tol, "edge_head gradient error " + fmt(e));
  }
  {  // semantic head
    auto vf = feature_maps<float>(bb, side, 20, true);
    auto td = values_of(feature_maps<double>(bb, side, 20, false));
    backward(semantic_head(assm_f, vf, maskf, 2, omega, lc).loss);
    const double e = map_gradient_error(vf, td, [&](const std::vector<Var<double>>& v) {
      return semantic_head(assm_d, v, mask64, 2, omega, lc).loss.item();
    });
    r.note("semantic_head " + fmt(e));
    r.expect(e <= tol, "semantic_head gradient error " + fmt(e));
  }
  {  // fuse, every mode, through the fusion Dice term
    for (auto mode : {FusionMode::attention, FusionMode::add, FusionMode::concatenate}) {
      nn::Initializer i_f(4), i_d(4);
      FusionModule<float> ff(mode, bb, i_f);
      FusionModule<double> fd(mode, bb, i_d);
      nn::copy_state(ff, fd);
      auto vf = feature_maps<float>(bb, side, 30, true);
      auto td = values_of(feature_maps<double>(bb, side, 30, false));
      backward(dice_loss(ff(vf, side, side).prob, maskf, lc.epsilon));
      const double e = map_gradient_error(vf, td, [&](const std::vector<Var<double>>& v) {
        return dice_loss(fd(v, side, side).prob, mask64, lc.epsilon).item();
      });
      r.note("fuse/" + to_string(mode) + " " + fmt(e));
      r.expect(e <= tol, "fuse (" + to_string(mode) + ") gradient error " + fmt(e));
    }
  }
  {  // joint objective on encoder + decoder maps
    auto enc_f = feature_maps<float>(bb, side, 40, true);
    auto dec_f = feature_maps<float>(bb, side, 50, true);
    auto enc_d = values_of(feature_maps<double>(bb, side, 40, false));
    auto dec_d = values_of(feature_maps<double>(bb, side, 50, false));
    auto joint = [&](auto& esm, auto& assm, auto& fuse, const auto& enc, const auto& dec, const auto& m,
                     const auto& e) {
      using T = testing_support::scalar_t<decltype(enc[0])>;
      return ops::weighted_sum(
          std::vector<Var<T>>{edge_head(esm, enc, e, zeta, lc).loss, semantic_head(assm, enc, m, 2, omega, lc).loss,
                              dice_loss(fuse(dec, side, side).prob, m, lc.epsilon)},
          std::vector<T>{static_cast<T>(lc.theta), static_cast<T>(lc.beta), T(1)});
    };
    backward(joint(esm_f, assm_f, fuse_f, enc_f, dec_f, maskf, edgef));
    std::vector<Var<float>> all_f = enc_f;
    all_f.insert(all_f.end(), dec_f.begin(), dec_f.end());
    std::vector<Tensor<double>> all_d = enc_d;
    all_d.insert(all_d.end(), dec_d.begin(), dec_d.end());
    const double e = map_gradient_error(all_f, all_d, [&](const std::vector<Var<double>>& v) {
      const std::vector<Var<double>> enc(v.begin(), v.begin() + kStages), dec(v.begin() + kStages, v.end());
      return joint(esm_d, assm_d, fuse_d, enc, dec, mask64, edge64).item();
    });
    r.note("L_total(maps) " + fmt(e));
    r.expect(e <= tol, "L_total gradient on feature maps error " + fmt(e));
  }
  {  // end to end: input image through the whole network at the smallest admissible size
    ModelConfig mc;
    mc.backbone.base_channels = 2;
    Network<float> nf(mc, 6);
    Network<double> nd(mc, 0);
    nn::copy_state(nf, nd);
    nf.eval();
    nd.eval();
    const int s = mc.backbone.total_stride();
    const auto g = random_binary_tensor<double>(Shape{1, 1, s, s}, 7, 0.4);
    BinaryMask gm(s, s);
    for (std::size_t k = 0; k < gm.size(); ++k) gm.data[k] = g[k] > 0.5 ? 1 : 0;
    const Targets<double> td{g, as_tensor<double>(edge_targets_from_mask(gm))};
    const Targets<float> tf{td.mask.cast<float>(), td.edge.cast<float>()};
    Tensor<double> x = random_tensor<double>(Shape{1, 1, s, s}, 8);
    Var<float> xf(x.cast<float>(), true);
    backward(nf.loss(nf.forward(xf), tf, lc).total);
    const auto idx = gradcheck::indices(x.size(), 64, 2);
    const auto num = gradcheck::numeric_piecewise(
        x, idx, [&] { return nd.loss(nd.forward(Var<double>(x)), td, lc).total.item(); });
    const double e = gradcheck::relative_error(gradcheck::pick(xf.grad(), idx), num);
    r.note("L_total(input " + std::to_string(s) + "x" + std::to_string(s) + ") " + fmt(e));
    r.expect(e <= tol, "end-to-end L_total gradient error " + fmt(e));
  }
  return r;
}

// ----------------------------------------------------------------- 2. metrics

Report criterion_metrics() {
  Report r;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> side(1, 16);
  std::uniform_real_distribution<double> dens(0, 1);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const int h = side(rng), w = side(rng);
    const auto sg = oracle::random_binary(rng, h, w, dens(rng));
    const auto gg = oracle::random_binary(rng, h, w, dens(rng));
    const auto s = to_mask(sg), g = to_mask(gg);
    if (metrics::dice(s, g) != oracle::dice(sg, gg)) ++mismatches;
    if (metrics::sensitivity(s, g) != oracle::sens(sg, gg)) ++mismatches;
    if (metrics::precision(s, g) != oracle::prec(sg, gg)) ++mismatches;
    if (metrics::mae(to_soft(sg), g) != oracle::mae(sg, gg)) ++mismatches;
  }
  r.expect(mismatches == 0, std::to_string(mismatches) + " overlap/MAE mismatches on 200 pairs");

  double worst_s = 0, worst_e = 0;
  std::uniform_int_distribution<int> side2(2, 20);
  std::uniform_real_distribution<double> dens2(0.05, 0.9);
  for (int i = 0; i < 50; ++i) {
    const int h = side2(rng), w = side2(rng);
    const auto gg = oracle::random_binary(rng, h, w, dens2(rng));
    const auto sg = oracle::random_soft(rng, h, w);
    worst_s = std::max(worst_s, std::fabs(metrics::s_measure(to_soft(sg), to_mask(gg)) - oracle::s_measure(sg, gg, 0.5)));
    worst_e = std::max(worst_e, std::fabs(metrics::e_measure_mean(to_soft(sg), to_mask(gg)) - oracle::e_measure_mean(sg, gg)));
  }
  r.note("max |dS| " + fmt(worst_s) + ", max |dE| " + fmt(worst_e));
  r.expect(worst_s <= 1e-6, "S_alpha deviates by " + fmt(worst_s));
  r.expect(worst_e <= 1e-6, "mean E_phi deviates by " + fmt(worst_e));

  for (int i = 0; i < 10; ++i) {
    const auto gg = oracle::random_binary(rng, 12, 9, 0.35);
    const auto g = to_mask(gg);
    const auto s = to_soft(gg);
    const auto rep = metrics::evaluate_pairs(std::vector<Image<double>>{s}, std::vector<BinaryMask>{g}, {});
    r.expect(rep.dice == 1 && rep.sens == 1 && rep.prec == 1, "perfect prediction overlap != 1");
    r.expect(rep.mae == 0, "perfect prediction MAE != 0");
    r.expect(std::fabs(rep.s_alpha - 1) <= 1e-6, "perfect prediction S_alpha " + fmt(rep.s_alpha));
    r.expect(std::fabs(rep.e_phi_mean - 1) <= 1e-6, "perfect prediction E_phi " + fmt(rep.e_phi_mean));
  }
  return r;
}

// ----------------------------------------------------------------- 3. fusion algebra

Report criterion_fusion() {
  Report r;
  BackboneConfig bb;
  bb.base_channels = 2;
  {
    nn::Initializer init(9);
    FusionModule<float> fuse(FusionMode::attention, bb, init);
    const auto out = fuse(feature_maps<float>(bb, 16, 70, false), 16, 16);
    double worst = 0;
    for (std::size_t k = 0; k < out.logit.value().size(); ++k) {
      const double z1 = out.z1().value()[k], p1 = out.p1().value()[k];
      double aux = 0;
      for (int i = 1; i < kStages; ++i) aux += double(out.blocks[i].conf.value()[k]) * out.blocks[i].logit.value()[k];
      const double f = z1 + p1 * z1 + (1 - p1) * aux;
      worst = std::max(worst, std::fabs(out.logit.value()[k] - f) / std::max(1.0, std::fabs(f)));
    }
    r.note("gate identity (float) " + fmt(worst));
    r.expect(worst <= 1e-6, "gate identity off by " + fmt(worst));
  }
  {
    nn::Initializer init(10);
    FusionModule<double> fuse(FusionMode::attention, bb, init);
    fuse.block(1).score().bias().mutable_value().fill(40);
    const auto out = fuse(feature_maps<double>(bb, 16, 80, false), 16, 16);
    double worst = 0;
    for (std::size_t k = 0; k < out.logit.value().size(); ++k) {
      double aux = 0;
      for (int i = 1; i < kStages; ++i) aux += out.blocks[i].gated.value()[k];
      worst = std::max(worst, std::fabs((1 - out.p1().value()[k]) * aux));
    }
    r.note("auxiliary term at P1->1 " + fmt(worst));
    r.expect(worst <= 1e-8, "auxiliary term with saturated P1 is " + fmt(worst));
  }
  return r;
}

// ----------------------------------------------------------------- 4. loss constants

Report criterion_losses() {
  Report r;
  const LossConfig lc;
  const SupervisionConfig sc;
  r.expect(lc.theta == 0.8 && lc.beta == 0.4, "theta/beta defaults");
  r.expect(sc.l == 2, "default split l");
  r.expect(sc.zeta == std::vector<double>{1, 1} && sc.omega == std::vector<double>{1, 1, 1}, "zeta/omega defaults");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const double e = u(rng), s = u(rng), f = u(rng);
    const auto b = total_loss(e, s, f, lc);
    r.expect(b.total == 0.8 * e + 0.4 * s + f, "total_loss recomputation not exact");
  }

  // network-level breakdown agrees with the differentiable total
  ModelConfig mc;
  mc.backbone.base_channels = 2;
  Network<double> net(mc, 1);
  const auto x = random_tensor<double>(Shape{2, 1, 16, 16}, 3);
  const auto g = random_binary_tensor<double>(Shape{2, 1, 16, 16}, 4, 0.3);
  const auto terms = net.loss(net.forward(Var<double>(x)), Targets<double>{g, g}, lc);
  const auto& bd = terms.breakdown;
  r.expect(bd.total == lc.theta * bd.edge + lc.beta * bd.semantic + bd.fusion, "breakdown total not exact");
  r.expect(std::fabs(terms.total.item() - bd.total) <= 1e-12, "graph total differs from breakdown");

  // literal multistage form with l = 2 and perfect predictions
  Tensor<double> gt(Shape{1, 1, 8, 8});
  for (int y = 2; y < 6; ++y)
    for (int xx = 1; xx < 5; ++xx) gt.at(0, 0, y, xx) = 1;
  const std::vector<StagePrediction<double>> perfect{{1, Side::encoder, Var<double>(gt)},
                                                     {2, Side::encoder, Var<double>(gt)}};
  const double literal = edge_loss(perfect, gt, sc.zeta, lc).item();
  r.note("literal L_edge(perfect, l=2) = " + fmt(literal));
  r.expect(std::fabs(literal + 1) <= 1e-6, "literal edge loss is " + fmt(literal) + ", expected -1");
  LossConfig norm = lc;
  norm.normalized_multistage = true;
  r.expect(std::fabs(edge_loss(perfect, gt, sc.zeta, norm).item()) <= 1e-6, "normalized form not 0");
  return r;
}

// ----------------------------------------------------------------- 5. overfit smoke

Report criterion_overfit() {
  Report r;
  Samples slices;
  for (const auto& p : data::synth_generate(8, 7, 64)) slices.push_back(data::preprocess(p, 64, 64));
  ExperimentConfig cfg;
  cfg.name = "overfit";
  cfg.model.backbone.base_channels = 8;
  cfg.lr = 1e-3;
  cfg.batch = 8;
  cfg.runs = 1;
  cfg.seed = 7;
  cfg.image_size = 64;
  cfg.monitor = MonitorSplit::train;
  cfg.max_epochs = 300;
  cfg.early_stop_epochs = 40;
  const DataSplits data{slices, slices};

  const auto t0 = std::chrono::steady_clock::now();
  const auto run = train(cfg, data);
  const double secs = seconds_since(t0);
  r.note("train Dice " + fmt(run.report.dice) + " (best epoch " + std::to_string(run.best_epoch) + " of " +
         std::to_string(run.epochs.size()) + ", " + fmt(secs) + " s)");
  r.expect(run.report.dice >= 0.95, "train Dice " + fmt(run.report.dice) + " < 0.95");
  r.expect(secs < 15 * 60, "overfit took " + fmt(secs) + " s");

  // same seed, shorter run: identical step losses over the shared prefix
  ExperimentConfig short_cfg = cfg;
  short_cfg.max_epochs = 5;
  const auto a = train(short_cfg, data);
  const auto b = train(short_cfg, data);
  bool same = a.steps.size() == b.steps.size() && a.steps.size() <= run.steps.size();
  for (std::size_t i = 0; same && i < a.steps.size(); ++i)
    same = a.steps[i].loss.total == b.steps[i].loss.total && a.steps[i].loss.total == run.steps[i].loss.total;
  same = same && a.report.dice == b.report.dice;
  r.expect(same, "fixed-seed runs are not bit-identical");
  return r;
}

// ----------------------------------------------------------------- 6. grids

Report criterion_grids() {
  Report r;
  ExperimentConfig base;
  base.max_epochs = 1;
  const auto t3 = split_grid(base);
  const auto t4 = ablation_grid(base);
  const auto t5 = fusion_grid(base);
  r.expect(t3.rows.size() == 5, "table3 rows " + std::to_string(t3.rows.size()));
  r.expect(t4.rows.size() == 17, "table4 rows " + std::to_string(t4.rows.size()));
  r.expect(t5.rows.size() == 3, "table5 rows " + std::to_string(t5.rows.size()));

  const std::vector<std::string> t3_dice{"89.16±0.49", "89.93±0.09", "89.44±0.14", "89.40±0.33", "88.33±0.89"};
  const std::vector<std::string> t3_sens{"88.03±1.49", "90.29±0.66", "90.15±0.88", "90.66±0.45", "90.28±0.67"};
  for (std::size_t i = 0; i < t3.rows.size() && i < 5; ++i) {
    r.expect(t3.rows[i].label == "ResUNet_C" + std::to_string(i + 1) + "F", "table3 label " + t3.rows[i].label);
    r.expect(t3.rows[i].reference.at("Dice") == t3_dice[i], "table3 Dice annotation row " + std::to_string(i));
    r.expect(t3.rows[i].reference.at("Sens") == t3_sens[i], "table3 Sens annotation row " + std::to_string(i));
  }

  // ESM ASSM ASSM* ESM* AFM
  const std::vector<std::pair<std::string, std::string>> t4_rows{
      {"00000", "85.96±0.03"}, {"10000", "87.08±0.45"}, {"01000", "87.91±0.83"}, {"00001", "87.59±1.07"},
      {"10001", "88.33±0.89"}, {"01001", "88.70±0.25"}, {"11001", "89.93±0.09"}, {"00010", "87.17±0.58"},
      {"00100", "86.47±0.46"}, {"00101", "87.31±0.58"}, {"00011", "87.99±0.36"}, {"00111", "88.86±0.31"},
      {"10011", "86.95±0.37"}, {"01101", "85.19±0.23"}, {"10101", "85.55±0.47"}, {"01011", "85.11±0.09"},
      {"11111", "85.63±0.51"}};
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < t4.rows.size() && i < t4_rows.size(); ++i) {
    const auto t = toggles_of(t4.rows[i].cfg);
    std::string bits;
    for (bool b : {t.esm, t.assm, t.assm_decoder, t.esm_decoder, t.afm}) bits += b ? '1' : '0';
    distinct.insert(bits);
    r.expect(bits == t4_rows[i].first, "table4 row " + std::to_string(i) + " toggles " + bits);
    r.expect(t4.rows[i].reference.at("Dice") == t4_rows[i].second, "table4 Dice annotation row " + std::to_string(i));
  }
  r.expect(distinct.size() == 17, "table4 combinations not distinct");

  const std::vector<std::string> t5_labels{"Add", "Concatenate", "Attention"};
  const std::vector<std::string> t5_dice{"83.59±2.14", "86.75±1.38", "87.59±1.07"};
  const std::vector<std::string> t5_salpha{"80.12±0.84", "84.12±1.27", "83.89±1.21"};
  for (std::size_t i = 0; i < t5.rows.size() && i < 3; ++i) {
    r.expect(t5.rows[i].label == t5_labels[i], "table5 label " + t5.rows[i].label);
    r.expect(t5.rows[i].reference.at("Dice") == t5_dice[i], "table5 Dice annotation row " + std::to_string(i));
    r.expect(t5.rows[i].reference.at("S_alpha") == t5_salpha[i], "table5 S_alpha annotation row " + std::to_string(i));
  }

  // annotation columns survive into the emitted CSV and JSON
  auto grid = ablation_grid(base);
  run_grid(grid, [](const ExperimentConfig&) { return summarize({metrics::MetricReport{}}); });
  const auto csv = grid_to_csv(grid);
  const auto js = grid_to_json(grid);
  for (std::size_t i = 0; i < t4_rows.size(); ++i) {
    r.expect(csv.find(t4_rows[i].second) != std::string::npos, "CSV lacks " + t4_rows[i].second);
    r.expect(js.at("rows")[i].at("reference").at("Dice") == t4_rows[i].second, "JSON annotation row " + std::to_string(i));
  }
  return r;
}

// ----------------------------------------------------------------- 7. pipeline invariants

Report criterion_pipeline() {
  Report r;
  int violations = 0;
  double worst_mean = 0, worst_std = 0;
  for (const auto& p : data::synth_generate(20, 11, 48)) {
    const auto s = data::preprocess(p, 32, 32);
    for (std::size_t k = 0; k < s.y_edge.size(); ++k)
      if (s.y_edge.data[k] > s.y_mask.data[k]) ++violations;
    double m = 0;
    for (float v : s.x.data) m += v;
    m /= static_cast<double>(s.x.size());
    double var = 0;
    for (float v : s.x.data) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / static_cast<double>(s.x.size()));
    worst_mean = std::max(worst_mean, std::fabs(m));
    worst_std = std::max(worst_std, std::fabs(sd - 1));
  }
  r.note("max |mean| " + fmt(worst_mean) + ", max |std-1| " + fmt(worst_std));
  r.expect(violations == 0, std::to_string(violations) + " edge pixels outside the mask");
  r.expect(worst_mean <= 1e-4 && worst_std <= 1e-4, "Z-score out of tolerance");

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> side(1, 24);
  std::uniform_real_distribution<double> dens(0.05, 0.95);
  int edge_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = oracle::random_binary(rng, side(rng), side(rng), dens(rng));
    if (!(edge_targets_from_mask(to_mask(g)) == to_mask(oracle::inner_boundary(g)))) ++edge_mismatch;
  }
  r.expect(edge_mismatch == 0, std::to_string(edge_mismatch) + " of 100 edge maps differ from the oracle");
  return r;
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Report()> run;
    double limit_s;
  };
  const std::vector<Criterion> criteria{
      {"gradient suite", criterion_gradients, 60},
      {"metric oracles", criterion_metrics, 120},
      {"fusion algebra", criterion_fusion, 60},
      {"loss constants", criterion_losses, 60},
      {"overfit smoke", criterion_overfit, 2 * 15 * 60},  // training budget is checked inside
      {"experiment grids", criterion_grids, 60},
      {"pipeline invariants", criterion_pipeline, 60},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    try {
      rep = criteria[i].run();
    } catch (const std::exception& e) {
      rep.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (secs > criteria[i].limit_s) rep.failures.push_back("took " + fmt(secs) + " s, limit " + fmt(criteria[i].limit_s));
    const bool ok = rep.failures.empty();
    failed += ok ? 0 : 1;
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].name << " (" << fmt(secs) << " s)";
    for (const auto& n : rep.notes) line << "; " << n;
    std::cout << line.str() << std::endl;
    for (const auto& f : rep.failures) std::cout << "    " << f << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
