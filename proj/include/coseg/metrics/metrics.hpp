#pragma once

// Segmentation / saliency-style evaluation metrics on single slices.
//
// Binary metrics (Dice, sensitivity, precision) take thresholded masks; MAE,
// the structure measure S_alpha and the enhanced-alignment measure E_phi take
// the soft prediction.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "coseg/core/tensor.hpp"

namespace coseg::metrics {

/// Machine epsilon of double, used by the reference structure / alignment formulas.
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

struct MetricConfig {
  double alpha = 0.5;           // S_alpha balance between object and region terms
  double eval_threshold = 0.5;  // binarisation for Dice / Sens / Prec
  int e_thresholds = 256;       // number of binarisation levels for mean E_phi

  void validate() const {
    if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("alpha must be in [0,1]");
    if (!(eval_threshold > 0 && eval_threshold < 1)) throw ConfigError("eval_threshold must be in (0,1)");
    if (e_thresholds < 1) throw ConfigError("e_thresholds must be >= 1");
  }
};

struct SliceMetrics {
  double dice = 0, sens = 0, prec = 0, mae = 0, e_phi_mean = 0, s_alpha = 0;
};

struct MetricReport {
  double dice = 0, sens = 0, prec = 0, mae = 0, e_phi_mean = 0, s_alpha = 0;
  std::vector<SliceMetrics> per_slice;
};

struct Counts {
  std::size_t inter = 0, pred = 0, gt = 0;
};

inline Counts count(const BinaryMask& s, const BinaryMask& g) {
  require_same_size(s, g, "metric");
  Counts c;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool a = s.data[i] != 0;
    const bool b = g.data[i] != 0;
    c.inter += a && b;
    c.pred += a;
    c.gt += b;
  }
  return c;
}

/// 2|S∩G| / (|S|+|G|); 1 when both are empty.
inline double dice(const BinaryMask& s, const BinaryMask& g) {
  const Counts c = count(s, g);
  if (c.pred + c.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(c.inter) / static_cast<double>(c.pred + c.gt);
}

/// |S∩G| / |G|; with empty G: 1 if S is empty too, else 0.
inline double sensitivity(const BinaryMask& s, const BinaryMask& g) {
  const Counts c = count(s, g);
  if (c.gt == 0) return c.pred == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.inter) / static_cast<double>(c.gt);
}

/// |S∩G| / |S|; with empty S: 1 if G is empty too, else 0.
inline double precision(const BinaryMask& s, const BinaryMask& g) {
  const Counts c = count(s, g);
  if (c.pred == 0) return c.gt == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.inter) / static_cast<double>(c.pred);
}

template <class P>
double mae(const Image<P>& s, const BinaryMask& g) {
  require_same_size(s, g, "mae");
  double acc = 0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::abs(static_cast<double>(s.data[i]) - (g.data[i] ? 1.0 : 0.0));
  return acc / static_cast<double>(s.size());
}

/// Foreground where the prediction is >= t.
template <class P>
BinaryMask binarize(const Image<P>& s, double t) {
  BinaryMask out(s.height, s.width);
  for (std::size_t i = 0; i < s.size(); ++i) out.data[i] = static_cast<double>(s.data[i]) >= t ? 1 : 0;
  return out;
}

namespace detail {

template <class P>
std::vector<double> as_double(const Image<P>& s) {
  return std::vector<double>(s.data.begin(), s.data.end());
}

/// Object score of values in one GT region: 2x / (x^2 + 1 + sigma + eps), sample std.
inline double object_score(const std::vector<double>& vals) {
  if (vals.empty()) return 0.0;
  const double n = static_cast<double>(vals.size());
  const double m = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
  double sd = 0;
  if (vals.size() > 1) {
    double sq = 0;
    for (double v : vals) sq += (v - m) * (v - m);
    sd = std::sqrt(sq / (n - 1));
  }
  return 2.0 * m / (m * m + 1.0 + sd + kEps);
}

inline double s_object(const std::vector<double>& pred, const BinaryMask& g) {
  std::vector<double> fg, bg;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (g.data[i])
      fg.push_back(pred[i]);
    else
      bg.push_back(1.0 - pred[i]);
  }
  const double u = static_cast<double>(fg.size()) / static_cast<double>(pred.size());
  return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

/// SSIM-style similarity of one block [y0,y1) x [x0,x1).
inline double block_ssim(const std::vector<double>& pred, const BinaryMask& g, int y0, int y1, int x0, int x1) {
  const int w = g.width;
  const double n = static_cast<double>(y1 - y0) * (x1 - x0);
  if (n <= 0) return 0.0;
  double mx = 0, my = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mx += pred[i];
      my += g.data[i] ? 1.0 : 0.0;
    }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double dx = pred[i] - mx;
      const double dy = (g.data[i] ? 1.0 : 0.0) - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  const double denom = n - 1 + kEps;
  sxx /= denom;
  syy /= denom;
  sxy /= denom;
  const double a = 4 * mx * my * sxy;
  const double b = (mx * mx + my * my) * (sxx + syy);
  if (a != 0) return a / (b + kEps);
  return b == 0 ? 1.0 : 0.0;
}

inline double s_region(const std::vector<double>& pred, const BinaryMask& g) {
  const int h = g.height;
  const int w = g.width;
  // Centroid in 1-based pixel coordinates, rounded half away from zero.
  double total = 0, sx = 0, sy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (g(y, x)) {
        total += 1;
        sx += x + 1;
        sy += y + 1;
      }
  const int cx = total > 0 ? static_cast<int>(std::round(sx / total)) : static_cast<int>(std::round(w / 2.0));
  const int cy = total > 0 ? static_cast<int>(std::round(sy / total)) : static_cast<int>(std::round(h / 2.0));
  const double area = static_cast<double>(h) * w;
  const double w1 = static_cast<double>(cx) * cy / area;
  const double w2 = static_cast<double>(w - cx) * cy / area;
  const double w3 = static_cast<double>(cx) * (h - cy) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  double q = 0;
  if (w1 > 0) q += w1 * block_ssim(pred, g, 0, cy, 0, cx);
  if (w2 > 0) q += w2 * block_ssim(pred, g, 0, cy, cx, w);
  if (w3 > 0) q += w3 * block_ssim(pred, g, cy, h, 0, cx);
  if (w4 > 0) q += w4 * block_ssim(pred, g, cy, h, cx, w);
  return q;
}

}  // namespace detail

/// Structure measure (1 - alpha) * S_object + alpha * S_region, floored at 0.
/// All-background / all-foreground GT fall back to 1 - mean(S) / mean(S).
template <class P>
double s_measure(const Image<P>& s, const BinaryMask& g, double alpha = 0.5) {
  require_same_size(s, g, "s_measure");
  const std::vector<double> pred = detail::as_double(s);
  const std::size_t fg = static_cast<std::size_t>(std::count_if(g.data.begin(), g.data.end(), [](auto v) { return v != 0; }));
  const double mean_pred = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(pred.size());
  if (fg == 0) return 1.0 - mean_pred;
  if (fg == g.size()) return mean_pred;
  const double q = (1.0 - alpha) * detail::s_object(pred, g) + alpha * detail::s_region(pred, g);
  return q < 0 ? 0.0 : q;
}

/// Enhanced-alignment score of a binary prediction: mean over pixels of
/// ((align + 1)^2 / 4) with align the bias-centred correlation of S and G.
inline double e_measure(const BinaryMask& s, const BinaryMask& g) {
  require_same_size(s, g, "e_measure");
  const double n = static_cast<double>(g.size());
  const std::size_t gfg = static_cast<std::size_t>(std::count_if(g.data.begin(), g.data.end(), [](auto v) { return v != 0; }));
  double acc = 0;
  if (gfg == 0) {
    for (auto v : s.data) acc += v ? 0.0 : 1.0;
  } else if (gfg == g.size()) {
    for (auto v : s.data) acc += v ? 1.0 : 0.0;
  } else {
    double mu_s = 0;
    for (auto v : s.data) mu_s += v ? 1.0 : 0.0;
    mu_s /= n;
    const double mu_g = static_cast<double>(gfg) / n;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double as = (s.data[i] ? 1.0 : 0.0) - mu_s;
      const double ag = (g.data[i] ? 1.0 : 0.0) - mu_g;
      const double align = 2.0 * ag * as / (ag * ag + as * as + kEps);
      acc += (align + 1.0) * (align + 1.0) / 4.0;
    }
  }
  return acc / n;
}

/// Binarisation levels for mean E_phi: (k + 0.5) / count, k = 0..count-1.
inline std::vector<double> e_threshold_levels(int count) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) t[static_cast<std::size_t>(k)] = (k + 0.5) / count;
  return t;
}

/// E_phi averaged over `levels` binarisations of the soft prediction.
template <class P>
double e_measure_mean(const Image<P>& s, const BinaryMask& g, int levels = 256) {
  require_same_size(s, g, "e_measure_mean");
  double acc = 0;
  for (double t : e_threshold_levels(levels)) acc += e_measure(binarize(s, t), g);
  return acc / levels;
}

template <class P>
SliceMetrics evaluate_slice(const Image<P>& s, const BinaryMask& g, const MetricConfig& cfg) {
  const BinaryMask b = binarize(s, cfg.eval_threshold);
  SliceMetrics m;
  m.dice = dice(b, g);
  m.sens = sensitivity(b, g);
  m.prec = precision(b, g);
  m.mae = mae(s, g);
  m.e_phi_mean = e_measure_mean(s, g, cfg.e_thresholds);
  m.s_alpha = s_measure(s, g, cfg.alpha);
  return m;
}

/// Per-slice metrics and their arithmetic means.
template <class P>
MetricReport evaluate_pairs(const std::vector<Image<P>>& preds, const std::vector<BinaryMask>& gts,
                            const MetricConfig& cfg = {}) {
  cfg.validate();
  if (preds.size() != gts.size())
    throw ShapeError("evaluate_pairs: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(gts.size()) + " ground truths");
  if (preds.empty()) throw ShapeError("evaluate_pairs: nothing to evaluate");
  MetricReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) r.per_slice.push_back(evaluate_slice(preds[i], gts[i], cfg));
  const double n = static_cast<double>(r.per_slice.size());
  for (const auto& m : r.per_slice) {
    r.dice += m.dice;
    r.sens += m.sens;
    r.prec += m.prec;
    r.mae += m.mae;
    r.e_phi_mean += m.e_phi_mean;
    r.s_alpha += m.s_alpha;
  }
  r.dice /= n;
  r.sens /= n;
  r.prec /= n;
  r.mae /= n;
  r.e_phi_mean /= n;
  r.s_alpha /= n;
  return r;
}

}  // namespace coseg::metrics
