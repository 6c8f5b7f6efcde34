#pragma once

// Independent reference implementations used as test oracles. They work on
// plain nested vectors of double with 1-based loops and share no code with
// the library.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;  // [row][col]

inline const double kEps = std::numeric_limits<double>::epsilon();

inline Grid zeros(int rows, int cols) { return Grid(static_cast<std::size_t>(rows), std::vector<double>(cols, 0.0)); }

inline int rows(const Grid& g) { return static_cast<int>(g.size()); }
inline int cols(const Grid& g) { return g.empty() ? 0 : static_cast<int>(g[0].size()); }

/// 1-based accessor.
inline double at(const Grid& g, int r, int c) { return g[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c - 1)]; }

inline double mean_all(const Grid& g) {
  double s = 0;
  for (const auto& row : g)
    for (double v : row) s += v;
  return s / (static_cast<double>(rows(g)) * cols(g));
}

// ---------------------------------------------------------------- counting

struct PixelCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline PixelCounts tally(const Grid& s, const Grid& g) {
  PixelCounts c;
  for (int r = 1; r <= rows(g); ++r)
    for (int k = 1; k <= cols(g); ++k) {
      const bool a = at(s, r, k) > 0.5;
      const bool b = at(g, r, k) > 0.5;
      if (a && b) ++c.tp;
      else if (a) ++c.fp;
      else if (b) ++c.fn;
      else ++c.tn;
    }
  return c;
}

inline double dice(const Grid& s, const Grid& g) {
  const auto c = tally(s, g);
  const long denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * c.tp / denom;
}
inline double sens(const Grid& s, const Grid& g) {
  const auto c = tally(s, g);
  if (c.tp + c.fn == 0) return c.fp == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / (c.tp + c.fn);
}
inline double prec(const Grid& s, const Grid& g) {
  const auto c = tally(s, g);
  if (c.tp + c.fp == 0) return c.fn == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / (c.tp + c.fp);
}
inline double mae(const Grid& s, const Grid& g) {
  double acc = 0;
  for (int r = 1; r <= rows(g); ++r)
    for (int k = 1; k <= cols(g); ++k) acc += std::fabs(at(s, r, k) - at(g, r, k));
  return acc / (static_cast<double>(rows(g)) * cols(g));
}

// ---------------------------------------------------------------- structure measure

/// Values of `pred` at pixels where `sel` is set.
inline std::vector<double> pick(const Grid& pred, const Grid& sel, bool want) {
  std::vector<double> v;
  for (int r = 1; r <= rows(sel); ++r)
    for (int k = 1; k <= cols(sel); ++k)
      if ((at(sel, r, k) > 0.5) == want) v.push_back(at(pred, r, k));
  return v;
}

inline double object_term(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double sd = 0;
  if (v.size() > 1) {
    for (double x : v) sd += (x - m) * (x - m);
    sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
  }
  return 2.0 * m / (m * m + 1.0 + sd + kEps);
}

inline double s_object(const Grid& pred, const Grid& gt) {
  const auto fg = pick(pred, gt, true);
  auto bg = pick(pred, gt, false);
  for (double& x : bg) x = 1.0 - x;
  const double u = mean_all(gt);
  return u * object_term(fg) + (1.0 - u) * object_term(bg);
}

/// Sub-grid rows r0..r1, cols c0..c1 (1-based, inclusive); empty when r1 < r0 or c1 < c0.
inline Grid block(const Grid& g, int r0, int r1, int c0, int c1) {
  Grid out;
  for (int r = r0; r <= r1; ++r) {
    std::vector<double> row;
    for (int k = c0; k <= c1; ++k) row.push_back(at(g, r, k));
    if (!row.empty()) out.push_back(row);
  }
  return out;
}

inline double ssim(const Grid& pred, const Grid& gt) {
  const double n = static_cast<double>(rows(gt)) * cols(gt);
  const double x = mean_all(pred);
  const double y = mean_all(gt);
  double sx = 0, sy = 0, sxy = 0;
  for (int r = 1; r <= rows(gt); ++r)
    for (int k = 1; k <= cols(gt); ++k) {
      sx += (at(pred, r, k) - x) * (at(pred, r, k) - x);
      sy += (at(gt, r, k) - y) * (at(gt, r, k) - y);
      sxy += (at(pred, r, k) - x) * (at(gt, r, k) - y);
    }
  sx /= (n - 1 + kEps);
  sy /= (n - 1 + kEps);
  sxy /= (n - 1 + kEps);
  const double a = 4 * x * y * sxy;
  const double b = (x * x + y * y) * (sx + sy);
  if (a != 0) return a / (b + kEps);
  if (b == 0) return 1.0;
  return 0.0;
}

inline double s_region(const Grid& pred, const Grid& gt) {
  const int H = rows(gt), W = cols(gt);
  double total = 0, xs = 0, ys = 0;
  for (int r = 1; r <= H; ++r)
    for (int k = 1; k <= W; ++k) {
      total += at(gt, r, k);
      xs += at(gt, r, k) * k;
      ys += at(gt, r, k) * r;
    }
  // MATLAB round: half away from zero
  const int X = static_cast<int>(std::floor(xs / total + 0.5));
  const int Y = static_cast<int>(std::floor(ys / total + 0.5));
  const double area = static_cast<double>(H) * W;
  const double w1 = X * Y / area;
  const double w2 = (W - X) * Y / area;
  const double w3 = X * (H - Y) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  double q = 0;
  struct Part {
    double w;
    int r0, r1, c0, c1;
  };
  const Part parts[4] = {{w1, 1, Y, 1, X}, {w2, 1, Y, X + 1, W}, {w3, Y + 1, H, 1, X}, {w4, Y + 1, H, X + 1, W}};
  for (const auto& p : parts) {
    if (p.r1 < p.r0 || p.c1 < p.c0) continue;  // empty quadrant, zero weight
    q += p.w * ssim(block(pred, p.r0, p.r1, p.c0, p.c1), block(gt, p.r0, p.r1, p.c0, p.c1));
  }
  return q;
}

inline double s_measure(const Grid& pred, const Grid& gt, double alpha) {
  const double y = mean_all(gt);
  if (y == 0) return 1.0 - mean_all(pred);
  if (y == 1) return mean_all(pred);
  double q = (1 - alpha) * s_object(pred, gt) + alpha * s_region(pred, gt);
  if (q < 0) q = 0;
  return q;
}

// ---------------------------------------------------------------- enhanced alignment

inline double e_measure(const Grid& fm, const Grid& gt) {
  const int H = rows(gt), W = cols(gt);
  double gsum = 0;
  for (int r = 1; r <= H; ++r)
    for (int k = 1; k <= W; ++k) gsum += at(gt, r, k);
  Grid enhanced = zeros(H, W);
  if (gsum == 0) {
    for (int r = 1; r <= H; ++r)
      for (int k = 1; k <= W; ++k) enhanced[r - 1][k - 1] = 1.0 - at(fm, r, k);
  } else if (gsum == static_cast<double>(H) * W) {
    for (int r = 1; r <= H; ++r)
      for (int k = 1; k <= W; ++k) enhanced[r - 1][k - 1] = at(fm, r, k);
  } else {
    const double mf = mean_all(fm);
    const double mg = mean_all(gt);
    for (int r = 1; r <= H; ++r)
      for (int k = 1; k <= W; ++k) {
        const double af = at(fm, r, k) - mf;
        const double ag = at(gt, r, k) - mg;
        const double align = 2.0 * (ag * af) / (ag * ag + af * af + kEps);
        enhanced[r - 1][k - 1] = std::pow(align + 1.0, 2) / 4.0;
      }
  }
  double s = 0;
  for (const auto& row : enhanced)
    for (double v : row) s += v;
  return s / (static_cast<double>(W) * H);
}

/// Mean over 256 binarisations at the midpoints (k + 0.5) / 256.
inline double e_measure_mean(const Grid& pred, const Grid& gt) {
  double acc = 0;
  for (int k = 0; k < 256; ++k) {
    const double t = (k + 0.5) / 256.0;
    Grid fm = zeros(rows(pred), cols(pred));
    for (int r = 1; r <= rows(pred); ++r)
      for (int c = 1; c <= cols(pred); ++c) fm[r - 1][c - 1] = at(pred, r, c) >= t ? 1.0 : 0.0;
    acc += e_measure(fm, gt);
  }
  return acc / 256.0;
}

// ---------------------------------------------------------------- edges

/// Foreground pixels with a background pixel among their 8 neighbours (border replicated).
inline Grid inner_boundary(const Grid& m) {
  const int H = rows(m), W = cols(m);
  Grid e = zeros(H, W);
  for (int r = 1; r <= H; ++r)
    for (int k = 1; k <= W; ++k) {
      if (at(m, r, k) < 0.5) continue;
      bool zero_seen = false;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dk = -1; dk <= 1; ++dk) {
          const int rr = std::min(std::max(r + dr, 1), H);
          const int kk = std::min(std::max(k + dk, 1), W);
          if (at(m, rr, kk) < 0.5) zero_seen = true;
        }
      e[r - 1][k - 1] = zero_seen ? 1.0 : 0.0;
    }
  return e;
}

// ---------------------------------------------------------------- random inputs

inline Grid random_binary(std::mt19937_64& rng, int h, int w, double p) {
  std::bernoulli_distribution b(p);
  Grid g = zeros(h, w);
  for (auto& row : g)
    for (double& v : row) v = b(rng) ? 1.0 : 0.0;
  return g;
}

inline Grid random_soft(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g = zeros(h, w);
  for (auto& row : g)
    for (double& v : row) v = u(rng);
  return g;
}

}  // namespace oracle
