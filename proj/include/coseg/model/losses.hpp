#pragma once

// Dice-family objectives and the weighted joint objective.

#include <cmath>
#include <vector>

#include "coseg/core/ops.hpp"

namespace coseg {

struct LossConfig {
  double theta = 0.8;  // edge loss weight
  double beta = 0.4;   // semantic loss weight
  double epsilon = 1e-6;
  /// Average the per-stage Dice losses instead of the literal 1 - sum(weighted Dice) form.
  bool normalized_multistage = false;

  void validate() const {
    if (!(theta >= 0) || !(beta >= 0) || !(epsilon >= 0)) throw ConfigError("theta, beta and epsilon must be >= 0");
  }
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossBreakdown {
  double edge = 0;
  double semantic = 0;
  double fusion = 0;
  double total = 0;
};

/// Joint objective theta*edge + beta*semantic + fusion. Disabled terms are passed as 0.
inline LossBreakdown total_loss(double edge, double semantic, double fusion, const LossConfig& cfg) {
  LossBreakdown b{edge, semantic, fusion, 0};
  b.total = cfg.theta * edge + cfg.beta * semantic + fusion;
  return b;
}

/// 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps) on a single slice.
template <class P>
double dice_loss(const Image<P>& pred, const BinaryMask& gt, double eps) {
  require_same_size(pred, gt, "dice_loss");
  double inter = 0, ps = 0, gs = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += static_cast<double>(pred.data[i]) * gt.data[i];
    ps += pred.data[i];
    gs += gt.data[i];
  }
  return 1.0 - (2.0 * inter + eps) / (ps + gs + eps);
}

/// Batch-mean soft Dice loss of an (N,1,H,W) prediction against a {0,1} target.
template <class T>
Var<T> dice_loss(const Var<T>& pred, const Tensor<T>& target, double eps) {
  return ops::mean(ops::one_minus(ops::dice_coefficient(pred, target, eps)));
}

/// Multi-stage Dice objective shared by the edge and semantic supervision terms.
///
/// literal:    1 - sum_i w_i * D_i
/// normalized: sum_i w_i * (1 - D_i) / sum_i w_i
///
/// D_i is the per-item soft Dice coefficient of stage i, so a single perfect
/// stage with unit weight scores 0 in both forms. The result is averaged over
/// the batch. With no stages the term is a constant 0.
template <class T>
Var<T> multistage_dice_loss(const std::vector<Var<T>>& preds, const Tensor<T>& target,
                            const std::vector<double>& weights, double eps, bool normalized) {
  if (preds.size() != weights.size()) throw ConfigError("multistage_dice_loss: one weight per stage required");
  if (preds.empty()) return Var<T>(Tensor<T>(Shape{1, 1, 1, 1}));
  std::vector<Var<T>> coeffs;
  std::vector<T> w;
  double wsum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    coeffs.push_back(ops::dice_coefficient(preds[i], target, eps));
    w.push_back(static_cast<T>(weights[i]));
    wsum += weights[i];
  }
  Var<T> weighted = ops::weighted_sum(coeffs, w);
  if (!normalized) return ops::mean(ops::one_minus(weighted));
  if (wsum <= 0) return Var<T>(Tensor<T>(Shape{1, 1, 1, 1}));
  // sum w(1-D)/sum w = 1 - sum(wD)/sum w
  return ops::mean(ops::affine(weighted, static_cast<T>(-1.0 / wsum), T(1)));
}

}  // namespace coseg
