#pragma once

// Edge (ESM) and auxiliary semantic (ASSM) deep-supervision heads.
//
// Stages 1..l are edge supervised and stages l+1..5 semantic supervised. The
// same heads can be attached to the decoder maps X1..X5 for the mirrored
// decoder-side variants.

#include <memory>
#include <string>
#include <vector>

#include "coseg/model/backbone.hpp"
#include "coseg/model/losses.hpp"

namespace coseg {

enum class Side { encoder, decoder, both };

struct SupervisionConfig {
  int l = 2;                  // stages 1..l under edge supervision
  bool esm = true;            // edge heads on S1..Sl
  bool assm = true;           // semantic heads on S(l+1)..S5
  bool esm_decoder = false;   // edge heads on X1..Xl
  bool assm_decoder = false;  // semantic heads on X(l+1)..X5
  std::vector<double> zeta{1.0, 1.0};
  std::vector<double> omega{1.0, 1.0, 1.0};

  /// Default split with unit weights; both modules on the requested side(s).
  static SupervisionConfig split(int l, Side side = Side::encoder) {
    SupervisionConfig c;
    c.l = l;
    const bool enc = side != Side::decoder;
    const bool dec = side != Side::encoder;
    c.esm = enc;
    c.assm = enc;
    c.esm_decoder = dec;
    c.assm_decoder = dec;
    c.zeta.assign(static_cast<std::size_t>(std::max(l, 0)), 1.0);
    c.omega.assign(static_cast<std::size_t>(std::max(kStages - l, 0)), 1.0);
    return c;
  }

  void validate() const {
    if (l < 0 || l > kStages) throw ConfigError("supervision split l must be in [0,5]");
    if (zeta.size() != static_cast<std::size_t>(l)) throw ConfigError("zeta must have exactly l entries");
    if (omega.size() != static_cast<std::size_t>(kStages - l)) throw ConfigError("omega must have exactly 5-l entries");
    for (double z : zeta)
      if (!(z >= 0)) throw ConfigError("zeta weights must be >= 0");
    for (double w : omega)
      if (!(w >= 0)) throw ConfigError("omega weights must be >= 0");
  }

  friend bool operator==(const SupervisionConfig&, const SupervisionConfig&) = default;
};

template <class T>
struct StagePrediction {
  int stage_index = 0;  // 1..5
  Side side = Side::encoder;
  Var<T> prob;  // (N,1,H,W) in [0,1]
};

/// 1-pixel inner boundary: foreground pixels whose 8-neighbourhood (replicated
/// at the image border) contains background.
inline BinaryMask edge_targets_from_mask(const BinaryMask& mask) {
  BinaryMask edge(mask.height, mask.width);
  const int h = mask.height;
  const int w = mask.width;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      bool boundary = false;
      for (int dy = -1; dy <= 1 && !boundary; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          if (!mask(yy, xx)) {
            boundary = true;
            break;
          }
        }
      }
      edge(y, x) = boundary ? 1 : 0;
    }
  }
  return edge;
}

/// Stage-to-probability projection: bilinear resize to (H,W), 1x1 conv to one channel, sigmoid.
template <class T>
class ProjectionHead : public nn::Module<T> {
 public:
  ProjectionHead(int in_channels, nn::Initializer& init) : conv_(in_channels, 1, 1, 1, 0, true, init) {
    this->register_module("conv", conv_);
  }

  Var<T> operator()(const Var<T>& feat, int height, int width) {
    if (height < feat.shape().h || width < feat.shape().w)
      throw ShapeError("projection head only upsamples: target " + std::to_string(height) + "x" +
                       std::to_string(width) + " is smaller than " + feat.shape().str());
    // A 1x1 convolution commutes with bilinear resizing (interpolation weights sum
    // to one), so project first and resize the single channel.
    return ops::sigmoid(ops::resize_bilinear(conv_(feat), height, width));
  }

  nn::Conv2d<T>& conv() { return conv_; }

 private:
  nn::Conv2d<T> conv_;
};

template <class T>
struct HeadResult {
  Var<T> loss;  // scalar
  std::vector<StagePrediction<T>> predictions;
};

/// A group of projection heads on a contiguous run of stages, trained against one target.
template <class T>
class SupervisedHeads : public nn::Module<T> {
 public:
  /// `stages` are 1-based stage indices; `channels(i)` gives the width of stage i.
  SupervisedHeads(std::vector<int> stages, Side side, const BackboneConfig& bb, nn::Initializer& init)
      : stages_(std::move(stages)), side_(side) {
    for (int s : stages_) {
      heads_.push_back(std::make_unique<ProjectionHead<T>>(bb.channels(s), init));
      this->register_module("stage" + std::to_string(s), *heads_.back());
    }
  }

  [[nodiscard]] const std::vector<int>& stages() const { return stages_; }
  [[nodiscard]] bool empty() const { return stages_.empty(); }
  ProjectionHead<T>& head(std::size_t i) { return *heads_.at(i); }

  /// Predictions for every owned stage from the full list of 5 stage maps.
  std::vector<StagePrediction<T>> predict(const std::vector<Var<T>>& maps, int height, int width) {
    if (maps.size() != kStages) throw ShapeError("supervision heads expect 5 stage maps");
    std::vector<StagePrediction<T>> out;
    for (std::size_t i = 0; i < stages_.size(); ++i)
      out.push_back({stages_[i], side_, (*heads_[i])(maps[stages_[i] - 1], height, width)});
    return out;
  }

 private:
  std::vector<int> stages_;
  Side side_;
  std::vector<std::unique_ptr<ProjectionHead<T>>> heads_;
};

template <class T>
std::vector<Var<T>> probabilities(const std::vector<StagePrediction<T>>& preds) {
  std::vector<Var<T>> out;
  for (const auto& p : preds) out.push_back(p.prob);
  return out;
}

/// Edge supervision term over stage predictions against the edge target.
/// Weights are zeta indexed by stage (stage i uses zeta[i-1]).
template <class T>
Var<T> edge_loss(const std::vector<StagePrediction<T>>& preds, const Tensor<T>& g_edge,
                 const std::vector<double>& zeta, const LossConfig& cfg) {
  std::vector<double> w;
  for (const auto& p : preds) w.push_back(zeta.at(static_cast<std::size_t>(p.stage_index - 1)));
  return multistage_dice_loss(probabilities(preds), g_edge, w, cfg.epsilon, cfg.normalized_multistage);
}

/// Semantic supervision term; stage i (> l) uses omega[i-l-1].
template <class T>
Var<T> semantic_loss(const std::vector<StagePrediction<T>>& preds, const Tensor<T>& g_mask, int l,
                     const std::vector<double>& omega, const LossConfig& cfg) {
  std::vector<double> w;
  for (const auto& p : preds) w.push_back(omega.at(static_cast<std::size_t>(p.stage_index - l - 1)));
  return multistage_dice_loss(probabilities(preds), g_mask, w, cfg.epsilon, cfg.normalized_multistage);
}

/// Runs edge heads on the given stage maps (5 maps, stages 1..l used) and scores them.
template <class T>
HeadResult<T> edge_head(SupervisedHeads<T>& heads, const std::vector<Var<T>>& maps, const Tensor<T>& g_edge,
                        const std::vector<double>& zeta, const LossConfig& cfg) {
  HeadResult<T> r;
  if (heads.empty()) {
    r.loss = Var<T>(Tensor<T>(Shape{1, 1, 1, 1}));
    return r;
  }
  r.predictions = heads.predict(maps, g_edge.shape().h, g_edge.shape().w);
  r.loss = edge_loss(r.predictions, g_edge, zeta, cfg);
  return r;
}

template <class T>
HeadResult<T> semantic_head(SupervisedHeads<T>& heads, const std::vector<Var<T>>& maps, const Tensor<T>& g_mask,
                            int l, const std::vector<double>& omega, const LossConfig& cfg) {
  HeadResult<T> r;
  if (heads.empty()) {
    r.loss = Var<T>(Tensor<T>(Shape{1, 1, 1, 1}));
    return r;
  }
  r.predictions = heads.predict(maps, g_mask.shape().h, g_mask.shape().w);
  r.loss = semantic_loss(r.predictions, g_mask, l, omega, cfg);
  return r;
}

inline std::vector<int> stage_range(int first, int last) {
  std::vector<int> v;
  for (int i = first; i <= last; ++i) v.push_back(i);
  return v;
}

}  // namespace coseg
