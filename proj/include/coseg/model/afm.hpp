#pragma once

// Attention fusion of the five decoder levels, plus add / concatenate baselines.
//
// Attention block for level i:
//   U_i = resize(conv1x1(X_i) -> 64 channels, H x W)
//   Z_i = conv3x3(U_i) -> 1 channel logit
//   P_i = sigmoid(Z_i),  Y_i = P_i * Z_i
// Fusion:
//   F   = Z_1 + Y_1 + (1 - P_1) * sum_{i=2..5} Y_i,   S_p = sigmoid(F)
//
// Z_1 stands in for X_1 as the single-channel residual base, and the gate is
// applied to the logit so every term of the sum is single-channel.

#include <memory>
#include <string>
#include <vector>

#include "coseg/model/backbone.hpp"

namespace coseg {

enum class FusionMode { attention, add, concatenate };

inline std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::attention: return "attention";
    case FusionMode::add: return "add";
    case FusionMode::concatenate: return "concatenate";
  }
  return "?";
}

inline FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "attention") return FusionMode::attention;
  if (s == "add") return FusionMode::add;
  if (s == "concatenate" || s == "concat") return FusionMode::concatenate;
  throw ConfigError("unknown fusion mode '" + s + "' (expected attention, add or concatenate)");
}

inline constexpr int kFusionChannels = 64;

template <class T>
struct AttentionBlockOut {
  Var<T> up;     // (N,64,H,W)
  Var<T> logit;  // Z_i, (N,1,H,W)
  Var<T> conf;   // P_i
  Var<T> gated;  // Y_i
};

template <class T>
class AttentionBlock : public nn::Module<T> {
 public:
  AttentionBlock(int in_channels, nn::Initializer& init, int mid_channels = kFusionChannels)
      : reduce_(in_channels, mid_channels, 1, 1, 0, true, init), score_(mid_channels, 1, 3, 1, 1, true, init) {
    this->register_module("reduce", reduce_);
    this->register_module("score", score_);
  }

  AttentionBlockOut<T> operator()(const Var<T>& x, int height, int width) {
    if (height < x.shape().h || width < x.shape().w)
      throw ShapeError("attention block only upsamples: target smaller than " + x.shape().str());
    AttentionBlockOut<T> o;
    o.up = ops::resize_bilinear(reduce_(x), height, width);
    o.logit = score_(o.up);
    o.conf = ops::sigmoid(o.logit);
    o.gated = ops::mul(o.conf, o.logit);
    return o;
  }

  nn::Conv2d<T>& reduce() { return reduce_; }
  nn::Conv2d<T>& score() { return score_; }

 private:
  nn::Conv2d<T> reduce_;
  nn::Conv2d<T> score_;
};

template <class T>
struct FusionOutput {
  Var<T> prob;   // S_p = sigmoid(F)
  Var<T> logit;  // F
  std::vector<AttentionBlockOut<T>> blocks;  // attention mode only, level 1 first

  /// Diagnostics for attention mode.
  [[nodiscard]] const Var<T>& p1() const { return blocks.at(0).conf; }
  [[nodiscard]] const Var<T>& y1() const { return blocks.at(0).gated; }
  [[nodiscard]] const Var<T>& z1() const { return blocks.at(0).logit; }
};

template <class T>
class FusionModule : public nn::Module<T> {
 public:
  FusionModule(FusionMode mode, const BackboneConfig& bb, nn::Initializer& init, int mid_channels = kFusionChannels)
      : mode_(mode) {
    if (mode == FusionMode::attention) {
      for (int i = 1; i <= kStages; ++i) {
        blocks_.push_back(std::make_unique<AttentionBlock<T>>(bb.channels(i), init, mid_channels));
        this->register_module("attention" + std::to_string(i), *blocks_.back());
      }
    } else {
      for (int i = 1; i <= kStages; ++i) {
        reducers_.push_back(std::make_unique<nn::Conv2d<T>>(bb.channels(i), mid_channels, 1, 1, 0, true, init));
        this->register_module("reduce" + std::to_string(i), *reducers_.back());
      }
      const int in = mode == FusionMode::add ? mid_channels : mid_channels * kStages;
      head_ = std::make_unique<nn::Conv2d<T>>(in, 1, 3, 1, 1, true, init);
      this->register_module("head", *head_);
    }
  }

  [[nodiscard]] FusionMode mode() const { return mode_; }
  AttentionBlock<T>& block(int level) { return *blocks_.at(static_cast<std::size_t>(level - 1)); }
  nn::Conv2d<T>& reducer(int level) { return *reducers_.at(static_cast<std::size_t>(level - 1)); }
  nn::Conv2d<T>& head() { return *head_; }

  FusionOutput<T> operator()(const std::vector<Var<T>>& decoder_maps, int height, int width) {
    if (decoder_maps.size() != kStages)
      throw ShapeError("fuse: expected 5 decoder maps, got " + std::to_string(decoder_maps.size()));
    FusionOutput<T> out;
    if (mode_ == FusionMode::attention) {
      for (int i = 0; i < kStages; ++i) out.blocks.push_back((*blocks_[i])(decoder_maps[i], height, width));
      std::vector<Var<T>> aux;
      for (int i = 1; i < kStages; ++i) aux.push_back(out.blocks[i].gated);
      Var<T> compensation = ops::mul(ops::one_minus(out.blocks[0].conf), ops::sum(aux));
      out.logit = ops::sum(std::vector<Var<T>>{out.blocks[0].logit, out.blocks[0].gated, compensation});
    } else {
      std::vector<Var<T>> levels;
      for (int i = 0; i < kStages; ++i) {
        if (height < decoder_maps[i].shape().h || width < decoder_maps[i].shape().w)
          throw ShapeError("fuse: target smaller than " + decoder_maps[i].shape().str());
        levels.push_back(ops::resize_bilinear((*reducers_[i])(decoder_maps[i]), height, width));
      }
      Var<T> merged = mode_ == FusionMode::add ? ops::sum(levels) : ops::concat_channels(levels);
      out.logit = (*head_)(merged);
    }
    out.prob = ops::sigmoid(out.logit);
    return out;
  }

 private:
  FusionMode mode_;
  std::vector<std::unique_ptr<AttentionBlock<T>>> blocks_;
  std::vector<std::unique_ptr<nn::Conv2d<T>>> reducers_;
  std::unique_ptr<nn::Conv2d<T>> head_;
};

}  // namespace coseg
