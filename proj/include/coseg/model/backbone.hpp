#pragma once

// Residual U-shaped encoder-decoder.
//
// Encoder stage i (1-based) holds `blocks_per_stage` basic blocks at
// base * 2^(i-1) channels (capped at 16 * base) and downsamples by
// stride_plan[i-1]. The decoder mirrors it: X5 refines S5, and each X_i
// (i < 5) is a residual stage over concat(upsample(X_{i+1}), S_i).

#include <algorithm>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "coseg/nn/layers.hpp"

namespace coseg {

inline constexpr int kStages = 5;

struct BackboneConfig {
  int base_channels = 64;
  int in_channels = 1;
  int blocks_per_stage = 2;
  std::array<int, kStages> stride_plan{1, 2, 2, 2, 2};

  /// Channel width of stage i (1-based).
  [[nodiscard]] int channels(int stage) const {
    const int mult = std::min(1 << (stage - 1), 16);
    return base_channels * mult;
  }

  /// Product of all strides; input sides must be multiples of this.
  [[nodiscard]] int total_stride() const {
    int s = 1;
    for (int v : stride_plan) s *= v;
    return s;
  }

  void validate() const {
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (blocks_per_stage < 1) throw ConfigError("blocks_per_stage must be >= 1");
    if (stride_plan[0] != 1 && stride_plan[0] != 2) throw ConfigError("stride_plan[0] must be 1 or 2");
    for (int i = 1; i < kStages; ++i)
      if (stride_plan[i] != 2) throw ConfigError("stride_plan entries after the first must be 2");
  }

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

template <class T>
struct StageOutputs {
  std::vector<Var<T>> encoder;  // S1..S5, finest first
  std::vector<Var<T>> decoder;  // X1..X5, finest first
};

template <class T>
class ResUNet : public nn::Module<T> {
 public:
  ResUNet(const BackboneConfig& cfg, nn::Initializer& init) : cfg_(cfg) {
    cfg_.validate();
    for (int i = 1; i <= kStages; ++i) {
      const int in = i == 1 ? cfg_.in_channels : cfg_.channels(i - 1);
      encoder_.push_back(std::make_unique<nn::ResidualStage<T>>(in, cfg_.channels(i), cfg_.stride_plan[i - 1],
                                                                cfg_.blocks_per_stage, init));
      this->register_module("encoder.stage" + std::to_string(i), *encoder_.back());
    }
    for (int i = 1; i <= kStages; ++i) {
      const int in = i == kStages ? cfg_.channels(kStages) : cfg_.channels(i + 1) + cfg_.channels(i);
      decoder_.push_back(
          std::make_unique<nn::ResidualStage<T>>(in, cfg_.channels(i), 1, cfg_.blocks_per_stage, init));
      this->register_module("decoder.stage" + std::to_string(i), *decoder_.back());
    }
  }

  [[nodiscard]] const BackboneConfig& config() const { return cfg_; }

  /// Encoder pass producing S1..S5.
  std::vector<Var<T>> encode(const Var<T>& x) {
    const Shape& s = x.shape();
    if (s.c != cfg_.in_channels)
      throw ShapeError("encode: expected " + std::to_string(cfg_.in_channels) + " input channels, got " +
                       std::to_string(s.c));
    const int m = cfg_.total_stride();
    if (s.h % m != 0 || s.w % m != 0)
      throw ShapeError("encode: input size " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                       " is not divisible by " + std::to_string(m));
    std::vector<Var<T>> out;
    Var<T> y = x;
    for (auto& stage : encoder_) {
      y = (*stage)(y);
      out.push_back(y);
    }
    return out;
  }

  /// Decoder pass producing X1..X5 (finest first) from S1..S5.
  std::vector<Var<T>> decode(const std::vector<Var<T>>& enc) {
    if (enc.size() != kStages) throw ShapeError("decode: expected 5 encoder maps");
    for (int i = 0; i < kStages; ++i) {
      if (enc[i].shape().c != cfg_.channels(i + 1))
        throw ShapeError("decode: skip S" + std::to_string(i + 1) + " has " + std::to_string(enc[i].shape().c) +
                         " channels, expected " + std::to_string(cfg_.channels(i + 1)));
      if (i > 0 && (enc[i - 1].shape().h != 2 * enc[i].shape().h || enc[i - 1].shape().w != 2 * enc[i].shape().w))
        throw ShapeError("decode: skip S" + std::to_string(i) + " " + enc[i - 1].shape().str() +
                         " is not twice the size of S" + std::to_string(i + 1) + " " + enc[i].shape().str());
    }
    std::vector<Var<T>> out(kStages);
    out[kStages - 1] = (*decoder_[kStages - 1])(enc[kStages - 1]);
    for (int i = kStages - 2; i >= 0; --i) {
      const Shape& skip = enc[i].shape();
      Var<T> up = ops::resize_bilinear(out[i + 1], skip.h, skip.w);
      out[i] = (*decoder_[i])(ops::concat_channels(std::vector<Var<T>>{up, enc[i]}));
    }
    return out;
  }

  /// Full pass. X1 is brought to the input resolution when stage 1 is strided.
  StageOutputs<T> forward(const Var<T>& x) {
    StageOutputs<T> out;
    out.encoder = encode(x);
    out.decoder = decode(out.encoder);
    if (out.decoder[0].shape().h != x.shape().h || out.decoder[0].shape().w != x.shape().w)
      out.decoder[0] = ops::resize_bilinear(out.decoder[0], x.shape().h, x.shape().w);
    return out;
  }

 private:
  BackboneConfig cfg_;
  std::vector<std::unique_ptr<nn::ResidualStage<T>>> encoder_;
  std::vector<std::unique_ptr<nn::ResidualStage<T>>> decoder_;
};

}  // namespace coseg
