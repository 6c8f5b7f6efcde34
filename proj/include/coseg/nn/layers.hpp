#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coseg/core/ops.hpp"
#include "coseg/nn/module.hpp"

namespace coseg::nn {

template <class T>
class Conv2d : public Module<T> {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias, Initializer& init)
      : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {
    if (in_channels < 1 || out_channels < 1) throw ConfigError("Conv2d: channel counts must be positive");
    const int fan_in = in_channels * kernel * kernel;
    weight_ = Var<T>(init.he_normal<T>(Shape{out_channels, in_channels, kernel, kernel}, fan_in), true);
    this->register_parameter("weight", weight_);
    if (bias) {
      bias_ = Var<T>(Tensor<T>(Shape{out_channels, 1, 1, 1}), true);
      this->register_parameter("bias", bias_);
    }
  }

  Var<T> operator()(const Var<T>& x) const { return ops::conv2d(x, weight_, bias_, stride_, pad_); }

  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }
  [[nodiscard]] int in_channels() const { return in_channels_; }
  [[nodiscard]] int out_channels() const { return out_channels_; }

 private:
  int in_channels_, out_channels_, kernel_, stride_, pad_;
  Var<T> weight_;
  Var<T> bias_;
};

template <class T>
class BatchNorm2d : public Module<T> {
 public:
  explicit BatchNorm2d(int channels)
      : gamma_(Tensor<T>(Shape{channels, 1, 1, 1}, T(1)), true),
        beta_(Tensor<T>(Shape{channels, 1, 1, 1}), true),
        running_mean_(Shape{channels, 1, 1, 1}),
        running_var_(Shape{channels, 1, 1, 1}, T(1)) {
    this->register_parameter("gamma", gamma_);
    this->register_parameter("beta", beta_);
    this->register_buffer("running_mean", running_mean_);
    this->register_buffer("running_var", running_var_);
  }

  Var<T> operator()(const Var<T>& x) {
    return ops::batch_norm(x, gamma_, beta_, running_mean_, running_var_, this->is_training());
  }

 private:
  Var<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
};

/// conv3x3-BN-ReLU-conv3x3-BN plus identity (or 1x1 projection) shortcut, then ReLU.
template <class T>
class BasicBlock : public Module<T> {
 public:
  BasicBlock(int in_channels, int out_channels, int stride, Initializer& init)
      : conv1_(in_channels, out_channels, 3, stride, 1, false, init),
        bn1_(out_channels),
        conv2_(out_channels, out_channels, 3, 1, 1, false, init),
        bn2_(out_channels) {
    this->register_module("conv1", conv1_);
    this->register_module("bn1", bn1_);
    this->register_module("conv2", conv2_);
    this->register_module("bn2", bn2_);
    if (stride != 1 || in_channels != out_channels) {
      proj_ = std::make_unique<Conv2d<T>>(in_channels, out_channels, 1, stride, 0, false, init);
      proj_bn_ = std::make_unique<BatchNorm2d<T>>(out_channels);
      this->register_module("proj", *proj_);
      this->register_module("proj_bn", *proj_bn_);
    }
  }

  Var<T> operator()(const Var<T>& x) {
    Var<T> y = ops::relu(bn1_(conv1_(x)));
    y = bn2_(conv2_(y));
    Var<T> shortcut = proj_ ? (*proj_bn_)((*proj_)(x)) : x;
    return ops::relu(ops::add(y, shortcut));
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  std::unique_ptr<Conv2d<T>> proj_;
  std::unique_ptr<BatchNorm2d<T>> proj_bn_;
};

/// A run of BasicBlocks; only the first one changes width or stride.
template <class T>
class ResidualStage : public Module<T> {
 public:
  ResidualStage(int in_channels, int out_channels, int stride, int blocks, Initializer& init) {
    if (blocks < 1) throw ConfigError("blocks_per_stage must be >= 1");
    for (int b = 0; b < blocks; ++b) {
      blocks_.push_back(std::make_unique<BasicBlock<T>>(b == 0 ? in_channels : out_channels, out_channels,
                                                         b == 0 ? stride : 1, init));
      this->register_module("block" + std::to_string(b), *blocks_.back());
    }
  }

  Var<T> operator()(const Var<T>& x) {
    Var<T> y = x;
    for (auto& b : blocks_) y = (*b)(y);
    return y;
  }

 private:
  std::vector<std::unique_ptr<BasicBlock<T>>> blocks_;
};

}  // namespace coseg::nn
