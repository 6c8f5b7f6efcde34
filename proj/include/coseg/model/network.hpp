#pragma once

// Full segmentation network: backbone, optional supervision heads on either
// path, and the fusion module (or a plain top head when fusion is disabled).

#include <memory>
#include <vector>

#include "coseg/model/afm.hpp"
#include "coseg/model/supervision.hpp"

namespace coseg {

struct ModelConfig {
  BackboneConfig backbone;
  SupervisionConfig supervision;
  bool afm = true;
  FusionMode fusion = FusionMode::attention;

  void validate() const {
    backbone.validate();
    supervision.validate();
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <class T>
struct NetworkOutput {
  StageOutputs<T> stages;
  std::vector<StagePrediction<T>> edge_predictions;      // encoder heads first, then decoder heads
  std::vector<StagePrediction<T>> semantic_predictions;  // same ordering
  FusionOutput<T> fusion;                                // prob always set; blocks only in attention mode
  [[nodiscard]] const Var<T>& prob() const { return fusion.prob; }
};

/// Training targets for a batch, each (N,1,H,W) with {0,1} values.
template <class T>
struct Targets {
  Tensor<T> mask;
  Tensor<T> edge;
};

template <class T>
struct LossTerms {
  Var<T> total;  // differentiable scalar
  LossBreakdown breakdown;
};

template <class T>
class Network : public nn::Module<T> {
 public:
  Network(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), init_(seed) {
    cfg_.validate();
    backbone_ = std::make_unique<ResUNet<T>>(cfg_.backbone, init_);
    this->register_module("backbone", *backbone_);
    const auto& sup = cfg_.supervision;
    const auto low = stage_range(1, sup.l);
    const auto high = stage_range(sup.l + 1, kStages);
    esm_ = std::make_unique<SupervisedHeads<T>>(sup.esm ? low : std::vector<int>{}, Side::encoder, cfg_.backbone, init_);
    assm_ = std::make_unique<SupervisedHeads<T>>(sup.assm ? high : std::vector<int>{}, Side::encoder, cfg_.backbone, init_);
    esm_dec_ = std::make_unique<SupervisedHeads<T>>(sup.esm_decoder ? low : std::vector<int>{}, Side::decoder,
                                                    cfg_.backbone, init_);
    assm_dec_ = std::make_unique<SupervisedHeads<T>>(sup.assm_decoder ? high : std::vector<int>{}, Side::decoder,
                                                     cfg_.backbone, init_);
    this->register_module("esm", *esm_);
    this->register_module("assm", *assm_);
    this->register_module("esm_decoder", *esm_dec_);
    this->register_module("assm_decoder", *assm_dec_);
    if (cfg_.afm) {
      fusion_ = std::make_unique<FusionModule<T>>(cfg_.fusion, cfg_.backbone, init_);
      this->register_module("fusion", *fusion_);
    } else {
      top_ = std::make_unique<ProjectionHead<T>>(cfg_.backbone.channels(1), init_);
      this->register_module("top", *top_);
    }
  }

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  ResUNet<T>& backbone() { return *backbone_; }
  FusionModule<T>* fusion() { return fusion_.get(); }
  SupervisedHeads<T>& esm() { return *esm_; }
  SupervisedHeads<T>& assm() { return *assm_; }

  NetworkOutput<T> forward(const Var<T>& x) {
    NetworkOutput<T> out;
    out.stages = backbone_->forward(x);
    const int h = x.shape().h;
    const int w = x.shape().w;
    auto append = [](std::vector<StagePrediction<T>>& dst, std::vector<StagePrediction<T>> src) {
      for (auto& p : src) dst.push_back(std::move(p));
    };
    if (!esm_->empty()) append(out.edge_predictions, esm_->predict(out.stages.encoder, h, w));
    if (!esm_dec_->empty()) append(out.edge_predictions, esm_dec_->predict(out.stages.decoder, h, w));
    if (!assm_->empty()) append(out.semantic_predictions, assm_->predict(out.stages.encoder, h, w));
    if (!assm_dec_->empty()) append(out.semantic_predictions, assm_dec_->predict(out.stages.decoder, h, w));
    if (fusion_) {
      out.fusion = (*fusion_)(out.stages.decoder, h, w);
    } else {
      out.fusion.prob = (*top_)(out.stages.decoder[0], h, w);
    }
    return out;
  }

  /// Joint objective. Terms of disabled modules are zero.
  LossTerms<T> loss(const NetworkOutput<T>& out, const Targets<T>& tgt, const LossConfig& lc) const {
    const auto& sup = cfg_.supervision;
    Var<T> edge = out.edge_predictions.empty() ? Var<T>(Tensor<T>(Shape{1, 1, 1, 1}))
                                               : edge_loss(out.edge_predictions, tgt.edge, sup.zeta, lc);
    Var<T> semantic = out.semantic_predictions.empty()
                          ? Var<T>(Tensor<T>(Shape{1, 1, 1, 1}))
                          : semantic_loss(out.semantic_predictions, tgt.mask, sup.l, sup.omega, lc);
    Var<T> fusion = dice_loss(out.prob(), tgt.mask, lc.epsilon);
    LossTerms<T> r;
    r.total = ops::weighted_sum(std::vector<Var<T>>{edge, semantic, fusion},
                                std::vector<T>{static_cast<T>(lc.theta), static_cast<T>(lc.beta), T(1)});
    r.breakdown = total_loss(edge.item(), semantic.item(), fusion.item(), lc);
    return r;
  }

 private:
  ModelConfig cfg_;
  nn::Initializer init_;
  std::unique_ptr<ResUNet<T>> backbone_;
  std::unique_ptr<SupervisedHeads<T>> esm_, assm_, esm_dec_, assm_dec_;
  std::unique_ptr<FusionModule<T>> fusion_;
  std::unique_ptr<ProjectionHead<T>> top_;
};

}  // namespace coseg
