#include <gtest/gtest.h>

#include "../support/common.hpp"
#include "../support/gradcheck.hpp"
#include "coseg/model/backbone.hpp"

using namespace coseg;
using testing_support::random_tensor;

namespace {

BackboneConfig config(int base) {
  BackboneConfig c;
  c.base_channels = base;
  return c;
}

std::vector<Shape> shapes(const std::vector<Var<float>>& maps) {
  std::vector<Shape> s;
  for (const auto& m : maps) s.push_back(m.shape());
  return s;
}

}  // namespace

TEST(BackboneConfig, ChannelPlanAndValidation) {
  const auto c = config(8);
  EXPECT_EQ(c.channels(1), 8);
  EXPECT_EQ(c.channels(5), 128);
  EXPECT_EQ(c.total_stride(), 16);
  EXPECT_THROW(config(0).validate(), ConfigError);
  auto bad = config(8);
  bad.stride_plan = {3, 2, 2, 2, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.stride_plan = {1, 1, 2, 2, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = config(8);
  bad.blocks_per_stage = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  nn::Initializer init(1);
  EXPECT_THROW(ResUNet<float>(config(0), init), ConfigError);
}

TEST(Backbone, StageShapesAt64WithBase8) {
  nn::Initializer init(1);
  ResUNet<float> net(config(8), init);
  const auto out = net.forward(Var<float>(random_tensor<float>(Shape{1, 1, 64, 64}, 2)));
  const std::vector<Shape> expected{
      {1, 8, 64, 64}, {1, 16, 32, 32}, {1, 32, 16, 16}, {1, 64, 8, 8}, {1, 128, 4, 4}};
  EXPECT_EQ(shapes(out.encoder), expected);
  EXPECT_EQ(shapes(out.decoder), expected);
}

// Golden ladder for the full-width configuration, frozen from the stride plan.
TEST(Backbone, StageShapesAt256WithBase64) {
  nn::Initializer init(1);
  ResUNet<float> net(config(64), init);
  net.eval();
  NoGradGuard guard;
  const auto enc = net.encode(Var<float>(random_tensor<float>(Shape{2, 1, 256, 256}, 3)));
  const std::vector<Shape> expected{
      {2, 64, 256, 256}, {2, 128, 128, 128}, {2, 256, 64, 64}, {2, 512, 32, 32}, {2, 1024, 16, 16}};
  EXPECT_EQ(shapes(enc), expected);
}

TEST(Backbone, StrideTwoFirstStageStillReturnsFullResolutionTop) {
  auto c = config(4);
  c.stride_plan = {2, 2, 2, 2, 2};
  nn::Initializer init(1);
  ResUNet<float> net(c, init);
  const auto out = net.forward(Var<float>(random_tensor<float>(Shape{1, 1, 64, 64}, 4)));
  EXPECT_EQ(out.encoder[0].shape(), (Shape{1, 4, 32, 32}));
  EXPECT_EQ(out.encoder[4].shape(), (Shape{1, 64, 2, 2}));
  EXPECT_EQ(out.decoder[0].shape(), (Shape{1, 4, 64, 64}));
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>(Shape{1, 1, 16, 16}))), ShapeError);
}

TEST(Backbone, RejectsIndivisibleSizesAndWrongChannels) {
  nn::Initializer init(1);
  ResUNet<float> net(config(2), init);
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>(Shape{1, 1, 100, 64}))), ShapeError);
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>(Shape{1, 1, 64, 100}))), ShapeError);
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>(Shape{1, 2, 64, 64}))), ShapeError);
  std::vector<Var<float>> four(4, Var<float>(Tensor<float>(Shape{1, 2, 4, 4})));
  EXPECT_THROW(net.decode(four), ShapeError);
}

TEST(Backbone, DecodeRejectsInconsistentSkips) {
  nn::Initializer init(1);
  ResUNet<float> net(config(2), init);
  auto enc = net.encode(Var<float>(Tensor<float>(Shape{1, 1, 32, 32})));
  auto wrong_channels = enc;
  wrong_channels[2] = Var<float>(Tensor<float>(Shape{1, 3, 8, 8}));
  EXPECT_THROW(net.decode(wrong_channels), ShapeError);
  auto wrong_size = enc;
  wrong_size[1] = Var<float>(Tensor<float>(Shape{1, 4, 12, 12}));
  EXPECT_THROW(net.decode(wrong_size), ShapeError);
}

TEST(Backbone, ZeroInputGivesFiniteOutputs) {
  nn::Initializer init(2);
  ResUNet<float> net(config(8), init);
  for (bool training : {true, false}) {
    net.train(training);
    const auto out = net.forward(Var<float>(Tensor<float>(Shape{2, 1, 32, 32})));
    for (const auto& m : out.encoder) EXPECT_TRUE(all_finite(m.value()));
    for (const auto& m : out.decoder) EXPECT_TRUE(all_finite(m.value()));
  }
}

TEST(Backbone, RandomInputsGiveFiniteOutputs) {
  nn::Initializer init(3);
  ResUNet<float> net(config(4), init);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto out = net.forward(Var<float>(random_tensor<float>(Shape{2, 1, 32, 48}, seed, -50, 50)));
    for (const auto& m : out.decoder) EXPECT_TRUE(all_finite(m.value()));
    EXPECT_EQ(out.decoder[0].shape(), (Shape{2, 4, 32, 48}));
  }
}

TEST(Backbone, RepeatedPassesAreIdentical) {
  nn::Initializer init(4);
  ResUNet<float> net(config(4), init);
  net.eval();
  const Var<float> x(random_tensor<float>(Shape{2, 1, 32, 32}, 5));
  const auto a = net.forward(x);
  const auto b = net.forward(x);
  for (int i = 0; i < kStages; ++i) {
    EXPECT_EQ(a.encoder[i].value().vec(), b.encoder[i].value().vec());
    EXPECT_EQ(a.decoder[i].value().vec(), b.decoder[i].value().vec());
  }
}

TEST(Backbone, SameSeedSameWeights) {
  nn::Initializer i1(9), i2(9);
  ResUNet<float> a(config(4), i1), b(config(4), i2);
  const auto pa = a.named_parameters(), pb = b.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(pa[k].second->value().vec(), pb[k].second->value().vec());
}

TEST(Backbone, BatchIndependenceInEvalMode) {
  nn::Initializer init(6);
  ResUNet<float> net(config(4), init);
  // non-trivial running statistics
  net.train();
  for (int i = 0; i < 3; ++i) net.forward(Var<float>(random_tensor<float>(Shape{2, 1, 32, 32}, 100 + i)));
  net.eval();
  const auto x = random_tensor<float>(Shape{2, 1, 32, 32}, 7);
  const auto both = net.forward(Var<float>(x));
  for (int n = 0; n < 2; ++n) {
    const auto single = net.forward(Var<float>(x.slice_batch(n, 1)));
    for (int i = 0; i < kStages; ++i) {
      const auto part = both.decoder[i].value().slice_batch(n, 1);
      for (std::size_t k = 0; k < part.size(); ++k)
        EXPECT_NEAR(part[k], single.decoder[i].value()[k], 1e-5) << "X" << i + 1;
    }
  }
}

// Input side 16 is the smallest the stride plan admits. Train mode uses 32 so the
// coarsest batch statistics are not over a single pixel.
TEST(Backbone, TopMapGradientMatchesFiniteDifferences) {
  for (bool training : {false, true}) {
    nn::Initializer init(8);
    ResUNet<float> nf(config(2), init);
    nn::Initializer init_d(0);
    ResUNet<double> nd(config(2), init_d);
    nn::copy_state(nf, nd);
    nf.train(training);
    nd.train(training);
    const int side = training ? 32 : 16;
    Tensor<double> x = random_tensor<double>(Shape{training ? 2 : 1, 1, side, side}, 9);
    Var<float> xf(x.cast<float>(), true);
    backward(ops::mean(nf.forward(xf).decoder[0]));
    const auto idx = gradcheck::indices(x.size(), 96, 3);
    const auto num = gradcheck::numeric_piecewise(
        x, idx, [&] { return ops::mean(nd.forward(Var<double>(x)).decoder[0]).item(); });
    EXPECT_LT(gradcheck::relative_error(gradcheck::pick(xf.grad(), idx), num), 1e-3)
        << (training ? "train" : "eval");
  }
}
