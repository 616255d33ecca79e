#include <gtest/gtest.h>

#include <cmath>

#include "padkit/models.hpp"
#include "padkit/network.hpp"

using namespace padkit;
using namespace padkit::models;

namespace {

// Closed-form count for the block/head family, written out independently of
// the layer walker in count_params.
std::uint64_t closed_form_count(const Topology& t, std::size_t side, std::size_t channels) {
  std::uint64_t total = 0;
  std::size_t cin = channels;
  for (std::size_t w : t.block_widths) {
    total += 9 * cin * w + w + 4 * w;  // first conv + its BN
    for (std::size_t c = 1; c < t.convs_per_block; ++c) total += 9 * w * w + w + 4 * w;
    cin = (!t.merge_operand.empty() && t.merge_mode == MergeMode::Concat) ? 2 * w : w;
    side /= 2;
  }
  const std::uint64_t flat = side * side * cin;
  const std::uint64_t h = t.head_units;
  total += flat * h + h + 4 * h;
  total += h * 2 + 2;
  return total;
}

ModelSpec single_dense(std::size_t d, std::size_t u) {
  ModelSpec s;
  s.input = {1, 1, d};
  s.layers = {LayerSpec::flatten(), LayerSpec::dense(u), LayerSpec::dense(2),
              LayerSpec::activation_of(ActivationFn::Softmax)};
  return s;
}

}  // namespace

TEST(CountParams, DenseFourByTwo) {
  // flatten(1x1x4) -> dense(2) -> dense(2): first dense alone is 4*2+2.
  ModelSpec s;
  s.input = {1, 1, 4};
  s.layers = {LayerSpec::flatten(), LayerSpec::dense(2), LayerSpec::activation_of(ActivationFn::Softmax)};
  EXPECT_EQ(count_params(s).total(), 10u);
}

TEST(CountParams, ConvThreeToSixteen) {
  ModelSpec s;
  s.input = {8, 8, 3};
  s.layers = {LayerSpec::conv(16), LayerSpec::flatten(), LayerSpec::dense(2),
              LayerSpec::activation_of(ActivationFn::Softmax)};
  const auto with_conv = count_params(s).total();
  const auto head_only = 8 * 8 * 16 * 2 + 2;
  EXPECT_EQ(with_conv - head_only, 3u * 3 * 3 * 16 + 16);
  EXPECT_EQ(with_conv - head_only, 448u);
}

TEST(CountParams, BatchNormSplitsTrainable) {
  ModelSpec s;
  s.input = {2, 2, 5};
  s.layers = {LayerSpec::batchnorm(), LayerSpec::flatten(), LayerSpec::dense(2),
              LayerSpec::activation_of(ActivationFn::Softmax)};
  const auto pc = count_params(s);
  EXPECT_EQ(pc.non_trainable, 10u);
  EXPECT_EQ(pc.trainable, 10u + 20 * 2 + 2);
}

TEST(LivenessNet, ReferenceCount) {
  const auto spec = build_livenessnet();
  EXPECT_EQ(count_params(spec).total(), 8'406'098u);
  EXPECT_EQ(count_params(spec).total(), reference_param_count(Architecture::LivenessNet));
}

TEST(LivenessNet, DenseLayerDominates) {
  const auto spec = build_livenessnet();
  const auto shapes = infer_shapes(spec);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].kind == LayerKind::Flatten) flat = shapes[i][0];
  EXPECT_EQ(flat, 64u * 64 * 32);
  EXPECT_EQ(flat * 64 + 64, 8'388'672u);
}

TEST(LivenessNet, CanonicalStack) {
  const auto spec = build_livenessnet();
  std::vector<LayerKind> kinds;
  for (const auto& l : spec.layers) kinds.push_back(l.kind);
  using K = LayerKind;
  const std::vector<LayerKind> want = {K::Conv, K::Activation, K::BatchNorm, K::Conv, K::Activation, K::BatchNorm,
                                       K::MaxPool, K::Dropout, K::Conv, K::Activation, K::BatchNorm, K::Conv,
                                       K::Activation, K::BatchNorm, K::MaxPool, K::Dropout, K::Flatten, K::Dense,
                                       K::Activation, K::BatchNorm, K::Dropout, K::Dense, K::Activation};
  EXPECT_EQ(kinds, want);
  EXPECT_EQ(spec.layers[0].filters, 16u);
  EXPECT_EQ(spec.layers[8].filters, 32u);
  EXPECT_DOUBLE_EQ(spec.layers[7].rate, 0.25);
  EXPECT_DOUBLE_EQ(spec.layers[20].rate, 0.5);
  EXPECT_EQ(spec.layers[1].activation, ActivationFn::Relu);
}

TEST(LivenessNet, IndivisibleInputThrows) {
  EXPECT_THROW(build_livenessnet({66, 64, 3}), ModelSpecError);
}

TEST(LivenessNet, ReconstructionFindsCanonicalStack) {
  const auto rep = reconstruct_to_count(Architecture::LivenessNet, 8'406'098);
  ASSERT_TRUE(rep.exact());
  EXPECT_EQ(rep.exact_matches.size(), 1u);
  const auto chosen = build_from_topology(Architecture::LivenessNet, rep.chosen_candidate().topology, {}, {});
  EXPECT_EQ(chosen, build_livenessnet());
}

TEST(AttackNet, V1AndV21MatchReference) {
  for (auto arch : {Architecture::AttackNetV1, Architecture::AttackNetV2_1}) {
    std::string dev = "unset";
    const auto spec = build_attacknet(arch, {}, {}, &dev);
    EXPECT_EQ(count_params(spec).total(), 33'588'738u) << arch_name(arch);
    EXPECT_TRUE(dev.empty()) << dev;
  }
}

TEST(AttackNet, V1AndV21ShareTopology) {
  const auto a = build_attacknet(Architecture::AttackNetV1);
  const auto b = build_attacknet(Architecture::AttackNetV2_1);
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_EQ(a.layers[i].kind, b.layers[i].kind);
    EXPECT_EQ(a.layers[i].filters, b.layers[i].filters);
    EXPECT_EQ(a.layers[i].units, b.layers[i].units);
    EXPECT_EQ(a.layers[i].source, b.layers[i].source);
  }
}

TEST(AttackNet, ActivationStyles) {
  const auto v1 = build_attacknet(Architecture::AttackNetV1);
  const auto v21 = build_attacknet(Architecture::AttackNetV2_1);
  for (std::size_t i = 0; i + 1 < v1.layers.size(); ++i) {
    if (v1.layers[i].kind != LayerKind::Activation) continue;
    const bool after_dense = v1.layers[i - 1].kind == LayerKind::Dense;
    EXPECT_EQ(v1.layers[i].activation, ActivationFn::Relu);
    EXPECT_EQ(v21.layers[i].activation, after_dense ? ActivationFn::Tanh : ActivationFn::LeakyRelu);
    if (!after_dense) EXPECT_DOUBLE_EQ(v21.layers[i].alpha, 0.2);
  }
}

TEST(AttackNet, MergeModes) {
  for (auto arch : {Architecture::AttackNetV1, Architecture::AttackNetV2_1, Architecture::AttackNetV2_2}) {
    const auto spec = build_attacknet(arch);
    std::size_t merges = 0;
    for (const auto& l : spec.layers) {
      if (l.kind != LayerKind::Merge) continue;
      ++merges;
      EXPECT_EQ(l.merge, arch == Architecture::AttackNetV2_2 ? MergeMode::Add : MergeMode::Concat);
    }
    EXPECT_GT(merges, 0u);
  }
}

TEST(AttackNet, V22ClosestCandidateIsDocumented) {
  const auto rep = reconstruct_to_count(Architecture::AttackNetV2_2, 16'806'722);
  EXPECT_FALSE(rep.exact());
  EXPECT_EQ(rep.chosen_candidate().params, 16'806'914u);
  EXPECT_EQ(rep.chosen_candidate().delta, 192);
  for (const auto& c : rep.candidates) EXPECT_GE(std::llabs(c.delta), 192);
  std::string dev;
  build_attacknet(Architecture::AttackNetV2_2, {}, {}, &dev);
  EXPECT_NE(dev.find("+192"), std::string::npos) << dev;
}

TEST(Reconstruction, ZeroTargetThrows) {
  EXPECT_THROW(reconstruct_to_count(Architecture::AttackNetV1, 0), ModelSpecError);
}

TEST(Reconstruction, GridCountsMatchClosedForm) {
  for (auto arch : kAllArchitectures) {
    const auto rep = reconstruct_to_count(arch, 1);
    EXPECT_FALSE(rep.candidates.empty());
    for (const auto& c : rep.candidates) EXPECT_EQ(c.params, closed_form_count(c.topology, 256, 3)) << c.topology.label();
  }
}

TEST(Reconstruction, ExactMatchesAreExact) {
  const auto rep = reconstruct_to_count(Architecture::AttackNetV1, 33'588'738);
  ASSERT_TRUE(rep.exact());
  for (auto i : rep.exact_matches) EXPECT_EQ(rep.candidates[i].params, 33'588'738u);
  EXPECT_EQ(rep.candidates[rep.chosen].delta, 0);
  const auto md = reconstruction_markdown(rep);
  EXPECT_NE(md.find("chosen"), std::string::npos);
}

TEST(Properties, AddNeverExceedsConcat) {
  const auto rep = reconstruct_to_count(Architecture::AttackNetV1, 1);
  for (const auto& c : rep.candidates) {
    Topology t = c.topology;
    t.merge_mode = MergeMode::Add;
    const auto added = count_params(build_from_topology(Architecture::AttackNetV1, t, {}, {})).total();
    EXPECT_LE(added, c.params) << t.label();
  }
}

TEST(Properties, DownscaledTopologyPreserved) {
  for (auto arch : kAllArchitectures) {
    const auto big = build_model(arch);
    const auto small = build_model(arch, {64, 64, 3});
    ASSERT_EQ(big.layers, small.layers) << arch_name(arch);
    // Only the first dense layer changes size: flat width shrinks by 16x.
    const auto sb = infer_shapes(big), ss = infer_shapes(small);
    std::size_t fb = 0, fs = 0;
    for (std::size_t i = 0; i < big.layers.size(); ++i)
      if (big.layers[i].kind == LayerKind::Flatten) fb = sb[i][0], fs = ss[i][0];
    EXPECT_EQ(fb, 16 * fs);
    std::size_t units = 0;
    for (const auto& l : big.layers)
      if (l.kind == LayerKind::Dense) {
        units = l.units;
        break;
      }
    EXPECT_EQ(count_params(big).total() - count_params(small).total(), (fb - fs) * units);
  }
}

TEST(Properties, ForwardIsProbability) {
  for (auto arch : kAllArchitectures) {
    Network<float> net(build_model(arch, {16, 16, 3}), 7);
    Rng rng(3);
    Tensor<float> x({3, 16, 16, 3});
    for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
    for (Mode mode : {Mode::Train, Mode::Infer}) {
      Tape<float> tape;
      const auto y = net.forward(tape, x, mode, rng).value();
      ASSERT_EQ(y.shape(), (Shape{3, 2}));
      for (std::size_t n = 0; n < 3; ++n) {
        EXPECT_NEAR(static_cast<double>(y[2 * n]) + y[2 * n + 1], 1.0, 1e-6);
        EXPECT_GE(y[2 * n], 0.0f);
      }
    }
  }
}

TEST(Network, TrainableCountMatchesSpec) {
  const auto spec = build_model(Architecture::AttackNetV2_2, {32, 32, 3});
  Network<float> net(spec);
  EXPECT_EQ(net.trainable_count(), count_params(spec).trainable);
  std::size_t total = 0;
  for (const auto& e : net.state()) total += e.tensor.size();
  EXPECT_EQ(total, count_params(spec).total());
}

TEST(Network, GlorotBoundsAndDeterminism) {
  const auto spec = build_livenessnet({16, 16, 3});
  Network<float> a(spec, 11), b(spec, 11), c(spec, 12);
  const auto& k = a.parameters()[0].var.value();
  const double limit = std::sqrt(6.0 / (27 + 144));
  for (float v : k.data()) EXPECT_LE(std::abs(v), limit);
  EXPECT_EQ(a.state()[0].tensor, b.state()[0].tensor);
  EXPECT_NE(a.state()[0].tensor, c.state()[0].tensor);
}

TEST(Network, StateRoundTrip) {
  const auto spec = build_livenessnet({16, 16, 3});
  Network<float> a(spec, 1), b(spec, 2);
  b.load_state(a.state());
  Tensor<float> x({2, 16, 16, 3}, 0.5f);
  EXPECT_EQ(a.predict(x), b.predict(x));
  auto broken = a.state();
  broken[0].name = "nope";
  EXPECT_THROW(b.load_state(broken), std::runtime_error);
}

TEST(Network, WrongInputShapeThrows) {
  Network<float> net(build_livenessnet({16, 16, 3}));
  EXPECT_THROW(net.predict(Tensor<float>({1, 8, 8, 3})), ShapeError);
}

TEST(SpecText, RoundTrip) {
  for (auto arch : kAllArchitectures) {
    const auto spec = build_model(arch, {64, 64, 3}, {0.1, 0.3, 1e-4});
    EXPECT_EQ(parse_model_spec(to_text(spec)), spec) << to_text(spec);
  }
}

TEST(SpecText, RejectsBadInput) {
  EXPECT_THROW(parse_model_spec("hello"), ModelSpecError);
  EXPECT_THROW(parse_model_spec("padkit-model 1\narch livenessnet\n"), ModelSpecError);
  EXPECT_THROW(parse_model_spec("padkit-model 1\nlayer warp\nend\n"), ModelSpecError);
}

TEST(SpecValidation, MergeRules) {
  ModelSpec s = single_dense(4, 8);
  s.layers.insert(s.layers.begin(), LayerSpec::merge_with(MergeMode::Add, 0));
  EXPECT_THROW(infer_shapes(s), ModelSpecError);  // refers to itself

  ModelSpec t;
  t.input = {4, 4, 3};
  t.layers = {LayerSpec::conv(4), LayerSpec::conv(8), LayerSpec::merge_with(MergeMode::Add, 0), LayerSpec::flatten(),
              LayerSpec::dense(2), LayerSpec::activation_of(ActivationFn::Softmax)};
  EXPECT_THROW(infer_shapes(t), ModelSpecError);  // add needs equal shapes
  t.layers[2].merge = MergeMode::Concat;
  EXPECT_EQ(infer_shapes(t)[2], (Shape{4, 4, 12}));
}

TEST(SpecValidation, HeadMustBeBinarySoftmax) {
  ModelSpec s = single_dense(4, 8);
  s.layers.pop_back();
  EXPECT_THROW(infer_shapes(s), ModelSpecError);
}

TEST(Architecture, ParseBothSpellings) {
  for (auto a : kAllArchitectures) {
    EXPECT_EQ(parse_architecture(arch_name(a)), a);
    EXPECT_EQ(parse_architecture(arch_flag(a)), a);
  }
  EXPECT_THROW(parse_architecture("resnet"), ModelSpecError);
}
