#include <gtest/gtest.h>

#include <random>

#include "binecg/errors.hpp"
#include "binecg/model.hpp"

using namespace binecg;

namespace {

std::vector<Real> random_segment(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Real> s(kSegmentLength);
  for (Real& v : s) v = n(rng);
  return s;
}

std::vector<LayerKind> kinds_of_block(const NetworkSpec& spec, int block) {
  std::vector<LayerKind> out;
  for (const auto& d : spec.layers) {
    if (d.block == block) out.push_back(d.kind);
  }
  return out;
}

}  // namespace

TEST(BaselineTable, ParameterCountsPerRow) {
  const std::size_t expected[] = {128, 1152, 3456, 14336, 20480, 12288, 13824, 1080};
  std::size_t i = 0, total = 0;
  for (const auto& row : baseline_table()) {
    if (row.kind == LayerKind::MaxPool) continue;
    const std::size_t count = row.out_channels * row.in_channels * (row.kind == LayerKind::Dense ? 1 : row.kernel);
    EXPECT_EQ(count, expected[i]) << "row " << row.table_label;
    total += count;
    ++i;
  }
  EXPECT_EQ(i, 8u);
  EXPECT_EQ(total, 66744u);
}

TEST(BaselineTable, LabelsOneToFifteen) {
  const auto table = baseline_table();
  ASSERT_EQ(table.size(), 15u);
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_EQ(table[i].table_label, static_cast<int>(i + 1));
}

TEST(BuildBaseline, ParameterCensus) {
  Network net = build_baseline(1);
  std::size_t weights = 0, bn = 0, other = 0;
  for (const auto& p : net.parameters()) {
    if (p.role == ParamRole::Weight) {
      weights += p.value.size();
      EXPECT_FALSE(p.clip_unit);
    } else if (p.role == ParamRole::BnScale || p.role == ParamRole::BnShift) {
      bn += p.value.size();
    } else {
      other += p.value.size();
    }
  }
  EXPECT_EQ(weights, 66744u);
  EXPECT_EQ(bn, 632u);
  EXPECT_EQ(weights + bn, 67376u);
  EXPECT_EQ(other, 0u);
  const auto* first = std::get_if<Conv1d>(&net.layers()[0]);
  ASSERT_NE(first, nullptr);
  EXPECT_EQ(first->weights().size(), 128u);
}

TEST(BuildBaseline, BlockOrder) {
  const NetworkSpec spec = make_spec(ModelKind::Baseline);
  for (int b = 1; b <= 6; ++b) {
    EXPECT_EQ(kinds_of_block(spec, b), (std::vector<LayerKind>{LayerKind::Conv, LayerKind::BatchNorm,
                                                               LayerKind::MaxPool, LayerKind::Relu}));
  }
  EXPECT_EQ(kinds_of_block(spec, 7),
            (std::vector<LayerKind>{LayerKind::Conv, LayerKind::BatchNorm, LayerKind::MaxPool}));
  const auto n = spec.layers.size();
  EXPECT_EQ(spec.layers[n - 2].kind, LayerKind::Dropout);
  EXPECT_EQ(spec.layers[n - 1].kind, LayerKind::Dense);
}

TEST(BuildBinarized, BlockOrderAndFirstBlockInput) {
  const NetworkSpec spec = make_spec(ModelKind::BTPN);
  for (int b = 1; b <= 7; ++b) {
    EXPECT_EQ(kinds_of_block(spec, b), (std::vector<LayerKind>{LayerKind::Conv, LayerKind::MaxPool,
                                                               LayerKind::BatchNorm, LayerKind::Sign}));
  }
  Network net(spec, 1);
  bool first = true;
  std::size_t bits = 0;
  for (const Layer& l : net.layers()) {
    if (const auto* c = std::get_if<Conv1d>(&l)) {
      EXPECT_TRUE(c->binarized());
      EXPECT_EQ(c->binary_input(), !first);
      EXPECT_EQ(c->ste(), SteKind::TanhGrad);
      bits += c->weights().size();
      first = false;
    } else if (const auto* s = std::get_if<SignActivation>(&l)) {
      EXPECT_EQ(s->ste(), SteKind::PolyGrad);
      EXPECT_FALSE(s->learnable());
    } else if (const auto* d = std::get_if<Dense>(&l)) {
      EXPECT_TRUE(d->binarized());
      EXPECT_TRUE(d->binary_input());
      bits += d->weights().size();
    }
  }
  EXPECT_EQ(bits, 66744u);
  for (const auto& p : net.parameters()) {
    if (p.role == ParamRole::Weight) {
      EXPECT_TRUE(p.clip_unit);
    }
  }
}

TEST(BinConfig, NameMapping) {
  using enum SteKind;
  auto check = [](ModelKind k, SteKind w, SteKind a, bool learnable) {
    const BinConfig c = BinConfig::for_model(k);
    EXPECT_EQ(c.weights, w) << model_name(k);
    EXPECT_EQ(c.activations, a) << model_name(k);
    EXPECT_EQ(c.threshold.learnable, learnable) << model_name(k);
    EXPECT_EQ(model_kind_for(c), k);
  };
  check(ModelKind::BTTN, TanhGrad, TanhGrad, false);
  check(ModelKind::BTPN, TanhGrad, PolyGrad, false);
  check(ModelKind::BPPN, PolyGrad, PolyGrad, false);
  check(ModelKind::BPTN, PolyGrad, TanhGrad, false);
  check(ModelKind::BTPNAlpha, TanhGrad, PolyGrad, true);
  EXPECT_THROW(BinConfig::for_model(ModelKind::Baseline), std::invalid_argument);
}

TEST(ModelKind, ParseNames) {
  for (ModelKind k : kAllModelKinds) EXPECT_EQ(parse_model_kind(model_name(k)), k);
  EXPECT_EQ(parse_model_kind("BTPN"), ModelKind::BTPN);
  EXPECT_FALSE(parse_model_kind("resnet").has_value());
}

TEST(BuildBinarized, AlphaModelHasThresholdPerOutputChannel) {
  Network net = build_binarized(BinConfig::for_model(ModelKind::BTPNAlpha), 3);
  std::size_t sign_alphas = 0;
  for (const Layer& l : net.layers()) {
    if (const auto* s = std::get_if<SignActivation>(&l)) {
      EXPECT_TRUE(s->learnable());
      sign_alphas += s->alpha().size();
    }
    if (const auto* d = std::get_if<Dense>(&l)) {
      EXPECT_EQ(d->output_thresholds().size(), 5u);
    }
  }
  EXPECT_EQ(sign_alphas, 8u + 12 + 32 + 64 + 64 + 64 + 72);
}

TEST(ShapePlan, FullSegment) {
  const auto plan = shape_plan(make_spec(ModelKind::Baseline), 3600);
  EXPECT_EQ(plan, (std::vector<std::size_t>{1800, 449, 224, 111, 111, 54, 54, 26, 26, 13, 13, 6, 6, 3}));
  EXPECT_EQ(flatten_size(make_spec(ModelKind::Baseline), 3600), 216u);
  EXPECT_EQ(flatten_size(make_spec(ModelKind::BTPN), 3600), 216u);
}

TEST(ShapePlan, FirstLayerSpotCheck) {
  EXPECT_EQ((ConvGeometry{1, 8, 16, 2, 7}.output_length(16)), 8u);
}

TEST(ShapePlan, TooShortInputThrows) {
  EXPECT_THROW(shape_plan(make_spec(ModelKind::Baseline), 20), ShapeError);
  EXPECT_THROW(shape_plan(make_spec(ModelKind::Baseline), 0), ShapeError);
}

TEST(ShapePlan, ChangedHyperparameterBreaksDenseInput) {
  auto table = baseline_table();
  table[2].stride = 1;  // layer 3
  NetworkSpec spec = assemble_spec(ModelKind::Baseline, std::nullopt, table);
  EXPECT_NE(flatten_size(spec, 3600), 216u);
  EXPECT_THROW(Network(spec, 1), ShapeError);
}

TEST(Infer, FiveFiniteDeterministicScores) {
  for (ModelKind k : kAllModelKinds) {
    const Network net = build_model(k, 5);
    const auto seg = random_segment(9);
    const auto a = net.infer(seg);
    ASSERT_EQ(a.size(), 5u);
    for (Real v : a) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(a, net.infer(seg));
  }
}

TEST(Infer, WrongLengthThrows) {
  const Network net = build_baseline(1);
  EXPECT_THROW(net.infer(std::vector<Real>(3599)), std::invalid_argument);
}

TEST(Infer, PackedEqualsReferenceForEveryVariant) {
  for (ModelKind k : kAllModelKinds) {
    if (k == ModelKind::Baseline) continue;
    const Network net = build_model(k, 17);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto seg = random_segment(100 + s);
      EXPECT_EQ(net.infer(seg, BinaryKernel::Packed), net.infer(seg, BinaryKernel::Reference))
          << model_name(k);
    }
  }
}

TEST(Network, SameSeedSameWeights) {
  Network a = build_model(ModelKind::BTPN, 4), b = build_model(ModelKind::BTPN, 4);
  auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].value.begin(), pa[i].value.end(), pb[i].value.begin()));
  }
}

TEST(Network, InitWithinFanInBound) {
  Network net = build_baseline(2);
  for (const Layer& l : net.layers()) {
    if (const auto* c = std::get_if<Conv1d>(&l)) {
      const double b = std::sqrt(1.0 / static_cast<double>(c->geometry().in_channels * c->geometry().kernel));
      for (float w : c->weights()) EXPECT_LE(std::abs(w), b + 1e-7);
    }
  }
}
