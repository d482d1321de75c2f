// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "binecg/bits.hpp"
#include "binecg/data.hpp"
#include "binecg/evaluation.hpp"
#include "binecg/layers.hpp"
#include "binecg/model.hpp"
#include "binecg/resources.hpp"
#include "binecg/training.hpp"
#include "binecg/weights_io.hpp"

using namespace binecg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ForwardContext infer_ctx(BinaryKernel k) {
  ForwardContext ctx;
  ctx.mode = Mode::Infer;
  ctx.kernel = k;
  return ctx;
}

// Real-arithmetic zero-padded correlation with sign(w).
Batch real_conv(const Batch& x, std::span<const float> w, const ConvGeometry& g) {
  const std::size_t L = x.length();
  const std::size_t out_len = (L + 2 * g.padding - g.kernel) / g.stride + 1;
  Batch y(x.batch(), g.out_channels, out_len);
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t p = 0; p < out_len; ++p) {
        Real acc = 0.0;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t t = 0; t < g.kernel; ++t) {
            const long pos = static_cast<long>(p * g.stride + t) - static_cast<long>(g.padding);
            if (pos < 0 || pos >= static_cast<long>(L)) continue;
            acc += sign_binarize(w[(o * g.in_channels + c) * g.kernel + t]) *
                   x.at(n, c, static_cast<std::size_t>(pos));
          }
        }
        y.at(n, o, p) = acc;
      }
    }
  }
  return y;
}

void randomize(std::span<float> w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : w) v = u(rng);
}

Batch bipolar(std::mt19937_64& rng, std::size_t n, std::size_t c, std::size_t l) {
  std::bernoulli_distribution coin(0.5);
  Batch b(n, c, l);
  for (Real& v : b.data()) v = coin(rng) ? 1.0 : -1.0;
  return b;
}

Outcome kernel_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> ch(1, 6), len(1, 48), kern(1, 9), stride(1, 3);
  std::size_t cases = 0, mismatches = 0;
  for (int trial = 0; trial < 8000; ++trial, ++cases) {
    ConvGeometry g{ch(rng), ch(rng), kern(rng), stride(rng), 0};
    g.padding = std::uniform_int_distribution<std::size_t>(0, g.kernel - 1)(rng);
    const std::size_t L = std::max(len(rng), g.kernel);
    Conv1d conv(g, true, SteKind::TanhGrad, true);
    randomize(conv.weights(), rng);
    const Batch x = bipolar(rng, 2, g.in_channels, L);
    if (conv.evaluate(x, infer_ctx(BinaryKernel::Packed)) != real_conv(x, conv.weights(), g)) ++mismatches;
  }
  std::uniform_int_distribution<std::size_t> in(1, 400), out(1, 8);
  for (int trial = 0; trial < 2000; ++trial, ++cases) {
    const std::size_t n_in = in(rng), n_out = out(rng);
    Dense dense(n_in, n_out, true, SteKind::PolyGrad, true);
    randomize(dense.weights(), rng);
    const Batch x = bipolar(rng, 2, n_in, 1);
    const Batch y = dense.evaluate(x, infer_ctx(BinaryKernel::Packed));
    const ConvGeometry g{n_in, n_out, 1, 1, 0};
    if (y != real_conv(x, dense.weights(), g)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  require(o, mismatches == 0, std::to_string(mismatches) + " mismatches");
  require(o, secs < 10.0, "took " + fmt("%.2f s", secs));
  o.detail = std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " +
             fmt("%.2f s", secs) + (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome parameter_census() {
  Outcome o;
  const std::size_t expected[] = {128, 1152, 3456, 14336, 20480, 12288, 13824, 1080};
  std::vector<std::size_t> rows;
  const Network net = build_baseline(1);
  for (const Layer& l : net.layers()) {
    if (const auto* c = std::get_if<Conv1d>(&l)) rows.push_back(c->weights().size());
    if (const auto* d = std::get_if<Dense>(&l)) rows.push_back(d->weights().size());
  }
  require(o, std::equal(rows.begin(), rows.end(), std::begin(expected), std::end(expected)),
          "per-layer counts differ");
  const auto report = make_report(make_spec(ModelKind::Baseline));
  const auto bin = make_report(make_spec(ModelKind::BTPN));
  require(o, report.weight_params == 66744, "weights " + std::to_string(report.weight_params));
  require(o, report.weight_params + report.bn_params == 67376, "total params");
  require(o, report.storage_bytes == 269504, "baseline storage " + std::to_string(report.storage_bytes));
  require(o, bin.storage_bytes == 10871, "btpn storage " + std::to_string(bin.storage_bytes));
  std::ostringstream d;
  d << "weights " << report.weight_params << ", total " << report.weight_params + report.bn_params
    << ", storage " << report.storage_bytes << " B (" << report.storage_bytes / 1024.0 << " KB) / "
    << bin.storage_bytes << " B (" << fmt("%.2f", bin.storage_bytes / 1024.0) << " KB)";
  o.detail = d.str() + (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome operation_counts() {
  Outcome o;
  const auto base = make_report(make_spec(ModelKind::Baseline));
  const auto bin = make_report(make_spec(ModelKind::BTPN));
  const double e_base = base.flops / 4.875e6 - 1.0;
  const double e_bops = bin.bops / 4.471e6 - 1.0;
  const double e_flops = bin.flops / 2.458e5 - 1.0;
  require(o, std::abs(e_base) <= 0.03, "baseline FLOPs");
  require(o, std::abs(e_bops) <= 0.03, "BTPN BOPs");
  require(o, std::abs(e_flops) <= 0.07, "BTPN FLOPs");
  std::cout << "  convention: " << base.convention.describe() << "\n";
  o.detail = "baseline FLOPs " + fmt("%.4e", base.flops) + " (" + fmt("%+.2f%%", 100 * e_base) +
             "), BTPN BOPs " + fmt("%.4e", bin.bops) + " (" + fmt("%+.2f%%", 100 * e_bops) +
             "), BTPN FLOPs " + fmt("%.4e", bin.flops) + " (" + fmt("%+.2f%%", 100 * e_flops) + ")" +
             (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome speedup_model() {
  Outcome o;
  const double own = speedup_estimate(make_report(make_spec(ModelKind::Baseline)),
                                      make_report(make_spec(ModelKind::BTPN)));
  const double published = speedup_estimate(4.875e6, 2.458e5, 4.471e6);
  require(o, own >= 12.0 && own <= 13.3, "own counts");
  require(o, std::abs(published - 12.64) <= 0.05, "published inputs");
  o.detail = "own " + fmt("%.3f", own) + "x, published inputs " + fmt("%.3f", published) + "x" +
             (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

ForwardContext smooth_ctx() {
  ForwardContext ctx;
  ctx.mode = Mode::Train;
  ctx.kernel = BinaryKernel::Reference;
  ctx.sign = SignMode::Smooth;
  return ctx;
}

Outcome gradient_checks() {
  Outcome o;
  // Unit values of the sign function and both surrogate derivatives.
  require(o, sign_binarize(0.0) == 1.0 && sign_binarize(-0.3) == -1.0 && sign_binarize(0.2, 0.3) == -1.0,
          "sign examples");
  require(o, ste_gradient(0.0, SteKind::TanhGrad) == 1.0, "tanh'(0)");
  require(o, std::abs(ste_gradient(1.0, SteKind::TanhGrad) - 0.419974341614026) < 1e-12, "tanh'(1)");
  require(o, ste_gradient(0.0, SteKind::PolyGrad) == 2.0 && ste_gradient(-0.5, SteKind::PolyGrad) == 1.0 &&
                 ste_gradient(1.5, SteKind::PolyGrad) == 0.0 && ste_gradient(-1.5, SteKind::PolyGrad) == 0.0,
          "poly examples");

  // Micro network with every layer type: conv, pool, BN, ReLU or Sign, dense.
  const std::vector<LayerDescriptor> table{
      {LayerKind::Conv, 1, 1, 3, 1, 3, 1, 1},  {LayerKind::MaxPool, 2, 1, 0, 0, 2, 2, 0},
      {LayerKind::Conv, 3, 2, 4, 3, 3, 1, 1},  {LayerKind::MaxPool, 4, 2, 0, 0, 2, 2, 0},
      {LayerKind::Dense, 5, 0, 3, 12, 0, 1, 0},
  };
  double worst = 0.0;
  std::size_t checked = 0;
  for (ModelKind kind : kAllModelKinds) {
    std::optional<BinConfig> cfg;
    if (kind != ModelKind::Baseline) cfg = BinConfig::for_model(kind);
    NetworkSpec spec = assemble_spec(kind, cfg, table);
    spec.input_length = 12;
    spec.num_classes = 3;
    spec.dropout_rate = 0.0;
    Network net(spec, 42);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> mag(0.1, 0.9), thr(-0.2, 0.2), u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (ParamView& p : net.parameters()) {
      if (p.role == ParamRole::Weight) {
        for (float& w : p.value) w = static_cast<float>(coin(rng) ? mag(rng) : -mag(rng));
      }
      if (p.role == ParamRole::Threshold) {
        for (float& a : p.value) a = static_cast<float>(thr(rng));
      }
    }
    Batch x(3, 1, 12);
    for (Real& v : x.data()) v = u(rng);
    const std::size_t labels[3] = {0, 2, 1};
    const ForwardContext ctx = smooth_ctx();
    auto loss = [&] {
      const Batch z = net.forward(x, ctx);
      Real s = 0.0;
      for (std::size_t n = 0; n < 3; ++n) s += cross_entropy(z.sample(n), labels[n]).loss;
      return s;
    };
    net.zero_grad();
    const Batch z = net.forward(x, ctx);
    Batch g(3, 3, 1);
    for (std::size_t n = 0; n < 3; ++n) {
      const auto ce = cross_entropy(z.sample(n), labels[n]);
      std::copy(ce.grad.begin(), ce.grad.end(), g.sample(n).begin());
    }
    net.backward(g);
    for (ParamView& p : net.parameters()) {
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const float orig = p.value[k];
        const float up = orig + 1e-4f, dn = orig - 1e-4f;
        p.value[k] = up;
        const Real lp = loss();
        p.value[k] = dn;
        const Real lm = loss();
        p.value[k] = orig;
        const Real numeric = (lp - lm) / (static_cast<Real>(up) - static_cast<Real>(dn));
        const Real scale = std::max({std::abs(p.grad[k]), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(p.grad[k] - numeric) / scale);
        ++checked;
      }
    }
  }
  require(o, worst < 1e-4, "relative error " + fmt("%.2e", worst));
  o.detail = std::to_string(checked) + " parameter gradients over 6 variants, worst relative error " +
             fmt("%.2e", worst) + (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome shape_consistency() {
  Outcome o;
  const auto plan = shape_plan(make_spec(ModelKind::Baseline), kSegmentLength);
  const std::size_t flat = flatten_size(make_spec(ModelKind::Baseline), kSegmentLength);
  std::size_t dense_in = 0;
  for (const auto& row : baseline_table()) {
    if (row.kind == LayerKind::Dense) dense_in = row.in_channels;
  }
  require(o, flat == 216 && flat == dense_in, "flatten " + std::to_string(flat));
  require(o, flatten_size(make_spec(ModelKind::BTPN), kSegmentLength) == 216, "binarized flatten");
  // Perturb each conv/pool stride in turn; every change must break the dense input.
  std::size_t broken = 0, perturbed = 0;
  const auto table = baseline_table();
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    auto t = table;
    t[i].stride += 1;
    ++perturbed;
    try {
      Network(assemble_spec(ModelKind::Baseline, std::nullopt, t), 1);
    } catch (const std::exception&) {
      ++broken;
    }
  }
  require(o, broken == perturbed, std::to_string(perturbed - broken) + " perturbations went unnoticed");
  o.detail = "final length " + std::to_string(plan.back()) + " x 72 channels = " + std::to_string(flat) + ", " +
             std::to_string(broken) + "/" + std::to_string(perturbed) + " stride perturbations rejected" +
             (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

struct Trained {
  Network baseline = build_model(ModelKind::Baseline, 1);
  Network btpn = build_model(ModelKind::BTPN, 1);
  DatasetSplit split;
};

Outcome training_sanity(Trained& t) {
  Outcome o;
  SyntheticOptions synth;  // documented default generator seed
  synth.per_class = 120;
  t.split = stratified_split(make_synthetic_segments(synth), uniform_ratios(1.0 / 6.0), 7);
  require(o, t.split.train.size() == 500 && t.split.test.size() == 100, "split sizes");

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 1;
  const auto t0 = Clock::now();
  const auto hb = train(t.baseline, t.split, cfg);
  const auto hn = train(t.btpn, t.split, cfg);
  const double secs = seconds_since(t0);
  const double acc_b = evaluate(t.baseline, t.split.test).oa;
  const double acc_n = evaluate(t.btpn, t.split.test).oa;
  require(o, acc_b >= 0.95, "baseline " + fmt("%.2f", acc_b));
  require(o, acc_n >= 0.90, "btpn " + fmt("%.2f", acc_n));
  require(o, secs < 300.0, "took " + fmt("%.0f s", secs));
  std::cout << "  final lr baseline " << hb.epochs.back().lr << ", btpn " << hn.epochs.back().lr << "\n";
  o.detail = "synthetic seed " + std::to_string(synth.seed) + ", 500/100, 30 epochs: baseline " +
             fmt("%.1f%%", 100 * acc_b) + ", BTPN " + fmt("%.1f%%", 100 * acc_n) + ", " + fmt("%.0f s", secs) +
             (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome tb_scheduler() {
  Outcome o;
  TrainConfig cfg;
  cfg.plateau_patience = 3;
  cfg.loss_ema = 0.0;
  auto lr_after = [&](const std::vector<Real>& losses) {
    TrainHistory h;
    for (std::size_t i = 0; i < losses.size(); ++i) h.epochs.push_back({i + 1, losses[i], 0.0, 0.0});
    return tb_lr_schedule(h, cfg);
  };
  // Improving for 5 epochs, then flat: drops land every `patience` flat epochs.
  std::vector<Real> losses{5, 4, 3, 2, 1};
  std::vector<Real> lrs;
  for (int e = 0; e < 20; ++e) {
    lrs.push_back(lr_after(losses));
    losses.push_back(1.0);
  }
  std::vector<std::size_t> drops;
  for (std::size_t i = 1; i < lrs.size(); ++i) {
    if (lrs[i] < lrs[i - 1]) drops.push_back(i);
  }
  // History lengths 5 + 3k reach the boundary: indices 3, 6 (then the floor holds).
  require(o, drops == std::vector<std::size_t>({3, 6}), "drop indices");
  bool monotone = true, floored = true;
  for (std::size_t i = 0; i < lrs.size(); ++i) {
    if (i > 0 && lrs[i] > lrs[i - 1]) monotone = false;
    if (lrs[i] < cfg.lr_floor) floored = false;
  }
  require(o, monotone, "lr increased");
  require(o, floored && lrs.back() == cfg.lr_floor, "floor");
  require(o, lr_after({1, 1, 1}) == cfg.initial_lr && lr_after({1, 1, 1, 1}) == cfg.initial_lr * cfg.lr_drop_factor,
          "patience boundary");
  std::ostringstream d;
  d << "drops after flat epochs 3 and 6, final lr " << lrs.back();
  o.detail = d.str() + (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome landscape_contrast(const Trained& t) {
  Outcome o;
  LandscapeOptions opt;
  opt.resolution = 11;
  opt.max_samples = 64;
  std::ostringstream d;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    opt.seed = seed;
    const double vb = loss_landscape(t.baseline, t.split.test, opt).axis_variance();
    const double vn = loss_landscape(t.btpn, t.split.test, opt).axis_variance();
    require(o, vn > vb, "seed " + std::to_string(seed));
    d << (seed > 1 ? ", " : "") << "seed " << seed << ": " << fmt("%.3g", vb) << " vs " << fmt("%.3g", vn);
  }
  o.detail = "axis variance baseline vs BTPN, " + d.str() + (o.detail.empty() ? "" : " [" + o.detail + "]");
  return o;
}

Outcome determinism_and_round_trips() {
  Outcome o;
  SyntheticOptions synth;
  synth.per_class = 12;
  const auto segs = make_synthetic_segments(synth);
  const auto split = stratified_split(segs, uniform_ratios(0.25), 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 9;
  auto run = [&](ModelKind k) {
    Network net = build_model(k, 5);
    const auto h = train(net, split, cfg);
    std::ostringstream w;
    save_weights(w, net);
    return std::make_pair(h, w.str());
  };
  for (ModelKind k : {ModelKind::Baseline, ModelKind::BTPN}) {
    const auto a = run(k), b = run(k);
    require(o, a.first == b.first, std::string(model_name(k)) + " history differs");
    require(o, a.second == b.second, std::string(model_name(k)) + " weights differ");
    std::istringstream in(a.second);
    std::ostringstream again;
    save_weights(again, load_weights(in));
    require(o, again.str() == a.second, std::string(model_name(k)) + " weight file round trip");
  }
  std::stringstream e1;
  write_ecg1(e1, segs);
  const std::string bytes = e1.str();
  const auto back = read_ecg1(e1);
  std::ostringstream e2;
  write_ecg1(e2, back);
  require(o, back == segs && e2.str() == bytes, "ecg1 round trip");
  o.detail = "repeated 3-epoch runs identical, weight and ecg1 files byte-exact" +
             (o.detail.empty() ? "" : std::string(" [") + o.detail + "]");
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail << std::endl;
  };
  Trained trained;
  report(1, "kernel equivalence", kernel_equivalence);
  report(2, "parameter census", parameter_census);
  report(3, "operation counts", operation_counts);
  report(4, "speedup model", speedup_model);
  report(5, "gradient checks", gradient_checks);
  report(6, "shape consistency", shape_consistency);
  report(7, "training sanity", [&] { return training_sanity(trained); });
  report(8, "learning-rate schedule", tb_scheduler);
  report(9, "loss landscape contrast", [&] {
    if (trained.split.test.empty()) throw std::runtime_error("criterion 7 did not produce trained models");
    return landscape_contrast(trained);
  });
  report(10, "determinism and round trips", determinism_and_round_trips);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed;
}
