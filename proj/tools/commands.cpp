#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "binecg/data.hpp"
#include "binecg/errors.hpp"
#include "binecg/evaluation.hpp"
#include "binecg/resources.hpp"
#include "binecg/training.hpp"
#include "binecg/weights_io.hpp"

namespace binecg::cli {
namespace fs = std::filesystem;

namespace {

ModelKind model_or_usage(const std::string& name) {
  const auto kind = parse_model_kind(name);
  if (!kind) {
    throw UsageError("unknown model '" + name +
                     "' (expected baseline, bttn, btpn, bppn, bptn or btpn-alpha)");
  }
  return *kind;
}

std::vector<EcgSegment> load_data(const std::string& path, bool normalize_segments) {
  std::vector<EcgSegment> segments;
  try {
    segments = load_segments(path);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  if (segments.empty()) throw DataError(path + ": no segments");
  if (normalize_segments) {
    std::size_t flat = 0;
    for (auto& s : segments) {
      auto r = normalize(s);
      flat += r.constant_signal ? 1 : 0;
      s = std::move(r.segment);
    }
    if (flat > 0) {
      std::cerr << "warning: " << flat << " constant segment(s) normalized to zeros\n";
    }
  }
  return segments;
}

Network load_network(const std::string& path) {
  try {
    return load_weights(fs::path(path));
  } catch (const FormatError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void cmd_train(const TrainArgs& args) {
  const ModelKind kind = model_or_usage(args.model);
  TrainConfig cfg;
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch_size;
  cfg.seed = args.seed;
  cfg.initial_lr = args.lr;
  cfg.lr_floor = args.lr_floor;
  cfg.plateau_patience = args.patience;
  cfg.class_weighting = args.class_weighting;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ClassRatios ratios;
  if (args.split == "table1") {
    ratios = table1_ratios();
  } else if (args.split == "uniform") {
    if (!(args.test_ratio > 0.0 && args.test_ratio < 1.0)) {
      throw UsageError("--test-ratio must lie in (0, 1)");
    }
    ratios = uniform_ratios(args.test_ratio);
  } else {
    throw UsageError("unknown split '" + args.split + "' (expected uniform or table1)");
  }

  const auto segments = load_data(args.data, !args.no_normalize);
  DatasetSplit split;
  try {
    split = stratified_split(segments, ratios, args.split_seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  fs::create_directories(args.out);
  Network net = build_model(kind, args.seed);
  const auto history = train(net, split, cfg, [&](const EpochRecord& e) {
    if (!args.quiet) {
      std::fprintf(stderr, "epoch %zu loss %.5f acc %.4f lr %g\n", e.epoch, e.loss,
                   e.test_accuracy, e.lr);
    }
  });
  const fs::path dir(args.out);
  save_weights(dir / "weights.becg", net);
  write_text(dir / "history.csv", history.to_csv());
  if (!split.test.empty()) {
    const Metrics m = evaluate(net, split.test);
    write_text(dir / "metrics.json", m.to_json());
    write_text(dir / "confusion.csv", m.confusion_csv());
    std::cout << m.to_json();
  }
}

void cmd_eval(const EvalArgs& args) {
  const Network net = load_network(args.weights);
  const auto segments = load_data(args.data, !args.no_normalize);
  const Metrics m = evaluate(net, segments);
  const std::string json = m.to_json();
  if (args.out.empty()) {
    std::cout << json;
  } else {
    write_text(args.out, json);
  }
  if (!args.confusion.empty()) write_text(args.confusion, m.confusion_csv());
}

void cmd_account(const AccountArgs& args) {
  const ModelKind kind = model_or_usage(args.model);
  if (args.input_length == 0) throw UsageError("--input-length must be positive");
  ResourceReport report;
  try {
    report = make_report(make_spec(kind), args.input_length);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  if (!args.out.empty()) write_text(args.out, report.to_json());
  if (args.table) {
    const ResourceReport base = make_report(make_spec(ModelKind::Baseline), args.input_length);
    const ResourceReport bin =
        kind == ModelKind::Baseline ? make_report(make_spec(ModelKind::BTPN), args.input_length)
                                    : report;
    std::cout << resource_table(base, bin);
  } else if (args.out.empty()) {
    std::cout << report.to_json();
  }
}

void cmd_landscape(const LandscapeArgs& args) {
  if (args.resolution % 2 == 0) throw UsageError("--resolution must be odd");
  const Network net = load_network(args.weights);
  const auto segments = load_data(args.data, true);
  LandscapeOptions opt;
  opt.resolution = args.resolution;
  opt.scale = args.scale;
  opt.seed = args.seed;
  opt.max_samples = args.samples;
  opt.batch_statistics = !args.running_stats;
  const LandscapeGrid grid = loss_landscape(net, segments, opt);
  write_text(args.out, grid.to_csv());
  std::printf("center %.9g axis_variance %.9g\n", grid.center(), grid.axis_variance());
}

void cmd_export(const ExportArgs& args) {
  const Network net = load_network(args.weights);
  write_text(args.out, weights_to_json(net));
}

void cmd_import(const ImportArgs& args) {
  Network net = [&] {
    try {
      return weights_from_json(read_text(args.json));
    } catch (const ParseError& e) {
      throw DataError(args.json + ": " + e.what());
    }
  }();
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw DataError("cannot write " + args.out);
  save_weights(out, net);
}

void cmd_synth(const SynthArgs& args) {
  SegmentFormat format;
  const std::string ext = fs::path(args.out).extension().string();
  const std::string name = args.format.empty() ? (ext == ".csv" ? "csv" : "ecg1") : args.format;
  if (name == "csv") {
    format = SegmentFormat::Csv;
  } else if (name == "ecg1") {
    format = SegmentFormat::Ecg1;
  } else {
    throw UsageError("unknown format '" + name + "' (expected csv or ecg1)");
  }
  if (args.per_class == 0) throw UsageError("--per-class must be positive");
  SyntheticOptions opt;
  opt.per_class = args.per_class;
  opt.seed = args.seed;
  opt.noise_sd = args.noise;
  const auto segments = make_synthetic_segments(opt);
  try {
    save_segments(args.out, segments, format);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

}  // namespace binecg::cli
