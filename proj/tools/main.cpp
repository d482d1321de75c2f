#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "binecg/errors.hpp"
#include "commands.hpp"

using namespace binecg::cli;

int main(int argc, char** argv) {
  CLI::App app{"binarized 1-D CNN for five-class ECG segments"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a model and write weights, history and metrics");
  t->add_option("--model", train.model, "baseline, bttn, btpn, bppn, bptn or btpn-alpha");
  t->add_option("--data", train.data, "segment file (csv or ecg1)")->required();
  t->add_option("--out", train.out, "output directory");
  t->add_option("--seed", train.seed, "initialization, shuffle and dropout seed");
  t->add_option("--split-seed", train.split_seed, "train/test split seed");
  t->add_option("--split", train.split, "uniform or table1");
  t->add_option("--test-ratio", train.test_ratio, "per-class test fraction for --split uniform");
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--lr", train.lr, "initial learning rate");
  t->add_option("--lr-floor", train.lr_floor);
  t->add_option("--patience", train.patience, "plateau epochs before a learning-rate drop");
  t->add_flag("--class-weighting", train.class_weighting, "inverse-frequency loss weights");
  t->add_flag("--no-normalize", train.no_normalize, "skip per-segment z-scoring");
  t->add_flag("-q,--quiet", train.quiet);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a weight file on a segment file");
  e->add_option("--weights", eval.weights)->required();
  e->add_option("--data", eval.data)->required();
  e->add_option("--out", eval.out, "metrics JSON path (default stdout)");
  e->add_option("--confusion", eval.confusion, "confusion matrix CSV path");
  e->add_flag("--no-normalize", eval.no_normalize);

  AccountArgs account;
  auto* a = app.add_subcommand("account", "parameter, storage and operation census");
  a->add_option("--model", account.model);
  a->add_option("--input-length", account.input_length);
  a->add_option("--out", account.out, "report JSON path");
  a->add_flag("--table", account.table, "print the comparison table instead of JSON");

  LandscapeArgs land;
  auto* l = app.add_subcommand("landscape", "loss over two random filter-normalized directions");
  l->add_option("--weights", land.weights)->required();
  l->add_option("--data", land.data)->required();
  l->add_option("--out", land.out, "grid CSV path");
  l->add_option("--resolution", land.resolution, "odd grid size");
  l->add_option("--scale", land.scale);
  l->add_option("--seed", land.seed);
  l->add_option("--samples", land.samples);
  l->add_flag("--running-stats", land.running_stats, "normalize with stored BN statistics");

  ExportArgs exp;
  auto* x = app.add_subcommand("export", "weight file to JSON");
  x->add_option("--weights", exp.weights)->required();
  x->add_option("--out", exp.out)->required();

  ImportArgs imp;
  auto* i = app.add_subcommand("import", "JSON to weight file");
  i->add_option("--json", imp.json)->required();
  i->add_option("--out", imp.out)->required();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write the synthetic five-class segment set");
  s->add_option("--out", synth.out)->required();
  s->add_option("--format", synth.format, "csv or ecg1 (default from extension)");
  s->add_option("--per-class", synth.per_class);
  s->add_option("--seed", synth.seed);
  s->add_option("--noise", synth.noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*t) cmd_train(train);
    if (*e) cmd_eval(eval);
    if (*a) cmd_account(account);
    if (*l) cmd_landscape(land);
    if (*x) cmd_export(exp);
    if (*i) cmd_import(imp);
    if (*s) cmd_synth(synth);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const binecg::NumericError& err) {
    std::cerr << "numeric failure: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitOk;
}
