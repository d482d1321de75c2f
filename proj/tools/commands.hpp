#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace binecg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Bad flags or values; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input files; exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainArgs {
  std::string model = "btpn";
  std::string data;
  std::string out = ".";
  std::string split = "uniform";
  double test_ratio = 0.2;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double lr = 1e-2;
  double lr_floor = 1e-4;
  std::size_t patience = 5;
  bool class_weighting = false;
  bool no_normalize = false;
  bool quiet = false;
};

struct EvalArgs {
  std::string weights;
  std::string data;
  std::string out;
  std::string confusion;
  bool no_normalize = false;
};

struct AccountArgs {
  std::string model = "btpn";
  std::size_t input_length = 3600;
  std::string out;
  bool table = false;
};

struct LandscapeArgs {
  std::string weights;
  std::string data;
  std::string out = "landscape.csv";
  std::size_t resolution = 21;
  double scale = 1.0;
  std::uint64_t seed = 1;
  std::size_t samples = 256;
  bool running_stats = false;
};

struct ExportArgs {
  std::string weights;
  std::string out;
};

struct ImportArgs {
  std::string json;
  std::string out;
};

struct SynthArgs {
  std::string out;
  std::string format;
  std::size_t per_class = 120;
  std::uint64_t seed = 20240501;
  double noise = 0.15;
};

void cmd_train(const TrainArgs& args);
void cmd_eval(const EvalArgs& args);
void cmd_account(const AccountArgs& args);
void cmd_landscape(const LandscapeArgs& args);
void cmd_export(const ExportArgs& args);
void cmd_import(const ImportArgs& args);
void cmd_synth(const SynthArgs& args);

}  // namespace binecg::cli
