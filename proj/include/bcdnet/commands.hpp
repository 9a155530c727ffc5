#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "bcdnet/config.hpp"

namespace bcdnet::app {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;   // validation or assertion failure
inline constexpr int kExitIoError = 2;  // I/O, dataset or config error

// Peak resident set size of this process in bytes.
std::size_t peak_rss_bytes();

struct SynthOptions {
  std::filesystem::path out_dir;
  std::size_t n_per_class = 40;
  std::uint64_t seed = 0;
  std::size_t size = 50;
};

struct TrainOptions {
  TrainConfig config;
  std::filesystem::path data_root;
  std::filesystem::path out_dir;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data_root;
  data::Split split = data::Split::Test;
  // Defaults to <checkpoint dir>/eval_<split>.json.
  std::optional<std::filesystem::path> out_json;
  bool deterministic = true;
};

struct GradcheckOptions {
  std::size_t seeds = 10;
  std::optional<std::string> corrupt;
};

struct BenchOptions {
  TrainConfig config;
  // Empty: synthetic random input instead of real images.
  std::filesystem::path data_root;
  std::size_t batches = 100;
  std::size_t warmup = 10;
  std::optional<std::filesystem::path> out_json;
};

struct StatsOptions {
  std::filesystem::path data_root;
  std::uint64_t seed = 0;
  std::size_t target_hw = 224;
  // When set, the config is read, its augment mean/std replaced and the
  // result written to out_config (or back in place).
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out_config;
};

// Every command reports progress on `out`, errors on `err`, and returns an
// exit code instead of throwing.
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err);

// metrics.csv header, in MetricsRecord field order.
inline constexpr const char* kMetricsHeader =
    "epoch,split,loss,accuracy,lr,epoch_wall_time_s,peak_rss_bytes";

}  // namespace bcdnet::app
