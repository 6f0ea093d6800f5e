#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace focovil::cli {

/// Process exit codes shared by every command.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kNonFinite = 4,
  kShapeMismatch = 5,
};

struct GenDataArgs {
  std::filesystem::path config;
  std::filesystem::path out;
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path data;
  std::filesystem::path out_dir;
  /// Overrides train.ablation from the config.
  std::optional<std::string> ablation;
  /// Continue from out_dir/checkpoint.json.
  bool resume = false;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  /// Overrides eval.split from the checkpoint's run config.
  std::optional<std::string> split;
  std::filesystem::path report;
  /// Defaults to the report path with "_embeddings.csv" replacing its extension.
  std::optional<std::filesystem::path> embeddings;
};

struct AblateArgs {
  std::filesystem::path config;
  std::filesystem::path data;
  std::filesystem::path out_dir;
};

// Each command reports progress on `out`, diagnostics on `err`, and returns
// an ExitCode instead of throwing.
int run_gen_data(const GenDataArgs& args, std::ostream& out, std::ostream& err);
int run_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int run_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);

/// Files written by `train` into its output directory.
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kEpochLogFile = "epochs.jsonl";
inline constexpr const char* kResolvedConfigFile = "resolved_config.json";
inline constexpr const char* kAblationTableFile = "ablation.csv";

}  // namespace focovil::cli
