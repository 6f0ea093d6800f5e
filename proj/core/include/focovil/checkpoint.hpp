#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "focovil/model.hpp"
#include "focovil/optim.hpp"

namespace focovil::model {

/// Everything needed to evaluate a model or resume its training.
///
/// File format (JSON, one document):
///   {
///     "format": "focovil-checkpoint", "version": 1,
///     "model": {"input_dim", "hidden", "layers", "projection_mid",
///               "decoder_hidden", "use_projection", "seed"},
///     "epochs_completed": int, "next_lr": float,
///     "optimizer": null | {"step": int, "m": [[...]], "v": [[...]]},
///     "run_config": null | {...},
///     "parameters": [{"name": str, "shape": [rows, cols],
///                     "values": [row-major floats]}, ...]
///   }
/// Floats use shortest round-trip decimal text, so save -> load is bit-exact.
/// Optimizer moments are flattened row-major in parameter order.
struct Checkpoint {
  ModelParams params;
  int epochs_completed = 0;
  /// Learning rate the next epoch would use.
  double next_lr = 0.0;
  std::optional<train::AdamState> optimizer;
  /// Resolved run configuration (JSON text) or empty.
  std::string run_config_json;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError when unreadable and ParseError on malformed content.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace focovil::model
