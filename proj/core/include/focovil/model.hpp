#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "focovil/skeleton.hpp"
#include "focovil/tensor.hpp"

namespace focovil::model {

struct ModelConfig {
  /// Per-frame input size, 3 * n_joints.
  int input_dim = 48;
  /// Hidden units per GRU direction.
  int hidden = 64;
  /// Stacked bidirectional encoder layers.
  int layers = 3;
  /// Width of the projection bottleneck; 0 means latent_dim() / 2.
  int projection_mid = 0;
  /// Decoder GRU hidden size; 0 means `hidden`.
  int decoder_hidden = 0;
  /// When false the projection net is bypassed (g = identity).
  bool use_projection = true;
  std::uint64_t seed = 1;

  /// Latent size d = 2 * hidden (forward and backward final states).
  int latent_dim() const { return 2 * hidden; }
  int mid_dim() const { return projection_mid > 0 ? projection_mid : latent_dim() / 2; }
  int decoder_dim() const { return decoder_hidden > 0 ? decoder_hidden : hidden; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Gate weights stored fused in [update | reset | candidate] column order:
/// W is input_dim x 3H, U is H x 3H, b is 1 x 3H (row-vector convention,
/// gates = x W + h U + b).
struct GruCellParams {
  ad::Tensor W;
  ad::Tensor U;
  ad::Tensor b;

  int input_dim() const { return static_cast<int>(W.rows()); }
  int hidden() const { return static_cast<int>(U.rows()); }
};

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

/// Weights of the encoder f_e, projection g, and decoder f_d.
struct ModelParams {
  ModelConfig config;
  /// encoder[layer][0] runs forward in time, encoder[layer][1] backward.
  std::vector<std::array<GruCellParams, 2>> encoder;
  ad::Tensor proj_w1, proj_b1, proj_w2, proj_b2;
  /// Maps the (projected) latent code to the decoder's initial state.
  ad::Tensor adapter_w, adapter_b;
  GruCellParams decoder;
  ad::Tensor out_w, out_b;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, seeded
  /// from config.seed.
  static ModelParams initialize(const ModelConfig& config);
  /// All weights and biases set to zero.
  static ModelParams zeros(const ModelConfig& config);

  /// Every parameter tensor in a fixed order with a stable name.
  std::vector<NamedTensor> named_parameters() const;
  std::vector<ad::Tensor> parameters() const;
  std::size_t parameter_count() const;
  /// Deep copy: new leaves holding the same values.
  ModelParams clone() const;
};

/// Encoder output for one sequence.
using LatentCode = Eigen::RowVectorXd;

/// Standard GRU update:
///   z = s(x Wz + h Uz + bz), r = s(x Wr + h Ur + br),
///   c = tanh(x Wc + (r * h) Uc + bc), h' = (1 - z) * h + z * c.
/// x is B x input_dim, h is B x H.
ad::Tensor gru_cell(const ad::Tensor& x, const ad::Tensor& h, const GruCellParams& p);

/// Time-major batch: element t is the B x 3N matrix of frame t of every
/// sequence (joint-major within a row). All sequences must share length and
/// joint count.
std::vector<ad::Tensor> time_major_batch(std::span<const std::vector<skeleton::Pose>* const> seqs);
std::vector<ad::Tensor> time_major_batch(std::span<const skeleton::ActionSequence* const> seqs);

/// Stacked bidirectional GRU over a time-major batch. Returns B x d, the
/// concatenation of the top layer's forward state after the last frame and
/// backward state after the first frame.
ad::Tensor encode(std::span<const ad::Tensor> frames, const ModelParams& p);
/// Single-sequence encode without recording a tape.
LatentCode encode(const skeleton::ActionSequence& seq, const ModelParams& p);

/// affine(d -> mid) -> tanh -> affine(mid -> d). Identity when the config
/// disables the projection.
ad::Tensor project(const ad::Tensor& z, const ModelParams& p);

/// Zero-input decoder: the initial state is adapter(z_proj); each of the T
/// steps feeds an all-zero frame and emits out_w/out_b applied to the state.
/// Returns T tensors of shape B x input_dim.
std::vector<ad::Tensor> decode(const ad::Tensor& z_proj, int T, const ModelParams& p);

}  // namespace focovil::model
