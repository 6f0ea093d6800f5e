#include "focovil/model.hpp"

#include <cmath>

#include "focovil/errors.hpp"
#include "focovil/rng.hpp"

namespace focovil::model {

using ad::Axis;
using ad::Matrix;
using ad::Tensor;

namespace {

Matrix uniform_matrix(Rng& rng, int rows, int cols, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

GruCellParams make_cell(int in, int h, Rng* rng) {
  GruCellParams c;
  if (rng) {
    c.W = Tensor::parameter(uniform_matrix(*rng, in, 3 * h, in));
    c.U = Tensor::parameter(uniform_matrix(*rng, h, 3 * h, h));
  } else {
    c.W = Tensor::parameter(Matrix::Zero(in, 3 * h));
    c.U = Tensor::parameter(Matrix::Zero(h, 3 * h));
  }
  c.b = Tensor::parameter(Matrix::Zero(1, 3 * h));
  return c;
}

void make_affine(Tensor& w, Tensor& b, int in, int out, Rng* rng) {
  w = Tensor::parameter(rng ? uniform_matrix(*rng, in, out, in) : Matrix(Matrix::Zero(in, out)));
  b = Tensor::parameter(Matrix::Zero(1, out));
}

ModelParams build(const ModelConfig& cfg, Rng* rng) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const int H = cfg.hidden;
  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? cfg.input_dim : 2 * H;
    p.encoder.push_back({make_cell(in, H, rng), make_cell(in, H, rng)});
  }
  const int d = cfg.latent_dim();
  make_affine(p.proj_w1, p.proj_b1, d, cfg.mid_dim(), rng);
  make_affine(p.proj_w2, p.proj_b2, cfg.mid_dim(), d, rng);
  make_affine(p.adapter_w, p.adapter_b, d, cfg.decoder_dim(), rng);
  p.decoder = make_cell(cfg.input_dim, cfg.decoder_dim(), rng);
  make_affine(p.out_w, p.out_b, cfg.decoder_dim(), cfg.input_dim, rng);
  return p;
}

// Cell with its recurrent weights pre-split, reused across time steps.
struct PreparedCell {
  const GruCellParams& p;
  int H;
  Tensor U_zr;
  Tensor U_c;

  explicit PreparedCell(const GruCellParams& params)
      : p(params),
        H(params.hidden()),
        U_zr(ad::slice_cols(params.U, 0, 2 * H)),
        U_c(ad::slice_cols(params.U, 2 * H, 3 * H)) {}

  Tensor step_from_gates(const Tensor& x_gates, const Tensor& h) const {
    const Tensor zr = ad::sigmoid(ad::slice_cols(x_gates, 0, 2 * H) + ad::matmul(h, U_zr));
    const Tensor z = ad::slice_cols(zr, 0, H);
    const Tensor r = ad::slice_cols(zr, H, 2 * H);
    const Tensor c =
        ad::tanh(ad::slice_cols(x_gates, 2 * H, 3 * H) + ad::matmul(ad::mul(r, h), U_c));
    // (1 - z) * h + z * c
    return h + ad::mul(z, c - h);
  }

  Tensor step(const Tensor& x, const Tensor& h) const {
    return step_from_gates(ad::matmul(x, p.W) + p.b, h);
  }
};

void check_cell_shapes(const Tensor& x, const Tensor& h, const GruCellParams& p) {
  if (x.cols() != p.input_dim() || h.cols() != p.hidden() || x.rows() != h.rows()) {
    throw ShapeMismatch("gru_cell: x " + x.shape().str() + ", h " + h.shape().str() +
                        " for cell (" + std::to_string(p.input_dim()) + " -> " +
                        std::to_string(p.hidden()) + ")");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1) throw InvalidConfig("model.input_dim must be positive");
  if (hidden < 1) throw InvalidConfig("model.hidden must be positive");
  if (layers < 1) throw InvalidConfig("model.layers must be positive");
  if (projection_mid < 0) throw InvalidConfig("model.projection_mid must be >= 0");
  if (decoder_hidden < 0) throw InvalidConfig("model.decoder_hidden must be >= 0");
}

ModelParams ModelParams::initialize(const ModelConfig& config) {
  Rng rng(derive_seed(config.seed, 0x30DE1));
  return build(config, &rng);
}

ModelParams ModelParams::zeros(const ModelConfig& config) { return build(config, nullptr); }

std::vector<NamedTensor> ModelParams::named_parameters() const {
  std::vector<NamedTensor> out;
  auto cell = [&](const std::string& prefix, const GruCellParams& c) {
    out.push_back({prefix + ".W", c.W});
    out.push_back({prefix + ".U", c.U});
    out.push_back({prefix + ".b", c.b});
  };
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    cell("encoder.l" + std::to_string(l) + ".fwd", encoder[l][0]);
    cell("encoder.l" + std::to_string(l) + ".bwd", encoder[l][1]);
  }
  out.push_back({"projection.fc1.W", proj_w1});
  out.push_back({"projection.fc1.b", proj_b1});
  out.push_back({"projection.fc2.W", proj_w2});
  out.push_back({"projection.fc2.b", proj_b2});
  out.push_back({"decoder.adapter.W", adapter_w});
  out.push_back({"decoder.adapter.b", adapter_b});
  cell("decoder.gru", decoder);
  out.push_back({"decoder.out.W", out_w});
  out.push_back({"decoder.out.b", out_b});
  return out;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  for (auto& nt : named_parameters()) out.push_back(nt.tensor);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += static_cast<std::size_t>(t.shape().size());
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = zeros(config);
  auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].mutable_value() = src[i].value();
  return copy;
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruCellParams& p) {
  check_cell_shapes(x, h, p);
  return PreparedCell(p).step(x, h);
}

std::vector<Tensor> time_major_batch(std::span<const std::vector<skeleton::Pose>* const> seqs) {
  if (seqs.empty() || seqs.front()->empty()) throw ShapeMismatch("time_major_batch of zero sequences");
  const auto T = static_cast<int>(seqs.front()->size());
  const auto N = static_cast<int>(seqs.front()->front().rows());
  const auto B = static_cast<Eigen::Index>(seqs.size());
  std::vector<Tensor> frames;
  frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    Matrix m(B, 3 * N);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& s = *seqs[b];
      if (static_cast<int>(s.size()) != T || s[t].rows() != N) {
        throw ShapeMismatch("sequences in a batch must share length and joint count");
      }
      m.row(b) = Eigen::Map<const Eigen::RowVectorXd>(s[t].data(), 3 * N);
    }
    frames.push_back(Tensor::constant(std::move(m)));
  }
  return frames;
}

std::vector<Tensor> time_major_batch(std::span<const skeleton::ActionSequence* const> seqs) {
  std::vector<const std::vector<skeleton::Pose>*> frames;
  frames.reserve(seqs.size());
  for (const auto* s : seqs) frames.push_back(&s->frames);
  return time_major_batch(frames);
}

Tensor encode(std::span<const Tensor> frames, const ModelParams& p) {
  if (frames.empty()) throw ShapeMismatch("encode: empty sequence");
  const auto T = frames.size();
  const auto B = frames.front().rows();
  const int H = p.config.hidden;
  for (const auto& f : frames) {
    if (f.cols() != p.config.input_dim || f.rows() != B) {
      throw ShapeMismatch("encode: frame " + f.shape().str() + ", expected (Bx" +
                          std::to_string(p.config.input_dim) + ")");
    }
  }
  std::vector<Tensor> inputs(frames.begin(), frames.end());
  const Tensor h0 = Tensor::constant(Matrix::Zero(B, H));
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    const PreparedCell fwd(p.encoder[l][0]);
    const PreparedCell bwd(p.encoder[l][1]);
    std::vector<Tensor> hf(T), hb(T);
    Tensor h = h0;
    for (std::size_t t = 0; t < T; ++t) hf[t] = h = fwd.step(inputs[t], h);
    h = h0;
    for (std::size_t t = T; t-- > 0;) hb[t] = h = bwd.step(inputs[t], h);
    if (l + 1 == p.encoder.size()) return ad::concat({hf[T - 1], hb[0]}, Axis::Cols);
    for (std::size_t t = 0; t < T; ++t) inputs[t] = ad::concat({hf[t], hb[t]}, Axis::Cols);
  }
  throw ShapeMismatch("encode: model has no encoder layers");
}

LatentCode encode(const skeleton::ActionSequence& seq, const ModelParams& p) {
  ad::NoGradGuard no_grad;
  const skeleton::ActionSequence* one[] = {&seq};
  const auto frames = time_major_batch(one);
  return encode(frames, p).value().row(0);
}

Tensor project(const Tensor& z, const ModelParams& p) {
  if (z.cols() != p.config.latent_dim()) {
    throw ShapeMismatch("project: latent " + z.shape().str() + ", expected width " +
                        std::to_string(p.config.latent_dim()));
  }
  if (!p.config.use_projection) return z;
  const Tensor mid = ad::tanh(ad::matmul(z, p.proj_w1) + p.proj_b1);
  return ad::matmul(mid, p.proj_w2) + p.proj_b2;
}

std::vector<Tensor> decode(const Tensor& z_proj, int T, const ModelParams& p) {
  if (z_proj.cols() != p.config.latent_dim()) {
    throw ShapeMismatch("decode: code " + z_proj.shape().str() + ", expected width " +
                        std::to_string(p.config.latent_dim()));
  }
  if (T < 1) throw ShapeMismatch("decode: T must be positive");
  const auto B = z_proj.rows();
  const PreparedCell cell(p.decoder);
  const Tensor empty_frame = Tensor::constant(Matrix::Zero(B, p.config.input_dim));
  // The input is the same zero frame at every step, so its gate
  // contribution (0 * W + b) is shared across steps.
  const Tensor x_gates = ad::matmul(empty_frame, p.decoder.W) + p.decoder.b;
  Tensor h = ad::matmul(z_proj, p.adapter_w) + p.adapter_b;
  std::vector<Tensor> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    h = cell.step_from_gates(x_gates, h);
    out.push_back(ad::matmul(h, p.out_w) + p.out_b);
  }
  return out;
}

}  // namespace focovil::model
