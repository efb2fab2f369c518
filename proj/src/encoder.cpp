#include "xmodal/encoder.hpp"

#include <cmath>
#include <string>

#include "xmodal/io.hpp"

namespace xmodal {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

std::vector<std::uint32_t> EncoderConfig::layer_dims() const {
  std::vector<std::uint32_t> dims;
  dims.reserve(1 + hidden_dims.size() + head_dims.size());
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.insert(dims.end(), head_dims.begin(), head_dims.end());
  return dims;
}

void EncoderConfig::validate() const {
  if (input_dim == 0) throw ValidationError("encoder input_dim: must be > 0");
  for (std::uint32_t d : hidden_dims)
    if (d == 0) throw ValidationError("encoder hidden_dims: must be > 0");
  for (std::uint32_t d : head_dims)
    if (d == 0) throw ValidationError("encoder head_dims: must be > 0");
  if (hidden_dims.empty() && head_dims.empty())
    throw ValidationError("encoder: needs at least one layer");
  if (embed_dim() < 2)
    throw ValidationError("encoder embed_dim: must be >= 2");
}

Encoder init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  RandomStream rng(derive_seed(seed, 0x656e63));
  Encoder enc;
  enc.config = config;
  auto dims = config.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t fan_in = dims[l];
    std::size_t fan_out = dims[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i)
      w.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    enc.weights.push_back(std::move(w));
    enc.biases.emplace_back(1, fan_out);
  }
  return enc;
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = matmul(x, w);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b(0, j);
  return y;
}

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
}

}  // namespace

Matrix forward(const Encoder& enc, const Matrix& batch) {
  if (batch.cols() != enc.config.input_dim)
    throw ShapeError("encoder forward: batch " + shape_str(batch) +
                     " for input_dim " + std::to_string(enc.config.input_dim));
  Matrix h = batch;
  for (std::size_t l = 0; l < enc.num_layers(); ++l) {
    h = affine(h, enc.weights[l], enc.biases[l]);
    if (l + 1 < enc.num_layers()) relu_inplace(h);
  }
  return l2_normalize_rows(h);
}

Matrix forward_trunk(const Encoder& enc, const Matrix& batch) {
  if (batch.cols() != enc.config.input_dim)
    throw ShapeError("encoder forward_trunk: batch " + shape_str(batch) +
                     " for input_dim " + std::to_string(enc.config.input_dim));
  Matrix h = batch;
  std::size_t trunk_layers = enc.config.hidden_dims.size();
  for (std::size_t l = 0; l < trunk_layers; ++l) {
    h = affine(h, enc.weights[l], enc.biases[l]);
    relu_inplace(h);
  }
  return h;
}

TracedEncoder trace_encoder(Tape& tape, const Encoder& enc) {
  TracedEncoder traced;
  traced.weights.reserve(enc.num_layers());
  traced.biases.reserve(enc.num_layers());
  for (std::size_t l = 0; l < enc.num_layers(); ++l) {
    traced.weights.push_back(tape.parameter(enc.weights[l]));
    traced.biases.push_back(tape.parameter(enc.biases[l]));
  }
  return traced;
}

Var forward(Tape& tape, const Encoder& enc, const TracedEncoder& traced,
            Var batch) {
  if (tape.value(batch).cols() != enc.config.input_dim)
    throw ShapeError("encoder forward: batch " +
                     shape_str(tape.value(batch)) + " for input_dim " +
                     std::to_string(enc.config.input_dim));
  Var h = batch;
  for (std::size_t l = 0; l < enc.num_layers(); ++l) {
    h = tape.add_rowvec(tape.matmul(h, traced.weights[l]), traced.biases[l]);
    if (l + 1 < enc.num_layers()) h = tape.relu(h);
  }
  return tape.l2_normalize_rows(h);
}

void write_encoder(BinaryWriter& w, const Encoder& enc) {
  w.u32(enc.config.input_dim);
  w.u32(static_cast<std::uint32_t>(enc.config.hidden_dims.size()));
  for (std::uint32_t d : enc.config.hidden_dims) w.u32(d);
  w.u32(static_cast<std::uint32_t>(enc.config.head_dims.size()));
  for (std::uint32_t d : enc.config.head_dims) w.u32(d);
  for (std::size_t l = 0; l < enc.num_layers(); ++l) {
    w.f64_array({enc.weights[l].data(), enc.weights[l].size()});
    w.f64_array({enc.biases[l].data(), enc.biases[l].size()});
  }
}

Encoder read_encoder(BinaryReader& r) {
  EncoderConfig config;
  config.input_dim = r.u32();
  config.hidden_dims.resize(r.u32());
  for (auto& d : config.hidden_dims) d = r.u32();
  config.head_dims.resize(r.u32());
  for (auto& d : config.head_dims) d = r.u32();
  config.validate();
  Encoder enc;
  enc.config = config;
  auto dims = config.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    r.f64_array({w.data(), w.size()});
    Matrix b(1, dims[l + 1]);
    r.f64_array({b.data(), b.size()});
    enc.weights.push_back(std::move(w));
    enc.biases.push_back(std::move(b));
  }
  return enc;
}

void save_encoder(const Encoder& enc, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("XMCK");
  w.u32(kCheckpointVersion);
  write_encoder(w, enc);
  w.close();
}

Encoder load_encoder(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic("XMCK");
  r.version(kCheckpointVersion, "encoder checkpoint");
  Encoder enc = read_encoder(r);
  r.expect_eof();
  return enc;
}

}  // namespace xmodal
