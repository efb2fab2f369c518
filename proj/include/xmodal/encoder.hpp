#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xmodal/matrix.hpp"
#include "xmodal/rng.hpp"
#include "xmodal/tape.hpp"

namespace xmodal {

class BinaryWriter;
class BinaryReader;

// MLP trunk plus projection head; the last head layer sets the embedding
// width and the output is always L2-normalized onto the unit sphere.
struct EncoderConfig {
  std::uint32_t input_dim = 32;
  std::vector<std::uint32_t> hidden_dims = {512, 512};
  std::vector<std::uint32_t> head_dims = {512, 512, 128};

  std::uint32_t embed_dim() const {
    return head_dims.empty() ? (hidden_dims.empty() ? input_dim
                                                    : hidden_dims.back())
                             : head_dims.back();
  }

  // All affine layer sizes in order: trunk then head.
  std::vector<std::uint32_t> layer_dims() const;

  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct Encoder {
  EncoderConfig config;
  std::vector<Matrix> weights;  // weights[l] is in_dim x out_dim
  std::vector<Matrix> biases;   // biases[l] is 1 x out_dim

  std::size_t num_layers() const { return weights.size(); }

  friend bool operator==(const Encoder&, const Encoder&) = default;
};

// Glorot-uniform weights, zero biases, deterministic in the seed.
Encoder init_encoder(const EncoderConfig& config, std::uint64_t seed);

// Untraced forward: rows of `batch` through all layers, relu between
// affine layers, unit-normalized output.
Matrix forward(const Encoder& enc, const Matrix& batch);

// Trunk output before the projection head (pre-head features, un-normalized
// except by the caller).
Matrix forward_trunk(const Encoder& enc, const Matrix& batch);

// Parameters of an encoder registered on a tape for one training step.
struct TracedEncoder {
  std::vector<Var> weights;
  std::vector<Var> biases;

  std::vector<Var> all_params() const {
    std::vector<Var> out = weights;
    out.insert(out.end(), biases.begin(), biases.end());
    return out;
  }
};

TracedEncoder trace_encoder(Tape& tape, const Encoder& enc);
Var forward(Tape& tape, const Encoder& enc, const TracedEncoder& traced,
            Var batch);

void save_encoder(const Encoder& enc, const std::filesystem::path& path);
Encoder load_encoder(const std::filesystem::path& path);

// Serialization of just the payload, shared with run-state checkpoints.
void write_encoder(BinaryWriter& w, const Encoder& enc);
Encoder read_encoder(BinaryReader& r);

}  // namespace xmodal
