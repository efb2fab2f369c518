#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "xmodal/matrix.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

class BinaryWriter;
class BinaryReader;

// Per-instance slow-moving unit-norm targets for both modalities, plus the
// partition constants frozen after their one-time estimate.
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(Matrix video_mem, Matrix audio_mem, double momentum);

  static MemoryBank random_init(std::size_t n, std::size_t embed_dim,
                                double momentum, std::uint64_t seed);
  static MemoryBank from_embeddings(const Matrix& video, const Matrix& audio,
                                    double momentum);

  std::size_t size() const { return video_mem_.rows(); }
  std::size_t embed_dim() const { return video_mem_.cols(); }
  double momentum() const { return momentum_; }

  const Matrix& video_mem() const { return video_mem_; }
  const Matrix& audio_mem() const { return audio_mem_; }

  // row <- normalize(m*old + (1-m)*new) for each listed instance.
  void ema_update(std::span<const std::size_t> ids, const Matrix& new_video,
                  const Matrix& new_audio);

  // K i.i.d. uniform draws (with replacement) from all instances minus
  // {self} minus `exclude`. Throws if nothing remains to sample.
  std::vector<std::size_t> sample_negatives(
      std::size_t self, std::size_t k, RandomStream& rng,
      std::span<const std::size_t> exclude = {}) const;

  // One-time estimate of the per-modality partition constants: the mean
  // over probe rows of the mean exponentiated similarity against the
  // matching memory. Frozen afterwards; calling twice is an error.
  void estimate_zbar(const Matrix& probe_video, const Matrix& probe_audio,
                     double tau);

  bool zbar_set() const { return zbar_v_.has_value(); }
  double zbar_v() const;
  double zbar_a() const;

  // Checkpoint restore of already-frozen constants.
  void set_zbar(std::optional<double> v, std::optional<double> a);

  friend bool operator==(const MemoryBank&, const MemoryBank&) = default;

 private:
  Matrix video_mem_;
  Matrix audio_mem_;
  double momentum_ = 0.5;
  std::optional<double> zbar_v_;
  std::optional<double> zbar_a_;
};

void save_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank load_bank(const std::filesystem::path& path);
void write_bank(BinaryWriter& w, const MemoryBank& bank);
MemoryBank read_bank(BinaryReader& r);

}  // namespace xmodal
