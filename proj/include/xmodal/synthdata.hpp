#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "xmodal/matrix.hpp"
#include "xmodal/rng.hpp"

namespace xmodal {

// Recipe for a paired-modality dataset. Classes confounded in one modality
// share that modality's class mean, so only the other modality can tell
// them apart.
struct DatasetSpec {
  std::uint32_t num_classes = 16;
  std::uint32_t instances_per_class = 64;
  std::uint32_t dim_a = 32;
  std::uint32_t dim_b = 32;
  double noise_sigma = 0.05;     // per-view jitter around the anchor
  double instance_sigma = 0.1;   // instance spread around the class mean
  std::vector<std::pair<std::uint32_t, std::uint32_t>> confound_pairs_a;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> confound_pairs_b;
  std::uint64_t seed = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// The stock configuration used across commands and tests: 16 classes of 64,
// with four confounded pairs per modality.
DatasetSpec default_dataset_spec(std::uint64_t seed = 1234);

struct Instance {
  std::uint64_t id = 0;
  std::uint32_t label = 0;  // never visible to training, only to eval
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::uint32_t num_classes, std::vector<Instance> instances,
          Matrix anchors_a, Matrix anchors_b);

  std::size_t size() const { return instances_.size(); }
  std::uint32_t num_classes() const { return num_classes_; }
  std::uint32_t dim_a() const { return static_cast<std::uint32_t>(anchors_a_.cols()); }
  std::uint32_t dim_b() const { return static_cast<std::uint32_t>(anchors_b_.cols()); }

  const Instance& instance(std::size_t i) const { return instances_[i]; }
  std::uint32_t label(std::size_t i) const { return instances_[i].label; }
  std::vector<std::uint32_t> labels() const;

  const Matrix& anchors_a() const { return anchors_a_; }
  const Matrix& anchors_b() const { return anchors_b_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::uint32_t num_classes_ = 0;
  std::vector<Instance> instances_;
  Matrix anchors_a_;  // N x dim_a, one anchor row per instance
  Matrix anchors_b_;  // N x dim_b
};

Dataset generate(const DatasetSpec& spec);

// One stochastic view of an instance: anchor + noise_sigma * gaussian per
// modality. Fresh noise every call.
std::pair<std::vector<double>, std::vector<double>> sample_view(
    const Dataset& ds, std::size_t i, double noise_sigma, RandomStream& rng);

// Fills row `out_row` of the two view matrices in place.
void sample_view_into(const Dataset& ds, std::size_t i, double noise_sigma,
                      RandomStream& rng, Matrix& views_a, Matrix& views_b,
                      std::size_t out_row);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace xmodal
