#pragma once

#include <cstdint>
#include <vector>

#include "xmodal/matrix.hpp"

namespace xmodal {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

// Bias-corrected Adam over a flat list of parameter matrices.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, const std::vector<Matrix>& params);

  // Applies one update in place. Gradient shapes must match the parameters
  // this state was built for.
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);

  std::uint64_t step_count() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }

  const std::vector<Matrix>& first_moment() const noexcept { return m_; }
  const std::vector<Matrix>& second_moment() const noexcept { return v_; }

  // Checkpoint restore.
  void restore(std::uint64_t step, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace xmodal
