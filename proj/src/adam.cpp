#include "xmodal/adam.hpp"

#include <cmath>
#include <string>

namespace xmodal {

AdamState::AdamState(AdamConfig config, const std::vector<Matrix>& params)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Matrix& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamState::step(std::vector<Matrix>& params,
                     const std::vector<Matrix>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("adam: expected " + std::to_string(m_.size()) +
                     " parameter tensors, got " + std::to_string(params.size()) +
                     " params / " + std::to_string(grads.size()) + " grads");
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = params[t];
    const Matrix& g = grads[t];
    if (p.rows() != m_[t].rows() || p.cols() != m_[t].cols() ||
        g.rows() != p.rows() || g.cols() != p.cols())
      throw ShapeError("adam: tensor " + std::to_string(t) +
                       " shape mismatch, param " + shape_str(p) + " grad " +
                       shape_str(g) + " state " + shape_str(m_[t]));
    double* pd = p.data();
    const double* gd = g.data();
    double* md = m_[t].data();
    double* vd = v_[t].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      double grad = gd[i] + config_.weight_decay * pd[i];
      md[i] = b1 * md[i] + (1.0 - b1) * grad;
      vd[i] = b2 * vd[i] + (1.0 - b2) * grad * grad;
      double mhat = md[i] / bc1;
      double vhat = vd[i] / bc2;
      pd[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void AdamState::restore(std::uint64_t step, std::vector<Matrix> m,
                        std::vector<Matrix> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw ShapeError("adam restore: moment count mismatch");
  for (std::size_t t = 0; t < m.size(); ++t)
    if (m[t].rows() != m_[t].rows() || m[t].cols() != m_[t].cols() ||
        v[t].rows() != v_[t].rows() || v[t].cols() != v_[t].cols())
      throw ShapeError("adam restore: moment shape mismatch at tensor " +
                       std::to_string(t));
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace xmodal
