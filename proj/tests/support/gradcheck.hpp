#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "xmodal/matrix.hpp"
#include "xmodal/rng.hpp"

namespace xmodal::testing {

// Central finite differences against an analytic gradient, reported as a
// global L2 relative error over all parameter entries.
//
// `f` evaluates the scalar loss at the given parameter values; it must be a
// pure function of them.
inline double grad_rel_error(
    const std::function<double(const std::vector<Matrix>&)>& f,
    std::vector<Matrix> params, const std::vector<Matrix>& analytic,
    double h = 1e-5) {
  double diff_sq = 0.0;
  double ref_sq = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      double saved = params[t].data()[i];
      params[t].data()[i] = saved + h;
      double fp = f(params);
      params[t].data()[i] = saved - h;
      double fm = f(params);
      params[t].data()[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double an = analytic[t].data()[i];
      diff_sq += (fd - an) * (fd - an);
      ref_sq += fd * fd;
    }
  }
  return std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols,
                            RandomStream& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Matrix random_unit_rows(std::size_t rows, std::size_t cols,
                               RandomStream& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
  return l2_normalize_rows(m);
}

}  // namespace xmodal::testing
