#include "xmodal/tape.hpp"

#include <cmath>
#include <string>

namespace xmodal {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
}

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::at(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("tape: dangling Var");
  return nodes_[v.id];
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1)
    throw ContractError("tape: scalar() on " + shape_str(m) + " node");
  return m(0, 0);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  n.requires_grad = false;
  return push(std::move(n));
}

Var Tape::parameter(Matrix value) {
  Node n;
  n.op = Op::Parameter;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = xmodal::matmul(at(a).value, at(b).value);
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "add");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.value = va;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] += vb.data()[i];
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var bias) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(bias).value;
  if (vb.rows() != 1 || vb.cols() != va.cols())
    throw ShapeError("add_rowvec: bias " + shape_str(vb) + " for " +
                     shape_str(va));
  Node n;
  n.op = Op::AddRowVec;
  n.a = a.id;
  n.b = bias.id;
  n.value = va;
  for (std::size_t i = 0; i < va.rows(); ++i)
    for (std::size_t j = 0; j < va.cols(); ++j) n.value(i, j) += vb(0, j);
  n.requires_grad = at(a).requires_grad || at(bias).requires_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.value = va;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] *= vb.data()[i];
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "div");
  Node n;
  n.op = Op::Div;
  n.a = a.id;
  n.b = b.id;
  n.value = va;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] /= vb.data()[i];
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift) {
  Node n;
  n.op = Op::Affine;
  n.a = a.id;
  n.p0 = scale;
  n.p1 = shift;
  n.value = at(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] = n.value.data()[i] * scale + shift;
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n;
  n.op = Op::Exp;
  n.a = a.id;
  n.value = at(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] = std::exp(n.value.data()[i]);
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n;
  n.op = Op::Log;
  n.a = a.id;
  n.value = at(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] = std::log(n.value.data()[i]);
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::Relu;
  n.a = a.id;
  n.value = at(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    if (n.value.data()[i] < 0.0) n.value.data()[i] = 0.0;
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::clamp_min(Var a, double lo) {
  Node n;
  n.op = Op::ClampMin;
  n.a = a.id;
  n.p0 = lo;
  n.value = at(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i)
    if (n.value.data()[i] < lo) n.value.data()[i] = lo;
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::l2_normalize_rows(Var a, double eps) {
  const Matrix& va = at(a).value;
  Node n;
  n.op = Op::L2NormalizeRows;
  n.a = a.id;
  n.p0 = eps;
  n.value = Matrix(va.rows(), va.cols());
  n.extra = Matrix(va.rows(), 1);  // effective divisors, for backward
  for (std::size_t i = 0; i < va.rows(); ++i) {
    double norm = row_norm(va, i);
    double denom = std::max(norm, eps);
    n.extra(i, 0) = (norm >= eps) ? norm : -denom;  // sign marks the eps branch
    for (std::size_t j = 0; j < va.cols(); ++j)
      n.value(i, j) = va(i, j) / denom;
  }
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::dot_rows(Var x, Var table, std::vector<std::size_t> ids,
                   std::size_t group) {
  const Matrix& vx = at(x).value;
  const Matrix& vt = at(table).value;
  if (vx.cols() != vt.cols())
    throw ShapeError("dot_rows: width mismatch " + shape_str(vx) + " vs " +
                     shape_str(vt));
  if (group == 0 || ids.size() != vx.rows() * group)
    throw ContractError("dot_rows: need rows*group ids, got " +
                        std::to_string(ids.size()));
  for (std::size_t id : ids)
    if (id >= vt.rows())
      throw ValidationError("dot_rows: id " + std::to_string(id) +
                            " out of range for " + shape_str(vt));
  Node n;
  n.op = Op::DotRows;
  n.a = x.id;
  n.b = table.id;
  n.p0 = static_cast<double>(group);
  n.aux = idlists_.size();
  idlists_.push_back(std::move(ids));
  n.value = Matrix(vx.rows(), group);
  const auto& list = idlists_[n.aux];
  for (std::size_t i = 0; i < vx.rows(); ++i)
    for (std::size_t k = 0; k < group; ++k)
      n.value(i, k) = row_dot(vx, i, vt, list[i * group + k]);
  n.requires_grad = at(x).requires_grad || at(table).requires_grad;
  return push(std::move(n));
}

Var Tape::row_sum(Var a) {
  const Matrix& va = at(a).value;
  Node n;
  n.op = Op::RowSum;
  n.a = a.id;
  n.value = Matrix(va.rows(), 1);
  for (std::size_t i = 0; i < va.rows(); ++i) {
    double s = 0.0;
    for (double v : va.row(i)) s += v;
    n.value(i, 0) = s;
  }
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::sum_all(Var a) {
  const Matrix& va = at(a).value;
  Node n;
  n.op = Op::SumAll;
  n.a = a.id;
  n.value = Matrix(1, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va.data()[i];
  n.value(0, 0) = s;
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::mean_all(Var a) {
  const Matrix& va = at(a).value;
  if (va.size() == 0) throw ContractError("mean_all: empty input");
  Node n;
  n.op = Op::MeanAll;
  n.a = a.id;
  n.value = Matrix(1, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va.data()[i];
  n.value(0, 0) = s / static_cast<double>(va.size());
  n.requires_grad = at(a).requires_grad;
  return push(std::move(n));
}

Var Tape::softmax_xent(Var logits, std::vector<std::size_t> labels) {
  const Matrix& vl = at(logits).value;
  if (labels.size() != vl.rows())
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                     " labels for " + shape_str(vl));
  for (std::size_t y : labels)
    if (y >= vl.cols())
      throw ValidationError("softmax_xent: label " + std::to_string(y) +
                            " out of range for " + std::to_string(vl.cols()) +
                            " classes");
  Node n;
  n.op = Op::SoftmaxXent;
  n.a = logits.id;
  n.aux = idlists_.size();
  idlists_.push_back(std::move(labels));
  n.extra = Matrix(vl.rows(), vl.cols());  // softmax, reused in backward
  const auto& ys = idlists_[n.aux];
  double total = 0.0;
  for (std::size_t i = 0; i < vl.rows(); ++i) {
    double mx = vl(i, 0);
    for (std::size_t c = 1; c < vl.cols(); ++c) mx = std::max(mx, vl(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < vl.cols(); ++c) {
      n.extra(i, c) = std::exp(vl(i, c) - mx);
      z += n.extra(i, c);
    }
    for (std::size_t c = 0; c < vl.cols(); ++c) n.extra(i, c) /= z;
    total += std::log(z) + mx - vl(i, ys[i]);
  }
  n.value = Matrix(1, 1);
  n.value(0, 0) = total / static_cast<double>(vl.rows());
  n.requires_grad = at(logits).requires_grad;
  return push(std::move(n));
}

Matrix& Tape::adjoint_of(std::size_t id, const Matrix& like) {
  Matrix& adj = adjoints_[id];
  if (adj.empty() && like.size() > 0) adj = Matrix(like.rows(), like.cols());
  return adj;
}

void Tape::backward(Var loss) {
  if (backward_done_) throw ContractError("tape: backward() already run");
  const Matrix& lv = at(loss).value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("tape: loss must be 1x1, got " + shape_str(lv));
  backward_done_ = true;

  adjoints_.assign(nodes_.size(), Matrix());
  adjoint_of(loss.id, lv)(0, 0) = 1.0;

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.requires_grad) continue;
    const Matrix& g = adjoints_[idx];
    if (g.empty()) continue;  // not on any path to the loss

    auto needs = [&](std::size_t id) {
      return id != static_cast<std::size_t>(-1) && nodes_[id].requires_grad;
    };

    switch (n.op) {
      case Op::Constant:
      case Op::Parameter:
        break;

      case Op::MatMul: {
        if (needs(n.a)) {
          Matrix da = xmodal::matmul(g, transpose(nodes_[n.b].value));
          Matrix& adj = adjoint_of(n.a, nodes_[n.a].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += da.data()[i];
        }
        if (needs(n.b)) {
          Matrix db = xmodal::matmul(transpose(nodes_[n.a].value), g);
          Matrix& adj = adjoint_of(n.b, nodes_[n.b].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += db.data()[i];
        }
        break;
      }

      case Op::Add: {
        for (std::size_t in : {n.a, n.b}) {
          if (!needs(in)) continue;
          Matrix& adj = adjoint_of(in, nodes_[in].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i];
        }
        break;
      }

      case Op::AddRowVec: {
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, nodes_[n.a].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i];
        }
        if (needs(n.b)) {
          Matrix& adj = adjoint_of(n.b, nodes_[n.b].value);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) adj(0, j) += g(i, j);
        }
        break;
      }

      case Op::Mul: {
        const Matrix& va = nodes_[n.a].value;
        const Matrix& vb = nodes_[n.b].value;
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] * vb.data()[i];
        }
        if (needs(n.b)) {
          Matrix& adj = adjoint_of(n.b, vb);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] * va.data()[i];
        }
        break;
      }

      case Op::Div: {
        const Matrix& va = nodes_[n.a].value;
        const Matrix& vb = nodes_[n.b].value;
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] / vb.data()[i];
        }
        if (needs(n.b)) {
          Matrix& adj = adjoint_of(n.b, vb);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] -= g.data()[i] * va.data()[i] /
                             (vb.data()[i] * vb.data()[i]);
        }
        break;
      }

      case Op::Affine: {
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, nodes_[n.a].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] * n.p0;
        }
        break;
      }

      case Op::Exp: {
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, nodes_[n.a].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] * n.value.data()[i];
        }
        break;
      }

      case Op::Log: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g.data()[i] / va.data()[i];
        }
        break;
      }

      case Op::Relu: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < adj.size(); ++i)
            if (va.data()[i] > 0.0) adj.data()[i] += g.data()[i];
        }
        break;
      }

      case Op::ClampMin: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < adj.size(); ++i)
            if (va.data()[i] > n.p0) adj.data()[i] += g.data()[i];
        }
        break;
      }

      case Op::L2NormalizeRows: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < va.rows(); ++i) {
            double marker = n.extra(i, 0);
            if (marker < 0.0) {
              // below-eps branch: plain scaling by 1/eps
              double inv = 1.0 / (-marker);
              for (std::size_t j = 0; j < va.cols(); ++j)
                adj(i, j) += g(i, j) * inv;
            } else {
              double norm = marker;
              double gy = 0.0;
              for (std::size_t j = 0; j < va.cols(); ++j)
                gy += g(i, j) * n.value(i, j);
              for (std::size_t j = 0; j < va.cols(); ++j)
                adj(i, j) += (g(i, j) - gy * n.value(i, j)) / norm;
            }
          }
        }
        break;
      }

      case Op::DotRows: {
        const Matrix& vx = nodes_[n.a].value;
        const Matrix& vt = nodes_[n.b].value;
        const auto& list = idlists_[n.aux];
        const std::size_t group = static_cast<std::size_t>(n.p0);
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, vx);
          for (std::size_t i = 0; i < vx.rows(); ++i)
            for (std::size_t k = 0; k < group; ++k) {
              double gv = g(i, k);
              if (gv == 0.0) continue;
              auto trow = vt.row(list[i * group + k]);
              for (std::size_t j = 0; j < vx.cols(); ++j)
                adj(i, j) += gv * trow[j];
            }
        }
        if (needs(n.b)) {
          Matrix& adj = adjoint_of(n.b, vt);
          for (std::size_t i = 0; i < vx.rows(); ++i)
            for (std::size_t k = 0; k < group; ++k) {
              double gv = g(i, k);
              if (gv == 0.0) continue;
              std::size_t id = list[i * group + k];
              auto xrow = vx.row(i);
              for (std::size_t j = 0; j < vx.cols(); ++j)
                adj(id, j) += gv * xrow[j];
            }
        }
        break;
      }

      case Op::RowSum: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          for (std::size_t i = 0; i < va.rows(); ++i)
            for (std::size_t j = 0; j < va.cols(); ++j) adj(i, j) += g(i, 0);
        }
        break;
      }

      case Op::SumAll: {
        if (needs(n.a)) {
          Matrix& adj = adjoint_of(n.a, nodes_[n.a].value);
          for (std::size_t i = 0; i < adj.size(); ++i)
            adj.data()[i] += g(0, 0);
        }
        break;
      }

      case Op::MeanAll: {
        if (needs(n.a)) {
          const Matrix& va = nodes_[n.a].value;
          Matrix& adj = adjoint_of(n.a, va);
          double s = g(0, 0) / static_cast<double>(va.size());
          for (std::size_t i = 0; i < adj.size(); ++i) adj.data()[i] += s;
        }
        break;
      }

      case Op::SoftmaxXent: {
        if (needs(n.a)) {
          const Matrix& vl = nodes_[n.a].value;
          const auto& ys = idlists_[n.aux];
          Matrix& adj = adjoint_of(n.a, vl);
          double s = g(0, 0) / static_cast<double>(vl.rows());
          for (std::size_t i = 0; i < vl.rows(); ++i)
            for (std::size_t c = 0; c < vl.cols(); ++c) {
              double soft = n.extra(i, c);
              adj(i, c) += s * (soft - (c == ys[i] ? 1.0 : 0.0));
            }
        }
        break;
      }
    }
  }
}

const Matrix& Tape::grad(Var v) const {
  if (!backward_done_) throw ContractError("tape: grad() before backward()");
  const Matrix& adj = adjoints_[v.id];
  if (!adj.empty()) return adj;
  const Matrix& val = at(v).value;
  zero_grad_ = Matrix(val.rows(), val.cols());
  return zero_grad_;
}

}  // namespace xmodal
