#pragma once

#include <cstddef>
#include <vector>

#include "xmodal/matrix.hpp"

namespace xmodal {

// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode autodiff over Matrix values. Nodes are appended in
// evaluation order, so the list is already topologically sorted; backward()
// walks it once in reverse. One tape per loss evaluation; tapes are not
// shared across threads.
class Tape {
 public:
  // Leaves. Constants never receive gradients; parameters always do.
  Var constant(Matrix value);
  Var parameter(Matrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);              // same shape
  Var add_rowvec(Var a, Var bias);    // bias is 1 x cols(a)
  Var mul(Var a, Var b);              // elementwise
  Var div(Var a, Var b);              // elementwise
  Var affine(Var a, double scale, double shift);
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a);
  Var clamp_min(Var a, double lo);
  Var l2_normalize_rows(Var a, double eps = 1e-8);

  // sims[i][k] = x.row(i) . table.row(ids[i*group + k]); value is B x group.
  // `table` is typically a memory bank registered once as a constant.
  Var dot_rows(Var x, Var table, std::vector<std::size_t> ids,
               std::size_t group);

  Var row_sum(Var a);   // B x K -> B x 1
  Var sum_all(Var a);   // -> 1 x 1
  Var mean_all(Var a);  // -> 1 x 1

  // Mean softmax cross-entropy of logits (B x C) against integer labels.
  Var softmax_xent(Var logits, std::vector<std::size_t> labels);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;

  // Accumulates adjoints of every node reachable from `loss`, which must be
  // 1x1. May be called once per tape.
  void backward(Var loss);

  // Gradient of the loss w.r.t. node v; zero matrix if v never influenced
  // the loss. Only valid after backward().
  const Matrix& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Constant,
    Parameter,
    MatMul,
    Add,
    AddRowVec,
    Mul,
    Div,
    Affine,
    Exp,
    Log,
    Relu,
    ClampMin,
    L2NormalizeRows,
    DotRows,
    RowSum,
    SumAll,
    MeanAll,
    SoftmaxXent,
  };

  struct Node {
    Op op;
    std::size_t a = static_cast<std::size_t>(-1);
    std::size_t b = static_cast<std::size_t>(-1);
    double p0 = 0.0;
    double p1 = 0.0;
    std::size_t aux = 0;  // index into idlists_, group size in p0 for DotRows
    Matrix value;
    Matrix extra;  // op-specific cache (norms, softmax probabilities)
    bool requires_grad = false;
  };

  Var push(Node n);
  const Node& at(Var v) const;
  Matrix& adjoint_of(std::size_t id, const Matrix& like);

  std::vector<Node> nodes_;
  std::vector<std::vector<std::size_t>> idlists_;
  std::vector<Matrix> adjoints_;
  mutable Matrix zero_grad_;
  bool backward_done_ = false;
};

}  // namespace xmodal
