#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "xmodal/adam.hpp"
#include "xmodal/matrix.hpp"
#include "xmodal/rng.hpp"
#include "xmodal/tape.hpp"

using namespace xmodal;
using xmodal::testing::grad_rel_error;
using xmodal::testing::random_matrix;

namespace {

Matrix make(std::size_t r, std::size_t c, std::initializer_list<double> vals) {
  Matrix m(r, c);
  std::size_t i = 0;
  for (double v : vals) m.data()[i++] = v;
  return m;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul identity and small literals") {
  Matrix eye = make(2, 2, {1, 0, 0, 1});
  Matrix v = make(2, 1, {3, 4});
  Matrix r = matmul(eye, v);
  CHECK(r == v);

  Matrix a = make(1, 2, {1, 2});
  Matrix b = make(2, 1, {3, 4});
  CHECK(matmul(a, b)(0, 0) == 11.0);
}

TEST_CASE("matmul matches naive oracle on random shapes up to 16") {
  RandomStream rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t m = 1 + rng.uniform_below(16);
    std::size_t k = 1 + rng.uniform_below(16);
    std::size_t n = 1 + rng.uniform_below(16);
    Matrix a = random_matrix(m, k, rng);
    Matrix b = random_matrix(k, n, rng);
    Matrix fast = matmul(a, b);
    Matrix ref = naive_matmul(a, b);
    for (std::size_t i = 0; i < fast.size(); ++i)
      CHECK(fast.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul 5x7 by 7x3 against oracle") {
  RandomStream rng(11);
  Matrix a = random_matrix(5, 7, rng);
  Matrix b = random_matrix(7, 3, rng);
  Matrix fast = matmul(a, b);
  Matrix ref = naive_matmul(a, b);
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(std::abs(fast.data()[i] - ref.data()[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Matrix a(3, 4);
  Matrix b(5, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("3x4"), ShapeError);
  try {
    matmul(a, b);
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("5x2") != std::string::npos);
  }
}

TEST_CASE("l2_normalize_rows basics") {
  Matrix m = make(1, 2, {3, 4});
  Matrix n = l2_normalize_rows(m);
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-15));

  Matrix z = make(1, 2, {0, 0});
  Matrix nz = l2_normalize_rows(z, 1e-8);
  CHECK(nz(0, 0) == 0.0);
  CHECK(nz(0, 1) == 0.0);

  RandomStream rng(3);
  Matrix big = random_matrix(6, 9, rng);
  Matrix nb = l2_normalize_rows(big);
  for (std::size_t i = 0; i < nb.rows(); ++i)
    CHECK(std::abs(row_norm(nb, i) - 1.0) < 1e-12);
}

TEST_CASE("l2_normalize_rows gradient vs finite differences") {
  RandomStream rng(17);
  Matrix x0 = random_matrix(3, 5, rng);
  Matrix w0 = random_matrix(5, 1, rng);

  auto loss = [&](const std::vector<Matrix>& params, Tape* tape_out,
                  std::vector<Var>* vars_out) {
    Tape tape;
    Var x = tape.parameter(params[0]);
    Var y = tape.l2_normalize_rows(x, 1e-8);
    Var w = tape.constant(w0);
    Var z = tape.matmul(y, w);
    Var l = tape.sum_all(tape.mul(z, z));
    if (tape_out) {
      *tape_out = std::move(tape);
      vars_out->push_back(x);
    }
    return l;
  };

  Tape tape;
  std::vector<Var> vars;
  Var l = loss({x0}, &tape, &vars);
  tape.backward(l);
  std::vector<Matrix> analytic = {tape.grad(vars[0])};

  double err = grad_rel_error(
      [&](const std::vector<Matrix>& p) {
        Tape t;
        Var x = t.parameter(p[0]);
        Var y = t.l2_normalize_rows(x, 1e-8);
        Var w = t.constant(w0);
        Var z = t.matmul(y, w);
        return t.scalar(t.sum_all(t.mul(z, z)));
      },
      {x0}, analytic);
  CHECK(err < 1e-6);
}

TEST_CASE("backward of parameter sum is all ones") {
  Tape tape;
  RandomStream rng(5);
  Matrix p0 = random_matrix(4, 3, rng);
  Var p = tape.parameter(p0);
  Var l = tape.sum_all(p);
  tape.backward(l);
  const Matrix& g = tape.grad(p);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 1.0);
}

TEST_CASE("backward of half squared norm is the parameter") {
  Tape tape;
  RandomStream rng(6);
  Matrix p0 = random_matrix(3, 3, rng);
  Var p = tape.parameter(p0);
  Var l = tape.affine(tape.sum_all(tape.mul(p, p)), 0.5, 0.0);
  tape.backward(l);
  const Matrix& g = tape.grad(p);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g.data()[i] == doctest::Approx(p0.data()[i]).epsilon(1e-14));
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Var p = tape.parameter(Matrix(2, 2));
  CHECK_THROWS_AS(tape.backward(p), ContractError);
}

TEST_CASE("unused parameter gets a zero gradient") {
  Tape tape;
  Var used = tape.parameter(Matrix::filled(2, 2, 1.0));
  Var unused = tape.parameter(Matrix::filled(3, 1, 2.0));
  Var l = tape.sum_all(used);
  tape.backward(l);
  const Matrix& g = tape.grad(unused);
  CHECK(g.rows() == 3);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 0.0);
}

TEST_CASE("per-op gradients match central finite differences") {
  RandomStream rng(23);

  auto check_op = [&](auto build, std::vector<Matrix> inputs,
                      double tol = 1e-5) {
    Tape tape;
    std::vector<Var> params;
    params.reserve(inputs.size());
    for (const Matrix& m : inputs) params.push_back(tape.parameter(m));
    Var l = build(tape, params);
    tape.backward(l);
    std::vector<Matrix> analytic;
    analytic.reserve(inputs.size());
    for (Var v : params) analytic.push_back(tape.grad(v));

    double err = grad_rel_error(
        [&](const std::vector<Matrix>& p) {
          Tape t;
          std::vector<Var> vars;
          vars.reserve(p.size());
          for (const Matrix& m : p) vars.push_back(t.parameter(m));
          return t.scalar(build(t, vars));
        },
        inputs, analytic);
    CHECK(err < tol);
  };

  SUBCASE("matmul") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum_all(t.matmul(v[0], v[1]));
        },
        {random_matrix(3, 4, rng), random_matrix(4, 2, rng)});
  }
  SUBCASE("add and add_rowvec") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum_all(t.mul(t.add_rowvec(t.add(v[0], v[1]), v[2]),
                                 t.add(v[0], v[1])));
        },
        {random_matrix(3, 4, rng), random_matrix(3, 4, rng),
         random_matrix(1, 4, rng)});
  }
  SUBCASE("div on positive inputs") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum_all(t.div(v[0], v[1]));
        },
        {random_matrix(3, 3, rng, 0.5, 1.5), random_matrix(3, 3, rng, 0.5, 1.5)});
  }
  SUBCASE("exp, log, affine chain") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.mean_all(t.log(t.affine(t.exp(v[0]), 2.0, 0.5)));
        },
        {random_matrix(4, 4, rng)});
  }
  SUBCASE("relu away from kink") {
    Matrix m = random_matrix(4, 4, rng);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (std::abs(m.data()[i]) < 0.05) m.data()[i] = 0.1;
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum_all(t.mul(t.relu(v[0]), t.relu(v[0])));
        },
        {m});
  }
  SUBCASE("clamp_min away from threshold") {
    Matrix m = random_matrix(4, 4, rng);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (std::abs(m.data()[i] - 0.2) < 0.05) m.data()[i] = 0.5;
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.sum_all(t.mul(t.clamp_min(v[0], 0.2), v[0]));
        },
        {m});
  }
  SUBCASE("row_sum and mean_all") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.mean_all(t.mul(t.row_sum(v[0]), t.row_sum(v[0])));
        },
        {random_matrix(5, 3, rng)});
  }
  SUBCASE("dot_rows into a constant table") {
    Matrix table = random_matrix(6, 4, rng);
    check_op(
        [&](Tape& t, const std::vector<Var>& v) {
          Var tab = t.constant(table);
          std::vector<std::size_t> ids = {0, 2, 5, 1, 3, 4};
          return t.sum_all(t.mul(t.dot_rows(v[0], tab, ids, 2),
                                 t.dot_rows(v[0], tab, ids, 2)));
        },
        {random_matrix(3, 4, rng)});
  }
  SUBCASE("dot_rows gradient reaches the table too") {
    check_op(
        [&](Tape& t, const std::vector<Var>& v) {
          std::vector<std::size_t> ids = {0, 1, 1, 2};
          return t.sum_all(t.mul(t.dot_rows(v[0], v[1], ids, 2),
                                 t.dot_rows(v[0], v[1], ids, 2)));
        },
        {random_matrix(2, 3, rng), random_matrix(3, 3, rng)});
  }
  SUBCASE("softmax cross-entropy") {
    check_op(
        [](Tape& t, const std::vector<Var>& v) {
          return t.softmax_xent(v[0], {2, 0, 1, 1});
        },
        {random_matrix(4, 3, rng)});
  }
}

TEST_CASE("tape evaluation is deterministic for a fixed seed") {
  auto run = [] {
    RandomStream rng(99);
    Tape tape;
    Var a = tape.parameter(random_matrix(6, 6, rng));
    Var b = tape.constant(random_matrix(6, 6, rng));
    Var l = tape.mean_all(tape.exp(tape.affine(tape.matmul(a, b), 0.1, 0.0)));
    tape.backward(l);
    return std::make_pair(tape.value(l), tape.grad(a));
  };
  auto [v1, g1] = run();
  auto [v2, g2] = run();
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("adam first step moves by about -lr*sign(g)") {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  std::vector<Matrix> params = {make(1, 3, {1.0, 2.0, 3.0})};
  std::vector<Matrix> grads = {make(1, 3, {0.5, -2.0, 1e-3})};
  AdamState adam(cfg, params);
  Matrix before = params[0];
  adam.step(params, grads);
  CHECK(adam.step_count() == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    double delta = params[0].data()[i] - before.data()[i];
    double expect = -cfg.learning_rate *
                    (grads[0].data()[i] > 0 ? 1.0 : -1.0);
    CHECK(delta == doctest::Approx(expect).epsilon(1e-4));
  }
}

TEST_CASE("adam with zero gradient and zero decay is a no-op") {
  AdamConfig cfg;
  std::vector<Matrix> params = {make(2, 2, {1, -2, 3, -4})};
  std::vector<Matrix> grads = {Matrix(2, 2)};
  AdamState adam(cfg, params);
  Matrix before = params[0];
  adam.step(params, grads);
  CHECK(params[0] == before);
}

TEST_CASE("adam converges on a quadratic") {
  AdamConfig cfg;
  cfg.learning_rate = 0.2;
  Matrix target = make(1, 4, {0.3, -0.7, 1.2, 0.0});
  std::vector<Matrix> params = {make(1, 4, {2.0, 2.0, -2.0, 1.0})};
  AdamState adam(cfg, params);

  auto distance = [&](const Matrix& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double d = p.data()[i] - target.data()[i];
      s += d * d;
    }
    return std::sqrt(s);
  };

  double initial = distance(params[0]);
  for (int it = 0; it < 50; ++it) {
    Matrix g(1, 4);
    for (std::size_t i = 0; i < 4; ++i)
      g.data()[i] = 2.0 * (params[0].data()[i] - target.data()[i]);
    std::vector<Matrix> grads = {g};
    adam.step(params, grads);
  }
  CHECK(distance(params[0]) < initial / 10.0);
}

TEST_CASE("adam rejects mismatched shapes") {
  AdamConfig cfg;
  std::vector<Matrix> params = {Matrix(2, 2)};
  AdamState adam(cfg, params);
  std::vector<Matrix> bad_grads = {Matrix(3, 2)};
  CHECK_THROWS_AS(adam.step(params, bad_grads), ShapeError);
}

TEST_CASE("rng streams are reproducible and forks are independent") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RandomStream s1(derive_seed(7, 1));
  RandomStream s2(derive_seed(7, 2));
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (s1.next_u64() == s2.next_u64()) ++same;
  CHECK(same == 0);

  RandomStream g(1);
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += g.gaussian();
  mean /= n;
  CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("rng state round-trips") {
  RandomStream a(5);
  a.next_u64();
  a.gaussian();
  auto st = a.state();
  RandomStream b(0);
  b.set_state(st);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}
