#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mbc/gradcheck.hpp"
#include "mbc/matrix.hpp"
#include "mbc/rng.hpp"
#include "mbc/tape.hpp"

using namespace mbc;

namespace {

Matrix rand_mat(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0,
                double hi = 2.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Gradient-checks a graph builder of a single parameter "x". The builder
// must return a 1x1 Var.
double check_unary(const Matrix& x,
                   const std::function<Var(Tape&, Var)>& build,
                   double h = 1e-5) {
  ParamStore params{{"x", x}};
  auto loss = [&](const ParamStore& p) {
    Tape tape;
    Var vx = tape.leaf(p.at("x"));
    return build(tape, vx).scalar();
  };
  auto grads = [&](const ParamStore& p) {
    Tape tape;
    Var vx = tape.leaf(p.at("x"));
    Var root = build(tape, vx);
    tape.backward(root);
    return ParamStore{{"x", vx.grad()}};
  };
  return grad_check(params, loss, grads, h).max_rel_err;
}

// Reduces an arbitrary-shaped node to 1x1 with fixed random weights so the
// whole Jacobian is exercised, not just the row sums.
Var weighted_sum(Tape& tape, Var y, std::uint64_t seed = 99) {
  Rng rng(seed);
  Matrix w = rand_mat(y.rows(), y.cols(), rng, -1.0, 1.0);
  return sum_all(hadamard(y, tape.constant(std::move(w))));
}

}  // namespace

TEST_CASE("matmul against identity is bitwise exact") {
  Rng rng(1);
  Matrix a = rand_mat(5, 5, rng);
  Matrix r = matmul(a, Matrix::identity(5));
  Matrix l = matmul(Matrix::identity(5), a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(r.data[i] == a.data[i]);
    CHECK(l.data[i] == a.data[i]);
  }
}

TEST_CASE("matmul_nt and matmul_tn match explicit transpose") {
  Rng rng(2);
  Matrix a = rand_mat(4, 6, rng);
  Matrix b = rand_mat(3, 6, rng);
  Matrix nt = matmul_nt(a, b);
  Matrix ref = matmul(a, transpose(b));
  REQUIRE(nt.same_shape(ref));
  for (std::size_t i = 0; i < nt.size(); ++i) {
    CHECK(nt.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
  }
  Matrix c = rand_mat(4, 5, rng);
  Matrix tn = matmul_tn(a, c);
  Matrix ref2 = matmul(transpose(a), c);
  REQUIRE(tn.same_shape(ref2));
  for (std::size_t i = 0; i < tn.size(); ++i) {
    CHECK(tn.data[i] == doctest::Approx(ref2.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("rng is serializable and deterministic") {
  Rng a(42);
  (void)a.next_u64();
  std::string state = a.serialize();
  Rng b;
  b.deserialize(state);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("gradcheck: matmul") {
  Rng rng(3);
  Matrix x = rand_mat(3, 4, rng);
  Matrix y = rand_mat(4, 2, rng);
  ParamStore params{{"x", x}, {"y", y}};
  auto build = [&](const ParamStore& p, Tape& tape, Var& vx, Var& vy) {
    vx = tape.leaf(p.at("x"));
    vy = tape.leaf(p.at("y"));
    return weighted_sum(tape, matmul(vx, vy));
  };
  auto loss = [&](const ParamStore& p) {
    Tape tape;
    Var vx, vy;
    return build(p, tape, vx, vy).scalar();
  };
  auto grads = [&](const ParamStore& p) {
    Tape tape;
    Var vx, vy;
    Var root = build(p, tape, vx, vy);
    tape.backward(root);
    return ParamStore{{"x", vx.grad()}, {"y", vy.grad()}};
  };
  CHECK(grad_check(params, loss, grads).max_rel_err < 1e-6);
}

TEST_CASE("gradcheck: elementwise and shape ops") {
  Rng rng(4);
  Matrix x = rand_mat(3, 5, rng);

  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, add(v, scale(v, 0.5)));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, sub(scale(v, 2.0), v));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, hadamard(v, v));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, div_scalar(v, 3.7));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, transpose(v));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, slice_cols(v, 1, 4));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, concat_cols({v, scale(v, -1.0)}));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, mean_stack({v, hadamard(v, v)}));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) { return sum_all(v); }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) { return mean_all(v); }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) { return l2_sq(v); }) < 1e-6);
}

TEST_CASE("gradcheck: broadcast ops") {
  Rng rng(5);
  Matrix x = rand_mat(4, 3, rng);
  Matrix bias = rand_mat(1, 3, rng);
  Matrix s = rand_mat(4, 1, rng);
  ParamStore params{{"b", bias}, {"s", s}, {"x", x}};
  auto build = [&](const ParamStore& p, Tape& tape, std::map<std::string, Var>& v) {
    v["x"] = tape.leaf(p.at("x"));
    v["b"] = tape.leaf(p.at("b"));
    v["s"] = tape.leaf(p.at("s"));
    return weighted_sum(tape, colwise_scale(add_rowvec(v["x"], v["b"]), v["s"]));
  };
  auto loss = [&](const ParamStore& p) {
    Tape tape;
    std::map<std::string, Var> v;
    return build(p, tape, v).scalar();
  };
  auto grads = [&](const ParamStore& p) {
    Tape tape;
    std::map<std::string, Var> v;
    Var root = build(p, tape, v);
    tape.backward(root);
    return ParamStore{
        {"b", v["b"].grad()}, {"s", v["s"].grad()}, {"x", v["x"].grad()}};
  };
  CHECK(grad_check(params, loss, grads).max_rel_err < 1e-6);
}

TEST_CASE("gradcheck: nonlinearities away from kinks") {
  Rng rng(6);
  Matrix x = rand_mat(3, 4, rng);
  // keep entries away from relu's kink at 0
  for (double& v : x.data) {
    if (std::abs(v) < 0.05) v = 0.2;
  }
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, relu(v));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, sigmoid(v));
        }) < 1e-6);
  CHECK(check_unary(x, [](Tape& t, Var v) {
          return weighted_sum(t, softmax_rows(v));
        }) < 1e-5);
  Matrix pos = rand_mat(3, 4, rng, 0.5, 2.0);
  CHECK(check_unary(pos, [](Tape& t, Var v) {
          return sum_all(rowwise_norm(v));
        }) < 1e-6);
  // clamp active and inactive regions, away from the floor
  Matrix c = rand_mat(3, 4, rng);
  for (double& v : c.data) {
    if (std::abs(v - 0.5) < 0.05) v = 1.0;
  }
  CHECK(check_unary(c, [](Tape& t, Var v) {
          return weighted_sum(t, clamp_min(v, 0.5));
        }) < 1e-6);
}

TEST_CASE("gradcheck: bce against constant and soft labels") {
  Rng rng(7);
  Matrix p = rand_mat(4, 1, rng, 0.05, 0.95);
  Matrix labels(4, 1);
  labels.data = {1.0, 0.0, 1.0, 0.0};
  CHECK(check_unary(p, [&](Tape& t, Var v) {
          return mean_all(bce_elem(v, labels));
        }) < 1e-6);

  Matrix q = rand_mat(4, 1, rng, 0.1, 0.9);
  ParamStore params{{"p", p}, {"q", q}};
  auto build = [&](const ParamStore& ps, Tape& tape, Var& vp, Var& vq) {
    vp = tape.leaf(ps.at("p"));
    vq = tape.leaf(ps.at("q"));
    return mean_all(bce_elem(vp, vq));
  };
  auto loss = [&](const ParamStore& ps) {
    Tape tape;
    Var vp, vq;
    return build(ps, tape, vp, vq).scalar();
  };
  auto grads = [&](const ParamStore& ps) {
    Tape tape;
    Var vp, vq;
    Var root = build(ps, tape, vp, vq);
    tape.backward(root);
    return ParamStore{{"p", vp.grad()}, {"q", vq.grad()}};
  };
  CHECK(grad_check(params, loss, grads).max_rel_err < 1e-6);
}

TEST_CASE("gradcheck: gather_mean; absent rows get zero gradient") {
  Rng rng(8);
  Matrix table = rand_mat(6, 3, rng);
  std::vector<std::vector<std::int32_t>> ids{{0, 2}, {}, {5}, {2, 2, 4}};
  ParamStore params{{"t", table}};
  auto loss = [&](const ParamStore& p) {
    Tape tape;
    Var vt = tape.leaf(p.at("t"));
    return weighted_sum(tape, gather_mean(vt, ids)).scalar();
  };
  auto grads = [&](const ParamStore& p) {
    Tape tape;
    Var vt = tape.leaf(p.at("t"));
    Var root = weighted_sum(tape, gather_mean(vt, ids));
    tape.backward(root);
    return ParamStore{{"t", vt.grad()}};
  };
  CHECK(grad_check(params, loss, grads).max_rel_err < 1e-6);

  // rows 1 and 3 are never referenced
  Tape tape;
  Var vt = tape.leaf(table);
  Var root = weighted_sum(tape, gather_mean(vt, ids));
  tape.backward(root);
  const Matrix& g = vt.grad();
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(g.at(1, c) == 0.0);
    CHECK(g.at(3, c) == 0.0);
  }
  // empty id list embeds to an exact zero row
  Tape t2;
  Var v2 = t2.leaf(table);
  Var emb = gather_mean(v2, ids);
  CHECK(emb.value().at(1, 0) == 0.0);
  CHECK(emb.value().at(1, 2) == 0.0);
}

TEST_CASE("stop_gradient blocks upstream gradients exactly") {
  Rng rng(9);
  Matrix x = rand_mat(2, 2, rng);
  Tape tape;
  Var vx = tape.leaf(x);
  Var frozen = stop_gradient(scale(vx, 3.0));
  Var live = hadamard(vx, frozen);
  tape.backward(sum_all(live));
  const Matrix& g = vx.grad();
  // d/dx (x * sg(3x)) = sg(3x) only; the 3x path contributes nothing
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(g.data[i] == 3.0 * x.data[i]);
  }

  Tape t2;
  Var v2 = t2.leaf(x);
  t2.backward(sum_all(stop_gradient(hadamard(v2, v2))));
  for (double gi : v2.grad().data) CHECK(gi == 0.0);
}

TEST_CASE("bce and sigmoid worked values") {
  CHECK(bce_scalar(0.5, 1.0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(bce_scalar(0.5, 0.0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(bce_scalar(0.9, 1.0) == doctest::Approx(0.105360515657826).epsilon(1e-10));
  CHECK(bce_scalar(0.9, 0.0) == doctest::Approx(2.302585092994045).epsilon(1e-10));
  // the clamp keeps p=0/1 finite
  CHECK(std::isfinite(bce_scalar(0.0, 1.0)));
  CHECK(std::isfinite(bce_scalar(1.0, 0.0)));

  Tape tape;
  Var x = tape.leaf(Matrix::scalar(2.0));
  CHECK(sigmoid(x).scalar() == doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and match direct computation") {
  Rng rng(10);
  Matrix x = rand_mat(3, 4, rng);
  Tape tape;
  Var v = tape.leaf(x);
  const Matrix& s = softmax_rows(v).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) sum += s.at(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    double denom = 0.0;
    double mx = x.at(r, 0);
    for (std::size_t c = 1; c < 4; ++c) mx = std::max(mx, x.at(r, c));
    for (std::size_t c = 0; c < 4; ++c) denom += std::exp(x.at(r, c) - mx);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(s.at(r, c) ==
            doctest::Approx(std::exp(x.at(r, c) - mx) / denom).epsilon(1e-12));
    }
  }
}
