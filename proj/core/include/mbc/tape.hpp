#ifndef MBC_TAPE_HPP_
#define MBC_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mbc/matrix.hpp"

namespace mbc {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double scalar() const { return value().data[0]; }
};

// Reverse-mode gradient tape. Nodes are recorded in topological order by
// construction; backward() walks them in reverse. A tape is single-threaded;
// distinct tapes are independent.
class Tape {
 public:
  Var leaf(Matrix v);
  // Same storage as leaf; named for intent (gradients never read).
  Var constant(Matrix v) { return leaf(std::move(v)); }
  Var constant_scalar(double v) { return leaf(Matrix::scalar(v)); }

  // `backprop` receives the tape and the node's own id and must accumulate
  // into the parents' gradient buffers.
  Var make_node(Matrix value,
                std::function<void(Tape&, std::size_t)> backprop);

  // Root must be 1x1. Seeds the root gradient with 1 and accumulates in
  // reverse topological order. Unreached nodes keep zero gradients.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  Matrix& grad(std::size_t id) { return nodes_[id].grad; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, std::size_t)> backprop;
  };
  std::vector<Node> nodes_;
};

// ---- Elementary ops ----
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double c);
// Elementwise division by a constant (kept as a true division so results
// match loop oracles bit-for-bit).
Var div_scalar(Var a, double denom);
// a: B x C, bias: 1 x C broadcast over rows.
Var add_rowvec(Var a, Var bias);
// a: B x C scaled per row by s: B x 1.
Var colwise_scale(Var a, Var s);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t c0, std::size_t c1);
// Elementwise mean of same-shaped matrices.
Var mean_stack(const std::vector<Var>& parts);
Var sum_all(Var a);
Var mean_all(Var a);
// Sum of squared entries (squared Frobenius norm), 1x1.
Var l2_sq(Var a);
// Per-row Euclidean norm, B x 1.
Var rowwise_norm(Var a);
// max(a, floor) elementwise; gradient passes only where a > floor.
Var clamp_min(Var a, double floor);
// Identity forward, zero gradient backward.
Var stop_gradient(Var a);

// ---- Loss primitives ----
inline constexpr double kBceProbEps = 1e-7;

// Scalar BCE with the probability clamp. Shared by tape ops, oracles and
// metrics so values agree bit-for-bit.
double bce_scalar(double p, double y);

// Elementwise BCE against constant labels; same shape as p.
Var bce_elem(Var p, const Matrix& y);
// Elementwise BCE against a (typically stop-gradient) soft-label node.
Var bce_elem(Var p, Var y);

// ---- Embedding lookup ----
// Gathers table rows per sample and averages them (multi-valued mean
// pooling). ids[i] may be empty -> zero row. Backward scatters grad/len into
// the table rows.
Var gather_mean(Var table, const std::vector<std::vector<std::int32_t>>& ids);

}  // namespace mbc

#endif  // MBC_TAPE_HPP_
