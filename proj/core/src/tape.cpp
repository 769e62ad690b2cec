#include "mbc/tape.hpp"

#include <cmath>
#include <utility>

#include "mbc/errors.hpp"

namespace mbc {

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

Var Tape::leaf(Matrix v) {
  Node n;
  n.grad = Matrix::zeros(v.rows, v.cols);
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::make_node(Matrix value,
                    std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.grad = Matrix::zeros(value.rows, value.cols);
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
  if (root.tape != this) throw ConfigError("backward: root from another tape");
  const Matrix& rv = nodes_[root.id].value;
  if (rv.rows != 1 || rv.cols != 1) {
    throw ConfigError("backward: root must be scalar, got " + rv.shape_str());
  }
  nodes_[root.id].grad.data[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
  }
}

namespace {

void check_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) {
    throw ConfigError(std::string(op) + ": operands from different tapes");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  Matrix c = matmul(a.value(), b.value());
  auto ai = a.id, bi = b.id;
  return a.tape->make_node(std::move(c), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    add_inplace(t.grad(ai), matmul_nt(g, t.value(bi)));
    add_inplace(t.grad(bi), matmul_tn(t.value(ai), g));
  });
}

Var add(Var a, Var b) {
  check_same_tape(a, b, "add");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ConfigError("add: shape mismatch " + av.shape_str() + " vs " +
                      bv.shape_str());
  }
  Matrix c = av;
  add_inplace(c, bv);
  auto ai = a.id, bi = b.id;
  return a.tape->make_node(std::move(c), [ai, bi](Tape& t, std::size_t self) {
    add_inplace(t.grad(ai), t.grad(self));
    add_inplace(t.grad(bi), t.grad(self));
  });
}

Var sub(Var a, Var b) {
  check_same_tape(a, b, "sub");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ConfigError("sub: shape mismatch " + av.shape_str() + " vs " +
                      bv.shape_str());
  }
  Matrix c = av;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= bv.data[i];
  auto ai = a.id, bi = b.id;
  return a.tape->make_node(std::move(c), [ai, bi](Tape& t, std::size_t self) {
    add_inplace(t.grad(ai), t.grad(self));
    axpy_inplace(t.grad(bi), -1.0, t.grad(self));
  });
}

Var hadamard(Var a, Var b) {
  check_same_tape(a, b, "hadamard");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ConfigError("hadamard: shape mismatch " + av.shape_str() + " vs " +
                      bv.shape_str());
  }
  Matrix c = av;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= bv.data[i];
  auto ai = a.id, bi = b.id;
  return a.tape->make_node(std::move(c), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    Matrix& gb = t.grad(bi);
    const Matrix& av2 = t.value(ai);
    const Matrix& bv2 = t.value(bi);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * bv2.data[i];
      gb.data[i] += g.data[i] * av2.data[i];
    }
  });
}

Var scale(Var a, double c) {
  Matrix v = a.value();
  for (double& x : v.data) x *= c;
  auto ai = a.id;
  return a.tape->make_node(std::move(v), [ai, c](Tape& t, std::size_t self) {
    axpy_inplace(t.grad(ai), c, t.grad(self));
  });
}

Var div_scalar(Var a, double denom) {
  Matrix v = a.value();
  for (double& x : v.data) x /= denom;
  auto ai = a.id;
  return a.tape->make_node(std::move(v),
                           [ai, denom](Tape& t, std::size_t self) {
                             const Matrix& g = t.grad(self);
                             Matrix& ga = t.grad(ai);
                             for (std::size_t i = 0; i < g.data.size(); ++i)
                               ga.data[i] += g.data[i] / denom;
                           });
}

Var add_rowvec(Var a, Var bias) {
  check_same_tape(a, bias, "add_rowvec");
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows != 1 || bv.cols != av.cols) {
    throw ConfigError("add_rowvec: bias " + bv.shape_str() +
                      " does not broadcast over " + av.shape_str());
  }
  Matrix c = av;
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) c.at(i, j) += bv.data[j];
  auto ai = a.id, bi = bias.id;
  return a.tape->make_node(std::move(c), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    add_inplace(t.grad(ai), g);
    Matrix& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += g.at(i, j);
  });
}

Var colwise_scale(Var a, Var s) {
  check_same_tape(a, s, "colwise_scale");
  const Matrix& av = a.value();
  const Matrix& sv = s.value();
  if (sv.cols != 1 || sv.rows != av.rows) {
    throw ConfigError("colwise_scale: scale " + sv.shape_str() +
                      " does not broadcast over " + av.shape_str());
  }
  Matrix c = av;
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) c.at(i, j) *= sv.data[i];
  auto ai = a.id, si = s.id;
  return a.tape->make_node(std::move(c), [ai, si](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& av2 = t.value(ai);
    const Matrix& sv2 = t.value(si);
    Matrix& ga = t.grad(ai);
    Matrix& gs = t.grad(si);
    for (std::size_t i = 0; i < g.rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) {
        ga.at(i, j) += g.at(i, j) * sv2.data[i];
        acc += g.at(i, j) * av2.at(i, j);
      }
      gs.data[i] += acc;
    }
  });
}

Var transpose(Var a) {
  Matrix c = transpose(a.value());
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai](Tape& t, std::size_t self) {
    add_inplace(t.grad(ai), transpose(t.grad(self)));
  });
}

Var relu(Var a) {
  Matrix c = a.value();
  for (double& x : c.data) x = x > 0.0 ? x : 0.0;
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& v = t.value(ai);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      if (v.data[i] > 0.0) ga.data[i] += g.data[i];
  });
}

Var sigmoid(Var a) {
  Matrix c = a.value();
  for (double& x : c.data) x = 1.0 / (1.0 + std::exp(-x));
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& s = t.value(self);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * s.data[i] * (1.0 - s.data[i]);
  });
}

Var softmax_rows(Var a) {
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.rows; ++i) {
    double mx = c.at(i, 0);
    for (std::size_t j = 1; j < c.cols; ++j) mx = std::max(mx, c.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < c.cols; ++j) {
      c.at(i, j) = std::exp(c.at(i, j) - mx);
      sum += c.at(i, j);
    }
    for (std::size_t j = 0; j < c.cols; ++j) c.at(i, j) /= sum;
  }
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& s = t.value(self);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) dot += g.at(i, j) * s.at(i, j);
      for (std::size_t j = 0; j < g.cols; ++j)
        ga.at(i, j) += s.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: empty input");
  Tape* tape = parts[0].tape;
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != tape) throw ConfigError("concat_cols: mixed tapes");
    if (p.rows() != rows) {
      throw ConfigError("concat_cols: row mismatch " +
                        p.value().shape_str());
    }
    total += p.cols();
  }
  Matrix c(rows, total);
  std::size_t off = 0;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, offset)
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols; ++j)
        c.at(i, off + j) = v.at(i, j);
    spans.emplace_back(p.id, off);
    off += v.cols;
  }
  return tape->make_node(
      std::move(c), [spans](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        for (const auto& [pid, o] : spans) {
          Matrix& gp = t.grad(pid);
          for (std::size_t i = 0; i < gp.rows; ++i)
            for (std::size_t j = 0; j < gp.cols; ++j)
              gp.at(i, j) += g.at(i, o + j);
        }
      });
}

Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const Matrix& av = a.value();
  if (c0 >= c1 || c1 > av.cols) throw ConfigError("slice_cols: bad range");
  Matrix c(av.rows, c1 - c0);
  for (std::size_t i = 0; i < av.rows; ++i)
    for (std::size_t j = c0; j < c1; ++j) c.at(i, j - c0) = av.at(i, j);
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai, c0](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j)
        ga.at(i, c0 + j) += g.at(i, j);
  });
}

Var mean_stack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("mean_stack: empty input");
  Tape* tape = parts[0].tape;
  // mean = first + (sum of differences) / n, so identical inputs average to
  // themselves without rounding.
  const Matrix& first = parts[0].value();
  Matrix diff(first.rows, first.cols);
  for (std::size_t k = 1; k < parts.size(); ++k) {
    if (parts[k].tape != tape) throw ConfigError("mean_stack: mixed tapes");
    if (!parts[k].value().same_shape(first)) {
      throw ConfigError("mean_stack: shape mismatch");
    }
    const Matrix& v = parts[k].value();
    for (std::size_t i = 0; i < diff.data.size(); ++i) {
      diff.data[i] += v.data[i] - first.data[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  Matrix c(first.rows, first.cols);
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    c.data[i] = first.data[i] + diff.data[i] * inv;
  }
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (const Var& p : parts) ids.push_back(p.id);
  return tape->make_node(std::move(c), [ids, inv](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t pid : ids) axpy_inplace(t.grad(pid), inv, g);
  });
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  auto ai = a.id;
  return a.tape->make_node(Matrix::scalar(s),
                           [ai](Tape& t, std::size_t self) {
                             const double g = t.grad(self).data[0];
                             Matrix& ga = t.grad(ai);
                             for (double& x : ga.data) x += g;
                           });
}

Var mean_all(Var a) {
  const double n = static_cast<double>(a.value().data.size());
  double s = 0.0;
  for (double x : a.value().data) s += x;
  auto ai = a.id;
  return a.tape->make_node(Matrix::scalar(s / n),
                           [ai, n](Tape& t, std::size_t self) {
                             const double g = t.grad(self).data[0] / n;
                             Matrix& ga = t.grad(ai);
                             for (double& x : ga.data) x += g;
                           });
}

Var l2_sq(Var a) {
  double s = 0.0;
  for (double x : a.value().data) s += x * x;
  auto ai = a.id;
  return a.tape->make_node(Matrix::scalar(s),
                           [ai](Tape& t, std::size_t self) {
                             const double g = t.grad(self).data[0];
                             const Matrix& v = t.value(ai);
                             Matrix& ga = t.grad(ai);
                             for (std::size_t i = 0; i < v.data.size(); ++i)
                               ga.data[i] += 2.0 * g * v.data[i];
                           });
}

Var rowwise_norm(Var a) {
  const Matrix& av = a.value();
  Matrix c(av.rows, 1);
  for (std::size_t i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
    c.data[i] = std::sqrt(s);
  }
  auto ai = a.id;
  return a.tape->make_node(std::move(c), [ai](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& norms = t.value(self);
    const Matrix& v = t.value(ai);
    Matrix& ga = t.grad(ai);
    for (std::size_t i = 0; i < v.rows; ++i) {
      if (norms.data[i] == 0.0) continue;
      const double gi = g.data[i] / norms.data[i];
      for (std::size_t j = 0; j < v.cols; ++j)
        ga.at(i, j) += gi * v.at(i, j);
    }
  });
}

Var clamp_min(Var a, double floor) {
  Matrix c = a.value();
  for (double& x : c.data) x = x > floor ? x : floor;
  auto ai = a.id;
  return a.tape->make_node(std::move(c),
                           [ai, floor](Tape& t, std::size_t self) {
                             const Matrix& g = t.grad(self);
                             const Matrix& v = t.value(ai);
                             Matrix& ga = t.grad(ai);
                             for (std::size_t i = 0; i < v.data.size(); ++i)
                               if (v.data[i] > floor) ga.data[i] += g.data[i];
                           });
}

Var stop_gradient(Var a) {
  // No backprop closure: upstream gradients are exactly zero.
  return a.tape->make_node(a.value(), nullptr);
}

double bce_scalar(double p, double y) {
  double pc = p;
  if (pc < kBceProbEps) pc = kBceProbEps;
  if (pc > 1.0 - kBceProbEps) pc = 1.0 - kBceProbEps;
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

namespace {

double bce_dp(double p, double y) {
  if (p < kBceProbEps || p > 1.0 - kBceProbEps) return 0.0;  // clamp plateau
  return (p - y) / (p * (1.0 - p));
}

double bce_dy(double p) {
  double pc = p;
  if (pc < kBceProbEps) pc = kBceProbEps;
  if (pc > 1.0 - kBceProbEps) pc = 1.0 - kBceProbEps;
  return std::log((1.0 - pc) / pc);
}

}  // namespace

Var bce_elem(Var p, const Matrix& y) {
  const Matrix& pv = p.value();
  if (!pv.same_shape(y)) {
    throw ConfigError("bce_elem: shape mismatch " + pv.shape_str() + " vs " +
                      y.shape_str());
  }
  Matrix c(pv.rows, pv.cols);
  for (std::size_t i = 0; i < c.data.size(); ++i)
    c.data[i] = bce_scalar(pv.data[i], y.data[i]);
  auto pi = p.id;
  return p.tape->make_node(std::move(c), [pi, y](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& pv2 = t.value(pi);
    Matrix& gp = t.grad(pi);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      gp.data[i] += g.data[i] * bce_dp(pv2.data[i], y.data[i]);
  });
}

Var bce_elem(Var p, Var y) {
  check_same_tape(p, y, "bce_elem");
  const Matrix& pv = p.value();
  const Matrix& yv = y.value();
  if (!pv.same_shape(yv)) {
    throw ConfigError("bce_elem: shape mismatch " + pv.shape_str() + " vs " +
                      yv.shape_str());
  }
  Matrix c(pv.rows, pv.cols);
  for (std::size_t i = 0; i < c.data.size(); ++i)
    c.data[i] = bce_scalar(pv.data[i], yv.data[i]);
  auto pi = p.id, yi = y.id;
  return p.tape->make_node(std::move(c), [pi, yi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& pv2 = t.value(pi);
    const Matrix& yv2 = t.value(yi);
    Matrix& gp = t.grad(pi);
    Matrix& gy = t.grad(yi);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      gp.data[i] += g.data[i] * bce_dp(pv2.data[i], yv2.data[i]);
      gy.data[i] += g.data[i] * bce_dy(pv2.data[i]);
    }
  });
}

Var gather_mean(Var table, const std::vector<std::vector<std::int32_t>>& ids) {
  const Matrix& tv = table.value();
  const std::size_t dim = tv.cols;
  Matrix c(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) continue;  // empty list embeds to zero
    const double inv = 1.0 / static_cast<double>(ids[i].size());
    for (std::int32_t id : ids[i]) {
      if (id < 0 || static_cast<std::size_t>(id) >= tv.rows) {
        throw DataError("gather_mean: id " + std::to_string(id) +
                        " out of range [0," + std::to_string(tv.rows) +
                        ") at row " + std::to_string(i));
      }
      for (std::size_t j = 0; j < dim; ++j)
        c.at(i, j) += inv * tv.at(static_cast<std::size_t>(id), j);
    }
  }
  auto ti = table.id;
  return table.tape->make_node(
      std::move(c), [ti, ids](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& gt = t.grad(ti);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (ids[i].empty()) continue;
          const double inv = 1.0 / static_cast<double>(ids[i].size());
          for (std::int32_t id : ids[i])
            for (std::size_t j = 0; j < g.cols; ++j)
              gt.at(static_cast<std::size_t>(id), j) += inv * g.at(i, j);
        }
      });
}

}  // namespace mbc
