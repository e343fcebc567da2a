// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "cyc/errors.hpp"

namespace cyc::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMajor>;
using ConstMatrix = Eigen::Map<const RowMajor>;

bool needs(const Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }
Tensor& grad_of(Node& self, std::size_t i) { return self.inputs[i]->grad_buffer(); }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

enum class Binary { kAdd, kSub, kMul };

template <Binary kind>
double apply(double x, double y) {
  if constexpr (kind == Binary::kAdd) return x + y;
  if constexpr (kind == Binary::kSub) return x - y;
  return x * y;
}

// The smaller operand repeats with its own size as period over the larger one.
// Loops run over whole periods so the inner loop is branch-free.
template <Binary kind>
void forward_blocks(const double* a, std::size_t na, const double* b, std::size_t nb, double* o,
                    std::size_t n) {
  if (na == nb) {
    for (std::size_t i = 0; i < n; ++i) o[i] = apply<kind>(a[i], b[i]);
  } else if (na > nb) {
    for (std::size_t r = 0; r < n; r += nb) {
      for (std::size_t j = 0; j < nb; ++j) o[r + j] = apply<kind>(a[r + j], b[j]);
    }
  } else {
    for (std::size_t r = 0; r < n; r += na) {
      for (std::size_t j = 0; j < na; ++j) o[r + j] = apply<kind>(a[j], b[r + j]);
    }
  }
}

// out (size m) += sign * g summed over periods of m.
void reduce_blocks(const double* g, std::size_t n, double sign, double* out, std::size_t m) {
  for (std::size_t r = 0; r < n; r += m) {
    for (std::size_t j = 0; j < m; ++j) out[j] += sign * g[r + j];
  }
}

// out (size m) += g * w, where one of out and w is full size n and the other
// repeats.
void reduce_product(const double* g, std::size_t n, const double* w, std::size_t nw, double* out,
                    std::size_t m) {
  if (m == n && nw == n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += g[i] * w[i];
  } else if (m == n) {
    for (std::size_t r = 0; r < n; r += nw) {
      for (std::size_t j = 0; j < nw; ++j) out[r + j] += g[r + j] * w[j];
    }
  } else {
    for (std::size_t r = 0; r < n; r += m) {
      for (std::size_t j = 0; j < m; ++j) out[j] += g[r + j] * w[r + j];
    }
  }
}

template <Binary kind>
Var binary(const Var& a, const Var& b, const char* name) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa != sb && !is_suffix(sb, sa) && !is_suffix(sa, sb)) shape_error(name, sa, sb);
  const Shape& out_shape = a.value().size() >= b.value().size() ? sa : sb;
  Tensor out(out_shape);
  auto av = a.value().data();
  auto bv = b.value().data();
  forward_blocks<kind>(av.data(), av.size(), bv.data(), bv.size(), out.data().data(),
                       out.size());
  return record_op(std::move(out), {a, b}, [](Node& self) {
    const auto g = self.grad->data();
    const auto av = self.inputs[0]->value.data();
    const auto bv = self.inputs[1]->value.data();
    const std::size_t n = g.size(), na = av.size(), nb = bv.size();
    if (needs(self, 0)) {
      auto ga = grad_of(self, 0).data();
      if constexpr (kind == Binary::kMul) {
        reduce_product(g.data(), n, bv.data(), nb, ga.data(), na);
      } else {
        reduce_blocks(g.data(), n, 1.0, ga.data(), na);
      }
    }
    if (needs(self, 1)) {
      auto gb = grad_of(self, 1).data();
      if constexpr (kind == Binary::kMul) {
        reduce_product(g.data(), n, av.data(), na, gb.data(), nb);
      } else {
        reduce_blocks(g.data(), n, kind == Binary::kSub ? -1.0 : 1.0, gb.data(), nb);
      }
    }
  }, name);
}

template <typename F, typename DF>
Var unary(const Var& a, const char* name, F f, DF df) {
  Tensor out(a.shape());
  auto o = out.data();
  auto x = a.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i]);
  return record_op(std::move(out), {a}, [df](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    const auto y = self.value.data();
    const auto x = self.inputs[0]->value.data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * df(x[i], y[i]);
  }, name);
}

std::size_t last_extent(const Tensor& t) { return t.rank() == 0 ? 1 : t.shape().back(); }

}  // namespace

Var constant(Tensor value) { return Var(std::move(value), false); }

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) shape_error("matmul", sa, sb);
  const auto m = static_cast<Eigen::Index>(sa[0]);
  const auto k = static_cast<Eigen::Index>(sa[1]);
  const auto n = static_cast<Eigen::Index>(sb[1]);
  Tensor out({sa[0], sb[1]});
  ConstMatrix A(a.value().data().data(), m, k);
  ConstMatrix B(b.value().data().data(), k, n);
  MatrixView(out.data().data(), m, n).noalias() = A * B;
  return record_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    ConstMatrix G(self.grad->data().data(), m, n);
    if (needs(self, 0)) {
      ConstMatrix B(self.inputs[1]->value.data().data(), k, n);
      MatrixView(grad_of(self, 0).data().data(), m, k).noalias() += G * B.transpose();
    }
    if (needs(self, 1)) {
      ConstMatrix A(self.inputs[0]->value.data().data(), m, k);
      MatrixView(grad_of(self, 1).data().data(), k, n).noalias() += A.transpose() * G;
    }
  }, "matmul");
}

Var add(const Var& a, const Var& b) { return binary<Binary::kAdd>(a, b, "add"); }
Var sub(const Var& a, const Var& b) { return binary<Binary::kSub>(a, b, "subtract"); }
Var mul(const Var& a, const Var& b) { return binary<Binary::kMul>(a, b, "multiply"); }

Var scale(const Var& a, double s) {
  Tensor out(a.shape());
  auto o = out.data();
  auto x = a.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = s * x[i];
  return record_op(std::move(out), {a}, [s](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] += s * g[i];
  }, "scale");
}

Var tanh(const Var& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softmax(const Var& a) {
  if (a.value().rank() == 0) throw ShapeError("softmax of a scalar");
  const std::size_t n = last_extent(a.value());
  const std::size_t rows = a.value().size() / n;
  Tensor out(a.shape());
  auto x = a.value().data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double mx = *std::max_element(x.begin() + r * n, x.begin() + (r + 1) * n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (y[r * n + j] = std::exp(x[r * n + j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] /= z;
  }
  return record_op(std::move(out), {a}, [rows, n](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    const auto y = self.value.data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
      for (std::size_t j = 0; j < n; ++j) gi[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
    }
  }, "softmax");
}

Var log_softmax(const Var& a) {
  if (a.value().rank() == 0) throw ShapeError("log_softmax of a scalar");
  const std::size_t n = last_extent(a.value());
  const std::size_t rows = a.value().size() / n;
  Tensor out(a.shape());
  auto x = a.value().data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double mx = *std::max_element(x.begin() + r * n, x.begin() + (r + 1) * n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(x[r * n + j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = x[r * n + j] - lse;
  }
  return record_op(std::move(out), {a}, [rows, n](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    const auto y = self.value.data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[r * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        gi[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gs;
      }
    }
  }, "log_softmax");
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
  if (a.value().rank() == 0) throw ShapeError("gather_rows of a scalar");
  if (rows.empty()) throw ShapeError("gather_rows with no indices");
  const std::size_t n_rows = a.shape()[0];
  const std::size_t width = a.value().size() / n_rows;
  Shape shape = a.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  auto x = a.value().data();
  auto y = out.data();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n_rows) {
      throw ShapeError("gather_rows: row " + std::to_string(idx[i]) + " out of range for " +
                       to_string(a.shape()));
    }
    std::copy_n(x.begin() + idx[i] * width, width, y.begin() + i * width);
  }
  return record_op(std::move(out), {a}, [idx = std::move(idx), width](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) gi[idx[i] * width + j] += g[i * width + j];
    }
  }, "gather_rows");
}

Var embedding(const Var& table, std::span<const int> ids) {
  if (table.value().rank() != 2) throw ShapeError("embedding table must be rank 2, got " + to_string(table.shape()));
  const std::size_t k = table.shape()[0];
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= k) {
      throw ContractError("embedding id " + std::to_string(ids[i]) + " outside [0, " +
                          std::to_string(k) + ")");
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
  }
  return gather_rows(table, rows);
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Shape lead = parts[0].shape();
  if (lead.empty()) throw ShapeError("concat of scalars");
  lead.pop_back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.empty()) throw ShapeError("concat of scalars");
    const std::size_t w = s.back();
    s.pop_back();
    if (s != lead) shape_error("concat", parts[0].shape(), p.shape());
    widths.push_back(w);
    total += w;
  }
  const std::size_t rows = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  auto y = out.data();
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto x = parts[p].value().data();
    const std::size_t w = widths[p];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(x.begin() + r * w, w, y.begin() + r * total + off);
    }
    off += w;
  }
  return record_op(std::move(out), parts, [widths = std::move(widths), rows, total](Node& self) {
    const auto g = self.grad->data();
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      const std::size_t w = widths[p];
      if (needs(self, p)) {
        auto gi = grad_of(self, p).data();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < w; ++j) gi[r * w + j] += g[r * total + off + j];
        }
      }
      off += w;
    }
  }, "concat");
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return record_op(Tensor::scalar(s), {a}, [](Node& self) {
    if (!needs(self, 0)) return;
    const double g = (*self.grad)[0];
    for (double& v : grad_of(self, 0).data()) v += g;
  }, "sum");
}

Var mean(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const double n = static_cast<double>(a.value().size());
  return record_op(Tensor::scalar(s / n), {a}, [n](Node& self) {
    if (!needs(self, 0)) return;
    const double g = (*self.grad)[0] / n;
    for (double& v : grad_of(self, 0).data()) v += g;
  }, "mean");
}

Var sum_last(const Var& a) {
  if (a.value().rank() == 0) throw ShapeError("sum_last of a scalar");
  const std::size_t n = a.shape().back();
  Shape shape = a.shape();
  shape.pop_back();
  const std::size_t rows = numel(shape);
  Tensor out(shape);
  auto x = a.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[r * n + j];
    out[r] = s;
  }
  return record_op(std::move(out), {a}, [rows, n](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < n; ++j) gi[r * n + j] += g[r];
    }
  }, "sum_last");
}

Var masked_fill(const Var& a, std::span<const std::uint8_t> mask, double value) {
  if (mask.size() != a.value().size()) {
    throw ShapeError("masked_fill: mask has " + std::to_string(mask.size()) +
                     " entries for tensor of shape " + to_string(a.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out[i] = value;
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return record_op(std::move(out), {a}, [m = std::move(m)](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!m[i]) gi[i] += g[i];
    }
  }, "masked_fill");
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return record_op(std::move(out), {a}, [](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
  }, "reshape");
}

Var slice_last(const Var& a, std::size_t begin, std::size_t end) {
  if (a.value().rank() == 0) throw ShapeError("slice_last of a scalar");
  const std::size_t n = a.shape().back();
  if (begin >= end || end > n) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + to_string(a.shape()));
  }
  Shape shape = a.shape();
  shape.back() = end - begin;
  const std::size_t rows = a.value().size() / n;
  const std::size_t w = end - begin;
  Tensor out(shape);
  auto x = a.value().data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.begin() + r * n + begin, w, y.begin() + r * w);
  return record_op(std::move(out), {a}, [rows, n, begin, w](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) gi[r * n + begin + j] += g[r * w + j];
    }
  }, "slice_last");
}

Var select_step(const Var& a, std::size_t t) {
  const Shape& s = a.shape();
  if (s.size() != 3 || t >= s[1]) {
    throw ShapeError("select_step: step " + std::to_string(t) + " invalid for " + to_string(s));
  }
  const std::size_t B = s[0], T = s[1], D = s[2];
  Tensor out({B, D});
  auto x = a.value().data();
  auto y = out.data();
  for (std::size_t b = 0; b < B; ++b) std::copy_n(x.begin() + (b * T + t) * D, D, y.begin() + b * D);
  return record_op(std::move(out), {a}, [B, T, D, t](Node& self) {
    if (!needs(self, 0)) return;
    const auto g = self.grad->data();
    auto gi = grad_of(self, 0).data();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t d = 0; d < D; ++d) gi[(b * T + t) * D + d] += g[b * D + d];
    }
  }, "select_step");
}

Var stack_steps(const std::vector<Var>& steps) {
  if (steps.empty()) throw ShapeError("stack_steps of nothing");
  const Shape& s0 = steps[0].shape();
  if (s0.size() != 2) throw ShapeError("stack_steps expects [B,D] steps, got " + to_string(s0));
  for (const auto& st : steps) {
    if (st.shape() != s0) shape_error("stack_steps", s0, st.shape());
  }
  const std::size_t B = s0[0], D = s0[1], T = steps.size();
  Tensor out({B, T, D});
  auto y = out.data();
  for (std::size_t t = 0; t < T; ++t) {
    auto x = steps[t].value().data();
    for (std::size_t b = 0; b < B; ++b) std::copy_n(x.begin() + b * D, D, y.begin() + (b * T + t) * D);
  }
  return record_op(std::move(out), steps, [B, T, D](Node& self) {
    const auto g = self.grad->data();
    for (std::size_t t = 0; t < T; ++t) {
      if (!needs(self, t)) continue;
      auto gi = grad_of(self, t).data();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t d = 0; d < D; ++d) gi[b * D + d] += g[(b * T + t) * D + d];
      }
    }
  }, "stack_steps");
}

Var add_steps(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 3 || sb.size() != 2 || sa[0] != sb[0] || sa[2] != sb[1]) {
    shape_error("add_steps", sa, sb);
  }
  const std::size_t B = sa[0], T = sa[1], D = sa[2];
  Tensor out(sa);
  auto x = a.value().data();
  auto q = b.value().data();
  auto y = out.data();
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t d = 0; d < D; ++d) {
        y[(i * T + t) * D + d] = x[(i * T + t) * D + d] + q[i * D + d];
      }
    }
  }
  return record_op(std::move(out), {a, b}, [B, T, D](Node& self) {
    const auto g = self.grad->data();
    if (needs(self, 0)) {
      auto ga = grad_of(self, 0).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (needs(self, 1)) {
      auto gb = grad_of(self, 1).data();
      for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t d = 0; d < D; ++d) gb[i * D + d] += g[(i * T + t) * D + d];
        }
      }
    }
  }, "add_steps");
}

Var weighted_steps(const Var& w, const Var& h) {
  const Shape& sw = w.shape();
  const Shape& sh = h.shape();
  if (sw.size() != 2 || sh.size() != 3 || sw[0] != sh[0] || sw[1] != sh[1]) {
    shape_error("weighted_steps", sw, sh);
  }
  const std::size_t B = sh[0], T = sh[1], D = sh[2];
  Tensor out({B, D});
  auto a = w.value().data();
  auto x = h.value().data();
  auto y = out.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      const double at = a[b * T + t];
      for (std::size_t d = 0; d < D; ++d) y[b * D + d] += at * x[(b * T + t) * D + d];
    }
  }
  return record_op(std::move(out), {w, h}, [B, T, D](Node& self) {
    const auto g = self.grad->data();
    const auto a = self.inputs[0]->value.data();
    const auto x = self.inputs[1]->value.data();
    if (needs(self, 0)) {
      auto ga = grad_of(self, 0).data();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
          double s = 0.0;
          for (std::size_t d = 0; d < D; ++d) s += g[b * D + d] * x[(b * T + t) * D + d];
          ga[b * T + t] += s;
        }
      }
    }
    if (needs(self, 1)) {
      auto gh = grad_of(self, 1).data();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
          const double at = a[b * T + t];
          for (std::size_t d = 0; d < D; ++d) gh[(b * T + t) * D + d] += at * g[b * D + d];
        }
      }
    }
  }, "weighted_steps");
}

Var pick(const Var& a, std::span<const int> cols) {
  const Shape& s = a.shape();
  if (s.size() != 2 || cols.size() != s[0]) {
    throw ShapeError("pick: " + std::to_string(cols.size()) + " columns for " + to_string(s));
  }
  const std::size_t B = s[0], K = s[1];
  std::vector<std::size_t> flat(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (cols[b] < 0 || static_cast<std::size_t>(cols[b]) >= K) {
      throw ContractError("pick: column " + std::to_string(cols[b]) + " out of range");
    }
    flat[b] = b * K + static_cast<std::size_t>(cols[b]);
  }
  return reshape(gather_rows(reshape(a, {B * K}), flat), {B});
}

}  // namespace cyc::ad
