#include "morphrl/numeric/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw InvalidInput(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
  }
}

void require_rank(const char* op, const Var& a, std::size_t rank) {
  if (a.value().rank() != rank) {
    throw InvalidInput(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                       shape_string(a.shape()));
  }
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

// Unary elementwise op whose derivative is expressed via input x and output y.
template <typename F, typename D>
Var unary(const char* op, const Var& a, F f, D dfdx) {
  const Array& x = a.value();
  Array y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return detail::make_result(op, std::move(y), {a}, [dfdx](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

// (a [n,k]) · (b [k,m]) accumulated into out.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t n,
          std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[n,k] += g[n,m] · bᵀ where b is [k,m].
void gemm_bt(std::span<const double> g, std::span<const double> b, std::span<double> out, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g.data() + i * m;
    double* orow = out.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
      orow[p] += acc;
    }
  }
}

// out[k,m] += aᵀ · g where a is [n,k], g is [n,m].
void gemm_at(std::span<const double> a, std::span<const double> g, std::span<double> out, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    const double* grow = g.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * grow[j];
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Array y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return detail::make_result("add", std::move(y), {a, b}, [](Node& self) {
    input(self, 0).accumulate(self.grad);
    input(self, 1).accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Array y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return detail::make_result("sub", std::move(y), {a, b}, [](Node& self) {
    input(self, 0).accumulate(self.grad);
    Node& rhs = input(self, 1);
    if (!rhs.requires_grad) return;
    Array& g = rhs.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Array y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return detail::make_result("mul", std::move(y), {a, b}, [](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    if (lhs.requires_grad) {
      Array& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      Array& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.value[i];
    }
  });
}

Var minimum(const Var& a, const Var& b) {
  require_same_shape("minimum", a, b);
  Array y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(a.value()[i], b.value()[i]);
  return detail::make_result("minimum", std::move(y), {a, b}, [](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      // Ties route to the left operand.
      if (lhs.value[i] <= rhs.value[i]) {
        lhs.accumulate_at(i, self.grad[i]);
      } else {
        rhs.accumulate_at(i, self.grad[i]);
      }
    }
  });
}

Var scale(const Var& a, double c) {
  Array y = a.value();
  for (auto& v : y.data()) v *= c;
  return detail::make_result("scale", std::move(y), {a}, [c](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

Var add_scalar(const Var& a, double c) {
  Array y = a.value();
  for (auto& v : y.data()) v += c;
  return detail::make_result("add_scalar", std::move(y), {a},
                             [](Node& self) { input(self, 0).accumulate(self.grad); });
}

Var tanh(const Var& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(const Var& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var add_rowvec(const Var& x, const Var& v) {
  const std::size_t m = x.value().cols();
  if (v.size() != m) {
    throw InvalidInput("add_rowvec: row width " + std::to_string(m) + " vs vector " + shape_string(v.shape()));
  }
  Array y = x.value();
  const std::size_t n = y.size() / std::max<std::size_t>(m, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y[i * m + j] += v.value()[j];
  return detail::make_result("add_rowvec", std::move(y), {x, v}, [n, m](Node& self) {
    input(self, 0).accumulate(self.grad);
    Node& vec = input(self, 1);
    if (!vec.requires_grad) return;
    Array& g = vec.grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw InvalidInput("matmul: inner dimensions " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Array y(Shape{n, m});
  gemm(a.value().data(), b.value().data(), y.data(), n, k, m);
  return detail::make_result("matmul", std::move(y), {a, b}, [n, k, m](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    if (lhs.requires_grad) gemm_bt(self.grad.data(), rhs.value.data(), lhs.grad_buffer().data(), n, k, m);
    if (rhs.requires_grad) gemm_at(lhs.value.data(), self.grad.data(), rhs.grad_buffer().data(), n, k, m);
  });
}

Var transpose(const Var& a) {
  require_rank("transpose", a, 2);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  Array y(Shape{m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y(j, i) = a.value()(i, j);
  return detail::make_result("transpose", std::move(y), {a}, [n, m](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_rank("linear", w, 2);
  const Shape& xs = x.shape();
  if (xs.empty()) throw InvalidInput("linear: scalar input");
  const std::size_t in = w.shape()[0], out = w.shape()[1];
  if (xs.back() != in) {
    throw InvalidInput("linear: input " + shape_string(xs) + " does not match weight " + shape_string(w.shape()));
  }
  if (b.size() != out || b.value().rank() != 1) {
    throw InvalidInput("linear: bias " + shape_string(b.shape()) + " does not match weight " +
                       shape_string(w.shape()));
  }
  const std::size_t rows = x.size() / in;
  Shape ys = xs;
  ys.back() = out;
  Array y(ys);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(b.value().data().begin(), b.value().data().end(), y.data().begin() + r * out);
  gemm(x.value().data(), w.value().data(), y.data(), rows, in, out);
  return detail::make_result("linear", std::move(y), {x, w, b}, [rows, in, out](Node& self) {
    Node& xn = input(self, 0);
    Node& wn = input(self, 1);
    Node& bn = input(self, 2);
    if (xn.requires_grad) gemm_bt(self.grad.data(), wn.value.data(), xn.grad_buffer().data(), rows, in, out);
    if (wn.requires_grad) gemm_at(xn.value.data(), self.grad.data(), wn.grad_buffer().data(), rows, in, out);
    if (bn.requires_grad) {
      Array& g = bn.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < out; ++j) g[j] += self.grad[r * out + j];
    }
  });
}

Var gen_linear(const Var& x, const Var& w, const Var& b) {
  require_rank("gen_linear", x, 2);
  require_rank("gen_linear", w, 2);
  require_rank("gen_linear", b, 2);
  const std::size_t n = x.shape()[0], in = x.shape()[1], out = b.shape()[1];
  if (w.shape()[0] != n || b.shape()[0] != n || w.shape()[1] != in * out) {
    throw InvalidInput("gen_linear: x " + shape_string(x.shape()) + ", w " + shape_string(w.shape()) + ", b " +
                       shape_string(b.shape()));
  }
  Array y = b.value();
  for (std::size_t i = 0; i < n; ++i) {
    gemm(x.value().data().subspan(i * in, in), w.value().data().subspan(i * in * out, in * out),
         y.data().subspan(i * out, out), 1, in, out);
  }
  return detail::make_result("gen_linear", std::move(y), {x, w, b}, [n, in, out](Node& self) {
    Node& xn = input(self, 0);
    Node& wn = input(self, 1);
    Node& bn = input(self, 2);
    std::span<const double> g = self.grad.data();
    for (std::size_t i = 0; i < n; ++i) {
      auto gi = g.subspan(i * out, out);
      auto wi = std::span<const double>(wn.value.data()).subspan(i * in * out, in * out);
      auto xi = std::span<const double>(xn.value.data()).subspan(i * in, in);
      if (xn.requires_grad) gemm_bt(gi, wi, xn.grad_buffer().data().subspan(i * in, in), 1, in, out);
      if (wn.requires_grad) gemm_at(xi, gi, wn.grad_buffer().data().subspan(i * in * out, in * out), 1, in, out);
    }
    bn.accumulate(self.grad);
  });
}

Var softmax_rows(const Var& x) {
  require_rank("softmax_rows", x, 2);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (n == 0 || m == 0) throw InvalidInput("softmax_rows: empty input");
  Array y(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    auto xr = x.value().row(i);
    auto yr = y.row(i);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < m; ++j) yr[j] /= total;
  }
  return detail::make_result("softmax_rows", std::move(y), {x}, [n, m](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += self.grad[i * m + j] * self.value[i * m + j];
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.value[i * m + j] * (self.grad[i * m + j] - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
  const std::size_t d = x.shape().empty() ? 0 : x.shape().back();
  if (d < 2) throw InvalidInput("layer_norm: last axis must be >= 2, got " + shape_string(x.shape()));
  if (gain.size() != d || bias.size() != d) throw InvalidInput("layer_norm: gain/bias width mismatch");
  const std::size_t rows = x.size() / d;
  Array y(x.shape());
  // Per-row normalized values and inverse std, kept for backward.
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto inv = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.value().data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    (*inv)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      y[r * d + j] = gain.value()[j] * h + bias.value()[j];
    }
  }
  return detail::make_result("layer_norm", std::move(y), {x, gain, bias}, [rows, d, xhat, inv](Node& self) {
    Node& xn = input(self, 0);
    Node& gn = input(self, 1);
    Node& bn = input(self, 2);
    const auto& h = *xhat;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = self.grad.data().data() + r * d;
      if (gn.requires_grad || bn.requires_grad) {
        for (std::size_t j = 0; j < d; ++j) {
          gn.accumulate_at(j, gr[j] * h[r * d + j]);
          bn.accumulate_at(j, gr[j]);
        }
      }
      if (!xn.requires_grad) continue;
      double mean_dh = 0.0, mean_dh_h = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dh = gr[j] * gn.value[j];
        mean_dh += dh;
        mean_dh_h += dh * h[r * d + j];
      }
      mean_dh /= static_cast<double>(d);
      mean_dh_h /= static_cast<double>(d);
      Array& g = xn.grad_buffer();
      for (std::size_t j = 0; j < d; ++j) {
        const double dh = gr[j] * gn.value[j];
        g[r * d + j] += (*inv)[r] * (dh - mean_dh - h[r * d + j] * mean_dh_h);
      }
    }
  });
}

Mask validity_attention_mask(const Mask& valid) {
  const std::size_t n = valid.size();
  Mask mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      mask[i * n + j] = valid[i] ? valid[j] : static_cast<std::uint8_t>(i == j);
    }
  }
  return mask;
}

AttentionResult attention_core(const Var& q, const Var& k, const Var& v, const Mask& mask, int heads) {
  require_rank("attention", q, 2);
  require_rank("attention", k, 2);
  require_rank("attention", v, 2);
  const std::size_t n = q.shape()[0], d = q.shape()[1], dv = v.shape()[1];
  if (k.shape() != q.shape() || v.shape()[0] != n) {
    throw InvalidInput("attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) + ", v " +
                       shape_string(v.shape()));
  }
  if (mask.size() != n * n) throw InvalidInput("attention: mask must be N x N");
  const auto h = static_cast<std::size_t>(heads);
  if (heads < 1 || d % h != 0 || dv % h != 0) {
    throw InvalidInput("attention: head count " + std::to_string(heads) + " must divide widths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::none_of(mask.begin() + i * n, mask.begin() + (i + 1) * n, [](std::uint8_t m) { return m != 0; })) {
      throw InvalidInput("attention: mask row " + std::to_string(i) + " has no visible entry");
    }
  }
  const std::size_t dh = d / h, dvh = dv / h;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  const Array& Q = q.value();
  const Array& K = k.value();
  const Array& V = v.value();

  Array probs(Shape{h, n, n});
  Array out(Shape{n, dv});
  for (std::size_t hh = 0; hh < h; ++hh) {
    double* P = probs.data().data() + hh * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      double* pr = P + i * n;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += Q(i, hh * dh + c) * K(j, hh * dh + c);
        pr[j] = dot * s + (mask[i * n + j] ? 0.0 : kMaskedLogit);
        mx = std::max(mx, pr[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += (pr[j] = std::exp(pr[j] - mx));
      for (std::size_t j = 0; j < n; ++j) pr[j] /= total;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = pr[j];
        if (p == 0.0) continue;
        for (std::size_t c = 0; c < dvh; ++c) out(i, hh * dvh + c) += p * V(j, hh * dvh + c);
      }
    }
  }

  AttentionResult result;
  result.weights = probs;
  result.out = detail::make_result(
      "attention", std::move(out), {q, k, v}, [probs = std::move(probs), n, h, dh, dvh, s](Node& self) {
        Node& qn = input(self, 0);
        Node& kn = input(self, 1);
        Node& vn = input(self, 2);
        const std::size_t d = h * dh, dv = h * dvh;
        std::vector<double> dS(n * n);
        for (std::size_t hh = 0; hh < h; ++hh) {
          const double* P = probs.data().data() + hh * n * n;
          for (std::size_t i = 0; i < n; ++i) {
            // dP_ij = dO_i · V_j
            double rowdot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              double dp = 0.0;
              for (std::size_t c = 0; c < dvh; ++c) dp += self.grad[i * dv + hh * dvh + c] * vn.value[j * dv + hh * dvh + c];
              dS[i * n + j] = dp;
              rowdot += dp * P[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) dS[i * n + j] = P[i * n + j] * (dS[i * n + j] - rowdot);
          }
          if (vn.requires_grad) {
            Array& g = vn.grad_buffer();
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double p = P[i * n + j];
                if (p == 0.0) continue;
                for (std::size_t c = 0; c < dvh; ++c) g[j * dv + hh * dvh + c] += p * self.grad[i * dv + hh * dvh + c];
              }
          }
          if (qn.requires_grad) {
            Array& g = qn.grad_buffer();
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double ds = dS[i * n + j] * s;
                if (ds == 0.0) continue;
                for (std::size_t c = 0; c < dh; ++c) g[i * d + hh * dh + c] += ds * kn.value[j * d + hh * dh + c];
              }
          }
          if (kn.requires_grad) {
            Array& g = kn.grad_buffer();
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double ds = dS[i * n + j] * s;
                if (ds == 0.0) continue;
                for (std::size_t c = 0; c < dh; ++c) g[j * d + hh * dh + c] += ds * qn.value[i * d + hh * dh + c];
              }
          }
        }
      });
  return result;
}

AttentionResult masked_attention(const Var& xq, const Var& xk, const Var& xv, const Var& wq, const Var& wk,
                                 const Var& wv, const Mask& mask, int heads) {
  return attention_core(matmul(xq, wq), matmul(xk, wk), matmul(xv, wv), mask, heads);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: no inputs");
  const bool vec = parts.front().value().rank() == 1;
  const std::size_t n = vec ? 1 : parts.front().shape()[0];
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.value().rank() != (vec ? 1u : 2u) || (!vec && p.shape()[0] != n)) {
      throw InvalidInput("concat_cols: incompatible part " + shape_string(p.shape()));
    }
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Array y(vec ? Shape{total} : Shape{n, total});
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths[p]; ++j) y[i * total + off + j] = parts[p].value()[i * widths[p] + j];
    off += widths[p];
  }
  return detail::make_result("concat_cols", std::move(y), parts, [n, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      Node& in = input(self, p);
      if (in.requires_grad) {
        Array& g = in.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[p]; ++j) g[i * widths[p] + j] += self.grad[i * total + off + j];
      }
      off += widths[p];
    }
  });
}

Var slice_cols(const Var& x, std::size_t start, std::size_t len) {
  const bool vec = x.value().rank() == 1;
  if (!vec) require_rank("slice_cols", x, 2);
  const std::size_t n = x.value().rows(), m = x.value().cols();
  if (start + len > m) throw InvalidInput("slice_cols: range exceeds width " + std::to_string(m));
  Array y(vec ? Shape{len} : Shape{n, len});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < len; ++j) y[i * len + j] = x.value()[i * m + start + j];
  return detail::make_result("slice_cols", std::move(y), {x}, [n, m, start, len](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < len; ++j) g[i * m + start + j] += self.grad[i * len + j];
  });
}

Var slice(const Var& x, std::size_t start, std::size_t len) {
  require_rank("slice", x, 1);
  return slice_cols(x, start, len);
}

Var broadcast_rows(const Var& v, std::size_t n) {
  require_rank("broadcast_rows", v, 1);
  const std::size_t m = v.size();
  Array y(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y[i * m + j] = v.value()[j];
  return detail::make_result("broadcast_rows", std::move(y), {v}, [n, m](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
  });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw InvalidInput("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  return detail::make_result("reshape", x.value().reshaped(std::move(shape)), {x},
                             [](Node& self) { input(self, 0).accumulate(self.grad.reshaped(input(self, 0).value.shape())); });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return detail::make_result("sum", Array::scalar(total), {x}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (auto& v : g.data()) v += self.grad[0];
  });
}

Var mean(const Var& x) {
  if (x.size() == 0) throw InvalidInput("mean of empty array");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Var sum_scalars(const std::vector<Var>& scalars) {
  if (scalars.empty()) return constant(Array::scalar(0.0));
  double total = 0.0;
  for (const auto& s : scalars) {
    if (s.size() != 1) throw InvalidInput("sum_scalars: non-scalar input " + shape_string(s.shape()));
    total += s.value()[0];
  }
  return detail::make_result("sum_scalars", Array::scalar(total), scalars, [](Node& self) {
    for (auto& in : self.inputs) in->accumulate_at(0, self.grad[0]);
  });
}

Var weighted_sum(const Var& x, const Array& weights) {
  if (weights.size() != x.size()) throw InvalidInput("weighted_sum: weight count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x.value()[i] * weights[i];
  return detail::make_result("weighted_sum", Array::scalar(total), {x}, [weights](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * weights[i];
  });
}

Var masked_sum(const Var& x, const Mask& valid) {
  if (valid.size() != x.size()) throw InvalidInput("masked_sum: mask length mismatch");
  Array w(x.shape());
  for (std::size_t i = 0; i < valid.size(); ++i) w[i] = valid[i] ? 1.0 : 0.0;
  return weighted_sum(x, w);
}

Var masked_mean_rows(const Var& x, const Mask& valid) {
  require_rank("masked_mean_rows", x, 2);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (valid.size() != n) throw InvalidInput("masked_mean_rows: mask length mismatch");
  const auto count = static_cast<double>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
  if (count == 0) throw InvalidInput("masked_mean_rows: no valid rows");
  Array y(Shape{d});
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    for (std::size_t j = 0; j < d; ++j) y[j] += x.value()[i * d + j];
  }
  for (auto& v : y.data()) v /= count;
  return detail::make_result("masked_mean_rows", std::move(y), {x}, [valid, n, d, count](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    Array& g = in.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[j] / count;
    }
  });
}

Var gaussian_logp(const Var& mu, const Var& log_std, const Array& action, const Mask& valid) {
  const std::size_t n = mu.size();
  if (log_std.size() != n || action.size() != n || valid.size() != n) {
    throw InvalidInput("gaussian_logp: length mismatch");
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const double ls = log_std.value()[i];
    const double z = (action[i] - mu.value()[i]) * std::exp(-ls);
    total += -0.5 * z * z - ls - half_log_2pi;
  }
  return detail::make_result("gaussian_logp", Array::scalar(total), {mu, log_std}, [action, valid, n](Node& self) {
    Node& mn = input(self, 0);
    Node& sn = input(self, 1);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      const double ls = sn.value[i];
      const double inv_var = std::exp(-2.0 * ls);
      const double diff = action[i] - mn.value[i];
      mn.accumulate_at(i, g * diff * inv_var);
      sn.accumulate_at(i, g * (diff * diff * inv_var - 1.0));
    }
  });
}

Var gru_cell(const Var& inp, const Var& h, const GruWeights& w) {
  const std::size_t hw = h.value().cols();
  if (w.w_ih.shape().size() != 2 || w.w_ih.shape()[1] != 3 * hw || w.w_hh.shape() != Shape{hw, 3 * hw} ||
      w.b_ih.size() != 3 * hw || w.b_hh.size() != 3 * hw) {
    throw InvalidInput("gru_cell: weights do not match hidden width " + std::to_string(hw));
  }
  if (inp.value().cols() != w.w_ih.shape()[0] || inp.value().rows() != h.value().rows() ||
      inp.value().rank() != h.value().rank()) {
    throw InvalidInput("gru_cell: input " + shape_string(inp.shape()) + " vs hidden " + shape_string(h.shape()));
  }
  const Var gi = linear(inp, w.w_ih, w.b_ih);
  const Var gh = linear(h, w.w_hh, w.b_hh);
  const Var r = sigmoid(add(slice_cols(gi, 0, hw), slice_cols(gh, 0, hw)));
  const Var z = sigmoid(add(slice_cols(gi, hw, hw), slice_cols(gh, hw, hw)));
  const Var n = tanh(add(slice_cols(gi, 2 * hw, hw), mul(r, slice_cols(gh, 2 * hw, hw))));
  return add(n, mul(z, sub(h, n)));
}

}  // namespace morphrl
