#pragma once

// Differentiable ops on Var. Reductions accumulate in double regardless of T.

#include <cmath>
#include <numeric>
#include <vector>

#include "coseg/core/autograd.hpp"
#include "coseg/core/kernels.hpp"

namespace coseg::ops {

template <class T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

/// 2D convolution. weight is (out_c, in_c, k, k); bias (out_c,1,1,1) or undefined.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  const Shape& ws = weight.shape();
  if (ws.c != x.shape().c)
    throw ShapeError("conv2d: input has " + std::to_string(x.shape().c) + " channels, weight expects " +
                     std::to_string(ws.c));
  if (ws.h != ws.w) throw ShapeError("conv2d: non-square kernel");
  const kernels::ConvGeometry g = kernels::conv_geometry(x.shape(), ws.n, ws.h, stride, pad);
  Tensor<T> out(Shape{x.shape().n, g.out_c, g.out_h, g.out_w});
  const bool has_bias = bias.defined();
  kernels::conv2d_forward(x.value(), weight.value(), has_bias ? bias.value().data() : nullptr, g, out);

  auto fn = [g, has_bias](const Node<T>& self) {
    const Node<T>& xn = *self.parents[0];
    const Node<T>& wn = *self.parents[1];
    T* gb = has_bias ? parent_grad(self, 2) : nullptr;
    kernels::conv2d_backward(xn.value, wn.value, self.grad, g, parent_grad(self, 0), parent_grad(self, 1), gb);
  };
  if (has_bias) return make_result(std::move(out), {&x, &weight, &bias}, fn);
  return make_result(std::move(out), {&x, &weight}, fn);
}

/// Per-channel batch normalisation. In training mode batch statistics are used
/// and the running estimates are updated in place.
template <class T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, bool training, double momentum = 0.1, double eps = 1e-5) {
  const Shape s = x.shape();
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(hw);
  std::vector<T> mean(s.c), invstd(s.c);
  for (int c = 0; c < s.c; ++c) {
    if (training) {
      double sum = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.value().plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      const double m = sum / count;
      double sq = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.value().plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - m) * (p[i] - m);
      }
      const double var = sq / count;
      mean[c] = static_cast<T>(m);
      invstd[c] = static_cast<T>(1.0 / std::sqrt(var + eps));
      if (grad_enabled()) {
        const double unbiased = count > 1 ? sq / (count - 1) : var;
        running_mean[c] = static_cast<T>((1 - momentum) * running_mean[c] + momentum * m);
        running_var[c] = static_cast<T>((1 - momentum) * running_var[c] + momentum * unbiased);
      }
    } else {
      mean[c] = running_mean[c];
      invstd[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps));
    }
  }
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* p = x.value().plane(n, c);
      T* o = out.plane(n, c);
      const T scale = gamma.value()[c] * invstd[c];
      const T shift = beta.value()[c] - mean[c] * scale;
      for (std::size_t i = 0; i < hw; ++i) o[i] = p[i] * scale + shift;
    }

  auto fn = [s, hw, count, training, mean, invstd](const Node<T>& self) {
    const Tensor<T>& xv = self.parents[0]->value;
    const Tensor<T>& gv = self.parents[1]->value;
    T* gx = parent_grad(self, 0);
    T* gg = parent_grad(self, 1);
    T* gb = parent_grad(self, 2);
    const Tensor<T>& dy = self.grad;
    for (int c = 0; c < s.c; ++c) {
      double sum_dy = 0;
      double sum_dy_xhat = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = xv.plane(n, c);
        const T* d = dy.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) {
          sum_dy += d[i];
          sum_dy_xhat += static_cast<double>(d[i]) * (p[i] - mean[c]) * invstd[c];
        }
      }
      if (gg) gg[c] += static_cast<T>(sum_dy_xhat);
      if (gb) gb[c] += static_cast<T>(sum_dy);
      if (!gx) continue;
      const double g = gv[c];
      const double is = invstd[c];
      for (int n = 0; n < s.n; ++n) {
        const T* p = xv.plane(n, c);
        const T* d = dy.plane(n, c);
        T* o = gx + (static_cast<std::size_t>(n) * s.c + c) * hw;
        if (training) {
          for (std::size_t i = 0; i < hw; ++i) {
            const double xhat = (p[i] - mean[c]) * is;
            o[i] += static_cast<T>(g * is / count * (count * d[i] - sum_dy - xhat * sum_dy_xhat));
          }
        } else {
          for (std::size_t i = 0; i < hw; ++i) o[i] += static_cast<T>(g * is * d[i]);
        }
      }
    }
  };
  return make_result(std::move(out), {&x, &gamma, &beta}, fn);
}

template <class T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x.shape());
  const auto& in = x.value().vec();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] <= T(0) ? T(0) : in[i];  // NaN passes through
  return make_result(std::move(out), {&x}, [](const Node<T>& self) {
    T* g = parent_grad(self, 0);
    const auto& xv = self.parents[0]->value.vec();
    for (std::size_t i = 0; i < xv.size(); ++i)
      if (xv[i] > T(0)) g[i] += self.grad[i];
  });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out(x.shape());
  const auto& in = x.value().vec();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = kernels::stable_sigmoid(in[i]);
  auto y = std::make_shared<Tensor<T>>(out);
  return make_result(std::move(out), {&x}, [y](const Node<T>& self) {
    T* g = parent_grad(self, 0);
    for (std::size_t i = 0; i < y->size(); ++i) g[i] += self.grad[i] * (*y)[i] * (T(1) - (*y)[i]);
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(out), {&a, &b}, [](const Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k)
      if (T* g = parent_grad(self, k))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(out), {&a, &b}, [](const Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (T* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    if (T* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
  });
}

/// offset + scale * x, elementwise.
template <class T>
Var<T> affine(const Var<T>& x, T scale, T offset) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = offset + scale * x.value()[i];
  return make_result(std::move(out), {&x}, [scale](const Node<T>& self) {
    T* g = parent_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += scale * self.grad[i];
  });
}

template <class T>
Var<T> one_minus(const Var<T>& x) {
  return affine(x, T(-1), T(1));
}

/// Sum of equally shaped terms weighted by `weights`.
template <class T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& weights) {
  if (terms.empty()) throw ShapeError("weighted_sum of nothing");
  if (terms.size() != weights.size()) throw ShapeError("weighted_sum: weight count mismatch");
  for (const auto& t : terms) require_same_shape(terms.front(), t, "weighted_sum");
  Tensor<T> out(terms.front().shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0;
    for (std::size_t k = 0; k < terms.size(); ++k) acc += static_cast<double>(weights[k]) * terms[k].value()[i];
    out[i] = static_cast<T>(acc);
  }
  return make_result(std::move(out), terms, [weights](const Node<T>& self) {
    for (std::size_t k = 0; k < weights.size(); ++k)
      if (T* g = parent_grad(self, k))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += weights[k] * self.grad[i];
  });
}

template <class T>
Var<T> sum(const std::vector<Var<T>>& terms) {
  return weighted_sum(terms, std::vector<T>(terms.size(), T(1)));
}

/// Mean over every element, returned as a (1,1,1,1) tensor.
template <class T>
Var<T> mean(const Var<T>& x) {
  const auto& v = x.value().vec();
  const double acc = std::accumulate(v.begin(), v.end(), 0.0);
  const double count = static_cast<double>(v.size());
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / count));
  return make_result(std::move(out), {&x}, [count](const Node<T>& self) {
    T* g = parent_grad(self, 0);
    const T d = static_cast<T>(self.grad[0] / count);
    const std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += d;
  });
}

/// Bilinear resize to (height, width), pixel centres aligned, corners not aligned.
template <class T>
Var<T> resize_bilinear(const Var<T>& x, int height, int width) {
  Shape s = x.shape();
  if (s.h == height && s.w == width) return x;
  const Shape in_shape = s;
  s.h = height;
  s.w = width;
  Tensor<T> out(s);
  kernels::resize_bilinear_forward(x.value(), out);
  return make_result(std::move(out), {&x}, [in_shape](const Node<T>& self) {
    kernels::resize_bilinear_backward(self.grad, in_shape, parent_grad(self, 0));
  });
}

/// Concatenation along the channel axis.
template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels of nothing");
  Shape s = parts.front().shape();
  s.c = 0;
  for (const auto& p : parts) {
    if (p.shape().n != s.n || p.shape().h != s.h || p.shape().w != s.w)
      throw ShapeError("concat_channels: mismatched shape " + p.shape().str() + " vs " +
                       parts.front().shape().str());
    s.c += p.shape().c;
  }
  Tensor<T> out(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const std::size_t len = static_cast<std::size_t>(p.shape().c) * hw;
      std::copy(p.value().plane(n, 0), p.value().plane(n, 0) + len, out.plane(n, offset));
      offset += p.shape().c;
    }
  }
  return make_result(std::move(out), parts, [s, hw](const Node<T>& self) {
    int offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const int pc = self.parents[k]->value.shape().c;
      if (T* g = parent_grad(self, k)) {
        const std::size_t len = static_cast<std::size_t>(pc) * hw;
        for (int n = 0; n < s.n; ++n) {
          const T* src = self.grad.plane(n, offset);
          T* dst = g + static_cast<std::size_t>(n) * len;
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
      }
      offset += pc;
    }
  });
}

/// Soft Dice coefficient per batch item: (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps).
/// pred is (N,1,H,W); target holds {0,1} values with the same shape. Result is (N,1,1,1).
template <class T>
Var<T> dice_coefficient(const Var<T>& pred, const Tensor<T>& target, double eps) {
  if (pred.shape() != target.shape())
    throw ShapeError("dice: prediction " + pred.shape().str() + " vs target " + target.shape().str());
  const Shape s = pred.shape();
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  std::vector<double> inter(s.n), denom(s.n);
  Tensor<T> out(Shape{s.n, 1, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    const T* p = pred.value().plane(n, 0);
    const T* g = target.plane(n, 0);
    double i_acc = 0, p_acc = 0, g_acc = 0;
    for (std::size_t i = 0; i < per; ++i) {
      i_acc += static_cast<double>(p[i]) * g[i];
      p_acc += p[i];
      g_acc += g[i];
    }
    inter[n] = i_acc;
    denom[n] = p_acc + g_acc + eps;
    out[n] = static_cast<T>((2 * i_acc + eps) / denom[n]);
  }
  auto tgt = std::make_shared<Tensor<T>>(target);
  return make_result(std::move(out), {&pred}, [tgt, inter, denom, eps, per](const Node<T>& self) {
    T* g = parent_grad(self, 0);
    const int batch = static_cast<int>(inter.size());
    for (int n = 0; n < batch; ++n) {
      const double d = denom[n];
      const double num = 2 * inter[n] + eps;
      const double up = self.grad[n];
      const T* t = tgt->plane(n, 0);
      T* dst = g + static_cast<std::size_t>(n) * per;
      for (std::size_t i = 0; i < per; ++i) dst[i] += static_cast<T>(up * (2.0 * t[i] * d - num) / (d * d));
    }
  });
}

}  // namespace coseg::ops
