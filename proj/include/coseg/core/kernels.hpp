#pragma once

// Raw numeric kernels on NCHW buffers. No graph bookkeeping here.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coseg/core/tensor.hpp"

namespace coseg::kernels {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  int in_c, in_h, in_w;
  int out_c, out_h, out_w;
  int kernel, stride, pad;

  [[nodiscard]] int col_rows() const { return in_c * kernel * kernel; }
  [[nodiscard]] int col_cols() const { return out_h * out_w; }
  [[nodiscard]] bool pointwise() const { return kernel == 1 && stride == 1 && pad == 0; }
};

inline ConvGeometry conv_geometry(const Shape& in, int out_c, int kernel, int stride, int pad) {
  ConvGeometry g{in.c, in.h, in.w, out_c, 0, 0, kernel, stride, pad};
  g.out_h = (in.h + 2 * pad - kernel) / stride + 1;
  g.out_w = (in.w + 2 * pad - kernel) / stride + 1;
  if (g.out_h <= 0 || g.out_w <= 0) throw ShapeError("convolution output would be empty for input " + in.str());
  return g;
}

template <class T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
  const int k = g.kernel;
  for (int c = 0; c < g.in_c; ++c) {
    const T* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * g.out_h * g.out_w;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          if (g.stride == 1) {
            const int shift = kx - g.pad;
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox + shift;
              dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
            }
          } else {
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, const ConvGeometry& g, T* img) {
  const int k = g.kernel;
  for (int c = 0; c < g.in_c; ++c) {
    T* plane = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * g.out_h * g.out_w;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

/// out = conv(x, weight) + bias. weight is (out_c, in_c, k, k); bias may be null.
template <class T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const T* bias, const ConvGeometry& g,
                    Tensor<T>& out) {
  const int batch = x.shape().n;
  const int rows = g.col_rows();
  const int cols_n = g.col_cols();
  MapConstMat<T> wmat(weight.data(), g.out_c, rows);
  std::vector<T> cols;
  if (!g.pointwise()) cols.resize(static_cast<std::size_t>(rows) * cols_n);
  for (int n = 0; n < batch; ++n) {
    const T* src = x.plane(n, 0);
    if (!g.pointwise()) {
      im2col(src, g, cols.data());
      src = cols.data();
    }
    MapConstMat<T> cmat(src, rows, cols_n);
    MapMat<T> omat(out.plane(n, 0), g.out_c, cols_n);
    omat.noalias() = wmat * cmat;
    if (bias != nullptr) {
      for (int o = 0; o < g.out_c; ++o) omat.row(o).array() += bias[o];
    }
  }
}

/// Accumulates gradients of a convolution. Any of grad_x/grad_w/grad_b may be null.
template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out,
                     const ConvGeometry& g, T* grad_x, T* grad_w, T* grad_b) {
  const int batch = x.shape().n;
  const int rows = g.col_rows();
  const int cols_n = g.col_cols();
  MapConstMat<T> wmat(weight.data(), g.out_c, rows);
  std::vector<T> cols;
  std::vector<T> dcols;
  if (!g.pointwise()) {
    cols.resize(static_cast<std::size_t>(rows) * cols_n);
    dcols.resize(cols.size());
  }
  const std::size_t in_per = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
  for (int n = 0; n < batch; ++n) {
    MapConstMat<T> gmat(grad_out.plane(n, 0), g.out_c, cols_n);
    if (grad_b != nullptr) {
      // plain loop: Eigen's vectorised redux peels by address, so its order would vary between buffers
      for (int o = 0; o < g.out_c; ++o) {
        const T* r = grad_out.plane(n, 0) + static_cast<std::size_t>(o) * cols_n;
        T acc = 0;
        for (int i = 0; i < cols_n; ++i) acc += r[i];
        grad_b[o] += acc;
      }
    }
    const T* src = x.plane(n, 0);
    if (grad_w != nullptr) {
      if (!g.pointwise()) {
        im2col(src, g, cols.data());
        src = cols.data();
      }
      MapConstMat<T> cmat(src, rows, cols_n);
      MapMat<T> gw(grad_w, g.out_c, rows);
      gw.noalias() += gmat * cmat.transpose();
    }
    if (grad_x != nullptr) {
      T* gx = grad_x + n * in_per;
      if (g.pointwise()) {
        MapMat<T> gxm(gx, rows, cols_n);
        gxm.noalias() += wmat.transpose() * gmat;
      } else {
        MapMat<T> dc(dcols.data(), rows, cols_n);
        dc.noalias() = wmat.transpose() * gmat;
        col2im_add(dcols.data(), g, gx);
      }
    }
  }
}

/// Interpolation taps for one axis of a half-pixel-centred (corners not aligned) bilinear resize.
struct ResizeAxis {
  std::vector<int> lo, hi;
  std::vector<double> w_hi;
};

inline ResizeAxis resize_axis(int in, int out) {
  ResizeAxis a;
  a.lo.resize(out);
  a.hi.resize(out);
  a.w_hi.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(src);
    if (i0 > in - 1) i0 = in - 1;
    a.lo[o] = i0;
    a.hi[o] = i0 < in - 1 ? i0 + 1 : i0;
    a.w_hi[o] = src - i0;
  }
  return a;
}

template <class T>
void resize_bilinear_forward(const Tensor<T>& x, Tensor<T>& out) {
  const Shape& si = x.shape();
  const Shape& so = out.shape();
  const ResizeAxis ay = resize_axis(si.h, so.h);
  const ResizeAxis ax = resize_axis(si.w, so.w);
  for (int n = 0; n < si.n; ++n) {
    for (int c = 0; c < si.c; ++c) {
      const T* src = x.plane(n, c);
      T* dst = out.plane(n, c);
      for (int oy = 0; oy < so.h; ++oy) {
        const T wy1 = static_cast<T>(ay.w_hi[oy]);
        const T wy0 = T(1) - wy1;
        const T* r0 = src + static_cast<std::size_t>(ay.lo[oy]) * si.w;
        const T* r1 = src + static_cast<std::size_t>(ay.hi[oy]) * si.w;
        for (int ox = 0; ox < so.w; ++ox) {
          const T wx1 = static_cast<T>(ax.w_hi[ox]);
          const T wx0 = T(1) - wx1;
          const int x0 = ax.lo[ox];
          const int x1 = ax.hi[ox];
          dst[static_cast<std::size_t>(oy) * so.w + ox] =
              wy0 * (wx0 * r0[x0] + wx1 * r0[x1]) + wy1 * (wx0 * r1[x0] + wx1 * r1[x1]);
        }
      }
    }
  }
}

template <class T>
void resize_bilinear_backward(const Tensor<T>& grad_out, const Shape& in_shape, T* grad_in) {
  const Shape& so = grad_out.shape();
  const ResizeAxis ay = resize_axis(in_shape.h, so.h);
  const ResizeAxis ax = resize_axis(in_shape.w, so.w);
  for (int n = 0; n < so.n; ++n) {
    for (int c = 0; c < so.c; ++c) {
      const T* g = grad_out.plane(n, c);
      T* dst = grad_in + (static_cast<std::size_t>(n) * so.c + c) * in_shape.plane();
      for (int oy = 0; oy < so.h; ++oy) {
        const T wy1 = static_cast<T>(ay.w_hi[oy]);
        const T wy0 = T(1) - wy1;
        T* r0 = dst + static_cast<std::size_t>(ay.lo[oy]) * in_shape.w;
        T* r1 = dst + static_cast<std::size_t>(ay.hi[oy]) * in_shape.w;
        for (int ox = 0; ox < so.w; ++ox) {
          const T wx1 = static_cast<T>(ax.w_hi[ox]);
          const T wx0 = T(1) - wx1;
          const T v = g[static_cast<std::size_t>(oy) * so.w + ox];
          r0[ax.lo[ox]] += wy0 * wx0 * v;
          r0[ax.hi[ox]] += wy0 * wx1 * v;
          r1[ax.lo[ox]] += wy1 * wx0 * v;
          r1[ax.hi[ox]] += wy1 * wx1 * v;
        }
      }
    }
  }
}

template <class T>
T stable_sigmoid(T z) {
  if (z >= T(0)) {
    const T e = std::exp(-z);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace coseg::kernels
