#pragma once

#include <random>
#include <type_traits>

#include "coseg/core/autograd.hpp"
#include "coseg/core/tensor.hpp"
#include "oracles.hpp"

namespace testing_support {

/// Scalar type of a Var.
template <class V>
using scalar_t = std::remove_cvref_t<decltype(std::declval<V>().item())>;

template <class T>
coseg::Tensor<T> random_tensor(coseg::Shape s, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  coseg::Tensor<T> t(s);
  for (auto& v : t.vec()) v = static_cast<T>(u(rng));
  return t;
}

template <class T>
coseg::Tensor<T> random_binary_tensor(coseg::Shape s, std::uint64_t seed, double p = 0.5) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p);
  coseg::Tensor<T> t(s);
  for (auto& v : t.vec()) v = b(rng) ? T(1) : T(0);
  return t;
}

template <class T>
oracle::Grid to_grid(const coseg::Image<T>& img) {
  oracle::Grid g = oracle::zeros(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) g[y][x] = static_cast<double>(img(y, x));
  return g;
}

inline coseg::BinaryMask to_mask(const oracle::Grid& g) {
  coseg::BinaryMask m(oracle::rows(g), oracle::cols(g));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m(y, x) = g[y][x] > 0.5 ? 1 : 0;
  return m;
}

inline coseg::Image<double> to_soft(const oracle::Grid& g) {
  coseg::Image<double> m(oracle::rows(g), oracle::cols(g));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m(y, x) = g[y][x];
  return m;
}

/// (1,1,H,W) tensor view of a single image.
template <class T, class U>
coseg::Tensor<T> as_tensor(const coseg::Image<U>& img) {
  coseg::Tensor<T> t(coseg::Shape{1, 1, img.height, img.width});
  for (std::size_t i = 0; i < img.size(); ++i) t[i] = static_cast<T>(img.data[i]);
  return t;
}

}  // namespace testing_support
