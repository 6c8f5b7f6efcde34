#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coseg/core/autograd.hpp"

namespace coseg::nn {

/// Base for anything owning trainable parameters or state buffers.
///
/// Members register themselves by name; the registry yields dotted module
/// paths ("encoder.stage2.block0.conv1.weight") used as checkpoint keys.
/// Registered members are referenced by address, so modules are neither
/// copyable nor movable.
template <class T>
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  using NamedParam = std::pair<std::string, Var<T>*>;
  using NamedBuffer = std::pair<std::string, Tensor<T>*>;

  [[nodiscard]] std::vector<NamedParam> named_parameters(const std::string& prefix = "") const {
    std::vector<NamedParam> out;
    collect_params(prefix, out);
    return out;
  }
  [[nodiscard]] std::vector<NamedBuffer> named_buffers(const std::string& prefix = "") const {
    std::vector<NamedBuffer> out;
    collect_buffers(prefix, out);
    return out;
  }
  [[nodiscard]] std::vector<Var<T>*> parameters() const {
    std::vector<Var<T>*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }
  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto& [name, p] : named_parameters()) n += p->value().size();
    return n;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  void train(bool on = true) {
    training_ = on;
    for (auto& [name, child] : children_) child->train(on);
  }
  void eval() { train(false); }
  [[nodiscard]] bool is_training() const { return training_; }

 protected:
  Var<T>& register_parameter(const std::string& name, Var<T>& p) {
    params_.emplace_back(name, &p);
    return p;
  }
  Tensor<T>& register_buffer(const std::string& name, Tensor<T>& b) {
    buffers_.emplace_back(name, &b);
    return b;
  }
  template <class M>
  M& register_module(const std::string& name, M& m) {
    children_.emplace_back(name, &m);
    return m;
  }

 private:
  static std::string join(const std::string& prefix, const std::string& name) {
    return prefix.empty() ? name : prefix + "." + name;
  }
  void collect_params(const std::string& prefix, std::vector<NamedParam>& out) const {
    for (auto& [name, p] : params_) out.emplace_back(join(prefix, name), p);
    for (auto& [name, child] : children_) child->collect_params(join(prefix, name), out);
  }
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer>& out) const {
    for (auto& [name, b] : buffers_) out.emplace_back(join(prefix, name), b);
    for (auto& [name, child] : children_) child->collect_buffers(join(prefix, name), out);
  }

  bool training_ = true;
  std::vector<NamedParam> params_;
  std::vector<NamedBuffer> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
};

/// Deterministic source of initial weights.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  /// He-normal draw with standard deviation sqrt(gain / fan_in).
  template <class T>
  Tensor<T> he_normal(Shape shape, int fan_in, double gain = 2.0) {
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
    Tensor<T> t(shape);
    for (auto& v : t.vec()) v = static_cast<T>(dist(rng_));
    return t;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Copies every parameter and buffer value from `src` into `dst` (possibly of another scalar type).
template <class Dst, class Src>
void copy_state(const Module<Src>& src, Module<Dst>& dst) {
  auto sp = src.named_parameters();
  auto dp = dst.named_parameters();
  auto sb = src.named_buffers();
  auto db = dst.named_buffers();
  if (sp.size() != dp.size() || sb.size() != db.size()) throw ShapeError("copy_state: module layouts differ");
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (sp[i].first != dp[i].first || sp[i].second->shape() != dp[i].second->shape())
      throw ShapeError("copy_state: parameter mismatch at " + sp[i].first);
    dp[i].second->mutable_value() = sp[i].second->value().template cast<Dst>();
  }
  for (std::size_t i = 0; i < sb.size(); ++i) {
    if (sb[i].first != db[i].first) throw ShapeError("copy_state: buffer mismatch at " + sb[i].first);
    *db[i].second = sb[i].second->template cast<Dst>();
  }
}

}  // namespace coseg::nn
