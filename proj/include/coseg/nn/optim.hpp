#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "coseg/core/autograd.hpp"

namespace coseg::nn {

/// Adaptive-moment optimizer with bias-corrected first/second moment estimates.
template <class T>
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Var<T>*> params, Options opt) : params_(std::move(params)), opt_(opt) {
    if (!(opt_.lr > 0)) throw ConfigError("learning rate must be > 0");
    for (auto* p : params_) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, t_);
    const double c2 = 1.0 - std::pow(opt_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Var<T>& p = *params_[k];
      if (p.node()->grad.empty()) continue;
      const Tensor<T>& g = p.grad();
      Tensor<T>& w = p.mutable_value();
      Tensor<T>& m = m_[k];
      Tensor<T>& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        m[i] = static_cast<T>(opt_.beta1 * m[i] + (1 - opt_.beta1) * gi);
        v[i] = static_cast<T>(opt_.beta2 * v[i] + (1 - opt_.beta2) * gi * gi);
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] = static_cast<T>(w[i] - opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  [[nodiscard]] double lr() const { return opt_.lr; }
  void set_lr(double lr) { opt_.lr = lr; }
  [[nodiscard]] long steps() const { return t_; }

 private:
  std::vector<Var<T>*> params_;
  Options opt_;
  std::vector<Tensor<T>> m_, v_;
  long t_ = 0;
};

/// Multiplies the learning rate by `factor` once `patience` consecutive epochs
/// pass without the monitored loss improving on its best value.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience) : factor_(factor), patience_(patience) {
    if (patience < 1) throw ConfigError("scheduler patience must be >= 1");
    if (!(factor > 0 && factor < 1)) throw ConfigError("plateau factor must be in (0,1)");
  }

  /// Returns the learning rate to use for the next epoch.
  double step(double monitored, double lr) {
    if (monitored < best_) {
      best_ = monitored;
      bad_epochs_ = 0;
      return lr;
    }
    if (++bad_epochs_ >= patience_) {
      bad_epochs_ = 0;
      return lr * factor_;
    }
    return lr;
  }

  [[nodiscard]] double best() const { return best_; }

 private:
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

/// Signals a stop after `patience` consecutive epochs without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw ConfigError("early stopping patience must be >= 1");
  }

  /// Records an epoch; returns true when this value is a new best.
  bool update(double monitored) {
    if (monitored < best_) {
      best_ = monitored;
      since_best_ = 0;
      return true;
    }
    ++since_best_;
    return false;
  }

  [[nodiscard]] bool should_stop() const { return since_best_ >= patience_; }
  [[nodiscard]] double best() const { return best_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_best_ = 0;
};

}  // namespace coseg::nn
