#pragma once

// Adam, and the direct fit of per-pixel embeddings to a label map.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "metricseg/core.hpp"
#include "metricseg/loss.hpp"
#include "metricseg/rng.hpp"

namespace metricseg {

struct AdamParams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(std::size_t num_params, AdamParams params = {})
      : params_(params), m_(num_params, 0.0), v_(num_params, 0.0) {
    if (!(params.lr > 0.0) || !(params.beta1 >= 0.0 && params.beta1 < 1.0) ||
        !(params.beta2 >= 0.0 && params.beta2 < 1.0) || !(params.eps > 0.0)) {
      throw ValueError("invalid Adam hyperparameters");
    }
  }

  const AdamParams& params() const { return params_; }
  std::uint64_t step() const { return t_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  // One bias-corrected Adam update of `params` in place.
  void apply(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
    }
    for (double g : grad) {
      if (!std::isfinite(g)) throw ValueError("adam_step: non-finite gradient");
    }
    ++t_;
    const double b1 = params_.beta1;
    const double b2 = params_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] -= params_.lr * m_hat / (std::sqrt(v_hat) + params_.eps);
    }
  }

 private:
  AdamParams params_;
  std::uint64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state) {
  state.apply(params, grad);
}

inline void adam_step(VectorField& params, const VectorField& grad, AdamState& state) {
  if (!params.same_shape(grad)) throw ShapeError("adam_step: gradient shape differs from parameters");
  state.apply(params.data(), grad.data());
}

// Seeded isotropic Gaussian field; draw order is raster order, then component.
inline VectorField gaussian_field(int height, int width, int dim, double scale, std::uint64_t seed) {
  VectorField f(height, width, dim);
  CounterRng rng(seed);
  for (double& v : f.data()) v = scale * rng.normal();
  return f;
}

// Stops when the total loss moved by less than `tolerance` over the last
// `window` iterations.
struct FitConfig {
  int max_iters = 2000;
  LossParams loss{};
  AdamParams adam{};
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  double tolerance = 1e-7;
  int window = 50;
  int split_connectivity = 4;

  void validate() const {
    if (max_iters < 1) throw ValueError("max_iters must be at least 1");
    if (!(init_scale > 0.0)) throw ValueError("init_scale must be positive");
    if (window < 1) throw ValueError("convergence window must be at least 1");
    loss.validate();
  }
};

struct LossLogEntry {
  int iteration = 0;
  double l_int = 0.0;
  double l_ext = 0.0;
  double l_norm = 0.0;
  double total = 0.0;
};

struct FitResult {
  VectorField field;
  LossReport report;
  bool converged = false;
  int iterations = 0;
  std::vector<LossLogEntry> log;
};

// Optimizes every pixel's vector directly under the discriminative loss.
// Objects that fall apart into several pieces inside the map are treated as
// separate objects, with the push term between their pieces dropped.
// Without convergence the lowest-loss field seen is returned and
// `converged` is false.
inline FitResult fit_embeddings(const LabelMap& labels, const FitConfig& config) {
  config.validate();
  if (labels.objects().empty()) throw ValueError("fit_embeddings: label map has no objects");

  const auto split = relabel_connected(labels, config.split_connectivity);
  const auto mask = build_ext_mask(labels, split.labels, split.to_original);

  FitResult result;
  VectorField field =
      gaussian_field(labels.height(), labels.width(), config.loss.dim, config.init_scale, config.seed);
  AdamState adam(field.data().size(), config.adam);

  VectorField best = field;
  double best_total = std::numeric_limits<double>::infinity();

  for (int it = 0; it < config.max_iters; ++it) {
    auto [report, grad] = compute_loss_and_gradient(field, split.labels, config.loss, mask);
    result.log.push_back({it, report.l_int, report.l_ext, report.l_norm, report.total});
    if (report.total < best_total) {
      best_total = report.total;
      best = field;
    }
    if (it >= config.window) {
      const double prev = result.log[static_cast<std::size_t>(it - config.window)].total;
      if (std::abs(prev - report.total) < config.tolerance) {
        result.converged = true;
        result.iterations = it;
        break;
      }
    }
    adam_step(field, grad, adam);
    result.iterations = it + 1;
  }

  if (!result.converged) {
    const auto last = compute_loss(field, split.labels, config.loss, mask);
    result.log.push_back({result.iterations, last.l_int, last.l_ext, last.l_norm, last.total});
    if (last.total < best_total) best = field;
    field = std::move(best);
  }
  result.report = compute_loss(field, split.labels, config.loss, mask);
  result.field = std::move(field);
  return result;
}

}  // namespace metricseg
