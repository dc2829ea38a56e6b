#pragma once

// Projection of an arbitrary affinity graph onto the set of graphs that come
// from per-pixel embeddings: fit vectors u so that exp(-|u_i - u_j|_1)
// matches the target affinity on every valid edge in least squares. The
// fitted distances are L1 distances, so they satisfy the triangle inequality
// whatever the target was.

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "metricseg/core.hpp"
#include "metricseg/loss.hpp"
#include "metricseg/optimize.hpp"
#include "metricseg/rng.hpp"

namespace metricseg {

inline bool within_radius(EdgeOffset o, int radius) {
  return static_cast<long>(o.dy) * o.dy + static_cast<long>(o.dx) * o.dx <= static_cast<long>(radius) * radius;
}

// Nearest-neighbor offsets followed by `count` distinct canonical offsets
// drawn uniformly from the disc of the given radius.
inline std::vector<EdgeOffset> sample_offsets(int radius, int count, std::uint64_t seed, int connectivity = 4) {
  if (radius < 1) throw ValueError("offset radius must be at least 1");
  auto out = nearest_neighbor_offsets(connectivity);
  std::vector<EdgeOffset> pool;
  for (int dy = 0; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const EdgeOffset o{dy, dx};
      if (!o.canonical() || !within_radius(o, radius)) continue;
      if (std::find(out.begin(), out.end(), o) != out.end()) continue;
      pool.push_back(o);
    }
  }
  if (count < 0 || static_cast<std::size_t>(count) > pool.size()) {
    throw ValueError("cannot sample that many distinct offsets within the radius");
  }
  CounterRng rng(seed);
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(i))) +
                   static_cast<std::size_t>(i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct ProjectionConfig {
  int embed_dim = 3;
  int max_radius = 32;
  std::vector<EdgeOffset> offsets;  // subset of the target's offsets to fit; empty means all
  AdamParams adam{0.01, 0.9, 0.999, 1e-8};
  int max_iters = 5000;
  std::uint64_t seed = 0;
  double init_scale = 0.5;

  void validate() const {
    if (embed_dim < 1) throw ValueError("embed_dim must be at least 1");
    if (max_radius < 1) throw ValueError("max_radius must be at least 1");
    if (max_iters < 1) throw ValueError("max_iters must be at least 1");
    if (!(init_scale > 0.0)) throw ValueError("init_scale must be positive");
  }
};

struct ProjectionResult {
  VectorField field;
  MetricGraph metric;
  AffinityGraph affinity;
  double objective = 0.0;  // mean squared residual over fitted edges
  std::size_t num_edges = 0;
  std::vector<double> log;  // objective before each step, then the final value
};

namespace detail {

struct FitEdges {
  std::vector<std::size_t> channel;  // target channels in use
  std::size_t count = 0;
};

inline FitEdges select_edges(const AffinityGraph& target, const ProjectionConfig& config) {
  FitEdges e;
  for (std::size_t o = 0; o < target.num_offsets(); ++o) {
    const auto off = target.offsets()[o];
    if (!config.offsets.empty() &&
        std::find(config.offsets.begin(), config.offsets.end(), off) == config.offsets.end()) {
      continue;
    }
    if (!within_radius(off, config.max_radius)) {
      throw ValueError("target offset (" + std::to_string(off.dy) + "," + std::to_string(off.dx) +
                       ") lies beyond the projection radius");
    }
    e.channel.push_back(o);
  }
  for (const auto& off : config.offsets) {
    if (target.find(off) == target.num_offsets()) throw ValueError("requested offset is absent from the target");
  }
  for (std::size_t o : e.channel) {
    for (int y = 0; y < target.height(); ++y) {
      for (int x = 0; x < target.width(); ++x) {
        if (!target.valid(o, y, x)) continue;
        const double a = target.weight(o, y, x);
        if (!(a >= 0.0 && a <= 1.0)) throw ValueError("target affinities must lie in [0, 1]");
        ++e.count;
      }
    }
  }
  if (e.count == 0) throw ValueError("project_to_metric: target has no valid edges");
  return e;
}

// Mean squared residual and its gradient with respect to the vectors.
inline double projection_objective(const VectorField& u, const AffinityGraph& target, const FitEdges& edges,
                                   VectorField* grad) {
  if (grad) std::fill(grad->data().begin(), grad->data().end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(edges.count);
  double sum = 0.0;
  for (std::size_t o : edges.channel) {
    const auto off = target.offsets()[o];
    for (int y = 0; y < target.height(); ++y) {
      for (int x = 0; x < target.width(); ++x) {
        if (!target.valid(o, y, x)) continue;
        const auto ui = u.at(y, x);
        const auto uj = u.at(y + off.dy, x + off.dx);
        const double e = std::exp(-l1_distance(ui, uj));
        const double r = e - target.weight(o, y, x);
        sum += r * r;
        if (!grad) continue;
        // d/du_i (e - a)^2 = 2 (e - a) * (-e) * sign(u_i - u_j)
        const double scale = -2.0 * r * e * inv_n;
        auto gi = grad->at(y, x);
        auto gj = grad->at(y + off.dy, x + off.dx);
        for (std::size_t k = 0; k < ui.size(); ++k) {
          const double s = scale * sign(ui[k] - uj[k]);
          gi[k] += s;
          gj[k] -= s;
        }
      }
    }
  }
  return sum * inv_n;
}

}  // namespace detail

inline ProjectionResult project_to_metric(const AffinityGraph& target, const ProjectionConfig& config) {
  config.validate();
  const auto edges = detail::select_edges(target, config);

  ProjectionResult result;
  VectorField u = gaussian_field(target.height(), target.width(), config.embed_dim, config.init_scale, config.seed);
  VectorField grad(u.height(), u.width(), u.dim());
  AdamState adam(u.data().size(), config.adam);
  for (int it = 0; it < config.max_iters; ++it) {
    result.log.push_back(detail::projection_objective(u, target, edges, &grad));
    adam_step(u, grad, adam);
  }
  result.objective = detail::projection_objective(u, target, edges, nullptr);
  result.log.push_back(result.objective);
  result.num_edges = edges.count;

  std::vector<EdgeOffset> offsets;
  for (std::size_t o : edges.channel) offsets.push_back(target.offsets()[o]);
  result.metric = build_metric_graph(u, offsets);
  result.affinity = metric_to_affinity(result.metric);
  result.field = std::move(u);
  return result;
}

// Two stacked objects (top and bottom halves of the grid) whose affinities
// disagree with each other: nearest-neighbor edges across the shared boundary
// say "merge" on the left part and "split" on the right, while long-range
// edges tie each object together and keep the objects apart.
struct FixtureParams {
  int height = 32;
  int width = 16;
  std::vector<EdgeOffset> offsets = {{0, 1}, {1, 0}, {0, 4}, {4, 0}, {0, 8}, {8, 0},
                                     {4, 4}, {4, -4}, {0, 12}, {12, 0}};
  double merge_fraction = 0.5;  // leading share of the boundary (from x = 0) that says merge
  double intra_nn = 0.95;
  double boundary_merge = 0.9;
  double boundary_split = 0.1;
  double intra_long = 0.9;
  double inter_long = 0.1;
};

// Top object is label 1, bottom object label 2.
inline LabelMap fixture_objects(const FixtureParams& p) {
  LabelMap gt(p.height, p.width);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) gt(y, x) = y < p.height / 2 ? 1 : 2;
  }
  return gt;
}

inline AffinityGraph make_inconsistent_fixture(const FixtureParams& p = {}) {
  if (p.height < 16 || p.width < 16) throw ShapeError("fixture needs a grid of at least 16x16");
  if (!(p.merge_fraction >= 0.0 && p.merge_fraction <= 1.0)) throw ValueError("merge_fraction must lie in [0, 1]");
  for (double a : {p.intra_nn, p.boundary_merge, p.boundary_split, p.intra_long, p.inter_long}) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValueError("fixture affinities must lie in [0, 1]");
  }
  const auto gt = fixture_objects(p);
  AffinityGraph g(p.height, p.width, p.offsets);
  const double merge_end = p.merge_fraction * p.width;
  for (std::size_t o = 0; o < g.num_offsets(); ++o) {
    const auto off = g.offsets()[o];
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        if (!g.valid(o, y, x)) continue;
        const bool same = gt(y, x) == gt(y + off.dy, x + off.dx);
        double a;
        if (off.nearest_neighbor()) {
          a = same ? p.intra_nn : (x < merge_end ? p.boundary_merge : p.boundary_split);
        } else {
          a = same ? p.intra_long : p.inter_long;
        }
        g.set_weight(o, y, x, a);
      }
    }
  }
  return g;
}

// The same layout with nothing to repair: objects uniform inside, every
// cross-object edge at `inter` affinity.
inline FixtureParams consistent_fixture_params(double inter = 0.1) {
  FixtureParams p;
  p.intra_nn = 1.0;
  p.intra_long = 1.0;
  p.boundary_merge = inter;
  p.boundary_split = inter;
  p.inter_long = inter;
  return p;
}

}  // namespace metricseg
