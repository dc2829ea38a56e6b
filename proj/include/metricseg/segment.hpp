#pragma once

// Segmentation of metric/affinity graphs and vector fields.

#include <cstddef>
#include <cstdlib>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "metricseg/core.hpp"
#include "metricseg/loss.hpp"

namespace metricseg {

struct SegmentationConfig {
  double cc_threshold = 1.5;  // metric graphs: join when distance < threshold
  double affinity_threshold = 0.5;  // affinity graphs: join when affinity > threshold
  std::size_t min_size = 1;  // segments this small or smaller become background
  int max_dilation = 10;
  int connectivity = 4;

  void validate() const {
    if (!(cc_threshold > 0.0)) throw ValueError("cc_threshold must be positive");
    if (!(affinity_threshold > 0.0 && affinity_threshold < 1.0)) {
      throw ValueError("affinity_threshold must lie in (0, 1)");
    }
    if (max_dilation < 0) throw ValueError("max_dilation must be non-negative");
    if (connectivity != 4 && connectivity != 8) throw ValueError("connectivity must be 4 or 8");
  }
};

// Components of the graph restricted to its nearest-neighbor edges (4- or
// 8-neighborhood per config); every pixel is labeled, 1..K in raster order
// of first appearance.
template <typename Kind>
LabelMap connected_components(const EdgeGraph<Kind>& graph, const SegmentationConfig& config) {
  config.validate();
  const auto wanted = nearest_neighbor_offsets(config.connectivity);
  std::vector<std::pair<std::size_t, EdgeOffset>> channels;
  for (const auto& off : wanted) {
    if (off.dy >= graph.height() || std::abs(off.dx) >= graph.width()) continue;  // no such edge on this grid
    const std::size_t o = graph.find(off);
    if (o == graph.num_offsets()) {
      throw ValueError("connected_components: graph lacks nearest-neighbor offset (" + std::to_string(off.dy) +
                       "," + std::to_string(off.dx) + ")");
    }
    channels.emplace_back(o, off);
  }
  const int h = graph.height();
  const int w = graph.width();
  UnionFind sets(graph.plane_size());
  for (const auto& [o, off] : channels) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!graph.valid(o, y, x)) continue;
        const double wgt = graph.weight(o, y, x);
        bool join;
        if constexpr (std::is_same_v<Kind, DistanceTag>) {
          join = wgt < config.cc_threshold;
        } else {
          join = wgt > config.affinity_threshold;
        }
        if (join) {
          sets.unite(static_cast<std::size_t>(y) * w + x,
                     static_cast<std::size_t>(y + off.dy) * w + (x + off.dx));
        }
      }
    }
  }
  return labels_from_sets(sets, h, w, [](std::size_t) { return true; });
}

// Segments of size <= min_size become background.
inline LabelMap remove_small_segments(const LabelMap& labels, std::size_t min_size) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(labels.max_label()) + 1, 0);
  for (auto l : labels.data()) ++sizes[l];
  LabelMap out = labels;
  for (auto& l : out.data()) {
    if (l != 0 && sizes[l] <= min_size) l = 0;
  }
  return out;
}

// Grows positive labels into background, one 4-neighbor ring per round. A
// background pixel touching several labels takes the smallest.
inline LabelMap dilate_labels(const LabelMap& labels, int rounds) {
  const int h = labels.height();
  const int w = labels.width();
  LabelMap cur = labels;
  for (int r = 0; r < rounds; ++r) {
    LabelMap next = cur;
    bool changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (cur(y, x) != 0) continue;
        LabelMap::Label best = 0;
        auto consider = [&](int ny, int nx) {
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) return;
          const auto l = cur(ny, nx);
          if (l != 0 && (best == 0 || l < best)) best = l;
        };
        consider(y - 1, x);
        consider(y + 1, x);
        consider(y, x - 1);
        consider(y, x + 1);
        if (best != 0) {
          next(y, x) = best;
          changed = true;
        }
      }
    }
    cur = std::move(next);
    if (!changed) break;
  }
  return cur;
}

inline LabelMap postprocess(const LabelMap& labels, const SegmentationConfig& config) {
  config.validate();
  return dilate_labels(remove_small_segments(labels, config.min_size), config.max_dilation);
}

// Assigns each labeled gt pixel the gt object whose mean vector is nearest in
// L1; ties go to the smaller label. Background stays 0.
inline LabelMap seed_segment(const VectorField& field, const LabelMap& gt) {
  if (!gt.same_grid(field)) throw ShapeError("seed_segment: field and gt differ in height/width");
  if (gt.objects().empty()) throw ValueError("seed_segment: gt has no objects");
  const auto stats = detail::object_stats(field, gt);
  LabelMap out(gt.height(), gt.width());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == 0) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < stats.labels.size(); ++c) {
      const double d = l1_distance(field.at(i), stats.mean(c));
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    out[i] = stats.labels[best_c];
  }
  return out;
}

}  // namespace metricseg
