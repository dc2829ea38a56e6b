#pragma once

// Grid, label, and edge-graph types shared by every module, plus the
// construction of metric graphs from per-pixel embedding vectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace metricseg {

// Raised when two inputs disagree in shape or a shape is itself invalid.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for numerically invalid input (NaN/Inf, empty sums, bad parameters).
class ValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Pixel {
  int y = 0;
  int x = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Dense H x W grid of D-dimensional vectors. Components of a pixel are
// contiguous; pixels are row-major.
class VectorField {
 public:
  VectorField() = default;
  VectorField(int height, int width, int dim, double fill = 0.0)
      : height_(height), width_(width), dim_(dim) {
    if (height <= 0 || width <= 0 || dim <= 0) {
      throw ShapeError("VectorField dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(height) * width * dim, fill);
  }
  VectorField(int height, int width, int dim, std::vector<double> data)
      : height_(height), width_(width), dim_(dim), data_(std::move(data)) {
    if (height <= 0 || width <= 0 || dim <= 0) {
      throw ShapeError("VectorField dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(height) * width * dim) {
      throw ShapeError("VectorField data length must equal H*W*D");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int dim() const { return dim_; }
  std::size_t num_pixels() const { return static_cast<std::size_t>(height_) * width_; }

  std::span<double> at(int y, int x) {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> at(int y, int x) const {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(dim_)};
  }
  std::span<double> at(std::size_t pixel) {
    return {data_.data() + pixel * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> at(std::size_t pixel) const {
    return {data_.data() + pixel * dim_, static_cast<std::size_t>(dim_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const VectorField& other) const {
    return height_ == other.height_ && width_ == other.width_ && dim_ == other.dim_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  std::size_t offset(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * dim_;
  }

  int height_ = 0;
  int width_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

// Dense H x W grid of object ids. 0 is background.
class LabelMap {
 public:
  using Label = std::uint32_t;

  LabelMap() = default;
  LabelMap(int height, int width, Label fill = 0) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw ShapeError("LabelMap dimensions must be positive");
    labels_.assign(static_cast<std::size_t>(height) * width, fill);
  }
  LabelMap(int height, int width, std::vector<Label> labels)
      : height_(height), width_(width), labels_(std::move(labels)) {
    if (height <= 0 || width <= 0) throw ShapeError("LabelMap dimensions must be positive");
    if (labels_.size() != static_cast<std::size_t>(height) * width) {
      throw ShapeError("LabelMap data length must equal H*W");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  Label& operator()(int y, int x) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  Label operator()(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  Label& operator[](std::size_t i) { return labels_[i]; }
  Label operator[](std::size_t i) const { return labels_[i]; }

  std::span<Label> data() { return labels_; }
  std::span<const Label> data() const { return labels_; }

  bool same_shape(const LabelMap& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename Grid>
  bool same_grid(const Grid& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  Label max_label() const {
    return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
  }

  // Sorted distinct positive labels.
  std::vector<Label> objects() const {
    std::vector<Label> out;
    for (Label l : labels_) {
      if (l != 0) out.push_back(l);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Label> labels_;
};

struct EdgeOffset {
  int dy = 0;
  int dx = 0;

  // Each undirected edge is stored once, under the lexicographically
  // positive orientation.
  constexpr bool canonical() const { return dy > 0 || (dy == 0 && dx > 0); }
  constexpr bool nearest_neighbor() const { return std::max(std::abs(dy), std::abs(dx)) == 1; }

  friend constexpr bool operator==(const EdgeOffset&, const EdgeOffset&) = default;
};

inline std::vector<EdgeOffset> nearest_neighbor_offsets(int connectivity = 4) {
  if (connectivity == 4) return {{0, 1}, {1, 0}};
  if (connectivity == 8) return {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  throw ValueError("connectivity must be 4 or 8");
}

struct DistanceTag {};
struct AffinityTag {};

// Edge weights on a pixel grid: one dense H x W plane per offset. Plane o at
// (y, x) holds the weight of the edge between (y, x) and (y + dy, x + dx);
// the mask marks which entries are real edges.
template <typename Kind>
class EdgeGraph {
 public:
  EdgeGraph() = default;
  EdgeGraph(int height, int width, std::vector<EdgeOffset> offsets)
      : height_(height), width_(width), offsets_(std::move(offsets)) {
    if (height <= 0 || width <= 0) throw ShapeError("graph dimensions must be positive");
    if (offsets_.empty()) throw ValueError("graph needs at least one offset");
    for (const auto& o : offsets_) {
      if (!o.canonical()) {
        throw ValueError("offset (" + std::to_string(o.dy) + "," + std::to_string(o.dx) +
                         ") is not in canonical orientation");
      }
      if (std::abs(o.dy) >= height || std::abs(o.dx) >= width) {
        throw ValueError("offset (" + std::to_string(o.dy) + "," + std::to_string(o.dx) +
                         ") does not fit in the grid");
      }
    }
    const std::size_t n = offsets_.size() * plane_size();
    weights_.assign(n, 0.0);
    mask_.assign(n, 0);
    for (std::size_t o = 0; o < offsets_.size(); ++o) {
      for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
          mask_[index(o, y, x)] = in_bounds(o, y, x) ? 1 : 0;
        }
      }
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t num_offsets() const { return offsets_.size(); }
  const std::vector<EdgeOffset>& offsets() const { return offsets_; }

  std::size_t index(std::size_t o, int y, int x) const {
    return o * plane_size() + static_cast<std::size_t>(y) * width_ + x;
  }

  bool in_bounds(std::size_t o, int y, int x) const {
    const int ty = y + offsets_[o].dy;
    const int tx = x + offsets_[o].dx;
    return ty >= 0 && ty < height_ && tx >= 0 && tx < width_;
  }

  double weight(std::size_t o, int y, int x) const { return weights_[index(o, y, x)]; }
  void set_weight(std::size_t o, int y, int x, double w) { weights_[index(o, y, x)] = w; }
  bool valid(std::size_t o, int y, int x) const { return mask_[index(o, y, x)] != 0; }

  // Marks an in-bounds edge as unsampled or sampled; out-of-bounds edges stay invalid.
  void set_valid(std::size_t o, int y, int x, bool v) {
    mask_[index(o, y, x)] = (v && in_bounds(o, y, x)) ? 1 : 0;
  }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  std::size_t num_valid() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
  }

  // Index of an offset, or num_offsets() when absent.
  std::size_t find(EdgeOffset off) const {
    auto it = std::find(offsets_.begin(), offsets_.end(), off);
    return static_cast<std::size_t>(it - offsets_.begin());
  }

  friend bool operator==(const EdgeGraph&, const EdgeGraph&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<EdgeOffset> offsets_;
  std::vector<double> weights_;
  std::vector<std::uint8_t> mask_;
};

using MetricGraph = EdgeGraph<DistanceTag>;
using AffinityGraph = EdgeGraph<AffinityTag>;

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

inline MetricGraph build_metric_graph(const VectorField& field, const std::vector<EdgeOffset>& offsets) {
  if (offsets.empty()) throw ValueError("build_metric_graph: empty offset list");
  MetricGraph graph(field.height(), field.width(), offsets);
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    const auto off = offsets[o];
    for (int y = 0; y < field.height(); ++y) {
      for (int x = 0; x < field.width(); ++x) {
        if (!graph.valid(o, y, x)) continue;
        graph.set_weight(o, y, x, l1_distance(field.at(y, x), field.at(y + off.dy, x + off.dx)));
      }
    }
  }
  return graph;
}

inline AffinityGraph metric_to_affinity(const MetricGraph& metric) {
  AffinityGraph out(metric.height(), metric.width(), metric.offsets());
  for (std::size_t o = 0; o < metric.num_offsets(); ++o) {
    for (int y = 0; y < metric.height(); ++y) {
      for (int x = 0; x < metric.width(); ++x) {
        const bool v = metric.valid(o, y, x);
        out.set_valid(o, y, x, v);
        if (!v) continue;
        const double d = metric.weight(o, y, x);
        if (!(d >= 0.0) || !std::isfinite(d)) {
          throw ValueError("metric graph holds a negative or non-finite distance");
        }
        out.set_weight(o, y, x, std::exp(-d));
      }
    }
  }
  return out;
}

// Disjoint sets with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Relabels union-find roots to 1..K in first-touch raster order. Pixels for
// which `keep` is false become 0.
template <typename Keep>
LabelMap labels_from_sets(UnionFind& sets, int height, int width, Keep keep) {
  LabelMap out(height, width);
  const std::size_t n = out.size();
  std::vector<LabelMap::Label> root_label(n, 0);
  LabelMap::Label next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep(i)) continue;
    const std::size_t r = sets.find(i);
    if (root_label[r] == 0) root_label[r] = ++next;
    out[i] = root_label[r];
  }
  return out;
}

struct SplitLabels {
  LabelMap labels;
  // to_original[new_label] is the label the component came from; index 0 maps to 0.
  std::vector<LabelMap::Label> to_original;
};

// Splits every positive label into its connected components.
inline SplitLabels relabel_connected(const LabelMap& labels, int connectivity = 4) {
  const auto offsets = nearest_neighbor_offsets(connectivity);
  const int h = labels.height();
  const int w = labels.width();
  UnionFind sets(labels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto l = labels(y, x);
      if (l == 0) continue;
      for (const auto& o : offsets) {
        const int ty = y + o.dy;
        const int tx = x + o.dx;
        if (ty < 0 || ty >= h || tx < 0 || tx >= w) continue;
        if (labels(ty, tx) == l) {
          sets.unite(static_cast<std::size_t>(y) * w + x, static_cast<std::size_t>(ty) * w + tx);
        }
      }
    }
  }
  SplitLabels out{labels_from_sets(sets, h, w, [&](std::size_t i) { return labels[i] != 0; }), {0}};
  out.to_original.resize(out.labels.max_label() + 1, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.to_original[out.labels[i]] = labels[i];
  }
  return out;
}

}  // namespace metricseg
