#pragma once

// Rand F-score and Variation of Information over a pred/gt contingency table,
// each split into merge and split parts.
//
//   rand_merge = sum n_ij^2 / sum s_i^2   (s: predicted segment sizes)
//   rand_split = sum n_ij^2 / sum t_j^2   (t: gt segment sizes)
//   vi_split   = H(pred | gt),  vi_merge = H(gt | pred)   (nats)

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "metricseg/core.hpp"

namespace metricseg {

// Boolean plane; true marks a pixel left out of evaluation.
struct ExclusionMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> excluded;

  std::size_t count() const {
    std::size_t n = 0;
    for (auto e : excluded) n += e;
    return n;
  }
};

inline ExclusionMask no_exclusion(const LabelMap& like) {
  return {like.height(), like.width(), std::vector<std::uint8_t>(like.size(), 0)};
}

// Excludes gt background and every pixel with a differently labeled pixel
// within Chebyshev distance `radius`.
inline ExclusionMask boundary_exclusion_mask(const LabelMap& gt, int radius = 2) {
  if (radius < 0) throw ValueError("boundary radius must be non-negative");
  const int h = gt.height();
  const int w = gt.width();
  ExclusionMask mask{h, w, std::vector<std::uint8_t>(gt.size(), 0)};
  // A pixel differs from its window iff the window's min or max label differs
  // from it; separable running min/max over rows, then columns.
  std::vector<LabelMap::Label> row_min(gt.size()), row_max(gt.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto lo = gt(y, x);
      auto hi = lo;
      for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
        lo = std::min(lo, gt(y, xx));
        hi = std::max(hi, gt(y, xx));
      }
      row_min[static_cast<std::size_t>(y) * w + x] = lo;
      row_max[static_cast<std::size_t>(y) * w + x] = hi;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const auto l = gt[i];
      bool differs = (l == 0);
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius) && !differs; ++yy) {
        const std::size_t j = static_cast<std::size_t>(yy) * w + x;
        differs = row_min[j] != l || row_max[j] != l;
      }
      mask.excluded[i] = differs ? 1 : 0;
    }
  }
  return mask;
}

struct ContingencyTable {
  // (pred, gt) -> count, ordered for a deterministic summation order.
  std::map<std::pair<LabelMap::Label, LabelMap::Label>, std::size_t> counts;
  std::map<LabelMap::Label, std::size_t> pred_sizes;
  std::map<LabelMap::Label, std::size_t> gt_sizes;
  std::size_t total = 0;
};

inline ContingencyTable contingency(const LabelMap& pred, const LabelMap& gt, const ExclusionMask& mask) {
  if (!pred.same_shape(gt)) throw ShapeError("evaluate: pred and gt differ in shape");
  if (mask.height != gt.height() || mask.width != gt.width() || mask.excluded.size() != gt.size()) {
    throw ShapeError("evaluate: mask shape differs from gt");
  }
  ContingencyTable t;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask.excluded[i]) continue;
    ++t.counts[{pred[i], gt[i]}];
    ++t.pred_sizes[pred[i]];
    ++t.gt_sizes[gt[i]];
    ++t.total;
  }
  return t;
}

struct EvalReport {
  double rand_f = 0.0;
  double rand_merge = 0.0;
  double rand_split = 0.0;
  double vi_total = 0.0;
  double vi_merge = 0.0;
  double vi_split = 0.0;
  std::size_t evaluated_pixels = 0;
  std::size_t excluded_pixels = 0;
};

inline EvalReport evaluate(const ContingencyTable& t) {
  if (t.total == 0) throw ValueError("evaluate: no pixels left to evaluate");
  const double n = static_cast<double>(t.total);
  double sum_joint_sq = 0.0;
  double h_pred_given_gt = 0.0;
  double h_gt_given_pred = 0.0;
  for (const auto& [key, c] : t.counts) {
    const double nij = static_cast<double>(c);
    sum_joint_sq += nij * nij;
    const double s = static_cast<double>(t.pred_sizes.at(key.first));
    const double g = static_cast<double>(t.gt_sizes.at(key.second));
    // p_ij * log(p_j / p_ij) and p_ij * log(p_i / p_ij); counts are positive.
    h_pred_given_gt += (nij / n) * std::log(g / nij);
    h_gt_given_pred += (nij / n) * std::log(s / nij);
  }
  double sum_pred_sq = 0.0;
  for (const auto& [l, s] : t.pred_sizes) sum_pred_sq += static_cast<double>(s) * static_cast<double>(s);
  double sum_gt_sq = 0.0;
  for (const auto& [l, s] : t.gt_sizes) sum_gt_sq += static_cast<double>(s) * static_cast<double>(s);

  EvalReport r;
  r.rand_merge = sum_joint_sq / sum_pred_sq;
  r.rand_split = sum_joint_sq / sum_gt_sq;
  r.rand_f = 2.0 * r.rand_merge * r.rand_split / (r.rand_merge + r.rand_split);
  r.vi_split = h_pred_given_gt;
  r.vi_merge = h_gt_given_pred;
  r.vi_total = r.vi_split + r.vi_merge;
  r.evaluated_pixels = t.total;
  return r;
}

inline EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, const ExclusionMask& mask) {
  auto r = evaluate(contingency(pred, gt, mask));
  r.excluded_pixels = mask.count();
  return r;
}

}  // namespace metricseg
