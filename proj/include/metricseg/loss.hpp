#pragma once

// Discriminative embedding loss: an intra-object pull toward the object mean,
// a hinged inter-object push between means, and a small pull of every mean
// toward the origin. All norms are L1; the pull and push terms square them.
//
//   L_int  = 1/C * sum_c 1/N_c * sum_{i in c} |mu_c - v_i|_1^2
//   L_ext  = 1/(C(C-1)) * sum_{a != b, included} max(2 delta_d - |mu_a - mu_b|_1, 0)^2
//   L_norm = 1/C * sum_c |mu_c|_1
//   L      = L_int + L_ext + gamma * L_norm
//
// Background pixels (label 0) take no part in any term.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "metricseg/core.hpp"

namespace metricseg {

struct LossParams {
  double delta_d = 1.5;
  double gamma = 0.001;
  int dim = 32;

  void validate() const {
    if (!(delta_d > 0.0)) throw ValueError("delta_d must be positive");
    if (!(gamma >= 0.0)) throw ValueError("gamma must be non-negative");
    if (dim < 1) throw ValueError("embedding dim must be positive");
  }
};

// Which ordered object pairs enter L_ext. Rows and columns follow `labels`
// (sorted positive labels of the map the mask was built for).
class ExtMask {
 public:
  ExtMask() = default;
  explicit ExtMask(std::vector<LabelMap::Label> labels)
      : labels_(std::move(labels)), included_(labels_.size() * labels_.size(), 1) {
    for (std::size_t i = 0; i < labels_.size(); ++i) included_[i * labels_.size() + i] = 0;
  }

  static ExtMask all_pairs(const LabelMap& map) { return ExtMask(map.objects()); }

  const std::vector<LabelMap::Label>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  bool included(std::size_t a, std::size_t b) const { return included_[a * labels_.size() + b] != 0; }

  void exclude(std::size_t a, std::size_t b) {
    if (a == b) return;
    included_[a * labels_.size() + b] = 0;
    included_[b * labels_.size() + a] = 0;
  }

  friend bool operator==(const ExtMask&, const ExtMask&) = default;

 private:
  std::vector<LabelMap::Label> labels_;
  std::vector<unsigned char> included_;
};

// Pairs of split labels that came from the same original label are excluded.
inline ExtMask build_ext_mask(const LabelMap& original, const LabelMap& split,
                              const std::vector<LabelMap::Label>& to_original) {
  if (!original.same_shape(split)) throw ShapeError("build_ext_mask: label maps differ in shape");
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto s = split[i];
    if (s >= to_original.size() || to_original[s] != original[i] || ((s == 0) != (original[i] == 0))) {
      throw ValueError("build_ext_mask: mapping is inconsistent with the label maps");
    }
  }
  ExtMask mask = ExtMask::all_pairs(split);
  const auto& labels = mask.labels();
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t b = a + 1; b < labels.size(); ++b) {
      if (to_original[labels[a]] == to_original[labels[b]]) mask.exclude(a, b);
    }
  }
  return mask;
}

struct LossReport {
  double l_int = 0.0;
  double l_ext = 0.0;
  double l_norm = 0.0;
  double total = 0.0;
  std::size_t num_objects = 0;
  std::vector<LabelMap::Label> object_labels;
  std::vector<std::size_t> counts;
  std::vector<std::vector<double>> means;
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct ObjectStats {
  std::vector<LabelMap::Label> labels;
  std::vector<int> object_of;  // per pixel; -1 for background
  std::vector<std::size_t> counts;
  std::vector<double> means;  // C x D
  std::size_t dim = 0;

  std::span<const double> mean(std::size_t c) const { return {means.data() + c * dim, dim}; }
};

inline ObjectStats object_stats(const VectorField& field, const LabelMap& labels) {
  if (!labels.same_grid(field)) throw ShapeError("field and labels differ in height/width");
  ObjectStats st;
  st.labels = labels.objects();
  if (st.labels.empty()) throw ValueError("label map has no objects");
  st.dim = static_cast<std::size_t>(field.dim());
  const std::size_t c_count = st.labels.size();
  st.object_of.assign(labels.size(), -1);
  st.counts.assign(c_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    auto it = std::lower_bound(st.labels.begin(), st.labels.end(), labels[i]);
    const auto c = static_cast<std::size_t>(it - st.labels.begin());
    st.object_of[i] = static_cast<int>(c);
    ++st.counts[c];
  }
  // Kahan-compensated sums per coordinate.
  std::vector<double> sum(c_count * st.dim, 0.0);
  std::vector<double> comp(c_count * st.dim, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (st.object_of[i] < 0) continue;
    const auto c = static_cast<std::size_t>(st.object_of[i]);
    const auto v = field.at(i);
    for (std::size_t k = 0; k < st.dim; ++k) {
      const std::size_t j = c * st.dim + k;
      const double y = v[k] - comp[j];
      const double t = sum[j] + y;
      comp[j] = (t - sum[j]) - y;
      sum[j] = t;
    }
  }
  st.means.resize(c_count * st.dim);
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t k = 0; k < st.dim; ++k) {
      st.means[c * st.dim + k] = sum[c * st.dim + k] / static_cast<double>(st.counts[c]);
    }
  }
  return st;
}

inline const ExtMask& checked_mask(const ExtMask& mask, const ObjectStats& st) {
  if (mask.labels() != st.labels) {
    throw ValueError("ext mask was built for a different set of object labels");
  }
  return mask;
}

struct LossTerms {
  ObjectStats stats;
  std::vector<double> spread;  // per pixel |mu_c - v_i|_1, 0 on background
  double l_int = 0.0;
  double l_ext = 0.0;
  double l_norm = 0.0;
};

inline LossTerms evaluate_terms(const VectorField& field, const LabelMap& labels, const LossParams& params,
                                const ExtMask* mask) {
  params.validate();
  LossTerms t{object_stats(field, labels), {}, 0.0, 0.0, 0.0};
  const auto& st = t.stats;
  if (mask) checked_mask(*mask, st);
  const std::size_t c_count = st.labels.size();
  const double inv_c = 1.0 / static_cast<double>(c_count);

  t.spread.assign(labels.size(), 0.0);
  std::vector<double> per_object(c_count, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (st.object_of[i] < 0) continue;
    const auto c = static_cast<std::size_t>(st.object_of[i]);
    const double s = l1_distance(st.mean(c), field.at(i));
    t.spread[i] = s;
    per_object[c] += s * s;
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    t.l_int += per_object[c] / static_cast<double>(st.counts[c]);
    for (double m : st.mean(c)) t.l_norm += std::abs(m);
  }
  t.l_int *= inv_c;
  t.l_norm *= inv_c;

  if (c_count > 1) {
    const double margin = 2.0 * params.delta_d;
    for (std::size_t a = 0; a < c_count; ++a) {
      for (std::size_t b = 0; b < c_count; ++b) {
        if (a == b || (mask && !mask->included(a, b))) continue;
        const double hinge = std::max(margin - l1_distance(st.mean(a), st.mean(b)), 0.0);
        t.l_ext += hinge * hinge;
      }
    }
    t.l_ext /= static_cast<double>(c_count * (c_count - 1));
  }
  return t;
}

inline LossReport make_report(const LossTerms& t, const LossParams& params) {
  LossReport r;
  r.l_int = t.l_int;
  r.l_ext = t.l_ext;
  r.l_norm = t.l_norm;
  r.total = t.l_int + t.l_ext + params.gamma * t.l_norm;
  r.num_objects = t.stats.labels.size();
  r.object_labels = t.stats.labels;
  r.counts = t.stats.counts;
  for (std::size_t c = 0; c < r.num_objects; ++c) {
    const auto m = t.stats.mean(c);
    r.means.emplace_back(m.begin(), m.end());
  }
  return r;
}

inline VectorField gradient_from_terms(const VectorField& field, const LossTerms& t, const LossParams& params,
                                       const ExtMask* mask) {
  const auto& st = t.stats;
  const std::size_t c_count = st.labels.size();
  const std::size_t dim = st.dim;
  const double inv_c = 1.0 / static_cast<double>(c_count);

  // dL/dmu with the means treated as free variables.
  std::vector<double> g_mean(c_count * dim, 0.0);
  for (std::size_t i = 0; i < st.object_of.size(); ++i) {
    if (st.object_of[i] < 0) continue;
    const auto c = static_cast<std::size_t>(st.object_of[i]);
    const double scale = 2.0 * t.spread[i] * inv_c / static_cast<double>(st.counts[c]);
    const auto v = field.at(i);
    const auto mu = st.mean(c);
    for (std::size_t k = 0; k < dim; ++k) g_mean[c * dim + k] += scale * sign(mu[k] - v[k]);
  }
  if (c_count > 1) {
    const double margin = 2.0 * params.delta_d;
    const double norm = 1.0 / static_cast<double>(c_count * (c_count - 1));
    for (std::size_t a = 0; a < c_count; ++a) {
      for (std::size_t b = 0; b < c_count; ++b) {
        if (a == b || (mask && !mask->included(a, b))) continue;
        const auto ma = st.mean(a);
        const auto mb = st.mean(b);
        const double hinge = margin - l1_distance(ma, mb);
        if (hinge <= 0.0) continue;
        for (std::size_t k = 0; k < dim; ++k) {
          const double s = 2.0 * hinge * norm * sign(ma[k] - mb[k]);
          g_mean[a * dim + k] -= s;
          g_mean[b * dim + k] += s;
        }
      }
    }
  }
  if (params.gamma > 0.0) {
    for (std::size_t c = 0; c < c_count; ++c) {
      for (std::size_t k = 0; k < dim; ++k) {
        g_mean[c * dim + k] += params.gamma * inv_c * sign(st.means[c * dim + k]);
      }
    }
  }

  // Each pixel enters its mean with weight 1/N_c.
  VectorField grad(field.height(), field.width(), field.dim());
  for (std::size_t i = 0; i < st.object_of.size(); ++i) {
    if (st.object_of[i] < 0) continue;
    const auto c = static_cast<std::size_t>(st.object_of[i]);
    const double inv_n = 1.0 / static_cast<double>(st.counts[c]);
    const double direct = 2.0 * t.spread[i] * inv_c * inv_n;
    const auto v = field.at(i);
    const auto mu = st.mean(c);
    auto g = grad.at(i);
    for (std::size_t k = 0; k < dim; ++k) {
      g[k] = -direct * sign(mu[k] - v[k]) + g_mean[c * dim + k] * inv_n;
    }
  }
  return grad;
}

}  // namespace detail

inline LossReport compute_loss(const VectorField& field, const LabelMap& labels, const LossParams& params = {}) {
  return detail::make_report(detail::evaluate_terms(field, labels, params, nullptr), params);
}

inline LossReport compute_loss(const VectorField& field, const LabelMap& labels, const LossParams& params,
                               const ExtMask& mask) {
  return detail::make_report(detail::evaluate_terms(field, labels, params, &mask), params);
}

inline VectorField compute_loss_gradient(const VectorField& field, const LabelMap& labels,
                                         const LossParams& params = {}) {
  return detail::gradient_from_terms(field, detail::evaluate_terms(field, labels, params, nullptr), params,
                                     nullptr);
}

inline VectorField compute_loss_gradient(const VectorField& field, const LabelMap& labels, const LossParams& params,
                                         const ExtMask& mask) {
  return detail::gradient_from_terms(field, detail::evaluate_terms(field, labels, params, &mask), params, &mask);
}

// Loss and gradient from one pass over the data.
struct LossAndGradient {
  LossReport report;
  VectorField gradient;
};

inline LossAndGradient compute_loss_and_gradient(const VectorField& field, const LabelMap& labels,
                                                 const LossParams& params, const ExtMask& mask) {
  const auto terms = detail::evaluate_terms(field, labels, params, &mask);
  return {detail::make_report(terms, params), detail::gradient_from_terms(field, terms, params, &mask)};
}

}  // namespace metricseg
