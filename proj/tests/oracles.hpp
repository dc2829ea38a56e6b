#pragma once

// Independent re-implementations used as oracles by the unit and acceptance
// suites: straight-line loss formulas, finite-difference gradients, all-pairs
// Rand counting, and entropy-based VI.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "metricseg/core.hpp"

namespace metricseg::oracle {

struct NaiveLoss {
  double l_int = 0.0;
  double l_ext = 0.0;
  double l_norm = 0.0;
  double total = 0.0;
};

// `excluded` holds unordered label pairs (a < b) left out of the push term.
inline NaiveLoss naive_loss(const VectorField& f, const LabelMap& labels, double delta_d, double gamma,
                            const std::set<std::pair<LabelMap::Label, LabelMap::Label>>& excluded = {}) {
  std::map<LabelMap::Label, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) members[labels[i]].push_back(i);
  }
  const int d = f.dim();
  std::map<LabelMap::Label, std::vector<double>> mu;
  for (const auto& [l, px] : members) {
    std::vector<double> m(d, 0.0);
    for (auto i : px) {
      for (int k = 0; k < d; ++k) m[k] += f.at(i)[k];
    }
    for (auto& v : m) v /= static_cast<double>(px.size());
    mu[l] = m;
  }
  const double c = static_cast<double>(members.size());
  NaiveLoss out;
  for (const auto& [l, px] : members) {
    double acc = 0.0;
    for (auto i : px) {
      double n1 = 0.0;
      for (int k = 0; k < d; ++k) n1 += std::fabs(mu[l][k] - f.at(i)[k]);
      acc += n1 * n1;
    }
    out.l_int += acc / static_cast<double>(px.size()) / c;
    double norm = 0.0;
    for (int k = 0; k < d; ++k) norm += std::fabs(mu[l][k]);
    out.l_norm += norm / c;
  }
  if (members.size() > 1) {
    for (const auto& [a, ma] : mu) {
      for (const auto& [b, mb] : mu) {
        if (a == b || excluded.count({std::min(a, b), std::max(a, b)})) continue;
        double dist = 0.0;
        for (int k = 0; k < d; ++k) dist += std::fabs(ma[k] - mb[k]);
        const double h = std::max(2.0 * delta_d - dist, 0.0);
        out.l_ext += h * h / (c * (c - 1.0));
      }
    }
  }
  out.total = out.l_int + out.l_ext + gamma * out.l_norm;
  return out;
}

// Distance from the loss's kinks when coordinate k of pixel `p` moves: the
// smallest |mu_c - v_i| coordinate over the object's pixels, |mu_c,k| on the
// norm term, and the hinge deficit / coordinate ties against other means.
inline double kink_distance(const VectorField& f, const LabelMap& labels, std::size_t p, int k, double delta_d) {
  const auto lp = labels[p];
  if (lp == 0) return INFINITY;
  std::map<LabelMap::Label, std::vector<double>> mu;
  std::map<LabelMap::Label, double> n;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    auto& m = mu[labels[i]];
    m.resize(f.dim(), 0.0);
    for (int j = 0; j < f.dim(); ++j) m[j] += f.at(i)[j];
    n[labels[i]] += 1.0;
  }
  for (auto& [l, m] : mu) {
    for (auto& v : m) v /= n[l];
  }
  double best = std::fabs(mu[lp][k]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != lp) continue;
    best = std::min(best, std::fabs(mu[lp][k] - f.at(i)[k]));
  }
  for (const auto& [l, m] : mu) {
    if (l == lp) continue;
    double dist = 0.0;
    for (int j = 0; j < f.dim(); ++j) dist += std::fabs(mu[lp][j] - m[j]);
    best = std::min(best, std::fabs(2.0 * delta_d - dist));
    best = std::min(best, std::fabs(mu[lp][k] - m[k]));
  }
  return best;
}

// Ordered pairs of pixels, identical pixels included, counted directly.
struct PairRand {
  double merge = 0.0;
  double split = 0.0;
  double f = 0.0;
};

inline PairRand all_pairs_rand(const std::vector<LabelMap::Label>& pred, const std::vector<LabelMap::Label>& gt) {
  double both = 0.0, same_pred = 0.0, same_gt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const bool p = pred[i] == pred[j];
      const bool g = gt[i] == gt[j];
      both += (p && g) ? 1.0 : 0.0;
      same_pred += p ? 1.0 : 0.0;
      same_gt += g ? 1.0 : 0.0;
    }
  }
  PairRand r;
  r.merge = both / same_pred;
  r.split = both / same_gt;
  r.f = 2.0 * r.merge * r.split / (r.merge + r.split);
  return r;
}

// VI = 2 H(joint) - H(pred) - H(gt), from marginal and joint entropies.
inline double entropy_vi(const std::vector<LabelMap::Label>& pred, const std::vector<LabelMap::Label>& gt) {
  std::map<std::pair<LabelMap::Label, LabelMap::Label>, double> joint;
  std::map<LabelMap::Label, double> pa, pb;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    joint[{pred[i], gt[i]}] += 1.0 / n;
    pa[pred[i]] += 1.0 / n;
    pb[gt[i]] += 1.0 / n;
  }
  auto h = [](const auto& dist) {
    double s = 0.0;
    for (const auto& [k, p] : dist) s -= p * std::log(p);
    return s;
  };
  return 2.0 * h(joint) - h(pa) - h(pb);
}

}  // namespace metricseg::oracle
