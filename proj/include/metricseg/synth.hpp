#pragma once

// Synthetic ground truth: Voronoi label maps, and low-frequency drift added to
// an object's embeddings.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "metricseg/core.hpp"
#include "metricseg/rng.hpp"

namespace metricseg {

// Labels each pixel with 1 + the index of its nearest site (squared
// Euclidean, exact in integers); ties go to the lower index.
inline LabelMap voronoi_from_sites(int height, int width, const std::vector<Pixel>& sites) {
  if (height <= 0 || width <= 0) throw ShapeError("voronoi: dimensions must be positive");
  if (sites.empty()) throw ValueError("voronoi: need at least one site");
  LabelMap out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::int64_t best = -1;
      std::size_t best_site = 0;
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const std::int64_t dy = y - sites[s].y;
        const std::int64_t dx = x - sites[s].x;
        const std::int64_t d = dy * dy + dx * dx;
        if (best < 0 || d < best) {
          best = d;
          best_site = s;
        }
      }
      out(y, x) = static_cast<LabelMap::Label>(best_site + 1);
    }
  }
  return out;
}

// Draws `num_objects` distinct sites uniformly over the grid.
inline std::vector<Pixel> random_sites(int height, int width, int num_objects, std::uint64_t seed) {
  const auto area = static_cast<std::int64_t>(height) * width;
  if (height <= 0 || width <= 0) throw ShapeError("voronoi: dimensions must be positive");
  if (num_objects < 1 || num_objects > area) throw ValueError("voronoi: num_objects must be in [1, H*W]");
  CounterRng rng(seed);
  std::vector<unsigned char> taken(static_cast<std::size_t>(area), 0);
  std::vector<Pixel> sites;
  sites.reserve(static_cast<std::size_t>(num_objects));
  while (static_cast<int>(sites.size()) < num_objects) {
    const auto p = rng.below(static_cast<std::uint64_t>(area));
    if (taken[p]) continue;
    taken[p] = 1;
    sites.push_back({static_cast<int>(p / width), static_cast<int>(p % width)});
  }
  return sites;
}

inline LabelMap voronoi_labels(int height, int width, int num_objects, std::uint64_t seed) {
  return voronoi_from_sites(height, width, random_sites(height, width, num_objects, seed));
}

struct DriftParams {
  double amplitude = 3.0;
  double wavelength = 64.0;  // pixels, along the x axis
  double phase = 0.0;        // radians
};

// Adds amplitude * sin(2 pi x / wavelength + phase) to every component of the
// vectors of `target_label`; other pixels are untouched.
inline VectorField inject_drift(const VectorField& field, const LabelMap& labels, LabelMap::Label target_label,
                                const DriftParams& drift) {
  if (!labels.same_grid(field)) throw ShapeError("inject_drift: field and labels differ in height/width");
  if (!(drift.wavelength > 0.0)) throw ValueError("inject_drift: wavelength must be positive");
  if (target_label == 0) throw ValueError("inject_drift: target must be an object label");
  VectorField out = field;
  bool found = false;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      if (labels(y, x) != target_label) continue;
      found = true;
      const double shift =
          drift.amplitude * std::sin(2.0 * std::numbers::pi * x / drift.wavelength + drift.phase);
      for (double& v : out.at(y, x)) v += shift;
    }
  }
  if (!found) throw ValueError("inject_drift: target label not present");
  return out;
}

}  // namespace metricseg
