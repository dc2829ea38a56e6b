#pragma once

// PCA of a vector field and rendering of the top three components as RGB.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "metricseg/core.hpp"

namespace metricseg {

struct PcaModel {
  std::vector<double> mean;               // D
  std::vector<std::vector<double>> axes;  // up to 3 orthonormal rows of length D
  std::vector<double> eigenvalues;        // non-increasing, one per axis
  bool padded = false;                    // fewer than 3 axes (D < 3)

  int dim() const { return static_cast<int>(mean.size()); }
};

// Sample covariance (N - 1 denominator) of all pixel vectors; the top
// min(3, D) eigenpairs. Each axis is flipped so its largest-magnitude
// coordinate is positive (first such coordinate on ties).
inline PcaModel fit_pca(const VectorField& field) {
  const auto n = field.num_pixels();
  const int d = field.dim();
  if (n < 3) throw ShapeError("fit_pca: need at least 3 pixels");

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      field.data().data(), static_cast<Eigen::Index>(n), d);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  const int k = std::min(3, d);
  model.padded = k < 3;
  for (int j = 0; j < k; ++j) {
    const Eigen::Index col = d - 1 - j;  // eigenvalues come back ascending
    Eigen::VectorXd axis = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    model.axes.emplace_back(axis.data(), axis.data() + d);
    model.eigenvalues.push_back(std::max(0.0, solver.eigenvalues()(col)));
  }
  return model;
}

// Coordinates of every pixel along the model axes; missing axes give 0.
inline VectorField project_pca(const VectorField& field, const PcaModel& model) {
  if (field.dim() != model.dim()) throw ShapeError("project_pca: model was fitted on another dimension");
  VectorField out(field.height(), field.width(), 3);
  for (std::size_t i = 0; i < field.num_pixels(); ++i) {
    const auto v = field.at(i);
    auto p = out.at(i);
    for (std::size_t a = 0; a < model.axes.size(); ++a) {
      double s = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) s += (v[k] - model.mean[k]) * model.axes[a][k];
      p[a] = s;
    }
  }
  return out;
}

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // H x W x 3

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Per-channel affine map of [min, max] over the image onto [0, 255]; a
// constant channel renders as 128.
inline RgbImage render_projected(const VectorField& coords) {
  if (coords.dim() != 3) throw ShapeError("render_projected: expected 3 coordinates per pixel");
  RgbImage img{coords.height(), coords.width(), std::vector<std::uint8_t>(coords.num_pixels() * 3)};
  for (int c = 0; c < 3; ++c) {
    double lo = coords.at(0)[c];
    double hi = lo;
    for (std::size_t i = 0; i < coords.num_pixels(); ++i) {
      lo = std::min(lo, coords.at(i)[c]);
      hi = std::max(hi, coords.at(i)[c]);
    }
    for (std::size_t i = 0; i < coords.num_pixels(); ++i) {
      const double v = hi > lo ? std::round(255.0 * (coords.at(i)[c] - lo) / (hi - lo)) : 128.0;
      img.pixels[i * 3 + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

inline RgbImage render_rgb(const VectorField& field, const PcaModel& model) {
  return render_projected(project_pca(field, model));
}

}  // namespace metricseg
