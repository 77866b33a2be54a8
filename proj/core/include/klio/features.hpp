#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "klio/grid.hpp"

namespace klio {

// One feature h_i : X -> R from a small set of named families.
struct Feature {
  enum class Family {
    kQuadraticToPoint,  // (x - o)^T (x - o)
    kGaussianBump,      // normalized Gaussian density at x, center o, cov S
    kAbsDeviation,      // |x_axis - target|
    kCosineGap,         // (cos x_axis - cos target)^2
    kExpGap,            // 1 - exp(-gap^2), gap on an axis (plain or cosine)
  };

  Family family = Family::kQuadraticToPoint;
  Eigen::VectorXd point;     // o
  Eigen::MatrixXd cov;       // Gaussian bump covariance
  int axis = 0;
  double target = 0.0;
  bool cosine = false;       // ExpGap flavor

  double evaluate(const Eigen::VectorXd& x) const;
};

Feature quadratic_to_point(Eigen::VectorXd point);
Feature gaussian_bump(Eigen::VectorXd point, Eigen::MatrixXd cov);
Feature abs_deviation(int axis, double target);
Feature cosine_gap(int axis, double target);
Feature exp_gap(int axis, double target, bool cosine);

class FeatureBasis {
 public:
  FeatureBasis() = default;
  explicit FeatureBasis(std::vector<Feature> features);

  int size() const { return static_cast<int>(features_.size()); }
  const Feature& feature(int i) const { return features_[static_cast<size_t>(i)]; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

  // S x F table of feature values at the cell centers.
  Eigen::MatrixXd evaluate_on_grid(const GridSpace& grid) const;

 private:
  std::vector<Feature> features_;
};

// JSON basis files: {"features": [{"family": ..., ...}, ...]}.
void save_feature_basis(const FeatureBasis& basis, const std::filesystem::path& p);
FeatureBasis load_feature_basis(const std::filesystem::path& p);

}  // namespace klio
