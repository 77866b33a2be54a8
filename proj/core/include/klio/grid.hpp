#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace klio {

// One coordinate of a uniform rectangular grid. `wrap` selects periodic
// indexing (used for angles); otherwise out-of-range points clamp to the
// boundary bins.
struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;
  bool wrap = false;
};

// Discretized box in K^n: per-axis uniform bins, row-major flat indexing
// (first axis slowest). Immutable after construction and shared by value
// semantics through GridPtr.
class GridSpace {
 public:
  explicit GridSpace(std::vector<AxisSpec> axes);

  int ndim() const { return static_cast<int>(axes_.size()); }
  std::int64_t size() const { return size_; }
  const AxisSpec& axis(int d) const { return axes_[static_cast<size_t>(d)]; }
  double bin_width(int d) const;

  std::int64_t flat_index(std::span<const int> multi) const;
  std::vector<int> multi_index(std::int64_t flat) const;

  // Center of the cell along one axis / full center point.
  double center(int d, int bin) const;
  Eigen::VectorXd center(std::int64_t flat) const;

  // Cell containing a continuous point; wrap axes reduce modulo the period,
  // clamp axes saturate at the boundary bins.
  std::int64_t locate(const Eigen::VectorXd& point) const;
  int locate_axis(int d, double value) const;

  bool same_geometry(const GridSpace& other) const;

 private:
  std::vector<AxisSpec> axes_;
  std::vector<std::int64_t> strides_;
  std::int64_t size_ = 1;
};

using GridPtr = std::shared_ptr<const GridSpace>;

GridPtr make_grid(std::vector<AxisSpec> axes);

// Grid over the concatenated coordinates of `a` and `b` (used for joint
// distributions over tuples).
GridPtr product_grid(const GridPtr& a, const GridPtr& b);

}  // namespace klio
