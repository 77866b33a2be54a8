#include "klio/grid.hpp"

#include <cmath>

#include "klio/errors.hpp"

namespace klio {

GridSpace::GridSpace(std::vector<AxisSpec> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ValidationError("grid needs at least one axis");
  for (const auto& ax : axes_) {
    if (ax.bins < 1) throw ValidationError("grid axis needs bins >= 1");
    if (!(ax.lo < ax.hi)) throw ValidationError("grid axis needs lo < hi");
  }
  strides_.assign(axes_.size(), 1);
  for (int d = static_cast<int>(axes_.size()) - 2; d >= 0; --d) {
    strides_[static_cast<size_t>(d)] =
        strides_[static_cast<size_t>(d) + 1] * axes_[static_cast<size_t>(d) + 1].bins;
  }
  size_ = strides_[0] * axes_[0].bins;
}

double GridSpace::bin_width(int d) const {
  const auto& ax = axes_[static_cast<size_t>(d)];
  return (ax.hi - ax.lo) / ax.bins;
}

std::int64_t GridSpace::flat_index(std::span<const int> multi) const {
  if (static_cast<int>(multi.size()) != ndim())
    throw ValidationError("multi-index dimension mismatch");
  std::int64_t flat = 0;
  for (int d = 0; d < ndim(); ++d) {
    const int b = multi[static_cast<size_t>(d)];
    if (b < 0 || b >= axes_[static_cast<size_t>(d)].bins)
      throw ValidationError("multi-index out of range");
    flat += strides_[static_cast<size_t>(d)] * b;
  }
  return flat;
}

std::vector<int> GridSpace::multi_index(std::int64_t flat) const {
  if (flat < 0 || flat >= size_) throw ValidationError("flat index out of range");
  std::vector<int> multi(static_cast<size_t>(ndim()));
  for (int d = 0; d < ndim(); ++d) {
    multi[static_cast<size_t>(d)] =
        static_cast<int>(flat / strides_[static_cast<size_t>(d)]);
    flat %= strides_[static_cast<size_t>(d)];
  }
  return multi;
}

double GridSpace::center(int d, int bin) const {
  const auto& ax = axes_[static_cast<size_t>(d)];
  return ax.lo + (bin + 0.5) * bin_width(d);
}

Eigen::VectorXd GridSpace::center(std::int64_t flat) const {
  const auto multi = multi_index(flat);
  Eigen::VectorXd point(ndim());
  for (int d = 0; d < ndim(); ++d) point[d] = center(d, multi[static_cast<size_t>(d)]);
  return point;
}

int GridSpace::locate_axis(int d, double value) const {
  const auto& ax = axes_[static_cast<size_t>(d)];
  double v = value;
  if (ax.wrap) {
    const double period = ax.hi - ax.lo;
    v = std::fmod(v - ax.lo, period);
    if (v < 0) v += period;
    v += ax.lo;
  }
  int bin = static_cast<int>(std::floor((v - ax.lo) / bin_width(d)));
  if (bin < 0) bin = 0;
  if (bin >= ax.bins) bin = ax.bins - 1;
  return bin;
}

std::int64_t GridSpace::locate(const Eigen::VectorXd& point) const {
  if (point.size() != ndim()) throw ValidationError("point dimension mismatch");
  std::int64_t flat = 0;
  for (int d = 0; d < ndim(); ++d)
    flat += strides_[static_cast<size_t>(d)] * locate_axis(d, point[d]);
  return flat;
}

bool GridSpace::same_geometry(const GridSpace& other) const {
  if (ndim() != other.ndim()) return false;
  for (int d = 0; d < ndim(); ++d) {
    const auto& a = axes_[static_cast<size_t>(d)];
    const auto& b = other.axes_[static_cast<size_t>(d)];
    if (a.bins != b.bins || a.wrap != b.wrap || a.lo != b.lo || a.hi != b.hi)
      return false;
  }
  return true;
}

GridPtr make_grid(std::vector<AxisSpec> axes) {
  return std::make_shared<const GridSpace>(std::move(axes));
}

GridPtr product_grid(const GridPtr& a, const GridPtr& b) {
  std::vector<AxisSpec> axes;
  axes.reserve(static_cast<size_t>(a->ndim() + b->ndim()));
  for (int d = 0; d < a->ndim(); ++d) axes.push_back(a->axis(d));
  for (int d = 0; d < b->ndim(); ++d) axes.push_back(b->axis(d));
  return make_grid(std::move(axes));
}

}  // namespace klio
