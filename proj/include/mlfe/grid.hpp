#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mlfe {

/// Uniform 1-D axis, symmetric about the origin.
struct Axis {
  double lower = -6.0;
  double upper = 6.0;
  int points = 64;

  static Axis symmetric(double half_width, int points);

  double spacing() const { return (upper - lower) / (points - 1); }
  double node(int i) const { return lower + i * spacing(); }
  std::vector<double> nodes() const;

  bool operator==(const Axis&) const = default;
};

/// Composite trapezoid weights; they sum to upper - lower.
std::vector<double> trapezoid_weights(const Axis& axis);

inline constexpr int kMaxArity = 4;
using MultiIndex = std::array<int, kMaxArity>;

/// Tensor product of one shared axis, `arity` times.
///
/// Linear layout is row-major: axis 0 varies slowest, the last axis is
/// contiguous, so linear = sum_k i_k * points^(arity-1-k).
class TensorGrid {
 public:
  TensorGrid() = default;
  TensorGrid(Axis axis, int arity);

  const Axis& axis() const { return axis_; }
  int arity() const { return arity_; }
  int points() const { return axis_.points; }
  std::size_t size() const { return size_; }
  std::size_t stride(int k) const { return strides_[k]; }

  std::size_t to_linear(const MultiIndex& m) const;
  MultiIndex to_multi(std::size_t linear) const;

  bool operator==(const TensorGrid& o) const { return axis_ == o.axis_ && arity_ == o.arity_; }

 private:
  Axis axis_{};
  int arity_ = 0;
  std::size_t size_ = 0;
  std::array<std::size_t, kMaxArity> strides_{};
};

/// Visits every 1-D line of the grid parallel to `axis` as (first offset,
/// stride). The visit order is fixed: outer indices slowest.
template <class F>
void for_each_pencil(const TensorGrid& grid, int axis, F&& f) {
  const std::size_t stride = grid.stride(axis);
  const std::size_t n = grid.points();
  const std::size_t outer = grid.size() / (n * stride);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < stride; ++in) {
      f(o * n * stride + in, stride);
    }
  }
}

/// Number of pencils along `axis`, and the offset of pencil p.
std::size_t pencil_count(const TensorGrid& grid, int axis);
std::size_t pencil_offset(const TensorGrid& grid, int axis, std::size_t p);

/// Trapezoid-rule integral over the full tensor grid.
///
/// Each slab along axis 0 is summed in a fixed order and the slab totals are
/// combined with compensated summation, so the result does not depend on the
/// OpenMP thread count.
double integrate(const TensorGrid& grid, std::span<const double> values);

/// Second-order central differences along `axis`; one-sided second-order
/// stencils on the two boundary planes.
std::vector<double> central_gradient(const TensorGrid& grid, std::span<const double> values,
                                     int axis);

/// central_gradient(log(max(density, floor))) for every axis.
std::vector<std::vector<double>> log_gradient(const TensorGrid& grid,
                                              std::span<const double> density,
                                              double floor = 1e-300);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace mlfe
