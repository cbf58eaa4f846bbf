#include "mlfe/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mlfe {

Axis Axis::symmetric(double half_width, int points) {
  if (!(half_width > 0.0)) throw std::invalid_argument("axis half width must be positive");
  if (points < 2) throw std::invalid_argument("axis needs at least 2 points");
  return Axis{-half_width, half_width, points};
}

std::vector<double> Axis::nodes() const {
  std::vector<double> x(points);
  for (int i = 0; i < points; ++i) x[i] = node(i);
  return x;
}

std::vector<double> trapezoid_weights(const Axis& axis) {
  if (axis.points < 2) throw std::invalid_argument("trapezoid rule needs at least 2 points");
  const double h = axis.spacing();
  std::vector<double> w(axis.points, h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

TensorGrid::TensorGrid(Axis axis, int arity) : axis_(axis), arity_(arity) {
  if (arity < 1 || arity > kMaxArity) {
    throw std::invalid_argument("tensor grid arity must be in 1.." + std::to_string(kMaxArity));
  }
  if (!(axis.lower < axis.upper) || axis.points < 2) throw std::invalid_argument("invalid axis");
  const std::size_t n = axis.points;
  std::size_t s = 1;
  for (int k = arity - 1; k >= 0; --k) {
    strides_[k] = s;
    s *= n;
  }
  size_ = s;
}

std::size_t TensorGrid::to_linear(const MultiIndex& m) const {
  std::size_t idx = 0;
  for (int k = 0; k < arity_; ++k) idx += static_cast<std::size_t>(m[k]) * strides_[k];
  return idx;
}

MultiIndex TensorGrid::to_multi(std::size_t linear) const {
  MultiIndex m{};
  for (int k = 0; k < arity_; ++k) {
    m[k] = static_cast<int>(linear / strides_[k]);
    linear %= strides_[k];
  }
  return m;
}

std::size_t pencil_count(const TensorGrid& grid, int axis) {
  (void)axis;
  return grid.size() / grid.points();
}

std::size_t pencil_offset(const TensorGrid& grid, int axis, std::size_t p) {
  const std::size_t stride = grid.stride(axis);
  const std::size_t n = grid.points();
  return (p / stride) * n * stride + p % stride;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

namespace {

// Weighted sum of one contiguous block over axes 1..arity-1.
double slab_sum(const TensorGrid& grid, const double* block, const std::vector<double>& w) {
  const int n = grid.points();
  const int rest = grid.arity() - 1;
  if (rest == 0) return block[0];
  // Contract the trailing axes one at a time: rows of the last axis first.
  std::size_t rows = grid.stride(0) / n;
  std::vector<double> partial(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = block + r * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += w[j] * row[j];
    partial[r] = s;
  }
  for (int level = 1; level < rest; ++level) {
    const std::size_t next = rows / n;
    for (std::size_t r = 0; r < next; ++r) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += w[j] * partial[r * n + j];
      partial[r] = s;
    }
    rows = next;
  }
  return partial[0];
}

}  // namespace

double integrate(const TensorGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
  const auto w = trapezoid_weights(grid.axis());
  const int n = grid.points();
  if (grid.arity() == 1) {
    CompensatedSum acc;
    for (int i = 0; i < n; ++i) acc.add(w[i] * values[i]);
    return acc.value();
  }
  std::vector<double> slabs(n);
  const std::size_t slab = grid.stride(0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) slabs[i] = slab_sum(grid, values.data() + i * slab, w);
  CompensatedSum acc;
  for (int i = 0; i < n; ++i) acc.add(w[i] * slabs[i]);
  return acc.value();
}

std::vector<double> central_gradient(const TensorGrid& grid, std::span<const double> values,
                                     int axis) {
  if (axis < 0 || axis >= grid.arity()) throw std::out_of_range("gradient axis out of range");
  if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
  const int n = grid.points();
  if (n < 3) throw std::invalid_argument("central gradient needs at least 3 points");
  const double inv2h = 0.5 / grid.axis().spacing();
  const std::size_t stride = grid.stride(axis);
  const std::size_t pencils = pencil_count(grid, axis);
  std::vector<double> out(values.size());
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < pencils; ++p) {
    const std::size_t base = pencil_offset(grid, axis, p);
    const double* f = values.data() + base;
    double* g = out.data() + base;
    g[0] = (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) * inv2h;
    for (int i = 1; i < n - 1; ++i) g[i * stride] = (f[(i + 1) * stride] - f[(i - 1) * stride]) * inv2h;
    const std::size_t l = (n - 1) * stride;
    g[l] = (3.0 * f[l] - 4.0 * f[l - stride] + f[l - 2 * stride]) * inv2h;
  }
  return out;
}

std::vector<std::vector<double>> log_gradient(const TensorGrid& grid,
                                              std::span<const double> density, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("log floor must be positive");
  std::vector<double> logd(density.size());
  for (std::size_t i = 0; i < density.size(); ++i) logd[i] = std::log(std::max(density[i], floor));
  std::vector<std::vector<double>> grads;
  grads.reserve(grid.arity());
  for (int k = 0; k < grid.arity(); ++k) grads.push_back(central_gradient(grid, logd, k));
  return grads;
}

}  // namespace mlfe
