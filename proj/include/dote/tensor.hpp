#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dote/errors.hpp"

namespace dote {

using Dims = std::vector<std::size_t>;
using Complex = std::complex<double>;

inline std::size_t volume(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>{});
}

inline std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  return os.str();
}

inline void check_spatial_dims(const Dims& dims) {
  if (dims.size() != 2 && dims.size() != 3)
    throw DimensionError("tensor rank must be 2 or 3, got " +
                         std::to_string(dims.size()));
  for (auto e : dims)
    if (e == 0) throw DimensionError("tensor extents must be positive");
}

namespace detail {

// Shared storage for the real and complex grids: dims plus a row-major
// payload whose length always equals volume(dims).
template <typename Scalar>
class Grid {
 public:
  Grid() = default;

  explicit Grid(Dims dims) : dims_(std::move(dims)) {
    check_spatial_dims(dims_);
    data_.assign(volume(dims_), Scalar{});
  }

  Grid(Dims dims, std::vector<Scalar> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    check_spatial_dims(dims_);
    if (data_.size() != volume(dims_))
      throw DimensionError("payload length " + std::to_string(data_.size()) +
                           " does not match dims " + dims_to_string(dims_));
  }

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }
  std::vector<Scalar>& values() { return data_; }
  const std::vector<Scalar>& values() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t i, std::size_t j) const {
    return i * dims_[1] + j;
  }
  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims_[1] + j) * dims_[2] + k;
  }

  Scalar& at(std::size_t i, std::size_t j) { return data_[offset(i, j)]; }
  const Scalar& at(std::size_t i, std::size_t j) const {
    return data_[offset(i, j)];
  }
  Scalar& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[offset(i, j, k)];
  }
  const Scalar& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[offset(i, j, k)];
  }

  bool same_shape(const Grid& other) const { return dims_ == other.dims_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 protected:
  Dims dims_;
  std::vector<Scalar> data_;
};

}  // namespace detail

/// Dense real 2D/3D grid (images, volumes, feature maps, filters).
class Tensor : public detail::Grid<double> {
 public:
  using Grid::Grid;

  static Tensor zeros(const Dims& dims) { return Tensor(dims); }

  static Tensor filled(const Dims& dims, double value) {
    Tensor t(dims);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  bool is_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  double squared_norm() const {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return acc;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  double l1_norm() const {
    double acc = 0.0;
    for (double v : data_) acc += std::abs(v);
    return acc;
  }

  double min() const { return *std::min_element(data_.begin(), data_.end()); }
  double max() const { return *std::max_element(data_.begin(), data_.end()); }

  Tensor& operator+=(const Tensor& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

 private:
  void require_same(const Tensor& o) const {
    if (!same_shape(o))
      throw DimensionError("shape mismatch: " + dims_to_string(dims_) +
                           " vs " + dims_to_string(o.dims()));
  }
};

/// Frequency-domain counterpart of Tensor, full complex spectrum.
class SpectralTensor : public detail::Grid<Complex> {
 public:
  using Grid::Grid;

  bool is_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const Complex& c) {
      return std::isfinite(c.real()) && std::isfinite(c.imag());
    });
  }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& c : data_) acc += std::norm(c);
    return acc;
  }
};

}  // namespace dote
