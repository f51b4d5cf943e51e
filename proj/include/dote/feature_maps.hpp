#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "dote/errors.hpp"
#include "dote/tensor.hpp"

namespace dote {

inline constexpr double kUnitBallSlack = 1e-9;

/// Shrinkage operator: sign(v) * max(|v| - t, 0). |v| == t maps to exactly 0.
inline double soft_threshold(double v, double t) {
  if (!(t >= 0)) throw InvalidInput("soft_threshold: negative threshold");
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

inline Tensor soft_threshold(Tensor t, double threshold) {
  if (!(threshold >= 0)) throw InvalidInput("soft_threshold: negative threshold");
  for (double& v : t.values()) v = soft_threshold(v, threshold);
  return t;
}

/// Euclidean projection onto the unit l2 ball.
inline Tensor project_unit_ball(Tensor f) {
  const double n = f.norm();
  if (n > 1.0) f *= 1.0 / n;
  return f;
}

/// K filters of common support d^D, each inside the unit l2 ball.
class FilterBank {
 public:
  FilterBank() = default;

  explicit FilterBank(std::vector<Tensor> filters) : filters_(std::move(filters)) {
    if (filters_.empty()) throw InvalidInput("FilterBank: K must be >= 1");
    const Dims& d0 = filters_.front().dims();
    for (auto e : d0)
      if (e != d0.front() || e % 2 == 0)
        throw DimensionError("FilterBank: support must be odd and equal on every axis");
    for (const auto& f : filters_) {
      if (f.dims() != d0) throw DimensionError("FilterBank: filters differ in shape");
      if (!f.is_finite()) throw InvalidInput("FilterBank: non-finite filter");
      if (f.norm() > 1.0 + kUnitBallSlack)
        throw InvalidInput("FilterBank: filter outside the unit ball");
    }
  }

  static FilterBank zeros(std::size_t count, std::size_t support, std::size_t rank) {
    return FilterBank(std::vector<Tensor>(count, Tensor(Dims(rank, support))));
  }

  /// Standard-normal draw, each filter projected onto the unit ball.
  template <typename Rng>
  static FilterBank random(std::size_t count, std::size_t support,
                           std::size_t rank, Rng& rng) {
    if (count == 0) throw InvalidInput("FilterBank: K must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Tensor> filters;
    filters.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      Tensor f(Dims(rank, support));
      for (double& v : f.values()) v = normal(rng);
      filters.push_back(project_unit_ball(std::move(f)));
    }
    return FilterBank(std::move(filters));
  }

  std::size_t count() const { return filters_.size(); }
  std::size_t support() const { return filters_.front().dims().front(); }
  std::size_t rank() const { return filters_.front().rank(); }
  const Dims& filter_dims() const { return filters_.front().dims(); }

  const Tensor& operator[](std::size_t k) const { return filters_[k]; }
  const std::vector<Tensor>& filters() const { return filters_; }

  friend bool operator==(const FilterBank&, const FilterBank&) = default;

 private:
  std::vector<Tensor> filters_;
};

/// K feature maps sharing the grid of the image they encode.
class FeatureMapStack {
 public:
  FeatureMapStack() = default;

  explicit FeatureMapStack(std::vector<Tensor> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw InvalidInput("FeatureMapStack: K must be >= 1");
    for (const auto& m : maps_)
      if (m.dims() != maps_.front().dims())
        throw DimensionError("FeatureMapStack: maps differ in shape");
  }

  static FeatureMapStack zeros(std::size_t count, const Dims& dims) {
    return FeatureMapStack(std::vector<Tensor>(count, Tensor(dims)));
  }

  std::size_t count() const { return maps_.size(); }
  const Dims& dims() const { return maps_.front().dims(); }
  std::size_t voxels() const { return maps_.front().size(); }

  Tensor& operator[](std::size_t k) { return maps_[k]; }
  const Tensor& operator[](std::size_t k) const { return maps_[k]; }
  std::vector<Tensor>& maps() { return maps_; }
  const std::vector<Tensor>& maps() const { return maps_; }

  double l1_norm() const {
    double acc = 0.0;
    for (const auto& m : maps_) acc += m.l1_norm();
    return acc;
  }
  double squared_norm() const {
    double acc = 0.0;
    for (const auto& m : maps_) acc += m.squared_norm();
    return acc;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  bool is_finite() const {
    for (const auto& m : maps_)
      if (!m.is_finite()) return false;
    return true;
  }

  FeatureMapStack& operator+=(const FeatureMapStack& o) {
    require_same(o);
    for (std::size_t k = 0; k < maps_.size(); ++k) maps_[k] += o.maps_[k];
    return *this;
  }
  FeatureMapStack& operator-=(const FeatureMapStack& o) {
    require_same(o);
    for (std::size_t k = 0; k < maps_.size(); ++k) maps_[k] -= o.maps_[k];
    return *this;
  }
  FeatureMapStack& operator*=(double s) {
    for (auto& m : maps_) m *= s;
    return *this;
  }
  friend FeatureMapStack operator+(FeatureMapStack a, const FeatureMapStack& b) {
    return a += b;
  }
  friend FeatureMapStack operator-(FeatureMapStack a, const FeatureMapStack& b) {
    return a -= b;
  }

  friend bool operator==(const FeatureMapStack&, const FeatureMapStack&) = default;

 private:
  void require_same(const FeatureMapStack& o) const {
    if (o.count() != count() || o.dims() != dims())
      throw DimensionError("FeatureMapStack: shape mismatch");
  }

  std::vector<Tensor> maps_;
};

/// out(v) = mix * in(v) at every voxel v, mixing across the channel index.
inline FeatureMapStack apply_channel_mix(const Eigen::MatrixXd& mix,
                                         const FeatureMapStack& in) {
  const std::size_t k_in = in.count();
  if (static_cast<std::size_t>(mix.cols()) != k_in)
    throw DimensionError("channel mix has " + std::to_string(mix.cols()) +
                         " columns, stack has " + std::to_string(k_in) + " maps");
  const std::size_t k_out = static_cast<std::size_t>(mix.rows());
  FeatureMapStack out = FeatureMapStack::zeros(k_out, in.dims());
  const std::size_t n = in.voxels();
  for (std::size_t o = 0; o < k_out; ++o) {
    auto dst = out[o].data();
    for (std::size_t i = 0; i < k_in; ++i) {
      const double w = mix(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
      if (w == 0.0) continue;
      auto src = in[i].data();
      for (std::size_t v = 0; v < n; ++v) dst[v] += w * src[v];
    }
  }
  return out;
}

/// Flattens a list of stacks into a K x (total voxels) matrix, stack-major.
inline Eigen::MatrixXd flatten_stacks(const std::vector<FeatureMapStack>& stacks) {
  if (stacks.empty()) throw InvalidInput("flatten_stacks: no stacks");
  const std::size_t k = stacks.front().count();
  std::size_t total = 0;
  for (const auto& s : stacks) {
    if (s.count() != k) throw DimensionError("flatten_stacks: channel count mismatch");
    total += s.voxels();
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& s : stacks) {
    const std::size_t n = s.voxels();
    for (std::size_t c = 0; c < k; ++c) {
      auto src = s[c].data();
      for (std::size_t v = 0; v < n; ++v)
        m(static_cast<Eigen::Index>(c), col + static_cast<Eigen::Index>(v)) = src[v];
    }
    col += static_cast<Eigen::Index>(n);
  }
  return m;
}

}  // namespace dote
