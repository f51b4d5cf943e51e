#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>

#include "dote/errors.hpp"
#include "dote/feature_maps.hpp"

namespace dote {

/// K x K linear map between the source and target feature-map channels,
/// applied voxelwise. The backward map is the ridge-regularized
/// pseudo-inverse (W^T W + eps I)^-1 W^T.
class ChannelMap {
 public:
  ChannelMap() = default;

  /// `ridge` < 0 selects the default eps = 1e-8 * trace(W^T W) / K.
  explicit ChannelMap(Eigen::MatrixXd matrix, double ridge = -1.0)
      : matrix_(std::move(matrix)) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols())
      throw DimensionError("ChannelMap: matrix must be square and non-empty");
    if (!matrix_.allFinite()) throw InvalidInput("ChannelMap: non-finite entries");
    ridge_ = ridge >= 0.0 ? ridge : default_ridge(matrix_);
  }

  static ChannelMap identity(std::size_t count) {
    const auto k = static_cast<Eigen::Index>(count);
    return ChannelMap(Eigen::MatrixXd::Identity(k, k));
  }

  static double default_ridge(const Eigen::MatrixXd& w) {
    return 1e-8 * (w.transpose() * w).trace() / static_cast<double>(w.rows());
  }

  std::size_t count() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double ridge() const { return ridge_; }

  Eigen::MatrixXd inverse() const {
    inverse_evaluations_.fetch_add(1, std::memory_order_relaxed);
    const auto k = matrix_.rows();
    if (matrix_.isZero(0.0)) return Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd gram = matrix_.transpose() * matrix_;
    gram.diagonal().array() += ridge_;
    return gram.ldlt().solve(matrix_.transpose());
  }

  FeatureMapStack forward(const FeatureMapStack& s) const {
    return apply_channel_mix(matrix_, s);
  }
  FeatureMapStack backward(const FeatureMapStack& s) const {
    return apply_channel_mix(inverse(), s);
  }

  /// Number of inverse() evaluations process-wide; lets tests assert that a
  /// code path never touches the backward map.
  static std::size_t inverse_evaluation_count() {
    return inverse_evaluations_.load(std::memory_order_relaxed);
  }

  friend bool operator==(const ChannelMap& a, const ChannelMap& b) {
    return a.matrix_ == b.matrix_ && a.ridge_ == b.ridge_;
  }

 private:
  Eigen::MatrixXd matrix_;
  double ridge_ = 0.0;
  inline static std::atomic<std::size_t> inverse_evaluations_{0};
};

}  // namespace dote
