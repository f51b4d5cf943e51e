#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "dote/channel_map.hpp"
#include "dote/config.hpp"
#include "dote/csc.hpp"
#include "dote/dataset.hpp"
#include "dote/feature_maps.hpp"

namespace dote {

/// Trained artifact: source/target filter banks and the channel map.
struct DoteModel {
  FilterBank fx;
  FilterBank fy;
  ChannelMap mapping;
  SolverConfig config;
  Dims training_dims;

  void check_consistency() const {
    if (fx.count() != fy.count() || fx.count() != mapping.count())
      throw InvalidInput("model: Fx, Fy and W disagree on K");
    if (fx.filter_dims() != fy.filter_dims())
      throw InvalidInput("model: Fx and Fy differ in support");
  }

  friend bool operator==(const DoteModel&, const DoteModel&) = default;
};

/// The seven terms of the joint objective.
struct ObjectiveBreakdown {
  double data_x = 0.0;
  double data_y = 0.0;
  double l1_x = 0.0;
  double l1_y = 0.0;
  double coupling_primal = 0.0;
  double coupling_dual = 0.0;
  double mapping_ridge = 0.0;

  double total() const {
    return data_x + data_y + l1_x + l1_y + coupling_primal + coupling_dual +
           mapping_ridge;
  }
};

struct TrainIteration {
  std::size_t iteration = 0;
  ObjectiveBreakdown terms;
  double objective = 0.0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<TrainIteration> iterations;
  double initial_objective = 0.0;
  bool converged = false;

  void write_csv(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "iteration,objective,data_x,data_y,l1_x,l1_y,coupling_primal,"
          "coupling_dual,mapping_ridge,wall_seconds\n";
    for (const auto& it : iterations) {
      const auto& t = it.terms;
      os << it.iteration << ',' << it.objective << ',' << t.data_x << ','
         << t.data_y << ',' << t.l1_x << ',' << t.l1_y << ',' << t.coupling_primal
         << ',' << t.coupling_dual << ',' << t.mapping_ridge << ','
         << it.wall_seconds << '\n';
    }
    os.precision(old_precision);
  }
};

struct TrainResult {
  DoteModel model;
  TrainReport report;
  std::vector<FeatureMapStack> source_maps;
  std::vector<FeatureMapStack> target_maps;
};

/// Evaluates the joint objective term by term, summed over pairs:
///   1/2 ||X - sum Fx*Sx||^2 + 1/2 ||Y - sum Fy*Sy||^2 + gamma ||W||_F^2
///   + lambda (||Sx||_1 + ||Sy||_1)
///   + beta (||Sy - W Sx||^2 + ||Sx - W^-1 Sy||^2)
/// with W acting across channels voxelwise. The W^-1 term is only present
/// when model.config.dual_enabled is set.
inline ObjectiveBreakdown joint_objective(std::span<const Tensor> xs,
                                          std::span<const Tensor> ys,
                                          const DoteModel& model,
                                          std::span<const FeatureMapStack> sx,
                                          std::span<const FeatureMapStack> sy) {
  if (xs.empty() || xs.size() != ys.size() || sx.size() != xs.size() ||
      sy.size() != xs.size())
    throw DimensionError("joint_objective: inconsistent pair counts");
  model.check_consistency();
  const auto& cfg = model.config;

  ObjectiveBreakdown out;
  Eigen::MatrixXd inverse;
  if (cfg.dual_enabled && cfg.beta != 0.0) inverse = model.mapping.inverse();

  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].dims() != ys[i].dims())
      throw DimensionError("joint_objective: pair " + std::to_string(i) +
                           " is not registered");
    out.data_x += csc_objective(xs[i], model.fx, sx[i], 0.0);
    out.data_y += csc_objective(ys[i], model.fy, sy[i], 0.0);
    out.l1_x += cfg.lambda * sx[i].l1_norm();
    out.l1_y += cfg.lambda * sy[i].l1_norm();
    if (cfg.beta != 0.0) {
      out.coupling_primal +=
          cfg.beta * (sy[i] - model.mapping.forward(sx[i])).squared_norm();
      if (cfg.dual_enabled)
        out.coupling_dual +=
            cfg.beta * (sx[i] - apply_channel_mix(inverse, sy[i])).squared_norm();
    }
  }
  out.mapping_ridge = cfg.gamma * model.mapping.matrix().squaredNorm();
  return out;
}

/// Closed-form ridge solution W = Sy Sx^T (Sx Sx^T + (gamma/beta) I)^-1 with
/// all pairs' maps flattened into K x N matrices.
inline ChannelMap update_mapping(std::span<const FeatureMapStack> sx,
                                 std::span<const FeatureMapStack> sy, double beta,
                                 double gamma) {
  if (!(beta > 0)) throw InvalidCall("update_mapping: beta must be > 0");
  if (!(gamma >= 0)) throw InvalidInput("update_mapping: gamma must be >= 0");
  if (sx.empty() || sx.size() != sy.size())
    throw DimensionError("update_mapping: inconsistent pair counts");
  const Eigen::MatrixXd x = flatten_stacks({sx.begin(), sx.end()});
  const Eigen::MatrixXd y = flatten_stacks({sy.begin(), sy.end()});
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionError("update_mapping: source and target maps differ in shape");

  Eigen::MatrixXd gram = x * x.transpose();
  gram.diagonal().array() += gamma / beta;
  const Eigen::MatrixXd cross = y * x.transpose();
  // W gram = cross  <=>  gram W^T = cross^T (gram is symmetric).
  Eigen::MatrixXd w = gram.ldlt().solve(cross.transpose()).transpose();
  return ChannelMap(std::move(w));
}

namespace detail {

// Channel-space second moments of the flattened maps; enough to evaluate
// every W-dependent term of the joint objective.
struct MapMoments {
  Eigen::MatrixXd xx, yy, yx;

  static MapMoments of(std::span<const FeatureMapStack> sx,
                       std::span<const FeatureMapStack> sy) {
    const Eigen::MatrixXd x = flatten_stacks({sx.begin(), sx.end()});
    const Eigen::MatrixXd y = flatten_stacks({sy.begin(), sy.end()});
    return {x * x.transpose(), y * y.transpose(), y * x.transpose()};
  }

  // beta ||Sy - W Sx||^2 [+ beta ||Sx - W^-1 Sy||^2] + gamma ||W||^2
  double mapping_terms(const ChannelMap& w, const SolverConfig& cfg) const {
    const Eigen::MatrixXd& m = w.matrix();
    double primal = yy.trace() - 2.0 * (m.transpose() * yx).trace() +
                    (m * xx * m.transpose()).trace();
    double total = cfg.beta * primal + cfg.gamma * m.squaredNorm();
    if (cfg.dual_enabled) {
      const Eigen::MatrixXd inv = w.inverse();
      const double dual = xx.trace() - 2.0 * (inv.transpose() * yx.transpose()).trace() +
                          (inv * yy * inv.transpose()).trace();
      total += cfg.beta * dual;
    }
    return total;
  }
};

inline std::vector<CouplingTerm> source_couplings(const ChannelMap& w,
                                                  const Eigen::MatrixXd* inverse,
                                                  const FeatureMapStack& sy,
                                                  double beta) {
  std::vector<CouplingTerm> terms;
  if (beta == 0.0) return terms;
  terms.push_back({w.matrix(), sy, beta});  // ||Sy - W Sx||^2
  if (inverse) {
    const auto k = static_cast<Eigen::Index>(w.count());
    terms.push_back({Eigen::MatrixXd::Identity(k, k), apply_channel_mix(*inverse, sy),
                     beta});  // ||Sx - W^-1 Sy||^2
  }
  return terms;
}

inline std::vector<CouplingTerm> target_couplings(const ChannelMap& w,
                                                  const Eigen::MatrixXd* inverse,
                                                  const FeatureMapStack& sx,
                                                  double beta) {
  std::vector<CouplingTerm> terms;
  if (beta == 0.0) return terms;
  const auto k = static_cast<Eigen::Index>(w.count());
  terms.push_back({Eigen::MatrixXd::Identity(k, k), w.forward(sx), beta});
  if (inverse) terms.push_back({*inverse, sx, beta});
  return terms;
}

}  // namespace detail

/// Joint training by alternating minimization. Filters start from one
/// shared random draw, W from the identity, Sx from the uncoupled code of X
/// and Sy from W Sx. Each outer sweep:
///  (a) feature maps: per pair, Sx then Sy, each by coupled ADMM over every
///      joint-objective term that involves it (warm-started across sweeps);
///  (b) filters: Fx from (X, Sx), Fy from (Y, Sy);
///  (c) channel map: closed-form ridge update, backtracked towards the
///      previous W until the W-dependent terms do not increase.
/// Stops when the relative change of the joint objective drops below
/// cfg.tol or after cfg.max_outer sweeps. With dual_enabled == false the
/// W^-1 term is dropped everywhere and W^-1 is never formed.
inline TrainResult train(std::span<const Tensor> xs, std::span<const Tensor> ys,
                         const SolverConfig& cfg) {
  cfg.validate();
  if (xs.empty()) throw InvalidInput("train: empty dataset");
  if (xs.size() != ys.size()) throw InvalidInput("train: |X| != |Y|");
  const Dims& dims = xs.front().dims();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].dims() != dims || ys[i].dims() != dims)
      throw DimensionError("train: pair " + std::to_string(i) +
                           " does not share the training grid " +
                           dims_to_string(dims));
    if (!xs[i].is_finite() || !ys[i].is_finite())
      throw InvalidInput("train: non-finite training data");
  }
  for (auto e : dims)
    if (cfg.support > e)
      throw DimensionError("train: filter support exceeds image extent");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const std::size_t count = cfg.num_filters;
  const std::size_t pairs = xs.size();

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  DoteModel& model = result.model;
  // One draw for both banks so that channel k means the same thing in both
  // domains, matching the identity start of W.
  model.fx = FilterBank::random(count, cfg.support, dims.size(), rng);
  model.fy = model.fx;
  model.mapping = ChannelMap::identity(count);
  model.config = cfg;
  model.training_dims = dims;

  auto& sx = result.source_maps;
  auto& sy = result.target_maps;
  // Sx starts as the uncoupled code of X over the initial Fx, Sy = W0 Sx.
  std::vector<AdmmState> state_x(pairs, AdmmState::zeros(count, dims, cfg.sigma));
  sx.clear();
  sy.clear();
  for (std::size_t i = 0; i < pairs; ++i) {
    sx.push_back(solve_coupled_maps(xs[i], model.fx, {}, cfg.lambda, cfg, state_x[i]).maps);
    sy.push_back(model.mapping.forward(sx[i]));
  }
  std::vector<AdmmState> state_y = state_x;

  const bool dual = cfg.dual_enabled && cfg.beta != 0.0;
  double previous = joint_objective(xs, ys, model, sx, sy).total();
  result.report.initial_objective = previous;

  for (std::size_t sweep = 1; sweep <= cfg.max_outer; ++sweep) {
    Eigen::MatrixXd inverse;
    if (dual) inverse = model.mapping.inverse();
    const Eigen::MatrixXd* inv = dual ? &inverse : nullptr;

    for (std::size_t i = 0; i < pairs; ++i) {
      const auto cx = detail::source_couplings(model.mapping, inv, sy[i], cfg.beta);
      sx[i] = solve_coupled_maps(xs[i], model.fx, cx, cfg.lambda, cfg, state_x[i]).maps;
      const auto cy = detail::target_couplings(model.mapping, inv, sx[i], cfg.beta);
      sy[i] = solve_coupled_maps(ys[i], model.fy, cy, cfg.lambda, cfg, state_y[i]).maps;
    }

    model.fx = update_filters(xs, sx, model.fx, cfg);
    model.fy = update_filters(ys, sy, model.fy, cfg);

    if (cfg.beta > 0.0) {
      const auto moments = detail::MapMoments::of(sx, sy);
      const ChannelMap proposal = update_mapping(sx, sy, cfg.beta, cfg.gamma);
      const double current = moments.mapping_terms(model.mapping, cfg);
      const Eigen::MatrixXd old = model.mapping.matrix();
      double step = 1.0;
      for (int attempt = 0; attempt < 20; ++attempt, step *= 0.5) {
        ChannelMap candidate(old + step * (proposal.matrix() - old));
        if (moments.mapping_terms(candidate, cfg) <= current) {
          model.mapping = std::move(candidate);
          break;
        }
      }
    }
    model.check_consistency();

    const ObjectiveBreakdown terms = joint_objective(xs, ys, model, sx, sy);
    const double objective = terms.total();
    const double elapsed =
        std::chrono::duration<double>(clock::now() - start).count();
    result.report.iterations.push_back({sweep, terms, objective, elapsed});

    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    const bool settled = (previous == 0.0 && objective == 0.0) ||
                         std::abs(previous - objective) / scale < cfg.tol;
    previous = objective;
    if (settled) {
      result.report.converged = true;
      break;
    }
  }
  return result;
}

inline TrainResult train(const PairedDataset& dataset, const SolverConfig& cfg) {
  dataset.validate();
  const auto xs = dataset.sources();
  const auto ys = dataset.targets();
  return train(xs, ys, cfg);
}

}  // namespace dote
