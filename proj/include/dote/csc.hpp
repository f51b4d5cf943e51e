#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "dote/channel_map.hpp"
#include "dote/config.hpp"
#include "dote/feature_maps.hpp"
#include "dote/fft.hpp"
#include "dote/tensor.hpp"

namespace dote {

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  double primal_residual = 0.0;  // relative, see solve_coupled_maps
  double dual_residual = 0.0;
};

/// Per-iteration record of an iterative solve. Iteration 0 is the starting
/// point and is stored separately in `initial_objective`.
struct ConvergenceTrace {
  std::vector<TraceRow> rows;
  double initial_objective = 0.0;
  bool converged = false;
  std::size_t best_iteration = 0;

  double final_objective() const {
    return rows.empty() ? initial_objective : rows.back().objective;
  }

  double best_objective() const {
    return best_iteration == 0 ? initial_objective
                               : rows[best_iteration - 1].objective;
  }

  void write_csv(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "iteration,objective,primal_residual,dual_residual\n";
    os << 0 << ',' << initial_objective << ",,\n";
    for (const auto& r : rows)
      os << r.iteration << ',' << r.objective << ',' << r.primal_residual << ','
         << r.dual_residual << '\n';
    os.precision(old_precision);
  }
};

/// ADMM splitting variables for the feature-map subproblem. `auxiliary` is
/// the sparse copy U, `scaled_duals` the scaled multipliers for S - U = 0.
/// Residuals are absolute l2 norms of the last iteration.
struct AdmmState {
  FeatureMapStack primary;
  FeatureMapStack auxiliary;
  FeatureMapStack scaled_duals;
  double penalty = 1.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;

  static AdmmState zeros(std::size_t count, const Dims& dims, double penalty) {
    auto z = FeatureMapStack::zeros(count, dims);
    return AdmmState{z, z, z, penalty, 0.0, 0.0};
  }

  bool matches(std::size_t count, const Dims& dims) const {
    return auxiliary.count() == count && !auxiliary.maps().empty() &&
           auxiliary.dims() == dims && scaled_duals.count() == count &&
           scaled_duals.dims() == dims;
  }
};

/// Quadratic coupling `weight * || mix * S - target ||^2`, with mix acting
/// across channels at each voxel.
struct CouplingTerm {
  Eigen::MatrixXd mix;
  FeatureMapStack target;
  double weight = 0.0;
};

struct MapSolveResult {
  FeatureMapStack maps;
  ConvergenceTrace trace;
};

enum class CouplingDirection { primal, dual };

namespace detail {

// K spectra stored channel-major in one buffer: [k * N + n].
inline std::vector<Complex> stack_spectra(const FeatureMapStack& s) {
  const std::size_t n = s.voxels();
  std::vector<Complex> out(s.count() * n);
  for (std::size_t k = 0; k < s.count(); ++k)
    forward_real(s.dims(), s[k].data(), std::span(out).subspan(k * n, n));
  return out;
}

inline std::vector<Complex> filter_spectra(const FilterBank& bank, const Dims& dims) {
  const std::size_t n = volume(dims);
  std::vector<Complex> out(bank.count() * n);
  for (std::size_t k = 0; k < bank.count(); ++k) {
    const Tensor e = embed_kernel(bank[k], dims);
    forward_real(dims, e.data(), std::span(out).subspan(k * n, n));
  }
  return out;
}

inline FeatureMapStack stack_from_spectra(std::span<const Complex> spec,
                                          std::size_t count, const Dims& dims) {
  const std::size_t n = volume(dims);
  auto out = FeatureMapStack::zeros(count, dims);
  for (std::size_t k = 0; k < count; ++k)
    inverse_real(dims, spec.subspan(k * n, n), out[k].data());
  return out;
}

inline void check_map_problem(const Tensor& x, const FilterBank& bank,
                              std::span<const CouplingTerm> couplings,
                              double lambda) {
  if (!x.is_finite()) throw InvalidInput("feature-map solve: non-finite image");
  if (!(lambda >= 0)) throw InvalidInput("feature-map solve: lambda must be >= 0");
  if (bank.rank() != x.rank())
    throw DimensionError("filter rank does not match image rank");
  for (auto e : x.dims())
    if (bank.support() > e)
      throw DimensionError("filter support " + std::to_string(bank.support()) +
                           " exceeds image extent " + std::to_string(e));
  const auto k = static_cast<Eigen::Index>(bank.count());
  for (const auto& c : couplings) {
    if (c.mix.rows() != k || c.mix.cols() != k)
      throw DimensionError("coupling matrix must be K x K");
    if (c.target.count() != bank.count() || c.target.dims() != x.dims())
      throw DimensionError("coupling target does not match the image grid");
    if (!(c.weight >= 0)) throw InvalidInput("coupling weight must be >= 0");
  }
}

// Per-frequency normal equations of
//   1/2 ||x - sum_k f_k * s_k||^2 + sum_j w_j ||A_j s - b_j||^2 + sigma/2 ||s - v||^2.
// In the Fourier domain every term carries the same 1/N factor, so each bin
// gives (conj(f) f^T + 2 sum_j w_j A_j^T A_j + sigma I) s = conj(f) x
//        + 2 sum_j w_j A_j^T b_j + sigma v.
class MapSystem {
 public:
  MapSystem(const Tensor& x, const FilterBank& bank,
            std::span<const CouplingTerm> couplings, double sigma)
      : dims_(x.dims()),
        count_(bank.count()),
        voxels_(x.size()),
        sigma_(sigma),
        couplings_(couplings),
        fhat_(filter_spectra(bank, dims_)),
        xhat_(voxels_),
        rhs_(count_ * voxels_) {
    forward_real(dims_, x.data(), xhat_);
    const auto k = static_cast<Eigen::Index>(count_);

    Eigen::MatrixXd coupling_gram = Eigen::MatrixXd::Zero(k, k);
    for (const auto& c : couplings_) {
      if (c.weight == 0.0) continue;
      coupling_gram += 2.0 * c.weight * c.mix.transpose() * c.mix;
      const Eigen::MatrixXd at = 2.0 * c.weight * c.mix.transpose();
      const auto bhat = stack_spectra(c.target);
      for (std::size_t n = 0; n < voxels_; ++n)
        for (Eigen::Index r = 0; r < k; ++r) {
          Complex acc{};
          for (Eigen::Index q = 0; q < k; ++q)
            acc += at(r, q) * bhat[static_cast<std::size_t>(q) * voxels_ + n];
          rhs_[static_cast<std::size_t>(r) * voxels_ + n] += acc;
        }
    }

    factors_.reserve(voxels_);
    Eigen::MatrixXcd m(k, k);
    for (std::size_t n = 0; n < voxels_; ++n) {
      for (Eigen::Index r = 0; r < k; ++r) {
        const Complex fr = std::conj(fhat_[static_cast<std::size_t>(r) * voxels_ + n]);
        rhs_[static_cast<std::size_t>(r) * voxels_ + n] += fr * xhat_[n];
        for (Eigen::Index c = 0; c < k; ++c)
          m(r, c) = fr * fhat_[static_cast<std::size_t>(c) * voxels_ + n] +
                    coupling_gram(r, c);
        m(r, r) += sigma_;
      }
      factors_.emplace_back(m);
    }
  }

  /// shat = system^-1 (rhs + sigma * vhat), bin by bin.
  void solve(std::span<const Complex> vhat, std::span<Complex> shat) const {
    const auto k = static_cast<Eigen::Index>(count_);
    Eigen::VectorXcd b(k);
    for (std::size_t n = 0; n < voxels_; ++n) {
      for (Eigen::Index r = 0; r < k; ++r) {
        const auto idx = static_cast<std::size_t>(r) * voxels_ + n;
        b(r) = rhs_[idx] + sigma_ * vhat[idx];
      }
      const Eigen::VectorXcd s = factors_[n].solve(b);
      for (Eigen::Index r = 0; r < k; ++r)
        shat[static_cast<std::size_t>(r) * voxels_ + n] = s(r);
    }
  }

  /// 1/2 ||x - sum F*U||^2 (via Parseval on uhat) + lambda ||U||_1
  /// + coupling terms (spatial).
  double objective(const FeatureMapStack& u, std::span<const Complex> uhat,
                   double lambda) const {
    double data = 0.0;
    for (std::size_t n = 0; n < voxels_; ++n) {
      Complex r = xhat_[n];
      for (std::size_t k = 0; k < count_; ++k)
        r -= fhat_[k * voxels_ + n] * uhat[k * voxels_ + n];
      data += std::norm(r);
    }
    double total = 0.5 * data / static_cast<double>(voxels_);
    if (lambda != 0.0) total += lambda * u.l1_norm();
    for (const auto& c : couplings_) {
      if (c.weight == 0.0) continue;
      FeatureMapStack diff = apply_channel_mix(c.mix, u);
      diff -= c.target;
      total += c.weight * diff.squared_norm();
    }
    return total;
  }

  const Dims& dims() const { return dims_; }
  std::size_t count() const { return count_; }

 private:
  Dims dims_;
  std::size_t count_;
  std::size_t voxels_;
  double sigma_;
  std::span<const CouplingTerm> couplings_;
  std::vector<Complex> fhat_;
  std::vector<Complex> xhat_;
  std::vector<Complex> rhs_;
  std::vector<Eigen::LLT<Eigen::MatrixXcd>> factors_;
};

}  // namespace detail

/// Data term plus l1 penalty, evaluated with spatial circular convolution.
inline double csc_objective(const Tensor& x, const FilterBank& bank,
                            const FeatureMapStack& maps, double lambda) {
  if (maps.count() != bank.count())
    throw DimensionError("csc_objective: K mismatch between filters and maps");
  if (maps.dims() != x.dims())
    throw DimensionError("csc_objective: map grid differs from image grid");
  Tensor residual = x;
  for (std::size_t k = 0; k < bank.count(); ++k)
    residual -= circular_convolve(maps[k], bank[k]);
  return 0.5 * residual.squared_norm() + lambda * maps.l1_norm();
}

/// csc_objective plus the coupling penalties sum_c w_c ||mix_c S - target_c||^2.
inline double coupled_map_objective(const Tensor& x, const FilterBank& bank,
                                    std::span<const CouplingTerm> couplings,
                                    double lambda, const FeatureMapStack& maps) {
  double total = csc_objective(x, bank, maps, lambda);
  for (const auto& c : couplings)
    if (c.weight != 0.0)
      total += c.weight * (apply_channel_mix(c.mix, maps) - c.target).squared_norm();
  return total;
}

/// Sum_k F_k * S_k on the maps' grid.
inline Tensor reconstruct(const FilterBank& bank, const FeatureMapStack& maps) {
  if (maps.count() != bank.count())
    throw DimensionError("reconstruct: K mismatch between filters and maps");
  Tensor out(maps.dims());
  for (std::size_t k = 0; k < bank.count(); ++k)
    out += circular_convolve(maps[k], bank[k]);
  return out;
}

/// Exact minimizer over S of
///   1/2 ||x - sum F*S||^2 + sum_j w_j ||A_j S - b_j||^2 + sigma/2 ||S - target||^2,
/// the quadratic step inside the feature-map ADMM.
inline FeatureMapStack spectral_map_step(const Tensor& x, const FilterBank& bank,
                                         std::span<const CouplingTerm> couplings,
                                         double sigma, const FeatureMapStack& target) {
  detail::check_map_problem(x, bank, couplings, 0.0);
  if (target.count() != bank.count() || target.dims() != x.dims())
    throw DimensionError("spectral_map_step: target shape mismatch");
  detail::MapSystem sys(x, bank, couplings, sigma);
  const auto vhat = detail::stack_spectra(target);
  std::vector<Complex> shat(vhat.size());
  sys.solve(vhat, shat);
  return detail::stack_from_spectra(shat, bank.count(), x.dims());
}

/// ADMM on
///   1/2 ||x - sum_k F_k * S_k||^2 + lambda ||S||_1 + sum_j w_j ||A_j S - b_j||^2
/// with the split S = U. Each iteration solves the quadratic S-step per
/// frequency bin, shrinks U = soft(S + D, lambda / sigma) and updates the
/// scaled duals D += S - U. Stops when
///   max(||S - U|| / max(||S||, 1), sigma ||dU|| / max(sigma ||D||, 1)) < tol
/// or after cfg.max_inner iterations. The returned maps are the sparse
/// iterate U with the lowest objective seen, the starting point included.
/// `state` supplies the warm start (reset when its shape does not fit) and
/// receives the last S and D with U set to the returned maps, so a warm
/// restart never starts above the previous result.
inline MapSolveResult solve_coupled_maps(const Tensor& x, const FilterBank& bank,
                                         std::span<const CouplingTerm> couplings,
                                         double lambda, const SolverConfig& cfg,
                                         AdmmState& state) {
  detail::check_map_problem(x, bank, couplings, lambda);
  if (!(cfg.sigma > 0)) throw InvalidInput("ADMM penalty sigma must be > 0");

  const std::size_t count = bank.count();
  const Dims& dims = x.dims();
  const double sigma = cfg.sigma;
  const double threshold = lambda / sigma;
  if (!state.matches(count, dims) || state.penalty != sigma)
    state = AdmmState::zeros(count, dims, sigma);

  detail::MapSystem sys(x, bank, couplings, sigma);

  FeatureMapStack u = state.auxiliary;
  FeatureMapStack d = state.scaled_duals;
  FeatureMapStack s = state.primary.count() == count && state.primary.dims() == dims
                          ? state.primary
                          : FeatureMapStack::zeros(count, dims);

  MapSolveResult result;
  auto uhat = detail::stack_spectra(u);
  result.trace.initial_objective = sys.objective(u, uhat, lambda);
  result.maps = u;
  double best = result.trace.initial_objective;

  std::vector<Complex> shat(uhat.size());
  double primal = 0.0;
  double dual = 0.0;
  for (std::size_t it = 1; it <= cfg.max_inner; ++it) {
    const auto vhat = detail::stack_spectra(u - d);
    sys.solve(vhat, shat);
    s = detail::stack_from_spectra(shat, count, dims);

    FeatureMapStack u_prev = std::move(u);
    u = s + d;
    for (auto& m : u.maps()) m = soft_threshold(std::move(m), threshold);
    d += s;
    d -= u;

    primal = (s - u).norm();
    dual = sigma * (u - u_prev).norm();
    const double primal_rel = primal / std::max(s.norm(), 1.0);
    const double dual_rel = dual / std::max(sigma * d.norm(), 1.0);

    uhat = detail::stack_spectra(u);
    const double obj = sys.objective(u, uhat, lambda);
    result.trace.rows.push_back({it, obj, primal_rel, dual_rel});
    if (obj < best) {
      best = obj;
      result.maps = u;
      result.trace.best_iteration = it;
    }
    if (std::max(primal_rel, dual_rel) < cfg.tol) {
      result.trace.converged = true;
      break;
    }
  }

  state.primary = std::move(s);
  state.auxiliary = result.maps;
  state.scaled_duals = std::move(d);
  state.penalty = sigma;
  state.primal_residual = primal;
  state.dual_residual = dual;
  return result;
}

/// Single-domain CSC inference with fixed filters, cold-started.
inline MapSolveResult infer_feature_maps(const Tensor& x, const FilterBank& bank,
                                         double lambda, const SolverConfig& cfg) {
  AdmmState state = AdmmState::zeros(bank.count(), x.dims(), cfg.sigma);
  return solve_coupled_maps(x, bank, {}, lambda, cfg, state);
}

/// One side of the coupled feature-map subproblem:
///   primal: data(x) + lambda ||S^x||_1 + beta ||S^y - W S^x||^2, S_other = S^y
///   dual:   data(y) + lambda ||S^y||_1 + beta ||S^x - W^-1 S^y||^2, S_other = S^x
/// where W^-1 is the ChannelMap's regularized inverse.
inline MapSolveResult update_feature_maps_dual(const Tensor& x, const FilterBank& bank,
                                               const FeatureMapStack& other,
                                               const ChannelMap& mapping,
                                               CouplingDirection direction,
                                               double lambda, double beta,
                                               const SolverConfig& cfg) {
  if (mapping.count() != bank.count())
    throw DimensionError("channel map size does not match filter count");
  if (other.dims() != x.dims() || other.count() != bank.count())
    throw DimensionError("other-domain maps do not match the image grid");
  if (!(beta >= 0)) throw InvalidInput("beta must be >= 0");

  std::vector<CouplingTerm> couplings;
  if (beta > 0.0) {
    Eigen::MatrixXd mix = direction == CouplingDirection::primal
                              ? mapping.matrix()
                              : mapping.inverse();
    couplings.push_back({std::move(mix), other, beta});
  }
  AdmmState state = AdmmState::zeros(bank.count(), x.dims(), cfg.sigma);
  return solve_coupled_maps(x, bank, couplings, lambda, cfg, state);
}

namespace detail {

inline void check_filter_problem(std::span<const Tensor> images,
                                 std::span<const FeatureMapStack> maps) {
  if (images.empty()) throw InvalidInput("update_filters: empty pair list");
  if (images.size() != maps.size())
    throw InvalidInput("update_filters: images and maps differ in count");
  const Dims& dims = images.front().dims();
  const std::size_t count = maps.front().count();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims() != dims || maps[i].dims() != dims)
      throw DimensionError("update_filters: pair " + std::to_string(i) +
                           " is not on the common grid");
    if (maps[i].count() != count)
      throw DimensionError("update_filters: pair " + std::to_string(i) +
                           " has a different map count");
    if (!images[i].is_finite() || !maps[i].is_finite())
      throw InvalidInput("update_filters: non-finite input");
  }
}

}  // namespace detail

/// Data term sum_i 1/2 ||X_i - sum_k F_k * S_ik||^2 over all pairs.
inline double filter_objective(std::span<const Tensor> images,
                               std::span<const FeatureMapStack> maps,
                               const FilterBank& bank) {
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i)
    total += csc_objective(images[i], bank, maps[i], 0.0);
  return total;
}

/// Filter learning with fixed maps. Filters are updated one at a time
/// (block coordinate over k); each single-filter problem
///   min_f sum_i 1/2 ||R_ik - f * S_ik||^2,  supp(f) in d^D, ||f|| <= 1
/// is solved by ADMM with the split F = embed(V): a per-bin scalar
/// least-squares F-step, V = project_unit_ball(crop(F + D)), D += F - embed(V).
/// The penalty is cfg.sigma times the mean spectral energy of the maps.
/// Sweeps over k repeat until the relative decrease of the data term falls
/// below cfg.tol or cfg.max_inner sweeps have run. A filter only changes
/// when its block objective decreases, so the data term never increases.
/// A filter whose maps are zero on every pair is left as is, or set to zero
/// when the residual is zero as well.
inline FilterBank update_filters(std::span<const Tensor> images,
                                 std::span<const FeatureMapStack> maps,
                                 const FilterBank& initial, const SolverConfig& cfg,
                                 ConvergenceTrace* trace = nullptr) {
  detail::check_filter_problem(images, maps);
  const std::size_t count = initial.count();
  if (maps.front().count() != count)
    throw DimensionError("update_filters: K mismatch between filters and maps");
  const Dims& dims = images.front().dims();
  if (initial.rank() != dims.size())
    throw DimensionError("update_filters: filter rank does not match images");
  for (auto e : dims)
    if (initial.support() > e)
      throw DimensionError("update_filters: support exceeds image extent");

  const std::size_t pairs = images.size();
  const std::size_t n = volume(dims);
  const double inv_2n = 0.5 / static_cast<double>(n);
  const Dims& fdims = initial.filter_dims();

  std::vector<std::vector<Complex>> shat(pairs);  // [i][k*n + v]
  std::vector<std::vector<Complex>> ehat(pairs);  // residual spectra
  for (std::size_t i = 0; i < pairs; ++i) {
    shat[i] = detail::stack_spectra(maps[i]);
    ehat[i].resize(n);
    detail::forward_real(dims, images[i].data(), ehat[i]);
  }
  std::vector<Tensor> filters = initial.filters();
  std::vector<Complex> fhat = detail::filter_spectra(initial, dims);
  for (std::size_t i = 0; i < pairs; ++i)
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t v = 0; v < n; ++v)
        ehat[i][v] -= fhat[k * n + v] * shat[i][k * n + v];

  auto data_term = [&] {
    double acc = 0.0;
    for (const auto& e : ehat)
      for (const auto& c : e) acc += std::norm(c);
    return acc * inv_2n;
  };

  ConvergenceTrace local;
  ConvergenceTrace& tr = trace ? *trace : local;
  tr = {};
  tr.initial_objective = data_term();
  double current = tr.initial_objective;

  std::vector<Complex> energy(n), num(n), rr(n), vhat(n), ffull_hat(n);
  for (std::size_t sweep = 1; sweep <= cfg.max_inner; ++sweep) {
    const double before = current;
    double worst_primal = 0.0;
    double worst_dual = 0.0;

    for (std::size_t k = 0; k < count; ++k) {
      // Residual with filter k removed: R_i = E_i + F_k S_ik.
      bool any = false;
      bool residual = false;
      for (std::size_t v = 0; v < n; ++v) {
        double a = 0.0;
        Complex b{};
        double r2 = 0.0;
        for (std::size_t i = 0; i < pairs; ++i) {
          const Complex sk = shat[i][k * n + v];
          const Complex r = ehat[i][v] + fhat[k * n + v] * sk;
          a += std::norm(sk);
          b += std::conj(sk) * r;
          r2 += std::norm(r);
        }
        energy[v] = a;
        num[v] = b;
        rr[v] = r2;
        any = any || a != 0.0;
        residual = residual || r2 != 0.0;
      }
      if (!any) {
        // Unused filter. Keep it so the atom can be picked up again later,
        // unless there is nothing left to fit; then take the zero filter.
        if (residual) continue;
        filters[k] = Tensor(fdims);
        std::fill_n(fhat.begin() + static_cast<std::ptrdiff_t>(k * n), n, Complex{});
        continue;
      }

      auto block_objective = [&](std::span<const Complex> fh) {
        double acc = 0.0;
        for (std::size_t v = 0; v < n; ++v)
          acc += rr[v].real() - 2.0 * (std::conj(fh[v]) * num[v]).real() +
                 std::norm(fh[v]) * energy[v].real();
        return acc * inv_2n;
      };

      Tensor best = filters[k];
      std::copy_n(fhat.begin() + static_cast<std::ptrdiff_t>(k * n), n, vhat.begin());
      double best_obj = block_objective(vhat);

      // Penalty relative to the mean spectral energy of the maps. A unit-norm
      // filter has unit mean spectral energy, so sigma then carries the same
      // weight here as in the map subproblem.
      double mean_energy = 0.0;
      for (std::size_t v = 0; v < n; ++v) mean_energy += energy[v].real();
      const double sigma = cfg.sigma * mean_energy / static_cast<double>(n);
      Tensor v_small = filters[k];
      Tensor dual(dims);
      for (std::size_t it = 1; it <= cfg.max_inner; ++it) {
        Tensor target = embed_kernel(v_small, dims);
        target -= dual;
        detail::forward_real(dims, target.data(), ffull_hat);
        for (std::size_t v = 0; v < n; ++v)
          ffull_hat[v] = (num[v] + sigma * ffull_hat[v]) / (energy[v].real() + sigma);
        Tensor ffull(dims);
        detail::inverse_real(dims, ffull_hat, ffull.data());

        const Tensor v_prev = v_small;
        v_small = project_unit_ball(crop_kernel(ffull + dual, fdims));
        const Tensor v_embedded = embed_kernel(v_small, dims);
        dual += ffull;
        dual -= v_embedded;

        const double primal_rel =
            (ffull - v_embedded).norm() / std::max(ffull.norm(), 1.0);
        const double dual_rel =
            sigma * (v_small - v_prev).norm() / std::max(sigma * dual.norm(), 1.0);
        worst_primal = std::max(worst_primal, primal_rel);
        worst_dual = std::max(worst_dual, dual_rel);

        detail::forward_real(dims, v_embedded.data(), vhat);
        const double obj = block_objective(vhat);
        if (obj < best_obj) {
          best_obj = obj;
          best = v_small;
        }
        if (std::max(primal_rel, dual_rel) < cfg.tol) break;
      }

      if (best == filters[k]) continue;
      filters[k] = best;
      const Tensor best_embedded = embed_kernel(best, dims);
      detail::forward_real(dims, best_embedded.data(), vhat);
      // E_i <- E_i + (F_old - F_new) S_ik
      for (std::size_t v = 0; v < n; ++v) {
        const Complex delta = fhat[k * n + v] - vhat[v];
        for (std::size_t i = 0; i < pairs; ++i)
          ehat[i][v] += delta * shat[i][k * n + v];
        fhat[k * n + v] = vhat[v];
      }
    }
    current = data_term();
    tr.rows.push_back({sweep, current, worst_primal, worst_dual});
    if (before - current <= cfg.tol * std::max(before, std::numeric_limits<double>::min())) {
      tr.converged = true;
      break;
    }
  }
  tr.best_iteration = tr.rows.size();
  return FilterBank(std::move(filters));
}

/// Cold-started variant: filters start from a cfg.seed standard-normal draw.
inline FilterBank update_filters(std::span<const Tensor> images,
                                 std::span<const FeatureMapStack> maps,
                                 std::size_t support, const SolverConfig& cfg,
                                 ConvergenceTrace* trace = nullptr) {
  detail::check_filter_problem(images, maps);
  std::mt19937_64 rng(cfg.seed);
  const auto initial = FilterBank::random(maps.front().count(), support,
                                          images.front().rank(), rng);
  return update_filters(images, maps, initial, cfg, trace);
}

}  // namespace dote
