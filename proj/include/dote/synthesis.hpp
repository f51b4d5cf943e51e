#pragma once

#include <algorithm>

#include "dote/csc.hpp"
#include "dote/dataset.hpp"
#include "dote/resample.hpp"
#include "dote/trainer.hpp"

namespace dote {

inline constexpr double kInputRangeSlack = 0.01;

/// Target-domain estimate before clamping: Fy * (W Sx) with Sx the CSC code
/// of `x` over Fx.
inline Tensor synthesize_unclamped(const DoteModel& model, const Tensor& x,
                                   const SolverConfig& cfg) {
  model.check_consistency();
  if (x.rank() != model.fx.rank())
    throw DimensionError("synthesize: image rank does not match the model");
  for (auto e : x.dims())
    if (e < model.fx.support())
      throw DimensionError("synthesize: image " + dims_to_string(x.dims()) +
                           " is smaller than the filter support");
  if (!x.is_finite()) throw InvalidInput("synthesize: non-finite input");
  if (x.min() < -kInputRangeSlack || x.max() > 1.0 + kInputRangeSlack)
    throw InvalidInput("synthesize: input is not normalized to [0, 1]");

  const auto code = infer_feature_maps(x, model.fx, cfg.lambda, cfg);
  return reconstruct(model.fy, model.mapping.forward(code.maps));
}

inline Tensor clamp_unit(Tensor t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

/// Synthesizes the target-domain image for `x`, clamped to [0, 1].
inline Tensor synthesize(const DoteModel& model, const Tensor& x,
                         const SolverConfig& cfg) {
  return clamp_unit(synthesize_unclamped(model, x, cfg));
}

inline Tensor synthesize(const DoteModel& model, const Tensor& x) {
  return synthesize(model, x, model.config);
}

/// Registered SR pair on the HR grid: source is the bicubic re-upsampled
/// LR image (clamped to [0, 1]), target the HR image.
inline ImagePair make_sr_pair(std::string id, const Tensor& hr, std::size_t factor) {
  Tensor source = clamp_unit(sr_upsample(sr_degrade(hr, factor), factor));
  return {std::move(id), std::move(source), hr};
}

}  // namespace dote
