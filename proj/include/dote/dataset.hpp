#pragma once

#include <string>
#include <vector>

#include "dote/errors.hpp"
#include "dote/tensor.hpp"

namespace dote {

struct ImagePair {
  std::string id;
  Tensor source;
  Tensor target;
};

/// Registered source/target pairs with intensities in [0, 1].
struct PairedDataset {
  std::vector<ImagePair> pairs;
  std::string source_modality;
  std::string target_modality;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  std::vector<Tensor> sources() const {
    std::vector<Tensor> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.source);
    return out;
  }
  std::vector<Tensor> targets() const {
    std::vector<Tensor> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.target);
    return out;
  }

  /// Throws unless every pair is registered, finite and normalized, and all
  /// pairs share one grid.
  void validate() const {
    if (pairs.empty()) throw InvalidInput("dataset is empty");
    const Dims& dims = pairs.front().source.dims();
    for (const auto& p : pairs) {
      if (p.source.dims() != p.target.dims())
        throw DimensionError("pair '" + p.id + "' is not registered: " +
                             dims_to_string(p.source.dims()) + " vs " +
                             dims_to_string(p.target.dims()));
      if (p.source.dims() != dims)
        throw DimensionError("pair '" + p.id + "' has dims " +
                             dims_to_string(p.source.dims()) + ", expected " +
                             dims_to_string(dims));
      for (const Tensor* t : {&p.source, &p.target}) {
        if (!t->is_finite()) throw InvalidInput("pair '" + p.id + "' has non-finite values");
        if (t->min() < 0.0 || t->max() > 1.0)
          throw InvalidInput("pair '" + p.id + "' is not normalized to [0, 1]");
      }
    }
  }
};

}  // namespace dote
