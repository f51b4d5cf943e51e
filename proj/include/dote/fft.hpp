#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "dote/errors.hpp"
#include "dote/tensor.hpp"

namespace dote {

// Residue tolerance for discarding the imaginary part of an inverse
// transform that is supposed to be real.
inline constexpr double kRealResidueTolerance = 1e-9;

namespace detail {

// FFTW plans keyed by (dims, sign). Planning is not thread-safe in FFTW, so
// it happens under a lock; executing an existing plan on new arrays is.
// FFTW_UNALIGNED keeps results independent of buffer alignment, which the
// bitwise-determinism guarantee of training relies on.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const Dims& dims, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(dims, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::vector<int> n(dims.begin(), dims.end());
    std::vector<Complex> scratch_in(volume(dims)), scratch_out(volume(dims));
    fftw_plan plan = fftw_plan_dft(
        static_cast<int>(n.size()), n.data(),
        reinterpret_cast<fftw_complex*>(scratch_in.data()),
        reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;

  std::mutex mutex_;
  std::map<std::pair<Dims, int>, fftw_plan> plans_;
};

// Unnormalized transform of `in` into `out` (both volume(dims) long).
inline void dft(const Dims& dims, std::span<const Complex> in,
                std::span<Complex> out, int sign) {
  fftw_plan plan = PlanCache::instance().get(dims, sign);
  // FFTW's new-array execute takes non-const input but does not modify it
  // for out-of-place complex transforms.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

inline void forward_real(const Dims& dims, std::span<const double> in,
                         std::span<Complex> out) {
  std::vector<Complex> buf(in.begin(), in.end());
  dft(dims, buf, out, FFTW_FORWARD);
}

// Normalized inverse keeping only the real part; no residue check.
inline void inverse_real(const Dims& dims, std::span<const Complex> in,
                         std::span<double> out) {
  std::vector<Complex> buf(in.size());
  dft(dims, in, buf, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(in.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real() * scale;
}

}  // namespace detail

/// Unnormalized forward DFT of a real tensor.
inline SpectralTensor fft_forward(const Tensor& t) {
  if (!t.is_finite()) throw InvalidInput("fft_forward: non-finite input");
  SpectralTensor s(t.dims());
  detail::forward_real(t.dims(), t.data(), s.data());
  return s;
}

/// Normalized (1/N) inverse DFT. The result must be real: an imaginary
/// residue above kRealResidueTolerance relative to the output magnitude
/// raises NumericalError, smaller residue is dropped.
inline Tensor fft_inverse(const SpectralTensor& s) {
  if (!s.is_finite()) throw InvalidInput("fft_inverse: non-finite input");
  std::vector<Complex> buf(s.size());
  detail::dft(s.dims(), s.data(), buf, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(s.size());

  Tensor out(s.dims());
  double real_sq = 0.0;
  double imag_sq = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Complex v = buf[i] * scale;
    out[i] = v.real();
    real_sq += v.real() * v.real();
    imag_sq += v.imag() * v.imag();
  }
  const double magnitude = std::sqrt(real_sq + imag_sq);
  if (std::sqrt(imag_sq) > kRealResidueTolerance * magnitude)
    throw NumericalError("fft_inverse: spectrum is not Hermitian-symmetric "
                         "(imaginary residue too large)");
  return out;
}

/// Places `kernel` in the origin corner of a zero tensor of `target`.
inline Tensor embed_kernel(const Tensor& kernel, const Dims& target) {
  check_spatial_dims(target);
  const Dims& kd = kernel.dims();
  if (kd.size() != target.size())
    throw DimensionError("embed_kernel: rank mismatch");
  for (std::size_t a = 0; a < kd.size(); ++a)
    if (kd[a] > target[a])
      throw DimensionError("embed_kernel: kernel " + dims_to_string(kd) +
                           " larger than target " + dims_to_string(target));

  Tensor out(target);
  if (kd.size() == 2) {
    for (std::size_t i = 0; i < kd[0]; ++i)
      for (std::size_t j = 0; j < kd[1]; ++j) out.at(i, j) = kernel.at(i, j);
  } else {
    for (std::size_t i = 0; i < kd[0]; ++i)
      for (std::size_t j = 0; j < kd[1]; ++j)
        for (std::size_t k = 0; k < kd[2]; ++k)
          out.at(i, j, k) = kernel.at(i, j, k);
  }
  return out;
}

/// Extracts the origin corner of extent `kernel_dims`; inverse of embed.
inline Tensor crop_kernel(const Tensor& full, const Dims& kernel_dims) {
  check_spatial_dims(kernel_dims);
  const Dims& fd = full.dims();
  if (fd.size() != kernel_dims.size())
    throw DimensionError("crop_kernel: rank mismatch");
  for (std::size_t a = 0; a < fd.size(); ++a)
    if (kernel_dims[a] > fd[a])
      throw DimensionError("crop_kernel: crop larger than source");

  Tensor out(kernel_dims);
  if (fd.size() == 2) {
    for (std::size_t i = 0; i < kernel_dims[0]; ++i)
      for (std::size_t j = 0; j < kernel_dims[1]; ++j)
        out.at(i, j) = full.at(i, j);
  } else {
    for (std::size_t i = 0; i < kernel_dims[0]; ++i)
      for (std::size_t j = 0; j < kernel_dims[1]; ++j)
        for (std::size_t k = 0; k < kernel_dims[2]; ++k)
          out.at(i, j, k) = full.at(i, j, k);
  }
  return out;
}

/// Circular convolution of `t` with `kernel` (zero-embedded on t's grid),
/// computed as a spectral product.
inline Tensor circular_convolve(const Tensor& t, const Tensor& kernel) {
  const SpectralTensor a = fft_forward(t);
  const SpectralTensor b = fft_forward(embed_kernel(kernel, t.dims()));
  SpectralTensor prod(t.dims());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a[i] * b[i];
  return fft_inverse(prod);
}

}  // namespace dote
