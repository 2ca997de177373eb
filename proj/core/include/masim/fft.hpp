#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "masim/types.hpp"

namespace masim {

// Reusable FFTW plan for a fixed transform size and direction.
//
// Forward transform is unnormalized, X[k] = sum_n x[n] exp(-j 2 pi k n / N).
// Inverse transform includes the 1/N factor, x[n] = (1/N) sum_k X[k] exp(+j 2 pi k n / N).
// Plans are not shareable between threads; create one per thread.
class FftPlan {
 public:
  enum class Direction { kForward, kInverse };

  FftPlan(std::size_t size, Direction direction);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return size_; }

  // in.size() and out.size() must equal size(); in and out may alias.
  void execute(std::span<const cplx> in, std::span<cplx> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t size_ = 0;
  Direction direction_ = Direction::kForward;
};

CVec fft(std::span<const cplx> x);
CVec ifft(std::span<const cplx> x);

std::size_t next_pow2(std::size_t n);

}  // namespace masim
