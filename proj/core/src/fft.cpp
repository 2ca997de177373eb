#include "masim/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace masim {

namespace {
// The FFTW planner is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftPlan::Impl {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    if (buf) fftw_free(buf);
  }
};

FftPlan::FftPlan(std::size_t size, Direction direction)
    : impl_(std::make_unique<Impl>()), size_(size), direction_(direction) {
  if (size == 0) throw ValidationError("FFT size must be positive");
  std::lock_guard lock(planner_mutex());
  impl_->buf = fftw_alloc_complex(size);
  if (!impl_->buf) throw std::bad_alloc();
  const int sign = direction == Direction::kForward ? FFTW_FORWARD : FFTW_BACKWARD;
  impl_->plan = fftw_plan_dft_1d(static_cast<int>(size), impl_->buf, impl_->buf, sign,
                                 FFTW_ESTIMATE);
  if (!impl_->plan) throw std::runtime_error("fftw_plan_dft_1d failed");
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::execute(std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != size_ || out.size() != size_) {
    throw ValidationError("FFT buffer size does not match plan size");
  }
  auto* work = reinterpret_cast<cplx*>(impl_->buf);
  std::copy(in.begin(), in.end(), work);
  fftw_execute(impl_->plan);
  if (direction_ == Direction::kInverse) {
    const double scale = 1.0 / static_cast<double>(size_);
    std::transform(work, work + size_, out.begin(), [scale](cplx v) { return v * scale; });
  } else {
    std::copy(work, work + size_, out.begin());
  }
}

CVec fft(std::span<const cplx> x) {
  CVec out(x.size());
  FftPlan(x.size(), FftPlan::Direction::kForward).execute(x, out);
  return out;
}

CVec ifft(std::span<const cplx> x) {
  CVec out(x.size());
  FftPlan(x.size(), FftPlan::Direction::kInverse).execute(x, out);
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace masim
