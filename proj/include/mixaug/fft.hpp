#pragma once

// Real-input FFT backed by FFTW. Plans are created once per size under a
// mutex (the FFTW planner is not thread-safe) and then executed through the
// new-array interface, which is. FFTW_ESTIMATE keeps plans deterministic.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "mixaug/error.hpp"

namespace mixaug {

using cplx = std::complex<double>;

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 2) throw Error(ErrorCode::invalid_argument, "FFT size must be >= 2");
    const auto& plans = plans_for(n);
    forward_ = plans.forward;
    inverse_ = plans.inverse;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// `in` has size() samples, `out` receives bins() coefficients.
  void forward(std::span<const double> in, std::span<cplx> out) const {
    scratch_real_.assign(in.begin(), in.end());
    fftw_execute_dft_r2c(forward_, scratch_real_.data(), reinterpret_cast<fftw_complex*>(out.data()));
  }

  /// Exact inverse of forward() (includes the 1/n factor).
  void inverse(std::span<const cplx> in, std::span<double> out) const {
    scratch_cplx_.assign(in.begin(), in.end());  // c2r overwrites its input
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(scratch_cplx_.data()), out.data());
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : out) v *= scale;
  }

 private:
  struct Plans {
    fftw_plan forward;
    fftw_plan inverse;
  };

  static const Plans& plans_for(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, Plans> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> r(n);
    std::vector<cplx> c(n / 2 + 1);
    const int size = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_r2c_1d(size, r.data(), reinterpret_cast<fftw_complex*>(c.data()), flags),
            fftw_plan_dft_c2r_1d(size, reinterpret_cast<fftw_complex*>(c.data()), r.data(), flags | FFTW_DESTROY_INPUT)};
    if (p.forward == nullptr || p.inverse == nullptr) throw Error(ErrorCode::numeric, "FFTW planning failed");
    return cache.emplace(n, p).first->second;
  }

  std::size_t n_;
  fftw_plan forward_;
  fftw_plan inverse_;
  mutable std::vector<double> scratch_real_;
  mutable std::vector<cplx> scratch_cplx_;
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace mixaug
