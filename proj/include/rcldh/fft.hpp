#ifndef RCLDH_FFT_HPP
#define RCLDH_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>

#include "rcldh/core.hpp"

namespace rcldh {

enum class FftDirection : int { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

namespace detail {

// Planning is not thread-safe in FFTW; execution of an existing plan on new
// arrays is. Plans are created once per geometry and reused.
class FftPlanCache {
public:
  using Key = std::tuple<int, int, int, int, int, int, int>;

  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(const Key& key, std::complex<double>* data) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto [rank, n0, n1, howmany, stride, dist, sign] = key;
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (rank == 1) {
      int n[] = {n0};
      plan = fftw_plan_many_dft(1, n, howmany, buf, nullptr, stride, dist, buf,
                                nullptr, stride, dist, sign, flags);
    } else {
      int n[] = {n0, n1};
      plan = fftw_plan_many_dft(2, n, howmany, buf, nullptr, stride, dist, buf,
                                nullptr, stride, dist, sign, flags);
    }
    if (!plan) fail(ErrorKind::numerical, "FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~FftPlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

private:
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unnormalized 1-D DFTs of length n over `howmany` sequences.
/// Element j of sequence s lives at data[s*dist + j*stride].
inline void fft_many(std::complex<double>* data, std::size_t n,
                     std::size_t howmany, std::size_t stride, std::size_t dist,
                     FftDirection dir) {
  if (n == 0 || howmany == 0) return;
  detail::FftPlanCache::Key key{1,
                                static_cast<int>(n),
                                0,
                                static_cast<int>(howmany),
                                static_cast<int>(stride),
                                static_cast<int>(dist),
                                static_cast<int>(dir)};
  fftw_plan plan = detail::FftPlanCache::instance().get(key, data);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buf, buf);
}

/// In-place unnormalized 2-D DFT of a row-major image.
inline void fft2(ComplexImage& img, FftDirection dir) {
  if (img.size() == 0) return;
  detail::FftPlanCache::Key key{2,
                                static_cast<int>(img.ny),
                                static_cast<int>(img.nx),
                                1,
                                1,
                                0,
                                static_cast<int>(dir)};
  fftw_plan plan = detail::FftPlanCache::instance().get(key, img.data.data());
  auto* buf = reinterpret_cast<fftw_complex*>(img.data.data());
  fftw_execute_dft(plan, buf, buf);
}

/// Signed integer frequency index of DFT bin k (k for k < n/2, k-n otherwise).
inline long signed_bin(std::size_t k, std::size_t n) {
  return 2 * k < n ? static_cast<long>(k)
                   : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace rcldh

#endif  // RCLDH_FFT_HPP
