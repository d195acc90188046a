#ifndef RCLDH_SVDFILTER_HPP
#define RCLDH_SVDFILTER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rcldh/core.hpp"
#include "rcldh/stft.hpp"

namespace rcldh {

struct SvdFilterSpec {
  double cutoff_hz = 200;
  std::optional<std::size_t> rank_override;
};

/// Number of rejected singular components equivalent to a two-sided Fourier
/// cutoff: round(2 N fc / fs), clamped to [1, N/4].
inline std::size_t cutoff_to_rank(double cutoff_hz, double sample_rate_hz,
                                  std::size_t n_win) {
  if (!(cutoff_hz >= 0) || !(cutoff_hz < sample_rate_hz / 2))
    fail(ErrorKind::config, str_cat("SVD cutoff ", cutoff_hz,
                                    " Hz must lie in [0, fs/2)"));
  const double raw = std::round(2.0 * static_cast<double>(n_win) * cutoff_hz / sample_rate_hz);
  const std::size_t upper = std::max<std::size_t>(1, n_win / 4);
  return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, upper);
}

inline std::size_t rejection_rank(const SvdFilterSpec& spec, double sample_rate_hz,
                                  std::size_t n_win) {
  if (spec.rank_override) {
    if (*spec.rank_override >= n_win)
      fail(ErrorKind::config, str_cat("SVD rank_override ", *spec.rank_override,
                                      " must be < n_win ", n_win));
    return *spec.rank_override;
  }
  return cutoff_to_rank(spec.cutoff_hz, sample_rate_hz, n_win);
}

struct SvdSplit {
  ComplexWindow filtered;
  ComplexWindow rejected;
  std::vector<double> singular_values;  // non-increasing, all n_win of them
  std::size_t rank = 0;
};

/// Splits the Casorati matrix A (pixels x n_win) into its rank-k principal
/// part and the remainder A - sum_{i<=k} s_i u_i v_i^*.
///
/// Only the right singular subspace is materialized, from the n_win x n_win
/// Gram matrix A^H A; the projection A V_k V_k^H equals the rank-k truncation.
inline SvdSplit svd_split(const ComplexWindow& window, std::size_t k) {
  using Mat = Eigen::MatrixXcd;
  const auto npx = static_cast<Eigen::Index>(window.pixels());
  const auto n = static_cast<Eigen::Index>(window.n_win);
  if (static_cast<Eigen::Index>(k) >= n && n > 0)
    fail(ErrorKind::config, "svd_split: rank must be < n_win");
  for (const auto& v : window.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::data, str_cat("svd filter: non-finite sample in window t=",
                                    window.t_center_s, " s"));

  Eigen::Map<const Mat> a(window.data.data(), npx, n);
  Mat gram = Mat::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(a.adjoint());
  Mat full = gram.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Mat> eig(full);
  if (eig.info() != Eigen::Success)
    fail(ErrorKind::numerical, str_cat("SVD decomposition failed for window t=",
                                       window.t_center_s, " s"));

  SvdSplit out;
  out.rank = k;
  out.singular_values.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    out.singular_values[static_cast<std::size_t>(i)] =
        std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));

  out.filtered = window;
  out.rejected = window;
  Eigen::Map<Mat> rej(out.rejected.data.data(), npx, n);
  Eigen::Map<Mat> filt(out.filtered.data.data(), npx, n);
  if (k == 0) {
    rej.setZero();
    return out;
  }
  const Mat vk = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(k));
  const Mat proj = a * vk;
  rej.noalias() = proj * vk.adjoint();
  filt = a - rej;
  return out;
}

inline ComplexWindow svd_clutter_filter(const ComplexWindow& window, const SvdFilterSpec& spec,
                                        double sample_rate_hz) {
  const std::size_t k = rejection_rank(spec, sample_rate_hz, window.n_win);
  if (k == 0) return window;
  return svd_split(window, k).filtered;
}

}  // namespace rcldh

#endif  // RCLDH_SVDFILTER_HPP
