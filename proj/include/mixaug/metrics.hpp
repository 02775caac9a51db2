#pragma once

// Source-to-distortion ratios.
//
// sdr_global: plain energy ratio over the whole signal (both channels).
//
// sdr_bsseval_frames: the target component is the least-squares FIR filtering
// (filter_len taps, one filter per channel) of the reference that best matches
// the estimate. With the reference zero-extended the normal equations are
// symmetric Toeplitz in the reference autocorrelation; correlations come from
// zero-padded FFTs and the system is solved by Levinson recursion after
// diagonal loading. Energies are then accumulated per evaluation window.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/error.hpp"
#include "mixaug/fft.hpp"

namespace mixaug {

inline constexpr double kInfCapDb = 100.0;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void check_same_shape(const AudioClip& a, const AudioClip& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size()) throw Error(ErrorCode::length_mismatch, "reference and estimate lengths differ");
}

/// 10 log10((sum s^2 + eps) / (sum (s - s_hat)^2 + eps)), capped at `cap_db`.
inline double sdr_global(const AudioClip& reference, const AudioClip& estimate, double eps = 1e-9, double cap_db = kInfCapDb) {
  check_same_shape(reference, estimate);
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < reference.size(); ++i) {
      const double s = reference[c][i], d = s - static_cast<double>(estimate[c][i]);
      num += s * s;
      den += d * d;
    }
  return std::min(cap_db, 10.0 * std::log10((num + eps) / (den + eps)));
}

/// Solves T x = b for the symmetric Toeplitz matrix T with first column `r`.
/// Throws when a leading minor is singular.
inline std::vector<double> levinson_solve(std::span<const double> r, std::span<const double> b) {
  const std::size_t n = r.size();
  if (n == 0 || b.size() != n) throw Error(ErrorCode::invalid_argument, "levinson_solve size mismatch");
  if (!(r[0] != 0.0)) throw Error(ErrorCode::degenerate_signal, "singular Toeplitz system");
  std::vector<double> fwd{1.0 / r[0]}, x{b[0] / r[0]}, next;
  fwd.reserve(n);
  x.reserve(n);
  next.reserve(n);
  for (std::size_t m = 1; m < n; ++m) {
    // fwd solves T_m fwd = e_1; its reversal solves T_m bwd = e_m.
    double ef = 0.0;
    for (std::size_t i = 0; i < m; ++i) ef += r[m - i] * fwd[i];
    const double denom = 1.0 - ef * ef;
    if (!(std::abs(denom) > 1e-300)) throw Error(ErrorCode::degenerate_signal, "singular Toeplitz minor");
    next.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      next[i] += fwd[i] / denom;
      next[i + 1] -= ef * fwd[m - 1 - i] / denom;
    }
    fwd.swap(next);
    double ex = 0.0;
    for (std::size_t i = 0; i < m; ++i) ex += r[m - i] * x[i];
    x.push_back(0.0);
    const double step = b[m] - ex;
    for (std::size_t i = 0; i <= m; ++i) x[i] += step * fwd[m - i];
  }
  return x;
}

struct BssEvalConfig {
  std::size_t window = 44100;
  std::size_t hop = 44100;
  std::size_t filter_len = 512;
  double inf_cap_db = kInfCapDb;
  double loading = 1e-10;  // diagonal loading, relative to the zero-lag autocorrelation

  void validate() const {
    if (filter_len == 0 || window < filter_len) throw Error(ErrorCode::invalid_argument, "window must be >= filter_len > 0");
    if (hop == 0) throw Error(ErrorCode::invalid_argument, "hop must be positive");
  }
};

/// Least-squares FIR projection of one channel: returns the first
/// `reference.size()` samples of h * reference, where h (filter_len taps)
/// minimizes ||estimate - h * reference||^2 over the zero-extended support.
inline std::vector<double> fir_projection(std::span<const double> reference, std::span<const double> estimate,
                                          std::size_t filter_len, double loading) {
  const std::size_t n = reference.size();
  if (estimate.size() != n) throw Error(ErrorCode::length_mismatch, "projection inputs differ in length");
  double r0 = 0.0;
  for (double v : reference) r0 += v * v;
  if (r0 == 0.0) return std::vector<double>(n, 0.0);

  const RealFft fft(next_power_of_two(n + filter_len));
  std::vector<double> buf(fft.size(), 0.0), corr(fft.size());
  std::vector<cplx> sref(fft.bins()), sest(fft.bins()), prod(fft.bins());
  std::copy(reference.begin(), reference.end(), buf.begin());
  fft.forward(buf, sref);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(estimate.begin(), estimate.end(), buf.begin());
  fft.forward(buf, sest);

  for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = std::norm(sref[k]);
  fft.inverse(prod, corr);
  std::vector<double> r(corr.begin(), corr.begin() + static_cast<std::ptrdiff_t>(filter_len));
  r[0] = r0 * (1.0 + loading);
  for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = sest[k] * std::conj(sref[k]);
  fft.inverse(prod, corr);
  const std::vector<double> c(corr.begin(), corr.begin() + static_cast<std::ptrdiff_t>(filter_len));

  const auto h = levinson_solve(r, c);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(h.begin(), h.end(), buf.begin());
  fft.forward(buf, prod);
  for (std::size_t k = 0; k < prod.size(); ++k) prod[k] *= sref[k];
  fft.inverse(prod, corr);
  corr.resize(n);
  return corr;
}

inline double ratio_db(double target, double error, double cap_db) {
  if (target <= 0.0) return -cap_db;
  if (error <= 0.0) return cap_db;
  return std::clamp(10.0 * std::log10(target / error), -cap_db, cap_db);
}

/// Framewise SDR over windows [k*hop, k*hop + window). The distortion filter
/// is fitted once over the whole signal (time-invariant, per channel) and the
/// target/residual energies are then measured per window. Windows whose
/// reference is all zero yield NaN.
inline std::vector<double> sdr_bsseval_frames(const AudioClip& reference, const AudioClip& estimate, const BssEvalConfig& cfg = {}) {
  cfg.validate();
  check_same_shape(reference, estimate);
  if (reference.size() < cfg.window)
    throw Error(ErrorCode::out_of_range, "signal shorter than one evaluation window");
  if (energy(reference) == 0.0) throw Error(ErrorCode::degenerate_signal, "reference is silent");
  const std::size_t n = reference.size();
  const std::size_t frames = (n - cfg.window) / cfg.hop + 1;
  std::vector<double> target(frames, 0.0), error(frames, 0.0), ref_energy(frames, 0.0);
  std::vector<double> ref(n), est(n);
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::copy(reference[c].begin(), reference[c].end(), ref.begin());
    std::copy(estimate[c].begin(), estimate[c].end(), est.begin());
    const auto proj = fir_projection(ref, est, cfg.filter_len, cfg.loading);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t i = f * cfg.hop; i < f * cfg.hop + cfg.window; ++i) {
        const double e = est[i] - proj[i];
        target[f] += proj[i] * proj[i];
        error[f] += e * e;
        ref_energy[f] += ref[i] * ref[i];
      }
  }
  std::vector<double> out(frames);
  for (std::size_t f = 0; f < frames; ++f)
    out[f] = ref_energy[f] == 0.0 ? kNaN : ratio_db(target[f], error[f], cfg.inf_cap_db);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

/// numpy-style median of the finite values; NaN when there are none.
inline double finite_median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double finite_mean(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  return n == 0 ? kNaN : sum / static_cast<double>(n);
}

/// Scores of one source in one track.
struct SourceScore {
  std::string track;
  SourceType source = SourceType::vocals;
  std::vector<double> frames;  // framewise SDR; NaN marks a silent reference window
  double global_db = kNaN;

  std::size_t frames_silent() const {
    return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](double v) { return std::isnan(v); }));
  }
  std::size_t frames_evaluated() const { return frames.size() - frames_silent(); }
  double median_db() const { return finite_median(frames); }
};

struct SdrReport {
  std::vector<SourceScore> rows;                        // tracks x sources
  std::array<double, kNumSources> source_median{};      // median over track medians
  std::array<double, kNumSources> source_global{};      // mean over tracks
  double avg_median = kNaN;                             // mean over the four sources
  double avg_global = kNaN;
};

inline SdrReport aggregate(std::vector<SourceScore> rows) {
  if (rows.empty()) throw Error(ErrorCode::empty_input, "no scores to aggregate");
  SdrReport rep;
  for (std::size_t s = 0; s < kNumSources; ++s) {
    std::vector<double> medians, globals;
    for (const auto& r : rows)
      if (source_index(r.source) == s) {
        medians.push_back(r.median_db());
        globals.push_back(r.global_db);
      }
    rep.source_median[s] = finite_median(medians);
    rep.source_global[s] = finite_mean(globals);
  }
  double m = 0.0, g = 0.0;
  for (std::size_t s = 0; s < kNumSources; ++s) {
    m += rep.source_median[s];
    g += rep.source_global[s];
  }
  rep.avg_median = m / kNumSources;
  rep.avg_global = g / kNumSources;
  rep.rows = std::move(rows);
  return rep;
}

inline constexpr std::string_view kReportHeader = "track,source,frames_evaluated,frames_silent,median_sdr_db,global_sdr_db";
inline constexpr std::string_view kSummaryHeader = "source,median_sdr_db,global_sdr_db";

inline std::string report_to_csv(const SdrReport& rep) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : rep.rows)
    out << csv::checked_field(r.track) << ',' << source_name(r.source) << ',' << r.frames_evaluated() << ','
        << r.frames_silent() << ',' << csv::format_db(r.median_db()) << ',' << csv::format_db(r.global_db) << '\n';
  return out.str();
}

inline std::string summary_to_csv(const SdrReport& rep) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (std::size_t s = 0; s < kNumSources; ++s)
    out << kSourceNames[s] << ',' << csv::format_db(rep.source_median[s]) << ',' << csv::format_db(rep.source_global[s]) << '\n';
  out << "avg," << csv::format_db(rep.avg_median) << ',' << csv::format_db(rep.avg_global) << '\n';
  return out.str();
}

}  // namespace mixaug
