#include "qkdsf/tags.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>

#include <fftw3.h>

#include "qkdsf/rng.hpp"

namespace qkdsf {

namespace {

constexpr double kPsPerSecond = 1e12;

double fwhm_to_sigma(double fwhm) {
  return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t s = master ^ (salt * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
  return splitmix64(s);
}

/// Poisson process over (0, T] with uniformly random channels.
std::vector<TagEvent> poisson_singles(double rate_cps, double t_max_ps,
                                      Rng& rng) {
  std::vector<TagEvent> events;
  if (rate_cps <= 0.0) return events;
  const double rate_per_ps = rate_cps / kPsPerSecond;
  events.reserve(static_cast<std::size_t>(
      rate_per_ps * t_max_ps + 5.0 * std::sqrt(rate_per_ps * t_max_ps) + 16.0));
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate_per_ps);
    if (t > t_max_ps) break;
    events.push_back({static_cast<std::int64_t>(std::llround(t)),
                      static_cast<Channel>(rng.uniform_index(4))});
  }
  return events;
}

std::vector<TagEvent> merge_streams(std::vector<TagEvent>&& a,
                                    std::vector<TagEvent>&& b) {
  std::vector<TagEvent> out;
  out.resize(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin(),
             [](const TagEvent& x, const TagEvent& y) { return x.t_ps < y.t_ps; });
  return out;
}

struct FftwRealBuffer {
  double* data = nullptr;
  explicit FftwRealBuffer(std::size_t n)
      : data(fftw_alloc_real(n)) {
    std::memset(data, 0, n * sizeof(double));
  }
  ~FftwRealBuffer() { fftw_free(data); }
  FftwRealBuffer(const FftwRealBuffer&) = delete;
  FftwRealBuffer& operator=(const FftwRealBuffer&) = delete;
};

struct FftwComplexBuffer {
  fftw_complex* data = nullptr;
  explicit FftwComplexBuffer(std::size_t n)
      : data(fftw_alloc_complex(n)) {}
  ~FftwComplexBuffer() { fftw_free(data); }
  FftwComplexBuffer(const FftwComplexBuffer&) = delete;
  FftwComplexBuffer& operator=(const FftwComplexBuffer&) = delete;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Coarse Bob-minus-Alice offset from a binned FFT cross-correlation of a
/// record prefix. Detection statistic: best 4-bin sliding sum, which keeps
/// the true peak intact even when drift smears it across bins.
double coarse_offset(const TagStream& alice, const TagStream& bob,
                     const SyncOptions& opt) {
  if (alice.events.empty() || bob.events.empty())
    throw NoPeakError("synchronize: empty stream");

  const double bin = opt.coarse_bin_ps;
  const std::int64_t lag_bins =
      static_cast<std::int64_t>(std::ceil(opt.coarse_range_ps / bin));
  const std::int64_t a_start = alice.events.front().t_ps;
  const double span_ps =
      static_cast<double>(alice.events.back().t_ps - a_start);
  const double chunk_ps =
      std::min(opt.coarse_chunk_s * kPsPerSecond, std::max(span_ps, bin));
  const std::int64_t data_bins =
      static_cast<std::int64_t>(std::ceil(chunk_ps / bin));
  const std::size_t n =
      next_pow2(static_cast<std::size_t>(data_bins + 2 * lag_bins + 4));

  FftwRealBuffer a_binned(n), b_binned(n), corr(n);
  FftwComplexBuffer a_spec(n / 2 + 1), b_spec(n / 2 + 1);

  for (const TagEvent& e : alice.events) {
    const std::int64_t i =
        static_cast<std::int64_t>((e.t_ps - a_start) / static_cast<std::int64_t>(bin));
    if (i >= data_bins) break;
    if (i >= 0) a_binned.data[i] += 1.0;
  }
  // Bob bins shifted by +lag_bins so negative lags are representable.
  for (const TagEvent& e : bob.events) {
    const double pos = static_cast<double>(e.t_ps - a_start) / bin +
                       static_cast<double>(lag_bins);
    if (pos < 0.0) continue;
    const std::int64_t i = static_cast<std::int64_t>(pos);
    if (i >= data_bins + 2 * lag_bins) break;
    b_binned.data[i] += 1.0;
  }

  fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), a_binned.data,
                                      a_spec.data, FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), b_binned.data,
                                      b_spec.data, FFTW_ESTIMATE);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t i = 0; i < n / 2 + 1; ++i) {
    // conj(A) * B accumulates sum_i a[i] b[i + m].
    const double re = a_spec.data[i][0] * b_spec.data[i][0] +
                      a_spec.data[i][1] * b_spec.data[i][1];
    const double im = a_spec.data[i][0] * b_spec.data[i][1] -
                      a_spec.data[i][1] * b_spec.data[i][0];
    a_spec.data[i][0] = re;
    a_spec.data[i][1] = im;
  }
  fftw_plan pc = fftw_plan_dft_c2r_1d(static_cast<int>(n), a_spec.data,
                                      corr.data, FFTW_ESTIMATE);
  fftw_execute(pc);
  fftw_destroy_plan(pa);
  fftw_destroy_plan(pb);
  fftw_destroy_plan(pc);

  const std::int64_t n_lags = 2 * lag_bins + 1;
  std::vector<double> sums(static_cast<std::size_t>(n_lags), 0.0);
  for (std::int64_t m = 0; m < n_lags; ++m) {
    double s = 0.0;
    for (std::int64_t k = 0; k < 4; ++k) s += corr.data[m + k];
    sums[static_cast<std::size_t>(m)] = s;
  }
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(sums.begin(), sums.end()) -
                               sums.begin());

  double mean = 0.0, var = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < sums.size(); ++m) {
    if (m + 8 > best && m < best + 8) continue;
    mean += sums[m];
    ++count;
  }
  if (count < 16) throw NoPeakError("synchronize: correlogram too short");
  mean /= static_cast<double>(count);
  for (std::size_t m = 0; m < sums.size(); ++m) {
    if (m + 8 > best && m < best + 8) continue;
    var += (sums[m] - mean) * (sums[m] - mean);
  }
  var /= static_cast<double>(count - 1);
  const double sigma = std::sqrt(std::max(var, 1e-12));

  if (sums[best] - mean < opt.peak_sigma_threshold * sigma)
    throw NoPeakError("synchronize: no correlation peak above threshold");

  // Center of the winning 4-bin window, relative to lag zero.
  return (static_cast<double>(best) + 1.5 -
          static_cast<double>(lag_bins)) * bin;
}

struct WindowFix {
  double t_center_ps = 0.0;
  double offset_ps = 0.0;
};

/// Histogram of (t_bob - t_alice - prediction) over one tracking window,
/// peak-validated, then refined to a background-subtracted centroid.
/// Returns false when the window shows no significant peak.
bool measure_window(const TagStream& alice, const TagStream& bob,
                    std::int64_t w_start, std::int64_t w_end,
                    double prediction, const SyncOptions& opt,
                    WindowFix& fix) {
  const double range = opt.fine_range_ps;
  const double bin = opt.fine_bin_ps;
  const std::size_t n_bins =
      static_cast<std::size_t>(std::ceil(2.0 * range / bin));
  std::vector<std::uint32_t> hist(n_bins, 0);

  auto a_lo = std::lower_bound(
      alice.events.begin(), alice.events.end(), w_start,
      [](const TagEvent& e, std::int64_t t) { return e.t_ps < t; });
  auto a_hi = std::lower_bound(
      a_lo, alice.events.end(), w_end,
      [](const TagEvent& e, std::int64_t t) { return e.t_ps < t; });
  if (a_lo == a_hi) return false;

  std::size_t b_idx = static_cast<std::size_t>(
      std::lower_bound(bob.events.begin(), bob.events.end(),
                       static_cast<std::int64_t>(
                           static_cast<double>(a_lo->t_ps) + prediction - range),
                       [](const TagEvent& e, std::int64_t t) {
                         return e.t_ps < t;
                       }) -
      bob.events.begin());

  for (auto a = a_lo; a != a_hi; ++a) {
    const double lo = static_cast<double>(a->t_ps) + prediction - range;
    const double hi = static_cast<double>(a->t_ps) + prediction + range;
    while (b_idx < bob.events.size() &&
           static_cast<double>(bob.events[b_idx].t_ps) < lo)
      ++b_idx;
    for (std::size_t j = b_idx; j < bob.events.size(); ++j) {
      const double tb = static_cast<double>(bob.events[j].t_ps);
      if (tb > hi) break;
      const std::size_t k = static_cast<std::size_t>((tb - lo) / bin);
      if (k < n_bins) ++hist[k];
    }
  }

  const std::size_t best =
      static_cast<std::size_t>(std::max_element(hist.begin(), hist.end()) -
                               hist.begin());
  double mean = 0.0, var = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (k + 4 > best && k < best + 4) continue;
    mean += hist[k];
    ++count;
  }
  if (count < 16) return false;
  mean /= static_cast<double>(count);
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (k + 4 > best && k < best + 4) continue;
    var += (hist[k] - mean) * (hist[k] - mean);
  }
  var /= static_cast<double>(count - 1);
  const double sigma = std::sqrt(std::max(var, 0.25));
  if (hist[best] - mean < opt.peak_sigma_threshold * sigma) return false;

  // Refinement: 25 ps bins within +-100 ns of the coarse peak bin, then a
  // floor-subtracted centroid of the core.
  const double peak_center =
      prediction - range + (static_cast<double>(best) + 0.5) * bin;
  const double r2 = 100e3;
  const double bin2 = 25.0;
  const std::size_t n2 = static_cast<std::size_t>(2.0 * r2 / bin2);
  std::vector<std::uint32_t> hist2(n2, 0);

  b_idx = static_cast<std::size_t>(
      std::lower_bound(bob.events.begin(), bob.events.end(),
                       static_cast<std::int64_t>(
                           static_cast<double>(a_lo->t_ps) + peak_center - r2),
                       [](const TagEvent& e, std::int64_t t) {
                         return e.t_ps < t;
                       }) -
      bob.events.begin());
  for (auto a = a_lo; a != a_hi; ++a) {
    const double lo = static_cast<double>(a->t_ps) + peak_center - r2;
    const double hi = static_cast<double>(a->t_ps) + peak_center + r2;
    while (b_idx < bob.events.size() &&
           static_cast<double>(bob.events[b_idx].t_ps) < lo)
      ++b_idx;
    for (std::size_t j = b_idx; j < bob.events.size(); ++j) {
      const double tb = static_cast<double>(bob.events[j].t_ps);
      if (tb > hi) break;
      const std::size_t k = static_cast<std::size_t>((tb - lo) / bin2);
      if (k < n2) ++hist2[k];
    }
  }

  const std::size_t best2 =
      static_cast<std::size_t>(std::max_element(hist2.begin(), hist2.end()) -
                               hist2.begin());
  std::vector<std::uint32_t> floor_sample(hist2);
  std::nth_element(floor_sample.begin(),
                   floor_sample.begin() + floor_sample.size() / 2,
                   floor_sample.end());
  const double floor = floor_sample[floor_sample.size() / 2];

  // +-1.5 ns core around the refined peak.
  const std::int64_t core = 60;
  double weight = 0.0, moment = 0.0;
  for (std::int64_t k = static_cast<std::int64_t>(best2) - core;
       k <= static_cast<std::int64_t>(best2) + core; ++k) {
    if (k < 0 || k >= static_cast<std::int64_t>(n2)) continue;
    const double w = std::max(0.0, hist2[static_cast<std::size_t>(k)] - floor);
    const double x = peak_center - r2 + (static_cast<double>(k) + 0.5) * bin2;
    weight += w;
    moment += w * x;
  }
  if (weight <= 0.0) return false;

  fix.t_center_ps = 0.5 * static_cast<double>(w_start + w_end);
  fix.offset_ps = moment / weight;
  return true;
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual_rms = 0.0;
  int points = 0;
};

LineFit fit_line(const std::vector<WindowFix>& fixes) {
  LineFit out;
  out.points = static_cast<int>(fixes.size());
  double sx = 0.0, sy = 0.0;
  for (const WindowFix& f : fixes) {
    sx += f.t_center_ps;
    sy += f.offset_ps;
  }
  const double n = static_cast<double>(fixes.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const WindowFix& f : fixes) {
    sxx += (f.t_center_ps - mx) * (f.t_center_ps - mx);
    sxy += (f.t_center_ps - mx) * (f.offset_ps - my);
  }
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.intercept = my - out.slope * mx;
  double ss = 0.0;
  for (const WindowFix& f : fixes) {
    const double r = f.offset_ps - (out.intercept + out.slope * f.t_center_ps);
    ss += r * r;
  }
  out.residual_rms = std::sqrt(ss / n);
  return out;
}

/// One tracking pass: window peak fixes plus a linear offset(t) fit.
LineFit tracking_pass(const TagStream& alice, const TagStream& bob,
                      double initial_prediction, const SyncOptions& opt) {
  const std::int64_t a_first = alice.events.front().t_ps;
  const std::int64_t a_last = alice.events.back().t_ps;
  const std::int64_t span = a_last - a_first;
  const std::int64_t w_len = static_cast<std::int64_t>(
      std::min(opt.window_length_s * kPsPerSecond,
               static_cast<double>(span)));
  const int n_windows =
      std::max(1, std::min(opt.windows,
                           static_cast<int>(span / std::max<std::int64_t>(
                                                       w_len, 1))));

  std::vector<WindowFix> fixes;
  double prediction = initial_prediction;
  for (int j = 0; j < n_windows; ++j) {
    const std::int64_t start =
        n_windows == 1
            ? a_first
            : a_first + (span - w_len) * j / (n_windows - 1);
    WindowFix fix;
    if (measure_window(alice, bob, start, start + w_len, prediction, opt,
                       fix)) {
      fixes.push_back(fix);
      prediction = fix.offset_ps;
    }
  }
  if (fixes.size() < 2) {
    if (fixes.size() == 1) {
      LineFit out;
      out.intercept = fixes[0].offset_ps;
      out.slope = 0.0;
      out.points = 1;
      return out;
    }
    throw NoPeakError("synchronize: pair peak lost during tracking");
  }
  return fit_line(fixes);
}

TagStream apply_clock(const TagStream& bob, double offset_ps, double drift) {
  TagStream out;
  out.site = bob.site;
  out.span_s = bob.span_s;
  out.events.resize(bob.events.size());
  const double scale = 1.0 / (1.0 + drift);
  for (std::size_t i = 0; i < bob.events.size(); ++i) {
    out.events[i].ch = bob.events[i].ch;
    out.events[i].t_ps = static_cast<std::int64_t>(std::llround(
        (static_cast<double>(bob.events[i].t_ps) - offset_ps) * scale));
  }
  return out;
}

}  // namespace

void TagStream::validate() const {
  if (span_s <= 0.0) throw std::domain_error("TagStream: span_s must be > 0");
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].t_ps < events[i - 1].t_ps)
      throw std::domain_error("TagStream: timestamps must be nondecreasing");
}

void SimConfig::validate() const {
  link.validate();
  sys.validate();
  op.validate();
  if (duration_s <= 0.0)
    throw std::domain_error("SimConfig: duration_s must be > 0");
  if (std::abs(clock_drift) >= 1e-4)
    throw std::domain_error("SimConfig: |clock_drift| must be < 1e-4");
}

TagPair simulate_tags(const SimConfig& cfg) {
  cfg.validate();
  const RateBreakdown bd = evaluate_point(cfg.link, cfg.sys, cfg.op);

  const double alice_topup_cps =
      cfg.sys.s_a_measured_cps - cfg.sys.eta_a * bd.s_bob_true_cps;
  if (alice_topup_cps < 0.0)
    throw std::domain_error(
        "simulate_tags: s_a_measured_cps below the pair-borne Alice rate");

  const double t_max_ps = cfg.duration_s * kPsPerSecond;
  Rng pair_rng = Rng::substream(cfg.seed, 1);
  Rng alice_rng = Rng::substream(cfg.seed, 2);
  Rng bob_rng = Rng::substream(cfg.seed, 3);

  std::vector<TagEvent> alice_pairs, bob_pairs;
  if (bd.s_bob_true_cps > 0.0) {
    const double rate_per_ps = bd.s_bob_true_cps / kPsPerSecond;
    const double sigma_ps = fwhm_to_sigma(cfg.sys.jitter_fwhm_ps);
    const std::size_t expect = static_cast<std::size_t>(
        rate_per_ps * t_max_ps + 5.0 * std::sqrt(rate_per_ps * t_max_ps) + 16.0);
    bob_pairs.reserve(expect);
    alice_pairs.reserve(static_cast<std::size_t>(cfg.sys.eta_a * expect) + 16);
    double t = 0.0;
    for (;;) {
      t += pair_rng.exponential(rate_per_ps);
      if (t > t_max_ps) break;
      const double tb = t + pair_rng.normal(0.0, sigma_ps);
      const bool alice_detects = pair_rng.bernoulli(cfg.sys.eta_a);
      const bool a_basis = pair_rng.bernoulli(0.5);
      const bool b_basis = pair_rng.bernoulli(0.5);
      const bool a_index = pair_rng.bernoulli(0.5);
      bool b_index;
      if (a_basis == b_basis) {
        const bool error = pair_rng.bernoulli(cfg.sys.e_pol);
        b_index = error ? a_index : !a_index;  // entangled pairs anticorrelate
      } else {
        b_index = pair_rng.bernoulli(0.5);
      }
      if (alice_detects)
        alice_pairs.push_back(
            {static_cast<std::int64_t>(std::llround(t)),
             static_cast<Channel>((a_basis ? 2 : 0) + (a_index ? 1 : 0))});
      bob_pairs.push_back(
          {static_cast<std::int64_t>(std::llround(tb)),
           static_cast<Channel>((b_basis ? 2 : 0) + (b_index ? 1 : 0))});
    }
    // Jitter only reorders within a few ns; restore order cheaply.
    std::sort(bob_pairs.begin(), bob_pairs.end(),
              [](const TagEvent& x, const TagEvent& y) { return x.t_ps < y.t_ps; });
  }

  std::vector<TagEvent> alice_singles =
      poisson_singles(alice_topup_cps, t_max_ps, alice_rng);
  std::vector<TagEvent> bob_singles = poisson_singles(
      bd.s_bob_background_cps + cfg.sys.dark_bob_cps, t_max_ps, bob_rng);

  TagPair out;
  out.alice.site = Site::Alice;
  out.alice.span_s = cfg.duration_s;
  out.alice.events =
      merge_streams(std::move(alice_pairs), std::move(alice_singles));
  out.bob.site = Site::Bob;
  out.bob.span_s = cfg.duration_s;
  out.bob.events = merge_streams(std::move(bob_pairs), std::move(bob_singles));

  if (cfg.clock_offset_ps != 0.0 || cfg.clock_drift != 0.0) {
    const double scale = 1.0 + cfg.clock_drift;
    for (TagEvent& e : out.bob.events)
      e.t_ps = static_cast<std::int64_t>(
          std::llround(scale * static_cast<double>(e.t_ps) + cfg.clock_offset_ps));
  }
  return out;
}

SyncResult synchronize(const TagStream& alice, const TagStream& bob,
                       const SyncOptions& options) {
  if (alice.events.empty() || bob.events.empty())
    throw NoPeakError("synchronize: empty stream");

  const double coarse = coarse_offset(alice, bob, options);

  // Pass 1 absorbs the bulk of offset and drift; within-window drift smear
  // limits its offset precision, so pass 2 repeats the tracking on the
  // corrected stream where the peak is jitter-limited.
  const LineFit fit1 = tracking_pass(alice, bob, coarse, options);
  TagStream corrected = apply_clock(bob, fit1.intercept, fit1.slope);
  const LineFit fit2 = tracking_pass(alice, corrected, 0.0, options);

  SyncResult out;
  out.drift = (1.0 + fit1.slope) * (1.0 + fit2.slope) - 1.0;
  out.offset_ps = fit1.intercept + fit2.intercept * (1.0 + fit1.slope);
  out.corrected_bob = apply_clock(corrected, fit2.intercept, fit2.slope);
  out.windows_used = fit2.points;
  out.residual_rms_ps = fit2.residual_rms;
  return out;
}

CoincidenceResult extract_coincidences(const TagStream& alice,
                                       const TagStream& bob, double tau_ps,
                                       double f_ec) {
  if (tau_ps <= 0.0)
    throw std::domain_error("extract_coincidences: tau_ps must be > 0");

  CoincidenceResult out;
  // |t_a - t_b| <= tau/2, inclusive; evaluated as 2|dt| <= tau in integer ps.
  const std::int64_t two_dt_max =
      static_cast<std::int64_t>(std::llround(tau_ps));

  std::size_t b_lo = 0;
  for (const TagEvent& a : alice.events) {
    const std::int64_t lo2 = 2 * a.t_ps - two_dt_max;
    const std::int64_t hi2 = 2 * a.t_ps + two_dt_max;
    while (b_lo < bob.events.size() && 2 * bob.events[b_lo].t_ps < lo2)
      ++b_lo;
    for (std::size_t j = b_lo; j < bob.events.size(); ++j) {
      if (2 * bob.events[j].t_ps > hi2) break;
      ++out.matrix.counts[static_cast<std::size_t>(a.ch)]
                         [static_cast<std::size_t>(bob.events[j].ch)];
    }
  }

  double duration = std::max(alice.span_s, bob.span_s);
  if (duration <= 0.0 && !alice.events.empty() && !bob.events.empty()) {
    const std::int64_t first =
        std::min(alice.events.front().t_ps, bob.events.front().t_ps);
    const std::int64_t last =
        std::max(alice.events.back().t_ps, bob.events.back().t_ps);
    duration = static_cast<double>(last - first) / kPsPerSecond;
  }
  out.duration_s = duration;
  out.matrix.duration_s = duration;
  out.total_coincidences = out.matrix.total();

  const auto& c = out.matrix.counts;
  const double right_hv = static_cast<double>(c[0][1] + c[1][0]);
  const double wrong_hv = static_cast<double>(c[0][0] + c[1][1]);
  const double right_da = static_cast<double>(c[2][3] + c[3][2]);
  const double wrong_da = static_cast<double>(c[2][2] + c[3][3]);
  const double sifted = right_hv + wrong_hv + right_da + wrong_da;

  out.e_hv = (right_hv + wrong_hv) > 0.0 ? wrong_hv / (right_hv + wrong_hv) : 0.0;
  out.e_da = (right_da + wrong_da) > 0.0 ? wrong_da / (right_da + wrong_da) : 0.0;
  if (duration > 0.0) {
    out.c_measured_cps = static_cast<double>(out.total_coincidences) / duration;
    out.c_sift_cps = sifted / duration;
    out.key_rate_bps =
        secure_key_rate(out.c_sift_cps, out.e_hv, out.e_da, f_ec).clamped_bps;
  }
  return out;
}

std::vector<ScanPoint> scan_pipeline(const SimConfig& cfg,
                                     std::span<const double> theta_values_urad) {
  std::vector<ScanPoint> points;
  points.reserve(theta_values_urad.size());
  for (std::size_t i = 0; i < theta_values_urad.size(); ++i) {
    SimConfig point_cfg = cfg;
    point_cfg.op.theta_sf_urad = theta_values_urad[i];
    point_cfg.seed = derive_seed(cfg.seed, 1000 + i);
    const TagPair streams = simulate_tags(point_cfg);
    const SyncResult sync = synchronize(streams.alice, streams.bob);
    const CoincidenceResult result = extract_coincidences(
        streams.alice, sync.corrected_bob, cfg.op.tau_ps, cfg.sys.f_ec);
    points.push_back(
        {theta_values_urad[i], result.key_rate_bps, ScanKind::KeyRate});
  }
  return points;
}

}  // namespace qkdsf
