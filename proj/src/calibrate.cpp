#include "qkdsf/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qkdsf/rng.hpp"

namespace qkdsf {

namespace {

constexpr double kBigPenalty = 1e300;

double sum_squared_residuals(std::span<const ScanPoint> points,
                             const std::function<double(double)>& model) {
  double sse = 0.0;
  for (const ScanPoint& p : points) {
    const double r = model(p.theta_sf_urad) - p.value;
    sse += r * r;
  }
  return sse;
}

void check_scan(std::span<const ScanPoint> points, ScanKind expected,
                std::size_t min_points, const char* what) {
  if (points.size() < min_points)
    throw std::invalid_argument(std::string(what) + ": too few scan points");
  const double theta0 = points.front().theta_sf_urad;
  bool all_same = true;
  for (const ScanPoint& p : points) {
    if (p.kind != expected)
      throw std::invalid_argument(std::string(what) + ": wrong scan kind");
    if (p.theta_sf_urad < 0.0 || p.value < 0.0)
      throw std::domain_error(std::string(what) + ": negative scan data");
    if (p.theta_sf_urad != theta0) all_same = false;
  }
  if (all_same)
    throw std::invalid_argument(std::string(what) +
                                ": degenerate scan, all theta_sf identical");
}

/// theta at which the scan first reaches the given fraction of its maximum,
/// linearly interpolated; start heuristic for gamma and delta.
double theta_at_fraction(std::span<const ScanPoint> points, double fraction) {
  std::vector<ScanPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScanPoint& a, const ScanPoint& b) {
              return a.theta_sf_urad < b.theta_sf_urad;
            });
  double vmax = 0.0;
  for (const ScanPoint& p : sorted) vmax = std::max(vmax, p.value);
  const double target = fraction * vmax;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].value >= target) {
      const double v0 = sorted[i - 1].value, v1 = sorted[i].value;
      const double t0 = sorted[i - 1].theta_sf_urad,
                   t1 = sorted[i].theta_sf_urad;
      if (v1 > v0)
        return t0 + (t1 - t0) * (target - v0) / (v1 - v0);
      return t1;
    }
  }
  return sorted.back().theta_sf_urad;
}

struct MultiStartOutcome {
  detail::SimplexResult best;
  bool any_converged = false;
};

MultiStartOutcome run_multi_start(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<std::vector<double>>& starts,
    const std::vector<double>& step_fraction, const FitOptions& options) {
  MultiStartOutcome out;
  out.best.fx = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::vector<double> step(start.size());
    for (std::size_t i = 0; i < start.size(); ++i)
      step[i] = std::max(std::abs(start[i]), 1e-6) * step_fraction[i];
    detail::SimplexResult r =
        detail::nelder_mead(objective, start, step, options.simplex_tolerance,
                            options.max_iterations);
    if (r.fx < out.best.fx) out.best = r;
    out.any_converged = out.any_converged || r.converged;
  }
  return out;
}

/// Residual bootstrap: refit on y_hat + resampled residuals, seeded
/// deterministically, and report the sample standard deviation per
/// parameter. Refits start from the point estimate.
std::vector<double> bootstrap_errors(
    std::span<const ScanPoint> points, const std::vector<double>& estimate,
    const std::function<double(std::span<const double>, double)>& model,
    const FitOptions& options) {
  const std::size_t n_params = estimate.size();
  if (options.bootstrap_resamples <= 0 || points.empty())
    return std::vector<double>(n_params, 0.0);

  std::vector<double> fitted(points.size());
  std::vector<double> residuals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    fitted[i] = model(estimate, points[i].theta_sf_urad);
    residuals[i] = points[i].value - fitted[i];
  }

  Rng rng(options.bootstrap_seed);
  std::vector<std::vector<double>> samples;
  samples.reserve(options.bootstrap_resamples);
  std::vector<ScanPoint> resampled(points.begin(), points.end());
  for (int b = 0; b < options.bootstrap_resamples; ++b) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t j = rng.uniform_index(static_cast<std::uint32_t>(points.size()));
      resampled[i].value = fitted[i] + residuals[j];
    }
    auto objective = [&](std::span<const double> x) {
      return sum_squared_residuals(
          resampled, [&](double theta) { return model(x, theta); });
    };
    std::vector<double> step(n_params);
    for (std::size_t i = 0; i < n_params; ++i)
      step[i] = std::max(std::abs(estimate[i]), 1e-6) * 0.05;
    detail::SimplexResult r = detail::nelder_mead(
        objective, estimate, step, options.simplex_tolerance,
        options.max_iterations);
    samples.push_back(r.x);
  }

  std::vector<double> errors(n_params, 0.0);
  for (std::size_t p = 0; p < n_params; ++p) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[p];
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) var += (s[p] - mean) * (s[p] - mean);
    if (samples.size() > 1)
      var /= static_cast<double>(samples.size() - 1);
    errors[p] = std::sqrt(var);
  }
  return errors;
}

}  // namespace

std::uint64_t CoincidenceMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t c : row) t += c;
  return t;
}

double FitResult::param(const std::string& name) const {
  for (const FitParam& p : params)
    if (p.name == name) return p.value;
  throw std::invalid_argument("FitResult: unknown parameter " + name);
}

double FitResult::param_error(const std::string& name) const {
  for (const FitParam& p : params)
    if (p.name == name) return p.std_error;
  throw std::invalid_argument("FitResult: unknown parameter " + name);
}

FitResult fit_noise_scan(std::span<const ScanPoint> points,
                         std::optional<double> fix_gamma_urad,
                         const FitOptions& options) {
  check_scan(points, ScanKind::NoiseRate, 4, "fit_noise_scan");
  if (fix_gamma_urad && *fix_gamma_urad <= 0.0)
    throw std::domain_error("fit_noise_scan: fixed gamma must be > 0");

  double vmax = 0.0;
  for (const ScanPoint& p : points) vmax = std::max(vmax, p.value);

  FitResult out;
  if (vmax == 0.0) {
    // No noise at all: B0 = 0, gamma carries no information.
    out.params.push_back({"b0_cps", 0.0, 0.0, "cps"});
    if (!fix_gamma_urad) {
      out.params.push_back({"gamma_urad", 0.0, 0.0, "urad"});
      out.converged = false;
    } else {
      out.params.push_back({"gamma_urad", *fix_gamma_urad, 0.0, "urad"});
      out.converged = true;
    }
    return out;
  }

  const bool free_gamma = !fix_gamma_urad.has_value();
  auto model = [&](std::span<const double> x, double theta) {
    const double b0 = x[0];
    const double gamma = free_gamma ? x[1] : *fix_gamma_urad;
    if (b0 < 0.0 || gamma <= 0.0) return kBigPenalty;
    return noise_through_filter(theta, b0, gamma);
  };
  auto objective = [&](std::span<const double> x) {
    if (x[0] < 0.0 || (free_gamma && x[1] <= 0.0)) return kBigPenalty;
    return sum_squared_residuals(
        points, [&](double theta) { return model(x, theta); });
  };

  const double gamma0 = free_gamma ? theta_at_fraction(points, 0.5) : *fix_gamma_urad;
  std::vector<std::vector<double>> starts;
  if (free_gamma) {
    starts = {{vmax, gamma0},
              {1.2 * vmax, 0.7 * gamma0},
              {0.9 * vmax, 1.5 * gamma0},
              {1.5 * vmax, gamma0},
              {vmax, 0.5 * gamma0}};
  } else {
    starts = {{vmax}, {1.5 * vmax}, {0.5 * vmax}, {2.0 * vmax}, {0.1 * vmax}};
  }
  const std::vector<double> step_fraction(free_gamma ? 2 : 1, 0.25);

  MultiStartOutcome ms = run_multi_start(objective, starts, step_fraction, options);

  out.iterations = ms.best.iterations;
  out.converged = ms.any_converged;
  out.residual_norm =
      std::sqrt(ms.best.fx / static_cast<double>(points.size()));
  const double b0 = ms.best.x[0];
  const double gamma = free_gamma ? ms.best.x[1] : *fix_gamma_urad;

  std::vector<double> errs = bootstrap_errors(points, ms.best.x, model, options);
  out.params.push_back({"b0_cps", b0, errs[0], "cps"});
  out.params.push_back(
      {"gamma_urad", gamma, free_gamma ? errs[1] : 0.0, "urad"});
  return out;
}

FitResult fit_key_rate_scan(std::span<const ScanPoint> points, double b0_cps,
                            const SystemConstants& sys,
                            const OperatingPoint& op_template,
                            double gamma_urad, const FitOptions& options) {
  check_scan(points, ScanKind::KeyRate, 5, "fit_key_rate_scan");
  if (b0_cps < 0.0)
    throw std::domain_error("fit_key_rate_scan: b0_cps must be >= 0");
  if (gamma_urad <= 0.0)
    throw std::domain_error("fit_key_rate_scan: gamma_urad must be > 0");
  sys.validate();

  auto model = [&](std::span<const double> x, double theta) {
    const double s0 = x[0], delta = x[1];
    if (s0 < 0.0 || delta <= 0.0) return kBigPenalty;
    LinkConditions link{s0, delta, b0_cps, gamma_urad};
    OperatingPoint op = op_template;
    op.theta_sf_urad = theta;
    return evaluate_point(link, sys, op).key_rate_bps;
  };
  auto objective = [&](std::span<const double> x) {
    if (x[0] < 0.0 || x[1] <= 0.0) return kBigPenalty;
    return sum_squared_residuals(
        points, [&](double theta) { return model(x, theta); });
  };

  // Plateau-based starts: the key rate near the plateau is roughly
  // C_sift * entropy factor = 0.5 * eta_c * eta_A * S0 * 0.55.
  double plateau = 0.0;
  for (const ScanPoint& p : points) plateau = std::max(plateau, p.value);
  const double eta_c = window_efficiency(op_template.tau_ps, sys.jitter_fwhm_ps);
  const double s0_guess =
      plateau / std::max(0.5 * eta_c * sys.eta_a * 0.55, 1e-12);
  const double delta_guess = theta_at_fraction(points, 0.58);

  const std::vector<std::vector<double>> starts = {
      {s0_guess, delta_guess},
      {2.0 * s0_guess, delta_guess},
      {0.5 * s0_guess, delta_guess},
      {s0_guess, 2.0 * delta_guess},
      {s0_guess, 0.6 * delta_guess}};
  const std::vector<double> step_fraction = {0.25, 0.25};

  MultiStartOutcome ms = run_multi_start(objective, starts, step_fraction, options);

  FitResult out;
  out.iterations = ms.best.iterations;
  out.converged = ms.any_converged;
  out.residual_norm =
      std::sqrt(ms.best.fx / static_cast<double>(points.size()));

  std::vector<double> errs = bootstrap_errors(points, ms.best.x, model, options);
  out.params.push_back({"s0_cps", ms.best.x[0], errs[0], "cps"});
  out.params.push_back({"delta_urad", ms.best.x[1], errs[1], "urad"});
  return out;
}

double estimate_eta_a(double c_measured_cps, double s_a_cps, double s_b_cps,
                      const SystemConstants& sys, double tau_ps) {
  sys.validate();
  if (c_measured_cps < 0.0 || s_a_cps < 0.0 || s_b_cps < 0.0)
    throw std::domain_error("estimate_eta_a: rates must be >= 0");
  const double c_acc = accidental_rate(s_a_cps, s_b_cps, tau_ps);
  if (c_measured_cps <= c_acc)
    throw std::domain_error(
        "estimate_eta_a: measured coincidences do not exceed accidentals");
  if (s_b_cps <= sys.dark_bob_cps)
    throw std::domain_error(
        "estimate_eta_a: Bob singles do not exceed dark counts");
  const double eta_c = window_efficiency(tau_ps, sys.jitter_fwhm_ps);
  return (c_measured_cps - c_acc) / (eta_c * (s_b_cps - sys.dark_bob_cps));
}

EPolEstimate estimate_e_pol(const CoincidenceMatrix& m, double c_acc_cps) {
  if (m.duration_s <= 0.0)
    throw std::domain_error("estimate_e_pol: duration must be > 0");
  if (c_acc_cps < 0.0)
    throw std::domain_error("estimate_e_pol: c_acc_cps must be >= 0");

  // Channels (H, V, D, A): right = anticorrelated same-basis pairs.
  const auto& c = m.counts;
  const double right = static_cast<double>(c[0][1] + c[1][0] + c[2][3] + c[3][2]);
  const double wrong = static_cast<double>(c[0][0] + c[1][1] + c[2][2] + c[3][3]);
  const double sift = right + wrong;
  if (sift == 0.0)
    throw std::domain_error("estimate_e_pol: no same-basis coincidences");

  const double wrong_rate = wrong / m.duration_s;
  const double sift_rate = sift / m.duration_s;
  const double raw = (wrong_rate - 0.25 * c_acc_cps) / sift_rate;

  EPolEstimate out;
  out.value = std::clamp(raw, 0.0, 0.5);
  out.clamped = raw != out.value;
  return out;
}

namespace detail {

SimplexResult nelder_mead(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, std::span<const double> step,
    double rel_tolerance, int max_iterations, std::vector<double>* trace) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> vertex(n + 1,
                                          std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < n; ++i) vertex[i + 1][i] += step[i];
  std::vector<double> value(n + 1);
  for (std::size_t i = 0; i <= n; ++i) value[i] = objective(vertex[i]);

  std::vector<std::size_t> order(n + 1);
  SimplexResult result;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order[0], worst = order[n],
                      second_worst = order[n > 0 ? n - 1 : 0];
    if (trace) trace->push_back(value[best]);

    // Relative simplex extent around the best vertex.
    double extent = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        extent = std::max(extent,
                          std::abs(vertex[i][j] - vertex[best][j]) /
                              (1.0 + std::abs(vertex[best][j])));
    if (extent < rel_tolerance) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += vertex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = centroid[j] + t * (vertex[worst][j] - centroid[j]);
      return x;
    };

    std::vector<double> reflected = blend(-1.0);
    const double f_reflected = objective(reflected);
    if (f_reflected < value[best]) {
      std::vector<double> expanded = blend(-2.0);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = std::move(expanded);
        value[worst] = f_expanded;
      } else {
        vertex[worst] = std::move(reflected);
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = std::move(reflected);
      value[worst] = f_reflected;
      continue;
    }
    std::vector<double> contracted =
        f_reflected < value[worst] ? blend(-0.5) : blend(0.5);
    const double f_contracted = objective(contracted);
    if (f_contracted < std::min(value[worst], f_reflected)) {
      vertex[worst] = std::move(contracted);
      value[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j)
        vertex[i][j] = vertex[best][j] + 0.5 * (vertex[i][j] - vertex[best][j]);
      value[i] = objective(vertex[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (value[i] < value[best]) best = i;
  result.x = vertex[best];
  result.fx = value[best];
  result.iterations = iter;
  return result;
}

}  // namespace detail

}  // namespace qkdsf
