#pragma once

// Parameter extraction from measured or synthetic filter scans:
// (B0, gamma) from noise-only scans, (S0, delta) from key-rate scans,
// eta_A from a night measurement, and E_pol from a coincidence matrix.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkdsf/model.hpp"

namespace qkdsf {

enum class ScanKind { NoiseRate, KeyRate, SignalRate };

struct ScanPoint {
  double theta_sf_urad = 0.0;
  double value = 0.0;  // cps for noise/signal scans, bps for key-rate scans
  ScanKind kind = ScanKind::NoiseRate;
};

/// 4x4 coincidence counts between Alice channel i and Bob channel j,
/// channels ordered (H, V, D, A).
struct CoincidenceMatrix {
  std::array<std::array<std::uint64_t, 4>, 4> counts{};
  double duration_s = 0.0;

  std::uint64_t total() const;
};

struct FitParam {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;  // residual-bootstrap estimate; 0 when disabled
  std::string unit;
};

struct FitResult {
  std::vector<FitParam> params;
  double residual_norm = 0.0;  // RMS residual in the scan's units
  int iterations = 0;
  bool converged = false;

  double param(const std::string& name) const;
  double param_error(const std::string& name) const;
};

struct FitOptions {
  int bootstrap_resamples = 200;     // 0 disables uncertainty estimation
  std::uint64_t bootstrap_seed = 20220615;
  double simplex_tolerance = 1e-10;  // relative simplex size
  int max_iterations = 2000;
};

/// Least-squares fit of noise_through_filter to a noise-only scan.
/// With fix_gamma_urad set, only B0 is free.
FitResult fit_noise_scan(std::span<const ScanPoint> points,
                         std::optional<double> fix_gamma_urad = {},
                         const FitOptions& options = {});

/// Least-squares fit of the full key-rate model R(theta; S0, delta, b0)
/// to a key-rate scan, with b0 and gamma known from a noise-only fit.
FitResult fit_key_rate_scan(std::span<const ScanPoint> points, double b0_cps,
                            const SystemConstants& sys,
                            const OperatingPoint& op_template,
                            double gamma_urad = 36.8,
                            const FitOptions& options = {});

/// Alice-channel efficiency from a night measurement (S_B^b ~ 0):
/// eta_A = (C^m - C^acc) / (eta_c * (S_B^m - S_B^d)).
double estimate_eta_a(double c_measured_cps, double s_a_cps, double s_b_cps,
                      const SystemConstants& sys, double tau_ps);

struct EPolEstimate {
  double value = 0.0;
  bool clamped = false;  // raw estimate fell outside [0, 0.5]
};

/// Baseline polarization error from a measured coincidence matrix:
/// E_pol = (C^wrong - C^acc/4) / C^sift, clamped into [0, 0.5].
EPolEstimate estimate_e_pol(const CoincidenceMatrix& m, double c_acc_cps);

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct SimplexResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead minimization for n <= 3. When trace is
/// non-null it receives the best objective value after every iteration
/// (a nonincreasing sequence).
SimplexResult nelder_mead(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, std::span<const double> step,
    double rel_tolerance, int max_iterations,
    std::vector<double>* trace = nullptr);

}  // namespace detail

}  // namespace qkdsf
