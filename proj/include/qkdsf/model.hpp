#pragma once

// Closed-form key-rate model for an entanglement-based free-space QKD
// receiver with an adjustable square spatial filter (field stop) and
// optional multi-mode fibre coupling behind it.
//
// Conventions used throughout the library:
//   rates   counts/s (cps) or bits/s (bps)
//   times   picoseconds, converted to seconds inside exponentials
//   angles  microradians in the receiver primary aperture plane

#include <stdexcept>

namespace qkdsf {

enum class FibreModel { WithMMFibre, NoFibre };

/// Link-dependent free parameters plus the noise-model turning point.
struct LinkConditions {
  double s0_cps = 237000.0;   // signal rate at Bob with fully open filter
  double delta_urad = 18.5;   // FWHM of the long-term focal spot
  double b0_cps = 1.59e6;     // background rate in the MM-fibre-coupling limit
  double gamma_urad = 36.8;   // turning point where fibre coupling takes over

  void validate() const;
};

/// Fixed instrument parameters, measured in advance.
struct SystemConstants {
  double eta_a = 0.122;             // single-photon efficiency, Alice channel
  double s_a_measured_cps = 1.4e6;  // total measured singles at Alice
  double dark_bob_cps = 761.0;      // Bob dark count rate
  double jitter_fwhm_ps = 710.0;    // total system timing jitter FWHM
  double e_pol = 0.026;             // baseline polarization error
  double f_ec = 1.22;               // error-correction efficiency

  void validate() const;
};

struct OperatingPoint {
  double theta_sf_urad = 0.0;  // spatial filter FOV (square side length)
  double tau_ps = 800.0;       // coincidence window
  FibreModel fibre_model = FibreModel::WithMMFibre;

  void validate() const;
};

/// Every intermediate quantity of the model at one operating point.
struct RateBreakdown {
  double c_true_cps = 0.0;           // true coincidence rate
  double c_acc_cps = 0.0;            // accidental coincidence rate
  double eta_c = 0.0;                // window-dependent detection efficiency
  double c_measured_cps = 0.0;       // eta_c * c_true + c_acc
  double c_sift_cps = 0.0;           // c_measured / 2
  double s_bob_true_cps = 0.0;       // signal photon rate at Bob
  double s_bob_background_cps = 0.0; // background photon rate at Bob
  double s_bob_total_cps = 0.0;      // total measured singles at Bob
  double qber = 0.0;                 // error rate E (same in both bases)
  double key_rate_bps = 0.0;         // max(0, key_rate_raw_bps)
  double key_rate_raw_bps = 0.0;     // may be negative
};

/// Signal transmitted through the square field stop:
/// s0 * erf^2(sqrt(ln 2) * theta / delta).
double signal_through_filter(double theta_sf_urad, double s0_cps,
                             double delta_urad);

/// Background transmitted with MM fibre coupling behind the filter:
/// b0 * (1 - exp(-theta^2 / (2 gamma^2))).
double noise_through_filter(double theta_sf_urad, double b0_cps,
                            double gamma_urad);

/// Fibre-free background estimate, the quadratic Taylor term of
/// noise_through_filter: b0 * theta^2 / (2 gamma^2).
double noise_no_fibre(double theta_sf_urad, double b0_cps, double gamma_urad);

/// Fraction of true pairs captured by a window of width tau given Gaussian
/// system jitter: erf(sqrt(ln 2) * tau / jitter_fwhm).
double window_efficiency(double tau_ps, double jitter_fwhm_ps);

/// Accidental coincidence rate of two independent Poisson streams:
/// (1 - e^(-S_A tau)) (1 - e^(-S_B tau)) / tau, tau in seconds internally.
double accidental_rate(double s_a_cps, double s_b_cps, double tau_ps);

/// Error rate of the coincidence ensemble: true pairs err with probability
/// e_pol, accidentals with probability 1/2.
double qber(double c_true_cps, double c_acc_cps, double eta_c, double e_pol);

/// H2(x) with the limit convention H2(0) = H2(1) = 0.
double binary_entropy(double x);

struct KeyRate {
  double raw_bps = 0.0;
  double clamped_bps = 0.0;
};

/// Asymptotic secure key rate:
/// c_sift * [1 - f_ec * H2(e_hv) - H2(e_da)], raw and clamped at zero.
KeyRate secure_key_rate(double c_sift_cps, double e_hv, double e_da,
                        double f_ec);

/// Full model composition at one operating point.
RateBreakdown evaluate_point(const LinkConditions& link,
                             const SystemConstants& sys,
                             const OperatingPoint& op);

// Focal-plane scale of the filter: 1 um of field-stop side length maps to
// 0.344 urad of receiver FOV.
inline constexpr double kFocalMicronToUrad = 0.344;

double fov_angle_from_focal_micron(double x_um);
double focal_micron_from_fov_angle(double theta_urad);

/// Finite stand-in for "fully open": 20 * max(delta, gamma), beyond which
/// both the erf^2 and exponential terms saturate past double precision.
double theta_open(const LinkConditions& link);

}  // namespace qkdsf
