#include "qkdsf/model.hpp"

#include <algorithm>
#include <cmath>

namespace qkdsf {

namespace {

const double kSqrtLn2 = std::sqrt(std::log(2.0));
constexpr double kPsToS = 1e-12;

void require(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

}  // namespace

void LinkConditions::validate() const {
  require(s0_cps >= 0.0, "LinkConditions: s0_cps must be >= 0");
  require(b0_cps >= 0.0, "LinkConditions: b0_cps must be >= 0");
  require(delta_urad > 0.0, "LinkConditions: delta_urad must be > 0");
  require(gamma_urad > 0.0, "LinkConditions: gamma_urad must be > 0");
}

void SystemConstants::validate() const {
  require(eta_a >= 0.0 && eta_a <= 1.0, "SystemConstants: eta_a must be in [0,1]");
  require(s_a_measured_cps >= 0.0, "SystemConstants: s_a_measured_cps must be >= 0");
  require(dark_bob_cps >= 0.0, "SystemConstants: dark_bob_cps must be >= 0");
  require(jitter_fwhm_ps > 0.0, "SystemConstants: jitter_fwhm_ps must be > 0");
  require(e_pol >= 0.0 && e_pol < 0.5, "SystemConstants: e_pol must be in [0,0.5)");
  require(f_ec >= 1.0, "SystemConstants: f_ec must be >= 1");
}

void OperatingPoint::validate() const {
  require(theta_sf_urad >= 0.0, "OperatingPoint: theta_sf_urad must be >= 0");
  require(tau_ps > 0.0, "OperatingPoint: tau_ps must be > 0");
}

double signal_through_filter(double theta_sf_urad, double s0_cps,
                             double delta_urad) {
  require(delta_urad > 0.0, "signal_through_filter: delta_urad must be > 0");
  require(s0_cps >= 0.0, "signal_through_filter: s0_cps must be >= 0");
  require(theta_sf_urad >= 0.0, "signal_through_filter: theta_sf_urad must be >= 0");
  const double e = std::erf(kSqrtLn2 * theta_sf_urad / delta_urad);
  return s0_cps * e * e;
}

double noise_through_filter(double theta_sf_urad, double b0_cps,
                            double gamma_urad) {
  require(gamma_urad > 0.0, "noise_through_filter: gamma_urad must be > 0");
  require(b0_cps >= 0.0, "noise_through_filter: b0_cps must be >= 0");
  const double x = theta_sf_urad / gamma_urad;
  return b0_cps * -std::expm1(-0.5 * x * x);
}

double noise_no_fibre(double theta_sf_urad, double b0_cps, double gamma_urad) {
  require(gamma_urad > 0.0, "noise_no_fibre: gamma_urad must be > 0");
  require(b0_cps >= 0.0, "noise_no_fibre: b0_cps must be >= 0");
  const double x = theta_sf_urad / gamma_urad;
  return b0_cps * 0.5 * x * x;
}

double window_efficiency(double tau_ps, double jitter_fwhm_ps) {
  require(tau_ps > 0.0, "window_efficiency: tau_ps must be > 0");
  require(jitter_fwhm_ps > 0.0, "window_efficiency: jitter_fwhm_ps must be > 0");
  return std::erf(kSqrtLn2 * tau_ps / jitter_fwhm_ps);
}

double accidental_rate(double s_a_cps, double s_b_cps, double tau_ps) {
  require(tau_ps > 0.0, "accidental_rate: tau_ps must be > 0");
  require(s_a_cps >= 0.0 && s_b_cps >= 0.0,
          "accidental_rate: rates must be >= 0");
  const double tau_s = tau_ps * kPsToS;
  return -std::expm1(-s_a_cps * tau_s) * -std::expm1(-s_b_cps * tau_s) / tau_s;
}

double qber(double c_true_cps, double c_acc_cps, double eta_c, double e_pol) {
  require(c_true_cps >= 0.0 && c_acc_cps >= 0.0,
          "qber: rates must be >= 0");
  require(e_pol >= 0.0 && e_pol <= 0.5, "qber: e_pol must be in [0,0.5]");
  const double denom = eta_c * c_true_cps + c_acc_cps;
  require(denom > 0.0, "qber: undefined rate, eta_c*c_true + c_acc is zero");
  return (eta_c * c_true_cps * e_pol + 0.5 * c_acc_cps) / denom;
}

double binary_entropy(double x) {
  require(x >= 0.0 && x <= 1.0, "binary_entropy: argument must be in [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

KeyRate secure_key_rate(double c_sift_cps, double e_hv, double e_da,
                        double f_ec) {
  require(c_sift_cps >= 0.0, "secure_key_rate: c_sift_cps must be >= 0");
  require(f_ec >= 1.0, "secure_key_rate: f_ec must be >= 1");
  KeyRate out;
  out.raw_bps = c_sift_cps *
                (1.0 - f_ec * binary_entropy(e_hv) - binary_entropy(e_da));
  out.clamped_bps = std::max(0.0, out.raw_bps);
  return out;
}

RateBreakdown evaluate_point(const LinkConditions& link,
                             const SystemConstants& sys,
                             const OperatingPoint& op) {
  link.validate();
  sys.validate();
  op.validate();

  RateBreakdown bd;
  bd.s_bob_true_cps =
      signal_through_filter(op.theta_sf_urad, link.s0_cps, link.delta_urad);
  bd.s_bob_background_cps =
      op.fibre_model == FibreModel::WithMMFibre
          ? noise_through_filter(op.theta_sf_urad, link.b0_cps, link.gamma_urad)
          : noise_no_fibre(op.theta_sf_urad, link.b0_cps, link.gamma_urad);
  bd.s_bob_total_cps =
      bd.s_bob_true_cps + bd.s_bob_background_cps + sys.dark_bob_cps;

  bd.c_true_cps = sys.eta_a * bd.s_bob_true_cps;
  bd.eta_c = window_efficiency(op.tau_ps, sys.jitter_fwhm_ps);
  bd.c_acc_cps =
      accidental_rate(sys.s_a_measured_cps, bd.s_bob_total_cps, op.tau_ps);
  bd.c_measured_cps = bd.eta_c * bd.c_true_cps + bd.c_acc_cps;
  bd.c_sift_cps = 0.5 * bd.c_measured_cps;

  // With both coincidence contributions zero the point carries no
  // information; report the random-guess error rather than failing.
  bd.qber = (bd.eta_c * bd.c_true_cps + bd.c_acc_cps) > 0.0
                ? qber(bd.c_true_cps, bd.c_acc_cps, bd.eta_c, sys.e_pol)
                : 0.5;

  const KeyRate kr = secure_key_rate(bd.c_sift_cps, bd.qber, bd.qber, sys.f_ec);
  bd.key_rate_raw_bps = kr.raw_bps;
  bd.key_rate_bps = kr.clamped_bps;
  return bd;
}

double fov_angle_from_focal_micron(double x_um) {
  return kFocalMicronToUrad * x_um;
}

double focal_micron_from_fov_angle(double theta_urad) {
  return theta_urad / kFocalMicronToUrad;
}

double theta_open(const LinkConditions& link) {
  return 20.0 * std::max(link.delta_urad, link.gamma_urad);
}

}  // namespace qkdsf
