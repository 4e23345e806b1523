#include "qkdsf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qkdsf {

namespace {

constexpr int kCoarseGridPoints = 128;
constexpr int kVerificationGridPoints = 512;
constexpr double kThetaToleranceUrad = 0.01;
constexpr double kTauTolerancePs = 1.0;
constexpr int kMaxAlternatingRounds = 10;

struct Candidate {
  double x = 0.0;
  double value = -1.0;
};

/// Coarse grid scan followed by golden-section refinement of the best
/// bracket. The grid keeps golden section honest on functions that are
/// flat-zero over part of the range.
Candidate grid_then_golden(const std::function<double(double)>& f, double lo,
                           double hi, int grid_points, double tolerance) {
  Candidate best;
  int best_index = 0;
  for (int i = 0; i < grid_points; ++i) {
    const double x =
        lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
    const double v = f(x);
    if (v > best.value) {
      best = {x, v};
      best_index = i;
    }
  }

  double a = lo + (hi - lo) * static_cast<double>(std::max(best_index - 1, 0)) /
                      (grid_points - 1);
  double b = lo + (hi - lo) *
                      static_cast<double>(
                          std::min(best_index + 1, grid_points - 1)) /
                      (grid_points - 1);
  const double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (d - c > tolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fmid = f(mid);
  if (fmid > best.value) best = {mid, fmid};
  if (fc > best.value) best = {c, fc};
  if (fd > best.value) best = {d, fd};
  return best;
}

RateBreakdown rate_at(const OptimizationRequest& req, double theta,
                      double tau) {
  OperatingPoint op{theta, tau, req.fibre_model};
  return evaluate_point(req.link, req.sys, op);
}

/// Best tau at a fixed theta; candidates always include the fixed window
/// (800 ps default) so tau optimization never loses to it.
Candidate best_tau_at(const OptimizationRequest& req, double theta) {
  auto f = [&](double tau) {
    return rate_at(req, theta, tau).key_rate_bps;
  };
  Candidate best = grid_then_golden(f, req.tau_low_ps, req.tau_high_ps,
                                    kCoarseGridPoints, kTauTolerancePs);
  for (double tau : {req.tau_ps, 800.0, req.tau_low_ps, req.tau_high_ps}) {
    if (tau < req.tau_low_ps || tau > req.tau_high_ps) continue;
    const double v = f(tau);
    if (v > best.value) best = {tau, v};
  }
  return best;
}

}  // namespace

void OptimizationRequest::validate() const {
  link.validate();
  sys.validate();
  if (!(theta_low_urad > 0.0) || !(theta_high_urad > theta_low_urad))
    throw std::domain_error("OptimizationRequest: bad theta bounds");
  if (!(tau_low_ps > 0.0) || !(tau_high_ps > tau_low_ps))
    throw std::domain_error("OptimizationRequest: bad tau bounds");
  if (!(tau_ps > 0.0))
    throw std::domain_error("OptimizationRequest: tau_ps must be > 0");
}

void SweepSpec::validate() const {
  base_link.validate();
  sys.validate();
  if (values.empty())
    throw std::domain_error("SweepSpec: values must be nonempty");
  if (theta_grid_urad.empty())
    throw std::domain_error("SweepSpec: theta grid must be nonempty");
  for (double v : values)
    if (v < 0.0) throw std::domain_error("SweepSpec: negative parameter value");
}

OptimumPoint optimize_fov(const OptimizationRequest& req) {
  req.validate();

  double tau = req.optimize_tau
                   ? std::clamp(800.0, req.tau_low_ps, req.tau_high_ps)
                   : req.tau_ps;
  auto rate_theta = [&](double theta) {
    return rate_at(req, theta, tau).key_rate_bps;
  };

  Candidate theta_best = grid_then_golden(
      rate_theta, req.theta_low_urad, req.theta_high_urad, kCoarseGridPoints,
      kThetaToleranceUrad);

  if (req.optimize_tau) {
    for (int round = 0; round < kMaxAlternatingRounds; ++round) {
      const Candidate tau_best = best_tau_at(req, theta_best.x);
      const double tau_move = std::abs(tau_best.x - tau);
      tau = tau_best.x;
      const Candidate theta_next = grid_then_golden(
          rate_theta, req.theta_low_urad, req.theta_high_urad,
          kCoarseGridPoints, kThetaToleranceUrad);
      const double theta_move = std::abs(theta_next.x - theta_best.x);
      theta_best = theta_next;
      if (tau_move < kTauTolerancePs && theta_move < kThetaToleranceUrad)
        break;
    }
  }

  // Verification sweep: the reported optimum must dominate a fine grid.
  for (int i = 0; i < kVerificationGridPoints; ++i) {
    const double x = req.theta_low_urad +
                     (req.theta_high_urad - req.theta_low_urad) *
                         static_cast<double>(i) /
                         (kVerificationGridPoints - 1);
    const double v = rate_theta(x);
    if (v > theta_best.value) theta_best = {x, v};
  }

  if (theta_best.value <= 0.0)
    throw NoPositiveKeyError(
        "optimize_fov: key rate is zero everywhere in bounds");

  OptimumPoint out;
  out.theta_urad = theta_best.x;
  out.tau_ps = tau;
  out.key_rate_bps = theta_best.value;

  // Saturated plateau: if fully open is as good as the refined optimum,
  // report the boundary (night-time behaviour).
  const double rate_open = rate_theta(req.theta_high_urad);
  if (rate_open >= theta_best.value * (1.0 - 1e-9)) {
    out.theta_urad = req.theta_high_urad;
    out.key_rate_bps = rate_open;
    out.boundary_optimum = true;
  }

  out.breakdown = rate_at(req, out.theta_urad, out.tau_ps);
  return out;
}

OptimumPoint evaluate_at_fov(const OptimizationRequest& req,
                             double theta_urad) {
  req.validate();
  if (theta_urad < 0.0)
    throw std::domain_error("evaluate_at_fov: theta must be >= 0");

  OptimumPoint out;
  out.theta_urad = theta_urad;
  if (req.optimize_tau) {
    const Candidate tau_best = best_tau_at(req, theta_urad);
    out.tau_ps = tau_best.x;
    out.key_rate_bps = tau_best.value;
  } else {
    out.tau_ps = req.tau_ps;
    out.key_rate_bps = rate_at(req, theta_urad, req.tau_ps).key_rate_bps;
  }
  out.breakdown = rate_at(req, out.theta_urad, out.tau_ps);
  return out;
}

const char* sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::B0: return "b0_cps";
    case SweepParameter::Delta: return "delta_urad";
    case SweepParameter::S0: return "s0_cps";
  }
  return "unknown";
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();

  std::vector<SweepRow> rows;
  rows.reserve(spec.values.size() * spec.theta_grid_urad.size());
  for (double value : spec.values) {
    LinkConditions link = spec.base_link;
    switch (spec.varied) {
      case SweepParameter::B0: link.b0_cps = value; break;
      case SweepParameter::Delta: link.delta_urad = value; break;
      case SweepParameter::S0: link.s0_cps = value; break;
    }
    OptimizationRequest req;
    req.link = link;
    req.sys = spec.sys;
    req.fibre_model = spec.fibre_model;
    req.optimize_tau = spec.optimize_tau;
    req.tau_low_ps = spec.tau_low_ps;
    req.tau_high_ps = spec.tau_high_ps;
    req.tau_ps = spec.tau_ps;

    for (double theta : spec.theta_grid_urad) {
      SweepRow row;
      row.param_value = value;
      row.theta_urad = theta;
      if (spec.optimize_tau) {
        const Candidate tau_best = best_tau_at(req, theta);
        row.tau_ps = tau_best.x;
      } else {
        row.tau_ps = spec.tau_ps;
      }
      row.breakdown = evaluate_point(
          link, spec.sys, OperatingPoint{theta, row.tau_ps, spec.fibre_model});
      rows.push_back(row);
    }
  }
  return rows;
}

ScenarioResult scenario_walk(const ScenarioSpec& spec) {
  auto request_for = [&](double delta) {
    OptimizationRequest req;
    req.link = spec.base_link;
    req.link.delta_urad = delta;
    req.sys = spec.sys;
    req.fibre_model = spec.fibre_model;
    req.optimize_tau = spec.optimize_tau;
    req.theta_low_urad = spec.theta_low_urad;
    req.theta_high_urad = spec.theta_high_urad;
    req.tau_low_ps = spec.tau_low_ps;
    req.tau_high_ps = spec.tau_high_ps;
    req.tau_ps = spec.tau_ps;
    return req;
  };
  auto held_rate = [&](double delta, double theta, double tau) {
    OptimizationRequest req = request_for(delta);
    return evaluate_point(req.link, req.sys,
                          OperatingPoint{theta, tau, req.fibre_model})
        .key_rate_bps;
  };

  const auto& deltas = spec.delta_schedule_urad;
  ScenarioResult out;

  const OptimumPoint a = optimize_fov(request_for(deltas[0]));
  out.steps[0] = {"A", deltas[0], a.theta_urad, a.tau_ps, a.key_rate_bps, true};

  // B and D keep running with the previously optimal settings.
  const double rate_b = held_rate(deltas[1], a.theta_urad, a.tau_ps);
  out.steps[1] = {"B", deltas[1], a.theta_urad, a.tau_ps, rate_b, false};

  const OptimumPoint c = optimize_fov(request_for(deltas[2]));
  out.steps[2] = {"C", deltas[2], c.theta_urad, c.tau_ps, c.key_rate_bps, true};

  const double rate_d = held_rate(deltas[3], c.theta_urad, c.tau_ps);
  out.steps[3] = {"D", deltas[3], c.theta_urad, c.tau_ps, rate_d, false};

  const double reopt_b = deltas[2] == deltas[1]
                             ? c.key_rate_bps
                             : optimize_fov(request_for(deltas[1])).key_rate_bps;
  const double reopt_d = deltas[3] == deltas[0]
                             ? a.key_rate_bps
                             : optimize_fov(request_for(deltas[3])).key_rate_bps;
  out.improvement_after_b = rate_b > 0.0 ? reopt_b / rate_b : 1.0;
  out.improvement_after_d = rate_d > 0.0 ? reopt_d / rate_d : 1.0;
  return out;
}

}  // namespace qkdsf
