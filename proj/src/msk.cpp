#include "nmm/msk.hpp"

#include <cmath>
#include <stdexcept>

namespace nmm::msk {

ExcitationCoeffs excitation_coeffs(double c1, double c2) {
  if (!(std::abs(c1) < 1.0))
    throw std::domain_error("excitation_coeffs: |c1| must be < 1, got " +
                            std::to_string(c1));
  if (!(std::abs(c2) < 1.0))
    throw std::domain_error("excitation_coeffs: |c2| must be < 1, got " +
                            std::to_string(c2));
  ExcitationCoeffs k;
  k.beta1 = c1 + c2;
  k.beta2 = c1 * c2;
  k.alpha = 1.0 + k.beta1 + k.beta2;
  return k;
}

ArrayXd excitation_filter(const ArrayXd& e, const ExcitationParams& p) {
  if (e.size() == 0) return ArrayXd();
  if (!e.allFinite())
    throw std::invalid_argument("excitation_filter: NaN in input");
  ExcitationCoeffs k = excitation_coeffs(p.c1, p.c2);
  ArrayXd u(e.size());
  for (Eigen::Index n = 0; n < e.size(); ++n) {
    double ein = (n >= p.delay) ? e(n - p.delay) : 0.0;
    double u1 = (n >= 1) ? u(n - 1) : 0.0;
    double u2 = (n >= 2) ? u(n - 2) : 0.0;
    u(n) = k.alpha * ein - k.beta1 * u1 - k.beta2 * u2;
  }
  return u;
}

double activation(double u, double A) {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("activation: u outside [0,1]");
  if (std::abs(A) < 1e-6) return u;  // analytic limit
  return std::expm1(A * u) / std::expm1(A);
}

namespace {
// Horner evaluation of sum_{i=1..k} c[i-1] * q^i.
double poly1(const std::vector<double>& c, double q) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * q + *it;
  return acc * q;
}
}  // namespace

double muscle_length(double q1_deg, double q2_deg, const MuscleParams& m) {
  if (!std::isfinite(q1_deg) || !std::isfinite(q2_deg))
    throw std::invalid_argument("muscle_length: NaN angle");
  return m.kappa + poly1(m.len_coeffs_q1, q1_deg) + poly1(m.len_coeffs_q2, q2_deg);
}

double moment_arm(double q_deg, const MuscleParams& m) {
  if (!std::isfinite(q_deg))
    throw std::invalid_argument("moment_arm: NaN angle");
  return m.r + poly1(m.ma_coeffs, q_deg);
}

double active_fl(double lbar, double gamma) {
  double d = lbar - 1.0;
  return std::exp(-d * d / gamma);
}

double fv_breakpoint(double Af, double Flen) {
  return 10.0 * (Flen - 1.0) * (0.95 * Flen - 1.0) / ((1.0 + 1.0 / Af) * Flen);
}

double force_velocity(double vbar, double Af, double Flen) {
  if (!(Af > 0.0))
    throw std::domain_error("force_velocity: Af must be > 0");
  if (!(Flen > 1.0))
    throw std::domain_error("force_velocity: Flen must be > 1");
  double iAf = 1.0 / Af;
  double psi = fv_breakpoint(Af, Flen);
  if (vbar < -1.0) return (vbar + 1.0) / (1.0 + iAf);
  if (vbar < 0.0) return (vbar + 1.0) / (1.0 - vbar * iAf);
  if (vbar < psi) {
    double c = 2.0 + 2.0 * iAf;
    return (c * vbar * Flen + Flen - 1.0) / (c * vbar + Flen - 1.0);
  }
  return Flen / (20.0 * (Flen - 1.0)) *
         ((1.0 + iAf) * Flen * vbar / (10.0 * (Flen - 1.0)) + 18.05 * Flen - 18.0);
}

double force_velocity_deriv(double vbar, double Af, double Flen) {
  double iAf = 1.0 / Af;
  double psi = fv_breakpoint(Af, Flen);
  if (vbar < -1.0) return 1.0 / (1.0 + iAf);
  if (vbar < 0.0) {
    double den = 1.0 - vbar * iAf;
    return (den + (vbar + 1.0) * iAf) / (den * den);
  }
  if (vbar < psi) {
    double c = 2.0 + 2.0 * iAf;
    double den = c * vbar + Flen - 1.0;
    return (c * Flen * den - c * (c * vbar * Flen + Flen - 1.0)) / (den * den);
  }
  return Flen / (20.0 * (Flen - 1.0)) * (1.0 + iAf) * Flen / (10.0 * (Flen - 1.0));
}

double passive_fl(double lbar, double kPE, double eps0) {
  if (lbar > 1.0 + eps0)
    return 1.0 + kPE / eps0 * (lbar - (1.0 + eps0));
  return std::exp(kPE * (lbar - 1.0) / eps0) / std::exp(kPE);
}

double passive_fl_deriv(double lbar, double kPE, double eps0) {
  if (lbar > 1.0 + eps0) return kPE / eps0;
  return kPE / eps0 * std::exp(kPE * (lbar - 1.0) / eps0) / std::exp(kPE);
}

double pennation(double lm, const MuscleParams& m) {
  if (lm == 0.0) return 0.0;
  double w = m.L0 * std::sin(m.phi0) / lm;
  if (w <= 0.0) return 0.0;
  if (w < 1.0) return std::asin(w);
  return M_PI / 2.0;
}

double cos_pennation_w(double w) {
  if (w <= 0.0) return 1.0;
  if (w < 1.0) return std::sqrt(1.0 - w * w);
  return 0.0;
}

double cos_pennation_w_deriv(double w) {
  if (w <= 0.0) return 0.0;
  if (w < 1.0) return -w / std::sqrt(1.0 - w * w);
  return 0.0;
}

double muscle_force(double a, double lbar, double vbar, double lm,
                    const MuscleParams& m) {
  double fa = active_fl(lbar, m.gamma);
  double fv = force_velocity(vbar, m.Af, m.Flen);
  double fp = passive_fl(lbar, m.kPE, m.eps0);
  double cphi = std::cos(pennation(lm, m));
  return m.F0m * (a * fa * fv + fp) * cphi;
}

double joint_torque(const std::vector<double>& forces_N,
                    const std::vector<double>& moment_arms_m) {
  if (forces_N.size() != moment_arms_m.size())
    throw std::invalid_argument("joint_torque: muscle count mismatch");
  double tau = 0.0;
  for (std::size_t j = 0; j < forces_N.size(); ++j)
    tau += forces_N[j] * moment_arms_m[j];
  return tau;
}

ArrayXd forward_torque(const MatrixXd& emg, const KinematicsTrace& kin,
                       const std::vector<MuscleParams>& muscles,
                       const ExcitationParams& exc,
                       std::vector<MuscleStateSeries>* states) {
  const Eigen::Index M = emg.rows(), T = emg.cols();
  if (static_cast<std::size_t>(M) != muscles.size())
    throw std::invalid_argument("forward_torque: channel count mismatch");
  if (kin.samples() != T)
    throw std::invalid_argument("forward_torque: kinematics/EMG length mismatch");
  if (T < 3)
    throw std::invalid_argument("forward_torque: need at least 3 samples");

  if (states) states->assign(M, MuscleStateSeries{});
  ArrayXd tau = ArrayXd::Zero(T);
  for (Eigen::Index j = 0; j < M; ++j) {
    const MuscleParams& m = muscles[j];
    ArrayXd u = excitation_filter(emg.row(j).transpose().array(), exc);

    // Unchecked activation formula: filter transients may momentarily leave
    // [0,1] and the mapping extends smoothly.
    ArrayXd a(T), lm(T), lbar(T);
    for (Eigen::Index n = 0; n < T; ++n) {
      a(n) = std::abs(m.A) < 1e-6 ? u(n) : std::expm1(m.A * u(n)) / std::expm1(m.A);
      lm(n) = muscle_length(kin.q1_deg(n), kin.q2_deg(n), m) * 1e-3;  // mm -> m
      lbar(n) = lm(n) / m.L0;
    }
    // Normalized fiber velocity by central differences on the sample grid.
    ArrayXd vbar(T);
    vbar(0) = (lbar(1) - lbar(0)) / kin.dt / m.vmax;
    for (Eigen::Index n = 1; n + 1 < T; ++n)
      vbar(n) = (lbar(n + 1) - lbar(n - 1)) / (2.0 * kin.dt) / m.vmax;
    vbar(T - 1) = (lbar(T - 1) - lbar(T - 2)) / kin.dt / m.vmax;

    ArrayXd force(T);
    for (Eigen::Index n = 0; n < T; ++n) {
      force(n) = muscle_force(a(n), lbar(n), vbar(n), lm(n), m);
      double ma_m = moment_arm(kin.q1_deg(n), m) * 1e-3;  // mm -> m
      tau(n) += force(n) * ma_m;
    }
    if (states) {
      MuscleStateSeries& s = (*states)[j];
      s.u = u;
      s.a = a;
      s.lm = lm;
      s.lbar = lbar;
      s.vbar = vbar;
      s.force = force;
      s.dt = kin.dt;
    }
  }
  return tau;
}

}  // namespace nmm::msk
