#pragma once

// EMG-to-torque forward musculoskeletal dynamics: excitation filtering,
// activation nonlinearity, musculotendon geometry polynomials, Hill-type
// force curves, pennation, and joint torque. All functions are pure.

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nmm::msk {

using Eigen::ArrayXd;
using Eigen::MatrixXd;

struct ExcitationParams {
  double c1 = 0.0;
  double c2 = 0.0;
  int delay = 0;  // electromechanical delay, samples
};

struct ExcitationCoeffs {
  double alpha, beta1, beta2;
};

struct MuscleParams {
  std::string name = "muscle";
  double A = -1.5;      // activation shape, [-3, 0]
  double F0m = 600.0;   // max isometric force, N
  double L0 = 0.12;     // optimal fiber length, m
  double phi0 = 0.0;    // optimal pennation angle, rad
  double kappa = 120.0; // constant muscle-length term, mm
  double r = 20.0;      // constant moment-arm term, mm (signed)
  std::vector<double> len_coeffs_q1;  // y_i, mm/deg^i, starting at power 1
  std::vector<double> len_coeffs_q2;
  std::vector<double> ma_coeffs;      // x_i, mm/deg^i, starting at power 1
  // Hill curve shapes (shared defaults, configurable).
  double gamma = 0.45;
  double Af = 0.25;
  double Flen = 1.4;
  double kPE = 4.0;
  double eps0 = 0.6;
  double vmax = 10.0;   // optimal fiber lengths / s
};

struct KinematicsTrace {
  ArrayXd q1_deg, q2_deg;      // joint angles
  ArrayXd qd1_dps, qd2_dps;    // angular velocities
  double mass_kg = 0.0;        // lifted load
  double dt = 1.0 / 125.0;     // sample interval, s
  Eigen::Index samples() const { return q1_deg.size(); }
};

struct MuscleStateSeries {
  ArrayXd u, a, lm, lbar, vbar, force;
  double dt = 1.0 / 125.0;
};

// Eq. coefficients from the pole constants; throws on |c| >= 1.
ExcitationCoeffs excitation_coeffs(double c1, double c2);

// Second-order recursive filter with zero initial state.
ArrayXd excitation_filter(const ArrayXd& e, const ExcitationParams& p);

// Nonlinear excitation-to-activation mapping; u in [0,1], A in [-3,0].
double activation(double u, double A);

// Polynomial musculotendon geometry; angles in degrees, output in mm.
double muscle_length(double q1_deg, double q2_deg, const MuscleParams& m);
double moment_arm(double q_deg, const MuscleParams& m);

// Normalized Hill curves.
double active_fl(double lbar, double gamma);
double force_velocity(double vbar, double Af, double Flen);
double force_velocity_deriv(double vbar, double Af, double Flen);
double fv_breakpoint(double Af, double Flen);  // psi
double passive_fl(double lbar, double kPE, double eps0);
double passive_fl_deriv(double lbar, double kPE, double eps0);

double pennation(double lm, const MuscleParams& m);        // rad
double cos_pennation_w(double w);                           // cos(phi(w))
double cos_pennation_w_deriv(double w);

// F = F0m * (a*fa(lbar)*fv(vbar) + fp(lbar)) * cos(pennation(lm)).
double muscle_force(double a, double lbar, double vbar, double lm,
                    const MuscleParams& m);

// tau = sum_j F_j * MA_j, moment arms in meters.
double joint_torque(const std::vector<double>& forces_N,
                    const std::vector<double>& moment_arms_m);

// Full composition over a trial: 6xT envelopes -> torque series (T).
// Per-muscle intermediate series are returned when states != nullptr.
ArrayXd forward_torque(const MatrixXd& emg, const KinematicsTrace& kin,
                       const std::vector<MuscleParams>& muscles,
                       const ExcitationParams& exc,
                       std::vector<MuscleStateSeries>* states = nullptr);

}  // namespace nmm::msk
