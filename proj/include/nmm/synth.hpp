#pragma once

// Synthetic elbow flexion-extension experiments: a planar single-DOF
// inverse-dynamics torque oracle and fully labeled trial generation from a
// known reference musculoskeletal model. The generated (envelopes,
// kinematics, torque) triples close the loop through the forward dynamics.

#include <cstdint>
#include <vector>

#include "nmm/msk.hpp"

namespace nmm::synth {

using Eigen::ArrayXd;
using Eigen::MatrixXd;

struct ArmAnthropometrics {
  double forearm_mass_kg = 1.5;      // forearm + hand
  double forearm_length_m = 0.28;
  double com_ratio = 0.43;           // COM distance / forearm length
  double inertia_kgm2 = 1.5 * 0.28 * 0.526 * 0.28 * 0.526;
  double hand_dist_m = 0.28;         // elbow-to-load distance
  double gravity = 9.81;
};

struct TrialSpec {
  double load_kg = 0.0;              // dumbbell: 0, 2, or 4 kg
  int repetitions = 1;
  double q_min_deg = 30.0;           // flexion range; q = 0 is full extension
  double q_max_deg = 120.0;
  double period_s = 2.0;             // one flexion-extension cycle
  double rest_s = 0.25;
  double fs = 125.0;
  double envelope_noise = 0.0;       // sigma of multiplicative log-normal jitter
  double angle_noise_deg = 0.0;      // sigma of additive Gaussian angle noise
  std::uint64_t seed = 0;
};

struct SynthTrial {
  msk::KinematicsTrace kin;
  MatrixXd envelopes;   // 6xT ground truth, flexors rows 0-2, extensors 3-5
  ArrayXd tau_id;       // inverse-dynamics reference torque, N*m
};

// tau = (I_f + m_d l_h^2) qdd + (m_f l_cm + m_d l_h) g cos(theta),
// theta = q - 90 deg (elevation from horizontal), qdd by central differences.
ArrayXd inverse_dynamics_torque(const ArrayXd& q_deg, double load_kg,
                                const ArmAnthropometrics& anthro = {});

// Reference muscle set used to label synthetic data. Flexors have positive
// moment arms, extensors negative; normalized fiber lengths stay near 1 over
// the flexion range.
std::vector<msk::MuscleParams> reference_muscles();

SynthTrial generate_trial(const TrialSpec& spec,
                          const std::vector<msk::MuscleParams>& muscles,
                          const msk::ExcitationParams& exc = {},
                          const ArmAnthropometrics& anthro = {});

}  // namespace nmm::synth
