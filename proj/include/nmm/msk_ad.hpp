#pragma once

// Differentiable forward musculoskeletal pipeline built on the tape engine.
// Mirrors msk::forward_torque with the trainable physiological parameters
// supplied as graph nodes.

#include "nmm/autodiff.hpp"
#include "nmm/msk.hpp"

namespace nmm::mskad {

// Trainable physiological parameters as tape nodes (already bounded).
struct PhysioVars {
  ad::Var A;          // 6x1, activation shape
  ad::Var c1, c2;     // 1x1, excitation pole constants
  ad::Var F0m;        // 6x1, N
  ad::Var L0;         // 6x1, m
  ad::Var kappa;      // 6x1, mm
  ad::Var r;          // 6x1, mm (signed)
};

// emg is 6xT; non-trainable muscle properties (geometry polynomials, curve
// shapes, pennation) come from `muscles`. Returns torque as a 1xT node.
ad::Var forward_torque(ad::Tape& tape, const ad::Var& emg,
                       const msk::KinematicsTrace& kin,
                       const std::vector<msk::MuscleParams>& muscles,
                       const PhysioVars& physio, int delay);

}  // namespace nmm::mskad
