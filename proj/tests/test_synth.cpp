#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "nmm/msk.hpp"
#include "nmm/synth.hpp"

using Eigen::ArrayXd;
using namespace nmm;

TEST_CASE("static horizontal forearm without load carries the gravity torque") {
  synth::ArmAnthropometrics an;
  ArrayXd q = ArrayXd::Constant(100, 90.0);  // horizontal
  ArrayXd tau = synth::inverse_dynamics_torque(q, 0.0, an);
  double expect = an.forearm_mass_kg * an.com_ratio * an.forearm_length_m *
                  an.gravity;
  for (Eigen::Index n = 0; n < tau.size(); ++n)
    CHECK(tau(n) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("static vertical forearm has zero gravity torque") {
  ArrayXd q = ArrayXd::Constant(50, 0.0);  // hanging straight down
  ArrayXd tau = synth::inverse_dynamics_torque(q, 3.0, {});
  CHECK(tau.abs().maxCoeff() < 1e-12);
}

TEST_CASE("load superposition at a static pose") {
  synth::ArmAnthropometrics an;
  for (double q_deg : {40.0, 75.0, 110.0}) {
    ArrayXd q = ArrayXd::Constant(64, q_deg);
    ArrayXd t0 = synth::inverse_dynamics_torque(q, 0.0, an);
    ArrayXd t2 = synth::inverse_dynamics_torque(q, 2.0, an);
    double theta = (q_deg - 90.0) * M_PI / 180.0;
    double expect = 2.0 * an.hand_dist_m * an.gravity * std::cos(theta);
    CHECK((t2 - t0)(10) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("inverse dynamics rejects too-short series") {
  CHECK_THROWS_AS(synth::inverse_dynamics_torque(ArrayXd::Zero(2), 0.0, {}),
                  std::invalid_argument);
}

TEST_CASE("unloaded trials are gravity-dominated flexion tasks") {
  auto mus = synth::reference_muscles();
  synth::TrialSpec spec;
  spec.load_kg = 0.0;
  auto tr = synth::generate_trial(spec, mus);
  double flex_peak = tr.envelopes.topRows(3).maxCoeff();
  double ext_peak = tr.envelopes.bottomRows(3).maxCoeff();
  CHECK(ext_peak < flex_peak);
}

TEST_CASE("generation is deterministic per seed") {
  auto mus = synth::reference_muscles();
  synth::TrialSpec spec;
  spec.load_kg = 2.0;
  spec.envelope_noise = 0.05;
  spec.angle_noise_deg = 0.3;
  spec.seed = 42;
  auto a = synth::generate_trial(spec, mus);
  auto b = synth::generate_trial(spec, mus);
  CHECK((a.envelopes - b.envelopes).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.kin.q1_deg - b.kin.q1_deg).abs().maxCoeff() == 0.0);
  CHECK((a.tau_id - b.tau_id).abs().maxCoeff() == 0.0);
  spec.seed = 43;
  auto c = synth::generate_trial(spec, mus);
  CHECK((a.envelopes - c.envelopes).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("deep-channel effort grows with the lifted load") {
  auto mus = synth::reference_muscles();
  synth::TrialSpec s0, s4;
  s0.load_kg = 0.0;
  s4.load_kg = 4.0;
  auto t0 = synth::generate_trial(s0, mus);
  auto t4 = synth::generate_trial(s4, mus);
  for (int deep : {2, 5}) {
    double n0 = t0.envelopes.row(deep).norm();
    double n4 = t4.envelopes.row(deep).norm();
    CHECK(n4 > n0);
  }
}

TEST_CASE("generated triples close the loop through forward dynamics") {
  auto mus = synth::reference_muscles();
  for (double load : {0.0, 2.0, 4.0}) {
    synth::TrialSpec spec;
    spec.load_kg = load;
    spec.repetitions = 2;
    auto tr = synth::generate_trial(spec, mus);
    ArrayXd tau = msk::forward_torque(tr.envelopes, tr.kin, mus, {});
    double rel = std::sqrt((tau - tr.tau_id).square().sum() /
                           tr.tau_id.square().sum());
    CHECK(rel < 0.02);
    CHECK(tr.envelopes.minCoeff() >= 0.0);
    CHECK(tr.envelopes.maxCoeff() <= 1.0);
  }
}

TEST_CASE("invalid specs and muscle sets are rejected") {
  auto mus = synth::reference_muscles();
  synth::TrialSpec bad;
  bad.period_s = 0.0;
  CHECK_THROWS_AS(synth::generate_trial(bad, mus), std::invalid_argument);
  bad.period_s = 2.0;
  bad.load_kg = -1.0;
  CHECK_THROWS_AS(synth::generate_trial(bad, mus), std::invalid_argument);
  mus.pop_back();
  CHECK_THROWS_AS(synth::generate_trial({}, mus), std::invalid_argument);
}

TEST_CASE("an infeasible load names the limiting muscle") {
  auto mus = synth::reference_muscles();
  synth::TrialSpec spec;
  spec.load_kg = 200.0;  // far beyond muscle capacity
  CHECK_THROWS_WITH_AS(synth::generate_trial(spec, mus),
                       doctest::Contains("limiting muscle"),
                       std::runtime_error);
}
