#pragma once

// Attention encoder-decoder mapping joint kinematics (encoder) and lifted
// mass (decoder) to six EMG envelopes in (0,1). Weights are a flat ordered
// list of named tensors so optimizers and serializers can iterate them
// without knowing the architecture.

#include <cstdint>
#include <string>
#include <vector>

#include "nmm/autodiff.hpp"
#include "nmm/msk.hpp"

namespace nmm::net {

using Eigen::MatrixXd;

struct NmmConfig {
  int d_l = 6;          // embedding dimension
  int blocks = 4;       // encoder and decoder block count J
  int heads = 12;
  int d_k = 32;
  int d_v = 32;
  std::vector<int> ffn_widths = {6, 64, 128, 256, 128, 64, 6};
  std::vector<int> out_widths = {64, 32, 6};  // output projection P_D
  int out_channels = 6;
  // Encoder input channels drawn from {q1, q2, qd1, qd2} by index.
  std::vector<int> encoder_channels = {0, 1, 2, 3};
  bool positional = true;    // append sinusoidal position channels before P_q
  std::vector<int> unmeasured_channels = {3, 6};  // 1-based EMG labels
  // Fixed input normalization so raw degree/deg-per-s magnitudes do not
  // saturate the first layer.
  double q_scale = 90.0;
  double qd_scale = 360.0;
  double mass_scale = 4.0;

  int encoder_input_dim() const {
    return static_cast<int>(encoder_channels.size()) + (positional ? 2 : 0);
  }
  void validate() const;  // throws std::invalid_argument
};

struct Tensor {
  std::string name;
  MatrixXd value;
};

struct NmmWeights {
  std::vector<Tensor> tensors;

  MatrixXd& find(const std::string& name);
  const MatrixXd& find(const std::string& name) const;
  bool finite() const;
};

// Symmetric uniform init scaled by fan-in; layer-norm gains 1, biases 0.
NmmWeights init_weights(const NmmConfig& cfg, std::uint64_t seed);

// Tape-resident view of the weights (one leaf per tensor, same order).
struct WeightVars {
  std::vector<std::string> names;
  std::vector<ad::Var> vars;

  const ad::Var& find(const std::string& name) const;
};
WeightVars lift_weights(ad::Tape& t, const NmmWeights& w);

// Attention over token rows. Concatenated per-head projections:
// Wq, Wk are d_in x (h*d_k), Wv is d_in x (h*d_v), Wo is (h*d_v) x d_l.
ad::Var scaled_attention(ad::Tape& t, const ad::Var& q_in, const ad::Var& kv_in,
                         const ad::Var& Wq, const ad::Var& Wk,
                         const ad::Var& Wv, int d_k);
ad::Var multi_head(ad::Tape& t, const ad::Var& q_in, const ad::Var& kv_in,
                   const ad::Var& Wq, const ad::Var& Wk, const ad::Var& Wv,
                   const ad::Var& Wo, int heads, int d_k, int d_v);

ad::Var encoder_block(ad::Tape& t, const ad::Var& x, const WeightVars& w,
                      const NmmConfig& cfg, int j);
ad::Var decoder_block(ad::Tape& t, const ad::Var& y, const ad::Var& enc_out,
                      const WeightVars& w, const NmmConfig& cfg, int j);

// Encoder token matrix (T x input_dim): normalized selected channels plus
// optional sinusoidal position columns.
MatrixXd encoder_input(const msk::KinematicsTrace& kin, const NmmConfig& cfg);

// Full forward pass on the tape; returns envelopes as out_channels x T.
ad::Var nmm_forward_ad(ad::Tape& t, const msk::KinematicsTrace& kin,
                       double mass_kg, const WeightVars& w,
                       const NmmConfig& cfg);

// Plain-double forward pass (out_channels x T).
MatrixXd nmm_forward(const msk::KinematicsTrace& kin, double mass_kg,
                     const NmmWeights& w, const NmmConfig& cfg);

// Rows of nmm_forward selected by cfg.unmeasured_channels (1-based labels).
MatrixXd predict_deep(const msk::KinematicsTrace& kin, double mass_kg,
                      const NmmWeights& w, const NmmConfig& cfg);

}  // namespace nmm::net
