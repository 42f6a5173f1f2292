#include "nmm/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nmm::net {

using ad::Tape;
using ad::Var;

void NmmConfig::validate() const {
  if (d_l < 1 || blocks < 1 || heads < 1 || d_k < 1 || d_v < 1)
    throw std::invalid_argument("NmmConfig: dimensions must be positive");
  if (out_channels != 6)
    throw std::invalid_argument("NmmConfig: output channel count must be 6");
  if (ffn_widths.size() < 2 || ffn_widths.front() != d_l ||
      ffn_widths.back() != d_l)
    throw std::invalid_argument("NmmConfig: FFN must map d_l -> d_l");
  if (out_widths.empty() || out_widths.back() != out_channels)
    throw std::invalid_argument("NmmConfig: output projection must end at 6");
  if (encoder_channels.empty())
    throw std::invalid_argument("NmmConfig: encoder needs >= 1 channel");
  for (int c : encoder_channels)
    if (c < 0 || c > 3)
      throw std::invalid_argument("NmmConfig: encoder channels are 0..3");
  for (int c : unmeasured_channels)
    if (c < 1 || c > out_channels)
      throw std::invalid_argument("NmmConfig: unmeasured channels are 1..6");
}

MatrixXd& NmmWeights::find(const std::string& name) {
  for (Tensor& t : tensors)
    if (t.name == name) return t.value;
  throw std::out_of_range("NmmWeights: no tensor named " + name);
}

const MatrixXd& NmmWeights::find(const std::string& name) const {
  for (const Tensor& t : tensors)
    if (t.name == name) return t.value;
  throw std::out_of_range("NmmWeights: no tensor named " + name);
}

bool NmmWeights::finite() const {
  for (const Tensor& t : tensors)
    if (!t.value.allFinite()) return false;
  return true;
}

namespace {

void add_attention(NmmWeights& w, const std::string& prefix, int d_in,
                   const NmmConfig& cfg, std::mt19937_64& rng) {
  auto uniform = [&rng](int rows, int cols, int fan_in) {
    double lim = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> d(-lim, lim);
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = d(rng);
    return m;
  };
  w.tensors.push_back({prefix + ".Wq",
                       uniform(d_in, cfg.heads * cfg.d_k, d_in)});
  w.tensors.push_back({prefix + ".Wk",
                       uniform(d_in, cfg.heads * cfg.d_k, d_in)});
  w.tensors.push_back({prefix + ".Wv",
                       uniform(d_in, cfg.heads * cfg.d_v, d_in)});
  w.tensors.push_back({prefix + ".Wo",
                       uniform(cfg.heads * cfg.d_v, cfg.d_l,
                               cfg.heads * cfg.d_v)});
}

void add_dense(NmmWeights& w, const std::string& prefix,
               const std::vector<int>& widths, std::mt19937_64& rng) {
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    int fan_in = widths[l];
    double lim = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> d(-lim, lim);
    MatrixXd W(widths[l], widths[l + 1]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = d(rng);
    w.tensors.push_back({prefix + ".W" + std::to_string(l), W});
    w.tensors.push_back({prefix + ".b" + std::to_string(l),
                         MatrixXd::Zero(1, widths[l + 1])});
  }
}

void add_layernorm(NmmWeights& w, const std::string& prefix, int dim) {
  w.tensors.push_back({prefix + ".g", MatrixXd::Ones(1, dim)});
  w.tensors.push_back({prefix + ".b", MatrixXd::Zero(1, dim)});
}

}  // namespace

NmmWeights init_weights(const NmmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  NmmWeights w;
  auto uniform = [&rng](int rows, int cols, int fan_in) {
    double lim = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> d(-lim, lim);
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = d(rng);
    return m;
  };

  int enc_in = cfg.encoder_input_dim();
  w.tensors.push_back({"P_q.W", uniform(enc_in, cfg.d_l, enc_in)});
  w.tensors.push_back({"P_q.b", MatrixXd::Zero(1, cfg.d_l)});
  w.tensors.push_back({"P_m.W", uniform(1, cfg.d_l, 1)});
  w.tensors.push_back({"P_m.b", MatrixXd::Zero(1, cfg.d_l)});

  for (int j = 0; j < cfg.blocks; ++j) {
    std::string p = "enc" + std::to_string(j);
    add_attention(w, p + ".self", cfg.d_l, cfg, rng);
    add_layernorm(w, p + ".ln1", cfg.d_l);
    add_dense(w, p + ".ffn", cfg.ffn_widths, rng);
    add_layernorm(w, p + ".ln2", cfg.d_l);
  }
  for (int j = 0; j < cfg.blocks; ++j) {
    std::string p = "dec" + std::to_string(j);
    add_attention(w, p + ".self", cfg.d_l, cfg, rng);
    add_layernorm(w, p + ".ln1", cfg.d_l);
    add_attention(w, p + ".cross", cfg.d_l, cfg, rng);
    add_layernorm(w, p + ".ln2", cfg.d_l);
    add_dense(w, p + ".ffn", cfg.ffn_widths, rng);
    add_layernorm(w, p + ".ln3", cfg.d_l);
  }

  std::vector<int> pd = cfg.out_widths;
  pd.insert(pd.begin(), cfg.d_l);
  add_dense(w, "P_D", pd, rng);
  return w;
}

const Var& WeightVars::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return vars[i];
  throw std::out_of_range("WeightVars: no tensor named " + name);
}

WeightVars lift_weights(Tape& t, const NmmWeights& w) {
  if (!w.finite())
    throw std::invalid_argument("lift_weights: non-finite weight tensor");
  WeightVars out;
  for (const Tensor& tensor : w.tensors) {
    out.names.push_back(tensor.name);
    out.vars.push_back(t.leaf(tensor.value, tensor.name));
  }
  return out;
}

Var scaled_attention(Tape& t, const Var& q_in, const Var& kv_in,
                     const Var& Wq, const Var& Wk, const Var& Wv, int d_k) {
  if (q_in.cols() != Wq.rows() || kv_in.cols() != Wk.rows() ||
      kv_in.cols() != Wv.rows() || Wq.cols() != Wk.cols())
    throw std::invalid_argument("scaled_attention: shape mismatch");
  Var Q = ad::matmul(q_in, Wq);
  Var K = ad::matmul(kv_in, Wk);
  Var V = ad::matmul(kv_in, Wv);
  Var scores = ad::scale(ad::matmul(Q, ad::transpose(K)),
                         1.0 / std::sqrt(static_cast<double>(d_k)));
  return ad::matmul(ad::softmax_rows(scores), V);
}

Var multi_head(Tape& t, const Var& q_in, const Var& kv_in, const Var& Wq,
               const Var& Wk, const Var& Wv, const Var& Wo, int heads,
               int d_k, int d_v) {
  if (Wq.cols() != heads * d_k || Wv.cols() != heads * d_v ||
      Wo.rows() != heads * d_v)
    throw std::invalid_argument("multi_head: shape mismatch");
  Var Q = ad::matmul(q_in, Wq);
  Var K = ad::matmul(kv_in, Wk);
  Var V = ad::matmul(kv_in, Wv);
  int Tq = static_cast<int>(q_in.rows());
  int Tk = static_cast<int>(kv_in.rows());
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_k));
  std::vector<Var> head_out;
  for (int i = 0; i < heads; ++i) {
    Var Qi = ad::block(Q, 0, i * d_k, Tq, d_k);
    Var Ki = ad::block(K, 0, i * d_k, Tk, d_k);
    Var Vi = ad::block(V, 0, i * d_v, Tk, d_v);
    Var scores = ad::scale(ad::matmul(Qi, ad::transpose(Ki)), inv_sqrt);
    head_out.push_back(ad::matmul(ad::softmax_rows(scores), Vi));
  }
  return ad::matmul(ad::hcat(head_out), Wo);
}

namespace {

Var ffn(Tape& t, const Var& x, const WeightVars& w, const std::string& prefix,
        std::size_t layers) {
  Var h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_rowvec(ad::matmul(h, w.find(prefix + ".W" + std::to_string(l))),
                       w.find(prefix + ".b" + std::to_string(l)));
    if (l + 1 < layers) h = ad::gelu(h);
  }
  return h;
}

Var attention_sublayer(Tape& t, const Var& q_in, const Var& kv_in,
                       const WeightVars& w, const std::string& prefix,
                       const NmmConfig& cfg) {
  return multi_head(t, q_in, kv_in, w.find(prefix + ".Wq"),
                    w.find(prefix + ".Wk"), w.find(prefix + ".Wv"),
                    w.find(prefix + ".Wo"), cfg.heads, cfg.d_k, cfg.d_v);
}

Var sublayer_norm(Tape& t, const Var& x, const Var& fx, const WeightVars& w,
                  const std::string& ln) {
  return ad::layernorm_rows(ad::add(x, fx), w.find(ln + ".g"),
                            w.find(ln + ".b"));
}

}  // namespace

Var encoder_block(Tape& t, const Var& x, const WeightVars& w,
                  const NmmConfig& cfg, int j) {
  std::string p = "enc" + std::to_string(j);
  Var s1 = sublayer_norm(t, x, attention_sublayer(t, x, x, w, p + ".self", cfg),
                         w, p + ".ln1");
  Var f = ffn(t, s1, w, p + ".ffn", cfg.ffn_widths.size() - 1);
  return sublayer_norm(t, s1, f, w, p + ".ln2");
}

Var decoder_block(Tape& t, const Var& y, const Var& enc_out,
                  const WeightVars& w, const NmmConfig& cfg, int j) {
  std::string p = "dec" + std::to_string(j);
  Var s1 = sublayer_norm(t, y, attention_sublayer(t, y, y, w, p + ".self", cfg),
                         w, p + ".ln1");
  Var s2 = sublayer_norm(
      t, s1, attention_sublayer(t, s1, enc_out, w, p + ".cross", cfg), w,
      p + ".ln2");
  Var f = ffn(t, s2, w, p + ".ffn", cfg.ffn_widths.size() - 1);
  return sublayer_norm(t, s2, f, w, p + ".ln3");
}

MatrixXd encoder_input(const msk::KinematicsTrace& kin, const NmmConfig& cfg) {
  const Eigen::Index T = kin.samples();
  if (T < 1) throw std::invalid_argument("encoder_input: empty trace");
  if (kin.q2_deg.size() != T || kin.qd1_dps.size() != T ||
      kin.qd2_dps.size() != T)
    throw std::invalid_argument("encoder_input: channel length mismatch");

  MatrixXd all(T, 4);
  all.col(0) = kin.q1_deg.matrix() / cfg.q_scale;
  all.col(1) = kin.q2_deg.matrix() / cfg.q_scale;
  all.col(2) = kin.qd1_dps.matrix() / cfg.qd_scale;
  all.col(3) = kin.qd2_dps.matrix() / cfg.qd_scale;

  MatrixXd x(T, cfg.encoder_input_dim());
  for (std::size_t c = 0; c < cfg.encoder_channels.size(); ++c)
    x.col(static_cast<Eigen::Index>(c)) = all.col(cfg.encoder_channels[c]);
  if (cfg.positional) {
    double denom = T > 1 ? static_cast<double>(T - 1) : 1.0;
    for (Eigen::Index n = 0; n < T; ++n) {
      double p = M_PI * n / denom;
      x(n, x.cols() - 2) = std::sin(p);
      x(n, x.cols() - 1) = std::cos(p);
    }
  }
  return x;
}

Var nmm_forward_ad(Tape& t, const msk::KinematicsTrace& kin, double mass_kg,
                   const WeightVars& w, const NmmConfig& cfg) {
  cfg.validate();
  const Eigen::Index T = kin.samples();
  Var enc_x = ad::add_rowvec(
      ad::matmul(t.constant(encoder_input(kin, cfg)), w.find("P_q.W")),
      w.find("P_q.b"));
  for (int j = 0; j < cfg.blocks; ++j) enc_x = encoder_block(t, enc_x, w, cfg, j);

  // Scalar mass broadcast to a length-T token sequence after P_m.
  MatrixXd mass_tokens = MatrixXd::Constant(T, 1, mass_kg / cfg.mass_scale);
  Var dec_y = ad::add_rowvec(
      ad::matmul(t.constant(mass_tokens), w.find("P_m.W")), w.find("P_m.b"));
  for (int j = 0; j < cfg.blocks; ++j)
    dec_y = decoder_block(t, dec_y, enc_x, w, cfg, j);

  std::size_t pd_layers = cfg.out_widths.size();
  Var out = dec_y;
  for (std::size_t l = 0; l < pd_layers; ++l) {
    out = ad::add_rowvec(
        ad::matmul(out, w.find("P_D.W" + std::to_string(l))),
        w.find("P_D.b" + std::to_string(l)));
    if (l + 1 < pd_layers) out = ad::gelu(out);
  }
  return ad::transpose(ad::sigmoid(out));  // out_channels x T
}

MatrixXd nmm_forward(const msk::KinematicsTrace& kin, double mass_kg,
                     const NmmWeights& w, const NmmConfig& cfg) {
  Tape t;
  WeightVars wv = lift_weights(t, w);
  return nmm_forward_ad(t, kin, mass_kg, wv, cfg).val();
}

MatrixXd predict_deep(const msk::KinematicsTrace& kin, double mass_kg,
                      const NmmWeights& w, const NmmConfig& cfg) {
  MatrixXd env = nmm_forward(kin, mass_kg, w, cfg);
  MatrixXd deep(static_cast<Eigen::Index>(cfg.unmeasured_channels.size()),
                env.cols());
  for (std::size_t i = 0; i < cfg.unmeasured_channels.size(); ++i)
    deep.row(static_cast<Eigen::Index>(i)) =
        env.row(cfg.unmeasured_channels[i] - 1);
  return deep;
}

}  // namespace nmm::net
