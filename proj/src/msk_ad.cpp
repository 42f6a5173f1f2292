#include "nmm/msk_ad.hpp"

#include <cmath>
#include <stdexcept>

namespace nmm::mskad {

using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

// Elementwise op with a separate (value, derivative) functor per row.
Var rowwise_fd(Tape& t, const Var& x, std::string name,
               const std::vector<std::function<std::pair<double, double>(double)>>& fs) {
  const Mat& xv = x.val();
  if (static_cast<std::size_t>(xv.rows()) != fs.size())
    throw std::invalid_argument("rowwise_fd: functor count mismatch");
  Mat v(xv.rows(), xv.cols()), d(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i)
    for (Eigen::Index j = 0; j < xv.cols(); ++j) {
      auto [fv, fd] = fs[static_cast<std::size_t>(i)](xv(i, j));
      v(i, j) = fv;
      d(i, j) = fd;
    }
  int ix = x.id;
  return t.push(std::move(v), std::move(name),
                [ix, d = std::move(d)](Tape& t, const Mat& g) {
                  t.accumulate(ix, g.cwiseProduct(d));
                });
}

}  // namespace

Var forward_torque(Tape& tape, const Var& emg, const msk::KinematicsTrace& kin,
                   const std::vector<msk::MuscleParams>& muscles,
                   const PhysioVars& physio, int delay) {
  const Eigen::Index M = emg.rows(), T = emg.cols();
  if (static_cast<std::size_t>(M) != muscles.size())
    throw std::invalid_argument("forward_torque(ad): channel count mismatch");
  if (kin.samples() != T)
    throw std::invalid_argument("forward_torque(ad): length mismatch");

  // Fixed polynomial parts of the geometry (trainable constants excluded).
  Mat len_poly(M, T), ma_poly(M, T);
  Mat sin_phi0(M, 1), inv_vmax(M, 1), neg_inv_gamma(M, 1);
  for (Eigen::Index j = 0; j < M; ++j) {
    msk::MuscleParams zeroed = muscles[j];
    zeroed.kappa = 0.0;
    zeroed.r = 0.0;
    for (Eigen::Index n = 0; n < T; ++n) {
      len_poly(j, n) = msk::muscle_length(kin.q1_deg(n), kin.q2_deg(n), zeroed);
      ma_poly(j, n) = msk::moment_arm(kin.q1_deg(n), zeroed);
    }
    sin_phi0(j, 0) = std::sin(muscles[j].phi0);
    inv_vmax(j, 0) = 1.0 / muscles[j].vmax;
    neg_inv_gamma(j, 0) = -1.0 / muscles[j].gamma;
  }

  // Excitation filter coefficients from the pole constants.
  Var beta1 = ad::add(physio.c1, physio.c2);
  Var beta2 = ad::cmul(physio.c1, physio.c2);
  Var alpha = ad::add_scalar(ad::add(beta1, beta2), 1.0);
  Var u = ad::iir2(emg, alpha, beta1, beta2, delay);
  Var a = ad::activation_rows(u, physio.A);

  Var lm = ad::scale(ad::add_colvec(tape.constant(len_poly), physio.kappa), 1e-3);
  Var lbar = ad::div_colvec(lm, physio.L0);
  Var vbar = ad::mul_colvec(ad::central_diff_cols(lbar, kin.dt),
                            tape.constant(inv_vmax));

  Var fa = ad::exp(ad::mul_colvec(ad::square(ad::add_scalar(lbar, -1.0)),
                                  tape.constant(neg_inv_gamma)));

  std::vector<std::function<std::pair<double, double>(double)>> fv_fns, fp_fns;
  for (const auto& m : muscles) {
    fv_fns.emplace_back([Af = m.Af, Flen = m.Flen](double v) {
      return std::make_pair(msk::force_velocity(v, Af, Flen),
                            msk::force_velocity_deriv(v, Af, Flen));
    });
    fp_fns.emplace_back([kPE = m.kPE, eps0 = m.eps0](double l) {
      return std::make_pair(msk::passive_fl(l, kPE, eps0),
                            msk::passive_fl_deriv(l, kPE, eps0));
    });
  }
  Var fv = rowwise_fd(tape, vbar, "force_velocity", fv_fns);
  Var fp = rowwise_fd(tape, lbar, "passive_fl", fp_fns);

  Var w = ad::mul_colvec(ad::recip(lm), ad::cmul(physio.L0, tape.constant(sin_phi0)));
  Var cos_phi = ad::unary(w, "cos_pennation", [](double x) {
    return std::make_pair(msk::cos_pennation_w(x), msk::cos_pennation_w_deriv(x));
  });

  Var active = ad::cmul(ad::cmul(a, fa), fv);
  Var force = ad::cmul(ad::mul_colvec(ad::add(active, fp), physio.F0m), cos_phi);
  Var ma_m = ad::scale(ad::add_colvec(tape.constant(ma_poly), physio.r), 1e-3);
  return ad::colwise_sum(ad::cmul(force, ma_m));
}

}  // namespace nmm::mskad
