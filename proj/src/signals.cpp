#include "nmm/signals.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace nmm::signals {

namespace {

// Bilinear transform of an analog second-order section
// (n2 s^2 + n1 s + n0) / (s^2 + d1 s + d0) at sample rate fs.
Biquad bilinear(double n2, double n1, double n0, double d1, double d0,
                double fs) {
  double K = 2.0 * fs;
  double D0 = K * K + d1 * K + d0;
  Biquad q;
  q.b0 = (n2 * K * K + n1 * K + n0) / D0;
  q.b1 = (-2.0 * n2 * K * K + 2.0 * n0) / D0;
  q.b2 = (n2 * K * K - n1 * K + n0) / D0;
  q.a1 = (-2.0 * K * K + 2.0 * d0) / D0;
  q.a2 = (K * K - d1 * K + d0) / D0;
  return q;
}

void check_design(int order, double fc, double fs) {
  if (order <= 0 || order % 2 != 0)
    throw std::invalid_argument("butterworth: order must be positive and even");
  if (!(fc > 0.0 && fc < fs / 2.0))
    throw std::invalid_argument("butterworth: cutoff must lie in (0, fs/2)");
}

}  // namespace

std::vector<Biquad> butter_lowpass(int order, double fc, double fs) {
  check_design(order, fc, fs);
  double wc = 2.0 * fs * std::tan(M_PI * fc / fs);  // prewarped analog cutoff
  std::vector<Biquad> sos;
  for (int k = 0; k < order / 2; ++k) {
    double theta = M_PI * (2.0 * k + order + 1.0) / (2.0 * order);
    double re = wc * std::cos(theta);
    sos.push_back(bilinear(0.0, 0.0, wc * wc, -2.0 * re, wc * wc, fs));
  }
  return sos;
}

std::vector<Biquad> butter_highpass(int order, double fc, double fs) {
  check_design(order, fc, fs);
  double wc = 2.0 * fs * std::tan(M_PI * fc / fs);
  std::vector<Biquad> sos;
  for (int k = 0; k < order / 2; ++k) {
    double theta = M_PI * (2.0 * k + order + 1.0) / (2.0 * order);
    double re = wc * std::cos(theta);
    sos.push_back(bilinear(1.0, 0.0, 0.0, -2.0 * re, wc * wc, fs));
  }
  return sos;
}

ArrayXd sosfilt(const std::vector<Biquad>& sos, const ArrayXd& x) {
  ArrayXd y = x;
  for (const Biquad& q : sos) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (Eigen::Index n = 0; n < y.size(); ++n) {
      double xn = y(n);
      double yn = q.b0 * xn + q.b1 * x1 + q.b2 * x2 - q.a1 * y1 - q.a2 * y2;
      x2 = x1;
      x1 = xn;
      y2 = y1;
      y1 = yn;
      y(n) = yn;
    }
  }
  return y;
}

ArrayXd filtfilt(const std::vector<Biquad>& sos, const ArrayXd& x) {
  const Eigen::Index n = x.size();
  Eigen::Index pad = std::min<Eigen::Index>(3 * (2 * (Eigen::Index)sos.size() * 2 + 1), n - 1);
  if (n < 2) return x;
  ArrayXd ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i)
    ext(i) = 2.0 * x(0) - x(pad - i);
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i)
    ext(pad + n + i) = 2.0 * x(n - 1) - x(n - 2 - i);

  ArrayXd y = sosfilt(sos, ext);
  y.reverseInPlace();
  y = sosfilt(sos, y);
  y.reverseInPlace();
  return y.segment(pad, n);
}

double sos_gain(const std::vector<Biquad>& sos, double f, double fs) {
  std::complex<double> z = std::polar(1.0, 2.0 * M_PI * f / fs);
  std::complex<double> zi = 1.0 / z;
  std::complex<double> h = 1.0;
  for (const Biquad& q : sos)
    h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) /
         (1.0 + q.a1 * zi + q.a2 * zi * zi);
  return std::abs(h);
}

ArrayXd emg_envelope(const ArrayXd& raw_uV, double mvc_uV,
                     const EnvelopeConfig& cfg) {
  if (!(mvc_uV > 0.0))
    throw std::invalid_argument("emg_envelope: MVC must be positive");
  if (raw_uV.size() < 8 * cfg.order * cfg.decim)
    throw std::invalid_argument("emg_envelope: series too short");

  auto hp = butter_highpass(cfg.order, cfg.bp_lo, cfg.fs_in);
  auto lp = butter_lowpass(cfg.order, cfg.bp_hi, cfg.fs_in);
  ArrayXd band = filtfilt(lp, filtfilt(hp, raw_uV));
  ArrayXd rect = band.abs();
  auto env_lp = butter_lowpass(cfg.order, cfg.lp_env, cfg.fs_in);
  ArrayXd smooth = filtfilt(env_lp, rect);

  Eigen::Index out_n = smooth.size() / cfg.decim;
  ArrayXd env(out_n);
  for (Eigen::Index i = 0; i < out_n; ++i)
    env(i) = smooth(i * cfg.decim);
  env /= mvc_uV;
  return env.cwiseMax(0.0).cwiseMin(1.0);
}

ArrayXd smooth_angle(const ArrayXd& angle_deg, double sigma, int window) {
  if (window < 1 || sigma <= 0.0)
    throw std::invalid_argument("smooth_angle: bad kernel parameters");
  int radius = window / 2;
  Eigen::ArrayXd kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel(k + radius) = std::exp(-0.5 * k * k / (sigma * sigma));
  kernel /= kernel.sum();

  const Eigen::Index n = angle_deg.size();
  ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      Eigen::Index j = i + k;
      if (j < 0) j = -j;                       // mirrored edges
      if (j >= n) j = 2 * (n - 1) - j;
      acc += kernel(k + radius) * angle_deg(j);
    }
    out(i) = acc;
  }
  return out;
}

ArrayXd central_diff(const ArrayXd& x, double dt) {
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("central_diff: needs >= 2 samples");
  ArrayXd d(n);
  d(0) = (x(1) - x(0)) / dt;
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    d(i) = (x(i + 1) - x(i - 1)) / (2.0 * dt);
  d(n - 1) = (x(n - 1) - x(n - 2)) / dt;
  return d;
}

ArrayXd angular_velocity(const ArrayXd& angle_deg, double dt) {
  return central_diff(angle_deg, dt);
}

namespace {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<std::complex<double>> dft(const ArrayXd& seg) {
  const std::size_t n = static_cast<std::size_t>(seg.size());
  std::vector<std::complex<double>> out(n);
  if ((n & (n - 1)) == 0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = seg(static_cast<Eigen::Index>(i));
    fft_radix2(out, false);
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t m = 0; m < n; ++m)
      acc += seg(static_cast<Eigen::Index>(m)) *
             std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * m) / n);
    out[k] = acc;
  }
  return out;
}

}  // namespace

WelchResult welch_psd(const ArrayXd& x, int segment_len, int overlap,
                      double fs) {
  const Eigen::Index L = x.size();
  if (segment_len > L)
    throw std::invalid_argument("welch_psd: segment longer than signal");
  if (overlap < 0 || overlap >= segment_len)
    throw std::invalid_argument("welch_psd: invalid overlap");

  ArrayXd window(segment_len);
  for (int i = 0; i < segment_len; ++i)
    window(i) = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (segment_len - 1)));

  const int step = segment_len - overlap;
  ArrayXd acc = ArrayXd::Zero(segment_len / 2 + 1);
  int K = 0;
  for (Eigen::Index start = 0; start + segment_len <= L; start += step) {
    ArrayXd seg = x.segment(start, segment_len) * window;
    auto X = dft(seg);
    for (int k = 0; k <= segment_len / 2; ++k)
      acc(k) += std::norm(X[static_cast<std::size_t>(k)]) / segment_len;
    ++K;
  }
  WelchResult res;
  res.pxx = acc / K;
  res.freqs = ArrayXd::LinSpaced(segment_len / 2 + 1, 0.0,
                                 fs * (segment_len / 2) / segment_len);
  return res;
}

double l2_norm(const ArrayXd& y) { return std::sqrt(y.square().sum()); }

double rae(const ArrayXd& y_true, const ArrayXd& y_pred) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("rae: length mismatch");
  double mean = y_true.mean();
  double denom = (y_true - mean).abs().sum();
  if (denom == 0.0)
    throw std::domain_error("rae: ground truth is constant");
  return (y_true - y_pred).abs().sum() / denom;
}

double pcc(const ArrayXd& x, const ArrayXd& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("pcc: length mismatch");
  double mx = x.mean(), my = y.mean();
  ArrayXd dx = x - mx, dy = y - my;
  double sx = std::sqrt(dx.square().sum()), sy = std::sqrt(dy.square().sum());
  if (sx == 0.0 || sy == 0.0)
    throw std::domain_error("pcc: constant series");
  return (dx * dy).sum() / (sx * sy);
}

}  // namespace nmm::signals
