#pragma once

// Pre-processing chain and evaluation metrics: zero-phase Butterworth
// filtering, EMG envelope extraction, Gaussian angle smoothing, Welch PSD,
// and the L2 / RAE / PCC / VAF metrics.

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace nmm::signals {

using Eigen::ArrayXd;

struct Biquad {
  double b0, b1, b2, a1, a2;  // y[n] = b0 x + b1 x1 + b2 x2 - a1 y1 - a2 y2
};

// Butterworth designs as cascaded second-order sections (bilinear transform).
std::vector<Biquad> butter_lowpass(int order, double fc, double fs);
std::vector<Biquad> butter_highpass(int order, double fc, double fs);

ArrayXd sosfilt(const std::vector<Biquad>& sos, const ArrayXd& x);
// Forward-backward filtering with odd-reflection edge padding.
ArrayXd filtfilt(const std::vector<Biquad>& sos, const ArrayXd& x);

// Magnitude response of a cascade at frequency f (Hz).
double sos_gain(const std::vector<Biquad>& sos, double f, double fs);

struct EnvelopeConfig {
  double fs_in = 4000.0;
  double bp_lo = 10.0, bp_hi = 450.0;
  double lp_env = 7.0;
  int order = 4;
  int decim = 32;  // 4000 -> 125 Hz
};

// band-pass -> rectify -> low-pass -> decimate -> /MVC -> clip [0,1].
ArrayXd emg_envelope(const ArrayXd& raw_uV, double mvc_uV,
                     const EnvelopeConfig& cfg = {});

// Truncated-Gaussian convolution, unit-sum kernel, mirrored edges.
// `window` is the full window size in samples; kernel radius = window/2.
ArrayXd smooth_angle(const ArrayXd& angle_deg, double sigma, int window);

// Central differences interior, one-sided ends.
ArrayXd central_diff(const ArrayXd& x, double dt);

ArrayXd angular_velocity(const ArrayXd& angle_deg, double dt);

struct WelchResult {
  ArrayXd freqs;  // Hz
  ArrayXd pxx;
};

// P(f) = (1/K) sum_i |X_i(f)|^2 / N over windowed overlapping segments.
WelchResult welch_psd(const ArrayXd& x, int segment_len, int overlap,
                      double fs = 125.0);

double l2_norm(const ArrayXd& y);
double rae(const ArrayXd& y_true, const ArrayXd& y_pred);
double pcc(const ArrayXd& x, const ArrayXd& y);

}  // namespace nmm::signals
