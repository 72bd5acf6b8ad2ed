#pragma once

#include "berglab/hilbert.hpp"

namespace berglab {

// Three-term fit of the on-diagonal kernel function:
//   P_k(x)/k^n ~ b0 + b1/k + b2/k^2   (n = 1 for all shipped models)
struct ExpansionFit {
  ChartPoint x;
  std::vector<int> ks;
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double rms_residual = 0.0;   // relative to the mean of P_k / k^n
  double reference_b0 = 0.0;   // (2 pi)^{-n} |det R|(x)
  double rel_deviation = 0.0;  // |b0 - reference| / reference
};

ExpansionFit fit_expansion_values(const std::vector<int>& ks,
                                  const std::vector<double>& pk, int n = 1);
ExpansionFit fit_expansion(const FrameFamily& family, const ChartPoint& x);

// Slope of -log of the diagonal-normalized kernel modulus against k. The
// normalization |P(x,y)|/sqrt(P(x)P(y)) removes the k^n amplitude exactly,
// so the diagonal probe measures 0 and the intercept carries the remaining
// amplitude ratio.
struct PhaseProbe {
  ChartPoint x, y;
  double im_psi_hat = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  double taylor_prediction = 0.0;  // order-2 polarization value
};

PhaseProbe extract_phase(const FrameFamily& family, const ChartPoint& x,
                         const ChartPoint& y);

// order-2 Taylor value of the phase magnitude exponent,
// phi(x) + phi(y) - 2 Re[polarization of phi about the midpoint]
double phase_taylor_order2(const ModelGeometry& geom, const ChartPoint& x,
                           const ChartPoint& y);

struct SupportSpec {
  ChartPoint center;
  double radius = 0.1;
  int rings = 2;    // radial sample rings inside the support
  int angles = 8;   // angular samples per ring
};

struct DecayReport {
  std::vector<int> ks;
  std::vector<double> sup_kernel;  // s_k over the sampled support pair
  double rate = 0.0;               // alpha in s_k ~ A e^{-alpha k}
  double rms_residual = 0.0;       // of the log-linear fit
  double drop_orders = 0.0;        // log10(s_first / s_last)
  double min_im_psi = 0.0;         // phase prediction at the closest pair
  double separation = 0.0;
  bool monotone_tail = false;      // s_k strictly decreasing beyond k = 16
};

DecayReport offdiagonal_decay(const FrameFamily& family,
                              const SupportSpec& chi1, const SupportSpec& chi);

// Worst ratio ||(I-P_k)u|| / ||dbar u|| over a seeded family of bump times
// low-order polynomial sections supported in a disc or annulus, fitted as
// C k^N on a log-log scale.
struct GapRegion {
  int chart = 0;
  cplx center{0.0, 0.0};
  double radius_lo = 0.0;  // 0 for a disc
  double radius_hi = 0.5;
};

struct GapEstimate {
  std::vector<int> ks;
  std::vector<double> rho;
  double c_hat = 0.0;
  double n_hat = 0.0;
  double rms_residual = 0.0;
  int sections = 0;
  int skipped = 0;
};

GapEstimate gap_estimate(const FrameFamily& family, const GapRegion& region,
                         int count, unsigned seed);

// the seeded test-section generator, shared with the experiments module
std::vector<DataSection> make_gap_sections(const ModelGeometry& geom, int k,
                                           const GapRegion& region, int count,
                                           unsigned seed);

}  // namespace berglab
