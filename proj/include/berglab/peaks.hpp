#pragma once

#include <array>

#include "berglab/hilbert.hpp"

namespace berglab {

// Smooth even cutoff: 1 on [-1/2, 1/2], 0 outside (-1, 1), glued on the
// shoulders by the exp(-1/t) smoothstep S(s) = g(s)/(g(s)+g(1-s)). By the
// symmetry of the gluing, chi(3/4) = S(1/2) = 1/2 exactly.
class CutoffProfile {
 public:
  double value(double t) const;
  double derivative(double t) const;

  // integrals over R of chi(t) e^{-lambda t^2} dt and of the second moment
  // t^2 chi(t) e^{-lambda t^2} dt, by dense Simpson; the one-dimensional
  // factors of the peak-limit oracles
  double gaussian_integral(double lambda) const;
  double gaussian_moment2(double lambda) const;
};

struct PeakSection {
  ChartPoint p;
  int k = 0;
  int direction = 0;  // 0: plain; j >= 1: directional factor sqrt(k) zeta_j
  NormalFrame nf;
  std::vector<cplx> coeff;  // in the Bergman frame

  cplx value_at_p;          // normal-gauge weighted representative at p
  double norm_sq_at_p = 0.0;
  // scaled derivatives of the representative at p, in normal coordinates
  std::array<cplx, 2> d_real_scaled;  // (1/sqrt k) d/dx_s
  cplx d_dz_scaled, d_dzbar_scaled;   // (1/sqrt k) Wirtinger derivatives
};

// the localized data chi(sqrt k y_1) chi(sqrt k y_2) (times sqrt(k) zeta for
// the directional variant) in normal coordinates at p, Bergman projected
PeakSection peak_section(const BergmanFrame& frame, const ChartPoint& p,
                         const CutoffProfile& chi);
PeakSection directional_peak_section(const BergmanFrame& frame,
                                     const ChartPoint& p, int j,
                                     const CutoffProfile& chi);

// the DataSection fed to the projection (exposed for linearity tests)
DataSection peak_data(const BergmanFrame& frame, const ChartPoint& p,
                      const CutoffProfile& chi, int direction);

// normal-gauge weighted representative at normal coordinate zeta
cplx peak_eval_normal(const BergmanFrame& frame, const PeakSection& s,
                      cplx zeta);

double peak_norm_sq(const PeakSection& s);
// quadrature mass of |u_k|^2 inside the normal-coordinate ball |zeta| <= rho
double peak_mass_in_ball(const BergmanFrame& frame, const PeakSection& s,
                         double rho);
// max of |u_k|^2 over seeded samples of the complement-chart region
double peak_max_outside(const BergmanFrame& frame, const PeakSection& s,
                        int samples, unsigned seed);

// One aggregated run of both lemma inequality families over base points and
// a k range, with uniform constants across all probes.
struct LemmaReport {
  std::vector<int> ks;
  std::vector<ChartPoint> points;

  // feasible uniform constants (positive iff every family is satisfiable
  // with one constant for all probed points and powers)
  double c0 = 0.0;  // plain peak family
  double c1 = 0.0;  // directional family
  int k_hat = 0;    // smallest probed power; all inequalities hold from here

  double limit_oracle = 0.0;       // det(R) I(lambda)^2 / pi at the first point
  double limit_richardson = 0.0;   // 1/k Richardson extrapolate of u~_k(p)
  double limit_rel_error = 0.0;

  bool cross_terms_skipped = true;  // j != s families are vacuous at n = 1
  bool pass = false;
  std::string detail;  // per-inequality worst cases, for the report
};

LemmaReport verify_peak_lemmas(const FrameFamily& family,
                               const std::vector<ChartPoint>& points);

}  // namespace berglab
