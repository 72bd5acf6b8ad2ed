#include "berglab/asymptotics.hpp"

#include <algorithm>
#include <cmath>

namespace berglab {

ExpansionFit fit_expansion_values(const std::vector<int>& ks,
                                  const std::vector<double>& pk, int n) {
  require(ks.size() >= 5, ErrorCode::Usage,
          "fit_expansion: need at least 5 distinct k values");
  require(ks.size() == pk.size(), ErrorCode::Usage,
          "fit_expansion: mismatched inputs");

  const double k0 = static_cast<double>(ks.front());
  std::vector<double> y(ks.size()), c0(ks.size()), c1(ks.size()), c2(ks.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    require(pk[i] > 0.0, ErrorCode::Numerics,
            "fit_expansion: non-positive kernel value");
    const double k = ks[i];
    y[i] = pk[i] / std::pow(k, n);
    c0[i] = 1.0;
    c1[i] = k0 / k;  // scaled basis keeps the Vandermonde well conditioned
    c2[i] = (k0 / k) * (k0 / k);
    scale += std::abs(y[i]);
  }
  scale /= static_cast<double>(ks.size());

  const FitResult fit = least_squares({c0, c1, c2}, y);
  ExpansionFit out;
  out.ks = ks;
  out.b0 = fit.coeffs[0];
  out.b1 = fit.coeffs[1] * k0;
  out.b2 = fit.coeffs[2] * k0 * k0;
  out.rms_residual = fit.rms_residual / scale;
  if (out.b0 <= 0.0)
    fail(ErrorCode::Numerics, "fit_expansion: fitted leading term <= 0");
  return out;
}

ExpansionFit fit_expansion(const FrameFamily& family, const ChartPoint& x) {
  const std::vector<int> ks = family.ks();
  std::vector<double> pk;
  pk.reserve(ks.size());
  for (int k : ks) pk.push_back(family.at(k).kernel_function(x));
  ExpansionFit out = fit_expansion_values(ks, pk, 1);
  out.x = x;
  out.reference_b0 = family.geom->det_curvature(x) / kTwoPi;
  out.rel_deviation = std::abs(out.b0 - out.reference_b0) / out.reference_b0;
  return out;
}

double phase_taylor_order2(const ModelGeometry& geom, const ChartPoint& x,
                           const ChartPoint& y) {
  require(x.chart == y.chart, ErrorCode::Domain,
          "phase prediction: points must share a chart");
  cplx a, b, mid;
  if (geom.name() == "torus") {
    // shortest representatives around the midpoint
    const cplx d = TorusGeometry::displacement(x.z, y.z);
    mid = x.z + 0.5 * d;
    a = -0.5 * d;
    b = 0.5 * d;
  } else {
    mid = 0.5 * (x.z + y.z);
    a = x.z - mid;
    b = y.z - mid;
  }
  const WeightJet jet = geom.weight_jet(x.chart, mid);
  const cplx pol_x = jet.value + jet.d_z * a + std::conj(jet.d_z * b) +
                     0.5 * jet.d_zz * a * a +
                     0.5 * std::conj(jet.d_zz * b * b) +
                     jet.d_zzbar * a * std::conj(b);
  return geom.weight(x.chart, mid + a) + geom.weight(y.chart, mid + b) -
         2.0 * pol_x.real();
}

PhaseProbe extract_phase(const FrameFamily& family, const ChartPoint& x,
                         const ChartPoint& y) {
  const std::vector<int> ks = family.ks();
  require(ks.size() >= 2, ErrorCode::Usage,
          "extract_phase: need at least 2 k values");

  std::vector<double> kk, neg_log_rho;
  for (int k : ks) {
    const BergmanFrame& f = family.at(k);
    const double px = f.kernel_function(x);
    const double py = f.kernel_function(y);
    require(px > 0.0 && py > 0.0, ErrorCode::Numerics,
            "extract_phase: vanishing diagonal kernel");
    const double m = std::abs(f.kernel(x, y));
    if (m < 1e-280)
      fail(ErrorCode::Numerics,
           "extract_phase: kernel below the underflow floor at k=" +
               std::to_string(k) + "; use a smaller |x-y| or smaller k");
    neg_log_rho.push_back(-std::log(m / std::sqrt(px * py)));
    kk.push_back(static_cast<double>(k));
  }

  const FitResult fit = fit_line(kk, neg_log_rho);
  PhaseProbe out;
  out.x = x;
  out.y = y;
  out.intercept = fit.coeffs[0];
  out.im_psi_hat = fit.coeffs[1];
  out.rms_residual = fit.rms_residual;
  out.taylor_prediction = phase_taylor_order2(*family.geom, x, y);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ChartPoint> support_samples(const ModelGeometry& geom,
                                        const SupportSpec& s) {
  std::vector<ChartPoint> pts;
  pts.push_back(s.center);
  for (int r = 1; r <= s.rings; ++r) {
    const double rad = s.radius * r / s.rings;
    for (int t = 0; t < s.angles; ++t) {
      const cplx z = s.center.z + std::polar(rad, kTwoPi * t / s.angles);
      pts.push_back({s.center.chart, z});
    }
  }
  (void)geom;
  return pts;
}

double support_separation(const ModelGeometry& geom, const SupportSpec& a,
                          const SupportSpec& b) {
  double center_dist;
  if (geom.name() == "torus")
    center_dist = std::abs(TorusGeometry::displacement(a.center.z, b.center.z));
  else {
    require(a.center.chart == b.center.chart, ErrorCode::Domain,
            "decay supports must live in one chart");
    center_dist = std::abs(a.center.z - b.center.z);
  }
  return center_dist - a.radius - b.radius;
}

}  // namespace

DecayReport offdiagonal_decay(const FrameFamily& family,
                              const SupportSpec& chi1, const SupportSpec& chi) {
  const ModelGeometry& geom = *family.geom;
  const double sep = support_separation(geom, chi1, chi);
  require(sep > 0.0, ErrorCode::Domain,
          "offdiagonal_decay: supports overlap (separation " + fmt_g17(sep) +
              ")");

  const auto xs = support_samples(geom, chi1);
  const auto ys = support_samples(geom, chi);

  DecayReport out;
  out.separation = sep;
  out.min_im_psi = 1e300;
  for (const auto& x : xs)
    for (const auto& y : ys)
      out.min_im_psi =
          std::min(out.min_im_psi, phase_taylor_order2(geom, x, y));

  std::vector<double> kk, log_s;
  for (int k : family.ks()) {
    const BergmanFrame& f = family.at(k);
    const int d = f.dim();
    std::vector<std::vector<cplx>> fx(xs.size(), std::vector<cplx>(d)),
        fy(ys.size(), std::vector<cplx>(d));
    for (std::size_t i = 0; i < xs.size(); ++i) f.frame_values(xs[i], fx[i]);
    for (std::size_t i = 0; i < ys.size(); ++i) f.frame_values(ys[i], fy[i]);
    double sup = 0.0;
    for (const auto& a : fx)
      for (const auto& b : fy) {
        cplx s{0.0, 0.0};
        for (int j = 0; j < d; ++j) s += a[j] * std::conj(b[j]);
        sup = std::max(sup, std::abs(s));
      }
    out.ks.push_back(k);
    out.sup_kernel.push_back(sup);
    kk.push_back(static_cast<double>(k));
    log_s.push_back(std::log(sup));
  }

  const FitResult fit = fit_line(kk, log_s);
  out.rate = -fit.coeffs[1];
  out.rms_residual = fit.rms_residual;
  out.drop_orders =
      (std::log10(out.sup_kernel.front()) - std::log10(out.sup_kernel.back()));
  out.monotone_tail = true;
  for (std::size_t i = 1; i < out.ks.size(); ++i)
    if (out.ks[i] > 16 && !(out.sup_kernel[i] < out.sup_kernel[i - 1]))
      out.monotone_tail = false;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<DataSection> make_gap_sections(const ModelGeometry& geom, int k,
                                           const GapRegion& region, int count,
                                           unsigned seed) {
  Rng rng(seed);
  std::vector<DataSection> out;
  out.reserve(count);
  const double width = region.radius_hi - region.radius_lo;
  require(width > 0.0, ErrorCode::Usage, "gap region is empty");

  for (int s = 0; s < count; ++s) {
    // bump radius and center chosen so the support stays inside the region
    const double brad = 0.30 * width;
    double rc;
    if (region.radius_lo == 0.0)
      rc = (width - brad) * std::sqrt(rng.uniform());
    else
      rc = rng.uniform(region.radius_lo + brad, region.radius_hi - brad);
    const cplx c = region.center + std::polar(rc, rng.uniform(0.0, kTwoPi));

    // low-order polynomial in z and zbar, degree <= 3 in zbar
    std::vector<cplx> coeff(8);
    for (auto& v : coeff) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Bump bump{c, 1.0, brad};
    const int chart = region.chart;
    const ModelGeometry* gp = &geom;

    DataSection d;
    d.chart = chart;
    d.center = c;
    d.radius = brad;
    d.weighted = [gp, k, chart, bump, coeff, c](cplx z) -> cplx {
      const double b = bump.value(z);
      if (b == 0.0) return {0.0, 0.0};
      const cplx w = z - c;
      const cplx wb = std::conj(w);
      cplx poly{0.0, 0.0};
      cplx pb{1.0, 0.0};
      for (int q = 0; q <= 3; ++q) {
        poly += (coeff[2 * q] + coeff[2 * q + 1] * w) * pb;
        pb *= wb;
      }
      return b * poly * std::exp(-k * gp->weight(chart, z));
    };
    out.push_back(std::move(d));
  }
  return out;
}

GapEstimate gap_estimate(const FrameFamily& family, const GapRegion& region,
                         int count, unsigned seed) {
  const ModelGeometry& geom = *family.geom;
  GapEstimate out;
  out.sections = count;

  std::vector<double> kk, log_rho;
  for (int k : family.ks()) {
    const BergmanFrame& f = family.at(k);
    const auto sections = make_gap_sections(geom, k, region, count, seed);
    double worst = 0.0;
    int used = 0;
    for (const auto& d : sections) {
      const double nu = f.data_norm(d);
      const double nd = f.dbar_norm(d);
      if (nd < 1e-12 * nu) {
        ++out.skipped;
        continue;
      }
      const auto c = f.project(d);
      KahanSum csq;
      for (const auto& v : c) csq.add(std::norm(v));
      const double resid2 = std::max(0.0, nu * nu - csq.value());
      worst = std::max(worst, std::sqrt(resid2) / nd);
      ++used;
    }
    require(used > 0, ErrorCode::Generator,
            "gap_estimate: every test section was numerically holomorphic");
    out.ks.push_back(k);
    out.rho.push_back(worst);
    kk.push_back(std::log(static_cast<double>(k)));
    log_rho.push_back(std::log(worst));
  }

  const FitResult fit = fit_line(kk, log_rho);
  out.c_hat = std::exp(fit.coeffs[0]);
  out.n_hat = fit.coeffs[1];
  out.rms_residual = fit.rms_residual;
  return out;
}

}  // namespace berglab
