#include "berglab/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace berglab {

namespace {

double glue(double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); }
double glue_d(double s) {
  return s <= 0.0 ? 0.0 : std::exp(-1.0 / s) / (s * s);
}

}  // namespace

double CutoffProfile::value(double t) const {
  const double a = std::abs(t);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  const double s = 2.0 * (1.0 - a);
  const double g = glue(s);
  const double h = glue(1.0 - s);
  return g / (g + h);
}

double CutoffProfile::derivative(double t) const {
  const double a = std::abs(t);
  if (a <= 0.5 || a >= 1.0) return 0.0;
  const double s = 2.0 * (1.0 - a);
  const double g = glue(s), h = glue(1.0 - s);
  const double ds = (glue_d(s) * h + g * glue_d(1.0 - s)) / ((g + h) * (g + h));
  return (t > 0.0 ? -2.0 : 2.0) * ds;
}

double CutoffProfile::gaussian_integral(double lambda) const {
  // Simpson over [-1, 1]; the integrand is smooth and compactly supported
  const int n = 4096;
  const double h = 2.0 / n;
  KahanSum s;
  for (int i = 0; i <= n; ++i) {
    const double t = -1.0 + i * h;
    const double f = value(t) * std::exp(-lambda * t * t);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s.add(w * f);
  }
  return s.value() * h / 3.0;
}

// ---------------------------------------------------------------------------

DataSection peak_data(const BergmanFrame& frame, const ChartPoint& p,
                      const CutoffProfile& chi, int direction) {
  const ModelGeometry& geom = frame.geometry();
  const int k = frame.k();
  require(direction == 0 || direction == 1, ErrorCode::Usage,
          "directional index out of range for a one-dimensional model");
  const NormalFrame nf = geom.normal_frame(p);
  const double srk = std::sqrt(static_cast<double>(k));
  const double rad_chart = std::abs(nf.scale) * std::sqrt(2.0) / srk;

  if (geom.name() == "torus")
    require(rad_chart < 0.49, ErrorCode::Resolution,
            "peak support exits the fundamental domain; increase k");
  if (!geom.compact())
    require(geom.contains(p.chart, p.z + cplx(rad_chart, rad_chart)) &&
                geom.contains(p.chart, p.z - cplx(rad_chart, rad_chart)),
            ErrorCode::Resolution, "peak support exits the chart box");

  const bool torus = geom.name() == "torus";
  DataSection d;
  d.chart = p.chart;
  d.center = p.z;
  d.radius = rad_chart * (1.0 + 1e-9);
  d.weighted = [nf, k, srk, chi, direction, torus](cplx z) -> cplx {
    cplx znear = z;
    cplx lattice{0.0, 0.0};
    if (torus) {
      znear = nf.center.z + TorusGeometry::displacement(nf.center.z, z);
      lattice = z - znear;
    }
    const cplx zeta = nf.from_chart(znear);
    const double c1 = chi.value(srk * zeta.real());
    if (c1 == 0.0) return {0.0, 0.0};
    const double c2 = chi.value(srk * zeta.imag());
    if (c2 == 0.0) return {0.0, 0.0};
    cplx val{c1 * c2, 0.0};
    if (direction == 1) val *= srk * zeta;
    // back to the chart trivialization gauge
    val *= std::polar(1.0, k * nf.gauge_im(znear));
    if (torus && lattice != cplx(0.0, 0.0))
      val *= ThetaBasis::automorphy_phase(k, lattice, znear);
    return val;
  };
  return d;
}

namespace {

PeakSection build_peak(const BergmanFrame& frame, const ChartPoint& p,
                       const CutoffProfile& chi, int direction) {
  PeakSection s;
  s.p = p;
  s.k = frame.k();
  s.direction = direction;
  s.nf = frame.geometry().normal_frame(p);
  s.coeff = frame.project(peak_data(frame, p, chi, direction));

  s.value_at_p = peak_eval_normal(frame, s, cplx(0.0, 0.0));
  s.norm_sq_at_p = std::norm(s.value_at_p);

  // scaled derivatives at p in normal coordinates: 4th-order central
  // differences at the semiclassical step 0.1/sqrt(k)
  const double srk = std::sqrt(static_cast<double>(s.k));
  const double h = 0.1 / srk;
  auto eval = [&](cplx zeta) { return peak_eval_normal(frame, s, zeta); };
  auto stencil = [&](cplx dir) {
    return (-eval(2.0 * h * dir) + 8.0 * eval(h * dir) -
            8.0 * eval(-h * dir) + eval(-2.0 * h * dir)) /
           (12.0 * h);
  };
  const cplx gx = stencil({1.0, 0.0});
  const cplx gy = stencil({0.0, 1.0});
  s.d_real_scaled = {gx / srk, gy / srk};
  s.d_dz_scaled = (gx - cplx(0.0, 1.0) * gy) / (2.0 * srk);
  s.d_dzbar_scaled = (gx + cplx(0.0, 1.0) * gy) / (2.0 * srk);
  return s;
}

}  // namespace

PeakSection peak_section(const BergmanFrame& frame, const ChartPoint& p,
                         const CutoffProfile& chi) {
  return build_peak(frame, p, chi, 0);
}

PeakSection directional_peak_section(const BergmanFrame& frame,
                                     const ChartPoint& p, int j,
                                     const CutoffProfile& chi) {
  require(j == 1, ErrorCode::Usage,
          "only the j=1 directional section exists at n=1");
  return build_peak(frame, p, chi, 1);
}

cplx peak_eval_normal(const BergmanFrame& frame, const PeakSection& s,
                      cplx zeta) {
  const cplx z = s.nf.to_chart(zeta);
  const cplx val = frame.evaluate(s.coeff, {s.p.chart, z});
  return val * std::polar(1.0, -s.k * s.nf.gauge_im(z));
}

double peak_norm_sq(const PeakSection& s) {
  KahanSum sum;
  for (const auto& c : s.coeff) sum.add(std::norm(c));
  return sum.value();
}

double peak_mass_in_ball(const BergmanFrame& frame, const PeakSection& s,
                         double rho) {
  const ModelGeometry& geom = frame.geometry();
  const bool torus = geom.name() == "torus";
  KahanSum mass;
  for (const auto& node : geom.quadrature().nodes) {
    if (node.chart != s.p.chart) continue;
    cplx delta = node.z - s.p.z;
    if (torus) delta = TorusGeometry::displacement(s.p.z, node.z);
    if (std::abs(delta / s.nf.scale) > rho) continue;
    const double wd = node.w * geom.volume_density(node.chart, node.z);
    mass.add(wd * std::norm(frame.evaluate(s.coeff, {node.chart, node.z})));
  }
  return mass.value();
}

double peak_max_outside(const BergmanFrame& frame, const PeakSection& s,
                        int samples, unsigned seed) {
  const ModelGeometry& geom = frame.geometry();
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    ChartPoint q;
    if (geom.chart_count() == 2) {
      // complement-chart region |w| <= 1, i.e. |z| >= 1 on the data chart
      q.chart = 1 - s.p.chart;
      q.z = rng.disc(0.0, 1.0);
    } else if (geom.name() == "torus") {
      do {
        q.chart = 0;
        q.z = {rng.uniform(), rng.uniform()};
      } while (std::abs(TorusGeometry::displacement(s.p.z, q.z)) < 0.35);
    } else {
      q.chart = 0;
      q.z = std::polar(rng.uniform(0.5, 1.0) * 3.0, rng.uniform(0.0, kTwoPi)) +
            s.p.z;
      if (!geom.contains(0, q.z)) continue;
    }
    worst = std::max(worst,
                     std::norm(frame.evaluate(s.coeff, q)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

LemmaReport verify_peak_lemmas(const FrameFamily& family,
                               const std::vector<ChartPoint>& points) {
  require(points.size() >= 3, ErrorCode::Usage,
          "verify_peak_lemmas: need at least 3 base points");
  const auto ks = family.ks();
  require(ks.size() >= 4, ErrorCode::Usage,
          "verify_peak_lemmas: need at least 4 powers");

  const CutoffProfile chi;
  LemmaReport rep;
  rep.ks = ks;
  rep.points = points;
  rep.k_hat = ks.front();

  double a_value = 1e300;    // min |u_k(p)|^2
  double a_out = 1e300;      // min 1/(k max_out |u_k|^2)
  double a_deriv = 1e300;    // min 1/(k |(1/sqrt k) d u~/dx_s|)
  double b_value = 1e300;    // min 1/(k |u~^1_k(p)|)
  double b_diag = 1e300;     // min |(1/sqrt k) d u~^1/dz|
  double b_anti = 1e300;     // min 1/(k |(1/sqrt k) d u~^1/dzbar|)

  std::vector<double> first_point_values;
  for (const auto& p : points) {
    for (int k : ks) {
      const BergmanFrame& f = family.at(k);
      const PeakSection plain = peak_section(f, p, chi);
      const PeakSection dir = directional_peak_section(f, p, 1, chi);

      a_value = std::min(a_value, plain.norm_sq_at_p);
      const double out = peak_max_outside(f, plain, 100, 1234u + k);
      a_out = std::min(a_out, 1.0 / std::max(1e-300, k * out));
      for (const auto& g : plain.d_real_scaled)
        a_deriv = std::min(a_deriv, 1.0 / std::max(1e-300, k * std::abs(g)));

      b_value =
          std::min(b_value, 1.0 / std::max(1e-300, k * std::abs(dir.value_at_p)));
      b_diag = std::min(b_diag, std::abs(dir.d_dz_scaled));
      b_anti = std::min(b_anti,
                        1.0 / std::max(1e-300, k * std::abs(dir.d_dzbar_scaled)));

      if (&p == &points.front())
        first_point_values.push_back(plain.value_at_p.real());
    }
  }

  rep.c0 = std::min({a_value, a_out, a_deriv});
  rep.c1 = std::min({b_value, b_diag, b_anti});

  // Richardson in 1/k over the two largest powers, against the Gaussian
  // cutoff-moment oracle
  const std::size_t nk = ks.size();
  const double k1 = ks[nk - 2], k2 = ks[nk - 1];
  const double v1 = first_point_values[nk - 2], v2 = first_point_values[nk - 1];
  rep.limit_richardson = (k2 * v2 - k1 * v1) / (k2 - k1);
  const NormalFrame nf = family.geom->normal_frame(points.front());
  const double gauss = chi.gaussian_integral(nf.lambda);
  rep.limit_oracle =
      family.geom->det_curvature(points.front()) * gauss * gauss / kPi;
  rep.limit_rel_error =
      std::abs(rep.limit_richardson - rep.limit_oracle) / rep.limit_oracle;

  rep.cross_terms_skipped = true;  // no j != s pairs at n = 1
  rep.pass = rep.c0 > 1e-2 && rep.c1 > 1e-2 && rep.limit_rel_error < 0.10;

  std::ostringstream os;
  os << "c0 components: value " << fmt_g17(a_value) << ", outside "
     << fmt_g17(a_out) << ", derivative " << fmt_g17(a_deriv)
     << "; c1 components: center " << fmt_g17(b_value) << ", diagonal "
     << fmt_g17(b_diag) << ", antiholomorphic " << fmt_g17(b_anti)
     << "; limit richardson " << fmt_g17(rep.limit_richardson) << " vs oracle "
     << fmt_g17(rep.limit_oracle);
  rep.detail = os.str();
  return rep;
}

}  // namespace berglab
