#include "berglab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace berglab {

double QuadratureRule::integrate(
    const std::function<double(const QuadNode&)>& f) const {
  KahanSum s;
  for (const auto& n : nodes) s.add(n.w * f(n));
  return s.value();
}

// ---------------------------------------------------------------------------
// rules

QuadratureRule build_sphere_quadrature(int degree, int max_k, int radial,
                                       int angular, bool perturbed) {
  require(degree >= 1, ErrorCode::Usage, "sphere degree must be >= 1");
  require(max_k >= 1, ErrorCode::Usage, "max_k must be >= 1");
  const int cap = degree * max_k;

  int min_radial = cap / 2 + 10;
  int min_angular = 2 * cap + 9;
  if (perturbed) {
    min_radial = (min_radial * 17) / 10;
    min_angular += 64;
  }
  if (radial == 0) radial = min_radial;
  if (angular == 0) angular = min_angular;
  if (radial < min_radial || angular < min_angular) {
    fail(ErrorCode::Resolution,
         "sphere quadrature resolution too low for k <= " +
             std::to_string(max_k) + "; need radial >= " +
             std::to_string(min_radial) + ", angular >= " +
             std::to_string(min_angular));
  }

  // Substitution v = |z|^2 / (1 + |z|^2) turns the rational radial moments
  // into polynomials in v of degree <= cap, so Gauss-Legendre is exact for
  // the unperturbed Gram integrands.
  std::vector<double> gl_x, gl_w;
  gauss_legendre(radial, gl_x, gl_w);

  QuadratureRule rule;
  rule.radial_order = radial;
  rule.angular_order = angular;
  rule.max_exact_power = 2 * radial - 3;
  rule.nodes.reserve(static_cast<std::size_t>(radial) * angular);
  const double dtheta = kTwoPi / angular;
  for (int i = 0; i < radial; ++i) {
    const double v = 0.5 * (gl_x[i] + 1.0);
    const double wv = 0.5 * gl_w[i];
    const double r = std::sqrt(v / (1.0 - v));
    // dA = r dr dtheta = (1/2) dv/(1-v)^2 dtheta
    const double w = wv * dtheta * 0.5 / ((1.0 - v) * (1.0 - v));
    for (int t = 0; t < angular; ++t) {
      const double th = dtheta * t;
      rule.nodes.push_back({0, r * cplx(std::cos(th), std::sin(th)), w});
    }
  }
  return rule;
}

QuadratureRule build_torus_quadrature(int max_k, int grid) {
  require(max_k >= 1, ErrorCode::Usage, "max_k must be >= 1");
  const int min_grid = std::max(64, 8 * max_k);
  if (grid == 0) grid = min_grid;
  if (grid < min_grid) {
    fail(ErrorCode::Resolution,
         "torus grid too coarse for k <= " + std::to_string(max_k) +
             "; need at least " + std::to_string(min_grid));
  }
  QuadratureRule rule;
  rule.angular_order = grid;
  rule.max_exact_power = grid / 2;
  rule.nodes.reserve(static_cast<std::size_t>(grid) * grid);
  const double h = 1.0 / grid;
  const double w = h * h;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      rule.nodes.push_back({0, cplx((i + 0.5) * h, (j + 0.5) * h), w});
  return rule;
}

// ---------------------------------------------------------------------------

double Bump::value(cplx z) const {
  if (amplitude == 0.0) return 0.0;
  const double s2 = std::norm(z - center) / (radius * radius);
  if (s2 >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
}

double NormalFrame::gauge_re(cplx z) const {
  const cplx w = z - center.z;
  return gauge_c0 + (gauge_c1 * w + gauge_c2 * w * w).real();
}

double NormalFrame::gauge_im(cplx z) const {
  const cplx w = z - center.z;
  return (gauge_c1 * w + gauge_c2 * w * w).imag();
}

// ---------------------------------------------------------------------------
// generic point operations

CurvatureData ModelGeometry::curvature(const ChartPoint& p) const {
  require(contains(p.chart, p.z), ErrorCode::Domain,
          name() + ": point outside chart domain");
  const WeightJet jet = weight_jet(p.chart, p.z);
  require(std::isfinite(jet.d_zzbar), ErrorCode::Numerics,
          "curvature: non-finite second derivative");
  CurvatureData c;
  c.r_entry = 2.0 * jet.d_zzbar;
  c.eigenvalue = c.r_entry / theta(p.chart, p.z);
  return c;
}

double ModelGeometry::det_curvature(const ChartPoint& p) const {
  const CurvatureData c = curvature(p);
  require(c.eigenvalue > 0.0, ErrorCode::Positivity,
          name() + ": curvature not positive at the requested point");
  return c.eigenvalue;
}

NormalFrame ModelGeometry::normal_frame(const ChartPoint& p) const {
  require(contains(p.chart, p.z), ErrorCode::Domain,
          name() + ": point outside chart domain");
  const WeightJet jet = weight_jet(p.chart, p.z);
  const double th = theta(p.chart, p.z);
  require(jet.d_zzbar > 0.0 && th > 0.0, ErrorCode::Positivity,
          name() + ": degenerate curvature, no normal frame");
  NormalFrame f;
  f.center = p;
  f.scale = cplx(1.0 / std::sqrt(th), 0.0);
  f.lambda = jet.d_zzbar / th;
  f.gauge_c0 = jet.value;
  f.gauge_c1 = 2.0 * jet.d_z;
  f.gauge_c2 = jet.d_zz;
  return f;
}

double ModelGeometry::integrate_dv(
    const std::function<double(const QuadNode&)>& f) const {
  KahanSum s;
  for (const auto& n : quadrature().nodes)
    s.add(n.w * volume_density(n.chart, n.z) * f(n));
  return s.value();
}

double ModelGeometry::volume_by_quadrature() const {
  return integrate_dv([](const QuadNode&) { return 1.0; });
}

// ---------------------------------------------------------------------------
// sphere

SphereGeometry::SphereGeometry(int degree, int max_k, std::vector<Bump> bumps,
                               int radial, int angular)
    : degree_(degree), max_k_(max_k), bumps_(std::move(bumps)) {
  for (const auto& b : bumps_) {
    require(b.radius > 0.0 || b.amplitude == 0.0, ErrorCode::Usage,
            "bump radius must be positive");
    require(std::abs(b.center) + b.radius < 1e6, ErrorCode::Usage,
            "bump support must stay inside chart 0");
  }
  rule_ = build_sphere_quadrature(degree_, max_k_, radial, angular,
                                  !bumps_.empty());
}

double SphereGeometry::bump_sum(cplx z) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += b.value(z);
  return s;
}

double SphereGeometry::weight(int chart, cplx z) const {
  const double fs = 0.5 * degree_ * std::log1p(std::norm(z));
  if (bumps_.empty()) return fs;
  if (chart == 0) return fs + bump_sum(z);
  // chart 1 sees the perturbation through the transition w -> 1/w
  if (z == cplx(0.0, 0.0)) return fs;
  return fs + bump_sum(1.0 / z);
}

WeightJet SphereGeometry::weight_jet(int chart, cplx z) const {
  const double u = std::norm(z);
  const double den = 1.0 + u;
  WeightJet jet;
  jet.value = 0.5 * degree_ * std::log1p(u);
  jet.d_z = 0.5 * degree_ * std::conj(z) / den;
  jet.d_zz = -0.5 * degree_ * std::conj(z) * std::conj(z) / (den * den);
  jet.d_zzbar = 0.5 * degree_ / (den * den);
  if (!bumps_.empty()) {
    // perturbation derivatives by central differences (no symbolic path)
    RealField pert = [this, chart](cplx w) {
      if (chart == 0) return bump_sum(w);
      return w == cplx(0.0, 0.0) ? 0.0 : bump_sum(1.0 / w);
    };
    const WeightJet b = fd_weight_jet(pert, z);
    jet.value += b.value;
    jet.d_z += b.d_z;
    jet.d_zz += b.d_zz;
    jet.d_zzbar += b.d_zzbar;
  }
  return jet;
}

double SphereGeometry::theta(int, cplx z) const {
  const double den = 1.0 + std::norm(z);
  return degree_ / (den * den);
}

bool SphereGeometry::contains(int chart, cplx z) const {
  return (chart == 0 || chart == 1) && std::isfinite(z.real()) &&
         std::isfinite(z.imag());
}

cplx SphereGeometry::transition(int from, int to, cplx z) const {
  require(from >= 0 && from < 2 && to >= 0 && to < 2, ErrorCode::Domain,
          "sphere: chart index out of range");
  if (from == to) return z;
  require(z != cplx(0.0, 0.0), ErrorCode::Domain,
          "sphere: transition undefined at the chart center");
  return 1.0 / z;
}

cplx SphereGeometry::transition_factor(int from, int to, cplx z) const {
  if (from == to) return {1.0, 0.0};
  require(z != cplx(0.0, 0.0), ErrorCode::Domain,
          "sphere: cocycle undefined at the chart center");
  return std::pow(z, -degree_);
}

void SphereGeometry::certify_resolution(int k) const {
  if (k < 1 || k > max_k_) {
    fail(ErrorCode::Resolution,
         "sphere geometry certified for k in [1, " + std::to_string(max_k_) +
             "], requested k=" + std::to_string(k) +
             "; rebuild with max_k >= " + std::to_string(k));
  }
}

std::string SphereGeometry::config_string() const {
  std::ostringstream os;
  os << "sphere;deg=" << degree_ << ";max_k=" << max_k_
     << ";radial=" << rule_.radial_order << ";angular=" << rule_.angular_order;
  for (const auto& b : bumps_)
    os << ";bump=" << fmt_g17(b.center.real()) << "," << fmt_g17(b.center.imag())
       << "," << fmt_g17(b.amplitude) << "," << fmt_g17(b.radius);
  return os.str();
}

std::optional<double> SphereGeometry::closed_form_monomial_norm(int k,
                                                                int v) const {
  if (!bumps_.empty()) return std::nullopt;
  const int cap = k * degree_;
  if (v < 0 || v > cap) return std::nullopt;
  // 2 pi deg * v! (cap-v)! / (cap+1)!  (the Beta moment against dv)
  return kTwoPi * degree_ *
         std::exp(std::lgamma(v + 1.0) + std::lgamma(cap - v + 1.0) -
                  std::lgamma(cap + 2.0));
}

ChartPoint SphereGeometry::preferred(const ChartPoint& p) const {
  const double a = std::abs(p.z);
  if (a < 1.0) return p;
  if (a == 1.0 && p.chart == 0) return p;
  return {1 - p.chart, 1.0 / p.z};
}

// ---------------------------------------------------------------------------
// torus

TorusGeometry::TorusGeometry(int max_k, int grid) : max_k_(max_k) {
  rule_ = build_torus_quadrature(max_k_, grid);
}

double TorusGeometry::weight(int, cplx z) const {
  return 0.5 * kPi * std::norm(z);
}

WeightJet TorusGeometry::weight_jet(int, cplx z) const {
  WeightJet jet;
  jet.value = 0.5 * kPi * std::norm(z);
  jet.d_z = 0.5 * kPi * std::conj(z);
  jet.d_zz = {0.0, 0.0};
  jet.d_zzbar = 0.5 * kPi;
  return jet;
}

bool TorusGeometry::contains(int chart, cplx z) const {
  return chart == 0 && std::isfinite(z.real()) && std::isfinite(z.imag());
}

void TorusGeometry::certify_resolution(int k) const {
  if (k < 1 || k > max_k_) {
    fail(ErrorCode::Resolution,
         "torus geometry certified for k in [1, " + std::to_string(max_k_) +
             "], requested k=" + std::to_string(k) +
             "; rebuild with max_k >= " + std::to_string(k));
  }
}

std::string TorusGeometry::config_string() const {
  std::ostringstream os;
  os << "torus;max_k=" << max_k_ << ";grid=" << rule_.angular_order;
  return os.str();
}

cplx TorusGeometry::wrap(cplx z) {
  double x = z.real() - std::floor(z.real());
  double y = z.imag() - std::floor(z.imag());
  return {x, y};
}

cplx TorusGeometry::displacement(cplx from, cplx to) {
  cplx d = to - from;
  double x = d.real() - std::round(d.real());
  double y = d.imag() - std::round(d.imag());
  return {x, y};
}

// ---------------------------------------------------------------------------
// plane

PlaneGeometry::PlaneGeometry(double curvature_scale, int max_k,
                             double box_radius, int grid)
    : curv_(curvature_scale), max_k_(max_k), box_radius_(box_radius) {
  require(curv_ > 0.0, ErrorCode::Positivity,
          "plane curvature scale must be positive");
  if (box_radius_ == 0.0) box_radius_ = 4.0 / std::sqrt(curv_);
  if (grid == 0)
    grid = std::max(
        128, static_cast<int>(std::ceil(
                 8.0 * box_radius_ * std::sqrt(std::max(1.0, curv_ * max_k_)))));
  QuadratureRule rule;
  rule.angular_order = grid;
  const double h = 2.0 * box_radius_ / grid;
  rule.nodes.reserve(static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      rule.nodes.push_back({0,
                            cplx(-box_radius_ + (i + 0.5) * h,
                                 -box_radius_ + (j + 0.5) * h),
                            h * h});
  rule_ = std::move(rule);
}

PlaneGeometry::PlaneGeometry(RealField weight, int max_k, double box_radius,
                             int grid)
    : PlaneGeometry(1.0, max_k, box_radius, grid) {
  custom_ = std::move(weight);
}

double PlaneGeometry::weight(int, cplx z) const {
  if (custom_) return (*custom_)(z);
  return curv_ * std::norm(z);
}

WeightJet PlaneGeometry::weight_jet(int, cplx z) const {
  if (custom_) return fd_weight_jet(*custom_, z);
  WeightJet jet;
  jet.value = curv_ * std::norm(z);
  jet.d_z = curv_ * std::conj(z);
  jet.d_zz = {0.0, 0.0};
  jet.d_zzbar = curv_;
  return jet;
}

double PlaneGeometry::exact_volume() const {
  const double side = 2.0 * box_radius_;
  return 2.0 * side * side;
}

bool PlaneGeometry::contains(int chart, cplx z) const {
  return chart == 0 && std::abs(z.real()) <= box_radius_ &&
         std::abs(z.imag()) <= box_radius_;
}

void PlaneGeometry::certify_resolution(int k) const {
  if (k < 1 || k > max_k_) {
    fail(ErrorCode::Resolution,
         "plane geometry certified for k in [1, " + std::to_string(max_k_) +
             "], requested k=" + std::to_string(k));
  }
}

std::optional<double> PlaneGeometry::closed_form_monomial_norm(int k,
                                                               int v) const {
  if (custom_ || v < 0) return std::nullopt;
  // Bargmann norm against dv = 2 dA: 2 pi v! / (2 k c)^{v+1}
  return kTwoPi * std::exp(std::lgamma(v + 1.0) -
                           (v + 1.0) * std::log(2.0 * k * curv_));
}

std::string PlaneGeometry::config_string() const {
  std::ostringstream os;
  os << "plane;curv=" << fmt_g17(curv_) << ";max_k=" << max_k_
     << ";box=" << fmt_g17(box_radius_) << ";grid=" << rule_.angular_order
     << (custom_ ? ";custom" : "");
  return os.str();
}

// ---------------------------------------------------------------------------
// diagnostics

namespace {

double lbeta_moment(int j, int cap) {
  // integral over C of |z|^{2j} (1+|z|^2)^{-cap-2} dA = pi j! (cap-j)!/(cap+1)!
  return kPi * std::exp(std::lgamma(j + 1.0) + std::lgamma(cap - j + 1.0) -
                        std::lgamma(cap + 2.0));
}

}  // namespace

std::string ModelGeometry::self_check_json(unsigned seed) const {
  nlohmann::json out;
  out["model"] = name();
  out["config"] = config_string();
  out["theta_convention"] = "curvature-of-unperturbed-model";
  Rng rng(seed);
  bool pass = true;

  // volume
  if (compact()) {
    const double vol = volume_by_quadrature();
    const double rel = std::abs(vol - exact_volume()) / exact_volume();
    out["volume"] = {{"quadrature", vol},
                     {"exact", exact_volume()},
                     {"rel_error", rel}};
    pass = pass && rel < 1e-10;
  }

  // curvature consistency against a full finite-difference jet
  double max_curv_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    ChartPoint p{0, rng.disc(cplx(0.0, 0.0), name() == "torus" ? 0.5 : 1.5)};
    if (name() == "torus") p.z += cplx(0.5, 0.5);
    if (has_pole() && std::abs(p.z - pole()) < 0.1) continue;
    const WeightJet a = weight_jet(p.chart, p.z);
    RealField f = [this, &p](cplx w) { return weight(p.chart, w); };
    const WeightJet b = fd_weight_jet(f, p.z);
    max_curv_err = std::max(
        max_curv_err, std::abs(a.d_zzbar - b.d_zzbar) /
                          std::max(1e-12, std::abs(a.d_zzbar)));
  }
  out["curvature_fd_max_rel_error"] = max_curv_err;
  pass = pass && max_curv_err < 1e-6;

  if (chart_count() == 2) {
    // bundle cocycle e^{-2 phi_0} = |g_01|^2 e^{-2 phi_1} in log form
    double max_cocycle = 0.0, max_round = 0.0;
    for (int i = 0; i < 100; ++i) {
      cplx z = std::polar(std::exp(rng.uniform(std::log(0.2), std::log(5.0))),
                          rng.uniform(0.0, kTwoPi));
      const cplx w = transition(0, 1, z);
      const double lhs = -2.0 * weight(0, z);
      const double rhs =
          2.0 * std::log(std::abs(transition_factor(0, 1, z))) -
          2.0 * weight(1, w);
      max_cocycle = std::max(max_cocycle, std::abs(lhs - rhs));
      max_round = std::max(max_round, std::abs(transition(1, 0, w) - z));
    }
    out["cocycle_max_error"] = max_cocycle;
    out["transition_roundtrip_max_error"] = max_round;
    pass = pass && max_cocycle < 1e-10 && max_round < 1e-12;
  }

  if (name() == "torus") {
    // weight automorphy under the lattice, phi(z+l) = phi(z) + pi Re(conj(l) z) + pi |l|^2 / 2
    double max_auto = 0.0;
    for (int i = 0; i < 100; ++i) {
      const cplx z{rng.uniform(), rng.uniform()};
      for (cplx l : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
        const double lhs = weight(0, z + l);
        const double rhs = weight(0, z) + kPi * (std::conj(l) * z).real() +
                           0.5 * kPi * std::norm(l);
        max_auto = std::max(max_auto, std::abs(lhs - rhs));
      }
    }
    out["automorphy_max_error"] = max_auto;
    pass = pass && max_auto < 1e-10;

    const double one = quadrature().integrate([](const QuadNode&) { return 1.0; });
    out["unit_cell_integral"] = one;
    pass = pass && std::abs(one - 1.0) < 1e-14;

    double max_fourier = 0.0;
    const int g = quadrature().angular_order;
    for (int m : {1, 2, g / 4, g / 2})
      for (int n : {1, g / 4}) {
        const double val = quadrature().integrate([&](const QuadNode& q) {
          return std::cos(kTwoPi * (m * q.z.real() + n * q.z.imag()));
        });
        max_fourier = std::max(max_fourier, std::abs(val));
      }
    out["fourier_mode_max_integral"] = max_fourier;
    pass = pass && max_fourier < 1e-12;
  }

  if (name() == "sphere" && !has_pole()) {
    // rational radial moments against the closed form
    const int cap = degree() * max_k();
    double max_beta = 0.0;
    for (int j : {0, std::min(3, cap), cap / 2, cap}) {
      const double val = quadrature().integrate([&](const QuadNode& q) {
        return std::exp(j * std::log(std::norm(q.z)) -
                        (cap + 2.0) * std::log1p(std::norm(q.z)));
      });
      const double ref = lbeta_moment(j, cap);
      max_beta = std::max(max_beta, std::abs(val - ref) / ref);
    }
    out["beta_moment_max_rel_error"] = max_beta;
    pass = pass && max_beta < 1e-12;
  }

  out["pass"] = pass;
  return out.dump(2);
}

}  // namespace berglab
