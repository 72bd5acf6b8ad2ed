#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "berglab/common.hpp"

namespace berglab {

// All shipped models are one-dimensional: a point is a chart index plus one
// complex coordinate.
struct ChartPoint {
  int chart = 0;
  cplx z{0.0, 0.0};
};

struct QuadNode {
  int chart = 0;
  cplx z{0.0, 0.0};
  double w = 0.0;  // Lebesgue weight in chart coordinates
};

// Bare chart-coordinate rule. Weights integrate against the Lebesgue measure
// dA of the chart; the model volume density is folded on top by
// ModelGeometry::integrate_dv.
struct QuadratureRule {
  std::vector<QuadNode> nodes;
  int radial_order = 0;   // sphere: Gauss-Legendre count in the compact radial variable
  int angular_order = 0;  // sphere: uniform angle count; torus/plane: grid side
  int max_exact_power = 0;

  double integrate(const std::function<double(const QuadNode&)>& f) const;
};

QuadratureRule build_sphere_quadrature(int degree, int max_k, int radial = 0,
                                       int angular = 0, bool perturbed = false);
QuadratureRule build_torus_quadrature(int max_k, int grid = 0);

// Radial bump a * exp(1 - 1/(1 - s^2)), s = |z - c|/r, zero outside s >= 1.
// Negative amplitude raises the curvature at the center by |a|/r^2.
struct Bump {
  cplx center{0.0, 0.0};
  double amplitude = 0.0;
  double radius = 0.0;

  double value(cplx z) const;
};

struct CurvatureData {
  double r_entry = 0.0;     // matrix of 2 d/dz d/dzbar phi (n = 1: a single entry)
  double eigenvalue = 0.0;  // relative to the Hermitian form
};

// Holomorphic normal frame at a point p:
//   z = p + scale * zeta,   gauge h(w) = c0 + c1 w + c2 w^2  (w = z - p),
// after which phi(z) - Re h(z-p) = lambda |zeta|^2 + O(|zeta|^3).
struct NormalFrame {
  ChartPoint center;
  cplx scale{1.0, 0.0};
  double lambda = 0.0;
  double gauge_c0 = 0.0;
  cplx gauge_c1{0.0, 0.0};
  cplx gauge_c2{0.0, 0.0};

  cplx to_chart(cplx zeta) const { return center.z + scale * zeta; }
  cplx from_chart(cplx z) const { return (z - center.z) / scale; }
  double gauge_re(cplx z) const;  // Re h(z - p)
  double gauge_im(cplx z) const;  // Im h(z - p)
};

class ModelGeometry {
 public:
  virtual ~ModelGeometry() = default;

  virtual std::string name() const = 0;
  virtual int chart_count() const = 0;
  // Bundle degree: local representatives of sections of the k-th power are
  // holomorphic of degree <= k * degree() (sphere); 1 for torus/plane.
  virtual int degree() const = 0;
  virtual int max_k() const = 0;
  virtual bool compact() const { return true; }

  virtual double weight(int chart, cplx z) const = 0;
  virtual WeightJet weight_jet(int chart, cplx z) const = 0;
  virtual double theta(int chart, cplx z) const = 0;
  virtual double exact_volume() const = 0;
  virtual bool contains(int chart, cplx z) const = 0;
  virtual cplx transition(int from, int to, cplx z) const = 0;
  // bundle cocycle g_ab with e^{-2 phi_a} = |g_ab|^2 e^{-2 phi_b}
  virtual cplx transition_factor(int from, int to, cplx z) const = 0;
  virtual const QuadratureRule& quadrature() const = 0;
  virtual void certify_resolution(int k) const = 0;
  virtual std::string config_string() const = 0;

  // comparison chart convention: the chart where the point has small modulus
  virtual ChartPoint preferred(const ChartPoint& p) const { return p; }

  virtual bool has_pole() const { return false; }
  virtual cplx pole() const { return {0.0, 0.0}; }
  virtual double pole_tau() const { return 0.0; }

  // Squared L2 norm of the weighted monomial z^v at power k when a closed
  // form exists (Beta/Gamma integrals); monomial models only.
  virtual std::optional<double> closed_form_monomial_norm(int /*k*/,
                                                          int /*v*/) const {
    return std::nullopt;
  }

  double volume_density(int chart, cplx z) const {
    return 2.0 * theta(chart, z);
  }

  CurvatureData curvature(const ChartPoint& p) const;
  double det_curvature(const ChartPoint& p) const;
  NormalFrame normal_frame(const ChartPoint& p) const;

  double integrate_dv(const std::function<double(const QuadNode&)>& f) const;
  double volume_by_quadrature() const;

  std::uint64_t config_hash() const { return fnv1a(config_string()); }

  // JSON diagnostics block: cocycle, curvature consistency, volume,
  // transition round trips, model-specific quadrature identities.
  std::string self_check_json(unsigned seed = 7) const;
};

// Projective line with the Fubini-Study type weight (m/2) log(1+|z|^2) for
// the degree-m bundle, two standard charts w = 1/z, plus optional smooth
// compactly supported perturbations in chart 0.
class SphereGeometry : public ModelGeometry {
 public:
  SphereGeometry(int degree, int max_k, std::vector<Bump> bumps = {},
                 int radial = 0, int angular = 0);

  std::string name() const override { return "sphere"; }
  int chart_count() const override { return 2; }
  int degree() const override { return degree_; }
  int max_k() const override { return max_k_; }
  double weight(int chart, cplx z) const override;
  WeightJet weight_jet(int chart, cplx z) const override;
  double theta(int chart, cplx z) const override;
  double exact_volume() const override { return kTwoPi * degree_; }
  bool contains(int chart, cplx z) const override;
  cplx transition(int from, int to, cplx z) const override;
  cplx transition_factor(int from, int to, cplx z) const override;
  const QuadratureRule& quadrature() const override { return rule_; }
  void certify_resolution(int k) const override;
  std::string config_string() const override;
  ChartPoint preferred(const ChartPoint& p) const override;

  const std::vector<Bump>& bumps() const { return bumps_; }
  bool perturbed() const { return !bumps_.empty(); }
  std::optional<double> closed_form_monomial_norm(int k, int v) const override;

 private:
  double bump_sum(cplx z) const;

  int degree_;
  int max_k_;
  std::vector<Bump> bumps_;
  QuadratureRule rule_;
};

// Square torus C/(Z + iZ) with the translation-invariant weight pi |z|^2 / 2,
// trivialized over the fundamental domain [0,1)^2 by a factor of automorphy.
class TorusGeometry : public ModelGeometry {
 public:
  TorusGeometry(int max_k, int grid = 0);

  std::string name() const override { return "torus"; }
  int chart_count() const override { return 1; }
  int degree() const override { return 1; }
  int max_k() const override { return max_k_; }
  double weight(int chart, cplx z) const override;
  WeightJet weight_jet(int chart, cplx z) const override;
  double theta(int, cplx) const override { return kPi; }
  double exact_volume() const override { return kTwoPi; }
  bool contains(int chart, cplx z) const override;
  cplx transition(int, int, cplx z) const override { return z; }
  cplx transition_factor(int, int, cplx) const override { return {1.0, 0.0}; }
  const QuadratureRule& quadrature() const override { return rule_; }
  void certify_resolution(int k) const override;
  std::string config_string() const override;

  // representative in [0,1)^2 and shortest lattice displacement
  static cplx wrap(cplx z);
  static cplx displacement(cplx from, cplx to);

 private:
  int max_k_;
  QuadratureRule rule_;
};

// Non-compact synthetic model on a box in C with a flat Hermitian form and a
// configurable weight (default c |z|^2). Everything has Bargmann-space
// closed forms; used as an exact oracle.
class PlaneGeometry : public ModelGeometry {
 public:
  PlaneGeometry(double curvature_scale, int max_k, double box_radius = 0.0,
                int grid = 0);
  PlaneGeometry(RealField weight, int max_k, double box_radius, int grid);

  std::string name() const override { return "plane"; }
  int chart_count() const override { return 1; }
  int degree() const override { return 1; }
  int max_k() const override { return max_k_; }
  bool compact() const override { return false; }
  double weight(int chart, cplx z) const override;
  WeightJet weight_jet(int chart, cplx z) const override;
  double theta(int, cplx) const override { return 1.0; }
  double exact_volume() const override;
  bool contains(int chart, cplx z) const override;
  cplx transition(int, int, cplx z) const override { return z; }
  cplx transition_factor(int, int, cplx) const override { return {1.0, 0.0}; }
  const QuadratureRule& quadrature() const override { return rule_; }
  void certify_resolution(int k) const override;
  std::string config_string() const override;

  double curvature_scale() const { return curv_; }
  std::optional<double> closed_form_monomial_norm(int k, int v) const override;

 private:
  double curv_ = 1.0;
  std::optional<RealField> custom_;
  int max_k_;
  double box_radius_;
  QuadratureRule rule_;
};

}  // namespace berglab
