#pragma once

#include <map>
#include <memory>
#include <span>

#include "berglab/geometry.hpp"

namespace berglab {

enum class GramPath { Auto, ClosedForm, Quadrature };

// Spanning set of global holomorphic sections of the k-th bundle power,
// presented through weighted local representatives g_j(z) e^{-k phi(z)}.
// No evaluator ever forms e^{+k phi} or a raw inverse trivialization.
class SectionBasis {
 public:
  SectionBasis(std::shared_ptr<const ModelGeometry> geom, int k, int count)
      : geom_(std::move(geom)), k_(k), count_(count) {}
  virtual ~SectionBasis() = default;

  const ModelGeometry& geometry() const { return *geom_; }
  std::shared_ptr<const ModelGeometry> geometry_ptr() const { return geom_; }
  int k() const { return k_; }
  int count() const { return count_; }

  virtual cplx weighted_value(int j, const ChartPoint& p) const = 0;
  virtual void weighted_values(const ChartPoint& p,
                               std::span<cplx> out) const;
  virtual std::optional<std::vector<double>> closed_form_gram() const {
    return std::nullopt;
  }
  virtual std::string kind() const = 0;
  virtual int min_power() const { return 0; }

 protected:
  std::shared_ptr<const ModelGeometry> geom_;
  int k_;
  int count_;
};

// Monomial sections z^v, min_power <= v <= k*degree, for sphere-like and
// plane models (a positive min_power restricts to sections vanishing at a
// chart-0 pole). Values are assembled in log space.
class MonomialBasis : public SectionBasis {
 public:
  MonomialBasis(std::shared_ptr<const ModelGeometry> geom, int k,
                int min_power = 0, int max_power = -1);

  cplx weighted_value(int j, const ChartPoint& p) const override;
  void weighted_values(const ChartPoint& p, std::span<cplx> out) const override;
  std::optional<std::vector<double>> closed_form_gram() const override;
  std::string kind() const override { return "monomial"; }
  int min_power() const override { return min_power_; }
  int power_of(int j) const { return min_power_ + j; }

 private:
  // magnitude exponent and phase of the weighted monomial of power v
  std::pair<double, double> log_weighted(int chart, cplx z, int v) const;

  int min_power_ = 0;
  int full_degree_ = 0;  // k * degree
};

// Theta sections on the square torus, d_k = k. The weighted representative
// is a sum of unit-height Gaussian ridges,
//   sum_m exp(-k pi (m + y + j/k)^2) e^{i(2 pi (j+km) x + k pi x y)},
// so every term has magnitude <= 1 for any k.
class ThetaBasis : public SectionBasis {
 public:
  ThetaBasis(std::shared_ptr<const ModelGeometry> geom, int k);

  cplx weighted_value(int j, const ChartPoint& p) const override;
  std::optional<std::vector<double>> closed_form_gram() const override;
  std::string kind() const override { return "theta"; }

  // automorphy phase picked up by a weighted representative under z -> z + l
  static cplx automorphy_phase(int k, cplx lattice, cplx z);
};

std::shared_ptr<SectionBasis> make_basis(
    std::shared_ptr<const ModelGeometry> geom, int k, int min_power = 0);

// ---------------------------------------------------------------------------

struct GramMatrix {
  int dim = 0;
  std::vector<cplx> a;  // row-major, Hermitian after symmetrization
  std::string source;   // "closed-form" | "quadrature"
  double hermiticity_defect = 0.0;
  double condition_estimate = 1.0;

  cplx& at(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
  const cplx& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * dim + j];
  }
  double max_offdiag() const;
};

GramMatrix assemble_gram(const SectionBasis& basis,
                         GramPath path = GramPath::Auto);

// Lower-triangular C with positive diagonal and C G C^* = I (the inverse of
// the Cholesky factor). Deterministic given G. Throws on rank deficiency and
// on condition estimates beyond cond_cap.
std::vector<cplx> orthonormalize(const GramMatrix& g, double cond_cap = 1e12);

// ---------------------------------------------------------------------------

// Chart-supported smooth data, handed around as the weighted representative.
struct DataSection {
  int chart = 0;
  cplx center{0.0, 0.0};
  double radius = 1e30;
  std::function<cplx(cplx)> weighted;        // z in `chart` -> d~(z)
  std::function<cplx(cplx)> dbar_weighted;   // optional analytic (dbar of the
                                             // unweighted rep) * e^{-k phi}
};

class BergmanFrame {
 public:
  static BergmanFrame build(std::shared_ptr<const SectionBasis> basis,
                            GramPath path = GramPath::Auto);

  int k() const { return basis_->k(); }
  int dim() const { return basis_->count(); }
  const SectionBasis& basis() const { return *basis_; }
  std::shared_ptr<const SectionBasis> basis_ptr() const { return basis_; }
  const ModelGeometry& geometry() const { return basis_->geometry(); }
  const GramMatrix& gram() const { return gram_; }
  const std::vector<cplx>& coefficients() const { return coeff_; }

  // weighted representatives of the orthonormal frame at p, in p's chart
  void frame_values(const ChartPoint& p, std::span<cplx> out) const;

  // localized kernel P_{k,s,s1}(x, y) with s, s1 the trivializations of the
  // charts carried by x and y
  cplx kernel(const ChartPoint& x, const ChartPoint& y) const;

  // on-diagonal kernel function P_k(x); chart independent, real, >= 0
  double kernel_function(const ChartPoint& x) const;

  // coefficients (data | f_j), by quadrature over the data support
  std::vector<cplx> project(const DataSection& data) const;

  // weighted representative at x of the section sum_j c_j f_j
  cplx evaluate(std::span<const cplx> c, const ChartPoint& x) const;

  double data_norm(const DataSection& data) const;
  double dbar_norm(const DataSection& data) const;
  double trace() const;  // integral of P_k dv = d_k

  std::string to_json() const;
  static BergmanFrame from_json(const std::string& text,
                                std::shared_ptr<const ModelGeometry> geom);
  std::string cache_key() const;

 private:
  BergmanFrame(std::shared_ptr<const SectionBasis> basis, GramMatrix gram,
               std::vector<cplx> coeff)
      : basis_(std::move(basis)),
        gram_(std::move(gram)),
        coeff_(std::move(coeff)) {}

  std::shared_ptr<const SectionBasis> basis_;
  GramMatrix gram_;
  std::vector<cplx> coeff_;  // row-major dim x dim, lower triangular
};

// dbar of data in a holomorphic trivialization, returned as the weighted
// coefficient z -> (dbar u)(z) e^{-k phi(z)} of the (0,1) representative.
std::function<cplx(cplx)> dbar_apply(const ModelGeometry& geom, int k,
                                     const DataSection& data,
                                     double fd_step = 1e-5);

// Sorted family of frames over a k range, shared by the sweep operations.
struct FrameFamily {
  std::shared_ptr<const ModelGeometry> geom;
  std::map<int, std::shared_ptr<const BergmanFrame>> frames;

  static FrameFamily build(std::shared_ptr<const ModelGeometry> geom,
                           const std::vector<int>& ks,
                           GramPath path = GramPath::Auto);
  const BergmanFrame& at(int k) const;
  std::vector<int> ks() const;
};

}  // namespace berglab
