#include "berglab/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace berglab {

using cplxl = std::complex<long double>;

void SectionBasis::weighted_values(const ChartPoint& p,
                                   std::span<cplx> out) const {
  for (int j = 0; j < count_; ++j) out[j] = weighted_value(j, p);
}

// ---------------------------------------------------------------------------
// monomial sections

MonomialBasis::MonomialBasis(std::shared_ptr<const ModelGeometry> geom, int k,
                             int min_power, int max_power)
    : SectionBasis(std::move(geom), k, 0) {
  require(geom_->name() != "torus", ErrorCode::Usage,
          "monomial basis: not a monomial model");
  geom_->certify_resolution(k);
  full_degree_ = k * geom_->degree();
  min_power_ = min_power;
  const int maxp = max_power < 0 ? full_degree_ : max_power;
  require(min_power_ >= 0, ErrorCode::Usage, "min_power must be >= 0");
  count_ = std::max(0, maxp - min_power_ + 1);
}

std::pair<double, double> MonomialBasis::log_weighted(int chart, cplx z,
                                                      int v) const {
  const int vc = chart == 0 ? v : full_degree_ - v;
  const double r = std::abs(z);
  const double mag = vc * std::log(r) - k_ * geom_->weight(chart, z);
  const double ph = vc * std::arg(z);
  return {mag, ph};
}

cplx MonomialBasis::weighted_value(int j, const ChartPoint& p) const {
  const int v = min_power_ + j;
  const int vc = p.chart == 0 ? v : full_degree_ - v;
  if (p.z == cplx(0.0, 0.0)) {
    if (geom_->has_pole() && p.chart == 0 && geom_->pole_tau() > 0.0 &&
        geom_->pole() == cplx(0.0, 0.0)) {
      fail(ErrorCode::Domain, "evaluation at the metric pole");
    }
    return vc == 0 ? cplx(std::exp(-k_ * geom_->weight(p.chart, p.z)), 0.0)
                   : cplx(0.0, 0.0);
  }
  const auto [mag, ph] = log_weighted(p.chart, p.z, v);
  return std::polar(std::exp(mag), ph);
}

void MonomialBasis::weighted_values(const ChartPoint& p,
                                    std::span<cplx> out) const {
  if (p.z == cplx(0.0, 0.0)) {
    for (int j = 0; j < count_; ++j) out[j] = weighted_value(j, p);
    return;
  }
  const double lr = std::log(std::abs(p.z));
  const double th = std::arg(p.z);
  const double kphi = k_ * geom_->weight(p.chart, p.z);
  for (int j = 0; j < count_; ++j) {
    const int v = min_power_ + j;
    const int vc = p.chart == 0 ? v : full_degree_ - v;
    out[j] = std::polar(std::exp(vc * lr - kphi), vc * th);
  }
}

std::optional<std::vector<double>> MonomialBasis::closed_form_gram() const {
  std::vector<double> diag(count_);
  for (int j = 0; j < count_; ++j) {
    auto norm = geom_->closed_form_monomial_norm(k_, min_power_ + j);
    if (!norm) return std::nullopt;
    diag[j] = *norm;
  }
  return diag;
}

// ---------------------------------------------------------------------------
// theta sections

ThetaBasis::ThetaBasis(std::shared_ptr<const ModelGeometry> geom, int k)
    : SectionBasis(std::move(geom), k, k) {
  require(geom_->name() == "torus", ErrorCode::Usage,
          "theta basis: expected the torus model");
  geom_->certify_resolution(k);
}

cplx ThetaBasis::weighted_value(int j, const ChartPoint& p) const {
  const double x = p.z.real();
  const double y = p.z.imag();
  const double off = y + static_cast<double>(j) / k_;
  const int m0 = static_cast<int>(std::lround(-off));
  const int reach =
      static_cast<int>(std::ceil(std::sqrt(44.0 / (k_ * kPi)))) + 2;
  cplx sum{0.0, 0.0};
  const double xy = k_ * kPi * x * y;
  for (int m = m0 - reach; m <= m0 + reach; ++m) {
    const double t = m + off;
    const double mag = -k_ * kPi * t * t;
    const double ph = kTwoPi * (j + static_cast<double>(k_) * m) * x + xy;
    sum += std::polar(std::exp(mag), ph);
  }
  return sum;
}

std::optional<std::vector<double>> ThetaBasis::closed_form_gram() const {
  // the x-integral collapses the series and the y-integral unfolds to a
  // full Gaussian: every diagonal entry is 2 pi / sqrt(2k), off-diagonals
  // vanish by Fourier orthogonality
  return std::vector<double>(count_, kTwoPi / std::sqrt(2.0 * k_));
}

cplx ThetaBasis::automorphy_phase(int k, cplx lattice, cplx z) {
  return std::polar(1.0, k * kPi * (std::conj(lattice) * z).imag());
}

std::shared_ptr<SectionBasis> make_basis(
    std::shared_ptr<const ModelGeometry> geom, int k, int min_power) {
  if (geom->name() == "torus") {
    require(min_power == 0, ErrorCode::Usage,
            "theta basis has no vanishing-order restriction");
    return std::make_shared<ThetaBasis>(std::move(geom), k);
  }
  return std::make_shared<MonomialBasis>(std::move(geom), k, min_power);
}

// ---------------------------------------------------------------------------
// Gram

double GramMatrix::max_offdiag() const {
  double m = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (i != j) m = std::max(m, std::abs(at(i, j)));
  return m;
}

GramMatrix assemble_gram(const SectionBasis& basis, GramPath path) {
  const int d = basis.count();
  GramMatrix g;
  g.dim = d;
  g.a.assign(static_cast<std::size_t>(d) * d, cplx(0.0, 0.0));
  if (d == 0) {
    g.source = "closed-form";
    return g;
  }

  if (path != GramPath::Quadrature) {
    if (auto diag = basis.closed_form_gram()) {
      for (int i = 0; i < d; ++i) g.at(i, i) = (*diag)[i];
      g.source = "closed-form";
      return g;
    }
    require(path != GramPath::ClosedForm, ErrorCode::Usage,
            "no closed-form Gram for this basis");
  }

  const ModelGeometry& geom = basis.geometry();
  geom.certify_resolution(basis.k());

  std::vector<cplxl> acc(static_cast<std::size_t>(d) * d, cplxl(0, 0));
  std::vector<cplx> w(d);
  for (const auto& node : geom.quadrature().nodes) {
    basis.weighted_values({node.chart, node.z}, w);
    const long double wd =
        node.w * geom.volume_density(node.chart, node.z);
    for (int i = 0; i < d; ++i) {
      const cplxl wi = static_cast<cplxl>(w[i]) * wd;
      cplxl* row = acc.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j <= i; ++j)
        row[j] += wi * std::conj(static_cast<cplxl>(w[j]));
    }
  }

  for (int i = 0; i < d; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * d;
    g.at(i, i) = cplx(static_cast<double>(acc[row + i].real()), 0.0);
    g.hermiticity_defect =
        std::max(g.hermiticity_defect,
                 std::abs(static_cast<double>(acc[row + i].imag())));
    for (int j = 0; j < i; ++j) {
      const cplx lower(static_cast<double>(acc[row + j].real()),
                       static_cast<double>(acc[row + j].imag()));
      g.at(i, j) = lower;
      g.at(j, i) = std::conj(lower);
    }
  }
  g.source = "quadrature";
  return g;
}

std::vector<cplx> orthonormalize(const GramMatrix& g, double cond_cap) {
  const int d = g.dim;
  std::vector<cplx> out(static_cast<std::size_t>(d) * d, cplx(0.0, 0.0));
  if (d == 0) return out;

  // Equilibrate first: the Cholesky runs on the correlation matrix
  // D^{-1/2} G D^{-1/2}, so near-diagonal Gram matrices with a wide dynamic
  // range of norms stay well conditioned.
  std::vector<long double> dscale(d);
  for (int i = 0; i < d; ++i) {
    const double gii = g.at(i, i).real();
    require(gii > 0.0, ErrorCode::Rank,
            "orthonormalize: non-positive diagonal at index " +
                std::to_string(i));
    dscale[i] = std::sqrt((long double)gii);
  }

  std::vector<cplxl> L(static_cast<std::size_t>(d) * d, cplxl(0, 0));
  auto lat = [&](int i, int j) -> cplxl& {
    return L[static_cast<std::size_t>(i) * d + j];
  };
  long double min_diag = 1e300L, max_diag = 0.0L;
  for (int j = 0; j < d; ++j) {
    cplxl s = cplxl(g.at(j, j).real(), 0) / (dscale[j] * dscale[j]);
    for (int p = 0; p < j; ++p) s -= lat(j, p) * std::conj(lat(j, p));
    const long double diag = s.real();
    if (!(diag > 1e-26L)) {
      fail(ErrorCode::Rank,
           "orthonormalize: numerical rank deficiency; directions from index " +
               std::to_string(j) + " of " + std::to_string(d) +
               " would be discarded");
    }
    const long double root = std::sqrt(diag);
    lat(j, j) = root;
    min_diag = std::min(min_diag, root);
    max_diag = std::max(max_diag, root);
    for (int i = j + 1; i < d; ++i) {
      cplxl v = cplxl(g.at(i, j)) / (dscale[i] * dscale[j]);
      for (int p = 0; p < j; ++p) v -= lat(i, p) * std::conj(lat(j, p));
      lat(i, j) = v / root;
    }
  }

  const double cond = static_cast<double>((max_diag / min_diag) *
                                          (max_diag / min_diag));
  if (cond > cond_cap) {
    fail(ErrorCode::Conditioning,
         "orthonormalize: condition estimate " + fmt_g17(cond) +
             " exceeds the cap " + fmt_g17(cond_cap) +
             "; raise the quadrature resolution or use the closed-form Gram "
             "path");
  }

  // C = L^{-1} D^{-1/2}, still lower triangular with positive diagonal
  std::vector<cplxl> C(static_cast<std::size_t>(d) * d, cplxl(0, 0));
  auto cat = [&](int i, int j) -> cplxl& {
    return C[static_cast<std::size_t>(i) * d + j];
  };
  for (int i = 0; i < d; ++i) {
    cat(i, i) = cplxl(1, 0) / lat(i, i);
    for (int j = i - 1; j >= 0; --j) {
      cplxl s(0, 0);
      for (int p = j; p < i; ++p) s += lat(i, p) * cat(p, j);
      cat(i, j) = -s / lat(i, i);
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      const cplxl v = cat(i, j) / dscale[j];
      out[static_cast<std::size_t>(i) * d + j] =
          cplx(static_cast<double>(v.real()), static_cast<double>(v.imag()));
    }
  return out;
}

// ---------------------------------------------------------------------------
// frame

BergmanFrame BergmanFrame::build(std::shared_ptr<const SectionBasis> basis,
                                 GramPath path) {
  GramMatrix g = assemble_gram(*basis, path);
  std::vector<cplx> c = orthonormalize(g);
  if (g.dim > 0) {
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < g.dim; ++i) {
      const double gii = g.at(i, i).real();
      lo = std::min(lo, gii);
      hi = std::max(hi, gii);
    }
    g.condition_estimate = hi / lo;
  }
  return BergmanFrame(std::move(basis), std::move(g), std::move(c));
}

void BergmanFrame::frame_values(const ChartPoint& p,
                                std::span<cplx> out) const {
  const int d = dim();
  std::vector<cplx> w(d);
  basis_->weighted_values(p, w);
  for (int i = 0; i < d; ++i) {
    cplx s{0.0, 0.0};
    const cplx* row = coeff_.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j <= i; ++j) s += row[j] * w[j];
    out[i] = s;
  }
}

cplx BergmanFrame::kernel(const ChartPoint& x, const ChartPoint& y) const {
  const int d = dim();
  std::vector<cplx> fx(d), fy(d);
  frame_values(x, fx);
  frame_values(y, fy);
  KahanSumC s;
  for (int j = 0; j < d; ++j) s.add(fx[j] * std::conj(fy[j]));
  return s.value();
}

double BergmanFrame::kernel_function(const ChartPoint& x) const {
  const int d = dim();
  std::vector<cplx> fx(d);
  frame_values(x, fx);
  KahanSum s;
  for (int j = 0; j < d; ++j) s.add(std::norm(fx[j]));
  return s.value();
}

namespace {

// data-chart coordinate of a node, for support tests and gauge-consistent
// integrands
cplx node_in_chart(const ModelGeometry& geom, const QuadNode& node,
                   int chart) {
  if (node.chart == chart) return node.z;
  return geom.transition(node.chart, chart, node.z);
}

bool in_support(const ModelGeometry& geom, const DataSection& d, cplx zeta) {
  if (d.radius >= 1e29) return true;
  if (geom.name() == "torus")
    return std::abs(TorusGeometry::displacement(d.center, zeta)) <= d.radius;
  return std::abs(zeta - d.center) <= d.radius;
}

}  // namespace

std::vector<cplx> BergmanFrame::project(const DataSection& data) const {
  const ModelGeometry& geom = geometry();
  geom.certify_resolution(k());
  const int d = dim();
  std::vector<cplxl> acc(d, cplxl(0, 0));
  std::vector<cplx> f(d);
  for (const auto& node : geom.quadrature().nodes) {
    const cplx zeta = node_in_chart(geom, node, data.chart);
    if (!in_support(geom, data, zeta)) continue;
    const cplx dv = data.weighted(zeta);
    if (dv == cplx(0.0, 0.0)) continue;
    frame_values({data.chart, zeta}, f);
    const long double wd = node.w * geom.volume_density(node.chart, node.z);
    const cplxl lhs = cplxl(dv) * wd;
    for (int j = 0; j < d; ++j) acc[j] += lhs * std::conj(cplxl(f[j]));
  }
  std::vector<cplx> out(d);
  for (int j = 0; j < d; ++j)
    out[j] = cplx(static_cast<double>(acc[j].real()),
                  static_cast<double>(acc[j].imag()));
  return out;
}

cplx BergmanFrame::evaluate(std::span<const cplx> c,
                            const ChartPoint& x) const {
  const int d = dim();
  std::vector<cplx> f(d);
  frame_values(x, f);
  KahanSumC s;
  for (int j = 0; j < d; ++j) s.add(c[j] * f[j]);
  return s.value();
}

double BergmanFrame::data_norm(const DataSection& data) const {
  const ModelGeometry& geom = geometry();
  KahanSum s;
  for (const auto& node : geom.quadrature().nodes) {
    const cplx zeta = node_in_chart(geom, node, data.chart);
    if (!in_support(geom, data, zeta)) continue;
    const double wd = node.w * geom.volume_density(node.chart, node.z);
    s.add(wd * std::norm(data.weighted(zeta)));
  }
  return std::sqrt(std::max(0.0, s.value()));
}

double BergmanFrame::dbar_norm(const DataSection& data) const {
  const ModelGeometry& geom = geometry();
  auto db = dbar_apply(geom, k(), data);
  KahanSum s;
  for (const auto& node : geom.quadrature().nodes) {
    const cplx zeta = node_in_chart(geom, node, data.chart);
    if (!in_support(geom, data, zeta)) continue;
    const double wd = node.w * geom.volume_density(node.chart, node.z);
    // (0,1)-form metric induced by the Hermitian form: |dzbar|^2 = 1/theta
    s.add(wd * std::norm(db(zeta)) / geom.theta(data.chart, zeta));
  }
  return std::sqrt(std::max(0.0, s.value()));
}

double BergmanFrame::trace() const {
  return geometry().integrate_dv([this](const QuadNode& n) {
    return kernel_function({n.chart, n.z});
  });
}

std::function<cplx(cplx)> dbar_apply(const ModelGeometry& geom, int k,
                                     const DataSection& data, double fd_step) {
  if (data.dbar_weighted) return data.dbar_weighted;
  const ModelGeometry* gp = &geom;
  const int chart = data.chart;
  auto weighted = data.weighted;
  return [gp, k, chart, weighted, fd_step](cplx z) -> cplx {
    const auto [dz, dzbar] = fd_wirtinger(weighted, z, fd_step);
    (void)dz;
    const WeightJet jet = gp->weight_jet(chart, z);
    return dzbar + static_cast<double>(k) * std::conj(jet.d_z) * weighted(z);
  };
}

// ---------------------------------------------------------------------------
// serialization

std::string BergmanFrame::cache_key() const {
  std::ostringstream os;
  os << geometry().config_string() << "|" << basis_->kind() << "|k="
     << k() << "|minp=" << basis_->min_power() << "|" << gram_.source;
  return hex64(fnv1a(os.str()));
}

std::string BergmanFrame::to_json() const {
  nlohmann::json j;
  j["format"] = 1;
  j["model"] = geometry().config_string();
  j["model_hash"] = hex64(geometry().config_hash());
  j["k"] = k();
  j["basis"] = basis_->kind();
  j["min_power"] = basis_->min_power();
  j["dim"] = dim();
  j["gram_source"] = gram_.source;
  j["gram_condition"] = gram_.condition_estimate;
  const int d = dim();
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(d) * (d + 1) / 2);
  im.reserve(re.capacity());
  for (int i = 0; i < d; ++i)
    for (int l = 0; l <= i; ++l) {
      re.push_back(coeff_[static_cast<std::size_t>(i) * d + l].real());
      im.push_back(coeff_[static_cast<std::size_t>(i) * d + l].imag());
    }
  j["coeff_re"] = re;
  j["coeff_im"] = im;
  std::vector<double> gd(d);
  for (int i = 0; i < d; ++i) gd[i] = gram_.at(i, i).real();
  j["gram_diag"] = gd;
  return j.dump();
}

BergmanFrame BergmanFrame::from_json(
    const std::string& text, std::shared_ptr<const ModelGeometry> geom) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  require(!j.is_discarded(), ErrorCode::Cache, "frame cache: unparsable JSON");
  require(j.value("format", 0) == 1, ErrorCode::Cache,
          "frame cache: unknown format");
  require(j.value("model_hash", "") == hex64(geom->config_hash()),
          ErrorCode::Cache, "frame cache: model hash mismatch");
  const int k = j.at("k").get<int>();
  const int minp = j.value("min_power", 0);
  const int d = j.at("dim").get<int>();

  std::shared_ptr<SectionBasis> basis;
  if (j.value("basis", "") == "theta")
    basis = std::make_shared<ThetaBasis>(geom, k);
  else
    basis = std::make_shared<MonomialBasis>(geom, k, minp, minp + d - 1);
  require(basis->count() == d, ErrorCode::Cache,
          "frame cache: dimension mismatch");

  GramMatrix g;
  g.dim = d;
  g.a.assign(static_cast<std::size_t>(d) * d, cplx(0.0, 0.0));
  g.source = j.value("gram_source", "cache");
  g.condition_estimate = j.value("gram_condition", 1.0);
  const auto gd = j.at("gram_diag").get<std::vector<double>>();
  for (int i = 0; i < d; ++i) g.at(i, i) = gd[i];

  const auto re = j.at("coeff_re").get<std::vector<double>>();
  const auto im = j.at("coeff_im").get<std::vector<double>>();
  require(re.size() == static_cast<std::size_t>(d) * (d + 1) / 2 &&
              im.size() == re.size(),
          ErrorCode::Cache, "frame cache: truncated coefficients");
  std::vector<cplx> c(static_cast<std::size_t>(d) * d, cplx(0.0, 0.0));
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int l = 0; l <= i; ++l, ++idx)
      c[static_cast<std::size_t>(i) * d + l] = cplx(re[idx], im[idx]);
  return BergmanFrame(std::move(basis), std::move(g), std::move(c));
}

// ---------------------------------------------------------------------------

FrameFamily FrameFamily::build(std::shared_ptr<const ModelGeometry> geom,
                               const std::vector<int>& ks, GramPath path) {
  FrameFamily fam;
  fam.geom = geom;
  for (int k : ks) {
    auto basis = make_basis(geom, k);
    fam.frames[k] = std::make_shared<BergmanFrame>(
        BergmanFrame::build(std::move(basis), path));
  }
  return fam;
}

const BergmanFrame& FrameFamily::at(int k) const {
  auto it = frames.find(k);
  require(it != frames.end(), ErrorCode::Usage,
          "no frame for k=" + std::to_string(k));
  return *it->second;
}

std::vector<int> FrameFamily::ks() const {
  std::vector<int> out;
  out.reserve(frames.size());
  for (const auto& [k, f] : frames) out.push_back(k);
  return out;
}

}  // namespace berglab
