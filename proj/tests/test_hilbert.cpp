#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>

#include "berglab/hilbert.hpp"
#include "doctest.h"

using namespace berglab;

namespace {

std::shared_ptr<SphereGeometry> sphere(int deg, int max_k) {
  return std::make_shared<SphereGeometry>(deg, max_k);
}

// data section from an unweighted smooth representative u(z, zbar)
DataSection from_unweighted(std::shared_ptr<const ModelGeometry> geom, int k,
                            int chart, std::function<cplx(cplx)> u,
                            cplx center = 0.0, double radius = 1e30) {
  DataSection d;
  d.chart = chart;
  d.center = center;
  d.radius = radius;
  d.weighted = [geom, k, chart, u](cplx z) {
    return u(z) * std::exp(-k * geom->weight(chart, z));
  };
  return d;
}

double beta_norm(int deg, int v, int cap) {
  return kTwoPi * deg *
         std::exp(std::lgamma(v + 1.0) + std::lgamma(cap - v + 1.0) -
                  std::lgamma(cap + 2.0));
}

}  // namespace

TEST_CASE("sphere Gram: closed form vs quadrature, diagonal structure") {
  auto geom = sphere(1, 8);
  MonomialBasis basis(geom, 2);
  REQUIRE(basis.count() == 3);

  const GramMatrix closed = assemble_gram(basis, GramPath::ClosedForm);
  const GramMatrix quad = assemble_gram(basis, GramPath::Quadrature);

  // Beta oracle entries, with the recorded volume factor 2 relative to the
  // bare pi j!(k-j)!/(k+1)! moment
  CHECK(closed.at(0, 0).real() == doctest::Approx(kTwoPi / 3.0).epsilon(1e-14));
  CHECK(closed.at(1, 1).real() == doctest::Approx(kPi / 3.0).epsilon(1e-14));
  CHECK(closed.at(2, 2).real() == doctest::Approx(kTwoPi / 3.0).epsilon(1e-14));
  for (int j = 0; j < 3; ++j) {
    const double bare = kPi * std::exp(std::lgamma(j + 1.0) +
                                       std::lgamma(2.0 - j + 1.0) -
                                       std::lgamma(4.0));
    CHECK(closed.at(j, j).real() / bare == doctest::Approx(2.0).epsilon(1e-14));
  }

  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(quad.at(i, i) - closed.at(i, i)) <
          1e-12 * std::abs(closed.at(i, i)));
  CHECK(quad.max_offdiag() < 1e-12);

  // Hermitian symmetry is exact after symmetrization
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(quad.at(i, j) == std::conj(quad.at(j, i)));
}

TEST_CASE("torus Gram: theta orthogonality") {
  auto geom = std::make_shared<TorusGeometry>(3);  // 64x64 grid
  ThetaBasis basis(geom, 3);
  REQUIRE(basis.count() == 3);

  const GramMatrix quad = assemble_gram(basis, GramPath::Quadrature);
  CHECK(quad.max_offdiag() < 1e-10);
  const double ref = kTwoPi / std::sqrt(6.0);
  for (int j = 0; j < 3; ++j)
    CHECK(quad.at(j, j).real() == doctest::Approx(ref).epsilon(1e-10));

  const GramMatrix closed = assemble_gram(basis, GramPath::ClosedForm);
  for (int j = 0; j < 3; ++j)
    CHECK(closed.at(j, j).real() == doctest::Approx(ref).epsilon(1e-15));
}

TEST_CASE("orthonormalize") {
  SUBCASE("identity stays identity") {
    GramMatrix g;
    g.dim = 3;
    g.a.assign(9, cplx(0, 0));
    for (int i = 0; i < 3; ++i) g.at(i, i) = 1.0;
    const auto c = orthonormalize(g);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(c[i * 3 + j] - (i == j ? 1.0 : 0.0)) < 1e-15);
  }

  SUBCASE("diagonal scaling") {
    GramMatrix g;
    g.dim = 2;
    g.a.assign(4, cplx(0, 0));
    g.at(0, 0) = 4.0;
    g.at(1, 1) = 9.0;
    const auto c = orthonormalize(g);
    CHECK(std::abs(c[0] - 0.5) < 1e-15);
    CHECK(std::abs(c[3] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(c[1]) == 0.0);
    CHECK(std::abs(c[2]) == 0.0);
  }

  SUBCASE("random Hermitian positive definite") {
    Rng rng(23);
    const int d = 10;
    std::vector<cplx> b(d * d);
    for (auto& v : b) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    GramMatrix g;
    g.dim = d;
    g.a.assign(d * d, cplx(0, 0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cplx s = (i == j) ? cplx(0.5, 0.0) : cplx(0.0, 0.0);
        for (int p = 0; p < d; ++p) s += b[i * d + p] * std::conj(b[j * d + p]);
        g.at(i, j) = s;
      }
    const auto c = orthonormalize(g);
    // C G C^* = I
    double worst = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cplx s{0, 0};
        for (int p = 0; p < d; ++p)
          for (int q = 0; q < d; ++q)
            s += c[i * d + p] * g.at(p, q) * std::conj(c[j * d + q]);
        worst = std::max(worst, std::abs(s - cplx(i == j ? 1.0 : 0.0, 0.0)));
      }
    CHECK(worst < 1e-10);
    // lower triangular, positive diagonal
    for (int i = 0; i < d; ++i) {
      CHECK(c[i * d + i].real() > 0);
      CHECK(c[i * d + i].imag() == 0.0);
      for (int j = i + 1; j < d; ++j) CHECK(std::abs(c[i * d + j]) == 0.0);
    }
  }

  SUBCASE("rank deficiency is reported, never dropped") {
    GramMatrix g;
    g.dim = 2;
    g.a = {cplx(1, 0), cplx(1, 0), cplx(1, 0), cplx(1, 0)};
    CHECK_THROWS_AS((void)orthonormalize(g), Error);
  }

  SUBCASE("condition cap") {
    GramMatrix g;
    g.dim = 2;
    const double off = 1.0 - 1e-14;
    g.a = {cplx(1, 0), cplx(off, 0), cplx(off, 0), cplx(1, 0)};
    CHECK_THROWS_AS((void)orthonormalize(g), Error);
    CHECK_NOTHROW((void)orthonormalize(g, 1e16));
  }
}

TEST_CASE("Bergman kernel function on the sphere") {
  auto geom = sphere(1, 30);
  for (int k : {6, 30}) {
    auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, k));
    CHECK(frame.dim() == k + 1);

    const double expect = (k + 1) / kTwoPi;  // d_k / Vol
    Rng rng(41);
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < 200; ++i) {
      ChartPoint p{i % 2, rng.disc(0.0, 3.0)};
      const double v = frame.kernel_function(p);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = 0.5 * (lo + hi);
    CHECK(hi - lo < 1e-8 * mean);
    CHECK(mean == doctest::Approx(expect).epsilon(1e-10));

    // chart independence at the same geometric point
    for (int i = 0; i < 20; ++i) {
      const cplx z = rng.disc(0.0, 2.0) + cplx(0.5, 0.0);
      const double a = frame.kernel_function({0, z});
      const double b = frame.kernel_function({1, 1.0 / z});
      CHECK(std::abs(a - b) < 1e-9 * a);
    }
  }
}

TEST_CASE("reproducing property") {
  auto geom = sphere(1, 8);
  auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, 8));
  const int d = frame.dim();

  // integral of P(x, y) f_1(y) dv(y) recovers f_1(x)
  const ChartPoint x{0, cplx(0.37, -0.21)};
  std::vector<cplx> fx(d);
  frame.frame_values(x, fx);
  KahanSumC s;
  for (const auto& node : geom->quadrature().nodes) {
    std::vector<cplx> fy(d);
    frame.frame_values({node.chart, node.z}, fy);
    const double wd = node.w * geom->volume_density(node.chart, node.z);
    s.add(wd * frame.kernel(x, {node.chart, node.z}) * fy[1]);
  }
  CHECK(std::abs(s.value() - fx[1]) < 1e-9);

  // coefficient form: projecting a frame element gives a unit vector
  DataSection data;
  data.chart = 0;
  auto fp = std::make_shared<BergmanFrame>(frame);
  data.weighted = [fp](cplx z) {
    std::vector<cplx> f(fp->dim());
    fp->frame_values({0, z}, f);
    return f[3];
  };
  const auto coeff = frame.project(data);
  for (int j = 0; j < d; ++j)
    CHECK(std::abs(coeff[j] - cplx(j == 3 ? 1.0 : 0.0, 0.0)) < 1e-10);
}

TEST_CASE("bergman_project") {
  auto geom = sphere(1, 5);
  const int k = 5;
  auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, k));

  SUBCASE("antiholomorphic data against the Beta oracle") {
    // (zbar | f_j) = 0 for every j by angular orthogonality
    auto d1 = from_unweighted(geom, k, 0, [](cplx z) { return std::conj(z); });
    for (const auto& c : frame.project(d1)) CHECK(std::abs(c) < 1e-10);

    // zbar z^2 hits only j=1: (zbar z^2 | z) = 2 pi 2!(k-2)!/(k+1)!
    auto d2 = from_unweighted(geom, k, 0,
                              [](cplx z) { return std::conj(z) * z * z; });
    const auto c = frame.project(d2);
    const double m2 = beta_norm(1, 2, k);
    const double g1 = beta_norm(1, 1, k);
    for (int j = 0; j <= k; ++j) {
      if (j == 1)
        CHECK(std::abs(c[j] - m2 / std::sqrt(g1)) < 1e-10);
      else
        CHECK(std::abs(c[j]) < 1e-10);
    }
  }

  SUBCASE("projection is idempotent and kills the orthogonal complement") {
    auto data = from_unweighted(geom, k, 0, [](cplx z) {
      return std::conj(z) * (1.0 + z) + 0.25 * std::norm(z);
    });
    const auto c1 = frame.project(data);

    auto fp = std::make_shared<BergmanFrame>(frame);
    DataSection reproj;
    reproj.chart = 0;
    std::vector<cplx> c1copy = c1;
    reproj.weighted = [fp, c1copy](cplx z) {
      return fp->evaluate(c1copy, {0, z});
    };
    const auto c2 = frame.project(reproj);
    for (int j = 0; j < frame.dim(); ++j)
      CHECK(std::abs(c2[j] - c1[j]) < 1e-10);

    // residual data - P data is orthogonal to every frame element
    auto base = data.weighted;
    DataSection resid;
    resid.chart = 0;
    resid.weighted = [fp, c1copy, base](cplx z) {
      return base(z) - fp->evaluate(c1copy, {0, z});
    };
    for (const auto& c : frame.project(resid)) CHECK(std::abs(c) < 1e-8);
  }
}

TEST_CASE("dbar") {
  auto geom = sphere(1, 6);
  const int k = 6;
  auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, k));

  SUBCASE("holomorphic data is killed") {
    auto d = from_unweighted(geom, k, 0, [](cplx z) { return z * z * z; });
    d.dbar_weighted = [](cplx) { return cplx(0.0, 0.0); };  // analytic
    CHECK(frame.dbar_norm(d) <= 1e-12);
    // finite-difference route agrees at the noise floor
    auto fd = from_unweighted(geom, k, 0, [](cplx z) { return z * z * z; });
    CHECK(frame.dbar_norm(fd) < 1e-6);
  }

  SUBCASE("analytic derivative of zbar times a bump vs finite differences") {
    Bump b{cplx(0.1, 0.1), 1.0, 0.5};
    auto u = [b](cplx z) { return std::conj(z) * b.value(z); };
    auto d = from_unweighted(geom, k, 0, u, b.center, b.radius);
    auto db = dbar_apply(*geom, k, d);
    // dbar(zbar B) = B + zbar dbar(B)
    Rng rng(9);
    for (int i = 0; i < 25; ++i) {
      const cplx z = rng.disc(b.center, 0.45);
      const double u2 = std::norm(z - b.center) / (b.radius * b.radius);
      const cplx dbar_bump = -b.value(z) * (z - b.center) /
                             (b.radius * b.radius * (1.0 - u2) * (1.0 - u2));
      const cplx ana = (b.value(z) + std::conj(z) * dbar_bump) *
                       std::exp(-k * geom->weight(0, z));
      CHECK(std::abs(db(z) - ana) < 1e-6 * (1.0 + std::abs(ana)));
    }

    // homogeneity of the norm
    auto d7 = d;
    auto base = d.weighted;
    d7.weighted = [base](cplx z) { return 7.0 * base(z); };
    d7.dbar_weighted = nullptr;
    CHECK(frame.dbar_norm(d7) ==
          doctest::Approx(7.0 * frame.dbar_norm(d)).epsilon(1e-12));
  }
}

TEST_CASE("localized kernels") {
  auto geom = sphere(1, 12);
  const int k = 12;
  auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, k));

  // gauge invariance of the modulus across chart pairs at the same points
  const ChartPoint x{0, cplx(0.3, 0.1)}, y{0, cplx(-0.2, 0.4)};
  const ChartPoint x1{1, 1.0 / x.z}, y1{1, 1.0 / y.z};
  const double m00 = std::abs(frame.kernel(x, y));
  CHECK(std::abs(std::abs(frame.kernel(x1, y)) - m00) < 1e-9 * m00);
  CHECK(std::abs(std::abs(frame.kernel(x, y1)) - m00) < 1e-9 * m00);
  CHECK(std::abs(std::abs(frame.kernel(x1, y1)) - m00) < 1e-9 * m00);

  // Hermitian symmetry
  CHECK(std::abs(frame.kernel(x, y) - std::conj(frame.kernel(y, x))) < 1e-12);

  // kernel column = projection of the reproducing element at y
  auto fp = std::make_shared<BergmanFrame>(frame);
  DataSection data;
  data.chart = 0;
  data.weighted = [fp, y](cplx z) { return fp->kernel({0, z}, y); };
  const auto coeff = frame.project(data);
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const ChartPoint p{0, rng.disc(0.0, 1.0)};
    const cplx via_proj = frame.evaluate(coeff, p);
    CHECK(std::abs(via_proj - frame.kernel(p, y)) < 1e-8);
  }
}

TEST_CASE("trace and dimensions") {
  auto geom = sphere(2, 6);
  auto f6 = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, 6));
  CHECK(f6.dim() == 13);  // k deg + 1
  CHECK(f6.trace() == doctest::Approx(13.0).epsilon(1e-8));

  auto torus = std::make_shared<TorusGeometry>(4);
  auto tf = BergmanFrame::build(std::make_shared<ThetaBasis>(torus, 4));
  CHECK(tf.dim() == 4);  // d_k = k
  CHECK(tf.trace() == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("chart cocycle of the weighted representatives") {
  auto geom = sphere(2, 4);
  MonomialBasis basis(geom, 4);
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    const cplx z =
        std::polar(std::exp(rng.uniform(std::log(0.3), std::log(3.0))),
                   rng.uniform(0.0, kTwoPi));
    for (int j : {0, 3, basis.count() - 1}) {
      const double a = std::abs(basis.weighted_value(j, {0, z}));
      const double b = std::abs(basis.weighted_value(j, {1, 1.0 / z}));
      CHECK(std::abs(std::log(a) - std::log(b)) < 1e-8);
    }
  }
}

TEST_CASE("theta automorphy") {
  auto torus = std::make_shared<TorusGeometry>(6);
  ThetaBasis basis(torus, 6);
  Rng rng(13);
  for (int i = 0; i < 30; ++i) {
    const cplx z{rng.uniform(), rng.uniform()};
    for (const cplx l : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      const cplx phase = ThetaBasis::automorphy_phase(6, l, z);
      for (int j : {0, 2, 5}) {
        const cplx lhs = basis.weighted_value(j, {0, z + l});
        const cplx rhs = basis.weighted_value(j, {0, z}) * phase;
        CHECK(std::abs(lhs - rhs) < 1e-12);
      }
    }
  }
}

TEST_CASE("plane frame matches the Bargmann closed form") {
  auto plane = std::make_shared<PlaneGeometry>(1.0, 8);
  auto frame =
      BergmanFrame::build(std::make_shared<MonomialBasis>(plane, 8, 0, 48));
  const cplx z(0.2, 0.05), w(-0.1, 0.1);
  const double ref = (8.0 / kPi) * std::exp(-8.0 * std::norm(z - w));
  CHECK(std::abs(frame.kernel({0, z}, {0, w})) ==
        doctest::Approx(ref).epsilon(1e-10));
  CHECK(frame.kernel_function({0, z}) ==
        doctest::Approx(8.0 / kPi).epsilon(1e-10));
}

TEST_CASE("frame serialization round trip") {
  auto geom = sphere(1, 7);
  auto frame = BergmanFrame::build(std::make_shared<MonomialBasis>(geom, 7));
  const std::string text = frame.to_json();
  const auto loaded = BergmanFrame::from_json(text, geom);
  CHECK(loaded.cache_key() == frame.cache_key());
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    const ChartPoint p{0, rng.disc(0.0, 1.5)};
    const ChartPoint q{0, rng.disc(0.0, 1.5)};
    CHECK(std::abs(loaded.kernel(p, q) - frame.kernel(p, q)) <=
          1e-14 * std::abs(frame.kernel(p, q)));
  }

  auto other = sphere(2, 7);
  CHECK_THROWS_AS((void)BergmanFrame::from_json(text, other), Error);
}
