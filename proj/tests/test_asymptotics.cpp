#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>

#include "berglab/asymptotics.hpp"
#include "doctest.h"

using namespace berglab;

namespace {

// exact phase magnitude exponent of the degree-m projective model:
// (m/2) [log(1+|z|^2) + log(1+|w|^2) - log|1+z conj(w)|^2]
double fs_phase_exact(int deg, cplx z, cplx w) {
  return 0.5 * deg *
         (std::log1p(std::norm(z)) + std::log1p(std::norm(w)) -
          std::log(std::norm(1.0 + z * std::conj(w))));
}

}  // namespace

TEST_CASE("fit_expansion on synthetic exact data") {
  std::vector<int> ks{8, 12, 16, 24, 32, 40, 48};
  std::vector<double> pk;
  for (int k : ks) pk.push_back(3.0 * k + 5.0);
  const auto fit = fit_expansion_values(ks, pk);
  CHECK(fit.b0 == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.b1 == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(std::abs(fit.b2) < 1e-7);
  CHECK(fit.rms_residual < 1e-12);

  CHECK_THROWS_AS(
      (void)fit_expansion_values({8, 12, 16, 24}, {1, 2, 3, 4}), Error);
}

TEST_CASE("leading coefficient on the unperturbed sphere") {
  auto geom = std::make_shared<SphereGeometry>(1, 48);
  const auto family =
      FrameFamily::build(geom, {8, 12, 16, 20, 24, 32, 40, 48});
  Rng rng(2);
  for (int i = 0; i < 8; ++i) {
    const ChartPoint x{0, rng.disc(0.0, 1.5)};
    const auto fit = fit_expansion(family, x);
    CHECK(fit.reference_b0 == doctest::Approx(1.0 / kTwoPi).epsilon(1e-12));
    CHECK(fit.rel_deviation < 0.02);
    CHECK(fit.b0 > 0.0);
    // the model is exactly linear in k, so the fit is essentially exact
    CHECK(fit.rel_deviation < 1e-8);
    CHECK(fit.b1 == doctest::Approx(1.0 / kTwoPi).epsilon(1e-6));
  }
}

TEST_CASE("leading coefficient follows a perturbed weight") {
  // wide relative to the k=8 coherence scale, weak enough to keep the
  // curvature positive out to the support rim
  const Bump bump{cplx(0.3, 0.0), 0.01, 0.8};
  auto geom = std::make_shared<SphereGeometry>(1, 48, std::vector<Bump>{bump});
  const auto family = FrameFamily::build(geom, {8, 12, 16, 24, 32, 40, 48});
  for (const cplx p : {bump.center, cplx(0.0, 0.0)}) {
    const auto fit = fit_expansion(family, {0, p});
    CHECK(fit.rel_deviation < 0.02);
  }
  // the perturbation genuinely moves the target at the bump center
  const double ref_center = geom->det_curvature({0, bump.center}) / kTwoPi;
  CHECK(std::abs(ref_center - 1.0 / kTwoPi) > 0.02 / kTwoPi);
}

TEST_CASE("extract_phase") {
  SUBCASE("diagonal probe is exactly zero") {
    auto geom = std::make_shared<SphereGeometry>(1, 32);
    const auto family = FrameFamily::build(geom, {8, 12, 16, 24, 32});
    const ChartPoint x{0, cplx(0.2, 0.1)};
    const auto probe = extract_phase(family, x, x);
    CHECK(std::abs(probe.im_psi_hat) < 1e-10);
    CHECK(probe.taylor_prediction == doctest::Approx(0.0));
  }

  SUBCASE("unit curvature scale: prediction 0.01 at distance 0.1") {
    auto plane = std::make_shared<PlaneGeometry>(1.0, 64);
    const auto family = FrameFamily::build(plane, {16, 24, 32, 48, 64});
    const ChartPoint x{0, cplx(0.1, 0.0)}, y{0, cplx(0.0, 0.0)};
    const auto probe = extract_phase(family, x, y);
    CHECK(probe.taylor_prediction == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(std::abs(probe.im_psi_hat - 0.01) < 0.15 * 0.01);
    // swap symmetry
    const auto swapped = extract_phase(family, y, x);
    CHECK(swapped.im_psi_hat ==
          doctest::Approx(probe.im_psi_hat).epsilon(1e-12));
  }

  SUBCASE("sphere slope against the exact phase") {
    auto geom = std::make_shared<SphereGeometry>(1, 64);
    const auto family = FrameFamily::build(geom, {16, 24, 32, 48, 64});
    Rng rng(5);
    for (int i = 0; i < 6; ++i) {
      const cplx base = rng.disc(0.0, 0.6);
      const cplx d = std::polar(0.05 + 0.15 * rng.uniform(),
                                rng.uniform(0.0, kTwoPi));
      const ChartPoint x{0, base + 0.5 * d}, y{0, base - 0.5 * d};
      const auto probe = extract_phase(family, x, y);
      const double exact = fs_phase_exact(1, x.z, y.z);
      CHECK(probe.im_psi_hat > 0.0);
      CHECK(std::abs(probe.im_psi_hat - exact) < 0.05 * exact);
      CHECK(std::abs(probe.taylor_prediction - exact) < 0.05 * exact);
    }
  }

  SUBCASE("torus prediction lambda |z-w|^2") {
    auto torus = std::make_shared<TorusGeometry>(48);
    const auto family = FrameFamily::build(torus, {16, 24, 32, 40, 48});
    const ChartPoint x{0, cplx(0.55, 0.5)}, y{0, cplx(0.45, 0.5)};
    const auto probe = extract_phase(family, x, y);
    const double pred = 0.5 * kPi * 0.01;  // phi_zzbar |z-w|^2
    CHECK(probe.taylor_prediction == doctest::Approx(pred).epsilon(1e-10));
    CHECK(std::abs(probe.im_psi_hat - pred) < 0.15 * pred);
  }
}

TEST_CASE("off-diagonal decay") {
  auto geom = std::make_shared<SphereGeometry>(5, 40);
  const auto family = FrameFamily::build(geom, {8, 12, 16, 20, 24, 28, 32, 36, 40});

  SUBCASE("overlapping supports are rejected") {
    SupportSpec a{{0, cplx(0.0, 0.0)}, 0.3};
    SupportSpec b{{0, cplx(0.5, 0.0)}, 0.3};
    CHECK_THROWS_AS((void)offdiagonal_decay(family, a, b), Error);
  }

  SUBCASE("six orders of decay at separation 0.5") {
    SupportSpec a{{0, cplx(-0.3, 0.0)}, 0.05};
    SupportSpec b{{0, cplx(0.3, 0.0)}, 0.05};
    const auto rep = offdiagonal_decay(family, a, b);
    CHECK(rep.separation == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.rate > 0.0);
    CHECK(rep.sup_kernel.back() < 1e-6 * rep.sup_kernel.front());
    CHECK(rep.drop_orders >= 6.0);
    CHECK(rep.monotone_tail);
    // the fitted rate tracks the phase prediction at the closest pair
    const double exact = fs_phase_exact(5, cplx(-0.25, 0.0), cplx(0.25, 0.0));
    CHECK(std::abs(rep.min_im_psi - exact) < 0.05 * exact);
    CHECK(std::abs(rep.rate - exact) < 0.15 * exact);
  }

  SUBCASE("widening the separation raises the rate") {
    // separations chosen so the decay beats the k^n amplitude growth at the
    // small end and the k=40 kernel still clears the cancellation noise
    // floor of the d-term sum at the large end
    double prev = 0.0;
    for (const double c : {0.16, 0.22, 0.30}) {
      SupportSpec a{{0, cplx(-c, 0.0)}, 0.05};
      SupportSpec b{{0, cplx(c, 0.0)}, 0.05};
      const auto rep = offdiagonal_decay(family, a, b);
      CHECK(rep.rate > prev);
      prev = rep.rate;
    }
  }
}

TEST_CASE("spectral gap estimate") {
  auto geom = std::make_shared<SphereGeometry>(1, 32);
  const auto family = FrameFamily::build(geom, {8, 12, 16, 24, 32});
  const GapRegion region{0, cplx(0.0, 0.0), 0.0, 0.7};

  const auto gap = gap_estimate(family, region, 16, 421);
  CHECK(gap.rho.size() == 5);
  for (double r : gap.rho) {
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
  }
  CHECK(std::isfinite(gap.c_hat));
  CHECK(gap.c_hat > 0.0);
  CHECK(gap.rms_residual < 0.2);
  // positive compact case: no growing power of k
  CHECK(gap.n_hat < 1.0);

  SUBCASE("determinism: identical seed, identical ratios to the last bit") {
    const auto again = gap_estimate(family, region, 16, 421);
    for (std::size_t i = 0; i < gap.rho.size(); ++i)
      CHECK(again.rho[i] == gap.rho[i]);
  }

  SUBCASE("scaling invariance of the ratio") {
    const BergmanFrame& f = family.at(16);
    auto sections = make_gap_sections(*geom, 16, region, 3, 99);
    for (auto& d : sections) {
      const double nu = f.data_norm(d);
      const double nd = f.dbar_norm(d);
      const auto c = f.project(d);
      KahanSum csq;
      for (const auto& v : c) csq.add(std::norm(v));
      const double rho = std::sqrt(std::max(0.0, nu * nu - csq.value())) / nd;

      auto base = d.weighted;
      DataSection scaled = d;
      scaled.weighted = [base](cplx z) { return 7.0 * base(z); };
      const double nu7 = f.data_norm(scaled);
      const double nd7 = f.dbar_norm(scaled);
      const auto c7 = f.project(scaled);
      KahanSum csq7;
      for (const auto& v : c7) csq7.add(std::norm(v));
      const double rho7 =
          std::sqrt(std::max(0.0, nu7 * nu7 - csq7.value())) / nd7;
      CHECK(rho7 == doctest::Approx(rho).epsilon(1e-12));
    }
  }

  SUBCASE("a section already in the span projects to itself") {
    const BergmanFrame& f = family.at(16);
    auto fp = std::make_shared<BergmanFrame>(f);
    const Bump plateau{cplx(0.0, 0.0), 1.0, 2.0};
    DataSection d;
    d.chart = 0;
    d.center = 0.0;
    d.radius = 2.0;
    d.weighted = [fp, plateau](cplx z) {
      std::vector<cplx> fr(fp->dim());
      fp->frame_values({0, z}, fr);
      return fr[1] * plateau.value(z);
    };
    const double nu = f.data_norm(d);
    const auto c = f.project(d);
    KahanSum csq;
    for (const auto& v : c) csq.add(std::norm(v));
    const double resid = std::sqrt(std::max(0.0, nu * nu - csq.value()));
    CHECK(resid < 0.05 * nu);  // cutoff leakage only
  }
}
