#include "berglab/common.hpp"

#include <algorithm>
#include <cstdio>

namespace berglab {

WeightJet fd_weight_jet(const RealField& f, cplx z, double h_grad,
                        double h_hess) {
  WeightJet jet;
  jet.value = f(z);

  auto fx = [&](double a, double b) { return f(z + cplx(a, b)); };

  // 4th-order first derivatives
  double h = h_grad;
  double phi_x =
      (-fx(2 * h, 0) + 8 * fx(h, 0) - 8 * fx(-h, 0) + fx(-2 * h, 0)) / (12 * h);
  double phi_y =
      (-fx(0, 2 * h) + 8 * fx(0, h) - 8 * fx(0, -h) + fx(0, -2 * h)) / (12 * h);
  jet.d_z = 0.5 * cplx(phi_x, -phi_y);

  // 4th-order pure second derivatives
  double s = h_hess;
  double f0 = jet.value;
  double phi_xx = (-fx(2 * s, 0) + 16 * fx(s, 0) - 30 * f0 + 16 * fx(-s, 0) -
                   fx(-2 * s, 0)) /
                  (12 * s * s);
  double phi_yy = (-fx(0, 2 * s) + 16 * fx(0, s) - 30 * f0 + 16 * fx(0, -s) -
                   fx(0, -2 * s)) /
                  (12 * s * s);

  // cross term: 2nd-order stencil refined once by Richardson
  auto cross = [&](double t) {
    return (fx(t, t) + fx(-t, -t) - fx(t, -t) - fx(-t, t)) / (4 * t * t);
  };
  double phi_xy = (4.0 * cross(s / 2) - cross(s)) / 3.0;

  jet.d_zz = cplx(0.25 * (phi_xx - phi_yy), -0.5 * phi_xy);
  jet.d_zzbar = 0.25 * (phi_xx + phi_yy);
  return jet;
}

std::pair<cplx, cplx> fd_wirtinger(const std::function<cplx(cplx)>& f, cplx z,
                                   double h) {
  cplx dx = (f(z + h) - f(z - h)) / (2 * h);
  cplx dy = (f(z + cplx(0, h)) - f(z - cplx(0, h))) / (2 * h);
  cplx dz = 0.5 * (dx - cplx(0, 1) * dy);
  cplx dzbar = 0.5 * (dx + cplx(0, 1) * dy);
  return {dz, dzbar};
}

FitResult least_squares(const std::vector<std::vector<double>>& cols,
                        const std::vector<double>& y) {
  const std::size_t m = y.size();
  const std::size_t n = cols.size();
  require(n >= 1 && m >= n, ErrorCode::Numerics,
          "least_squares: need at least as many rows as columns");
  for (const auto& c : cols)
    require(c.size() == m, ErrorCode::Numerics,
            "least_squares: ragged column");

  // Householder QR on the augmented [A | y] in long double.
  std::vector<std::vector<long double>> a(m,
                                          std::vector<long double>(n + 1));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = cols[j][i];
    a[i][n] = y[i];
  }

  for (std::size_t j = 0; j < n; ++j) {
    long double norm = 0;
    for (std::size_t i = j; i < m; ++i) norm += a[i][j] * a[i][j];
    norm = std::sqrt(norm);
    require(norm > 0, ErrorCode::Numerics, "least_squares: zero column");
    long double alpha = (a[j][j] > 0) ? -norm : norm;
    std::vector<long double> v(m, 0.0L);
    for (std::size_t i = j; i < m; ++i) v[i] = a[i][j];
    v[j] -= alpha;
    long double vnorm2 = 0;
    for (std::size_t i = j; i < m; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 > 0) {
      for (std::size_t c = j; c <= n; ++c) {
        long double dot = 0;
        for (std::size_t i = j; i < m; ++i) dot += v[i] * a[i][c];
        long double scale = 2.0L * dot / vnorm2;
        for (std::size_t i = j; i < m; ++i) a[i][c] -= scale * v[i];
      }
    }
  }

  // back substitution
  std::vector<long double> x(n, 0.0L);
  for (std::size_t j = n; j-- > 0;) {
    long double s = a[j][n];
    for (std::size_t c = j + 1; c < n; ++c) s -= a[j][c] * x[c];
    require(std::abs((double)a[j][j]) > 0, ErrorCode::Numerics,
            "least_squares: rank-deficient system");
    x[j] = s / a[j][j];
  }

  FitResult out;
  out.coeffs.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.coeffs[j] = static_cast<double>(x[j]);

  KahanSum sq;
  for (std::size_t i = 0; i < m; ++i) {
    long double pred = 0;
    for (std::size_t j = 0; j < n; ++j) pred += x[j] * (long double)cols[j][i];
    double r = static_cast<double>((long double)y[i] - pred);
    sq.add(r * r);
    out.max_residual = std::max(out.max_residual, std::abs(r));
  }
  out.rms_residual = std::sqrt(sq.value() / static_cast<double>(m));
  return out;
}

FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> ones(x.size(), 1.0);
  return least_squares({ones, x}, y);
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration from the Chebyshev initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int iter = 0; iter < 100; ++iter) {
      p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      double dp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double dp = n * (x * p0 - p1) / (x * x - 1.0);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

}  // namespace berglab
