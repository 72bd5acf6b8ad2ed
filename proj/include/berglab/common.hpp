#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace berglab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Errors. The code determines the CLI exit status (usage -> 2, the rest -> 3;
// assertion failures of experiments are reported data, never exceptions).

enum class ErrorCode {
  Domain,
  Resolution,
  Positivity,
  Rank,
  Conditioning,
  Numerics,
  Generator,
  Cache,
  Usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

// ---------------------------------------------------------------------------
// Deterministic RNG. std::uniform_real_distribution is not bit-portable
// across standard libraries, so raw mt19937_64 output is mapped by hand.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform on the disc |z - center| < radius
  cplx disc(cplx center, double radius) {
    double r = radius * std::sqrt(uniform());
    double t = kTwoPi * uniform();
    return center + cplx(r * std::cos(t), r * std::sin(t));
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Compensated summation (Neumaier). Used wherever a reduction feeds a
// tolerance at or below 1e-12.

class KahanSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

class KahanSumC {
 public:
  void add(cplx v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  KahanSum re_, im_;
};

// ---------------------------------------------------------------------------
// Finite differences for Wirtinger derivatives of a real weight.
//   phi_z     = (phi_x - i phi_y)/2
//   phi_zz    = (phi_xx - phi_yy)/4 - i phi_xy/2
//   phi_zzbar = (phi_xx + phi_yy)/4

struct WeightJet {
  double value = 0.0;
  cplx d_z{0.0, 0.0};
  cplx d_zz{0.0, 0.0};
  double d_zzbar = 0.0;
};

using RealField = std::function<double(cplx)>;

// 4th-order central stencils; mixed term by Richardson on the cross stencil.
WeightJet fd_weight_jet(const RealField& f, cplx z, double h_grad = 1e-5,
                        double h_hess = 5e-4);

// Wirtinger derivatives (d/dz, d/dzbar) of a complex field, 2nd-order central.
std::pair<cplx, cplx> fd_wirtinger(const std::function<cplx(cplx)>& f, cplx z,
                                   double h);

// ---------------------------------------------------------------------------
// Small dense least squares via Householder QR (long double accumulation).

struct FitResult {
  std::vector<double> coeffs;
  double rms_residual = 0.0;
  double max_residual = 0.0;
};

// y ~ sum_j coeffs[j] * cols[j][i]
FitResult least_squares(const std::vector<std::vector<double>>& cols,
                        const std::vector<double>& y);

// y ~ a + b x; coeffs = {a, b}
FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Gauss-Legendre nodes/weights on [-1, 1]
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Formatting and hashing for reports and caches.

std::string fmt_g17(double v);
std::uint64_t fnv1a(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace berglab
