#include "deid/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "deid/error.hpp"

namespace deid {

namespace {

// continued fraction for I_x(a,b), modified Lentz
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  constexpr double kEps = 1e-15;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("NoConvergence", "incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0)
    throw Error("BadArgument", "incomplete beta argument x=" + std::to_string(x));
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // log prefactor keeps tail values representable down to ~1e-300
  double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                  b * std::log1p(-x);
  double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * beta_continued_fraction(a, b, x) / a;
  return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int dof) {
  if (dof < 1) throw Error("BadArgument", "degrees of freedom must be >= 1");
  if (std::isinf(t)) return 0.0;
  double nu = static_cast<double>(dof);
  return regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw Error("LengthMismatch", "paired samples have lengths " + std::to_string(a.size()) +
                                      " and " + std::to_string(b.size()));
  const size_t m = a.size();
  if (m < 2) throw Error("TooFewSamples", "paired t-test needs at least 2 pairs");

  double mean = 0.0;
  for (size_t i = 0; i < m; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (size_t i = 0; i < m; ++i) {
    double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(m - 1);  // Bessel

  PairedTTest out;
  out.dof = static_cast<int>(m) - 1;
  if (var == 0.0) {
    if (mean == 0.0) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = mean > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
      out.degenerate = true;
    }
    return out;
  }
  out.t = mean / (std::sqrt(var) / std::sqrt(static_cast<double>(m)));
  out.p = student_t_two_sided_p(out.t, out.dof);
  return out;
}

}  // namespace deid
