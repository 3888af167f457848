#include "pnpfv/kernels.hpp"

#include <cmath>
#include <string>

namespace pnpfv {

namespace {

void check_overflow(double y) {
  // !(<=) also rejects NaN.
  if (!(std::abs(y) <= 700.0)) {
    throw DomainError("kernel argument |y| = " + std::to_string(y) +
                      " exceeds the overflow guard 700; "
                      "potentials look unscaled");
  }
}

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

double bernoulli(double y) {
  check_overflow(y);
  // Near zero, y/expm1(y) loses relative accuracy; both branches agree to
  // better than 1e-15 at the seam |y| = 1e-5.
  if (std::abs(y) < 1e-5) {
    double y2 = y * y;
    return 1.0 - 0.5 * y + y2 / 12.0 - y2 * y2 / 720.0;
  }
  return y / std::expm1(y);
}

double bernoulli_deriv(double y) {
  check_overflow(y);
  if (std::abs(y) < 1e-5) {
    return -0.5 + y / 6.0 - y * y * y / 180.0;
  }
  // B'(y) = (d - y (d+1)) / d^2 with d = expm1(y), evaluated as
  // ((1-y) - y/d) / d to avoid overflow of d^2 for large y.
  double d = std::expm1(y);
  return ((1.0 - y) - y / d) / d;
}

double sqra(double y) {
  check_overflow(y);
  return std::exp(-0.5 * y);
}

double sqra_deriv(double y) {
  check_overflow(y);
  return -0.5 * std::exp(-0.5 * y);
}

double kernel_eval(Kernel k, double y) {
  return k == Kernel::Bernoulli ? bernoulli(y) : sqra(y);
}

double kernel_deriv(Kernel k, double y) {
  return k == Kernel::Bernoulli ? bernoulli_deriv(y) : sqra_deriv(y);
}

double stolarsky_log_mean(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("stolarsky_log_mean requires positive arguments");
  }
  if (a == b) return a;
  double diff = b - a;
  if (std::abs(diff) < 1e-10 * std::max(a, b)) {
    // Harmonic mean times the atanh(t)/t correction with t = (b-a)/(b+a);
    // avoids the log/difference cancellation for nearly equal arguments.
    double t = diff / (a + b);
    return 2.0 * a * b / (a + b) * (1.0 + t * t / 3.0);
  }
  double ratio = b / a;
  // log1p keeps accuracy for moderate ratios; for separated magnitudes the
  // plain log difference is exact enough and immune to b-a absorbing b.
  double lg = (ratio > 0.5 && ratio < 2.0) ? std::log1p(diff / a)
                                           : std::log(b) - std::log(a);
  // Multiplication order keeps intermediates within range: the result is a
  // mean, so it lies between a and b.
  return ((a / diff) * lg) * b;
}

double face_flux(Kernel k, double a_sigma, double D_i, double z_i,
                 double u_iK, double u_0K, double u_iL, double u_0L,
                 double phi_K, double phi_L) {
  double y = z_i * (phi_L - phi_K);
  return a_sigma * D_i *
         (u_iK * u_0L * kernel_eval(k, y) - u_iL * u_0K * kernel_eval(k, -y));
}

double face_flux_truncated(Kernel k, double a_sigma, double D_i, double z_i,
                           double u_iK, double u_0K, double u_iL, double u_0L,
                           double phi_K, double phi_L) {
  return face_flux(k, a_sigma, D_i, z_i, positive_part(u_iK),
                   positive_part(u_0K), positive_part(u_iL),
                   positive_part(u_0L), phi_K, phi_L);
}

double face_flux_slotboom(Kernel k, double a_sigma, double D_i, double z_i,
                          double u_iK, double u_0K, double u_iL, double u_0L,
                          double phi_K, double phi_L) {
  if (k != Kernel::Bernoulli) {
    throw DomainError("the Slotboom flux form is defined for the Bernoulli "
                      "kernel only");
  }
  if (!(u_iK > 0.0) || !(u_0K > 0.0) || !(u_iL > 0.0) || !(u_0L > 0.0)) {
    throw DomainError("face_flux_slotboom requires strictly positive "
                      "volume fractions");
  }
  if (!(std::abs(z_i * phi_K) <= 350.0) || !(std::abs(z_i * phi_L) <= 350.0)) {
    throw DomainError("face_flux_slotboom: |z phi| exceeds the overflow "
                      "guard 350");
  }
  double w_K = u_iK / u_0K * std::exp(z_i * phi_K);
  double w_L = u_iL / u_0L * std::exp(z_i * phi_L);
  double mean =
      stolarsky_log_mean(std::exp(-z_i * phi_K), std::exp(-z_i * phi_L));
  return a_sigma * D_i * u_0K * u_0L * mean * (w_K - w_L);
}

SplitFlux split_flux(Kernel k, double a_sigma, double D_i, double z_i,
                     double u_iK, double u_0K, double u_iL, double u_0L,
                     double phi_K, double phi_L) {
  if (k != Kernel::Bernoulli) {
    throw DomainError("split_flux is defined for the Bernoulli kernel only");
  }
  double y = z_i * (phi_L - phi_K);
  SplitFlux out;
  out.convective = a_sigma * D_i * 0.5 * (u_iK * u_0L + u_iL * u_0K) * z_i *
                   (phi_K - phi_L);
  out.diffusive = a_sigma * D_i * 0.5 * (u_iK * u_0L - u_iL * u_0K) *
                  (bernoulli(y) + bernoulli(-y));
  return out;
}

}  // namespace pnpfv
