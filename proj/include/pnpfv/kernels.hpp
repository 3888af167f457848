#pragma once

#include "pnpfv/errors.hpp"

namespace pnpfv {

// Flux-fitting kernel choice. Bernoulli gives the exponential-fitting
// (Scharfetter-Gummel type) flux, Sqra the square-root approximation
// B(y) = exp(-y/2). Both are strictly positive with B(0) = 1, B'(0) = -1/2.
enum class Kernel { Bernoulli, Sqra };

// Bernoulli function B(y) = y / (e^y - 1), continuously extended by B(0) = 1.
// Throws DomainError for |y| > 700 (overflow guard; such arguments signal
// unscaled potentials rather than a legitimate evaluation).
double bernoulli(double y);

// Derivative B'(y); B'(0) = -1/2.
double bernoulli_deriv(double y);

double sqra(double y);
double sqra_deriv(double y);

double kernel_eval(Kernel k, double y);
double kernel_deriv(Kernel k, double y);

// A kernel bundled with its evaluation functions.
struct FluxKernel {
  Kernel variant = Kernel::Bernoulli;
  double B(double y) const { return kernel_eval(variant, y); }
  double dB(double y) const { return kernel_deriv(variant, y); }
};

// Stolarsky/logarithmic mean M(a,b) = (log(1/a) - log(1/b)) / (1/a - 1/b)
// for positive a != b, with M(a,a) = a. Continuous across a -> b.
double stolarsky_log_mean(double a, double b);

// Two-point flux across an interior face sigma = K|L:
//   a_sigma D_i ( u_iK u_0L B(z_i (phi_L - phi_K))
//               - u_iL u_0K B(z_i (phi_K - phi_L)) ).
// Antisymmetric under swapping the K and L sides.
double face_flux(Kernel k, double a_sigma, double D_i, double z_i,
                 double u_iK, double u_0K, double u_iL, double u_0L,
                 double phi_K, double phi_L);

// Same formula with every volume fraction x replaced by max(x, 0); equals
// face_flux whenever all fractions are nonnegative. Keeps Newton iterates
// with out-of-range fractions harmless.
double face_flux_truncated(Kernel k, double a_sigma, double D_i, double z_i,
                           double u_iK, double u_0K, double u_iL, double u_0L,
                           double phi_K, double phi_L);

// Slotboom form of the Bernoulli flux:
//   a_sigma D_i u_0K u_0L M(e^{-z phi_K}, e^{-z phi_L}) (w_iK - w_iL)
// with w_i = (u_i / u_0) e^{z phi}. Requires strictly positive fractions and
// the Bernoulli kernel; algebraically equal to face_flux.
double face_flux_slotboom(Kernel k, double a_sigma, double D_i, double z_i,
                          double u_iK, double u_0K, double u_iL, double u_0L,
                          double phi_K, double phi_L);

struct SplitFlux {
  double convective = 0.0;
  double diffusive = 0.0;
};

// Convection/diffusion split of the Bernoulli flux, using B(-y) - B(y) = y:
//   convective = a D (u_iK u_0L + u_iL u_0K)/2 * z (phi_K - phi_L)
//   diffusive  = a D (u_iK u_0L - u_iL u_0K)/2 * (B(z dphi) + B(-z dphi))
// Their sum equals face_flux. Bernoulli kernel only.
SplitFlux split_flux(Kernel k, double a_sigma, double D_i, double z_i,
                     double u_iK, double u_0K, double u_iL, double u_0L,
                     double phi_K, double phi_L);

}  // namespace pnpfv
