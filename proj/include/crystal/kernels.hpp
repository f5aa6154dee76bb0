#pragma once

// Radial integral kernels of the self-similar profile equation.
//
// A radial solution h = f^3 of the similarity equation is the fixed point of
//   h(r) = c4 + c2 r^2 + int_0^r G(tau, r) / f(tau) dtau,
// where G is built from the elementary kernels
//   H1(tau, r) = int_tau^r tau s^{N-1} ds,
//   G1(tau, r) = int_tau^r (tau/s)^{N-1} ds,
//   G2(tau, r) = int_tau^r s^{N-1} G1(tau, s) ds,
// as G(tau, r) = int_tau^r [-beta H1(tau, s) + kappa G2(tau, s)] / s^{N-1} ds
// with kappa = (4(N-1) beta + 1) / 4.

#include <cmath>
#include <string>

#include "crystal/error.hpp"
#include "crystal/numerics.hpp"

namespace crystal::kernels {

/// Space dimension N and similarity exponent beta; alpha = (4 beta - 1)/4 is
/// the matching time exponent of the self-similar ansatz.
class KernelParams {
 public:
  KernelParams(int dim, double beta) : dim_(dim), beta_(beta), alpha_((4.0 * beta - 1.0) / 4.0) {
    if (dim < 2) throw DomainError("KernelParams: dimension must be >= 2");
    if (!std::isfinite(beta)) throw InvalidInput("KernelParams: beta must be finite");
  }

  int dim() const noexcept { return dim_; }
  double beta() const noexcept { return beta_; }
  double alpha() const noexcept { return alpha_; }

  /// Coefficient (4(N-1) beta + 1)/4 of the G2 contribution.
  double kappa() const noexcept { return (4.0 * (dim_ - 1) * beta_ + 1.0) / 4.0; }

  /// Lower end -1/(4(N-1)) of the range on which G is nonnegative.
  double beta_lower() const noexcept { return -1.0 / (4.0 * (dim_ - 1)); }

  bool in_positivity_range() const noexcept { return beta_ >= beta_lower() && beta_ <= 0.0; }

  void require_positivity_range() const {
    if (!in_positivity_range()) {
      throw RangeError("beta = " + format_number(beta_) + " lies outside [-1/(4(N-1)), 0] = [" +
                       format_number(beta_lower()) + ", 0] for N = " + std::to_string(dim_));
    }
  }

 private:
  int dim_;
  double beta_;
  double alpha_;
};

namespace detail {

inline void check_ordered(double tau, double r, const char* who) {
  if (!(tau >= 0.0) || !(r >= tau)) {
    throw DomainError(std::string(who) + ": requires 0 <= tau <= r (tau = " + format_number(tau) +
                      ", r = " + format_number(r) + ")");
  }
}

}  // namespace detail

inline double h1_kernel(double tau, double r, const KernelParams& p) {
  detail::check_ordered(tau, r, "h1_kernel");
  const int n = p.dim();
  return tau * (std::pow(r, n) - std::pow(tau, n)) / n;
}

inline double g1_kernel(double tau, double r, const KernelParams& p) {
  detail::check_ordered(tau, r, "g1_kernel");
  if (tau == 0.0 || tau == r) return 0.0;
  const int n = p.dim();
  if (n == 2) return tau * std::log(r / tau);
  // tau (1 - (tau/r)^{N-2}) / (N-2), the same quantity without overflow for large r.
  return tau * (1.0 - std::pow(tau / r, n - 2)) / (n - 2);
}

inline double g2_kernel(double tau, double r, const KernelParams& p) {
  detail::check_ordered(tau, r, "g2_kernel");
  if (tau == 0.0 || tau == r) return 0.0;
  const int n = p.dim();
  if (n == 2) return 0.5 * tau * r * r * std::log(r / tau) - 0.25 * tau * (r * r - tau * tau);
  return (tau * std::pow(r, n) / n - 0.5 * r * r * std::pow(tau, n - 1) +
          (n - 2.0) / (2.0 * n) * std::pow(tau, n + 1)) /
         (n - 2);
}

/// dG/dr(tau, r) = [-beta H1(tau, r) + kappa G2(tau, r)] / r^{N-1}; exact for every N.
inline double g_kernel_dr(double tau, double r, const KernelParams& p) {
  detail::check_ordered(tau, r, "g_kernel_dr");
  if (tau == 0.0 || tau == r) return 0.0;
  const double s = -p.beta() * h1_kernel(tau, r, p) + p.kappa() * g2_kernel(tau, r, p);
  return s / std::pow(r, p.dim() - 1);
}

/// Four-term closed form of G, valid for N > 2 and N != 4.
inline double g_kernel_closed(double tau, double r, const KernelParams& p) {
  const int n = p.dim();
  if (n == 2 || n == 4) {
    throw UnsupportedDimension("g_kernel_closed: no closed form for N = " + std::to_string(n) +
                               "; use g_kernel_quad");
  }
  detail::check_ordered(tau, r, "g_kernel_closed");
  if (tau == 0.0 || tau == r) return 0.0;
  const double b = p.beta();
  const double nn = n;
  const double q = tau / r;
  // r^{2-N} tau^{N+1} = r^2 tau q^N and r^{4-N} tau^{N-1} = r^2 tau q^{N-2}.
  const double r2t = r * r * tau;
  return (4.0 * b + 1.0) / (8.0 * nn * (nn - 2.0)) * r2t -
         (12.0 * b + 1.0) / (8.0 * (nn - 2.0) * (nn - 4.0)) * tau * tau * tau -
         (4.0 * (nn + 1.0) * b + 1.0) / (8.0 * nn * (nn - 2.0)) * r2t * std::pow(q, n) +
         (4.0 * (nn - 1.0) * b + 1.0) / (8.0 * (nn - 2.0) * (nn - 4.0)) * r2t * std::pow(q, n - 2);
}

/// G(tau, r) by adaptive composite Simpson over s in [tau, r] of the closed-form
/// integrand dG/dr(tau, s). Panels double until successive estimates agree to
/// 1e-10 relative (or to 1e-13 max(1, r^4) absolute), capped at 2^16 panels.
inline double g_kernel_quad(double tau, double r, const KernelParams& p) {
  detail::check_ordered(tau, r, "g_kernel_quad");
  if (tau == 0.0 || tau == r) return 0.0;
  const double scale = std::max(1.0, r * r * r * r);
  auto integrand = [&](double s) { return g_kernel_dr(tau, s, p); };

  // Running sums of endpoint, odd and even interior samples let each doubling
  // reuse every previous evaluation.
  std::size_t panels = 2;
  double width = (r - tau) / panels;
  const double ends = integrand(tau) + integrand(r);
  double evens = 0.0;
  double odds = integrand(tau + width);
  double previous = width / 3.0 * (ends + 4.0 * odds + 2.0 * evens);
  constexpr std::size_t kMaxPanels = std::size_t{1} << 16;
  while (panels < kMaxPanels) {
    panels *= 2;
    width = (r - tau) / panels;
    evens += odds;
    odds = 0.0;
    for (std::size_t i = 1; i < panels; i += 2) odds += integrand(tau + i * width);
    const double current = width / 3.0 * (ends + 4.0 * odds + 2.0 * evens);
    const double change = std::abs(current - previous);
    if (panels >= 8 && (change <= 1e-10 * std::abs(current) || change <= 1e-13 * scale)) {
      return current + (current - previous) / 15.0;
    }
    previous = current;
  }
  return previous;
}

/// Preferred evaluator: closed form where it exists, quadrature for N = 2 and N = 4.
inline double g_kernel(double tau, double r, const KernelParams& p) {
  const int n = p.dim();
  return (n == 2 || n == 4) ? g_kernel_quad(tau, r, p) : g_kernel_closed(tau, r, p);
}

}  // namespace crystal::kernels
