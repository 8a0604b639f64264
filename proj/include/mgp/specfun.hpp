#pragma once

#include <stdexcept>
#include <string>

namespace mgp {

/// Raised when an argument lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Strictly positive, finite real. Construction validates.
class PositiveReal {
 public:
  explicit PositiveReal(double value);
  double value() const noexcept { return value_; }
  operator double() const noexcept { return value_; }

 private:
  double value_;
};

double log_gamma(double x);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
///
/// Power series for x < a + 1, modified Lentz continued fraction otherwise.
/// Both branches carry the prefactor x^a e^{-x} / Gamma(a) in log-space so
/// large x underflows cleanly to 0 instead of producing NaN.
double reg_gamma_q(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x), computed
/// directly on the series side to keep precision when P is small.
double reg_gamma_p(double a, double x);

/// ln K_nu(x), the modified Bessel function of the second kind.
///
/// Uses Temme's series for x <= 2 and Steed's continued fraction above,
/// both at the fractional order |nu| - round(|nu|) and then forward
/// recurrence in the order. The large-x branch is evaluated scaled by e^x,
/// so the log stays finite for arguments where K itself underflows.
double log_bessel_k(double nu, double x);

double bessel_k(double nu, double x);

/// P(X <= theta) for X ~ Inv-Ga(a, b) (shape a, scale b).
double inv_gamma_cdf(double a, double b, double theta);

/// ln of the Inv-Ga(a, b) density at theta.
double inv_gamma_log_pdf(double a, double b, double theta);

}  // namespace mgp
