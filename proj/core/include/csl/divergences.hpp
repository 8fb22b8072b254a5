#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "csl/matcore.hpp"

namespace csl {

// A real number or +infinity. Divergences return +infinity instead of
// throwing when the support condition fails.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  static constexpr ExtendedReal infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }

  bool is_infinite() const { return std::isinf(v_) && v_ > 0; }
  bool is_finite() const { return std::isfinite(v_); }
  constexpr double value() const { return v_; }

  friend bool operator==(ExtendedReal a, ExtendedReal b) { return a.v_ == b.v_; }
  friend auto operator<=>(ExtendedReal a, ExtendedReal b) { return a.v_ <=> b.v_; }

 private:
  double v_ = 0.0;
};

// "inf" or the value with 17 significant digits.
std::string to_string(ExtendedReal x);

class AlphaOrder {
 public:
  AlphaOrder(double alpha);  // NOLINT(google-explicit-constructor)
  static AlphaOrder infinity() { return AlphaOrder(std::numeric_limits<double>::infinity()); }

  double value() const { return alpha_; }
  bool is_zero() const { return alpha_ == 0.0; }
  bool is_one() const { return alpha_ == 1.0; }
  bool is_two() const { return alpha_ == 2.0; }
  bool is_infinite() const { return std::isinf(alpha_); }

 private:
  double alpha_;
};

enum class DivergenceBranch { Min, LowOrder, Sandwiched, Umegaki, Max, Infinite };
std::string_view branch_name(DivergenceBranch b);

struct DivergenceValue {
  ExtendedReal bits;
  DivergenceBranch branch;
};

// All functions below accept PSD matrices that need not have unit trace
// (e.g. I^A (x) sigma^B). Logarithms are base 2.

// rho << sigma: the mass of rho outside supp(sigma) is at most kSupport.
bool support_contained(const Matrix& rho, const Matrix& sigma);
bool orthogonal(const Matrix& rho, const Matrix& sigma);

// Tr(sigma^{(1-a)/2a} rho sigma^{(1-a)/2a})^a, alpha in (0,1) u (1,inf).
// For alpha > 1 without support containment the result is +infinity.
ExtendedReal q_alpha(const Matrix& rho, const Matrix& sigma, double alpha);

DivergenceValue d_alpha_detailed(const Matrix& rho, const Matrix& sigma, AlphaOrder alpha);
ExtendedReal d_alpha(const Matrix& rho, const Matrix& sigma, AlphaOrder alpha);
ExtendedReal d_min(const Matrix& rho, const Matrix& sigma);
ExtendedReal d_umegaki(const Matrix& rho, const Matrix& sigma);
ExtendedReal d_max(const Matrix& rho, const Matrix& sigma);
// Tr[rho sigma^{-1/2} rho sigma^{-1/2}] evaluated directly.
ExtendedReal q2(const Matrix& rho, const Matrix& sigma);
ExtendedReal d2(const Matrix& rho, const Matrix& sigma);

ExtendedReal chi_squared(std::span<const double> p, std::span<const double> q);

struct HypothesisTest {
  ExtendedReal value;       // -log2 of type2
  double type2 = 0.0;       // min Tr[Lambda sigma]
  double type1_mass = 0.0;  // Tr[Lambda rho]
  Matrix effect;            // optimal Lambda
  double threshold = 0.0;   // u with Lambda built from the spectrum of u rho - sigma
  double dual_bound = 0.0;  // u(1-eps) - Tr[(u rho - sigma)_+] <= type2
  double gap = 0.0;         // type2 - dual_bound
  bool certified = false;   // gap <= 1e-8
};

// Exact Neyman-Pearson solution of min Tr[Lambda sigma] s.t.
// Tr[Lambda rho] >= 1 - eps, 0 <= Lambda <= I.
HypothesisTest hypothesis_test(const Matrix& rho, const Matrix& sigma, double eps);
ExtendedReal d_min_eps(const Matrix& rho, const Matrix& sigma, double eps);

// -p log p - (1-p) log(1-p), base 2.
double binary_entropy(double p);
// Right-hand sides of the lower bound (alpha in (0,1)) and upper bound
// (beta > 1) on the hypothesis-testing divergence.
double htd_lower_rhs(double d_alpha_value, double alpha, double eps);
double htd_upper_rhs(double d_beta_value, double beta, double eps);

inline ExtendedReal q_alpha(const DensityOperator& r, const DensityOperator& s, double a) {
  return q_alpha(r.matrix(), s.matrix(), a);
}
inline ExtendedReal d_alpha(const DensityOperator& r, const DensityOperator& s, AlphaOrder a) {
  return d_alpha(r.matrix(), s.matrix(), a);
}
inline ExtendedReal d_min(const DensityOperator& r, const DensityOperator& s) {
  return d_min(r.matrix(), s.matrix());
}
inline ExtendedReal d_umegaki(const DensityOperator& r, const DensityOperator& s) {
  return d_umegaki(r.matrix(), s.matrix());
}
inline ExtendedReal d_max(const DensityOperator& r, const DensityOperator& s) {
  return d_max(r.matrix(), s.matrix());
}
inline ExtendedReal q2(const DensityOperator& r, const DensityOperator& s) {
  return q2(r.matrix(), s.matrix());
}
inline ExtendedReal d2(const DensityOperator& r, const DensityOperator& s) {
  return d2(r.matrix(), s.matrix());
}
inline ExtendedReal d_min_eps(const DensityOperator& r, const DensityOperator& s, double eps) {
  return d_min_eps(r.matrix(), s.matrix(), eps);
}

}  // namespace csl
