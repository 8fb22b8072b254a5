#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csl/divergences.hpp"
#include "csl/infomeasures.hpp"
#include "csl/matcore.hpp"
#include "csl/optim.hpp"

namespace csl {

// rho_ra: the last register is A, every earlier register belongs to R.
struct ConvexSplitInstance {
  DensityOperator rho_ra;
  DensityOperator sigma_a;
  DensityOperator omega_r;
  int n = 1;
  std::vector<double> weights;  // empty means uniform

  void validate() const;
  std::vector<double> resolved_weights() const;
  double t() const;  // sum of squared weights
  RegisterLayout r_layout() const;
  const Register& a_register() const;
};

// Instance with omega = rho^R and uniform weights.
ConvexSplitInstance pinned_instance(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n);

inline constexpr long kTauDimCap = 4096;

// Layout R, A_1, ..., A_n where A_x carries label "<A>_<x>".
RegisterLayout tau_layout(const ConvexSplitInstance& inst);
DensityOperator build_tau(const ConvexSplitInstance& inst);

struct MuQuantities {
  double mu = 0.0;
  double mu_max = 0.0;
};
// mu = Q_2(rho^{RA} || rho^R (x) sigma) - 1, mu_max = 2^{D_max(...)} - 1.
MuQuantities mu_quantities(const DensityOperator& rho_ra, const DensityOperator& sigma_a);

struct NuResult {
  double value = 0.0;
  Matrix omega;
  OptimizerReport report;
};
// min over omega of (n-1)/n Q_2(rho^R||omega) + 1/n Q_2(rho^{RA}||omega (x) sigma).
NuResult nu_n(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n,
              const OptimizerOptions& opts = {});
double nu_objective(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n,
                    const Matrix& omega);

// Distinct eigenvalues, clustered by gaps above rel_tol * lambda_max.
int spectrum_cardinality(const Matrix& h, double rel_tol = 1e-8);

struct LyComparison {
  double s = 1.0;
  int ell = 0;
  double lhs = 0.0;           // D(tau || rho^R (x) sigma^n)
  double ly_rhs = 0.0;        // ell^s / (s n^s) 2^{a_s}
  double equality_rhs = 0.0;  // log(1 + mu/n)
  double a_s = 0.0;
  double a_1 = 0.0;
  double crossover_log_n = 0.0;  // NaN at s = 1
  bool equality_tighter = false;
  BoundReport report;  // lhs against the smaller of the two right-hand sides
};

struct SplitReport {
  int n = 1;
  double t = 0.0;
  ExtendedReal q2_lhs;
  ExtendedReal q2_rhs;
  double residual = 0.0;
  double relative_residual = 0.0;
  double mu = 0.0;
  double mu_max = 0.0;
  std::optional<double> nu_n;

  // Measured against rho^R (x) sigma^n with the uniform tau.
  double d_umegaki = 0.0;
  double d2 = 0.0;
  double trace_distance = 0.0;
  double p_squared = 0.0;

  std::map<std::string, BoundReport> bounds;
  std::vector<LyComparison> ly2024;
};

// Dense Q_2(tau || omega (x) sigma^n) against the closed form.
SplitReport split_equality_check(const ConvexSplitInstance& inst);

// Equality check plus every derived bound, evaluated on the uniform tau
// with omega = rho^R.
SplitReport bounds_report(const ConvexSplitInstance& inst, const OptimizerOptions& opts = {},
                          std::span<const double> ly_s = {});

LyComparison ly2024_compare(const ConvexSplitInstance& inst, double s);

}  // namespace csl
