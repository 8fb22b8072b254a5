#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "csl/matcore.hpp"

namespace csl {

struct OptimizerOptions {
  int restarts = 32;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  int max_iterations = 400;
};

struct OptimizerReport {
  double value = 0.0;
  Matrix argopt;  // density matrix (state optimizers)
  Vector argvec;  // unit vector (pure-state optimizer)
  int iterations = 0;
  bool converged = false;
  double gap_estimate = 0.0;
  int best_restart = -1;
  std::vector<double> restart_values;
  std::string failure;  // non-empty when no finite value was found
};

using StateObjective = std::function<double(const Matrix&)>;
using PureObjective = std::function<double(const Vector&)>;

// Multi-start quasi-Newton descent on sigma = G^dag G / Tr[G^dag G].
// Warm starts are tried first, then `restarts` random starts derived from
// the seed; the best value wins, ties going to the lowest restart index.
OptimizerReport minimize_over_states(const StateObjective& objective, int dim,
                                     const OptimizerOptions& opts = {},
                                     std::span<const Matrix> warm_starts = {});

// Ascent over unit vectors psi = v / |v|.
OptimizerReport maximize_over_pure(const PureObjective& objective, int dim,
                                   const OptimizerOptions& opts = {},
                                   std::span<const Vector> warm_starts = {});

// min Tr[Y] subject to X (x) Y >= rho, for PSD X on A and rho on A (x) B.
// With X = rho^A this is 2^{I_max}; with X = I_A it is 2^{-H_min(A|B)}.
struct DominationResult {
  double min_trace = 0.0;
  Matrix y;                   // certificate, optimal Tr Y = min_trace
  Matrix sigma;               // Y / Tr Y
  double residual = 0.0;      // lambda_min(X (x) Y - rho)
  double dual_lower = 0.0;    // lower bound on min_trace from a dual point
  int iterations = 0;
  bool converged = false;
};
DominationResult solve_domination(const Matrix& x, const Matrix& rho_ab, int dim_b,
                                  double tol = 1e-7);

struct ImaxResult {
  double value_bits = 0.0;
  Matrix y;
  Matrix sigma;
  double feasibility_residual = 0.0;
  double dual_bound_bits = 0.0;
  int iterations = 0;
  bool converged = false;
};

// I_max(A:B) = min_sigma D_max(rho^{AB} || rho^A (x) sigma^B). Substituting
// Y = t sigma turns "t rho^A (x) sigma >= rho" into the linear constraint
// rho^A (x) Y >= rho, so 2^{I_max} = min Tr Y over that constraint.
// A is the register set `a_labels` (default: the first register).
ImaxResult imax_sdp(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels = {},
                    double tol = 1e-7);

// rho^{AB} with the A registers moved to the front.
struct Bipartite {
  Matrix rho;
  RegisterLayout a;
  RegisterLayout b;
  int dim_a() const { return a.dim(); }
  int dim_b() const { return b.dim(); }
};
Bipartite split_bipartite(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels = {});

}  // namespace csl
