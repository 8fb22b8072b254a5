#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csl/divergences.hpp"
#include "csl/matcore.hpp"
#include "csl/optim.hpp"

namespace csl {

enum class Certification { ExactTwoSided, OneSidedCertified, Inconclusive, Violated };
std::string_view certification_name(Certification c);

// lhs <= rhs style inequality evaluated on one instance.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs (for equalities: -|rhs - lhs|)
  Certification status = Certification::Inconclusive;
  std::string note;
  double tol = 0.0;  // slack below -tol fails
  bool holds() const {
    return status == Certification::ExactTwoSided || status == Certification::OneSidedCertified;
  }
};

// Upper bound whose lhs is computed exactly: violated below -tol.
BoundReport exact_upper_bound(std::string name, double lhs, double rhs, double tol);
// Upper bound whose lhs is a feasible-point estimate of a minimum: a
// failure only means the witness was not good enough.
BoundReport one_sided_upper_bound(std::string name, double lhs, double rhs, double tol);
BoundReport exact_equality(std::string name, double lhs, double rhs, double tol);

enum class SmoothingKind { Exact, UpperFeasible };

struct SmoothedEstimate {
  double value_bits = 0.0;
  SmoothingKind kind = SmoothingKind::UpperFeasible;
  DensityOperator witness;
  double witness_distance = 0.0;  // trace distance to the centre of the ball
  std::string witness_label;
};

double renyi_entropy_spectrum(std::span<const double> p, double alpha);
double renyi_entropy(const Matrix& rho, double alpha);
inline double renyi_entropy(const DensityOperator& rho, double alpha) {
  return renyi_entropy(rho.matrix(), alpha);
}
double von_neumann_entropy(const Matrix& rho);

struct InfoValue {
  double value = 0.0;
  Matrix sigma;  // minimizing state on B
  OptimizerReport report;
};

// A is `a_labels` (default: first register), B the rest.
InfoValue mutual_info_alpha_detailed(const DensityOperator& rho_ab, AlphaOrder alpha,
                                     const OptimizerOptions& opts = {},
                                     const std::vector<std::string>& a_labels = {});
double mutual_info_alpha(const DensityOperator& rho_ab, AlphaOrder alpha,
                         const OptimizerOptions& opts = {},
                         const std::vector<std::string>& a_labels = {});

// -min_sigma D_beta(rho^{AB} || I^A (x) sigma^B), beta >= 1/2.
InfoValue conditional_renyi_up_detailed(const DensityOperator& rho_ab, AlphaOrder beta,
                                        const OptimizerOptions& opts = {},
                                        const std::vector<std::string>& a_labels = {});
double conditional_renyi_up(const DensityOperator& rho_ab, AlphaOrder beta,
                            const OptimizerOptions& opts = {},
                            const std::vector<std::string>& a_labels = {});

double h_min_conditional(const DensityOperator& rho_ab,
                         const std::vector<std::string>& a_labels = {});
DominationResult h_min_conditional_detailed(const DensityOperator& rho_ab,
                                            const std::vector<std::string>& a_labels = {});

// Smallest non-zero eigenvalue (rank_tol convention).
double smallest_nonzero_eigenvalue(const Matrix& psd);

// I_max(A:B) <= -log lambda_min(rho^A) - H_min(A|B).
BoundReport imax_bound_lemma(const DensityOperator& rho_ab,
                             const std::vector<std::string>& a_labels = {});

inline constexpr double kUniversalC = 0.2679491924311227;  // 2 - sqrt(3)
double universal_f(double alpha, double beta, double eps);
double universal_rhs(const DensityOperator& rho_ab, double alpha, double beta, double eps,
                     const OptimizerOptions& opts = {},
                     const std::vector<std::string>& a_labels = {});

// Candidate witnesses for the smoothed max-information, independent of eps:
// rho itself and its truncations Pi_m rho Pi_m / Tr by the top-m
// eigenprojectors of rho^A. imax_smoothed_upper filters them by distance.
struct ImaxCandidate {
  DensityOperator state;
  double distance = 0.0;
  double imax_bits = 0.0;
  std::string label;
};
std::vector<ImaxCandidate> imax_smoothing_candidates(const DensityOperator& rho_ab,
                                                     const std::vector<std::string>& a_labels = {});
SmoothedEstimate best_imax_candidate(std::span<const ImaxCandidate> candidates, double eps);
SmoothedEstimate imax_smoothed_upper(const DensityOperator& rho_ab, double eps,
                                     const std::vector<std::string>& a_labels = {});

SmoothedEstimate dmax_smoothed_upper(const DensityOperator& rho, const DensityOperator& sigma,
                                     double eps);
// D_max^eps(rho||sigma) <= D_beta(rho||sigma) + log(1/eps^2)/(beta-1).
BoundReport check_rld_bound(const DensityOperator& rho, const DensityOperator& sigma, double eps,
                            double beta);

}  // namespace csl
