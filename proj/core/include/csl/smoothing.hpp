#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "csl/infomeasures.hpp"
#include "csl/matcore.hpp"
#include "csl/optim.hpp"

namespace csl {

// q and t sorted non-increasing, s_x = min(q_x, t_x).
struct SpectrumPair {
  std::vector<double> q;
  std::vector<double> t;
  std::vector<double> s;
  double s_mass() const;
};
SpectrumPair make_spectrum_pair(std::vector<double> q, std::vector<double> t);

std::vector<double> sorted_spectrum(const Matrix& rho);
// 1/2 || p - q ||_1 for equal-length vectors (no sorting).
double tv_distance(std::span<const double> p, std::span<const double> q);

struct AlignedDistance {
  double value = 0.0;
  Matrix unitary;  // U sigma U^dag has rho's eigenbasis with sorted spectra aligned
};
// min_U 1/2 || rho - U sigma U^dag ||_1 = 1/2 || p_sorted - q_sorted ||_1.
AlignedDistance min_unitary_trace_distance(const Matrix& rho, const Matrix& sigma);

using SpectrumFunction = std::function<double(std::span<const double>)>;

struct SpectralSmoothing {
  double value = 0.0;
  std::vector<double> spectrum;  // non-increasing witness spectrum
  Matrix witness;                // spectrum reattached to the input eigenbasis (if any)
};

// Minimizes f over probability vectors q with 1/2 ||p - q||_1 <= eps
// (p is sorted first). Starts from p and from the tail-transfer point,
// then refines by pairwise mass transfers.
SpectralSmoothing minimize_over_tv_ball(const SpectrumFunction& f, std::vector<double> p, double eps);

SpectralSmoothing smooth_unitary_invariant_min(const SpectrumFunction& f, const Matrix& rho, double eps);

// min H_alpha over the delta-ball around p.
SpectralSmoothing smooth_renyi_entropy_min(std::vector<double> p, double delta, double alpha);

struct TruncationResult {
  Effect lambda;          // diagonal in omega's eigenbasis
  Matrix eigenbasis;      // columns: omega's eigenvectors, sorted
  int m = 0;              // cutoff, 1-based
  double survival = 0.0;  // Tr[Lambda omega Lambda]
  double delta = 0.0;
  SpectrumPair spectra;
  DensityOperator omega_trunc;  // Lambda omega Lambda / survival
};

// Lambda = sum_{x <= m} sqrt(s_x / q_x) |x><x| with m the unique index where
// sum_{x>m} s_x <= delta < sum_{x>=m} s_x.
TruncationResult truncation_effect(const DensityOperator& omega_a, std::span<const double> tau_spectrum,
                                   double delta);
// (Lambda (x) I) omega (Lambda (x) I), normalized.
DensityOperator apply_truncation(const DensityOperator& omega_ab, const TruncationResult& tr,
                                 const std::vector<std::string>& a_labels = {});

struct ChainStep {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  double tol = 0.0;
};

struct ChainReport {
  std::array<ChainStep, 4> steps;
  bool all_pass = false;
  std::string failed_step;  // empty when all steps pass
  double eps1 = 0.0;
  double delta = 0.0;
  double h_alpha_delta = 0.0;
  double imax_truncated = 0.0;
  double universal_rhs = 0.0;
  int m = 0;
};

// Expensive ingredients of the chain that do not depend on (alpha, eps);
// callers sweeping a grid can compute them once.
struct ChainContext {
  double h_min = 0.0;                       // H_min(A|B)_rho
  std::vector<std::pair<double, double>> h_up;  // (beta, H~_beta^up(A|B)_rho)
};
ChainContext make_chain_context(const DensityOperator& rho_ab, std::span<const double> betas,
                                const OptimizerOptions& opts = {},
                                const std::vector<std::string>& a_labels = {});

// Runs the proof chain with omega = rho. Steps: (i) omega_Lambda within
// eps1 of rho; (ii) -log lambda_min(Lambda rho^A Lambda) <= H_alpha^delta +
// log(1/delta)/(1-alpha); (iii) I_max(omega_Lambda) <= -log lambda_min - H_min;
// (iv) I_max(omega_Lambda) <= universal rhs. Step (iv) certifies the theorem
// on the instance because omega_Lambda lies in the eps-ball.
ChainReport uab_chain_verify(const DensityOperator& rho_ab, double alpha, double beta, double eps,
                             const OptimizerOptions& opts = {},
                             const std::vector<std::string>& a_labels = {},
                             const ChainContext* context = nullptr);

}  // namespace csl
