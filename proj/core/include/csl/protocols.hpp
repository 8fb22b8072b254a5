#pragma once

#include <string>
#include <vector>

#include "csl/infomeasures.hpp"
#include "csl/matcore.hpp"
#include "csl/optim.hpp"

namespace csl {

// psi on R..., A, A' (the last two registers are A and A'). With only two
// registers A is trivial.
struct QSSInstance {
  PureStateVector psi;
  double eps = 0.0;
  double delta = 0.0;
  void validate() const;
};

// Amplitude budget |R| n |A|^n |B|^n for the simulated protocol.
inline constexpr long long kQssAmplitudeCap = 1LL << 24;

struct QSSResult {
  int n = 1;
  int n_required = 1;  // n from the rounding rule before the cap
  bool n_capped = false;
  double cost_bits = 0.0;  // (1/2) log n
  double mu = 0.0;
  double i2_bits = 0.0;
  DensityOperator sigma_opt;
  double fidelity = 0.0;            // F(tau^{RB^n}, rho^R (x) sigma^n) = overlap after Uhlmann
  double step2_distance = 0.0;      // sqrt(1 - F^2)
  double achieved_distance = 0.0;   // final state against rho^{RAB} (x) phi^{n-1}
  double distance_envelope = 0.0;   // sqrt(mu / (mu + n))
  double term_bound = 0.0;          // (1/2) log(mu + 1) + log(1/delta)
  std::vector<double> branch_probabilities;
  double probability_sum = 0.0;
  double junk_mass = 0.0;  // weight routed outside the target purification's support
  bool delta_met = false;
  bool bound_ok = false;
};

struct OptimalSigma {
  DensityOperator sigma;
  double i2_bits = 0.0;
  OptimizerReport report;
};
// argmin_sigma D_2(rho^{RB} || rho^R (x) sigma^B); B is the last register.
OptimalSigma qss_optimal_sigma(const DensityOperator& rho_rb, const OptimizerOptions& opts = {});

struct UhlmannResult {
  Matrix isometry;             // target local <- source local
  double overlap = 0.0;        // |<psi_t| (I (x) V) |psi_s>|
  double fidelity = 0.0;       // F of the shared marginals
  RegisterLayout source_local;
  RegisterLayout target_local;
  PureStateVector mapped;      // (I (x) V)|psi_s> on shared + target_local
};
// Isometry on the source's non-shared registers maximizing the overlap with
// psi_target, from the SVD of the cross-overlap between the local factors.
UhlmannResult uhlmann_isometry(const PureStateVector& psi_target, const PureStateVector& psi_source,
                               const std::vector<std::string>& shared_labels);

QSSResult qss_simulate(const QSSInstance& inst, const OptimizerOptions& opts = {});

struct QssCostReport {
  double simulated_cost = 0.0;
  double term_bound = 0.0;
  double ub00_rhs = 0.0;  // (1/2) I_2^{eps-delta} (feasible witness) + log(1/delta)
  double lb_estimate = 0.0;  // (1/2) of a feasible upper estimate of I_max^eps
  std::string ub00_witness;
  BoundReport term_check;
  QSSResult simulation;
};
QssCostReport qss_cost_report(const QSSInstance& inst, const OptimizerOptions& opts = {});

struct ChannelSpec {
  std::vector<Matrix> kraus;
  int input_dim = 0;
  int output_dim = 0;
  void validate() const;
  // (id_A (x) N)(phi) for phi on A (x) A~, output on A (x) B.
  DensityOperator apply_to_purification(const Vector& phi) const;
};
ChannelSpec identity_channel(int dim);
ChannelSpec replacement_channel(const Matrix& omega, int input_dim);

struct ChannelInfo {
  double value = 0.0;
  Vector phi;
  OptimizerReport report;
};
// max over pure phi^{AA~} of H_alpha(A) - H~_beta^up(A|B) at omega_phi.
ChannelInfo channel_alpha_beta_info(const ChannelSpec& channel, double alpha, double beta,
                                    const OptimizerOptions& opts = {});

// delta_n = f(eps / (2 (n+1)^{d^2-1})) / n + 4 (d^2-1) log(n+1) / n.
double reverse_shannon_delta_n(double alpha, double beta, double eps, int n, int d);
// 2 (d^2-1) log(n+1), the post-selection overhead.
double nu_postselect(int n, int d);

struct ReverseShannonBound {
  double rhs_bits_per_use = 0.0;
  double delta_n = 0.0;
  double info = 0.0;
  ChannelInfo detail;
};
ReverseShannonBound reverse_shannon_bound(const ChannelSpec& channel, double alpha, double beta, double eps,
                                          int n, const OptimizerOptions& opts = {});

}  // namespace csl
