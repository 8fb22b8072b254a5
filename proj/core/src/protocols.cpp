#include "csl/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "csl/convexsplit.hpp"
#include "csl/divergences.hpp"

namespace csl {

namespace {

// n from the rounding rule tolerates optimizer noise in mu of this size.
constexpr double kCeilSlack = 1e-6;
constexpr double kCheckTol = 1e-7;

Matrix as_matrix(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  // Row-major reading: entry (i, j) = v[i * cols + j].
  return Eigen::Map<const Matrix>(v.data(), cols, rows).transpose();
}

Vector as_vector(const Matrix& m) {
  Matrix t = m.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Matrix sqrt_factor_kron(const Matrix& r, const Matrix& s, int n) {
  std::vector<Matrix> f{sqrt_psd(r)};
  Matrix ss = sqrt_psd(s);
  for (int i = 0; i < n; ++i) f.push_back(ss);
  return kron_all(f);
}

Matrix gram(const std::vector<Matrix>& w) {
  const auto k = static_cast<Eigen::Index>(w.size());
  Matrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      g(i, j) = (w[i].conjugate().cwiseProduct(w[j])).sum();
      g(j, i) = std::conj(g(i, j));
    }
  }
  return g;
}

// Rows of F with F^dag F = g (coordinates of the vectors in an orthonormal
// basis of their span).
Matrix gram_coordinates(const Matrix& g) {
  EigenSystem es = eig_hermitian(g);
  const double cut = 1e-15 * std::max(1.0, es.values.size() ? es.values(0) : 0.0);
  int keep = 0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) keep += es.values(i) > cut ? 1 : 0;
  Matrix f(keep, g.cols());
  for (int i = 0; i < keep; ++i) f.row(i) = std::sqrt(es.values(i)) * es.vectors.col(i).adjoint();
  return f;
}

// 1/2 || sum_k c_k |w_k><w_k| + sum_j |z_j><z_j| ||_1 with the w_k stored as
// (shared x local) matrices and z_j = K_j (x) |0> (column j of K placed in
// local column 0). Everything is evaluated through the Gram matrix.
double trace_norm_half(const std::vector<Matrix>& w, const std::vector<double>& c, const Matrix& k) {
  const auto m = static_cast<Eigen::Index>(w.size());
  const Eigen::Index nk = k.cols();
  Matrix g(m + nk, m + nk);
  g.topLeftCorner(m, m) = gram(w);
  if (nk > 0) {
    Matrix w0(k.rows(), m);
    for (Eigen::Index i = 0; i < m; ++i) w0.col(i) = w[i].col(0);
    g.topRightCorner(m, nk) = w0.adjoint() * k;
    g.bottomLeftCorner(nk, m) = g.topRightCorner(m, nk).adjoint();
    g.bottomRightCorner(nk, nk) = k.adjoint() * k;
  }
  Matrix coords = gram_coordinates(g);
  RealVector coef = RealVector::Ones(m + nk);
  for (Eigen::Index i = 0; i < m; ++i) coef(i) = c[i];
  Matrix op = coords * coef.asDiagonal() * coords.adjoint();
  return 0.5 * eigenvalues_hermitian(op).cwiseAbs().sum();
}

long double qss_amplitudes(int r, int n, int d, int db) {
  return static_cast<long double>(r) * n * std::pow(static_cast<long double>(d), n) *
         std::pow(static_cast<long double>(db), n);
}

struct QssLayout {
  int r = 1;
  int da = 1;
  int db = 1;
  std::vector<std::string> r_labels;
  std::string a_label;  // empty when A is trivial
  std::string ap_label;
};

QssLayout qss_layout(const PureStateVector& psi) {
  const auto& l = psi.layout();
  QssLayout q;
  q.ap_label = l[l.size() - 1].label;
  q.db = l[l.size() - 1].dim;
  std::size_t r_end = l.size() - 1;
  if (l.size() >= 3) {
    q.a_label = l[l.size() - 2].label;
    q.da = l[l.size() - 2].dim;
    r_end = l.size() - 2;
  }
  for (std::size_t i = 0; i < r_end; ++i) {
    q.r_labels.push_back(l[i].label);
    q.r *= l[i].dim;
  }
  return q;
}

}  // namespace

void QSSInstance::validate() const {
  if (psi.layout().size() < 2) throw ContractViolation("QSS state needs R and A' registers");
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("eps must lie in (0,1)");
  if (!(delta > 0.0 && delta < eps)) throw ContractViolation("delta must lie in (0, eps)");
}

OptimalSigma qss_optimal_sigma(const DensityOperator& rho_rb, const OptimizerOptions& opts) {
  const auto& l = rho_rb.layout();
  if (l.size() < 2) throw ContractViolation("rho^{RB} needs at least two registers");
  std::vector<std::string> r;
  for (std::size_t i = 0; i + 1 < l.size(); ++i) r.push_back(l[i].label);
  InfoValue iv = mutual_info_alpha_detailed(rho_rb, 2.0, opts, r);
  OptimalSigma out;
  Matrix s = hermitian_part(iv.sigma);
  s /= s.trace().real();
  out.sigma = DensityOperator(s, RegisterLayout({l[l.size() - 1]}));
  out.i2_bits = iv.value;
  out.report = iv.report;
  return out;
}

UhlmannResult uhlmann_isometry(const PureStateVector& psi_target, const PureStateVector& psi_source,
                               const std::vector<std::string>& shared_labels) {
  RegisterLayout sh_t = psi_target.layout().reordered(shared_labels);
  RegisterLayout sh_s = psi_source.layout().reordered(shared_labels);
  if (sh_t.dims() != sh_s.dims()) throw ContractViolation("shared registers differ in dimension");
  UhlmannResult out;
  out.target_local = psi_target.layout().complement(shared_labels);
  out.source_local = psi_source.layout().complement(shared_labels);
  const int ds = sh_t.dim();
  const int dt = out.target_local.dim();
  const int dsl = out.source_local.dim();
  if (dt < dsl) throw ContractViolation("target local space smaller than source local space; pad the target");

  auto order = [&](const RegisterLayout& local) {
    auto o = shared_labels;
    for (const auto& lab : local.labels()) o.push_back(lab);
    return o;
  };
  Matrix mt = as_matrix(permute_registers(psi_target.amplitudes(), psi_target.layout(), order(out.target_local)),
                        ds, dt);
  Matrix ms = as_matrix(permute_registers(psi_source.amplitudes(), psi_source.layout(), order(out.source_local)),
                        ds, dsl);
  Matrix c = mt.adjoint() * ms;
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeFullV);
  out.isometry = svd.matrixU().conjugate() * svd.matrixV().transpose();
  Matrix mapped = ms * out.isometry.transpose();
  out.overlap = std::abs((mt.conjugate().cwiseProduct(mapped)).sum());
  out.mapped = PureStateVector(as_vector(mapped), sh_t.concat(out.target_local));
  out.fidelity = fidelity(reduced_state(psi_target, shared_labels), reduced_state(psi_source, shared_labels));
  return out;
}

QSSResult qss_simulate(const QSSInstance& inst, const OptimizerOptions& opts) {
  inst.validate();
  const QssLayout q = qss_layout(inst.psi);
  const int d = std::max(q.da, q.db);

  // psi on (R, A, B) with A padded to d and R merged.
  Vector psi_pad = Vector::Zero(static_cast<Eigen::Index>(q.r) * d * q.db);
  {
    std::vector<std::string> ord = q.r_labels;
    if (!q.a_label.empty()) ord.push_back(q.a_label);
    ord.push_back(q.ap_label);
    Vector v = permute_registers(inst.psi.amplitudes(), inst.psi.layout(), ord);
    for (int r = 0; r < q.r; ++r) {
      for (int a = 0; a < q.da; ++a) {
        for (int b = 0; b < q.db; ++b) psi_pad((r * d + a) * q.db + b) = v((r * q.da + a) * q.db + b);
      }
    }
  }
  PureStateVector psi(psi_pad, RegisterLayout({{"R", q.r}, {"A", d}, {"B", q.db}}));
  DensityOperator rho_rb = reduced_state(psi, {"R", "B"});

  QSSResult res;
  OptimalSigma opt = qss_optimal_sigma(rho_rb, opts);
  res.sigma_opt = opt.sigma;
  res.i2_bits = opt.i2_bits;
  const Matrix& sigma = opt.sigma.matrix();
  const Matrix rho_r = partial_trace(rho_rb.matrix(), rho_rb.layout(), {"R"});
  ExtendedReal q2v = q2(rho_rb.matrix(), kron(rho_r, sigma));
  if (q2v.is_infinite()) throw ContractViolation("optimal sigma does not support rho^B");
  res.mu = std::max(0.0, q2v.value() - 1.0);

  const double target_n = res.mu * (1.0 / (inst.delta * inst.delta) - 1.0);
  res.n_required = std::max(1, static_cast<int>(std::ceil(target_n - kCeilSlack)));
  int n = res.n_required;
  auto fits = [&](int m) {
    return qss_amplitudes(q.r, m, d, q.db) <= kQssAmplitudeCap &&
           static_cast<long double>(q.r) * std::pow(static_cast<long double>(q.db), m) <= kTauDimCap;
  };
  while (n > 1 && !fits(n)) --n;
  if (!fits(n)) throw ContractViolation("QSS instance exceeds the amplitude cap even at n = 1");
  res.n = n;
  res.n_capped = n < res.n_required;
  res.cost_bits = 0.5 * std::log2(static_cast<double>(n));
  res.term_bound = 0.5 * std::log2(res.mu + 1.0) + std::log2(1.0 / inst.delta);
  res.distance_envelope = std::sqrt(res.mu / (res.mu + n));

  // Shared side S = R B_1..B_n.
  ConvexSplitInstance cs;
  cs.rho_ra = rho_rb;
  cs.sigma_a = opt.sigma;
  cs.omega_r = DensityOperator(rho_r, RegisterLayout({{"R", q.r}}));
  cs.n = n;
  DensityOperator tau = build_tau(cs);
  const RegisterLayout s_layout = tau.layout();
  const Eigen::Index ds = tau.dim();
  Matrix rs = sqrt_factor_kron(rho_r, sigma, n);

  // (I (x) V)|source> = (G (x) I)|tau> on the target support, with
  // G = rs (rs tau rs)^{-1/2} rs; the remainder of the source marginal is
  // rs (I - Pi) rs and goes to extra L levels grouped with outcome 1.
  EigenSystem es = eig_hermitian(rs * tau.matrix() * rs);
  const double cut = rank_cutoff(es.values);
  RealVector inv = RealVector::Zero(ds);
  RealVector proj = RealVector::Zero(ds);
  double fid = 0.0;
  for (Eigen::Index i = 0; i < ds; ++i) {
    if (es.values(i) > cut) {
      inv(i) = 1.0 / std::sqrt(es.values(i));
      proj(i) = 1.0;
      fid += std::sqrt(es.values(i));
    }
  }
  Matrix g = rs * es.vectors * inv.asDiagonal() * es.vectors.adjoint() * rs;
  // Junk marginal rs (I - Pi) rs = K K^dag with K = rs U_kernel.
  const Eigen::Index kept = static_cast<Eigen::Index>(proj.sum());
  Matrix k = rs * es.vectors.rightCols(ds - kept);
  res.junk_mass = k.squaredNorm();
  res.fidelity = std::min(1.0, fid);
  res.step2_distance = std::sqrt(std::max(0.0, 1.0 - res.fidelity * res.fidelity));

  // Target rho^{R A_1 B_1} (x) phi^{A_x B_x}, stored as (S x A^n).
  EigenSystem ss = eig_hermitian(sigma);
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d) * q.db);
  for (int i = 0; i < q.db; ++i) {
    const double w = std::sqrt(std::max(0.0, ss.values(i)));
    for (int b = 0; b < q.db; ++b) phi(i * q.db + b) += w * ss.vectors(b, i);
  }
  Vector target = psi_pad;
  std::vector<Register> regs{{"R", q.r}, {"A_1", d}, {"B_1", q.db}};
  for (int x = 2; x <= n; ++x) {
    target = kron(target, phi);
    regs.push_back({"A_" + std::to_string(x), d});
    regs.push_back({"B_" + std::to_string(x), q.db});
  }
  std::vector<std::string> sa_order = s_layout.labels();
  for (int x = 1; x <= n; ++x) sa_order.push_back("A_" + std::to_string(x));
  target = permute_registers(target, RegisterLayout(regs), sa_order);
  const Eigen::Index dl = target.size() / ds;
  Matrix tm = as_matrix(target, ds, dl);

  // Branch x: Alice swaps A_x <-> A_1, Bob swaps B_x <-> B_1; on the ideal
  // branch this yields the target, so the real branch is (G_x (x) I)|target>.
  std::vector<Matrix> w{tm};
  std::vector<double> c{-1.0};
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int x = 1; x <= n; ++x) {
    Matrix gx = g;
    if (x > 1) {
      auto order = s_layout.labels();
      std::swap(order[1], order[static_cast<std::size_t>(x)]);
      gx = permute_registers(g, s_layout, order);
    }
    w.push_back(scale * (gx * tm));
    c.push_back(1.0);
    res.branch_probabilities.push_back(w.back().squaredNorm());
  }
  res.branch_probabilities[0] += res.junk_mass;
  res.probability_sum = 0.0;
  for (double p : res.branch_probabilities) res.probability_sum += p;

  res.achieved_distance = std::min(1.0, trace_norm_half(w, c, k));
  res.delta_met = res.achieved_distance <= inst.delta + kCheckTol;
  res.bound_ok = res.achieved_distance <= res.distance_envelope + kCheckTol &&
                 res.step2_distance <= res.distance_envelope + kCheckTol &&
                 res.cost_bits <= res.term_bound + kCheckTol;
  return res;
}

QssCostReport qss_cost_report(const QSSInstance& inst, const OptimizerOptions& opts) {
  QssCostReport out;
  out.simulation = qss_simulate(inst, opts);
  out.simulated_cost = out.simulation.cost_bits;
  out.term_bound = out.simulation.term_bound;
  out.term_check = exact_upper_bound("term", out.simulated_cost, out.term_bound, kCheckTol);

  const QssLayout q = qss_layout(inst.psi);
  std::vector<std::string> keep = q.r_labels;
  keep.push_back(q.ap_label);
  DensityOperator rho_rap = reduced_state(inst.psi, keep);

  const double radius = inst.eps - inst.delta;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cand : imax_smoothing_candidates(rho_rap, q.r_labels)) {
    if (cand.distance > radius) continue;
    double v = mutual_info_alpha(cand.state, 2.0, opts, q.r_labels);
    if (v < best) {
      best = v;
      out.ub00_witness = cand.label;
    }
  }
  out.ub00_rhs = 0.5 * best + std::log2(1.0 / inst.delta);
  out.lb_estimate = 0.5 * imax_smoothed_upper(rho_rap, inst.eps, {q.ap_label}).value_bits;
  return out;
}

void ChannelSpec::validate() const {
  if (kraus.empty()) throw ContractViolation("channel needs at least one Kraus operator");
  Matrix acc = Matrix::Zero(input_dim, input_dim);
  for (const auto& k : kraus) {
    if (k.rows() != output_dim || k.cols() != input_dim) throw ContractViolation("Kraus operator shape mismatch");
    acc += k.adjoint() * k;
  }
  if ((acc - Matrix::Identity(input_dim, input_dim)).cwiseAbs().maxCoeff() > 1e-10) {
    throw ContractViolation("Kraus operators are not trace preserving");
  }
}

DensityOperator ChannelSpec::apply_to_purification(const Vector& phi) const {
  if (phi.size() != static_cast<Eigen::Index>(input_dim) * input_dim) {
    throw ContractViolation("purification has the wrong dimension");
  }
  Matrix m = as_matrix(phi, input_dim, input_dim);  // A x A~
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(input_dim) * output_dim,
                            static_cast<Eigen::Index>(input_dim) * output_dim);
  for (const auto& k : kraus) {
    Vector v = as_vector(m * k.transpose());  // (I (x) K)|phi>
    out += v * v.adjoint();
  }
  Matrix h = hermitian_part(out);
  h /= h.trace().real();
  return DensityOperator(h, RegisterLayout({{"A", input_dim}, {"B", output_dim}}));
}

ChannelSpec identity_channel(int dim) {
  return ChannelSpec{{Matrix::Identity(dim, dim)}, dim, dim};
}

ChannelSpec replacement_channel(const Matrix& omega, int input_dim) {
  // K_{ij} = sqrt(w_i) |w_i><j|
  EigenSystem es = eig_hermitian(omega);
  ChannelSpec ch;
  ch.input_dim = input_dim;
  ch.output_dim = static_cast<int>(omega.rows());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) <= 0.0) continue;
    for (int j = 0; j < input_dim; ++j) {
      Matrix k = Matrix::Zero(ch.output_dim, input_dim);
      k.col(j) = std::sqrt(es.values(i)) * es.vectors.col(i);
      ch.kraus.push_back(k);
    }
  }
  return ch;
}

ChannelInfo channel_alpha_beta_info(const ChannelSpec& channel, double alpha, double beta,
                                    const OptimizerOptions& opts) {
  channel.validate();
  const bool von_neumann = alpha == 1.0 && beta == 1.0;
  if (!von_neumann && !(alpha > 0.0 && alpha < 1.0 && beta > 1.0)) {
    throw ContractViolation("need alpha in (0,1) and beta > 1, or alpha = beta = 1");
  }
  // D_beta(w || I (x) s) is convex in s, so the warm starts of the inner
  // minimization already reach its optimum.
  OptimizerOptions inner = opts;
  inner.restarts = 0;
  auto objective = [&](const Vector& phi) {
    DensityOperator w = channel.apply_to_purification(phi);
    Matrix wa = partial_trace(w.matrix(), w.layout(), {"A"});
    if (von_neumann) {
      Matrix wb = partial_trace(w.matrix(), w.layout(), {"B"});
      return von_neumann_entropy(wa) + von_neumann_entropy(wb) - von_neumann_entropy(w.matrix());
    }
    return renyi_entropy(wa, alpha) - conditional_renyi_up(w, beta, inner, {"A"});
  };
  const int d = channel.input_dim;
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) phi(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Vector> warm{phi};
  ChannelInfo out;
  out.report = maximize_over_pure(objective, d * d, opts, warm);
  out.value = out.report.value;
  out.phi = out.report.argvec;
  return out;
}

double reverse_shannon_delta_n(double alpha, double beta, double eps, int n, int d) {
  if (n < 1 || d < 1) throw ContractViolation("n and d must be positive");
  const double k = static_cast<double>(d) * d - 1.0;
  const double np1 = n + 1.0;
  // eps / (2 (n+1)^k) underflows for large n; f only needs its log.
  const double log_eps_n = std::log2(eps) - 1.0 - k * std::log2(np1);
  const double f = (2.0 / (beta - 1.0) + 1.0 / (1.0 - alpha)) * (-std::log2(kUniversalC) - 2.0 * log_eps_n);
  return f / n + 4.0 * k * std::log2(np1) / n;
}

double nu_postselect(int n, int d) { return 2.0 * (static_cast<double>(d) * d - 1.0) * std::log2(n + 1.0); }

ReverseShannonBound reverse_shannon_bound(const ChannelSpec& channel, double alpha, double beta, double eps,
                                          int n, const OptimizerOptions& opts) {
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("eps must lie in (0,1)");
  ReverseShannonBound out;
  out.detail = channel_alpha_beta_info(channel, alpha, beta, opts);
  out.info = out.detail.value;
  out.delta_n = reverse_shannon_delta_n(alpha, beta, eps, n, channel.input_dim);
  out.rhs_bits_per_use = out.info + out.delta_n;
  return out;
}

}  // namespace csl
