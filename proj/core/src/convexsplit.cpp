#include "csl/convexsplit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace csl {

namespace {

constexpr double kBoundTol = 1e-8;
constexpr double kWeightTol = 1e-12;
const std::vector<double> kDefaultLyGrid{0.25, 0.5, 0.75, 1.0};

std::string slot_label(const std::string& a, int x) { return a + "_" + std::to_string(x); }

double real_trace_product(const Matrix& x, const Matrix& y) {
  return (x.cwiseProduct(y.transpose())).sum().real();
}

// tau against a product reference F_0 (x) F_1 (x) ... where slot 0 is the
// R block and slot x is A_x.
struct ProductReference {
  const Matrix& tau;
  const RegisterLayout& layout;
  std::vector<std::vector<std::string>> slots;
  std::vector<Matrix> factors;

  Matrix marginal(std::size_t i) const { return partial_trace(tau, layout, slots[i]); }

  bool supported() const {
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (!support_contained(marginal(i), factors[i])) return false;
    }
    return true;
  }

  ExtendedReal q2() const {
    if (!supported()) return ExtendedReal::infinity();
    std::vector<Matrix> inv;
    inv.reserve(factors.size());
    for (const auto& f : factors) inv.push_back(power_on_support(f, -0.5));
    Matrix x = kron_apply_right(tau, inv);
    return real_trace_product(x, x);
  }

  // Spectral evaluation with 0 log 0 = 0; log of the product splits over
  // the marginals.
  ExtendedReal umegaki() const {
    if (!supported()) return ExtendedReal::infinity();
    double cross = 0.0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      cross += (marginal(i) * log2_on_support(factors[i])).trace().real();
    }
    return -renyi_entropy(tau, 1.0) - cross;
  }

  double trace_distance() const {
    Matrix k = kron_all(factors);
    return 0.5 * eigenvalues_hermitian(tau - k).cwiseAbs().sum();
  }

  double fidelity() const {
    std::vector<Matrix> roots;
    roots.reserve(factors.size());
    for (const auto& f : factors) roots.push_back(sqrt_psd(f));
    Matrix m = kron_apply_right(tau, roots);
    Matrix sandwich = kron_apply_right(m.adjoint(), roots).adjoint();
    RealVector ev = eigenvalues_hermitian(sandwich);
    double f = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) f += std::sqrt(std::max(0.0, ev(i)));
    return std::clamp(f, 0.0, 1.0);
  }
};

ProductReference make_reference(const ConvexSplitInstance& inst, const Matrix& tau, const RegisterLayout& layout,
                                const Matrix& r_factor) {
  ProductReference ref{tau, layout, {}, {}};
  ref.slots.push_back(inst.r_layout().labels());
  ref.factors.push_back(r_factor);
  for (int x = 1; x <= inst.n; ++x) {
    ref.slots.push_back({slot_label(inst.a_register().label, x)});
    ref.factors.push_back(inst.sigma_a.matrix());
  }
  return ref;
}

Matrix marginal_r(const DensityOperator& rho_ra, const RegisterLayout& r) {
  return partial_trace(rho_ra.matrix(), rho_ra.layout(), r.labels());
}

double finite_or_inf(ExtendedReal v) { return v.value(); }

}  // namespace

void ConvexSplitInstance::validate() const {
  if (n < 1) throw ContractViolation("n must be a positive integer");
  if (rho_ra.layout().size() < 2) throw ContractViolation("rho_RA needs an R and an A register");
  if (sigma_a.dim() != a_register().dim) throw ContractViolation("sigma dimension differs from |A|");
  if (omega_r.dim() != r_layout().dim()) throw ContractViolation("omega dimension differs from |R|");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n) throw ContractViolation("weights must have length n");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ContractViolation("weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTol) throw ContractViolation("weights must sum to 1");
  }
}

std::vector<double> ConvexSplitInstance::resolved_weights() const {
  if (weights.empty()) return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
  return weights;
}

double ConvexSplitInstance::t() const {
  auto w = resolved_weights();
  return std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
}

RegisterLayout ConvexSplitInstance::r_layout() const {
  auto regs = rho_ra.layout().registers();
  regs.pop_back();
  return RegisterLayout(regs);
}

const Register& ConvexSplitInstance::a_register() const {
  return rho_ra.layout()[rho_ra.layout().size() - 1];
}

ConvexSplitInstance pinned_instance(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n) {
  ConvexSplitInstance inst;
  inst.rho_ra = rho_ra;
  inst.sigma_a = sigma_a;
  inst.n = n;
  RegisterLayout r = inst.r_layout();
  inst.omega_r = DensityOperator(marginal_r(rho_ra, r), r);
  inst.validate();
  return inst;
}

RegisterLayout tau_layout(const ConvexSplitInstance& inst) {
  std::vector<Register> regs = inst.r_layout().registers();
  const Register& a = inst.a_register();
  for (int x = 1; x <= inst.n; ++x) regs.push_back({slot_label(a.label, x), a.dim});
  return RegisterLayout(regs);
}

DensityOperator build_tau(const ConvexSplitInstance& inst) {
  inst.validate();
  const RegisterLayout target = tau_layout(inst);
  const long dim_r = inst.r_layout().dim();
  const long dim_a = inst.a_register().dim;
  long total = dim_r;
  for (int x = 0; x < inst.n; ++x) {
    total *= dim_a;
    if (total > kTauDimCap) throw ContractViolation("tau exceeds the dense dimension cap");
  }
  const auto w = inst.resolved_weights();
  const std::string& a = inst.a_register().label;

  // rho^{R A_x} (x) sigma^{A_y, y != x} in the order R, A_x, others, then permuted.
  Matrix tau = Matrix::Zero(total, total);
  for (int x = 1; x <= inst.n; ++x) {
    if (w[x - 1] == 0.0) continue;
    std::vector<Register> regs = inst.r_layout().registers();
    regs.push_back({slot_label(a, x), static_cast<int>(dim_a)});
    std::vector<Matrix> factors{inst.rho_ra.matrix()};
    for (int y = 1; y <= inst.n; ++y) {
      if (y == x) continue;
      regs.push_back({slot_label(a, y), static_cast<int>(dim_a)});
      factors.push_back(inst.sigma_a.matrix());
    }
    Matrix term = kron_all(factors);
    tau += w[x - 1] * permute_registers(term, RegisterLayout(regs), target.labels());
  }
  return DensityOperator::trusted(hermitian_part(tau), target);
}

MuQuantities mu_quantities(const DensityOperator& rho_ra, const DensityOperator& sigma_a) {
  ConvexSplitInstance inst = pinned_instance(rho_ra, sigma_a, 1);
  Matrix ref = kron(inst.omega_r.matrix(), sigma_a.matrix());
  MuQuantities out;
  ExtendedReal q = q2(rho_ra.matrix(), ref);
  ExtendedReal dm = d_max(rho_ra.matrix(), ref);
  out.mu = q.is_infinite() ? std::numeric_limits<double>::infinity() : std::max(0.0, q.value() - 1.0);
  out.mu_max = dm.is_infinite() ? std::numeric_limits<double>::infinity()
                                : std::max(0.0, std::exp2(dm.value()) - 1.0);
  return out;
}

double nu_objective(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n, const Matrix& omega) {
  ConvexSplitInstance inst = pinned_instance(rho_ra, sigma_a, n);
  const Matrix& rr = inst.omega_r.matrix();
  ExtendedReal q_r = q2(rr, omega);
  ExtendedReal q_ra = q2(rho_ra.matrix(), kron(omega, sigma_a.matrix()));
  if (q_ra.is_infinite() || (n > 1 && q_r.is_infinite())) return std::numeric_limits<double>::infinity();
  double value = q_ra.value() / n;
  if (n > 1) value += (n - 1.0) / n * q_r.value();
  return value;
}

NuResult nu_n(const DensityOperator& rho_ra, const DensityOperator& sigma_a, int n, const OptimizerOptions& opts) {
  ConvexSplitInstance inst = pinned_instance(rho_ra, sigma_a, n);
  const Matrix rr = inst.omega_r.matrix();
  const Matrix ra = rho_ra.matrix();
  const Matrix sig_inv = power_on_support(sigma_a.matrix(), -0.5);
  NuResult out;

  // rho^A outside supp sigma makes every candidate infinite.
  Matrix rho_a = partial_trace(ra, rho_ra.layout(), {inst.a_register().label});
  if (!support_contained(rho_a, sigma_a.matrix())) {
    out.value = std::numeric_limits<double>::infinity();
    out.omega = rr;
    out.report.value = out.value;
    out.report.failure = "rho^A not supported on sigma";
    return out;
  }

  auto objective = [&](const Matrix& omega) {
    if (!support_contained(rr, omega)) return std::numeric_limits<double>::infinity();
    Matrix w_inv = power_on_support(omega, -0.5);
    Matrix xr = rr * w_inv;
    double value = 0.0;
    if (n > 1) value += (n - 1.0) / n * real_trace_product(xr, xr);
    Matrix x = ra * kron(w_inv, sig_inv);
    value += real_trace_product(x, x) / n;
    return value;
  };
  std::vector<Matrix> warm{rr};
  out.report = minimize_over_states(objective, rr.rows(), opts, warm);
  out.value = out.report.value;
  out.omega = out.report.argopt;
  return out;
}

int spectrum_cardinality(const Matrix& h, double rel_tol) {
  RealVector ev = eigenvalues_hermitian(h);
  if (ev.size() == 0) return 0;
  const double gap = rel_tol * std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  int clusters = 1;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (ev(i - 1) - ev(i) > gap) ++clusters;
  }
  return clusters;
}

SplitReport split_equality_check(const ConvexSplitInstance& inst) {
  inst.validate();
  DensityOperator tau = build_tau(inst);
  SplitReport rep;
  rep.n = inst.n;
  rep.t = inst.t();
  ProductReference ref = make_reference(inst, tau.matrix(), tau.layout(), inst.omega_r.matrix());
  rep.q2_lhs = ref.q2();

  const Matrix rr = marginal_r(inst.rho_ra, inst.r_layout());
  ExtendedReal q_r = q2(rr, inst.omega_r.matrix());
  ExtendedReal q_ra = q2(inst.rho_ra.matrix(), kron(inst.omega_r.matrix(), inst.sigma_a.matrix()));
  const bool r_term = rep.t < 1.0;
  if (q_ra.is_infinite() || (r_term && q_r.is_infinite())) {
    rep.q2_rhs = ExtendedReal::infinity();
  } else {
    rep.q2_rhs = rep.t * q_ra.value() + (r_term ? (1.0 - rep.t) * q_r.value() : 0.0);
  }

  if (rep.q2_lhs.is_infinite() != rep.q2_rhs.is_infinite()) {
    rep.residual = std::numeric_limits<double>::infinity();
    rep.relative_residual = rep.residual;
  } else if (rep.q2_lhs.is_finite()) {
    rep.residual = std::abs(rep.q2_lhs.value() - rep.q2_rhs.value());
    rep.relative_residual = rep.residual / std::max(1.0, rep.q2_lhs.value());
  }
  auto mu = mu_quantities(inst.rho_ra, inst.sigma_a);
  rep.mu = mu.mu;
  rep.mu_max = mu.mu_max;
  return rep;
}

namespace {

LyComparison ly_from_lhs(const ConvexSplitInstance& pinned, double s, double lhs, double mu) {
  if (!(s > 0.0 && s <= 1.0)) throw ContractViolation("s must lie in (0,1]");
  const Matrix prod = kron(pinned.omega_r.matrix(), pinned.sigma_a.matrix());
  const double n = pinned.n;
  LyComparison out;
  out.s = s;
  out.ell = spectrum_cardinality(prod);
  out.lhs = lhs;
  out.a_s = s * d_alpha(pinned.rho_ra.matrix(), prod, 1.0 + s).value();
  out.a_1 = d_alpha(pinned.rho_ra.matrix(), prod, 2.0).value();
  out.ly_rhs = std::pow(out.ell, s) / (s * std::pow(n, s)) * std::exp2(out.a_s);
  out.equality_rhs = std::log2(1.0 + mu / n);
  // v in the crossover condition is read as ell.
  out.crossover_log_n = s < 1.0 ? (out.a_1 - out.a_s - s * std::log2(out.ell) - std::log2(1.0 / s)) / (1.0 - s)
                                : std::numeric_limits<double>::quiet_NaN();
  out.equality_tighter = out.equality_rhs < out.ly_rhs;
  out.report = exact_upper_bound("ly2024", out.lhs, std::min(out.ly_rhs, out.equality_rhs), kBoundTol);
  return out;
}

}  // namespace

LyComparison ly2024_compare(const ConvexSplitInstance& inst, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ContractViolation("s must lie in (0,1]");
  ConvexSplitInstance pinned = pinned_instance(inst.rho_ra, inst.sigma_a, inst.n);
  const double mu = mu_quantities(inst.rho_ra, inst.sigma_a).mu;
  // Past the dense cap only the two right-hand sides are available.
  const double dim = pinned.omega_r.dim() * std::pow(static_cast<double>(pinned.sigma_a.dim()), pinned.n);
  if (dim > static_cast<double>(kTauDimCap)) {
    LyComparison out = ly_from_lhs(pinned, s, std::numeric_limits<double>::quiet_NaN(), mu);
    out.report.status = Certification::Inconclusive;
    out.report.note = "tau above dense cap; lhs not evaluated";
    return out;
  }
  DensityOperator tau = build_tau(pinned);
  ProductReference ref = make_reference(pinned, tau.matrix(), tau.layout(), pinned.omega_r.matrix());
  return ly_from_lhs(pinned, s, finite_or_inf(ref.umegaki()), mu);
}

SplitReport bounds_report(const ConvexSplitInstance& inst, const OptimizerOptions& opts,
                          std::span<const double> ly_s) {
  SplitReport rep = split_equality_check(inst);
  ConvexSplitInstance pinned = pinned_instance(inst.rho_ra, inst.sigma_a, inst.n);
  DensityOperator tau = build_tau(pinned);
  ProductReference ref = make_reference(pinned, tau.matrix(), tau.layout(), pinned.omega_r.matrix());
  const double n = inst.n;
  const double mu = rep.mu;
  const double mu_max = rep.mu_max;

  rep.d_umegaki = finite_or_inf(ref.umegaki());
  ExtendedReal q = ref.q2();
  rep.d2 = q.is_infinite() ? q.value() : std::log2(q.value());
  rep.trace_distance = ref.trace_distance();
  const double f = ref.fidelity();
  rep.p_squared = std::max(0.0, 1.0 - f * f);

  NuResult nu = nu_n(inst.rho_ra, inst.sigma_a, inst.n, opts);
  rep.nu_n = nu.value;

  auto add = [&](BoundReport b) { rep.bounds.emplace(b.name, std::move(b)); };
  add(exact_upper_bound("gmain0", rep.d_umegaki, std::log2(1.0 + mu_max / n), kBoundTol));
  add(exact_upper_bound("pinsker", rep.trace_distance, std::sqrt(mu_max / (2.0 * n)), kBoundTol));
  add(exact_upper_bound("split7", rep.p_squared, mu_max / (n + mu_max), kBoundTol));
  add(exact_equality("gmain8", rep.d2, std::log2(1.0 + mu / n), 1e-9));
  add(exact_upper_bound("imp", rep.d_umegaki, std::log2(1.0 + mu / n), kBoundTol));
  // nu_n here is an upper estimate of a minimum; a failure against it is
  // still a genuine violation.
  add(exact_upper_bound("split9", rep.p_squared, 1.0 - 1.0 / nu.value, kBoundTol));
  add(exact_upper_bound("nu2", nu.value, 1.0 + mu / n, 1e-7));
  add(exact_upper_bound("pmu0", rep.p_squared, mu / (mu + n), kBoundTol));
  add(exact_upper_bound("quarter_sqrt", rep.trace_distance, 0.25 * std::sqrt(mu / n), kBoundTol));
  add(exact_upper_bound("half_sqrt", rep.trace_distance, 0.5 * std::sqrt(mu / n), kBoundTol));

  std::span<const double> grid = ly_s.empty() ? std::span<const double>(kDefaultLyGrid) : ly_s;
  if (std::isfinite(mu)) {
    for (double s : grid) rep.ly2024.push_back(ly_from_lhs(pinned, s, rep.d_umegaki, mu));
  }
  return rep;
}

}  // namespace csl
