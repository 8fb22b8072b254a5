#include "csl/infomeasures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix marginal_a(const Bipartite& bp) {
  return partial_trace(bp.rho, bp.a.concat(bp.b), bp.a.labels());
}

Matrix marginal_b(const Bipartite& bp) {
  return partial_trace(bp.rho, bp.a.concat(bp.b), bp.b.labels());
}

std::vector<std::string> resolve_a(const DensityOperator& rho, const std::vector<std::string>& a) {
  if (!a.empty()) return a;
  if (rho.layout().size() < 2) throw ContractViolation("bipartite state needs at least two registers");
  return {rho.layout()[0].label};
}

}  // namespace

std::string_view certification_name(Certification c) {
  switch (c) {
    case Certification::ExactTwoSided: return "exact_two_sided";
    case Certification::OneSidedCertified: return "one_sided_certified";
    case Certification::Inconclusive: return "inconclusive";
    case Certification::Violated: return "violated";
  }
  return "unknown";
}

BoundReport exact_upper_bound(std::string name, double lhs, double rhs, double tol) {
  BoundReport b{std::move(name), lhs, rhs, rhs - lhs, Certification::ExactTwoSided, {}, tol};
  if (std::isinf(rhs) && rhs > 0) b.slack = kInf;
  if (!(b.slack >= -tol)) b.status = Certification::Violated;
  return b;
}

BoundReport one_sided_upper_bound(std::string name, double lhs, double rhs, double tol) {
  BoundReport b{std::move(name), lhs, rhs, rhs - lhs, Certification::OneSidedCertified,
                "lhs is a feasible-point estimate", tol};
  if (std::isinf(rhs) && rhs > 0) b.slack = kInf;
  if (!(b.slack >= -tol)) b.status = Certification::Inconclusive;
  return b;
}

BoundReport exact_equality(std::string name, double lhs, double rhs, double tol) {
  double diff = std::abs(lhs - rhs);
  if (lhs == rhs) diff = 0.0;
  BoundReport b{std::move(name), lhs, rhs, -diff, Certification::ExactTwoSided, "equality", tol};
  if (!(diff <= tol)) b.status = Certification::Violated;
  return b;
}

// p is taken as an exact distribution: every positive entry counts. For
// alpha < 1 even 1e-10 entries move the value, so no cutoff here.
double renyi_entropy_spectrum(std::span<const double> p, double alpha) {
  if (alpha < 0.0) throw ContractViolation("renyi_entropy: alpha must be >= 0");
  double top = 0.0;
  for (double x : p) top = std::max(top, x);
  if (alpha == 0.0) {
    double r = 0.0;
    for (double x : p) r += x > 0.0 ? 1.0 : 0.0;
    return std::log2(r);
  }
  if (alpha == 1.0) {
    double h = 0.0;
    for (double x : p) {
      if (x > 0.0) h -= x * std::log2(x);
    }
    return h;
  }
  if (std::isinf(alpha)) return -std::log2(top);
  double s = 0.0;
  for (double x : p) {
    if (x > 0.0) s += std::pow(x, alpha);
  }
  return std::log2(s) / (1.0 - alpha);
}

// Eigenvalue noise is cleared here, before the spectrum formula sees it.
double renyi_entropy(const Matrix& rho, double alpha) {
  RealVector ev = eigenvalues_hermitian(rho).cwiseMax(0.0);
  const double cut = tol::kRank * ev.maxCoeff();
  for (auto& x : ev) x = x > cut ? x : 0.0;
  return renyi_entropy_spectrum(std::span<const double>(ev.data(), ev.size()), alpha);
}

double von_neumann_entropy(const Matrix& rho) { return renyi_entropy(rho, 1.0); }

InfoValue mutual_info_alpha_detailed(const DensityOperator& rho_ab, AlphaOrder alpha,
                                     const OptimizerOptions& opts,
                                     const std::vector<std::string>& a_labels) {
  Bipartite bp = split_bipartite(rho_ab, a_labels);
  const Matrix ra = marginal_a(bp);
  const Matrix rb = marginal_b(bp);
  InfoValue out;
  if (alpha.is_one()) {
    // The minimizer is rho^B.
    out.sigma = rb;
    out.value = d_umegaki(bp.rho, kron(ra, rb)).value();
    out.report.converged = true;
    return out;
  }
  if (alpha.is_infinite()) {
    DominationResult d = solve_domination(ra, bp.rho, bp.dim_b(), opts.tol);
    out.sigma = d.sigma;
    out.value = std::log2(d.min_trace);
    out.report.converged = d.converged;
    out.report.value = out.value;
    out.report.argopt = d.sigma;
    return out;
  }
  if (alpha.is_zero()) {
    // -log max_sigma Tr[sigma K] with K = Tr_A[(rho^A (x) I) Pi_rho].
    Matrix pi = support_projector(bp.rho);
    Matrix k = partial_trace(kron(ra, Matrix::Identity(bp.dim_b(), bp.dim_b())) * pi,
                             bp.a.concat(bp.b), bp.b.labels());
    EigenSystem es = eig_hermitian(hermitian_part(k));
    out.sigma = es.vectors.col(0) * es.vectors.col(0).adjoint();
    out.value = -std::log2(es.values(0));
    out.report.converged = true;
    return out;
  }
  auto objective = [&](const Matrix& s) { return d_alpha(bp.rho, kron(ra, s), alpha).value(); };
  const int db = bp.dim_b();
  std::vector<Matrix> warm{rb, Matrix::Identity(db, db) / static_cast<double>(db)};
  out.report = minimize_over_states(objective, db, opts, warm);
  out.value = out.report.value;
  out.sigma = out.report.argopt;
  return out;
}

double mutual_info_alpha(const DensityOperator& rho_ab, AlphaOrder alpha,
                         const OptimizerOptions& opts, const std::vector<std::string>& a_labels) {
  return mutual_info_alpha_detailed(rho_ab, alpha, opts, a_labels).value;
}

InfoValue conditional_renyi_up_detailed(const DensityOperator& rho_ab, AlphaOrder beta,
                                        const OptimizerOptions& opts,
                                        const std::vector<std::string>& a_labels) {
  if (beta.value() < 0.5) throw ContractViolation("conditional_renyi_up needs beta >= 1/2");
  Bipartite bp = split_bipartite(rho_ab, a_labels);
  const Matrix rb = marginal_b(bp);
  InfoValue out;
  if (beta.is_one()) {
    out.sigma = rb;
    out.value = von_neumann_entropy(bp.rho) - von_neumann_entropy(rb);
    out.report.converged = true;
    return out;
  }
  if (beta.is_infinite()) {
    DominationResult d = h_min_conditional_detailed(rho_ab, a_labels);
    out.sigma = d.sigma;
    out.value = -std::log2(d.min_trace);
    out.report.converged = d.converged;
    out.report.value = out.value;
    out.report.argopt = d.sigma;
    return out;
  }
  const Matrix ia = Matrix::Identity(bp.dim_a(), bp.dim_a());
  auto objective = [&](const Matrix& s) { return d_alpha(bp.rho, kron(ia, s), beta).value(); };
  const int db = bp.dim_b();
  std::vector<Matrix> warm{rb, Matrix::Identity(db, db) / static_cast<double>(db)};
  out.report = minimize_over_states(objective, db, opts, warm);
  out.value = -out.report.value;
  out.sigma = out.report.argopt;
  return out;
}

double conditional_renyi_up(const DensityOperator& rho_ab, AlphaOrder beta,
                            const OptimizerOptions& opts, const std::vector<std::string>& a_labels) {
  return conditional_renyi_up_detailed(rho_ab, beta, opts, a_labels).value;
}

DominationResult h_min_conditional_detailed(const DensityOperator& rho_ab,
                                            const std::vector<std::string>& a_labels) {
  Bipartite bp = split_bipartite(rho_ab, a_labels);
  return solve_domination(Matrix::Identity(bp.dim_a(), bp.dim_a()), bp.rho, bp.dim_b());
}

double h_min_conditional(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels) {
  return -std::log2(h_min_conditional_detailed(rho_ab, a_labels).min_trace);
}

double smallest_nonzero_eigenvalue(const Matrix& psd) {
  RealVector ev = eigenvalues_hermitian(psd);
  double cut = rank_cutoff(ev);
  double best = kInf;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) best = std::min(best, ev(i));
  }
  return best;
}

BoundReport imax_bound_lemma(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels) {
  auto a = resolve_a(rho_ab, a_labels);
  ImaxResult im = imax_sdp(rho_ab, a);
  Matrix ra = partial_trace(rho_ab.matrix(), rho_ab.layout(), a);
  double rhs = -std::log2(smallest_nonzero_eigenvalue(ra)) - h_min_conditional(rho_ab, a);
  BoundReport b = exact_upper_bound("imax_lemma", im.value_bits, rhs, 1e-7);
  if (!im.converged) b.note = "imax solver did not certify its gap";
  return b;
}

double universal_f(double alpha, double beta, double eps) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 1.0) || !(eps > 0.0 && eps < 1.0)) {
    throw ContractViolation("universal_f needs alpha in (0,1), beta > 1, eps in (0,1)");
  }
  return (2.0 / (beta - 1.0) + 1.0 / (1.0 - alpha)) * std::log2(1.0 / (kUniversalC * eps * eps));
}

double universal_rhs(const DensityOperator& rho_ab, double alpha, double beta, double eps,
                     const OptimizerOptions& opts, const std::vector<std::string>& a_labels) {
  auto a = resolve_a(rho_ab, a_labels);
  double f = universal_f(alpha, beta, eps);
  Matrix ra = partial_trace(rho_ab.matrix(), rho_ab.layout(), a);
  return renyi_entropy(ra, alpha) - conditional_renyi_up(rho_ab, beta, opts, a) + f;
}

std::vector<ImaxCandidate> imax_smoothing_candidates(const DensityOperator& rho_ab,
                                                     const std::vector<std::string>& a_labels) {
  auto a = resolve_a(rho_ab, a_labels);
  std::vector<ImaxCandidate> out;
  out.push_back({rho_ab, 0.0, imax_sdp(rho_ab, a).value_bits, "rho"});
  Matrix ra = partial_trace(rho_ab.matrix(), rho_ab.layout(), a);
  EigenSystem es = eig_hermitian(ra);
  const auto da = ra.rows();
  double tail = es.values.sum();
  Matrix proj = Matrix::Zero(da, da);
  for (Eigen::Index m = 1; m < da; ++m) {
    proj += es.vectors.col(m - 1) * es.vectors.col(m - 1).adjoint();
    tail -= es.values(m - 1);
    if (!(tail > 0.0) || tail >= 0.5) continue;
    Matrix lift = embed_local(proj, rho_ab.layout(), a);
    Matrix w = lift * rho_ab.matrix() * lift;
    double tr = w.trace().real();
    if (!(tr > 0.0)) continue;
    DensityOperator state(hermitian_part(w / tr), rho_ab.layout());
    out.push_back({state, trace_distance(state.matrix(), rho_ab.matrix()),
                   imax_sdp(state, a).value_bits, "truncation m=" + std::to_string(m)});
  }
  return out;
}

SmoothedEstimate best_imax_candidate(std::span<const ImaxCandidate> candidates, double eps) {
  const ImaxCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (c.distance > eps) continue;
    if (!best || c.imax_bits < best->imax_bits) best = &c;
  }
  if (!best) throw ContractViolation("no smoothing candidate inside the ball");
  return {best->imax_bits, SmoothingKind::UpperFeasible, best->state, best->distance, best->label};
}

SmoothedEstimate imax_smoothed_upper(const DensityOperator& rho_ab, double eps,
                                     const std::vector<std::string>& a_labels) {
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("eps must lie in (0,1)");
  auto cands = imax_smoothing_candidates(rho_ab, a_labels);
  return best_imax_candidate(cands, eps);
}

SmoothedEstimate dmax_smoothed_upper(const DensityOperator& rho, const DensityOperator& sigma,
                                     double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("eps must lie in (0,1)");
  const Matrix& r = rho.matrix();
  const Matrix& s = sigma.matrix();
  SmoothedEstimate best{d_max(r, s).value(), SmoothingKind::UpperFeasible, rho, 0.0, "rho"};

  auto consider = [&](const Matrix& m, const std::string& label) {
    double tr = m.trace().real();
    if (!(tr > 0.0)) return;
    Matrix w = hermitian_part(m / tr);
    double dist = trace_distance(w, r);
    if (dist > eps) return;
    double v = d_max(w, s).value();
    if (v < best.value_bits) {
      best = {v, SmoothingKind::UpperFeasible, DensityOperator(w, rho.layout()), dist, label};
    }
  };

  // Restrict to supp(sigma) first when rho leaks out of it.
  Matrix ps = support_projector(s);
  Matrix base = support_contained(r, s) ? r : Matrix(ps * r * ps);
  consider(base, "support-projected");

  // Mixtures towards sigma.
  double tsig = trace_distance(r, s);
  for (int k = 1; k <= 32; ++k) {
    double lam = k / 32.0;
    consider((1.0 - lam) * base + lam * s, "mixture");
  }
  if (tsig > 0.0) {
    double lam = std::min(1.0, eps / tsig);
    consider((1.0 - lam) * base + lam * s, "mixture");
  }

  // Caps: sigma^{1/2} min(M, t) sigma^{1/2} with M = sigma^{-1/2} rho sigma^{-1/2}.
  Matrix sh = power_on_support(s, 0.5);
  Matrix sm = power_on_support(s, -0.5);
  EigenSystem em = eig_hermitian(hermitian_part(sm * base * sm));
  const double mu_top = em.values(0);
  auto capped = [&](double t) {
    RealVector c = em.values.cwiseMax(0.0).cwiseMin(t);
    return Matrix(sh * em.vectors * c.asDiagonal() * em.vectors.adjoint() * sh);
  };
  if (mu_top > 0.0) {
    double lo = mu_top * 1e-6, hi = mu_top;
    for (int k = 0; k <= 48; ++k) {
      double t = lo * std::pow(hi / lo, k / 48.0);
      consider(capped(t), "cap");
    }
    // Smallest cap still inside the ball, by bisection on the distance.
    auto inside = [&](double t) {
      Matrix m = capped(t);
      double tr = m.trace().real();
      return tr > 0.0 && trace_distance(hermitian_part(m / tr), r) <= eps;
    };
    if (inside(hi)) {
      double a = lo, b = hi;
      if (!inside(a)) {
        for (int it = 0; it < 80; ++it) {
          double mid = std::sqrt(a * b);
          (inside(mid) ? b : a) = mid;
        }
        consider(capped(b), "cap");
      }
    }
  }
  return best;
}

BoundReport check_rld_bound(const DensityOperator& rho, const DensityOperator& sigma, double eps,
                            double beta) {
  if (!(beta > 1.0)) throw ContractViolation("check_rld_bound needs beta > 1");
  SmoothedEstimate est = dmax_smoothed_upper(rho, sigma, eps);
  double rhs = d_alpha(rho, sigma, beta).value() + std::log2(1.0 / (eps * eps)) / (beta - 1.0);
  return one_sided_upper_bound("rld_dmax", est.value_bits, rhs, 1e-9);
}

}  // namespace csl
