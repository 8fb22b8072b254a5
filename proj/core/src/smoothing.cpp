#include "csl/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace csl {

namespace {

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

std::vector<std::string> resolve_a(const DensityOperator& rho, const std::vector<std::string>& a) {
  if (!a.empty()) return a;
  if (rho.layout().size() < 2) throw ContractViolation("bipartite state needs at least two registers");
  return {rho.layout()[0].label};
}

}  // namespace

double SpectrumPair::s_mass() const { return std::accumulate(s.begin(), s.end(), 0.0); }

SpectrumPair make_spectrum_pair(std::vector<double> q, std::vector<double> t) {
  if (q.size() != t.size()) throw ContractViolation("spectrum pair: length mismatch");
  SpectrumPair sp{sorted_desc(std::move(q)), sorted_desc(std::move(t)), {}};
  sp.s.resize(sp.q.size());
  for (std::size_t i = 0; i < sp.q.size(); ++i) sp.s[i] = std::min(sp.q[i], sp.t[i]);
  return sp;
}

std::vector<double> sorted_spectrum(const Matrix& rho) {
  RealVector ev = eigenvalues_hermitian(rho).cwiseMax(0.0);
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractViolation("tv_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

AlignedDistance min_unitary_trace_distance(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows()) throw ContractViolation("dimension mismatch");
  EigenSystem er = eig_hermitian(rho);
  EigenSystem es = eig_hermitian(sigma);
  AlignedDistance out;
  out.value = 0.5 * (er.values - es.values).cwiseAbs().sum();
  out.unitary = er.vectors * es.vectors.adjoint();
  return out;
}

SpectralSmoothing minimize_over_tv_ball(const SpectrumFunction& f, std::vector<double> p, double eps) {
  if (eps < 0.0) throw ContractViolation("eps must be non-negative");
  p = sorted_desc(std::move(p));
  const std::size_t n = p.size();
  auto eval = [&](const std::vector<double>& q) {
    auto s = sorted_desc(q);
    return f(s);
  };
  auto feasible = [&](const std::vector<double>& q) {
    for (double x : q) {
      if (x < 0.0) return false;
    }
    return tv_distance(p, q) <= eps * (1.0 + 1e-12) + 1e-15;
  };

  std::vector<double> best = p;
  double best_value = eval(p);
  if (eps == 0.0 || n < 2) return {best_value, best, {}};

  // Tail transfer: the steepest distribution in the ball.
  std::vector<double> tail = p;
  double moved = std::min(eps, 1.0 - p[0]);
  double remaining = moved;
  for (std::size_t i = n - 1; i >= 1 && remaining > 0.0; --i) {
    double take = std::min(tail[i], remaining);
    tail[i] -= take;
    remaining -= take;
  }
  tail[0] += moved - remaining;
  double tail_value = eval(tail);
  if (tail_value < best_value) {
    best = tail;
    best_value = tail_value;
  }

  std::vector<std::vector<double>> starts{best, p};
  for (const auto& start : starts) {
    std::vector<double> q = start;
    double value = eval(q);
    int accepted = 0;
    for (double eta = eps / 2.0; eta > 1e-12 && accepted < 20000; eta *= 0.5) {
      bool improved = true;
      while (improved && accepted < 20000) {
        improved = false;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double amt = std::min(eta, q[i]);
            if (amt <= 0.0) continue;
            std::vector<double> trial = q;
            trial[i] -= amt;
            trial[j] += amt;
            if (!feasible(trial)) continue;
            double v = eval(trial);
            if (v < value - 1e-15) {
              q = trial;
              value = v;
              improved = true;
              ++accepted;
            }
          }
        }
      }
    }
    if (value < best_value) {
      best = q;
      best_value = value;
    }
  }
  return {best_value, sorted_desc(best), {}};
}

SpectralSmoothing smooth_unitary_invariant_min(const SpectrumFunction& f, const Matrix& rho, double eps) {
  EigenSystem es = eig_hermitian(rho);
  std::vector<double> p(es.values.data(), es.values.data() + es.values.size());
  for (auto& x : p) x = std::max(0.0, x);
  SpectralSmoothing out = minimize_over_tv_ball(f, p, eps);
  RealVector q = Eigen::Map<const RealVector>(out.spectrum.data(), static_cast<Eigen::Index>(out.spectrum.size()));
  out.witness = es.vectors * q.asDiagonal() * es.vectors.adjoint();
  return out;
}

SpectralSmoothing smooth_renyi_entropy_min(std::vector<double> p, double delta, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("alpha must lie in (0,1)");
  if (!(delta >= 0.0 && delta < 0.5)) throw ContractViolation("delta must lie in [0, 1/2)");
  auto f = [alpha](std::span<const double> q) { return renyi_entropy_spectrum(q, alpha); };
  return minimize_over_tv_ball(f, std::move(p), delta);
}

TruncationResult truncation_effect(const DensityOperator& omega_a, std::span<const double> tau_spectrum,
                                   double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw ContractViolation("delta must lie in (0, 1/2)");
  EigenSystem es = eig_hermitian(omega_a.matrix());
  const auto d = es.values.size();
  if (static_cast<Eigen::Index>(tau_spectrum.size()) != d) {
    throw ContractViolation("tau spectrum length differs from dim omega");
  }
  std::vector<double> q(d);
  for (Eigen::Index i = 0; i < d; ++i) q[i] = std::max(0.0, es.values(i));
  TruncationResult out;
  out.spectra = make_spectrum_pair(q, std::vector<double>(tau_spectrum.begin(), tau_spectrum.end()));
  out.delta = delta;
  out.eigenbasis = es.vectors;
  const auto& sp = out.spectra;
  if (tv_distance(sp.q, sp.t) > delta + 1e-9) throw ContractViolation("tau spectrum is not delta-close to omega");
  if (sp.s_mass() <= delta) throw ContractViolation("||s||_1 <= delta");

  // Smallest m with tail(m) = sum_{x>m} s_x <= delta; exact ties take this m.
  std::vector<double> tail(d + 1, 0.0);
  for (Eigen::Index x = d - 1; x >= 0; --x) tail[x] = tail[x + 1] + sp.s[x];
  int m = static_cast<int>(d);
  for (int k = 1; k <= static_cast<int>(d); ++k) {
    if (tail[k] <= delta * (1.0 + 1e-12)) {
      m = k;
      break;
    }
  }
  out.m = m;
  RealVector diag = RealVector::Zero(d);
  RealVector kept = RealVector::Zero(d);
  for (int x = 0; x < m; ++x) {
    diag(x) = sp.q[x] > 0.0 ? std::sqrt(sp.s[x] / sp.q[x]) : 0.0;
    kept(x) = sp.s[x];
  }
  out.lambda = Effect(hermitian_part(es.vectors * diag.asDiagonal() * es.vectors.adjoint()));
  out.survival = kept.sum();
  Matrix w = es.vectors * kept.asDiagonal() * es.vectors.adjoint() / out.survival;
  out.omega_trunc = DensityOperator(hermitian_part(w), omega_a.layout());
  return out;
}

DensityOperator apply_truncation(const DensityOperator& omega_ab, const TruncationResult& tr,
                                 const std::vector<std::string>& a_labels) {
  auto a = resolve_a(omega_ab, a_labels);
  Matrix lift = embed_local(tr.lambda.matrix(), omega_ab.layout(), a);
  Matrix w = lift * omega_ab.matrix() * lift;
  double t = w.trace().real();
  if (!(t > 0.0)) throw ContractViolation("truncation annihilates the state");
  return DensityOperator(hermitian_part(w / t), omega_ab.layout());
}

ChainContext make_chain_context(const DensityOperator& rho_ab, std::span<const double> betas,
                                const OptimizerOptions& opts, const std::vector<std::string>& a_labels) {
  auto a = resolve_a(rho_ab, a_labels);
  ChainContext ctx;
  ctx.h_min = h_min_conditional(rho_ab, a);
  for (double b : betas) ctx.h_up.emplace_back(b, conditional_renyi_up(rho_ab, b, opts, a));
  return ctx;
}

ChainReport uab_chain_verify(const DensityOperator& rho_ab, double alpha, double beta, double eps,
                             const OptimizerOptions& opts, const std::vector<std::string>& a_labels,
                             const ChainContext* context) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 1.0) || !(eps > 0.0 && eps < 1.0)) {
    throw ContractViolation("uab_chain_verify needs alpha in (0,1), beta > 1, eps in (0,1)");
  }
  auto a = resolve_a(rho_ab, a_labels);
  ChainReport rep;
  rep.eps1 = (std::sqrt(3.0) - 1.0) * eps;
  rep.delta = kUniversalC * eps * eps;

  Matrix ra = partial_trace(rho_ab.matrix(), rho_ab.layout(), a);
  DensityOperator rho_a(ra, rho_ab.layout().reordered(a));
  SpectralSmoothing sm = smooth_renyi_entropy_min(sorted_spectrum(ra), rep.delta, alpha);
  rep.h_alpha_delta = sm.value;
  TruncationResult tr = truncation_effect(rho_a, sm.spectrum, rep.delta);
  rep.m = tr.m;
  DensityOperator omega_l = apply_truncation(rho_ab, tr, a);

  double dist = trace_distance(omega_l, rho_ab);
  rep.steps[0] = {"ball_membership", dist, rep.eps1, dist <= rep.eps1 + 1e-9, 1e-9};

  const Matrix& lam = tr.lambda.matrix();
  double lam_min = smallest_nonzero_eigenvalue(hermitian_part(lam * ra * lam));
  double neg_log_min = -std::log2(lam_min);
  double rhs2 = rep.h_alpha_delta + std::log2(1.0 / rep.delta) / (1.0 - alpha);
  rep.steps[1] = {"lambda_min_vs_renyi", neg_log_min, rhs2, neg_log_min <= rhs2 + 1e-8, 1e-8};

  rep.imax_truncated = imax_sdp(omega_l, a).value_bits;
  double h_min = context ? context->h_min : h_min_conditional(rho_ab, a);
  double rhs3 = neg_log_min - h_min;
  rep.steps[2] = {"imax_lemma", rep.imax_truncated, rhs3, rep.imax_truncated <= rhs3 + 1e-7, 1e-7};

  double h_up = 0.0;
  bool cached = false;
  if (context) {
    for (const auto& [b, v] : context->h_up) {
      if (b == beta) {
        h_up = v;
        cached = true;
      }
    }
  }
  if (!cached) h_up = conditional_renyi_up(rho_ab, beta, opts, a);
  rep.universal_rhs = renyi_entropy(ra, alpha) - h_up + universal_f(alpha, beta, eps);
  rep.steps[3] = {"universal_bound", rep.imax_truncated, rep.universal_rhs,
                  rep.imax_truncated <= rep.universal_rhs + 1e-7, 1e-7};

  rep.all_pass = true;
  for (const auto& s : rep.steps) {
    if (!s.pass && rep.all_pass) {
      rep.all_pass = false;
      rep.failed_step = s.name;
    }
  }
  return rep;
}

}  // namespace csl
