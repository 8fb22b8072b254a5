#include "csl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csl {

namespace {

using Params = Eigen::VectorXd;
using ParamObjective = std::function<double(const Params&)>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const ParamObjective& f, const Params& x) {
  double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

struct LocalRun {
  Params x;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
  double last_change = kInf;
};

Params fd_gradient(const ParamObjective& f, const Params& x, double fx) {
  const double h = 1e-6;
  Params g(x.size());
  Params probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    double fp = safe_eval(f, probe);
    probe(i) = x(i) - h;
    double fm = safe_eval(f, probe);
    probe(i) = x(i);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g(i) = (fp - fm) / (2 * h);
    } else if (std::isfinite(fp)) {
      g(i) = (fp - fx) / h;
    } else if (std::isfinite(fm)) {
      g(i) = (fx - fm) / h;
    } else {
      g(i) = 0.0;
    }
  }
  return g;
}

// BFGS with central-difference gradients and Armijo backtracking. The
// objectives here are scale invariant in x, so the iterate is rescaled to
// unit norm whenever it drifts; the curvature estimate restarts then.
LocalRun bfgs(const ParamObjective& f, Params x, int max_iterations) {
  LocalRun run;
  x /= x.norm();
  double fx = safe_eval(f, x);
  run.x = x;
  run.value = fx;
  if (!std::isfinite(fx)) return run;
  const auto n = x.size();
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Params g = fd_gradient(f, x, fx);
  int flat_steps = 0;
  for (int it = 0; it < max_iterations; ++it) {
    run.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < 1e-9) {
      run.converged = true;
      break;
    }
    Params p = -hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    double fnew = kInf;
    Params xnew;
    while (step > 1e-14) {
      xnew = x + step * p;
      fnew = safe_eval(f, xnew);
      if (fnew <= fx + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(fnew <= fx + 1e-4 * step * slope) || !std::isfinite(fnew)) {
      if (!hinv.isIdentity()) {
        hinv.setIdentity();
        continue;
      }
      run.converged = true;  // no descent left at finite-difference resolution
      break;
    }
    double change = fx - fnew;
    run.last_change = change;
    bool rescale = xnew.norm() > 2.0 || xnew.norm() < 0.5;
    if (rescale) xnew /= xnew.norm();
    Params gnew = fd_gradient(f, xnew, fnew);
    if (rescale) {
      hinv.setIdentity();
    } else {
      Params s = xnew - x;
      Params y = gnew - g;
      double sy = s.dot(y);
      if (sy > 1e-16) {
        double rho = 1.0 / sy;
        Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
        hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) +
               rho * s * s.transpose();
      }
    }
    x = xnew;
    fx = fnew;
    g = gnew;
    flat_steps = change <= 1e-15 * (1.0 + std::abs(fx)) ? flat_steps + 1 : 0;
    if (flat_steps >= 4) {
      run.converged = true;
      break;
    }
  }
  run.x = x;
  run.value = fx;
  return run;
}

Matrix params_to_factor(const Params& x, int d) {
  Matrix g(d, d);
  for (int k = 0; k < d * d; ++k) g(k % d, k / d) = Complex(x(2 * k), x(2 * k + 1));
  return g;
}

Params factor_to_params(const Matrix& g) {
  const auto d = g.rows();
  Params x(2 * d * d);
  for (Eigen::Index k = 0; k < d * d; ++k) {
    x(2 * k) = g(k % d, k / d).real();
    x(2 * k + 1) = g(k % d, k / d).imag();
  }
  return x;
}

Matrix factor_to_state(const Matrix& g) {
  Matrix s = g.adjoint() * g;
  double tr = s.trace().real();
  return hermitian_part(s / tr);
}

Vector params_to_unit(const Params& x) {
  const auto d = x.size() / 2;
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(x(2 * i), x(2 * i + 1));
  return v / v.norm();
}

Params unit_to_params(const Vector& v) {
  Params x(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(2 * i) = v(i).real();
    x(2 * i + 1) = v(i).imag();
  }
  return x;
}

struct MultiStart {
  std::vector<LocalRun> runs;
  int best = -1;
};

MultiStart run_starts(const ParamObjective& f, const std::vector<Params>& starts, int max_iterations) {
  MultiStart ms;
  for (const auto& s : starts) ms.runs.push_back(bfgs(f, s, max_iterations));
  for (std::size_t i = 0; i < ms.runs.size(); ++i) {
    if (!std::isfinite(ms.runs[i].value)) continue;
    if (ms.best < 0 || ms.runs[i].value < ms.runs[ms.best].value) ms.best = static_cast<int>(i);
  }
  return ms;
}

void fill_report(OptimizerReport& rep, const MultiStart& ms, double tol) {
  for (const auto& r : ms.runs) rep.restart_values.push_back(r.value);
  rep.best_restart = ms.best;
  if (ms.best < 0) {
    rep.value = kInf;
    rep.failure = "objective non-finite at every start";
    rep.converged = false;
    rep.gap_estimate = kInf;
    return;
  }
  const LocalRun& b = ms.runs[ms.best];
  rep.value = b.value;
  rep.iterations = b.iterations;
  // Distance from the best value to the nearest value reached by another
  // start: small when independent descents agree on the optimum.
  double gap = kInf;
  for (std::size_t i = 0; i < ms.runs.size(); ++i) {
    if (static_cast<int>(i) == ms.best || !std::isfinite(ms.runs[i].value)) continue;
    gap = std::min(gap, std::abs(ms.runs[i].value - b.value));
  }
  if (!std::isfinite(gap)) gap = std::isfinite(b.last_change) ? std::abs(b.last_change) : 0.0;
  rep.gap_estimate = gap;
  rep.converged = b.converged && gap <= tol;
}

}  // namespace

OptimizerReport minimize_over_states(const StateObjective& objective, int dim,
                                     const OptimizerOptions& opts,
                                     std::span<const Matrix> warm_starts) {
  if (dim < 1) throw ContractViolation("minimize_over_states: dim must be positive");
  ParamObjective f = [&](const Params& x) {
    Matrix g = params_to_factor(x, dim);
    if (g.squaredNorm() <= 0.0) return kInf;
    return objective(factor_to_state(g));
  };
  std::vector<Params> starts;
  for (const auto& w : warm_starts) starts.push_back(factor_to_params(sqrt_psd(hermitian_part(w))));
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng = derive_rng(opts.seed, static_cast<std::uint64_t>(r));
    starts.push_back(factor_to_params(ginibre(dim, dim, rng)));
  }
  if (starts.empty()) {
    starts.push_back(factor_to_params(Matrix::Identity(dim, dim)));
  }
  MultiStart ms = run_starts(f, starts, opts.max_iterations);
  OptimizerReport rep;
  fill_report(rep, ms, opts.tol);
  if (ms.best >= 0) rep.argopt = factor_to_state(params_to_factor(ms.runs[ms.best].x, dim));
  return rep;
}

OptimizerReport maximize_over_pure(const PureObjective& objective, int dim,
                                   const OptimizerOptions& opts,
                                   std::span<const Vector> warm_starts) {
  if (dim < 1) throw ContractViolation("maximize_over_pure: dim must be positive");
  ParamObjective f = [&](const Params& x) {
    if (x.squaredNorm() <= 0.0) return kInf;
    double v = objective(params_to_unit(x));
    return std::isfinite(v) ? -v : kInf;
  };
  std::vector<Params> starts;
  for (const auto& w : warm_starts) starts.push_back(unit_to_params(w));
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng = derive_rng(opts.seed, static_cast<std::uint64_t>(r));
    starts.push_back(unit_to_params(random_pure_vector(dim, rng)));
  }
  if (starts.empty()) starts.push_back(unit_to_params(Vector::Unit(dim, 0)));
  MultiStart ms = run_starts(f, starts, opts.max_iterations);
  OptimizerReport rep;
  fill_report(rep, ms, opts.tol);
  rep.value = -rep.value;
  for (auto& v : rep.restart_values) v = -v;
  if (ms.best >= 0) rep.argvec = params_to_unit(ms.runs[ms.best].x);
  return rep;
}

namespace {

// Hermitian basis of dim x dim matrices: diagonal units, then symmetric
// and antisymmetric off-diagonal pairs.
std::vector<Matrix> hermitian_basis(int d) {
  std::vector<Matrix> out;
  for (int i = 0; i < d; ++i) {
    Matrix e = Matrix::Zero(d, d);
    e(i, i) = 1.0;
    out.push_back(e);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      out.push_back(e);
      Matrix f = Matrix::Zero(d, d);
      f(i, j) = Complex(0.0, 1.0);
      f(j, i) = Complex(0.0, -1.0);
      out.push_back(f);
    }
  }
  return out;
}

struct BarrierEval {
  bool feasible = false;
  double value = kInf;  // t Tr Y - log det S
  Eigen::LLT<Matrix> llt;
};

}  // namespace

DominationResult solve_domination(const Matrix& x, const Matrix& rho_ab, int dim_b, double tol) {
  const auto dim_a = x.rows();
  if (rho_ab.rows() != dim_a * dim_b) throw ContractViolation("solve_domination: dimension mismatch");
  DominationResult res;

  // Restrict to supp(X) (x) B; rho must live there or no Y exists.
  EigenSystem ex = eig_hermitian(x);
  double cut = rank_cutoff(ex.values);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < dim_a; ++i) {
    if (ex.values(i) > cut) keep.push_back(i);
  }
  const auto r = static_cast<Eigen::Index>(keep.size());
  Matrix v(dim_a, r);
  RealVector xs(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    v.col(k) = ex.vectors.col(keep[k]);
    xs(k) = ex.values(keep[k]);
  }
  Matrix w = kron(v, Matrix::Identity(dim_b, dim_b));
  Matrix rho = hermitian_part(w.adjoint() * rho_ab * w);
  double leak = rho_ab.trace().real() - rho.trace().real();
  if (r == 0 || leak > tol::kSupport) {
    res.min_trace = kInf;
    res.dual_lower = kInf;
    return res;
  }

  const Eigen::Index m = r * dim_b;
  std::vector<Matrix> basis = hermitian_basis(dim_b);
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Matrix xd = Matrix::Zero(r, r);
  for (Eigen::Index k = 0; k < r; ++k) xd(k, k) = xs(k);
  std::vector<Matrix> lifted;
  for (const auto& e : basis) lifted.push_back(kron(xd, e));
  RealVector trace_coef = RealVector::Zero(nb);
  for (int i = 0; i < dim_b; ++i) trace_coef(i) = 1.0;

  auto build_y = [&](const RealVector& y) {
    Matrix out = Matrix::Zero(dim_b, dim_b);
    for (Eigen::Index k = 0; k < nb; ++k) out += y(k) * basis[k];
    return out;
  };
  auto slack = [&](const RealVector& y) {
    Matrix s = -rho;
    for (Eigen::Index k = 0; k < nb; ++k) s += y(k) * lifted[k];
    return s;
  };
  auto barrier = [&](const RealVector& y, double t) {
    BarrierEval b;
    b.llt.compute(hermitian_part(slack(y)));
    if (b.llt.info() != Eigen::Success) return b;
    double logdet = 0.0;
    const Matrix& l = b.llt.matrixLLT();
    for (Eigen::Index i = 0; i < m; ++i) {
      double di = l(i, i).real();
      if (!(di > 0.0)) return b;
      logdet += 2.0 * std::log(di);
    }
    b.feasible = true;
    b.value = t * trace_coef.dot(y) - logdet;
    return b;
  };

  // Strictly feasible start Y = c I.
  double top = eigenvalues_hermitian(rho)(0);
  RealVector y = RealVector::Zero(nb);
  double c = 2.0 * std::max(top, 1e-12) / xs.minCoeff();
  for (int i = 0; i < dim_b; ++i) y(i) = c;

  // Dual point Z = S^{-1}/t, rescaled so that Tr_A[(X (x) I) Z] <= I. Late
  // iterates have cond(S) ~ t and lose digits in S^{-1}, so the best value
  // along the path is kept rather than the last one.
  auto dual_value = [&](const Matrix& z) {
    Matrix gb = Matrix::Zero(dim_b, dim_b);
    for (Eigen::Index k = 0; k < r; ++k) gb += xs(k) * z.block(k * dim_b, k * dim_b, dim_b, dim_b);
    double gtop = eigenvalues_hermitian(hermitian_part(gb))(0);
    return (rho.transpose().cwiseProduct(z)).sum().real() / gtop;
  };
  double best_dual = 0.0;

  double t = 1.0;
  const double final_gap = 1e-10;
  Matrix sinv;
  int newton_steps = 0;
  while (true) {
    for (int inner = 0; inner < 100; ++inner) {
      BarrierEval cur = barrier(y, t);
      if (!cur.feasible) break;
      sinv = cur.llt.solve(Matrix::Identity(m, m));
      std::vector<Matrix> a(nb);
      RealVector grad(nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        a[k] = sinv * lifted[k];
        grad(k) = t * trace_coef(k) - a[k].trace().real();
      }
      Eigen::MatrixXd hess(nb, nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        for (Eigen::Index l = k; l < nb; ++l) {
          double h = (a[k].transpose().cwiseProduct(a[l])).sum().real();
          hess(k, l) = h;
          hess(l, k) = h;
        }
      }
      RealVector step = hess.ldlt().solve(-grad);
      double decrement = -grad.dot(step);
      ++newton_steps;
      if (!(decrement > 0.0) || decrement * 0.5 < 1e-9) break;
      double s = 1.0;
      bool moved = false;
      while (s > 1e-12) {
        BarrierEval nxt = barrier(y + s * step, t);
        if (nxt.feasible && nxt.value <= cur.value - 0.25 * s * decrement) {
          y += s * step;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) break;
    }
    if (sinv.size()) best_dual = std::max(best_dual, dual_value(sinv / t));
    if (static_cast<double>(m) / t <= final_gap * std::max(1.0, trace_coef.dot(y))) break;
    t *= 10.0;
  }
  res.iterations = newton_steps;

  // Polish: keep the direction sigma = Y / Tr Y and pick the exact smallest
  // scale making it feasible.
  Matrix ybar = hermitian_part(build_y(y));
  Matrix sigma = ybar / ybar.trace().real();
  Matrix s_half = power_on_support(kron(xd, sigma), -0.5);
  double scale = eigenvalues_hermitian(s_half * rho * s_half)(0);
  res.sigma = sigma;
  res.min_trace = scale;
  res.y = scale * sigma;

  const double dual = best_dual;
  res.dual_lower = std::min(dual, res.min_trace);

  Matrix full = kron(x, res.y) - rho_ab;
  RealVector ev = eigenvalues_hermitian(hermitian_part(full));
  res.residual = ev(ev.size() - 1);
  res.converged = std::log2(res.min_trace) - std::log2(std::max(dual, 1e-300)) <= tol &&
                  res.residual >= -tol;
  return res;
}

Bipartite split_bipartite(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels) {
  const RegisterLayout& layout = rho_ab.layout();
  if (layout.size() < 2) throw ContractViolation("bipartite state needs at least two registers");
  std::vector<std::string> a = a_labels.empty() ? std::vector<std::string>{layout[0].label} : a_labels;
  Bipartite out;
  out.a = layout.reordered(a);
  out.b = layout.complement(a);
  if (out.b.size() == 0) throw ContractViolation("B part of the bipartition is empty");
  std::vector<std::string> order = a;
  for (const auto& l : out.b.labels()) order.push_back(l);
  out.rho = permute_registers(rho_ab.matrix(), layout, order);
  return out;
}

ImaxResult imax_sdp(const DensityOperator& rho_ab, const std::vector<std::string>& a_labels, double tol) {
  Bipartite bp = split_bipartite(rho_ab, a_labels);
  Matrix rho_a = partial_trace(bp.rho, bp.a.concat(bp.b), bp.a.labels());
  DominationResult d = solve_domination(rho_a, bp.rho, bp.dim_b(), tol);
  ImaxResult out;
  out.value_bits = std::log2(d.min_trace);
  out.y = d.y;
  out.sigma = d.sigma;
  out.feasibility_residual = d.residual;
  out.dual_bound_bits = std::log2(std::max(d.dual_lower, 1e-300));
  out.iterations = d.iterations;
  out.converged = d.converged;
  return out;
}

}  // namespace csl
