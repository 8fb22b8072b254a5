#include "csl/divergences.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <Eigen/SVD>

namespace csl {

namespace {

void require_pair(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols() || rho.rows() != rho.cols()) {
    throw ContractViolation("divergence arguments must be square and of equal dimension");
  }
}

double real_trace_product(const Matrix& a, const Matrix& b) {
  // Tr[AB] without forming the product.
  return (a.transpose().cwiseProduct(b)).sum().real();
}

}  // namespace

std::string to_string(ExtendedReal x) {
  if (x.is_infinite()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x.value());
  return buf;
}

AlphaOrder::AlphaOrder(double alpha) : alpha_(alpha) {
  if (std::isnan(alpha) || alpha < 0.0) throw ContractViolation("alpha must be >= 0");
}

std::string_view branch_name(DivergenceBranch b) {
  switch (b) {
    case DivergenceBranch::Min: return "min";
    case DivergenceBranch::LowOrder: return "low-order";
    case DivergenceBranch::Sandwiched: return "sandwiched";
    case DivergenceBranch::Umegaki: return "umegaki";
    case DivergenceBranch::Max: return "max";
    case DivergenceBranch::Infinite: return "infinite";
  }
  return "unknown";
}

bool support_contained(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  Matrix p = support_projector(sigma);
  double total = rho.trace().real();
  double inside = real_trace_product(p, rho);
  return total - inside <= tol::kSupport * std::max(1.0, total);
}

bool orthogonal(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  return real_trace_product(rho, sigma) <= tol::kOrthogonal;
}

ExtendedReal q_alpha(const Matrix& rho, const Matrix& sigma, double alpha) {
  require_pair(rho, sigma);
  if (!(alpha > 0.0) || alpha == 1.0 || std::isinf(alpha)) {
    throw ContractViolation("q_alpha needs alpha in (0,1) or (1,inf)");
  }
  if (alpha > 1.0 && !support_contained(rho, sigma)) return ExtendedReal::infinity();
  // s rho s = X^dag X with X = rho^{1/2} s. Its eigenvalues are the squared
  // singular values of X: small genuine ones survive (x^alpha magnifies them
  // for alpha < 1), while the kernel of rho is removed exactly by the power.
  Matrix x = power_on_support(rho, 0.5) * power_on_support(sigma, (1.0 - alpha) / (2.0 * alpha));
  Eigen::BDCSVD<Matrix> svd(x);
  const RealVector& sv = svd.singularValues();
  const double cut = sv.size() ? 1e-14 * sv(0) : 0.0;
  double q = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) q += std::pow(sv(i), 2.0 * alpha);
  }
  return q;
}

DivergenceValue d_alpha_detailed(const Matrix& rho, const Matrix& sigma, AlphaOrder order) {
  require_pair(rho, sigma);
  const double a = order.value();
  if (order.is_zero()) {
    ExtendedReal v = d_min(rho, sigma);
    return {v, v.is_infinite() ? DivergenceBranch::Infinite : DivergenceBranch::Min};
  }
  if (order.is_one()) {
    ExtendedReal v = d_umegaki(rho, sigma);
    return {v, v.is_infinite() ? DivergenceBranch::Infinite : DivergenceBranch::Umegaki};
  }
  if (order.is_infinite()) {
    ExtendedReal v = d_max(rho, sigma);
    return {v, v.is_infinite() ? DivergenceBranch::Infinite : DivergenceBranch::Max};
  }
  const DivergenceValue inf{ExtendedReal::infinity(), DivergenceBranch::Infinite};
  if (a < 0.5) {
    if (orthogonal(rho, sigma)) return inf;
    double q = q_alpha(sigma, rho, 1.0 - a).value();
    if (q <= 0.0) return inf;
    return {std::log2(q) / (a - 1.0), DivergenceBranch::LowOrder};
  }
  if (a < 1.0) {
    if (orthogonal(rho, sigma)) return inf;
  } else if (!support_contained(rho, sigma)) {
    return inf;
  }
  ExtendedReal q = q_alpha(rho, sigma, a);
  if (q.is_infinite() || q.value() <= 0.0) return inf;
  return {std::log2(q.value()) / (a - 1.0), DivergenceBranch::Sandwiched};
}

ExtendedReal d_alpha(const Matrix& rho, const Matrix& sigma, AlphaOrder alpha) {
  return d_alpha_detailed(rho, sigma, alpha).bits;
}

ExtendedReal d_min(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  double v = real_trace_product(sigma, support_projector(rho));
  if (v <= tol::kOrthogonal) return ExtendedReal::infinity();
  return -std::log2(v);
}

ExtendedReal d_umegaki(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  if (!support_contained(rho, sigma)) return ExtendedReal::infinity();
  RealVector pr = eigenvalues_hermitian(rho);
  double neg_entropy = 0.0;
  for (Eigen::Index i = 0; i < pr.size(); ++i) {
    if (pr(i) > 0.0) neg_entropy += pr(i) * std::log2(pr(i));
  }
  double cross = real_trace_product(rho, log2_on_support(sigma));
  return neg_entropy - cross;
}

ExtendedReal d_max(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  if (!support_contained(rho, sigma)) return ExtendedReal::infinity();
  Matrix s = power_on_support(sigma, -0.5);
  RealVector ev = eigenvalues_hermitian(s * rho * s);
  double top = ev.size() ? ev(0) : 0.0;
  if (top <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log2(top);
}

ExtendedReal q2(const Matrix& rho, const Matrix& sigma) {
  require_pair(rho, sigma);
  if (!support_contained(rho, sigma)) return ExtendedReal::infinity();
  Matrix s = power_on_support(sigma, -0.5);
  Matrix x = rho * s;
  return real_trace_product(x, x);
}

ExtendedReal d2(const Matrix& rho, const Matrix& sigma) {
  ExtendedReal q = q2(rho, sigma);
  if (q.is_infinite()) return q;
  return std::log2(q.value());
}

ExtendedReal chi_squared(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractViolation("chi_squared: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0) return ExtendedReal::infinity();
      continue;
    }
    double d = p[i] - q[i];
    acc += d * d / q[i];
  }
  return acc;
}

namespace {

struct ThresholdSpectrum {
  EigenSystem es;
  RealVector r;  // <v|rho|v>
  RealVector s;  // <v|sigma|v>
  double positive_rho_mass = 0.0;
  double positive_part_trace = 0.0;
};

ThresholdSpectrum threshold_spectrum(const Matrix& rho, const Matrix& sigma, double u) {
  ThresholdSpectrum t;
  t.es = eig_hermitian(hermitian_part(u * rho - sigma));
  const auto d = rho.rows();
  t.r.resize(d);
  t.s.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    auto v = t.es.vectors.col(k);
    t.r(k) = std::max(0.0, (v.adjoint() * rho * v)(0, 0).real());
    t.s(k) = std::max(0.0, (v.adjoint() * sigma * v)(0, 0).real());
    if (t.es.values(k) > 0.0) {
      t.positive_rho_mass += t.r(k);
      t.positive_part_trace += t.es.values(k);
    }
  }
  return t;
}

}  // namespace

HypothesisTest hypothesis_test(const Matrix& rho, const Matrix& sigma, double eps) {
  require_pair(rho, sigma);
  if (!(eps > 0.0 && eps < 1.0)) throw ContractViolation("eps must lie in (0,1)");
  const double target = 1.0 - eps;
  auto mass = [&](double u) { return threshold_spectrum(rho, sigma, u).positive_rho_mass; };

  // Tests of the form Pi_+(u rho - sigma): the rho-mass they capture is
  // non-decreasing in u. Bracket the smallest u that reaches the target.
  double lo = 0.0, hi = 1.0;
  if (mass(hi) >= target) {
    while (hi > 1e-300 && mass(hi * 0.5) >= target) hi *= 0.5;
    lo = hi * 0.5;
  } else {
    lo = hi;
    while (hi < 1e300 && mass(hi) < target) {
      lo = hi;
      hi *= 2.0;
    }
  }
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (mass(mid) >= target ? hi : lo) = mid;
  }

  ThresholdSpectrum t = threshold_spectrum(rho, sigma, hi);
  const auto d = rho.rows();
  std::vector<Eigen::Index> order(d);
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(1.0, hi) * 1e-12;
  auto ratio = [&](Eigen::Index k) {
    return t.s(k) > 0.0 ? t.r(k) / t.s(k) : std::numeric_limits<double>::infinity();
  };
  // Descending eigenvalue; within a numerical tie, the direction that
  // buys the most rho-mass per unit sigma-mass first.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    double la = t.es.values(a), lb = t.es.values(b);
    if (std::abs(la - lb) > scale) return la > lb;
    return ratio(a) > ratio(b);
  });

  HypothesisTest out;
  out.threshold = hi;
  out.effect = Matrix::Zero(d, d);
  double acc = 0.0, type2 = 0.0;
  for (Eigen::Index k : order) {
    if (acc >= target) break;
    double w = 1.0;
    if (acc + t.r(k) > target) w = t.r(k) > 0.0 ? (target - acc) / t.r(k) : 0.0;
    acc += w * t.r(k);
    type2 += w * t.s(k);
    auto v = t.es.vectors.col(k);
    out.effect += w * (v * v.adjoint());
  }
  out.type1_mass = acc;
  out.type2 = type2;

  auto dual = [&](double u) {
    return u * target - threshold_spectrum(rho, sigma, u).positive_part_trace;
  };
  out.dual_bound = std::max(dual(hi), dual(lo));
  out.gap = std::max(0.0, type2 - out.dual_bound);
  out.certified = out.gap <= 1e-8;
  out.value = type2 <= tol::kOrthogonal ? ExtendedReal::infinity() : ExtendedReal(-std::log2(type2));
  return out;
}

ExtendedReal d_min_eps(const Matrix& rho, const Matrix& sigma, double eps) {
  return hypothesis_test(rho, sigma, eps).value;
}

double binary_entropy(double p) {
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

double htd_lower_rhs(double d_alpha_value, double alpha, double eps) {
  return d_alpha_value +
         alpha / (1.0 - alpha) * (binary_entropy(alpha) / alpha - std::log2(1.0 / eps));
}

double htd_upper_rhs(double d_beta_value, double beta, double eps) {
  return d_beta_value + beta / (beta - 1.0) * std::log2(1.0 / (1.0 - eps));
}

}  // namespace csl
