#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "csl/divergences.hpp"
#include "oracles.hpp"

using namespace csl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix diag(std::vector<double> p) { return DensityOperator::diagonal(p).matrix(); }

Matrix ket_projector(int dim, int i) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, i) = 1.0;
  return m;
}

Matrix phi_projector() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v * v.adjoint();
}

// Block-diagonal cq state sum_x p_x |x><x| (x) blocks[x].
Matrix cq(const std::vector<double>& p, const std::vector<Matrix>& blocks) {
  const int d = static_cast<int>(blocks[0].rows());
  Matrix m = Matrix::Zero(d * p.size(), d * p.size());
  for (std::size_t x = 0; x < p.size(); ++x) m.block(x * d, x * d, d, d) = p[x] * blocks[x];
  return m;
}

}  // namespace

TEST(QAlpha, Examples) {
  oracle::Gen g(21);
  Matrix r = g.density(3);
  for (double a : {0.3, 0.5, 0.8, 1.5, 2.0, 4.0}) EXPECT_NEAR(q_alpha(r, r, a).value(), 1.0, 1e-10);
  EXPECT_NEAR(q_alpha(phi_projector(), 0.25 * Matrix::Identity(4, 4), 2.0).value(), 4.0, 1e-12);
  EXPECT_NEAR(q_alpha(diag({0.75, 0.25}), diag({0.5, 0.5}), 2.0).value(), 1.25, 1e-13);
}

TEST(QAlpha, MatchesGeneralEigensolverOracle) {
  oracle::Gen g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix r = g.density(dim, 1 + trial % dim), s = g.density(dim);
    for (double a : {0.3, 0.7, 1.5, 2.0, 3.0})
      EXPECT_NEAR(q_alpha(r, s, a).value(), oracle::q_alpha(r, s, a), 1e-8 * std::max(1.0, oracle::q_alpha(r, s, a)))
          << "trial " << trial << " alpha " << a << " spec " << oracle::spectrum(r).back();
  }
}

TEST(QAlpha, SupportViolationAboveOneIsInfinite) {
  EXPECT_TRUE(q_alpha(ket_projector(2, 0), ket_projector(2, 1), 2.0).is_infinite());
}

TEST(DAlpha, Examples) {
  oracle::Gen g(23);
  Matrix r = g.density(3);
  EXPECT_NEAR(d_alpha(r, r, 0.7).value(), 0.0, 1e-10);
  EXPECT_TRUE(d_alpha(ket_projector(2, 0), ket_projector(2, 1), 0.7).is_infinite());

  // Classical pair in the low branch: both branch formulas coincide.
  const std::vector<double> p{0.75, 0.25}, q{0.5, 0.5};
  const double a = 0.25;
  double low = 0.0, sandwiched = 0.0;
  for (int i = 0; i < 2; ++i) {
    low += std::pow(q[i], 1.0 - a) * std::pow(p[i], a);
    sandwiched += std::pow(p[i], a) * std::pow(q[i], 1.0 - a);
  }
  DivergenceValue v = d_alpha_detailed(diag(p), diag(q), a);
  EXPECT_EQ(v.branch, DivergenceBranch::LowOrder);
  EXPECT_NEAR(v.bits.value(), std::log2(low) / (a - 1.0), 1e-13);
  EXPECT_NEAR(v.bits.value(), std::log2(sandwiched) / (a - 1.0), 1e-13);
}

TEST(DAlpha, BranchRouting) {
  Matrix r = diag({0.7, 0.3}), s = diag({0.4, 0.6});
  EXPECT_EQ(d_alpha_detailed(r, s, 0.0).branch, DivergenceBranch::Min);
  EXPECT_EQ(d_alpha_detailed(r, s, 0.3).branch, DivergenceBranch::LowOrder);
  EXPECT_EQ(d_alpha_detailed(r, s, 0.7).branch, DivergenceBranch::Sandwiched);
  EXPECT_EQ(d_alpha_detailed(r, s, 1.0).branch, DivergenceBranch::Umegaki);
  EXPECT_EQ(d_alpha_detailed(r, s, AlphaOrder::infinity()).branch, DivergenceBranch::Max);
  EXPECT_EQ(d_alpha_detailed(ket_projector(2, 0), ket_projector(2, 1), 2.0).branch, DivergenceBranch::Infinite);
  EXPECT_THROW(AlphaOrder(-0.5), ContractViolation);
}

TEST(DAlpha, ContinuousAtOrderOne) {
  oracle::Gen g(24);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix r = g.density(3), s = g.density(3);
    const double d1 = d_alpha(r, s, 1.0).value();
    EXPECT_NEAR(d_alpha(r, s, 1.0 + 1e-6).value(), d1, 1e-4);
    EXPECT_NEAR(d_alpha(r, s, 1.0 - 1e-6).value(), d1, 1e-4);
  }
}

TEST(DMin, Examples) {
  oracle::Gen g(25);
  EXPECT_NEAR(d_min(g.density(3), g.density(3)).value(), 0.0, 1e-12);
  EXPECT_NEAR(d_min(ket_projector(2, 0), 0.5 * Matrix::Identity(2, 2)).value(), 1.0, 1e-12);
  EXPECT_TRUE(d_min(ket_projector(2, 0), ket_projector(2, 1)).is_infinite());
}

TEST(DUmegaki, Examples) {
  oracle::Gen g(26);
  Matrix r = g.density(3);
  EXPECT_NEAR(d_umegaki(r, r).value(), 0.0, 1e-10);
  EXPECT_NEAR(d_umegaki(ket_projector(2, 0), 0.5 * Matrix::Identity(2, 2)).value(), 1.0, 1e-12);
  EXPECT_TRUE(d_umegaki(0.5 * Matrix::Identity(2, 2), ket_projector(2, 1)).is_infinite());
}

TEST(DMax, ExamplesAndOracle) {
  oracle::Gen g(27);
  Matrix r = g.density(3);
  EXPECT_NEAR(d_max(r, r).value(), 0.0, 1e-10);
  EXPECT_NEAR(d_max(ket_projector(2, 0), 0.5 * Matrix::Identity(2, 2)).value(), 1.0, 1e-12);
  EXPECT_TRUE(d_max(0.5 * Matrix::Identity(2, 2), ket_projector(2, 1)).is_infinite());
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a = g.density(3, 1 + trial % 3), b = g.density(3);
    Matrix s = oracle::mpow(b, -0.5);
    const double ref = std::log2(oracle::spectrum(s * a * s).front());
    EXPECT_NEAR(d_max(a, b).value(), ref, 1e-9);
  }
}

TEST(D2, ExamplesAndConsistency) {
  oracle::Gen g(28);
  Matrix r = g.density(3);
  EXPECT_NEAR(d2(r, r).value(), 0.0, 1e-11);
  EXPECT_NEAR(d2(phi_projector(), 0.25 * Matrix::Identity(4, 4)).value(), 2.0, 1e-12);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a = g.density(3, 1 + trial % 3), b = g.density(3);
    EXPECT_NEAR(d2(a, b).value(), std::log2(q_alpha(a, b, 2.0).value()), 1e-11);
    EXPECT_NEAR(d2(a, b).value(), oracle::log2_q2(a, b), 1e-9);
    std::vector<double> p = g.simplex(4), q = g.simplex(4);
    EXPECT_NEAR(d2(diag(p), diag(q)).value(), std::log2(1.0 + chi_squared(p, q).value()), 1e-11);
  }
}

TEST(ChiSquared, Examples) {
  std::vector<double> p{0.2, 0.8};
  EXPECT_NEAR(chi_squared(p, p).value(), 0.0, 1e-15);
  EXPECT_NEAR(chi_squared(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}).value(), 1.0, 1e-15);
  EXPECT_TRUE(chi_squared(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}).is_infinite());
}

TEST(ChiSquared, DominatesSquaredL1OnRandomPairs) {
  oracle::Gen g(29);
  for (int trial = 0; trial < 10000; ++trial) {
    const int dim = 2 + trial % 4;
    std::vector<double> p = g.simplex(dim), q = g.simplex(dim);
    double l1 = 0.0;
    for (int i = 0; i < dim; ++i) l1 += std::abs(p[i] - q[i]);
    ASSERT_GE(std::log2(1.0 + chi_squared(p, q).value()), std::log2(1.0 + l1 * l1) - 1e-12);
  }
}

TEST(HypothesisTest, Examples) {
  oracle::Gen g(30);
  Matrix r = g.density(3);
  for (double eps : {0.05, 0.3, 0.7}) EXPECT_NEAR(d_min_eps(r, r, eps).value(), -std::log2(1.0 - eps), 1e-9);
  EXPECT_NEAR(d_min_eps(diag({0.75, 0.25}), diag({0.5, 0.5}), 0.25).value(), 1.0, 1e-12);
  EXPECT_TRUE(d_min_eps(ket_projector(2, 0), ket_projector(2, 1), 0.1).is_infinite());
}

TEST(HypothesisTest, MatchesClassicalNeymanPearson) {
  oracle::Gen g(31);
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = 2 + trial % 4;
    std::vector<double> p = g.simplex(dim), q = g.simplex(dim);
    const double eps = g.uniform(0.01, 0.9);
    HypothesisTest h = hypothesis_test(diag(p), diag(q), eps);
    ASSERT_NEAR(h.type2, oracle::classical_type2(p, q, eps), 1e-9) << trial;
  }
}

TEST(HypothesisTest, QuantumCertificateIsConsistent) {
  oracle::Gen g(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix r = g.density(dim, 1 + trial % dim), s = g.density(dim);
    const double eps = g.uniform(0.01, 0.9);
    HypothesisTest h = hypothesis_test(r, s, eps);
    EXPECT_TRUE(h.certified);
    EXPECT_LE(h.gap, 1e-8);
    EXPECT_GE((h.effect * r).trace().real(), 1.0 - eps - 1e-10);
    EXPECT_NEAR((h.effect * s).trace().real(), h.type2, 1e-10);
    std::vector<double> spec = oracle::spectrum(h.effect);
    EXPECT_GE(spec.back(), -1e-10);
    EXPECT_LE(spec.front(), 1.0 + 1e-10);
  }
}

TEST(Properties, MonotoneInAlpha) {
  oracle::Gen g(33);
  const std::vector<double> grid{0.1, 0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 5.0, kInf};
  for (int trial = 0; trial < 300; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix r = g.density(dim, 1 + trial % dim), s = g.density(dim);
    double prev = -kInf;
    for (double a : grid) {
      const double v = d_alpha(r, s, a).value();
      ASSERT_GE(v, prev - 1e-9) << "trial " << trial << " alpha " << a;
      prev = v;
    }
  }
}

TEST(Properties, DataProcessing) {
  oracle::Gen g(34);
  RegisterLayout ab({{"A", 2}, {"B", 2}});
  for (int trial = 0; trial < 500; ++trial) {
    Matrix r = g.density(4, 1 + trial % 4), s = g.density(4);
    HelstromMeasurement h = helstrom_channel(r, s);
    Matrix ra = partial_trace(r, ab, {"A"}), sa = partial_trace(s, ab, {"A"});
    for (double a : {0.5, 1.0, 2.0, kInf}) {
      const double full = d_alpha(r, s, a).value();
      ASSERT_LE(d_alpha(h.apply(r), h.apply(s), a).value(), full + 1e-9) << trial << " " << a;
      ASSERT_LE(d_alpha(ra, sa, a).value(), full + 1e-9) << trial << " " << a;
    }
  }
}

TEST(Properties, CollisionLowerBounds) {
  oracle::Gen g(35);
  for (int trial = 0; trial < 2000; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix r = g.density(dim, 1 + trial % dim), s = g.density(dim);
    const double v = d2(r, s).value();
    const double l1 = oracle::trace_norm(r - s);
    const double f = oracle::fidelity(r, s);
    ASSERT_GE(v, std::log2(1.0 + l1 * l1) - 1e-9);
    ASSERT_GE(v, -std::log2(f * f) - 1e-9);
    ASSERT_LE(1.0 - f * f, 1.0 - 1.0 / q2(r, s).value() + 1e-9);
  }
}

TEST(Properties, DirectSum) {
  oracle::Gen g(36);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 3;
    std::vector<double> p = g.simplex(k);
    std::vector<Matrix> rs, ss;
    for (int x = 0; x < k; ++x) {
      rs.push_back(g.density(2));
      ss.push_back(g.density(2));
    }
    for (double a : {0.5, 2.0}) {
      double sum = 0.0;
      for (int x = 0; x < k; ++x) sum += p[x] * q_alpha(rs[x], ss[x], a).value();
      EXPECT_NEAR(q_alpha(cq(p, rs), cq(p, ss), a).value(), sum, 1e-10);
    }
  }
}

TEST(Properties, HypothesisTestingBounds) {
  oracle::Gen g(37);
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix r = g.density(dim, 1 + trial % dim), s = g.density(dim);
    for (double eps : {0.05, 0.2, 0.5}) {
      const double h = d_min_eps(r, s, eps).value();
      for (double a : {0.3, 0.6, 0.9})
        ASSERT_GE(h - htd_lower_rhs(d_alpha(r, s, a).value(), a, eps), -1e-8);
      for (double b : {1.5, 2.0, 4.0})
        ASSERT_GE(htd_upper_rhs(d_alpha(r, s, b).value(), b, eps) - h, -1e-8);
    }
  }
}

TEST(BinaryEntropy, Values) {
  EXPECT_NEAR(binary_entropy(0.5), 1.0, 1e-15);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.25), 0.8112781244591328, 1e-15);
}
