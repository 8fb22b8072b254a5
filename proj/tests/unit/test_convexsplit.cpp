#include <cmath>

#include <gtest/gtest.h>

#include "csl/convexsplit.hpp"
#include "oracles.hpp"

using namespace csl;

namespace {

RegisterLayout ra_layout(int dr, int da) { return RegisterLayout({{"R", dr}, {"A", da}}); }

DensityOperator phi_ra() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return DensityOperator(Matrix(v * v.adjoint()), ra_layout(2, 2));
}

DensityOperator half_identity() { return DensityOperator(Matrix(Matrix::Identity(2, 2) / 2.0)); }

// Random instance: dims in {2,3}, n in 1..n_max, random rank, random omega
// or rho^R, random or uniform weights.
ConvexSplitInstance random_instance(oracle::Gen& g, int trial, int n_max) {
  const int dr = 2 + trial % 2, da = 2 + (trial / 2) % 2;
  const int n = 1 + (trial / 4) % n_max;
  ConvexSplitInstance inst;
  inst.rho_ra = DensityOperator(g.density(dr * da, 1 + trial % (dr * da)), ra_layout(dr, da));
  inst.sigma_a = DensityOperator(g.density(da));
  inst.omega_r = trial % 3 == 0 ? DensityOperator(oracle::partial_trace(inst.rho_ra.matrix(), {dr, da}, {true, false}))
                                : DensityOperator(g.density(dr));
  inst.n = n;
  if (trial % 2) inst.weights = g.simplex(n);
  return inst;
}

}  // namespace

TEST(BuildTau, SingleCopyIsRho) {
  oracle::Gen g(101);
  DensityOperator rho(g.density(6), ra_layout(2, 3));
  DensityOperator tau = build_tau(pinned_instance(rho, DensityOperator(g.density(3)), 1));
  EXPECT_LE((tau.matrix() - rho.matrix()).norm(), 1e-14);
}

TEST(BuildTau, ProductInputGivesProduct) {
  oracle::Gen g(102);
  Matrix r = g.density(2), s = g.density(2);
  DensityOperator rho(oracle::kron(r, s), ra_layout(2, 2));
  DensityOperator tau = build_tau(pinned_instance(rho, DensityOperator(s), 3));
  Matrix expect = oracle::kron(oracle::kron(oracle::kron(r, s), s), s);
  EXPECT_LE((tau.matrix() - expect).norm(), 1e-13);
}

TEST(BuildTau, MatchesEntrywiseConstructor) {
  oracle::Gen g(103);
  ConvexSplitInstance phi = pinned_instance(phi_ra(), half_identity(), 2);
  Matrix ref = oracle::convex_split_tau(phi.rho_ra.matrix(), 2, 2, phi.sigma_a.matrix(), {0.5, 0.5});
  EXPECT_LE((build_tau(phi).matrix() - ref).norm(), 1e-14);

  for (int trial = 0; trial < 60; ++trial) {
    ConvexSplitInstance inst = random_instance(g, trial, 4);
    const int dr = inst.omega_r.dim(), da = inst.sigma_a.dim();
    Matrix t = build_tau(inst).matrix();
    Matrix o = oracle::convex_split_tau(inst.rho_ra.matrix(), dr, da, inst.sigma_a.matrix(), inst.resolved_weights());
    ASSERT_LE((t - o).norm(), 1e-12) << trial;
    std::vector<bool> keep(1 + inst.n, false);
    keep[0] = true;
    std::vector<int> dims{dr};
    for (int x = 0; x < inst.n; ++x) dims.push_back(da);
    Matrix tr = oracle::partial_trace(t, dims, keep);
    ASSERT_LE((tr - oracle::partial_trace(inst.rho_ra.matrix(), {dr, da}, {true, false})).norm(), 1e-10);
  }
}

TEST(BuildTau, DimensionCapAndValidation) {
  oracle::Gen g(104);
  DensityOperator rho(g.density(6), ra_layout(2, 3));
  // 2 * 3^7 = 4374 > 4096.
  EXPECT_THROW(build_tau(pinned_instance(rho, DensityOperator(g.density(3)), 7)), ContractViolation);
  ConvexSplitInstance bad = pinned_instance(rho, DensityOperator(g.density(3)), 2);
  bad.weights = {0.5, 0.6};
  EXPECT_THROW(bad.validate(), ContractViolation);
  bad.weights = {1.0};
  EXPECT_THROW(bad.validate(), ContractViolation);
  bad.weights.clear();
  bad.n = 0;
  EXPECT_THROW(bad.validate(), ContractViolation);
  EXPECT_THROW(pinned_instance(rho, DensityOperator(g.density(2)), 2).validate(), ContractViolation);
}

TEST(SplitEquality, PhiAgainstDenseOracle) {
  for (int n = 1; n <= 4; ++n) {
    ConvexSplitInstance inst = pinned_instance(phi_ra(), half_identity(), n);
    SplitReport r = split_equality_check(inst);
    EXPECT_NEAR(r.q2_lhs.value(), 1.0 + 3.0 / n, 1e-10) << n;
    EXPECT_NEAR(r.q2_rhs.value(), 1.0 + 3.0 / n, 1e-12) << n;
    Matrix tau = oracle::convex_split_tau(inst.rho_ra.matrix(), 2, 2, inst.sigma_a.matrix(),
                                          std::vector<double>(n, 1.0 / n));
    const int dim = 2 << n;
    Matrix ref = Matrix::Identity(dim, dim) / dim;
    EXPECT_NEAR(std::exp2(oracle::log2_q2(tau, ref)), 1.0 + 3.0 / n, 1e-10) << n;
  }
  EXPECT_NEAR(split_equality_check(pinned_instance(phi_ra(), half_identity(), 2)).q2_lhs.value(), 2.5, 1e-10);
}

TEST(SplitEquality, ProductAndPointMassWeights) {
  oracle::Gen g(105);
  Matrix r = g.density(2), s = g.density(3), w = g.density(2);
  ConvexSplitInstance prod = pinned_instance(DensityOperator(oracle::kron(r, s), ra_layout(2, 3)), DensityOperator(s), 3);
  prod.omega_r = DensityOperator(w);
  SplitReport pr = split_equality_check(prod);
  const double qr = std::exp2(oracle::log2_q2(r, w));
  EXPECT_NEAR(pr.q2_lhs.value(), qr, 1e-10 * qr);
  EXPECT_NEAR(pr.q2_rhs.value(), qr, 1e-10 * qr);

  ConvexSplitInstance point = pinned_instance(DensityOperator(g.density(6), ra_layout(2, 3)), DensityOperator(g.density(3)), 3);
  point.weights = {1.0, 0.0, 0.0};
  SplitReport pt = split_equality_check(point);
  EXPECT_EQ(pt.t, 1.0);
  Matrix ref = oracle::kron(point.omega_r.matrix(), point.sigma_a.matrix());
  const double direct = std::exp2(oracle::log2_q2(point.rho_ra.matrix(), ref));
  EXPECT_NEAR(pt.q2_lhs.value(), direct, 1e-9 * direct);
  EXPECT_NEAR(pt.q2_rhs.value(), direct, 1e-9 * direct);
}

TEST(SplitEquality, SingleCopyReproducesCollisionDivergence) {
  oracle::Gen g(106);
  for (int trial = 0; trial < 20; ++trial) {
    DensityOperator rho(g.density(6, 1 + trial % 6), ra_layout(2, 3));
    DensityOperator s(g.density(3));
    SplitReport r = split_equality_check(pinned_instance(rho, s, 1));
    Matrix rr = oracle::partial_trace(rho.matrix(), {2, 3}, {true, false});
    EXPECT_NEAR(std::log2(r.q2_lhs.value()), oracle::log2_q2(rho.matrix(), oracle::kron(rr, s.matrix())), 1e-9);
  }
}

TEST(SplitEquality, ResidualOnRandomBatch) {
  oracle::Gen g(107);
  for (int trial = 0; trial < 200; ++trial) {
    SplitReport r = split_equality_check(random_instance(g, trial, 5));
    ASSERT_TRUE(r.q2_lhs.is_finite()) << trial;
    EXPECT_LE(r.residual, 1e-10 * std::max(1.0, r.q2_lhs.value())) << trial;
    EXPECT_DOUBLE_EQ(r.residual, std::abs(r.q2_lhs.value() - r.q2_rhs.value()));
    EXPECT_LE(r.mu, r.mu_max + 1e-9);
  }
}

TEST(SplitEquality, SupportViolationIsInfiniteOnBothSides) {
  Matrix pure0 = Matrix::Zero(2, 2);
  pure0(0, 0) = 1.0;
  ConvexSplitInstance inst = pinned_instance(phi_ra(), half_identity(), 2);
  inst.omega_r = DensityOperator(pure0);
  SplitReport r = split_equality_check(inst);
  EXPECT_TRUE(r.q2_lhs.is_infinite());
  EXPECT_TRUE(r.q2_rhs.is_infinite());
}

TEST(MuQuantities, ExamplesAndOrdering) {
  oracle::Gen g(108);
  Matrix r = g.density(2), s = g.density(2);
  MuQuantities p = mu_quantities(DensityOperator(oracle::kron(r, s), ra_layout(2, 2)), DensityOperator(s));
  EXPECT_NEAR(p.mu, 0.0, 1e-10);
  EXPECT_NEAR(p.mu_max, 0.0, 1e-8);

  MuQuantities phi = mu_quantities(phi_ra(), half_identity());
  EXPECT_NEAR(phi.mu, 3.0, 1e-10);
  EXPECT_NEAR(phi.mu_max, 3.0, 1e-8);

  for (int trial = 0; trial < 500; ++trial) {
    MuQuantities m = mu_quantities(DensityOperator(g.density(4), ra_layout(2, 2)), DensityOperator(g.density(2)));
    EXPECT_GE(m.mu, -1e-12);
    EXPECT_LE(m.mu, m.mu_max + 1e-9) << trial;
  }
}

TEST(NuN, ProductIsOne) {
  oracle::Gen g(109);
  Matrix r = g.density(2), s = g.density(2);
  NuResult nu = nu_n(DensityOperator(oracle::kron(r, s), ra_layout(2, 2)), DensityOperator(s), 3);
  EXPECT_NEAR(nu.value, 1.0, 1e-8);
  EXPECT_LE((nu.omega - r).norm(), 1e-3);
}

TEST(NuN, PhiAgainstRandomSearch) {
  oracle::Gen g(110);
  DensityOperator phi = phi_ra();
  DensityOperator s = half_identity();
  NuResult nu = nu_n(phi, s, 3);
  EXPECT_LE(nu.value, 2.0 + 1e-7);
  auto objective = [&](const Matrix& w) {
    Matrix rr = Matrix::Identity(2, 2) / 2.0;
    return (2.0 / 3.0) * std::exp2(oracle::log2_q2(rr, w)) +
           (1.0 / 3.0) * std::exp2(oracle::log2_q2(phi.matrix(), oracle::kron(w, s.matrix())));
  };
  double search = oracle::random_search_min(objective, 2, 50000, g);
  // Local stages in the Bloch ball around the best point so far.
  const Complex i(0.0, 1.0);
  auto state = [&](double x, double y, double z) {
    Matrix m(2, 2);
    m << 1.0 + z, x - i * y, x + i * y, 1.0 - z;
    return Matrix(0.5 * m);
  };
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double bx = 0.0, by = 0.0, bz = 0.0;
  search = std::min(search, objective(state(0, 0, 0)));
  for (int k = 0; k < 50000; ++k) {
    const double x = u(g.eng), y = u(g.eng), z = u(g.eng);
    if (x * x + y * y + z * z >= 0.999) continue;
    const double v = objective(state(x, y, z));
    if (v < search) search = v, bx = x, by = y, bz = z;
  }
  for (double radius : {0.05, 0.01, 0.002}) {
    const double cx = bx, cy = by, cz = bz;
    for (int k = 0; k < 5000; ++k) {
      const double x = cx + radius * u(g.eng), y = cy + radius * u(g.eng), z = cz + radius * u(g.eng);
      if (x * x + y * y + z * z >= 0.999) continue;
      const double v = objective(state(x, y, z));
      if (v < search) search = v, bx = x, by = y, bz = z;
    }
  }
  EXPECT_LE(nu.value, search + 1e-9);
  EXPECT_NEAR(nu.value, search, 1e-4);
}

TEST(NuN, AtLeastOneAndBelowEnvelope) {
  oracle::Gen g(111);
  OptimizerOptions o;
  o.restarts = 4;
  for (int trial = 0; trial < 30; ++trial) {
    DensityOperator rho(g.density(4, 1 + trial % 4), ra_layout(2, 2));
    DensityOperator s(g.density(2));
    const int n = 1 + trial % 5;
    NuResult nu = nu_n(rho, s, n, o);
    const double mu = mu_quantities(rho, s).mu;
    EXPECT_GE(nu.value, 1.0 - 1e-9) << trial;
    EXPECT_LE(nu.value, 1.0 + mu / n + 1e-7) << trial;
    EXPECT_NEAR(nu_objective(rho, s, n, nu.omega), nu.value, 1e-9);
  }
}

TEST(BoundsReport, ProductIsTightAtZero) {
  oracle::Gen g(112);
  Matrix r = g.density(2), s = g.density(3);
  OptimizerOptions o;
  o.restarts = 2;
  SplitReport rep = bounds_report(pinned_instance(DensityOperator(oracle::kron(r, s), ra_layout(2, 3)), DensityOperator(s), 2), o);
  EXPECT_NEAR(rep.d_umegaki, 0.0, 1e-9);
  EXPECT_NEAR(rep.trace_distance, 0.0, 1e-9);
  EXPECT_NEAR(rep.p_squared, 0.0, 1e-9);
  for (const auto& [name, b] : rep.bounds) {
    // nu2 compares nu_n itself against 1 + mu/n.
    EXPECT_NEAR(b.rhs, name == "nu2" ? 1.0 : 0.0, 1e-6) << name;
    EXPECT_TRUE(b.holds()) << name;
  }
}

TEST(BoundsReport, PhiAtFourCopies) {
  SplitReport rep = bounds_report(pinned_instance(phi_ra(), half_identity(), 4));
  EXPECT_LE(rep.p_squared, 3.0 / 7.0 + 1e-10);
  EXPECT_NEAR(rep.bounds.at("pmu0").rhs, 3.0 / 7.0, 1e-12);
  EXPECT_LE(rep.p_squared, 1.0 - 1.0 / *rep.nu_n + 1e-8);
  // tau is Phi on some slot with I/2 elsewhere; its Q_2 against I/32 is 1 + 3/4.
  EXPECT_NEAR(rep.d2, std::log2(1.75), 1e-10);
}

TEST(BoundsReport, QuarterSqrtFailsForPhiSingleCopy) {
  // At n = 1, tau = Phi and 1/2 |Phi - I/4|_1 = 3/4 while 1/4 sqrt(3) < 1/2.
  SplitReport rep = bounds_report(pinned_instance(phi_ra(), half_identity(), 1));
  EXPECT_NEAR(rep.trace_distance, 0.75, 1e-12);
  const BoundReport& q = rep.bounds.at("quarter_sqrt");
  EXPECT_NEAR(q.rhs, 0.25 * std::sqrt(3.0), 1e-12);
  EXPECT_FALSE(q.holds());
  EXPECT_TRUE(rep.bounds.at("half_sqrt").holds());
}

TEST(BoundsReport, RandomBatchSlacks) {
  oracle::Gen g(113);
  OptimizerOptions o;
  o.restarts = 4;
  for (int trial = 0; trial < 40; ++trial) {
    const int dr = 2 + trial % 2, da = 2 + (trial / 2) % 2;
    DensityOperator rho(g.density(dr * da, 1 + trial % (dr * da)), ra_layout(dr, da));
    // Full-rank sigma keeps mu finite.
    SplitReport rep = bounds_report(pinned_instance(rho, DensityOperator(g.density(da)), 1 + trial % 5), o);
    for (const auto& [name, b] : rep.bounds) {
      if (name == "quarter_sqrt") continue;
      EXPECT_GE(b.slack, -1e-8) << trial << " " << name;
    }
    for (const auto& ly : rep.ly2024) EXPECT_TRUE(ly.report.holds()) << trial << " s=" << ly.s;
  }
}

TEST(Ly2024, UnitOrderAndCardinality) {
  ConvexSplitInstance phi = pinned_instance(phi_ra(), half_identity(), 16);
  EXPECT_EQ(spectrum_cardinality(Matrix::Identity(4, 4) / 4.0), 1);
  LyComparison c = ly2024_compare(phi, 1.0);
  EXPECT_EQ(c.ell, 1);
  // ell^1/n * 2^{D_2} with D_2(Phi||I/4) = 2.
  EXPECT_NEAR(c.ly_rhs, 4.0 / 16.0, 1e-10);
  EXPECT_NEAR(c.equality_rhs, std::log2(1.0 + 3.0 / 16.0), 1e-12);
  EXPECT_TRUE(std::isnan(c.crossover_log_n));
  EXPECT_TRUE(c.equality_tighter);
  // 2 * 2^16 exceeds the dense cap, so the lhs is left open.
  EXPECT_TRUE(std::isnan(c.lhs));
  EXPECT_EQ(c.report.status, Certification::Inconclusive);
  EXPECT_TRUE(ly2024_compare(pinned_instance(phi_ra(), half_identity(), 8), 1.0).report.holds());

  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 0.5;
  d(1, 1) = 0.25;
  d(2, 2) = 0.25 + 1e-12;
  EXPECT_EQ(spectrum_cardinality(d), 2);
  EXPECT_THROW(ly2024_compare(phi, 0.0), ContractViolation);
  EXPECT_THROW(ly2024_compare(phi, 1.5), ContractViolation);
}

TEST(Ly2024, PhiTableAndProduct) {
  for (int n : {1, 2, 4, 8, 16}) {
    ConvexSplitInstance phi = pinned_instance(phi_ra(), half_identity(), n);
    for (double s : {0.25, 0.5, 0.75}) {
      LyComparison c = ly2024_compare(phi, s);
      // D_{1+s}(Phi||I/4) = 2 for every order, so a_s = 2 s.
      EXPECT_NEAR(c.a_s, 2.0 * s, 1e-9);
      EXPECT_NEAR(c.ly_rhs, std::exp2(2.0 * s) / (s * std::pow(n, s)), 1e-8);
      if (n < 16) EXPECT_LE(c.lhs, std::min(c.ly_rhs, c.equality_rhs) + 1e-8) << n << " " << s;
      EXPECT_EQ(c.equality_tighter, c.equality_rhs < c.ly_rhs);
    }
  }
  oracle::Gen g(114);
  Matrix r = g.density(2), s = g.density(2);
  LyComparison p = ly2024_compare(pinned_instance(DensityOperator(oracle::kron(r, s), ra_layout(2, 2)), DensityOperator(s), 4), 0.5);
  EXPECT_NEAR(p.lhs, 0.0, 1e-9);
  EXPECT_GE(p.ly_rhs, 0.0);
  EXPECT_GE(p.equality_rhs, -1e-12);
}

TEST(Properties, UniformWeightsMinimizeRhs) {
  oracle::Gen g(115);
  for (int inst = 0; inst < 5; ++inst) {
    ConvexSplitInstance u = pinned_instance(DensityOperator(g.density(4), ra_layout(2, 2)), DensityOperator(g.density(2)), 4);
    u.omega_r = DensityOperator(g.density(2));
    const double base = split_equality_check(u).q2_rhs.value();
    for (int k = 0; k < 100; ++k) {
      ConvexSplitInstance w = u;
      w.weights = g.simplex(4);
      EXPECT_LE(base, split_equality_check(w).q2_rhs.value() + 1e-12);
    }
  }
}

TEST(Properties, PurifiedDistanceNonIncreasingInN) {
  oracle::Gen g(116);
  OptimizerOptions o;
  o.restarts = 1;
  for (int inst = 0; inst < 8; ++inst) {
    DensityOperator rho(g.density(4, 1 + inst % 4), ra_layout(2, 2));
    DensityOperator s(g.density(2));
    double prev = 1.0;
    for (int n = 1; n <= 6; ++n) {
      const double p2 = bounds_report(pinned_instance(rho, s, n), o).p_squared;
      EXPECT_LE(p2, prev + 1e-10) << inst << " " << n;
      prev = p2;
    }
  }
}

TEST(Properties, CollisionDivergenceOfTauIsClosedForm) {
  oracle::Gen g(117);
  for (int trial = 0; trial < 40; ++trial) {
    const int dr = 2 + trial % 2, da = 2 + (trial / 2) % 2, n = 1 + trial % 4;
    DensityOperator rho(g.density(dr * da), ra_layout(dr, da));
    DensityOperator s(g.density(da));
    ConvexSplitInstance inst = pinned_instance(rho, s, n);
    Matrix tau = oracle::convex_split_tau(rho.matrix(), dr, da, s.matrix(), std::vector<double>(n, 1.0 / n));
    Matrix ref = oracle::partial_trace(rho.matrix(), {dr, da}, {true, false});
    for (int x = 0; x < n; ++x) ref = oracle::kron(ref, s.matrix());
    const double mu = mu_quantities(rho, s).mu;
    EXPECT_NEAR(std::exp2(oracle::log2_q2(tau, ref)), 1.0 + mu / n, 1e-9) << trial;
    (void)inst;
  }
}
