// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "csl/convexsplit.hpp"
#include "csl/divergences.hpp"
#include "csl/infomeasures.hpp"
#include "csl/optim.hpp"
#include "csl/protocols.hpp"
#include "csl/smoothing.hpp"
#include "csl/suites.hpp"
#include "oracles.hpp"

using namespace csl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failing checks and keeps the worst-case number for the summary.
struct Tally {
  long checks = 0;
  long failures = 0;
  std::string first;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      if (failures == 0) first = what;
      ++failures;
    }
  }
  Outcome outcome(const std::string& extra = "") const {
    std::ostringstream s;
    s << checks - failures << "/" << checks << " checks";
    if (!extra.empty()) s << "; " << extra;
    if (failures) s << "; first failure: " << first;
    return {failures == 0, s.str()};
  }
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RegisterLayout ra_layout(int dr, int da) { return RegisterLayout({{"R", dr}, {"A", da}}); }
RegisterLayout ab_layout(int da, int db) { return RegisterLayout({{"A", da}, {"B", db}}); }

Vector bell() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

DensityOperator phi_state(const RegisterLayout& l) { return DensityOperator(Matrix(bell() * bell().adjoint()), l); }

OptimizerOptions restarts(int r, std::uint64_t seed = 0) {
  OptimizerOptions o;
  o.restarts = r;
  o.seed = seed;
  return o;
}

Matrix diag(const std::vector<double>& p) { return DensityOperator::diagonal(p).matrix(); }

// 1. Split equality on random instances.
Outcome split_equality() {
  oracle::Gen g(1001);
  Tally t;
  double worst = 0.0;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int dr = 2 + i % 2, da = 2 + (i / 2) % 2, n = 1 + (i / 4) % 5;
    ConvexSplitInstance inst;
    inst.rho_ra = DensityOperator(g.density(dr * da, 1 + g.integer(0, dr * da - 1)), ra_layout(dr, da));
    inst.sigma_a = DensityOperator(g.density(da));
    inst.omega_r = i % 3 == 0 ? DensityOperator(oracle::partial_trace(inst.rho_ra.matrix(), {dr, da}, {true, false}))
                              : DensityOperator(g.density(dr));
    inst.n = n;
    if ((i / 8) % 2) inst.weights = g.simplex(n);
    SplitReport r = split_equality_check(inst);
    worst = std::max(worst, r.relative_residual);
    t.expect(r.q2_lhs.is_finite() && r.relative_residual <= 1e-10, "instance " + std::to_string(i));
    // Independent dense evaluation on the smaller instances.
    if (i % 20 == 0 && dr * std::pow(da, n) <= 256) {
      Matrix tau = oracle::convex_split_tau(inst.rho_ra.matrix(), dr, da, inst.sigma_a.matrix(), inst.resolved_weights());
      Matrix ref = inst.omega_r.matrix();
      for (int x = 0; x < n; ++x) ref = oracle::kron(ref, inst.sigma_a.matrix());
      const double lhs = std::exp2(oracle::log2_q2(tau, ref));
      t.expect(std::abs(lhs - r.q2_rhs.value()) <= 1e-9 * std::max(1.0, lhs), "oracle " + std::to_string(i));
    }
  }
  const double secs = seconds_since(t0);
  t.expect(secs <= 120.0, "runtime " + num(secs) + " s");
  return t.outcome("max relative residual " + num(worst) + ", " + num(secs) + " s");
}

// 2. Phi with sigma = omega = I/2 gives 1 + 3/n.
Outcome closed_instance() {
  Tally t;
  DensityOperator half(Matrix(Matrix::Identity(2, 2) / 2.0));
  for (int n = 1; n <= 4; ++n) {
    ConvexSplitInstance inst = pinned_instance(phi_state(ra_layout(2, 2)), half, n);
    Matrix tau = oracle::convex_split_tau(inst.rho_ra.matrix(), 2, 2, half.matrix(), std::vector<double>(n, 1.0 / n));
    const int dim = 2 << n;
    const double dense = std::exp2(oracle::log2_q2(tau, Matrix(Matrix::Identity(dim, dim) / dim)));
    const double lib = split_equality_check(inst).q2_lhs.value();
    const double expect = 1.0 + 3.0 / n;
    t.expect(std::abs(dense - expect) <= 1e-10, "oracle n=" + std::to_string(n));
    t.expect(std::abs(lib - expect) <= 1e-10, "library n=" + std::to_string(n));
  }
  return t.outcome();
}

// 3. Derived bounds, including the quarter trace-distance bound.
Outcome derived_bounds() {
  oracle::Gen g(1003);
  std::vector<ConvexSplitInstance> insts;
  DensityOperator half(Matrix(Matrix::Identity(2, 2) / 2.0));
  for (int n = 1; n <= 4; ++n) insts.push_back(pinned_instance(phi_state(ra_layout(2, 2)), half, n));
  for (int i = 0; i < 60; ++i) {
    const int dr = 2 + i % 2, da = 2 + (i / 2) % 2;
    DensityOperator rho(g.density(dr * da, 1 + i % (dr * da)), ra_layout(dr, da));
    insts.push_back(pinned_instance(rho, DensityOperator(g.density(da)), 1 + i % 5));
  }
  Tally t;
  long quarter_fail = 0, half_fail = 0;
  double worst_quarter = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < insts.size(); ++i) {
    SplitReport r = bounds_report(insts[i], restarts(8, i));
    const std::string id = "instance " + std::to_string(i);
    const double nu = *r.nu_n, n = insts[i].n;
    t.expect(r.p_squared <= 1.0 - 1.0 / nu + 1e-7, id + " split9");
    t.expect(1.0 - 1.0 / nu <= r.mu / (r.mu + n) + 1e-7, id + " nu2");
    t.expect(r.bounds.at("pmu0").slack >= -1e-7, id + " pmu0");
    t.expect(r.bounds.at("gmain0").slack >= -1e-8, id + " gmain0");
    t.expect(r.bounds.at("gmain8").holds(), id + " gmain8");
    t.expect(r.bounds.at("imp").slack >= -1e-8, id + " imp");
    const BoundReport& q = r.bounds.at("quarter_sqrt");
    worst_quarter = std::max(worst_quarter, -q.slack);
    quarter_fail += !q.holds();
    half_fail += !r.bounds.at("half_sqrt").holds();
    t.expect(q.holds(), id + " quarter_sqrt: " + num(q.lhs) + " > " + num(q.rhs));
  }
  return t.outcome("quarter_sqrt violated on " + std::to_string(quarter_fail) + "/" + std::to_string(insts.size()) +
                   " (worst excess " + num(worst_quarter) + "), half_sqrt violated on " + std::to_string(half_fail));
}

// 4. Collision-divergence inequalities, classical tightness, direct sum.
Outcome collision_inequalities() {
  oracle::Gen g(1004);
  Tally t;
  for (int i = 0; i < 10000; ++i) {
    const int dim = 2 + i % 3;
    Matrix r = g.density(dim, 1 + g.integer(0, dim - 1)), s = g.density(dim);
    const double v = d2(r, s).value();
    const double l1 = oracle::trace_norm(r - s);
    const double f = oracle::fidelity(r, s);
    t.expect(v - std::log2(1.0 + l1 * l1) >= -1e-9, "a6 trace form, pair " + std::to_string(i));
    t.expect(v + std::log2(f * f) >= -1e-9, "a6 fidelity form, pair " + std::to_string(i));
  }

  // min D_2(p||q) subject to |p - q|_1 = eps, parametrized by a unit vector:
  // the first half gives p, the second half a zero-sum direction.
  std::string tight;
  for (int dim : {2, 3, 4}) {
    for (double eps : {0.25, 0.5, 1.0}) {
      auto split = [&](const Vector& v, std::vector<double>& p, std::vector<double>& q) {
        double norm = 0.0;
        for (int k = 0; k < dim; ++k) norm += std::norm(v(k));
        std::vector<double> w(dim);
        double mean = 0.0;
        for (int k = 0; k < dim; ++k) mean += (w[k] = std::norm(v(dim + k))) / dim;
        double l1 = 0.0;
        for (double& x : w) l1 += std::abs(x -= mean);
        p.assign(dim, 0.0);
        q.assign(dim, 0.0);
        if (norm <= 0.0 || l1 <= 0.0) return false;
        for (int k = 0; k < dim; ++k) {
          p[k] = std::norm(v(k)) / norm;
          q[k] = p[k] + eps * w[k] / l1;
          if (q[k] < 0.0) return false;
        }
        return true;
      };
      auto objective = [&](const Vector& v) {
        std::vector<double> p, q;
        if (!split(v, p, q)) return -1e3;
        double chi = 0.0;
        for (int k = 0; k < dim; ++k) {
          if (q[k] <= 0.0) return p[k] > 0.0 ? -1e3 : chi;
          chi += (p[k] - q[k]) * (p[k] - q[k]) / q[k];
        }
        return -std::log2(1.0 + chi);
      };
      OptimizerReport rep = maximize_over_pure(objective, 2 * dim, restarts(32, 7 * dim));
      std::vector<double> p, q;
      const bool ok = split(rep.argvec, p, q);
      double l1 = 0.0;
      for (int k = 0; k < dim; ++k) l1 += std::abs(p[k] - q[k]);
      const double achieved = d2(diag(p), diag(q)).value();
      const double target = std::log2(1.0 + eps * eps);
      const std::string id = "tightness d=" + std::to_string(dim) + " eps=" + num(eps);
      t.expect(ok && std::abs(l1 - eps) <= 1e-12, id + " constraint");
      t.expect(std::abs(achieved - target) <= 1e-4, id + ": " + num(achieved) + " vs " + num(target));
      t.expect(achieved >= target - 1e-9, id + " below bound");
    }
  }

  double worst = 0.0, worst_rel = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int k = 2 + i % 3, d = 2 + (i / 3) % 2;
    std::vector<double> p = g.simplex(k);
    std::vector<Matrix> rs, ss;
    for (int x = 0; x < k; ++x) rs.push_back(g.density(d)), ss.push_back(g.density(d));
    Matrix rb = Matrix::Zero(k * d, k * d), sb = rb;
    for (int x = 0; x < k; ++x) {
      rb.block(x * d, x * d, d, d) = p[x] * rs[x];
      sb.block(x * d, x * d, d, d) = p[x] * ss[x];
    }
    for (double a : {0.5, 2.0}) {
      double sum = 0.0;
      for (int x = 0; x < k; ++x) sum += p[x] * q_alpha(rs[x], ss[x], a).value();
      const double res = std::abs(q_alpha(rb, sb, a).value() - sum);
      worst = std::max(worst, res);
      worst_rel = std::max(worst_rel, res / sum);
      t.expect(res <= 1e-10, "direct sum " + std::to_string(i) + " alpha=" + num(a) + ": Q " + num(sum) + ", residual " +
                                 num(res));
    }
  }
  return t.outcome("direct-sum residual " + num(worst) + " (relative " + num(worst_rel) + ")");
}

// 5. Hypothesis-testing divergence.
Outcome hypothesis_testing() {
  oracle::Gen g(1005);
  Tally t;
  for (int i = 0; i < 500; ++i) {
    const int dim = 2 + i % 4;
    std::vector<double> p = g.simplex(dim), q = g.simplex(dim);
    const double eps = g.uniform(0.01, 0.9);
    const double ref = -std::log2(oracle::classical_type2(p, q, eps));
    t.expect(std::abs(d_min_eps(diag(p), diag(q), eps).value() - ref) <= 1e-9, "classical " + std::to_string(i));
  }
  for (int i = 0; i < 500; ++i) {
    const int dim = 2 + i % 3;
    Matrix r = g.density(dim, 1 + i % dim), s = g.density(dim);
    for (double eps : {0.05, 0.2, 0.5}) {
      const double h = d_min_eps(r, s, eps).value();
      for (double a : {0.3, 0.6, 0.9})
        t.expect(h - htd_lower_rhs(d_alpha(r, s, a).value(), a, eps) >= -1e-8, "htda " + std::to_string(i));
      for (double b : {1.5, 2.0, 4.0})
        t.expect(htd_upper_rhs(d_alpha(r, s, b).value(), b, eps) - h >= -1e-8, "betab " + std::to_string(i));
    }
  }
  return t.outcome();
}

// 6. State-splitting protocol.
Outcome state_splitting() {
  Tally t;
  auto t0 = std::chrono::steady_clock::now();
  QSSInstance phi;
  phi.psi = PureStateVector(bell(), RegisterLayout({{"R", 2}, {"Ap", 2}}));
  phi.eps = 0.6;
  phi.delta = 0.5;
  QSSResult r = qss_simulate(phi, restarts(8));
  t.expect(r.n == 9, "Phi n = " + std::to_string(r.n));
  t.expect(std::abs(r.cost_bits - 0.5 * std::log2(9.0)) <= 1e-12 && r.cost_bits <= 2.0, "Phi cost");
  t.expect(r.achieved_distance <= 0.5 + 1e-7, "Phi distance " + num(r.achieved_distance));

  oracle::Gen g(1006);
  long capped = 0;
  for (int i = 0; i < 50; ++i) {
    QSSInstance q;
    q.psi = PureStateVector(g.unit_vector(4), RegisterLayout({{"R", 2}, {"Ap", 2}}));
    q.delta = i % 2 ? 0.6 : 0.4;
    q.eps = 0.7;
    QSSResult s = qss_simulate(q, restarts(4, i));
    capped += s.n_capped;
    t.expect(s.achieved_distance <= s.distance_envelope + 1e-7, "instance " + std::to_string(i));
    t.expect(std::abs(s.probability_sum - 1.0) <= 1e-9, "branch probabilities " + std::to_string(i));
  }
  const double secs = seconds_since(t0);
  t.expect(secs <= 300.0, "runtime " + num(secs) + " s");
  return t.outcome("Phi cost " + num(r.cost_bits) + " bits, distance " + num(r.achieved_distance) + "; " +
                   std::to_string(capped) + " runs capped; " + num(secs) + " s");
}

// 7. Uhlmann isometry.
Outcome uhlmann() {
  oracle::Gen g(1007);
  Tally t;
  for (int i = 0; i < 500; ++i) {
    const int ds = 2, dl_s = 2 + i % 2, dl_t = dl_s + (i / 2) % 2;
    Vector tv = g.unit_vector(ds * dl_t), sv = g.unit_vector(ds * dl_s);
    UhlmannResult u = uhlmann_isometry(PureStateVector(tv, RegisterLayout({{"S", ds}, {"T", dl_t}})),
                                       PureStateVector(sv, RegisterLayout({{"S", ds}, {"U", dl_s}})), {"S"});
    Matrix rt = oracle::partial_trace(tv * tv.adjoint(), {ds, dl_t}, {true, false});
    Matrix rs = oracle::partial_trace(sv * sv.adjoint(), {ds, dl_s}, {true, false});
    t.expect(std::abs(u.overlap - oracle::fidelity(rt, rs)) <= 1e-8, "fidelity " + std::to_string(i));
    bool beaten = false;
    for (int k = 0; k < 200; ++k) {
      Matrix v = g.unitary(dl_t).leftCols(dl_s);
      const double o = std::abs(tv.dot(oracle::kron(Matrix::Identity(ds, ds), v) * sv));
      beaten = beaten || o > u.overlap + 1e-8;
    }
    t.expect(!beaten, "Haar isometry beats pair " + std::to_string(i));
  }
  return t.outcome();
}

// 8. Universal bound: chain steps and final certification.
Outcome universal_bound() {
  oracle::Gen g(1008);
  Tally t;
  const std::vector<double> alphas{0.3, 0.5, 0.9}, betas{1.5, 2.0, 4.0}, epss{0.05, 0.1, 0.3};
  long certified = 0, total = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    const int db = 2 + i % 2;
    DensityOperator rho(g.density(2 * db, 1 + g.integer(0, 2 * db - 1)), ab_layout(2, db));
    const OptimizerOptions o = restarts(2, i);
    ChainContext ctx = make_chain_context(rho, betas, o);
    std::vector<ImaxCandidate> cands = imax_smoothing_candidates(rho);
    for (double a : alphas)
      for (double b : betas)
        for (double e : epss) {
          ChainReport c = uab_chain_verify(rho, a, b, e, o, {}, &ctx);
          const std::string id = "state " + std::to_string(i) + " (" + num(a) + "," + num(b) + "," + num(e) + ")";
          t.expect(c.all_pass, id + " step " + c.failed_step);
          const bool ok = best_imax_candidate(cands, e).value_bits <= c.universal_rhs + 1e-7;
          certified += ok;
          ++total;
          t.expect(ok, id + " certification");
        }
  }
  return t.outcome("certified " + std::to_string(certified) + "/" + std::to_string(total) + ", " +
                   num(seconds_since(t0)) + " s");
}

// 9. I_max exact values.
Outcome imax_values() {
  oracle::Gen g(1009);
  Tally t;
  Matrix cl = Matrix::Zero(4, 4);
  cl(0, 0) = cl(3, 3) = 0.5;
  const std::vector<std::pair<DensityOperator, double>> cases{
      {DensityOperator(oracle::kron(g.density(2), g.density(2)), ab_layout(2, 2)), 0.0},
      {phi_state(ab_layout(2, 2)), 2.0},
      {DensityOperator(cl, ab_layout(2, 2)), 1.0}};
  const char* names[] = {"product", "maximally entangled", "classical bit"};
  for (std::size_t k = 0; k < cases.size(); ++k) {
    ImaxResult r = imax_sdp(cases[k].first);
    t.expect(std::abs(r.value_bits - cases[k].second) <= 1e-6, std::string(names[k]) + " " + num(r.value_bits));
    t.expect(r.feasibility_residual >= -1e-7, std::string(names[k]) + " residual " + num(r.feasibility_residual));
  }
  return t.outcome();
}

// 10. Reverse-Shannon bound.
Outcome reverse_shannon() {
  Tally t;
  struct P {
    double a, b, e;
    int n, d;
  };
  const std::vector<P> grid{{0.5, 2.0, 0.1, 10, 2},  {0.3, 1.5, 0.05, 1, 2}, {0.9, 1.1, 0.2, 100, 2},
                            {0.5, 3.0, 0.01, 1000, 3}, {0.7, 2.0, 0.3, 4096, 2}, {0.1, 4.0, 0.5, 2, 2},
                            {0.6, 1.2, 0.15, 50, 3},   {0.95, 1.05, 0.1, 64, 2}, {0.4, 2.5, 0.02, 7, 4},
                            {0.8, 1.8, 0.4, 100000, 2}};
  for (const P& p : grid) {
    const double lib = reverse_shannon_delta_n(p.a, p.b, p.e, p.n, p.d);
    const double ref = static_cast<double>(oracle::delta_n(p.a, p.b, p.e, p.n, p.d));
    t.expect(std::abs(lib - ref) <= 1e-10 * std::max(1.0, std::abs(ref)), "delta_n n=" + std::to_string(p.n));
  }
  std::string values;
  for (auto [a, b] : {std::pair{0.9, 1.1}, std::pair{0.95, 1.05}, std::pair{0.99, 1.01}}) {
    const double v = channel_alpha_beta_info(identity_channel(2), a, b, restarts(4)).value;
    values += (values.empty() ? "" : ", ") + num(v);
    t.expect(std::abs(v - 2.0) <= 5e-3, "I(" + num(a) + "," + num(b) + ") = " + num(v));
  }
  return t.outcome("identity channel I_{a,b}: " + values);
}

// 11. Every suite twice with identical config and seed.
Outcome determinism() {
  Tally t;
  const fs::path root = fs::temp_directory_path() / "csl_acceptance_determinism";
  fs::remove_all(root);
  for (SuiteKind k : {SuiteKind::ConvexSplit, SuiteKind::Uab, SuiteKind::Qss, SuiteKind::Bounds,
                      SuiteKind::Divergence, SuiteKind::RevShannon}) {
    std::vector<std::string> families{"uab"};
    if (k == SuiteKind::Bounds) families = {"uab", "htd", "a6", "rld"};
    for (const std::string& fam : families) {
      std::vector<std::string> bytes;
      for (const char* run : {"a", "b"}) {
        SuiteConfig c;
        c.suite = k;
        c.family = fam;
        c.samples = 3;
        c.seed = 11;
        c.restarts = 2;
        c.output_dir = (root / (suite_name(k) + "_" + fam) / run).string();
        RunOutcome o = run_suite(c);
        t.expect(o.exit_code != 2, suite_name(k) + " config: " + o.error);
        std::string all;
        for (const auto& p : {o.csv_path, o.summary_path, o.failures_path}) {
          std::ifstream in(p, std::ios::binary);
          std::stringstream ss;
          ss << in.rdbuf();
          all += ss.str();
        }
        bytes.push_back(all);
      }
      t.expect(!bytes[0].empty() && bytes[0] == bytes[1], suite_name(k) + "/" + fam + " outputs differ");
    }
  }
  fs::remove_all(root);
  return t.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"split equality residual", split_equality},
      {"closed Phi instance 1 + 3/n", closed_instance},
      {"derived bounds", derived_bounds},
      {"collision-divergence inequalities", collision_inequalities},
      {"hypothesis-testing divergence", hypothesis_testing},
      {"state-splitting protocol", state_splitting},
      {"Uhlmann isometry", uhlmann},
      {"universal bound chain", universal_bound},
      {"I_max exact values", imax_values},
      {"reverse-Shannon bound", reverse_shannon},
      {"suite determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
