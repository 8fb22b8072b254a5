#include "csl/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "csl/convexsplit.hpp"
#include "csl/divergences.hpp"
#include "csl/infomeasures.hpp"
#include "csl/protocols.hpp"
#include "csl/smoothing.hpp"
#include "csl/state_io.hpp"

namespace csl {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<double> kUabAlphas{0.3, 0.5, 0.9};
const std::vector<double> kUabBetas{1.5, 2.0, 4.0};
const std::vector<double> kUabEps{0.05, 0.1, 0.3};
const std::vector<double> kHtdAlphas{0.3, 0.6, 0.9};
const std::vector<double> kHtdBetas{1.5, 2.0, 4.0};
const std::vector<double> kHtdEps{0.05, 0.2, 0.5};
const std::vector<double> kDivergenceAlphas{0.1, 0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 5.0, kInf};
const std::vector<double> kQssDeltas{0.4, 0.6};
const std::vector<double> kRevAlphas{0.5, 0.9, 0.95, 0.99};
const std::vector<double> kRevBetas{2.0, 1.1, 1.05, 1.01};

const std::vector<double>& or_default(const std::vector<double>& v, const std::vector<double>& d) {
  return v.empty() ? d : v;
}

std::string flag(bool b) { return b ? "1" : "0"; }

// Row bookkeeping: every hard check contributes lhs - rhs - tol.
struct Checks {
  SuiteRow row;
  void add(const std::string& name, double excess) {
    if (std::isnan(excess)) excess = kInf;
    row.violation = std::max(row.violation, excess);
    if (excess > 0.0 && row.pass) {
      row.pass = false;
      row.failure = name;
    }
  }
  void add(const BoundReport& b) { add(b.name, -b.slack - b.tol); }
};

Checks start_checks() {
  Checks c;
  c.row.violation = -kInf;
  return c;
}

using Task = std::function<std::vector<SuiteRow>(std::size_t)>;

struct Plan {
  std::string default_csv;
  std::vector<std::string> header;
  std::size_t tasks = 0;
  Task run;
};

OptimizerOptions optimizer_for(const SuiteConfig& c, std::size_t index) {
  OptimizerOptions o;
  o.restarts = c.restarts;
  o.seed = *c.seed + index;
  return o;
}

RegisterLayout two_party(int da, int db, const std::string& a = "A", const std::string& b = "B") {
  return RegisterLayout({{a, da}, {b, db}});
}

// ---------------------------------------------------------------- convex split

Plan convex_split_plan(const SuiteConfig& c) {
  Plan p;
  p.default_csv = "split.csv";
  p.header = {"instance_id", "n", "t", "q2_lhs", "q2_rhs", "residual", "mu", "mu_max", "nu_n",
              "slack_gmain0", "slack_split9", "slack_pmu0", "ly2024_tighter", "slack_quarter_sqrt",
              "violation", "pass"};
  p.tasks = static_cast<std::size_t>(c.samples);
  const double eq_tol = c.tolerance("equality");
  p.run = [c, eq_tol](std::size_t i) {
    Rng rng = derive_rng(*c.seed, i);
    std::uniform_int_distribution<int> pick23(2, 3);
    const int dr = c.dims.size() == 2 ? c.dims[0] : pick23(rng);
    const int da = c.dims.size() == 2 ? c.dims[1] : pick23(rng);
    int n = std::uniform_int_distribution<int>(1, c.n_max)(rng);
    while (n > 1 && static_cast<double>(dr) * std::pow(static_cast<double>(da), n) > kTauDimCap) --n;
    RegisterLayout l = two_party(dr, da, "R", "A");
    const int rank = std::uniform_int_distribution<int>(1, dr * da)(rng);
    ConvexSplitInstance inst;
    inst.rho_ra = sample_rank_limited(l, rank, rng);
    inst.sigma_a = sample_mixed(RegisterLayout({{"A", da}}), rng);
    inst.n = n;
    // Alternate omega = rho^R / random omega and uniform / random weights.
    if (i % 2 == 0) {
      inst.omega_r = partial_trace(inst.rho_ra, {"R"});
    } else {
      inst.omega_r = sample_mixed(RegisterLayout({{"R", dr}}), rng);
    }
    if ((i / 2) % 2 == 1) inst.weights = random_simplex(n, rng);

    SplitReport rep = bounds_report(inst, optimizer_for(c, i));
    Checks ch = start_checks();
    ch.add("equality", rep.relative_residual - eq_tol);
    for (const auto& [name, b] : rep.bounds) {
      if (name == "quarter_sqrt") continue;  // reported, known not to hold in general
      ch.add(b);
    }
    bool tighter = !rep.ly2024.empty();
    for (const auto& ly : rep.ly2024) {
      ch.add(ly.report);
      tighter = tighter && ly.equality_tighter;
    }
    auto slack = [&](const std::string& k) { return format_number(rep.bounds.at(k).slack); };
    ch.row.cells = {std::to_string(i), std::to_string(n), format_number(rep.t), to_string(rep.q2_lhs),
                    to_string(rep.q2_rhs), format_number(rep.residual), format_number(rep.mu),
                    format_number(rep.mu_max), format_number(rep.nu_n.value_or(kNaN)), slack("gmain0"),
                    slack("split9"), slack("pmu0"), flag(tighter), slack("quarter_sqrt"),
                    format_number(ch.row.violation), flag(ch.row.pass)};
    return std::vector<SuiteRow>{ch.row};
  };
  return p;
}

// ------------------------------------------------------------------ uab chain

std::vector<int> uab_dims(const SuiteConfig& c, std::size_t i) {
  if (c.dims.size() == 2) return c.dims;
  return i % 2 == 0 ? std::vector<int>{2, 2} : std::vector<int>{2, 3};
}

Plan uab_plan(const SuiteConfig& c) {
  Plan p;
  p.default_csv = "chain.csv";
  p.header = {"instance_id", "alpha", "beta", "eps", "m", "delta", "eps1"};
  for (const char* s : {"ball_membership", "lambda_min_vs_renyi", "imax_lemma", "universal_bound"}) {
    p.header.push_back(std::string(s) + "_lhs");
    p.header.push_back(std::string(s) + "_rhs");
    p.header.push_back(std::string(s) + "_pass");
  }
  for (const char* s : {"all_pass", "failed_step", "violation"}) p.header.emplace_back(s);
  p.tasks = static_cast<std::size_t>(c.samples);
  p.run = [c](std::size_t i) {
    Rng rng = derive_rng(*c.seed, i);
    auto d = uab_dims(c, i);
    DensityOperator rho = sample_mixed(two_party(d[0], d[1]), rng);
    const auto& alphas = or_default(c.alphas, kUabAlphas);
    const auto& betas = or_default(c.betas, kUabBetas);
    const auto& epss = or_default(c.epsilons, kUabEps);
    OptimizerOptions opts = optimizer_for(c, i);
    ChainContext ctx = make_chain_context(rho, betas, opts);
    std::vector<SuiteRow> rows;
    for (double a : alphas) {
      for (double b : betas) {
        for (double e : epss) {
          ChainReport r = uab_chain_verify(rho, a, b, e, opts, {}, &ctx);
          Checks ch = start_checks();
          std::vector<std::string> cells{std::to_string(i), format_number(a), format_number(b), format_number(e),
                                         std::to_string(r.m), format_number(r.delta), format_number(r.eps1)};
          for (const auto& s : r.steps) {
            ch.add(s.name, s.lhs - s.rhs - s.tol);
            cells.push_back(format_number(s.lhs));
            cells.push_back(format_number(s.rhs));
            cells.push_back(flag(s.pass));
          }
          ch.row.certified = r.steps[3].pass;
          cells.push_back(flag(r.all_pass));
          cells.push_back(r.failed_step);
          cells.push_back(format_number(ch.row.violation));
          ch.row.cells = std::move(cells);
          rows.push_back(std::move(ch.row));
        }
      }
    }
    return rows;
  };
  return p;
}

// --------------------------------------------------------------------- bounds

std::pair<DensityOperator, DensityOperator> random_pair(const SuiteConfig& c, std::size_t i, Rng& rng) {
  int d = 0;
  if (c.dims.size() == 1) {
    d = c.dims[0];
  } else if (c.dims.size() == 2) {
    d = c.dims[0] * c.dims[1];
  } else {
    d = std::uniform_int_distribution<int>(2, 4)(rng);
  }
  RegisterLayout l({{"S", d}});
  DensityOperator rho = i % 3 == 2 ? sample_rank_limited(l, std::max(1, d - 1), rng) : sample_mixed(l, rng);
  DensityOperator sigma = sample_mixed(l, rng);
  return {rho, sigma};
}

Plan bounds_plan(const SuiteConfig& c) {
  Plan p;
  p.tasks = static_cast<std::size_t>(c.samples);
  const double tol = c.tolerance("bound");
  if (c.family == "uab") {
    p.default_csv = "uab.csv";
    p.header = {"instance_id", "alpha", "beta", "eps", "imax_upper", "rhs", "slack", "certified"};
    p.run = [c, tol](std::size_t i) {
      Rng rng = derive_rng(*c.seed, i);
      auto d = uab_dims(c, i);
      DensityOperator rho = sample_mixed(two_party(d[0], d[1]), rng);
      const auto& alphas = or_default(c.alphas, kUabAlphas);
      const auto& betas = or_default(c.betas, kUabBetas);
      const auto& epss = or_default(c.epsilons, kUabEps);
      OptimizerOptions opts = optimizer_for(c, i);
      ChainContext ctx = make_chain_context(rho, betas, opts);
      auto cands = imax_smoothing_candidates(rho);
      Matrix ra = partial_trace(rho.matrix(), rho.layout(), {"A"});
      std::vector<SuiteRow> rows;
      for (double a : alphas) {
        const double ha = renyi_entropy(ra, a);
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
          for (double e : epss) {
            const double rhs = ha - ctx.h_up[bi].second + universal_f(a, betas[bi], e);
            const double lhs = best_imax_candidate(cands, e).value_bits;
            Checks ch = start_checks();
            ch.add("universal_bound", lhs - rhs - tol);
            ch.row.certified = ch.row.pass;
            ch.row.cells = {std::to_string(i), format_number(a),   format_number(betas[bi]),
                            format_number(e),  format_number(lhs), format_number(rhs),
                            format_number(rhs - lhs), flag(ch.row.pass)};
            rows.push_back(std::move(ch.row));
          }
        }
      }
      return rows;
    };
    return p;
  }

  p.header = {"instance_id", "bound", "alpha", "beta", "eps", "lhs", "rhs", "slack", "certified"};
  auto row = [](std::size_t i, const std::string& bound, double a, double b, double e, double lhs, double rhs,
                double tol, bool hard) {
    Checks ch = start_checks();
    const bool ok = lhs <= rhs + tol;
    if (hard) ch.add(bound, lhs - rhs - tol);
    ch.row.certified = ok;
    auto opt = [](double x) { return std::isnan(x) ? std::string() : format_number(x); };
    ch.row.cells = {std::to_string(i), bound, opt(a), opt(b), opt(e), format_number(lhs), format_number(rhs),
                    format_number(rhs - lhs), flag(ok)};
    if (!hard) ch.row.violation = std::min(0.0, lhs - rhs - tol);
    return ch.row;
  };

  if (c.family == "htd") {
    p.default_csv = "htd.csv";
    p.run = [c, tol, row](std::size_t i) {
      Rng rng = derive_rng(*c.seed, i);
      auto [rho, sigma] = random_pair(c, i, rng);
      std::vector<SuiteRow> rows;
      const auto& epss = or_default(c.epsilons, kHtdEps);
      for (double e : epss) {
        const double dmin = d_min_eps(rho, sigma, e).value();
        for (double a : or_default(c.alphas, kHtdAlphas)) {
          const double lower = htd_lower_rhs(d_alpha(rho, sigma, a).value(), a, e);
          rows.push_back(row(i, "htda", a, kNaN, e, lower, dmin, tol, true));
        }
        for (double b : or_default(c.betas, kHtdBetas)) {
          const double upper = htd_upper_rhs(d_alpha(rho, sigma, b).value(), b, e);
          rows.push_back(row(i, "betab", kNaN, b, e, dmin, upper, tol, true));
        }
      }
      return rows;
    };
  } else if (c.family == "a6") {
    p.default_csv = "a6.csv";
    p.run = [c, tol, row](std::size_t i) {
      Rng rng = derive_rng(*c.seed, i);
      auto [rho, sigma] = random_pair(c, i, rng);
      const double d2v = d2(rho, sigma).value();
      const double t = 2.0 * trace_distance(rho, sigma);
      const double pd = purified_distance(rho, sigma);
      return std::vector<SuiteRow>{
          row(i, "a6_trace_norm", kNaN, kNaN, kNaN, std::log2(1.0 + t * t), d2v, tol, true),
          row(i, "a6_purified", kNaN, kNaN, kNaN, -std::log2(std::max(0.0, 1.0 - pd * pd)), d2v, tol, true)};
    };
  } else {
    p.default_csv = "rld.csv";
    p.run = [c, row](std::size_t i) {
      Rng rng = derive_rng(*c.seed, i);
      auto [rho, sigma] = random_pair(c, i, rng);
      std::vector<SuiteRow> rows;
      for (double b : or_default(c.betas, kUabBetas)) {
        for (double e : or_default(c.epsilons, kUabEps)) {
          BoundReport r = check_rld_bound(rho, sigma, e, b);
          // One-sided: a miss is inconclusive, not a failure.
          rows.push_back(row(i, r.name, kNaN, b, e, r.lhs, r.rhs, r.tol, false));
        }
      }
      return rows;
    };
  }
  return p;
}

// ------------------------------------------------------------------------ qss

Plan qss_plan(const SuiteConfig& c) {
  Plan p;
  p.default_csv = "qss.csv";
  p.header = {"instance_id", "eps", "delta", "mu", "i2_bits", "n", "n_required", "n_capped", "cost_bits",
              "term_bound", "fidelity", "step2_distance", "achieved_distance", "distance_envelope",
              "probability_sum", "junk_mass", "delta_met", "bound_ok", "violation"};
  p.tasks = static_cast<std::size_t>(c.samples);
  const double tol = c.tolerance("bound");
  const double ptol = c.tolerance("probability");
  p.run = [c, tol, ptol](std::size_t i) {
    Rng rng = derive_rng(*c.seed, i);
    const auto& deltas = or_default(c.deltas, kQssDeltas);
    const double delta = deltas[i % deltas.size()];
    const double eps = c.epsilons.empty() ? std::min(0.99, delta + 0.1) : c.epsilons[0];
    std::vector<int> d = c.dims.empty() ? std::vector<int>{2, 2} : c.dims;
    std::vector<Register> regs{{"R", d[0]}};
    if (d.size() == 3) regs.push_back({"A", d[1]});
    regs.push_back({"Ap", d.back()});
    QSSInstance inst{sample_pure(RegisterLayout(regs), rng), eps, delta};
    QSSResult r = qss_simulate(inst, optimizer_for(c, i));
    Checks ch = start_checks();
    ch.add("distance_envelope", r.achieved_distance - r.distance_envelope - tol);
    ch.add("term_bound", r.cost_bits - r.term_bound - tol);
    ch.add("probability_sum", std::abs(r.probability_sum - 1.0) - ptol);
    ch.row.cells = {std::to_string(i),
                    format_number(eps),
                    format_number(delta),
                    format_number(r.mu),
                    format_number(r.i2_bits),
                    std::to_string(r.n),
                    std::to_string(r.n_required),
                    flag(r.n_capped),
                    format_number(r.cost_bits),
                    format_number(r.term_bound),
                    format_number(r.fidelity),
                    format_number(r.step2_distance),
                    format_number(r.achieved_distance),
                    format_number(r.distance_envelope),
                    format_number(r.probability_sum),
                    format_number(r.junk_mass),
                    flag(r.delta_met),
                    flag(r.bound_ok),
                    format_number(ch.row.violation)};
    return std::vector<SuiteRow>{ch.row};
  };
  return p;
}

// ----------------------------------------------------------------- divergence

// a >= b with inf >= inf.
double excess_below(double a, double b) {
  if (a == b) return 0.0;
  return b - a;
}

Plan divergence_plan(const SuiteConfig& c) {
  Plan p;
  p.default_csv = "divergence.csv";
  p.header = {"instance_id", "alpha", "value_bits", "branch", "monotone_slack", "dpi_helstrom_slack",
              "dpi_partial_trace_slack", "violation"};
  p.tasks = static_cast<std::size_t>(c.samples);
  const double tol = c.tolerance("divergence");
  p.run = [c, tol](std::size_t i) {
    Rng rng = derive_rng(*c.seed, i);
    std::vector<int> d = c.dims;
    if (d.empty()) d = {2, std::uniform_int_distribution<int>(2, 3)(rng)};
    RegisterLayout l = d.size() == 2 ? two_party(d[0], d[1]) : RegisterLayout({{"A", d[0]}});
    DensityOperator rho = i % 3 == 2 ? sample_rank_limited(l, std::max(1, l.dim() / 2), rng) : sample_mixed(l, rng);
    DensityOperator sigma = sample_mixed(l, rng);
    HelstromMeasurement h = helstrom_channel(rho.matrix(), sigma.matrix());
    const Matrix hr = h.apply(rho.matrix());
    const Matrix hs = h.apply(sigma.matrix());
    std::vector<SuiteRow> rows;
    double prev = -kInf;
    for (double a : or_default(c.alphas, kDivergenceAlphas)) {
      AlphaOrder alpha(a);
      DivergenceValue v = d_alpha_detailed(rho.matrix(), sigma.matrix(), alpha);
      const double value = v.bits.value();
      Checks ch = start_checks();
      const double mono = excess_below(value, prev);
      ch.add("monotone_in_alpha", mono - tol);
      const double dpi_h = excess_below(value, d_alpha(hr, hs, alpha).value());
      ch.add("dpi_helstrom", dpi_h - tol);
      double dpi_t = kNaN;
      if (l.size() == 2) {
        dpi_t = excess_below(value, d_alpha(partial_trace(rho, {"A"}), partial_trace(sigma, {"A"}), alpha).value());
        ch.add("dpi_partial_trace", dpi_t - tol);
      }
      ch.row.cells = {std::to_string(i), format_number(a), to_string(v.bits), std::string(branch_name(v.branch)),
                      format_number(-mono), format_number(-dpi_h), format_number(-dpi_t),
                      format_number(ch.row.violation)};
      rows.push_back(std::move(ch.row));
      prev = value;
    }
    return rows;
  };
  return p;
}

// ---------------------------------------------------------------- rev shannon

Plan rev_shannon_plan(const SuiteConfig& c) {
  Plan p;
  p.default_csv = "revshannon.csv";
  p.header = {"alpha", "beta", "eps", "n", "info_bits", "delta_n", "rhs_bits_per_use", "nu_postselect",
              "optimizer_gap", "violation"};
  ChannelSpec ch = identity_channel(2);
  if (!c.channel_file.empty()) {
    KrausData k = read_kraus_file(c.channel_file);
    ch = ChannelSpec{k.kraus, k.input_dim, k.output_dim};
  }
  const auto& alphas = or_default(c.alphas, kRevAlphas);
  const auto& betas = or_default(c.betas, kRevBetas);
  const std::vector<double> epss = c.epsilons.empty() ? std::vector<double>{0.1} : c.epsilons;
  const std::vector<int> ns = c.ns.empty() ? std::vector<int>{1, 10, 100, 1000} : c.ns;
  p.tasks = alphas.size();
  const double tol = c.tolerance("bound");
  p.run = [c, ch, alphas, betas, epss, ns, tol](std::size_t i) {
    ChannelInfo info = channel_alpha_beta_info(ch, alphas[i], betas[i], optimizer_for(c, i));
    const double max_info = 2.0 * std::log2(static_cast<double>(ch.input_dim));
    std::vector<SuiteRow> rows;
    for (double e : epss) {
      for (int n : ns) {
        const double dn = reverse_shannon_delta_n(alphas[i], betas[i], e, n, ch.input_dim);
        Checks k = start_checks();
        k.add("info_range", std::max(-info.value, info.value - max_info) - tol);
        if (!(std::isfinite(dn) && dn > 0.0)) k.add("delta_n_finite", kInf);
        k.row.cells = {format_number(alphas[i]),
                       format_number(betas[i]),
                       format_number(e),
                       std::to_string(n),
                       format_number(info.value),
                       format_number(dn),
                       format_number(info.value + dn),
                       format_number(nu_postselect(n, ch.input_dim)),
                       format_number(info.report.gap_estimate),
                       format_number(k.row.violation)};
        rows.push_back(std::move(k.row));
      }
    }
    return rows;
  };
  return p;
}

Plan make_plan(const SuiteConfig& c) {
  switch (c.suite) {
    case SuiteKind::ConvexSplit: return convex_split_plan(c);
    case SuiteKind::Uab: return uab_plan(c);
    case SuiteKind::Qss: return qss_plan(c);
    case SuiteKind::Bounds: return bounds_plan(c);
    case SuiteKind::Divergence: return divergence_plan(c);
    case SuiteKind::RevShannon: return rev_shannon_plan(c);
  }
  throw ConfigError("unknown suite");
}

// -------------------------------------------------------------------- config

std::vector<double> number_list(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError(key + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string() && v.get<std::string>() == "inf") {
      out.push_back(kInf);
    } else {
      throw ConfigError(key + " entries must be numbers or \"inf\"");
    }
  }
  return out;
}

void check_open_unit(const std::vector<double>& v, const std::string& key) {
  for (double x : v) {
    if (!(x > 0.0 && x < 1.0)) throw ConfigError(key + " entries must lie in (0,1)");
  }
}

std::string json_number(double x) {
  if (std::isfinite(x)) return json(x).dump();
  return json(format_number(x)).dump();
}

}  // namespace

SuiteKind parse_suite_kind(const std::string& name) {
  static const std::map<std::string, SuiteKind> kinds{
      {"convex-split", SuiteKind::ConvexSplit}, {"uab", SuiteKind::Uab},
      {"qss", SuiteKind::Qss},                  {"bounds", SuiteKind::Bounds},
      {"divergence", SuiteKind::Divergence},    {"rev-shannon", SuiteKind::RevShannon}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown suite: " + name);
  return it->second;
}

std::string suite_name(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::ConvexSplit: return "convex-split";
    case SuiteKind::Uab: return "uab";
    case SuiteKind::Qss: return "qss";
    case SuiteKind::Bounds: return "bounds";
    case SuiteKind::Divergence: return "divergence";
    case SuiteKind::RevShannon: return "rev-shannon";
  }
  return "unknown";
}

std::map<std::string, double> default_tolerances() {
  return {{"equality", 1e-10}, {"bound", 1e-7}, {"divergence", 1e-9}, {"probability", 1e-9}};
}

double SuiteConfig::tolerance(const std::string& key) const {
  auto it = tolerances.find(key);
  if (it != tolerances.end()) return it->second;
  return default_tolerances().at(key);
}

void SuiteConfig::validate() const {
  if (!seed) throw ConfigError("seed is mandatory");
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (restarts < 0) throw ConfigError("restarts must be >= 0");
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  for (int d : dims) {
    if (d < 1) throw ConfigError("dims must be positive");
  }
  const auto known = default_tolerances();
  for (const auto& [k, v] : tolerances) {
    if (!known.count(k)) throw ConfigError("unknown tolerance: " + k);
    if (!(v >= 0.0)) throw ConfigError("tolerance " + k + " must be >= 0");
  }
  if (csv_name.find('/') != std::string::npos || csv_name.find('\\') != std::string::npos || csv_name == ".." ||
      csv_name == ".") {
    throw ConfigError("csv_name must be a plain file name");
  }
  check_open_unit(epsilons, "epsilons");
  switch (suite) {
    case SuiteKind::ConvexSplit:
      if (!dims.empty() && dims.size() != 2) throw ConfigError("convex-split dims are |R|,|A|");
      break;
    case SuiteKind::Uab:
    case SuiteKind::Bounds:
      if (suite == SuiteKind::Bounds && family != "uab" && family != "htd" && family != "a6" && family != "rld") {
        throw ConfigError("bounds family must be uab, htd, a6 or rld");
      }
      if (!dims.empty() && dims.size() != 2 && !(suite == SuiteKind::Bounds && family != "uab" && dims.size() == 1)) {
        throw ConfigError("dims must be |A|,|B|");
      }
      for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie in (0,1)");
      }
      for (double b : betas) {
        if (!(b > 1.0)) throw ConfigError("betas must exceed 1");
      }
      break;
    case SuiteKind::Qss:
      if (!dims.empty() && dims.size() != 2 && dims.size() != 3) throw ConfigError("qss dims are |R|,[|A|,]|A'|");
      check_open_unit(deltas, "deltas");
      for (double d : or_default(deltas, kQssDeltas)) {
        const double e = epsilons.empty() ? std::min(0.99, d + 0.1) : epsilons[0];
        if (!(d < e)) throw ConfigError("deltas must be smaller than eps");
      }
      break;
    case SuiteKind::Divergence:
      if (!dims.empty() && dims.size() > 2) throw ConfigError("divergence dims are |A| or |A|,|B|");
      for (double a : alphas) {
        if (!(a >= 0.0)) throw ConfigError("alphas must be >= 0");
      }
      break;
    case SuiteKind::RevShannon: {
      const auto& a = or_default(alphas, kRevAlphas);
      const auto& b = or_default(betas, kRevBetas);
      if (a.size() != b.size()) throw ConfigError("rev-shannon pairs alphas with betas; sizes differ");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const bool vn = a[i] == 1.0 && b[i] == 1.0;
        if (!vn && !(a[i] > 0.0 && a[i] < 1.0 && b[i] > 1.0)) {
          throw ConfigError("rev-shannon needs alpha in (0,1) and beta > 1, or both equal to 1");
        }
      }
      for (int n : ns) {
        if (n < 1) throw ConfigError("ns entries must be >= 1");
      }
      break;
    }
  }
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("malformed dims: " + text);
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(cur, &pos);
    } catch (const std::exception&) {
      throw ConfigError("malformed dims: " + text);
    }
    if (pos != cur.size() || v < 1) throw ConfigError("malformed dims: " + text);
    out.push_back(v);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == 'x' || ch == ',') {
      flush();
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

SuiteConfig parse_suite_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  SuiteConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "suite") {
        c.suite = parse_suite_kind(v.get<std::string>());
      } else if (key == "dims") {
        c.dims = v.is_string() ? parse_dims(v.get<std::string>()) : v.get<std::vector<int>>();
      } else if (key == "samples") {
        c.samples = v.get<int>();
      } else if (key == "seed") {
        if (!v.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
        c.seed = v.get<std::uint64_t>();
      } else if (key == "tolerances") {
        c.tolerances = v.get<std::map<std::string, double>>();
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "csv_name") {
        c.csv_name = v.get<std::string>();
      } else if (key == "threads") {
        c.threads = v.get<int>();
      } else if (key == "restarts") {
        c.restarts = v.get<int>();
      } else if (key == "n_max") {
        c.n_max = v.get<int>();
      } else if (key == "alphas") {
        c.alphas = number_list(v, key);
      } else if (key == "betas") {
        c.betas = number_list(v, key);
      } else if (key == "epsilons") {
        c.epsilons = number_list(v, key);
      } else if (key == "deltas") {
        c.deltas = number_list(v, key);
      } else if (key == "ns") {
        c.ns = v.get<std::vector<int>>();
      } else if (key == "family") {
        c.family = v.get<std::string>();
      } else if (key == "channel_file") {
        c.channel_file = v.get<std::string>();
      } else if (key == "record_runtime") {
        c.record_runtime = v.get<bool>();
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  if (!j.contains("suite")) throw ConfigError("config needs a suite");
  return c;
}

SuiteConfig read_suite_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_suite_config(text);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SuiteResult evaluate_suite(const SuiteConfig& config) {
  config.validate();
  Plan plan = make_plan(config);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<SuiteRow>> out(plan.tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.tasks; i = next++) {
      try {
        out[i] = plan.run(i);
      } catch (const std::exception& e) {
        SuiteRow r;
        r.pass = false;
        r.certified = false;
        r.violation = kInf;
        r.failure = std::string("exception: ") + e.what();
        r.cells.assign(plan.header.size(), "");
        r.cells[0] = std::to_string(i);
        out[i] = {r};
      }
    }
  };
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(config.threads),
                                                     std::max<std::size_t>(1, plan.tasks));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
  }

  SuiteResult res;
  res.suite = suite_name(config.suite);
  res.header = plan.header;
  for (auto& rows : out) {
    for (auto& r : rows) res.rows.push_back(std::move(r));
  }
  res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SuiteSummary emit_summary(const SuiteResult& result) {
  if (result.rows.empty()) throw ConfigError("empty result set");
  SuiteSummary s;
  s.suite = result.suite;
  s.rows = result.rows.size();
  std::size_t certified = 0;
  s.max_violation = -kInf;
  for (const auto& r : result.rows) {
    if (!r.pass) ++s.failures;
    if (r.certified) ++certified;
    s.max_violation = std::max(s.max_violation, r.violation);
  }
  s.pass_rate = static_cast<double>(s.rows - s.failures) / static_cast<double>(s.rows);
  s.certified_rate = static_cast<double>(certified) / static_cast<double>(s.rows);
  s.runtime_seconds = result.runtime_seconds;
  return s;
}

int summary_exit_code(const SuiteSummary& s) { return s.failures == 0 ? 0 : 1; }

std::string summary_to_json(const SuiteSummary& s, bool with_runtime) {
  std::ostringstream o;
  o << "{\"suite\": " << json(s.suite).dump() << ", \"rows\": " << s.rows << ", \"failures\": " << s.failures
    << ", \"pass_rate\": " << json_number(s.pass_rate) << ", \"certified_rate\": " << json_number(s.certified_rate)
    << ", \"max_violation\": " << json_number(s.max_violation);
  if (with_runtime) o << ", \"runtime\": " << json_number(s.runtime_seconds);
  o << "}";
  return o.str();
}

std::string to_csv(const SuiteResult& result) {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(result.header);
  for (const auto& r : result.rows) line(r.cells);
  return s;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

RunOutcome run_suite(const SuiteConfig& config) {
  RunOutcome out;
  std::string csv_name;
  try {
    config.validate();
    csv_name = config.csv_name.empty() ? make_plan(config).default_csv : config.csv_name;
  } catch (const std::exception& e) {
    out.exit_code = 2;
    out.error = e.what();
    return out;
  }
  SuiteResult res = evaluate_suite(config);
  try {
    out.summary = emit_summary(res);
  } catch (const ConfigError& e) {
    out.exit_code = 2;
    out.error = e.what();
    return out;
  }

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const std::string stem = fs::path(csv_name).stem().string();
  out.csv_path = (dir / csv_name).string();
  out.summary_path = (dir / (stem + "_summary.json")).string();
  out.failures_path = (dir / (stem + "_failures.json")).string();

  write_file_atomic(out.csv_path, to_csv(res));
  write_file_atomic(out.summary_path, summary_to_json(out.summary, config.record_runtime) + "\n");

  std::ostringstream f;
  f << "{\"suite\": " << json(res.suite).dump() << ", \"failures\": [";
  bool first = true;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    if (r.pass) continue;
    f << (first ? "" : ", ") << "{\"row\": " << i << ", \"instance_id\": " << json(r.cells.at(0)).dump()
      << ", \"check\": " << json(r.failure).dump() << ", \"violation\": " << json_number(r.violation) << "}";
    first = false;
  }
  f << "]}\n";
  write_file_atomic(out.failures_path, f.str());
  out.exit_code = summary_exit_code(out.summary);
  return out;
}

int resolve_threads(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CSL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    throw ConfigError(std::string("CSL_THREADS is not a positive integer: ") + env);
  }
  return 1;
}

}  // namespace csl
