// csl: batch verification runner and single-instance calculators.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csl/divergences.hpp"
#include "csl/protocols.hpp"
#include "csl/state_io.hpp"
#include "csl/suites.hpp"

namespace {

using json = nlohmann::json;

// Non-finite numbers go out as strings; JSON has no infinity.
json num(double x) {
  if (std::isfinite(x)) return x;
  return csl::format_number(x);
}

struct BatchFlags {
  std::string dims;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> restarts;
  std::string out;
};

void add_batch_flags(CLI::App* app, BatchFlags& f) {
  app->add_option("--dims", f.dims, "dimensions, e.g. 2,2 or 2x3");
  app->add_option("--samples", f.samples, "number of random instances");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--threads", f.threads, "worker threads (default: CSL_THREADS or 1)");
  app->add_option("--restarts", f.restarts, "optimizer random restarts");
  app->add_option("--out", f.out, "output CSV path");
}

void apply(const BatchFlags& f, csl::SuiteConfig& c) {
  if (!f.dims.empty()) c.dims = csl::parse_dims(f.dims);
  if (f.samples) c.samples = *f.samples;
  if (f.seed) c.seed = *f.seed;
  if (f.restarts) c.restarts = *f.restarts;
  c.threads = csl::resolve_threads(f.threads ? f.threads : std::optional<int>{});
  if (!f.out.empty()) {
    std::filesystem::path p(f.out);
    c.output_dir = p.has_parent_path() ? p.parent_path().string() : ".";
    c.csv_name = p.filename().string();
  }
}

int report(const csl::RunOutcome& r) {
  if (r.exit_code == 2) {
    std::cerr << "config error: " << r.error << "\n";
    return 2;
  }
  std::cout << csl::summary_to_json(r.summary, true) << "\n";
  if (r.exit_code != 0) std::cerr << "failures recorded in " << r.failures_path << "\n";
  return r.exit_code;
}

json qss_json(const csl::QSSResult& r, const csl::QSSInstance& in) {
  json probs = json::array();
  for (double p : r.branch_probabilities) probs.push_back(p);
  return json{{"eps", in.eps},
              {"delta", in.delta},
              {"n", r.n},
              {"n_required", r.n_required},
              {"n_capped", r.n_capped},
              {"cost_bits", r.cost_bits},
              {"mu", r.mu},
              {"i2_bits", r.i2_bits},
              {"sigma_opt", json::parse(csl::state_to_json(r.sigma_opt))},
              {"fidelity", r.fidelity},
              {"step2_distance", r.step2_distance},
              {"achieved_distance", r.achieved_distance},
              {"distance_envelope", r.distance_envelope},
              {"term_bound", r.term_bound},
              {"branch_probabilities", probs},
              {"probability_sum", r.probability_sum},
              {"junk_mass", r.junk_mass},
              {"delta_met", r.delta_met},
              {"bound_ok", r.bound_ok}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-split, state-splitting and smoothed-information verification"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a suite from a JSON config and/or flags");
  std::string suite, config_path, out_dir;
  BatchFlags run_flags;
  run->add_option("--suite", suite, "convex-split | uab | qss | bounds | divergence | rev-shannon");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--out-dir", out_dir, "output directory");
  add_batch_flags(run, run_flags);

  // verify-convex-split
  auto* vcs = app.add_subcommand("verify-convex-split", "split equality and derived bounds on random instances");
  BatchFlags vcs_flags;
  int n_max = 5;
  add_batch_flags(vcs, vcs_flags);
  vcs->add_option("--n-max", n_max, "largest number of copies");

  // verify-uab
  auto* vuab = app.add_subcommand("verify-uab", "proof chain of the universal bound on random states");
  BatchFlags vuab_flags;
  std::vector<double> uab_alpha, uab_beta, uab_eps;
  add_batch_flags(vuab, vuab_flags);
  vuab->add_option("--alpha", uab_alpha)->check(CLI::Range(0.0, 1.0));
  vuab->add_option("--beta", uab_beta);
  vuab->add_option("--eps", uab_eps)->check(CLI::Range(0.0, 1.0));

  // bounds-sweep
  auto* sweep = app.add_subcommand("bounds-sweep", "sweep one bound family over random instances");
  BatchFlags sweep_flags;
  std::string family = "uab";
  std::vector<double> sw_alpha, sw_beta, sw_eps;
  add_batch_flags(sweep, sweep_flags);
  sweep->add_option("--suite", family, "uab | htd | a6 | rld");
  sweep->add_option("--alpha", sw_alpha);
  sweep->add_option("--beta", sw_beta);
  sweep->add_option("--eps", sw_eps);

  // qss-sim
  auto* qss = app.add_subcommand("qss-sim", "simulate the state-splitting protocol on one state");
  std::string state_path, qss_out;
  double qss_eps = 0.6, qss_delta = 0.5;
  std::uint64_t qss_seed = 0;
  int qss_restarts = 32;
  qss->add_option("--state", state_path, "pure state JSON on R..., [A,] A'")->required();
  qss->add_option("--eps", qss_eps);
  qss->add_option("--delta", qss_delta);
  qss->add_option("--seed", qss_seed);
  qss->add_option("--restarts", qss_restarts);
  qss->add_option("--out", qss_out, "output JSON path");

  // divergence
  auto* div = app.add_subcommand("divergence", "sandwiched Renyi divergence of two states");
  std::string alpha_text, rho_path, sigma_path;
  div->add_option("--alpha", alpha_text, "order (number or inf)")->required();
  div->add_option("--rho", rho_path)->required();
  div->add_option("--sigma", sigma_path)->required();

  // rev-shannon
  auto* rev = app.add_subcommand("rev-shannon", "reverse-Shannon cost bound per channel use");
  std::string channel_path;
  double rs_alpha = 0.5, rs_beta = 2.0, rs_eps = 0.1;
  int rs_n = 10, rs_restarts = 8;
  std::uint64_t rs_seed = 0;
  rev->add_option("--channel", channel_path, "Kraus JSON (default: qubit identity)");
  rev->add_option("--alpha", rs_alpha);
  rev->add_option("--beta", rs_beta);
  rev->add_option("--eps", rs_eps);
  rev->add_option("--n", rs_n);
  rev->add_option("--seed", rs_seed);
  rev->add_option("--restarts", rs_restarts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      csl::SuiteConfig c;
      if (!config_path.empty()) c = csl::read_suite_config(config_path);
      if (!suite.empty()) c.suite = csl::parse_suite_kind(suite);
      if (config_path.empty() && suite.empty()) throw csl::ConfigError("run needs --suite or --config");
      // Flags override file values; the thread count keeps the file value
      // unless a flag or CSL_THREADS says otherwise.
      const int file_threads = c.threads;
      apply(run_flags, c);
      if (!run_flags.threads && !std::getenv("CSL_THREADS")) c.threads = file_threads;
      if (!out_dir.empty()) c.output_dir = out_dir;
      return report(csl::run_suite(c));
    }
    if (*vcs) {
      csl::SuiteConfig c;
      c.suite = csl::SuiteKind::ConvexSplit;
      c.n_max = n_max;
      apply(vcs_flags, c);
      return report(csl::run_suite(c));
    }
    if (*vuab) {
      csl::SuiteConfig c;
      c.suite = csl::SuiteKind::Uab;
      c.alphas = uab_alpha;
      c.betas = uab_beta;
      c.epsilons = uab_eps;
      apply(vuab_flags, c);
      return report(csl::run_suite(c));
    }
    if (*sweep) {
      csl::SuiteConfig c;
      c.suite = csl::SuiteKind::Bounds;
      c.family = family;
      c.alphas = sw_alpha;
      c.betas = sw_beta;
      c.epsilons = sw_eps;
      apply(sweep_flags, c);
      return report(csl::run_suite(c));
    }
    if (*qss) {
      csl::SampledState s = csl::read_state_file(state_path);
      if (!std::holds_alternative<csl::PureStateVector>(s)) throw csl::ConfigError("qss-sim needs a pure state");
      csl::QSSInstance in{std::get<csl::PureStateVector>(s), qss_eps, qss_delta};
      csl::OptimizerOptions o;
      o.seed = qss_seed;
      o.restarts = qss_restarts;
      csl::QSSResult r = csl::qss_simulate(in, o);
      const std::string text = qss_json(r, in).dump(2) + "\n";
      if (!qss_out.empty()) csl::write_file_atomic(qss_out, text);
      std::cout << text;
      return r.bound_ok ? 0 : 1;
    }
    if (*div) {
      const double a = alpha_text == "inf" ? std::numeric_limits<double>::infinity() : std::stod(alpha_text);
      auto as_density = [](const csl::SampledState& s) {
        if (auto* p = std::get_if<csl::PureStateVector>(&s)) return csl::DensityOperator::from_pure(*p);
        return std::get<csl::DensityOperator>(s);
      };
      csl::DensityOperator rho = as_density(csl::read_state_file(rho_path));
      csl::DensityOperator sigma = as_density(csl::read_state_file(sigma_path));
      csl::DivergenceValue v = csl::d_alpha_detailed(rho.matrix(), sigma.matrix(), a);
      std::cout << json{{"alpha", num(a)}, {"value_bits", num(v.bits.value())},
                        {"branch", std::string(csl::branch_name(v.branch))}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*rev) {
      csl::ChannelSpec ch = csl::identity_channel(2);
      if (!channel_path.empty()) {
        csl::KrausData k = csl::read_kraus_file(channel_path);
        ch = csl::ChannelSpec{k.kraus, k.input_dim, k.output_dim};
      }
      csl::OptimizerOptions o;
      o.seed = rs_seed;
      o.restarts = rs_restarts;
      csl::ReverseShannonBound b = csl::reverse_shannon_bound(ch, rs_alpha, rs_beta, rs_eps, rs_n, o);
      std::cout << json{{"alpha", rs_alpha},
                        {"beta", rs_beta},
                        {"eps", rs_eps},
                        {"n", rs_n},
                        {"info_bits", num(b.info)},
                        {"delta_n", num(b.delta_n)},
                        {"rhs_bits_per_use", num(b.rhs_bits_per_use)},
                        {"nu_postselect", num(csl::nu_postselect(rs_n, ch.input_dim))}}
                       .dump()
                << "\n";
      return 0;
    }
  } catch (const csl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const csl::ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
