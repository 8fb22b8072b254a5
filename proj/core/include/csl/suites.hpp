#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csl {

// Bad configuration: the runner maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SuiteKind { ConvexSplit, Uab, Qss, Bounds, Divergence, RevShannon };

SuiteKind parse_suite_kind(const std::string& name);
std::string suite_name(SuiteKind kind);

struct SuiteConfig {
  SuiteKind suite = SuiteKind::ConvexSplit;
  std::vector<int> dims;  // empty: suite default
  int samples = 0;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tolerances;  // overrides of default_tolerances()
  std::string output_dir = ".";
  std::string csv_name;  // empty: suite default (split.csv, chain.csv, ...)
  int threads = 1;
  int restarts = 8;

  int n_max = 5;                          // convex-split
  std::vector<double> alphas;             // uab, bounds, divergence, rev-shannon
  std::vector<double> betas;              // uab, bounds, rev-shannon
  std::vector<double> epsilons;           // uab, bounds, qss, rev-shannon
  std::vector<double> deltas;             // qss
  std::vector<int> ns;                    // rev-shannon block lengths
  std::string family = "uab";             // bounds: uab | htd | a6 | rld
  std::string channel_file;               // rev-shannon; empty: qubit identity
  bool record_runtime = false;            // write wall time into the summary file

  void validate() const;
  double tolerance(const std::string& key) const;
};

std::map<std::string, double> default_tolerances();

// "2x3", "2,3" or "2" -> {2, 3} / {2}.
std::vector<int> parse_dims(const std::string& text);

// JSON object with the SuiteConfig field names; unknown keys are errors.
SuiteConfig parse_suite_config(const std::string& json_text);
SuiteConfig read_suite_config(const std::string& path);

struct SuiteRow {
  std::vector<std::string> cells;
  bool pass = true;
  double violation = 0.0;  // worst excess of a hard check beyond its tolerance; <= 0 when all hold
  bool certified = true;   // one-sided certification outcome where the suite has one
  std::string failure;     // name of the first failing check
};

struct SuiteResult {
  std::string suite;
  std::vector<std::string> header;
  std::vector<SuiteRow> rows;
  double runtime_seconds = 0.0;
};

struct SuiteSummary {
  std::string suite;
  std::size_t rows = 0;
  std::size_t failures = 0;
  double pass_rate = 0.0;
  double certified_rate = 0.0;
  double max_violation = 0.0;
  double runtime_seconds = 0.0;
};

// Throws ConfigError on an empty result set.
SuiteSummary emit_summary(const SuiteResult& result);
// 0 when every row passed, 1 otherwise.
int summary_exit_code(const SuiteSummary& s);
std::string summary_to_json(const SuiteSummary& s, bool with_runtime);

// Evaluates every instance; rows come back in instance order whatever the
// thread count.
SuiteResult evaluate_suite(const SuiteConfig& config);

// 17 significant digits, "inf" / "-inf" / "nan".
std::string format_number(double x);

std::string to_csv(const SuiteResult& result);
// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

struct RunOutcome {
  int exit_code = 0;
  SuiteSummary summary;
  std::string csv_path;
  std::string summary_path;
  std::string failures_path;
  std::string error;  // set with exit code 2
};

// Evaluates, writes the CSV, summary and failure record, and returns
// 0 (all hard checks pass), 1 (some failed) or 2 (configuration error).
RunOutcome run_suite(const SuiteConfig& config);

// Worker count from an explicit flag, else CSL_THREADS, else 1.
int resolve_threads(std::optional<int> flag);

}  // namespace csl
