#pragma once

// Parameter sweeps persisted as CSV plus a JSON sidecar, and
// theory-versus-simulation reports over the resulting files.
// The config schema is documented in docs/sweep_config.md.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "losp/estimators.hpp"

namespace losp {

inline constexpr int kSchemaVersion = 1;

struct SweepConfig {
  std::string model = "site";      // site | bond | ddim
  std::string estimator = "pc";    // pc | theta | giant
  std::vector<int> d{2};
  std::vector<int> r{1};
  std::vector<Coord> omega;
  std::vector<Coord> n;             // absolute side, or ...
  std::vector<Coord> n_over_omega;  // ... side as a multiple of omega (exactly one is set)
  std::vector<double> lambda{0.0};
  std::uint64_t reps = 10;
  std::uint64_t master_seed = 1;
  std::uint64_t K = 1000;           // theta size threshold
  Coord window = kDefaultWindow;    // theta torus side / omega
  std::filesystem::path output;
  unsigned workers = 1;             // grid points computed concurrently
  bool timing = false;              // record wall_seconds (otherwise 0)

  void validate() const;
};

/// Parses and validates a JSON config; errors name the offending field.
SweepConfig parse_sweep_config(const std::string& json_text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// One grid point, in canonical grid order.
struct SweepPoint {
  int d = 2;
  int r = 1;
  Coord omega = 1;
  Coord n = 1;
  double lambda = 0.0;
};

std::vector<SweepPoint> sweep_points(const SweepConfig& cfg);

/// Stable identity of a point, also recoverable from a CSV row.
std::string point_key(const std::string& model, const std::string& estimator, const SweepPoint& pt);

/// Seed of a point: a function of master_seed and point_key only.
std::uint64_t point_seed(std::uint64_t master_seed, const std::string& key);

EstimateRecord run_point(const SweepConfig& cfg, const SweepPoint& pt, unsigned threads = 0);

struct SweepSummary {
  std::size_t total = 0;
  std::size_t computed = 0;
  std::size_t skipped = 0;
};

/// Runs every grid point not already present in the output file, appending
/// records in grid order and flushing after each, then writes the sidecar
/// `<output>.json`.
SweepSummary run_sweep(const SweepConfig& cfg);

std::string csv_header();
std::string csv_row(const EstimateRecord& rec);

/// Reads a results file written by run_sweep. Throws PreconditionError on a
/// schema version mismatch or malformed rows.
std::vector<EstimateRecord> read_results(const std::filesystem::path& path);

enum class Theory { pc_limit, giant_fraction, theta, bond_fraction, lambda_dr };

std::optional<Theory> parse_theory(const std::string& name);
std::string theory_name(Theory t);
double default_tolerance(Theory t);

struct ReportRow {
  EstimateRecord record;
  double scaled = 0.0;  // estimate in the units of the theory column
  double theory = 0.0;
  double abs_dev = 0.0;
  double rel_dev = 0.0;
  bool pass = false;
};

/// Compares every applicable row with the value computed by the theory
/// modules. Rows the theory does not apply to are skipped.
std::vector<ReportRow> report(const std::vector<EstimateRecord>& records, Theory theory, double tolerance,
                              std::uint64_t seed = 1);

void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows, Theory theory);
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, Theory theory);

}  // namespace losp
