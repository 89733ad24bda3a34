#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "rss/cavity.hpp"
#include "rss/timestep.hpp"

namespace rss::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "rss-report/1";

enum ExitCode { kExitConverged = 0, kExitUsage = 1, kExitNotConverged = 2, kExitBlowUp = 3 };
int exit_code(Outcome o);

struct PoissonOptions {
  int dim = 2;
  Index n = 15;
  int runs = 5;
  unsigned seed = 1;
  double tol = 1e-12;
  int restart = 30;
  bool identity = false;  ///< A = Id instead of the compact Laplacian
};

struct HeatOptions {
  int dim = 1;
  Index n = 127;
  SchemeConfig scheme{SchemeKind::RSS, 1.0, 1.0, 0.004, false};
  double t_final = 1.0;
  int history_stride = 1;
};

struct AllenCahnOptions {
  Index n = 63;
  double epsilon = 0.1;
  double lipschitz = 2.0;
  double tau = 1.0;
  double dt = 0.0;  ///< <= 0: 0.9 times the analytic bound
  bool extrapolate = false;
  int steps = 1000;
  unsigned seed = 2024;
  double amplitude = 0.05;
  int history_stride = 1;
};

struct StabilityOptions {
  std::string problem = "heat1d";  ///< heat1d | heat2d
  Index n = 15;
  std::vector<double> tau_beta{0.0, 0.25, 0.5};  ///< tau as multiples of beta
  std::vector<double> tau;                        ///< absolute values, appended
  int steps = 500;
  unsigned seed = 7;
};

struct SweepRow {
  double tau = 1.0;
  double dt = 0.01;
  SchemeKind kind = SchemeKind::RSS;
  bool extrapolate = false;
};

/// "tau:dt:scheme" with scheme one of rss, rss-x, nlrss, nlrss-x.
SweepRow parse_sweep_row(const std::string& s);
std::string format_sweep_row(const SweepRow& r);

struct SweepOptions {
  CavityConfig base;
  std::vector<SweepRow> rows;
  int jobs = 1;
  bool bisect_dtmax = false;
  long bisect_steps = 200;
};

/// Every command returns a report with the fields schema, command, config,
/// outcome, exit_code, results and timing. `out` empty: write nothing.
Json cmd_poisson(const PoissonOptions& o, const std::filesystem::path& out = {});
Json cmd_heat(const HeatOptions& o, const std::filesystem::path& out = {});
Json cmd_allen_cahn(const AllenCahnOptions& o, const std::filesystem::path& out = {});
Json cmd_cavity(const CavityConfig& c, const std::filesystem::path& out = {});
Json cmd_stability(const StabilityOptions& o, const std::filesystem::path& out = {});
Json cmd_sweep(const SweepOptions& o, const std::filesystem::path& out = {});

Json to_json(const CavityConfig& c);
Json to_json(const VortexReport& v);

/// Report without the timing block, for reproducibility comparisons.
Json strip_timing(Json report);
void write_report(const Json& report, const std::filesystem::path& file);
Json read_report(const std::filesystem::path& file);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// nx, ny and h on three lines, then ny lines of nx values (x fastest).
void write_field(const std::filesystem::path& file, const Eigen::MatrixXd& f, double h);
struct FieldDump {
  Eigen::MatrixXd values;
  double h = 0.0;
};
FieldDump read_field(const std::filesystem::path& file);

/// Header "t,<name>", then one "t,value" line per point.
void write_history(const std::filesystem::path& file, const std::vector<HistoryPoint>& h,
                   const std::string& name = "value");
std::vector<HistoryPoint> read_history(const std::filesystem::path& file);

/// Flat tables (array of objects with scalar members) as CSV with a header.
/// Numbers use format_double, booleans true/false, null an empty cell;
/// strings are double-quoted and must not contain commas, quotes or newlines.
std::string table_to_csv(const Json& rows);
Json table_from_csv(const std::string& csv);
/// Aligned plain-text rendering of the same table.
std::string table_to_text(const Json& rows);

/// Output directory: flag, else RSS_OUTPUT_DIR, else "rss-output".
std::filesystem::path resolve_output_dir(const std::string& flag);

}  // namespace rss::cli
