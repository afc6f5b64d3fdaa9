#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "wdvv/closedform.hpp"
#include "wdvv/model.hpp"
#include "wdvv/scanner.hpp"

namespace wdvvtool {

enum class Command { Check, Theorem, Identities, Scan, ReduceA };
enum class Format { Json, Csv, Text };
enum class MetricChoice { Sum, TypeA, BcdSinh, Extra, Random };

enum ExitCode : int {
  kExitPass = 0,
  kExitFail = 1,
  kExitInconclusive = 2,
  kExitDegenerate = 3,
  kExitUsage = 64,
  kExitIo = 74,
};

struct RunConfig {
  Command command = Command::Check;
  std::optional<wdvv::FamilyPreset> preset;
  int n = 3;
  std::optional<wdvv::KernelKind> kernel;
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> c;
  /// Sample points per check; unset means 5 (2 per grid node for scans).
  std::optional<int> points;
  std::uint64_t seed = 0;
  double tol = wdvv::kPassTolerance;
  /// Unset picks the family's natural metric.
  std::optional<MetricChoice> metric;
  Format format = Format::Json;
  std::optional<std::string> out;
  bool deterministic = false;

  std::optional<wdvv::ConditionId> theorem;
  std::vector<wdvv::GridAxis> axes;
  bool refine = true;
  int threads = 0;
};

struct UsageError {
  std::string message;
};

/// Parses argv (argv[0] is the program name). A --config JSON file supplies
/// defaults that explicit flags override. --help prints to `out` and yields
/// the exit status to return.
std::variant<RunConfig, UsageError, int> parse_args(int argc, const char* const* argv,
                                                     std::ostream& out);

/// Applies the keys of a flat JSON object to `config`. Throws
/// std::invalid_argument on unknown keys or mistyped values.
void apply_json(RunConfig& config, const nlohmann::json& doc);

/// Single-line diagnostic for the first invalid field, if any.
std::optional<std::string> validate(const RunConfig& config);

wdvv::PrepotentialParams resolve_params(const RunConfig& config);

struct Outcome {
  int status = kExitPass;
  nlohmann::ordered_json report;
};

/// Runs the command and builds the report; no I/O.
Outcome execute(const RunConfig& config);

std::string render(const nlohmann::ordered_json& report, Format format);

/// Writes `content` to `path` through a temporary file in the same directory
/// and a rename. Throws std::runtime_error naming the path and the cause.
void write_atomic(const std::string& path, const std::string& content);

/// execute + render + output; returns the process exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

std::string_view to_string(Command command) noexcept;
std::string_view to_string(Format format) noexcept;
std::string_view to_string(MetricChoice metric) noexcept;
std::optional<Command> parse_command(std::string_view text) noexcept;
std::optional<Format> parse_format(std::string_view text) noexcept;
std::optional<MetricChoice> parse_metric(std::string_view text) noexcept;

/// "a:-2:2:21" -> GridAxis{A, -2, 2, 21}.
std::optional<wdvv::GridAxis> parse_axis(std::string_view text);

}  // namespace wdvvtool
