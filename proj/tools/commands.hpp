#pragma once

// Command-line front end: inspect, verify, flow, bracket.
//
// Exit codes: 0 success; 1 invariant or drift failure; 2 usage, config,
// domain or unknown-field error; 3 integrator step failure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "finsler/metric.hpp"

namespace finsler::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kSetupError = 2, kStepFailure = 3 };

// Runs the CLI on args (without the program name). Reports go to `out` or
// to the --out file; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Report builders, exposed for tests.
struct VerifyResult {
  Json report;
  bool pass = false;
};
VerifyResult verify_report(const MetricSpec& spec, int samples, std::uint64_t seed, double tol_scale = 1.0);

Json inspect_report(const MetricSpec& spec, const std::vector<PhasePoint>& points);

// "x1,..,xn:y1,..,yn"
PhasePoint parse_point(const std::string& text);
std::vector<double> parse_reals(const std::string& text);

}  // namespace finsler::cli
