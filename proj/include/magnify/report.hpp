#pragma once

// JSON serialization of library results and CSV export of report series.

#include "magnify/certify.hpp"
#include "magnify/expansion.hpp"
#include "magnify/solver.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace magnify {

inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Json to_json(const Expansion& e);
Json to_json(const RegularityReport& r);
Json to_json(const RemainderSlope& r);
Json to_json(const CoverageResult& r);
Json to_json(const InjectivityAudit& a);
Json to_json(const FirstOrderCertificate& c);
Json to_json(const QuadraticCertificate& c);
Json to_json(const InverseSolution& s);
Json to_json(const SweepResult& s);

/// (scale, value) pairs as a report series.
Json series(const std::vector<std::pair<double, double>>& points);

/// Writes the named series of report["series"] as "scale,value" rows in
/// ascending scale with 17 significant digits. Throws UsageError when the
/// name is empty or the report has no such series.
void emit_csv(const Json& report, const std::string& name, std::ostream& out);

/// Two-space indented dump with a trailing newline.
std::string dump_report(const Json& report);

}  // namespace magnify
