#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hloc/verdict.hpp"

namespace hloc {

struct ExternalAnswer {
    IpAddress ip;
    std::string source;
    std::optional<LatLon> pos;  // nullopt: the source has no answer
    std::string city;
};

enum class EvalCategory : std::uint8_t { Same, Possible, Wrong, NoData, NotApplicable };

std::string_view to_string(EvalCategory c);

struct EvaluationRecord {
    IpAddress ip;
    std::string source;
    VerdictCategory verdict = VerdictCategory::NoVerifiedHint;
    EvalCategory category = EvalCategory::NoData;
};

/// Reads "ip,lat,lon,city" rows; empty lat/lon means no answer. Throws on
/// unreadable files; malformed rows are skipped into `warnings`.
std::vector<ExternalAnswer> load_external_answers(const std::filesystem::path& path, const std::string& source,
                                                  std::vector<std::string>* warnings = nullptr);

/// True iff some recorded measurement's exclusion disc leaves out `pos`.
bool excluded_by_measurements(const LatLon& pos, const DomainVerdict& verdict, const ValidationConfig& cfg);

/// Ordered checks: NOT_APPLICABLE for unresponsive/filtered verdicts, NO_DATA
/// without coordinates, WRONG when excluded by any measurement, SAME when the
/// verdict is verified and the answer lies within `same_radius_km` of the
/// verified location, POSSIBLE otherwise.
EvaluationRecord classify(const ExternalAnswer& answer, const DomainVerdict& verdict, const ValidationConfig& cfg,
                          double same_radius_km = 100.0);

struct SummaryRow {
    std::string source;
    VerdictCategory verdict = VerdictCategory::NoVerifiedHint;
    std::size_t n = 0;           // every record in the row
    std::size_t applicable = 0;  // n minus NOT_APPLICABLE
    std::size_t with_data = 0;   // applicable minus NO_DATA
    std::map<EvalCategory, std::size_t> counts;
    // SAME/POSSIBLE/WRONG over `with_data`; NO_DATA over `applicable`.
    double same_pct = 0, possible_pct = 0, wrong_pct = 0, no_data_pct = 0;
};

std::vector<SummaryRow> summarize(const std::vector<EvaluationRecord>& records);

}  // namespace hloc
