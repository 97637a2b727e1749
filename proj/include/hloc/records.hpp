#pragma once

// Line-delimited file formats exchanged between pipeline stages.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloc/domainprep.hpp"
#include "hloc/evaluate.hpp"
#include "hloc/geodata.hpp"
#include "hloc/hintsearch.hpp"
#include "hloc/measure.hpp"
#include "hloc/verdict.hpp"

namespace hloc {

using nlohmann::json;

void to_json(json& j, const Location& loc);
void from_json(const json& j, Location& loc);
void to_json(json& j, const DomainRecord& rec);
void from_json(const json& j, DomainRecord& rec);
void to_json(json& j, const LocationHint& h);
void from_json(const json& j, LocationHint& h);
void to_json(json& j, const HintCheck& c);
void from_json(const json& j, HintCheck& c);
void to_json(json& j, const MeasurementEvidence& m);
void from_json(const json& j, MeasurementEvidence& m);
void to_json(json& j, const HintEvidence& e);
void from_json(const json& j, HintEvidence& e);
void to_json(json& j, const DomainVerdict& v);
void from_json(const json& j, DomainVerdict& v);
void to_json(json& j, const DomainTask& t);
void from_json(const json& j, DomainTask& t);
void to_json(json& j, const DomainState& s);
void from_json(const json& j, DomainState& s);
void to_json(json& j, const IpAddress& ip);
void from_json(const json& j, IpAddress& ip);

/// One JSON document per line.
template <typename T>
void write_jsonl(std::ostream& out, const std::vector<T>& items)
{
    for (const auto& item : items) out << json(item).dump() << '\n';
}

/// Reads one JSON document per non-blank line. Throws std::runtime_error
/// naming the file and line on malformed input.
std::vector<json> read_jsonl(const std::filesystem::path& path);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path)
{
    std::vector<T> out;
    for (const auto& j : read_jsonl(path)) out.push_back(j.get<T>());
    return out;
}

/// Writes to a sibling temporary file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct Target {
    IpAddress ip;
    std::string fqdn;
};

/// "ip,fqdn" lines; rows with an unparseable IP are skipped into `warnings`.
std::vector<Target> load_targets(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// "probe_id,lat,lon,active" with a header row; active is 1/0/true/false.
std::vector<Probe> load_probes(const std::filesystem::path& path);
void write_probes(std::ostream& out, const std::vector<Probe>& probes);

/// "name,lat,lon" with a header row.
std::vector<Vantage> load_vantages(const std::filesystem::path& path);
void write_vantages(std::ostream& out, const std::vector<Vantage>& vantages);

/// First line {"noise": {"min_ms", "max_ms"}}, then {"ip", "lat", "lon", "responsive"} per router.
SimWorld load_sim_world(const std::filesystem::path& routers, const std::filesystem::path& probes);
void write_sim_routers(std::ostream& out, const SimWorld& world);

/// "ip,origin_id,rtt_ms|timeout,timestamp".
void write_measurements(std::ostream& out, const std::vector<MeasurementResult>& results);

/// Full-precision decimal text for doubles in delimited files.
std::string format_double(double v);

}  // namespace hloc
