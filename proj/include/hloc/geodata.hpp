#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hloc/geo.hpp"

namespace hloc {

enum class CodeSource : std::uint8_t { IATA, ICAO, FAA, UNLOCODE, GEONAMES, CLLI };

inline constexpr CodeSource kAllSources[] = {CodeSource::IATA,     CodeSource::ICAO,
                                             CodeSource::FAA,      CodeSource::UNLOCODE,
                                             CodeSource::GEONAMES, CodeSource::CLLI};

std::string_view to_string(CodeSource s);
std::optional<CodeSource> parse_code_source(std::string_view s);

using LocationId = std::uint32_t;

struct RawCode {
    std::string code;
    CodeSource source = CodeSource::IATA;
    LatLon pos;
    std::uint64_t population = 0;
    std::string name;  // place name the code refers to; used for merge ordering and display
};

struct LocationCode {
    std::string code;
    CodeSource source = CodeSource::IATA;

    friend auto operator<=>(const LocationCode&, const LocationCode&) = default;
};

/// One constituent record of a merged location, kept so the merge can be
/// replayed and audited.
struct LocationMember {
    LocationCode key;
    LatLon pos;
    std::uint64_t population = 0;
    std::string name;
};

struct Location {
    LocationId id = 0;
    std::string name;
    LatLon pos;
    std::uint64_t population = 0;
    std::set<LocationCode> codes;
    std::vector<LocationMember> members;
};

struct GeoConfig {
    double merge_radius_km = 100.0;
    std::uint64_t population_threshold = 100000;
    std::set<std::string> whitelist;  // lowercase location names

    void validate() const;
};

/// A code file of one source, in that source's column layout.
struct CodeFile {
    CodeSource source;
    std::filesystem::path path;
};

struct ParseStats {
    std::size_t rows = 0;
    std::size_t accepted = 0;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;  // "<file>:<line>: <reason>"
};

struct ParseResult {
    std::vector<RawCode> codes;
    ParseStats stats;
};

/// Lowercases and strips characters that never appear in DNS labels
/// (spaces, dots, apostrophes). Returns nullopt when the remainder is empty
/// or still contains characters outside [a-z0-9-].
std::optional<std::string> normalize_code(std::string_view raw);

/// Parses a UN/LOCODE coordinate field such as "2945N 09522W".
std::optional<LatLon> parse_unlocode_coordinates(std::string_view field);

/// Parses one file. Throws std::runtime_error when the file cannot be read.
ParseResult parse_code_file(const CodeFile& file);
ParseResult parse_code_files(const std::vector<CodeFile>& files, const GeoConfig& config);

/// Greedy population-ordered merge. Duplicate (code, source) pairs keep only
/// the occurrence that sorts first; the rest are dropped.
std::vector<Location> merge_locations(std::vector<RawCode> codes, const GeoConfig& config);

std::vector<Location> apply_population_filter(const std::vector<Location>& locations,
                                              const GeoConfig& config);

/// Re-flattens merged locations to their constituent raw codes.
std::vector<RawCode> flatten_locations(const std::vector<Location>& locations);

}  // namespace hloc
