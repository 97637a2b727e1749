#include "hloc/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "text.hpp"

namespace hloc {

std::string_view to_string(CodeSource s)
{
    switch (s) {
    case CodeSource::IATA: return "IATA";
    case CodeSource::ICAO: return "ICAO";
    case CodeSource::FAA: return "FAA";
    case CodeSource::UNLOCODE: return "UNLOCODE";
    case CodeSource::GEONAMES: return "GEONAMES";
    case CodeSource::CLLI: return "CLLI";
    }
    return "?";
}

std::optional<CodeSource> parse_code_source(std::string_view s)
{
    const auto lower = text::to_lower(text::trim(s));
    for (auto src : kAllSources) {
        if (text::to_lower(to_string(src)) == lower) return src;
    }
    if (lower == "un/locode" || lower == "locode") return CodeSource::UNLOCODE;
    return std::nullopt;
}

void GeoConfig::validate() const
{
    if (!(merge_radius_km > 0.0) || !std::isfinite(merge_radius_km))
        throw std::invalid_argument("merge_radius_km must be > 0");
}

std::optional<std::string> normalize_code(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (std::isspace(c) || c == '.' || c == '\'') continue;
        const char lc = static_cast<char>(std::tolower(c));
        const bool ok = (lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9') || lc == '-';
        if (!ok) return std::nullopt;
        out.push_back(lc);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

namespace {

// "DDMM[NS]" or "DDDMM[EW]"
std::optional<double> parse_dm(std::string_view part, std::size_t deg_digits, char pos_hemi,
                               char neg_hemi)
{
    if (part.size() != deg_digits + 3) return std::nullopt;
    const char hemi = static_cast<char>(std::toupper(static_cast<unsigned char>(part.back())));
    if (hemi != pos_hemi && hemi != neg_hemi) return std::nullopt;
    const auto deg = text::parse_int<int>(part.substr(0, deg_digits));
    const auto min = text::parse_int<int>(part.substr(deg_digits, 2));
    if (!deg || !min || *min >= 60) return std::nullopt;
    const double v = *deg + *min / 60.0;
    return hemi == neg_hemi ? -v : v;
}

struct Row {
    std::vector<std::string> fields;
    std::size_t line_no;
};

class RowReader {
public:
    RowReader(const std::filesystem::path& path, char delim)
        : path_(path), in_(text::open_input(path)), delim_(delim)
    {
    }

    // Skips comments and the header row.
    bool next(Row& row)
    {
        std::string line;
        while (text::read_line(in_, line)) {
            ++line_no_;
            if (text::is_blank_or_comment(line)) continue;
            if (!header_seen_) {
                header_seen_ = true;
                continue;
            }
            row.fields = text::split_delimited(line, delim_);
            row.line_no = line_no_;
            return true;
        }
        return false;
    }

    std::string where(const Row& row) const
    {
        return path_.string() + ":" + std::to_string(row.line_no);
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    char delim_;
    std::size_t line_no_ = 0;
    bool header_seen_ = false;
};

std::optional<LatLon> parse_lat_lon(std::string_view lat, std::string_view lon)
{
    const auto la = text::parse_double(lat);
    const auto lo = text::parse_double(lon);
    if (!la || !lo) return std::nullopt;
    LatLon p{*la, *lo};
    if (!valid_coordinates(p)) return std::nullopt;
    return p;
}

std::uint64_t parse_population(const std::vector<std::string>& f, std::size_t idx)
{
    if (idx >= f.size()) return 0;
    return text::parse_int<std::uint64_t>(f[idx]).value_or(0);
}

class Collector {
public:
    explicit Collector(ParseResult& out) : out_(out) {}

    void skip(const std::string& where, const std::string& why)
    {
        ++out_.stats.skipped;
        out_.stats.warnings.push_back(where + ": " + why);
    }

    void accept(RawCode code) { out_.codes.push_back(std::move(code)); }

private:
    ParseResult& out_;
};

void parse_airport(RowReader& reader, CodeSource source, ParseResult& out)
{
    Collector col(out);
    Row row;
    while (reader.next(row)) {
        ++out.stats.rows;
        const auto& f = row.fields;
        if (f.size() < 4) {
            col.skip(reader.where(row), "expected code,name,lat,lon");
            continue;
        }
        const auto code = normalize_code(f[0]);
        if (!code) {
            col.skip(reader.where(row), "malformed code '" + f[0] + "'");
            continue;
        }
        const auto pos = parse_lat_lon(f[2], f[3]);
        if (!pos) {
            col.skip(reader.where(row), "missing or invalid coordinates");
            continue;
        }
        ++out.stats.accepted;
        col.accept({*code, source, *pos, parse_population(f, 4), std::string(text::trim(f[1]))});
    }
}

void parse_unlocode(RowReader& reader, ParseResult& out)
{
    Collector col(out);
    Row row;
    while (reader.next(row)) {
        ++out.stats.rows;
        const auto& f = row.fields;
        if (f.size() < 4) {
            col.skip(reader.where(row), "expected country,place,name,coordinates");
            continue;
        }
        const auto country = normalize_code(f[0]);
        const auto place = normalize_code(f[1]);
        if (!country || !place || country->size() != 2 || place->size() != 3) {
            col.skip(reader.where(row), "malformed UN/LOCODE '" + f[0] + " " + f[1] + "'");
            continue;
        }
        const auto pos = parse_unlocode_coordinates(f[3]);
        if (!pos) {
            col.skip(reader.where(row), "missing or invalid coordinates");
            continue;
        }
        ++out.stats.accepted;
        col.accept({*country + *place, CodeSource::UNLOCODE, *pos, parse_population(f, 4),
                    std::string(text::trim(f[2]))});
    }
}

void parse_clli(RowReader& reader, ParseResult& out)
{
    Collector col(out);
    Row row;
    while (reader.next(row)) {
        ++out.stats.rows;
        const auto& f = row.fields;
        if (f.size() < 3) {
            col.skip(reader.where(row), "expected code,lat,lon");
            continue;
        }
        auto code = normalize_code(f[0]);
        if (!code || code->size() < 6) {
            col.skip(reader.where(row), "malformed CLLI code '" + f[0] + "'");
            continue;
        }
        code->resize(6);
        const auto pos = parse_lat_lon(f[1], f[2]);
        if (!pos) {
            col.skip(reader.where(row), "missing or invalid coordinates");
            continue;
        }
        ++out.stats.accepted;
        col.accept({*code, CodeSource::CLLI, *pos, parse_population(f, 3), *code});
    }
}

void parse_geonames(RowReader& reader, ParseResult& out)
{
    Collector col(out);
    Row row;
    while (reader.next(row)) {
        ++out.stats.rows;
        const auto& f = row.fields;
        if (f.size() < 6) {
            col.skip(reader.where(row), "expected geonameid,name,alternatenames,lat,lon,population");
            continue;
        }
        const auto pos = parse_lat_lon(f[3], f[4]);
        if (!pos) {
            col.skip(reader.where(row), "missing or invalid coordinates");
            continue;
        }
        const std::string name(text::trim(f[1]));
        const auto primary = normalize_code(name);
        if (!primary) {
            col.skip(reader.where(row), "malformed name '" + name + "'");
            continue;
        }
        const auto population = parse_population(f, 5);
        ++out.stats.accepted;
        std::set<std::string> seen{*primary};
        col.accept({*primary, CodeSource::GEONAMES, *pos, population, name});
        // Alternate names become extra codes at the same coordinates; non-ASCII
        // spellings cannot occur in hostnames and are dropped.
        for (const auto& alt : text::split(f[2], ',')) {
            const auto code = normalize_code(alt);
            if (!code || !seen.insert(*code).second) continue;
            col.accept({*code, CodeSource::GEONAMES, *pos, population, name});
        }
    }
}

}  // namespace

std::optional<LatLon> parse_unlocode_coordinates(std::string_view field)
{
    const auto parts = text::split(text::trim(field), ' ');
    if (parts.size() != 2) return std::nullopt;
    const auto lat = parse_dm(parts[0], 2, 'N', 'S');
    const auto lon = parse_dm(parts[1], 3, 'E', 'W');
    if (!lat || !lon) return std::nullopt;
    LatLon p{*lat, *lon};
    if (!valid_coordinates(p)) return std::nullopt;
    return p;
}

ParseResult parse_code_file(const CodeFile& file)
{
    ParseResult out;
    const char delim = file.source == CodeSource::GEONAMES ? '\t' : ',';
    RowReader reader(file.path, delim);
    switch (file.source) {
    case CodeSource::IATA:
    case CodeSource::ICAO:
    case CodeSource::FAA: parse_airport(reader, file.source, out); break;
    case CodeSource::UNLOCODE: parse_unlocode(reader, out); break;
    case CodeSource::CLLI: parse_clli(reader, out); break;
    case CodeSource::GEONAMES: parse_geonames(reader, out); break;
    }
    return out;
}

ParseResult parse_code_files(const std::vector<CodeFile>& files, const GeoConfig& config)
{
    config.validate();
    ParseResult all;
    for (const auto& file : files) {
        auto part = parse_code_file(file);
        all.stats.rows += part.stats.rows;
        all.stats.accepted += part.stats.accepted;
        all.stats.skipped += part.stats.skipped;
        for (auto& w : part.stats.warnings) all.stats.warnings.push_back(std::move(w));
        for (auto& c : part.codes) all.codes.push_back(std::move(c));
    }
    return all;
}

namespace {

// Equal-angle grid over formed locations so each code only inspects nearby
// cells instead of every location.
class LocationGrid {
public:
    explicit LocationGrid(double radius_km)
        : radius_km_(radius_km),
          cell_deg_(std::max(0.25, radius_km / kKmPerDeg)),
          cols_(static_cast<int>(std::ceil(360.0 / cell_deg_)))
    {
    }

    void insert(std::size_t index, const LatLon& p) { cells_[key(row_of(p.lat), col_of(p.lon))].push_back(index); }

    template <typename Fn>
    void for_each_candidate(const LatLon& p, Fn&& fn) const
    {
        const double dlat = radius_km_ / kKmPerDeg + 1e-9;
        const int r0 = row_of(std::max(-90.0, p.lat - dlat));
        const int r1 = row_of(std::min(90.0, p.lat + dlat));
        const double max_abs_lat = std::min(90.0, std::abs(p.lat) + dlat);
        const double cos_lat = std::cos(max_abs_lat * std::numbers::pi / 180.0);
        const bool all_cols = cos_lat < 1e-3 || dlat / cos_lat >= 180.0;
        const double dlon = all_cols ? 180.0 : dlat / cos_lat;
        const int c0 = all_cols ? 0 : col_of(p.lon - dlon);
        const int span = all_cols ? cols_ : (col_of_unwrapped(p.lon + dlon) - col_of_unwrapped(p.lon - dlon) + 1);
        for (int r = r0; r <= r1; ++r) {
            for (int i = 0; i < std::min(span, cols_); ++i) {
                const auto it = cells_.find(key(r, (c0 + i) % cols_));
                if (it == cells_.end()) continue;
                for (auto idx : it->second) fn(idx);
            }
        }
    }

private:
    static constexpr double kKmPerDeg = kEarthRadiusKm * std::numbers::pi / 180.0;

    int row_of(double lat) const { return static_cast<int>(std::floor((lat + 90.0) / cell_deg_)); }
    int col_of_unwrapped(double lon) const { return static_cast<int>(std::floor((lon + 180.0) / cell_deg_)); }
    int col_of(double lon) const { return ((col_of_unwrapped(lon) % cols_) + cols_) % cols_; }
    static std::int64_t key(int r, int c) { return (static_cast<std::int64_t>(r) << 32) | static_cast<std::uint32_t>(c); }

    double radius_km_;
    double cell_deg_;
    int cols_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

bool merge_order(const RawCode& a, const RawCode& b)
{
    if (a.population != b.population) return a.population > b.population;
    return std::tie(a.name, a.pos.lat, a.pos.lon, a.code, a.source) <
           std::tie(b.name, b.pos.lat, b.pos.lon, b.code, b.source);
}

}  // namespace

std::vector<Location> merge_locations(std::vector<RawCode> codes, const GeoConfig& config)
{
    config.validate();
    for (const auto& c : codes) check_coordinates(c.pos);
    std::sort(codes.begin(), codes.end(), merge_order);

    std::vector<Location> locations;
    LocationGrid grid(config.merge_radius_km);
    std::set<LocationCode> placed;

    for (auto& c : codes) {
        LocationCode key{c.code, c.source};
        if (!placed.insert(key).second) continue;

        std::size_t best = locations.size();
        grid.for_each_candidate(c.pos, [&](std::size_t idx) {
            if (idx < best && great_circle_km(locations[idx].pos, c.pos) <= config.merge_radius_km)
                best = idx;
        });

        if (best == locations.size()) {
            Location loc;
            loc.id = static_cast<LocationId>(locations.size());
            loc.name = c.name.empty() ? c.code : c.name;
            loc.pos = c.pos;
            loc.population = c.population;
            grid.insert(locations.size(), c.pos);
            locations.push_back(std::move(loc));
        }
        auto& loc = locations[best];
        loc.codes.insert(key);
        loc.members.push_back({std::move(key), c.pos, c.population, std::move(c.name)});
    }
    return locations;
}

std::vector<Location> apply_population_filter(const std::vector<Location>& locations,
                                              const GeoConfig& config)
{
    std::vector<Location> kept;
    for (const auto& loc : locations) {
        if (loc.population >= config.population_threshold ||
            config.whitelist.count(text::to_lower(loc.name)) > 0) {
            kept.push_back(loc);
        }
    }
    return kept;
}

std::vector<RawCode> flatten_locations(const std::vector<Location>& locations)
{
    std::vector<RawCode> out;
    for (const auto& loc : locations) {
        for (const auto& m : loc.members)
            out.push_back({m.key.code, m.key.source, m.pos, m.population, m.name});
    }
    return out;
}

}  // namespace hloc
