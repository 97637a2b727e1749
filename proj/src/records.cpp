#include "hloc/records.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "text.hpp"

namespace hloc {

namespace {

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v)
{
    j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

CodeSource source_from(const json& j)
{
    const auto s = parse_code_source(j.get<std::string>());
    if (!s) throw std::runtime_error("unknown code source " + j.dump());
    return *s;
}

std::string_view kind_name(Origin::Kind k) { return k == Origin::Kind::Probe ? "probe" : "vantage"; }

}  // namespace

void to_json(json& j, const IpAddress& ip) { j = ip.to_string(); }

void from_json(const json& j, IpAddress& ip)
{
    const auto parsed = IpAddress::parse(j.get<std::string>());
    if (!parsed) throw std::runtime_error("bad ip address " + j.dump());
    ip = *parsed;
}

void to_json(json& j, const Location& loc)
{
    json codes = json::array();
    for (const auto& m : loc.members) {
        codes.push_back({{"code", m.key.code},
                         {"source", to_string(m.key.source)},
                         {"lat", m.pos.lat},
                         {"lon", m.pos.lon},
                         {"population", m.population},
                         {"name", m.name}});
    }
    j = {{"id", loc.id},
         {"name", loc.name},
         {"lat", loc.pos.lat},
         {"lon", loc.pos.lon},
         {"population", loc.population},
         {"codes", std::move(codes)}};
}

void from_json(const json& j, Location& loc)
{
    loc = Location{};
    loc.id = j.at("id").get<LocationId>();
    loc.name = j.at("name").get<std::string>();
    loc.pos = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    loc.population = j.at("population").get<std::uint64_t>();
    for (const auto& c : j.at("codes")) {
        LocationMember m;
        m.key = {c.at("code").get<std::string>(), source_from(c.at("source"))};
        m.pos = {c.value("lat", loc.pos.lat), c.value("lon", loc.pos.lon)};
        m.population = c.value("population", std::uint64_t{0});
        m.name = c.value("name", loc.name);
        loc.codes.insert(m.key);
        loc.members.push_back(std::move(m));
    }
}

void to_json(json& j, const DomainRecord& rec)
{
    j = {{"ip", rec.ip},
         {"fqdn", rec.fqdn},
         {"labels", rec.labels},
         {"ip_encoded", rec.ip_encoded},
         {"valid", rec.valid()},
         {"reason", rec.rejection ? json(to_string(*rec.rejection)) : json(nullptr)}};
}

void from_json(const json& j, DomainRecord& rec)
{
    rec = DomainRecord{};
    rec.ip = j.at("ip").get<IpAddress>();
    rec.fqdn = j.at("fqdn").get<std::string>();
    rec.labels = j.at("labels").get<std::vector<std::string>>();
    rec.ip_encoded = j.at("ip_encoded").get<bool>();
    if (const auto r = get_opt<std::string>(j, "reason")) rec.rejection = parse_rejection(*r);
}

void to_json(json& j, const LocationHint& h)
{
    j = {{"fqdn", h.fqdn},
         {"ip", h.ip},
         {"location_id", h.location_id},
         {"code", h.code},
         {"source", to_string(h.source)},
         {"label_index", h.label_index},
         {"char_offset", h.char_offset},
         {"rank", h.discovery_rank},
         {"status", to_string(h.status)}};
}

void from_json(const json& j, LocationHint& h)
{
    h.fqdn = j.at("fqdn").get<std::string>();
    h.ip = j.at("ip").get<IpAddress>();
    h.location_id = j.at("location_id").get<LocationId>();
    h.code = j.at("code").get<std::string>();
    h.source = source_from(j.at("source"));
    h.label_index = j.at("label_index").get<std::size_t>();
    h.char_offset = j.at("char_offset").get<std::size_t>();
    h.discovery_rank = j.value("rank", std::size_t{0});
    const auto st = parse_hint_status(j.value("status", std::string("pending")));
    if (!st) throw std::runtime_error("unknown hint status in " + j.dump());
    h.status = *st;
}

void to_json(json& j, const HintCheck& c)
{
    j = {{"outcome", to_string(c.outcome)},
         {"threshold_ms", c.threshold_ms},
         {"buffer_used_ms", c.buffer_used_ms},
         {"excess_latency_ms", c.excess_latency_ms},
         {"timeout", c.timeout},
         {"suspect", c.suspect}};
}

void from_json(const json& j, HintCheck& c)
{
    const auto o = j.at("outcome").get<std::string>();
    c.outcome = o == "verified" ? HintOutcome::Verified
                : o == "falsified" ? HintOutcome::Falsified
                                   : HintOutcome::Inconclusive;
    c.threshold_ms = j.at("threshold_ms").get<double>();
    c.buffer_used_ms = j.at("buffer_used_ms").get<double>();
    c.excess_latency_ms = j.at("excess_latency_ms").get<double>();
    c.timeout = j.at("timeout").get<bool>();
    c.suspect = j.at("suspect").get<bool>();
}

void to_json(json& j, const MeasurementEvidence& m)
{
    j = {{"origin", m.origin_id},
         {"kind", kind_name(m.kind)},
         {"lat", m.origin_pos.lat},
         {"lon", m.origin_pos.lon},
         {"timestamp", m.timestamp}};
    put_opt(j, "rtt_ms", m.rtt_ms);
}

void from_json(const json& j, MeasurementEvidence& m)
{
    m.origin_id = j.at("origin").get<std::string>();
    m.kind = j.at("kind").get<std::string>() == "probe" ? Origin::Kind::Probe : Origin::Kind::Vantage;
    m.origin_pos = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    m.rtt_ms = get_opt<double>(j, "rtt_ms");
    m.timestamp = j.value("timestamp", std::int64_t{0});
}

void to_json(json& j, const HintEvidence& e)
{
    j = {{"hint", e.hint}, {"lat", e.hint_pos.lat}, {"lon", e.hint_pos.lon}, {"note", e.note}};
    put_opt(j, "probe", e.probe_id);
    put_opt(j, "probe_distance_km", e.probe_distance_km);
    put_opt(j, "measurement", e.measurement);
    put_opt(j, "check", e.check);
}

void from_json(const json& j, HintEvidence& e)
{
    e.hint = j.at("hint").get<LocationHint>();
    e.hint_pos = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    e.note = j.value("note", std::string{});
    e.probe_id = get_opt<std::string>(j, "probe");
    e.probe_distance_km = get_opt<double>(j, "probe_distance_km");
    e.measurement = get_opt<std::size_t>(j, "measurement");
    e.check = get_opt<HintCheck>(j, "check");
}

void to_json(json& j, const DomainVerdict& v)
{
    j = {{"ip", v.ip},
         {"fqdn", v.fqdn},
         {"ip_encoded", v.ip_encoded},
         {"category", to_string(v.category)},
         {"falsified", v.tally.falsified},
         {"inconclusive", v.tally.latency},
         {"timeouts", v.tally.timeouts},
         {"no_probe", v.tally.no_probe},
         {"pending", v.tally.pending},
         {"measurements_used", v.pinpoint_measurements}};
    if (const auto* h = v.verified_hint()) {
        j["verified"] = {{"location_id", h->hint.location_id},
                         {"code", h->hint.code},
                         {"source", to_string(h->hint.source)},
                         {"lat", h->hint_pos.lat},
                         {"lon", h->hint_pos.lon}};
    } else {
        j["verified"] = nullptr;
    }
    put_opt(j, "max_error_km", v.max_error_km);
    put_opt(j, "verified_index", v.verified);
    j["measurements"] = v.measurements;
    j["hints"] = v.hints;
}

void from_json(const json& j, DomainVerdict& v)
{
    v = DomainVerdict{};
    v.ip = j.at("ip").get<IpAddress>();
    v.fqdn = j.at("fqdn").get<std::string>();
    v.ip_encoded = j.value("ip_encoded", false);
    const auto cat = parse_verdict_category(j.at("category").get<std::string>());
    if (!cat) throw std::runtime_error("unknown verdict category in " + j.dump());
    v.category = *cat;
    v.tally.falsified = j.value("falsified", std::size_t{0});
    v.tally.latency = j.value("inconclusive", std::size_t{0});
    v.tally.timeouts = j.value("timeouts", std::size_t{0});
    v.tally.no_probe = j.value("no_probe", std::size_t{0});
    v.tally.pending = j.value("pending", std::size_t{0});
    v.pinpoint_measurements = j.value("measurements_used", std::size_t{0});
    v.max_error_km = get_opt<double>(j, "max_error_km");
    v.verified = get_opt<std::size_t>(j, "verified_index");
    v.measurements = j.value("measurements", std::vector<MeasurementEvidence>{});
    v.hints = j.value("hints", std::vector<HintEvidence>{});
}

void to_json(json& j, const DomainTask& t)
{
    j = {{"fqdn", t.fqdn}, {"ip", t.ip}, {"ip_encoded", t.ip_encoded}, {"filtered", t.filtered}, {"hints", t.hints}};
}

void from_json(const json& j, DomainTask& t)
{
    t.fqdn = j.at("fqdn").get<std::string>();
    t.ip = j.at("ip").get<IpAddress>();
    t.ip_encoded = j.value("ip_encoded", false);
    t.filtered = j.value("filtered", false);
    t.hints = j.at("hints").get<std::vector<LocationHint>>();
}

void to_json(json& j, const DomainState& s)
{
    j = {{"task", s.task},
         {"evidence", s.evidence},
         {"measurements", s.measurements},
         {"started", s.started},
         {"prescan_applied", s.prescan_applied},
         {"measurements_used", s.pinpoint_measurements}};
}

void from_json(const json& j, DomainState& s)
{
    s.task = j.at("task").get<DomainTask>();
    s.evidence = j.at("evidence").get<std::vector<HintEvidence>>();
    s.measurements = j.at("measurements").get<std::vector<MeasurementEvidence>>();
    s.started = j.at("started").get<bool>();
    s.prescan_applied = j.at("prescan_applied").get<bool>();
    s.pinpoint_measurements = j.at("measurements_used").get<std::size_t>();
}

std::vector<json> read_jsonl(const std::filesystem::path& path)
{
    auto in = text::open_input(path);
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (text::read_line(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Target> load_targets(const std::filesystem::path& path, std::vector<std::string>* warnings)
{
    auto in = text::open_input(path);
    std::vector<Target> out;
    std::string line;
    std::size_t line_no = 0;
    while (text::read_line(in, line)) {
        ++line_no;
        if (text::is_blank_or_comment(line)) continue;
        const auto comma = line.find(',');
        const auto ip_text = text::trim(std::string_view(line).substr(0, comma));
        const auto ip = IpAddress::parse(ip_text);
        if (!ip || comma == std::string::npos) {
            if (line_no == 1 && ip_text == "ip") continue;  // header
            if (warnings) warnings->push_back(path.string() + ":" + std::to_string(line_no) + ": expected ip,fqdn");
            continue;
        }
        out.push_back({*ip, std::string(text::trim(std::string_view(line).substr(comma + 1)))});
    }
    return out;
}

namespace {

template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::size_t min_fields, Fn&& fn)
{
    auto in = text::open_input(path);
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (text::read_line(in, line)) {
        ++line_no;
        if (text::is_blank_or_comment(line)) continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = text::split_delimited(line, ',');
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (f.size() < min_fields) throw std::runtime_error(where + ": too few fields");
        fn(f, where);
    }
}

LatLon parse_pos(const std::vector<std::string>& f, std::size_t i, const std::string& where)
{
    const auto lat = text::parse_double(f[i]);
    const auto lon = text::parse_double(f[i + 1]);
    if (!lat || !lon || !valid_coordinates({*lat, *lon})) throw std::runtime_error(where + ": bad coordinates");
    return {*lat, *lon};
}

}  // namespace

std::vector<Probe> load_probes(const std::filesystem::path& path)
{
    std::vector<Probe> probes;
    for_each_row(path, 3, [&](const auto& f, const std::string& where) {
        Probe p;
        p.id = std::string(text::trim(f[0]));
        p.pos = parse_pos(f, 1, where);
        if (f.size() > 3) {
            const auto a = text::to_lower(text::trim(f[3]));
            p.active = !(a == "0" || a == "false" || a == "no");
        }
        if (f.size() > 4 && !text::trim(f[4]).empty()) p.framework = std::string(text::trim(f[4]));
        probes.push_back(std::move(p));
    });
    return probes;
}

void write_probes(std::ostream& out, const std::vector<Probe>& probes)
{
    out << "probe_id,lat,lon,active\n";
    for (const auto& p : probes)
        out << p.id << ',' << format_double(p.pos.lat) << ',' << format_double(p.pos.lon) << ','
            << (p.active ? 1 : 0) << '\n';
}

std::vector<Vantage> load_vantages(const std::filesystem::path& path)
{
    std::vector<Vantage> out;
    for_each_row(path, 3, [&](const auto& f, const std::string& where) {
        out.push_back({std::string(text::trim(f[0])), parse_pos(f, 1, where)});
    });
    return out;
}

void write_vantages(std::ostream& out, const std::vector<Vantage>& vantages)
{
    out << "name,lat,lon\n";
    for (const auto& v : vantages)
        out << v.name << ',' << format_double(v.pos.lat) << ',' << format_double(v.pos.lon) << '\n';
}

SimWorld load_sim_world(const std::filesystem::path& routers, const std::filesystem::path& probes)
{
    SimWorld world;
    world.probes = load_probes(probes);
    const auto docs = read_jsonl(routers);
    for (const auto& j : docs) {
        if (j.contains("noise")) {
            world.noise.min_ms = j["noise"].at("min_ms").get<double>();
            world.noise.max_ms = j["noise"].at("max_ms").get<double>();
            continue;
        }
        SimRouter r{{j.at("lat").get<double>(), j.at("lon").get<double>()}, j.value("responsive", true)};
        check_coordinates(r.pos);
        world.routers[j.at("ip").get<IpAddress>()] = r;
    }
    return world;
}

void write_sim_routers(std::ostream& out, const SimWorld& world)
{
    out << json{{"noise", {{"min_ms", world.noise.min_ms}, {"max_ms", world.noise.max_ms}}}}.dump() << '\n';
    for (const auto& [ip, r] : world.routers)
        out << json{{"ip", ip}, {"lat", r.pos.lat}, {"lon", r.pos.lon}, {"responsive", r.responsive}}.dump() << '\n';
}

void write_measurements(std::ostream& out, const std::vector<MeasurementResult>& results)
{
    out << "ip,origin_id,rtt_ms,timestamp\n";
    for (const auto& r : results)
        out << r.target.to_string() << ',' << r.origin_id << ','
            << (r.rtt_ms ? format_double(*r.rtt_ms) : std::string("timeout")) << ',' << r.timestamp << '\n';
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace hloc
