#include "hloc/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "hloc/codetrie.hpp"
#include "hloc/log.hpp"
#include "hloc/records.hpp"
#include "text.hpp"

namespace hloc {

namespace fs = std::filesystem;

namespace {

fs::path data_dir()
{
    if (const char* env = std::getenv("HLOC_DATA_DIR"); env && *env) return env;
    return HLOC_DATA_DIR;
}

void require_file(const fs::path& path, std::string_view what, std::string_view producer = {})
{
    if (path.empty()) throw ConfigError(std::string(what) + " is not configured");
    if (fs::is_regular_file(path)) return;
    std::string msg = std::string(what) + " not found: " + path.string();
    if (!producer.empty()) msg += "; run `hloc " + std::string(producer) + "` first";
    throw InputError(msg);
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items)
{
    std::ostringstream out;
    write_jsonl(out, items);
    return out.str();
}

template <typename T>
std::vector<T> read_stage(const fs::path& path, std::string_view what, std::string_view producer)
{
    require_file(path, what, producer);
    try {
        return read_jsonl_as<T>(path);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw InputError(e.what());
    }
}

json percentiles_json(const Percentiles& p) { return {{"p50", p.p50}, {"p90", p.p90}, {"p99", p.p99}, {"max", p.max}}; }

json count_stats_json(const CountStats& s)
{
    json by_source = json::object();
    for (const auto& [src, n] : s.hints_by_source) by_source[std::string(to_string(src))] = n;
    return {{"domains", s.domains},
            {"no_match", s.no_match},
            {"no_match_fraction", s.no_match_fraction},
            {"mean_hints", s.mean_hints},
            {"mean_occurrences", s.mean_occurrences},
            {"hints_percentiles", percentiles_json(s.hints_pct)},
            {"hints_by_source", by_source}};
}

json cdf_json(const Cdf& c)
{
    json q = json::array();
    for (const auto& [f, v] : c.quantiles) q.push_back({f, v});
    return {{"count", c.count}, {"quantiles", q}};
}

json sensitivity_json(const SensitivityReport& r)
{
    return {{"probe_distance_km", cdf_json(r.probe_distance_km)},
            {"buffer_used_ms", cdf_json(r.buffer_used_ms)},
            {"max_error_km", cdf_json(r.max_error_km)},
            {"excess_latency_ms", cdf_json(r.excess_latency_ms)},
            {"histogram_bin_ms", r.histogram_bin_ms},
            {"buffer_histogram", r.buffer_histogram}};
}

json validation_json(const ValidationConfig& v)
{
    return {{"x_km", v.x_km},
            {"a_ms", v.a_ms},
            {"c", v.c},
            {"c0_km_per_s", v.c0_km_per_s},
            {"rtt_floor_ms", v.rtt_floor_ms},
            {"packets", v.packets}};
}

std::string domain_key(const IpAddress& ip, const std::string& fqdn) { return ip.to_string() + " " + fqdn; }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where)
{
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("unknown key \"" + k + "\" in " + std::string(where));
    }
}

}  // namespace

std::string_view to_string(BackendKind k)
{
    switch (k) {
    case BackendKind::Sim: return "sim";
    case BackendKind::File: return "file";
    case BackendKind::Remote: return "remote";
    }
    return "sim";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s)
{
    if (s == "sim") return BackendKind::Sim;
    if (s == "file") return BackendKind::File;
    if (s == "remote") return BackendKind::Remote;
    return std::nullopt;
}

CampaignConfig CampaignConfig::from_json(const json& j, const fs::path& base_dir)
{
    CampaignConfig cfg;
    auto path = [&](const json& v) {
        fs::path p = v.get<std::string>();
        return p.empty() || p.is_absolute() ? p : base_dir / p;
    };
    try {
        check_keys(j,
                   {"output_dir", "seed", "codes", "geo", "domains", "tlds", "public_suffix", "blacklists",
                    "hint_order", "probes", "vantages", "prescan", "backend", "validation", "max_concurrency",
                    "max_measurements", "evaluate", "simulate"},
                   "config");
        if (j.contains("output_dir")) cfg.output_dir = path(j["output_dir"]);
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        for (const auto& c : j.value("codes", json::array())) {
            check_keys(c, {"source", "path"}, "codes entry");
            const auto src = parse_code_source(c.at("source").get<std::string>());
            if (!src) throw ConfigError("unknown code source " + c.at("source").dump());
            cfg.code_files.push_back({*src, path(c.at("path"))});
        }
        if (j.contains("geo")) {
            const auto& g = j["geo"];
            check_keys(g, {"merge_radius_km", "population_threshold", "whitelist"}, "geo");
            cfg.geo.merge_radius_km = g.value("merge_radius_km", cfg.geo.merge_radius_km);
            cfg.geo.population_threshold = g.value("population_threshold", cfg.geo.population_threshold);
            for (const auto& w : g.value("whitelist", json::array()))
                cfg.geo.whitelist.insert(text::to_lower(w.get<std::string>()));
        }
        if (j.contains("domains")) cfg.domains = path(j["domains"]);
        if (j.contains("tlds")) cfg.tlds = path(j["tlds"]);
        if (j.contains("public_suffix")) cfg.public_suffix = path(j["public_suffix"]);
        if (j.contains("blacklists")) {
            const auto& b = j["blacklists"];
            check_keys(b, {"codes", "words", "code_locations"}, "blacklists");
            if (b.contains("codes")) cfg.blacklists.codes = path(b["codes"]);
            if (b.contains("words")) cfg.blacklists.words = path(b["words"]);
            if (b.contains("code_locations")) cfg.blacklists.code_locations = path(b["code_locations"]);
        }
        if (j.contains("hint_order")) {
            const auto o = j["hint_order"].get<std::string>();
            if (o == "ranked")
                cfg.hint_order = HintOrder::Ranked;
            else if (o == "discovery")
                cfg.hint_order = HintOrder::Discovery;
            else
                throw ConfigError("hint_order must be \"ranked\" or \"discovery\"");
        }
        if (j.contains("probes")) cfg.probes = path(j["probes"]);
        if (j.contains("vantages")) cfg.vantages = path(j["vantages"]);
        cfg.prescan = j.value("prescan", cfg.prescan);
        if (j.contains("backend")) {
            const auto& b = j["backend"];
            check_keys(b,
                       {"type", "world", "results", "base_url", "api_key_env", "poll_interval_ms", "max_polls",
                        "http_timeout_s", "rate_capacity", "rate_per_second", "rate_max_wait_ms"},
                       "backend");
            if (b.contains("type")) {
                const auto kind = parse_backend_kind(b["type"].get<std::string>());
                if (!kind) throw ConfigError("backend.type must be sim, file or remote");
                cfg.backend = *kind;
            }
            if (b.contains("world")) cfg.sim_world = path(b["world"]);
            if (b.contains("results")) cfg.recorded_results = path(b["results"]);
            cfg.remote.base_url = b.value("base_url", cfg.remote.base_url);
            cfg.api_key_env = b.value("api_key_env", cfg.api_key_env);
            if (b.contains("poll_interval_ms"))
                cfg.remote.poll_interval = std::chrono::milliseconds(b["poll_interval_ms"].get<std::int64_t>());
            cfg.remote.max_polls = b.value("max_polls", cfg.remote.max_polls);
            if (b.contains("http_timeout_s"))
                cfg.remote.http_timeout = std::chrono::seconds(b["http_timeout_s"].get<std::int64_t>());
            cfg.remote.rate_capacity = b.value("rate_capacity", cfg.remote.rate_capacity);
            cfg.remote.rate_per_second = b.value("rate_per_second", cfg.remote.rate_per_second);
            if (b.contains("rate_max_wait_ms"))
                cfg.remote.rate_max_wait = std::chrono::milliseconds(b["rate_max_wait_ms"].get<std::int64_t>());
        }
        if (j.contains("validation")) {
            const auto& v = j["validation"];
            check_keys(v, {"x_km", "a_ms", "c", "c0_km_per_s", "rtt_floor_ms", "packets"}, "validation");
            auto& vc = cfg.validation;
            vc.x_km = v.value("x_km", vc.x_km);
            vc.a_ms = v.value("a_ms", vc.a_ms);
            vc.c = v.value("c", vc.c);
            vc.c0_km_per_s = v.value("c0_km_per_s", vc.c0_km_per_s);
            vc.rtt_floor_ms = v.value("rtt_floor_ms", vc.rtt_floor_ms);
            vc.packets = v.value("packets", vc.packets);
        }
        cfg.max_concurrency = j.value("max_concurrency", cfg.max_concurrency);
        if (j.contains("max_measurements") && !j["max_measurements"].is_null())
            cfg.max_measurements = j["max_measurements"].get<std::size_t>();
        if (j.contains("evaluate")) {
            const auto& e = j["evaluate"];
            check_keys(e, {"same_radius_km", "sources"}, "evaluate");
            cfg.same_radius_km = e.value("same_radius_km", cfg.same_radius_km);
            for (const auto& s : e.value("sources", json::array())) {
                check_keys(s, {"name", "path"}, "evaluate source");
                cfg.answers.push_back({s.at("name").get<std::string>(), path(s.at("path"))});
            }
        }
        if (j.contains("simulate")) {
            const auto& s = j["simulate"];
            check_keys(s,
                       {"cities", "routers", "probes", "min_city_separation_km", "unresponsive_fraction",
                        "misnamed_fraction", "decoy_fraction", "ip_encoded_fraction", "inactive_probe_fraction",
                        "probe_near_city_fraction", "router_jitter_km", "noise_min_ms", "noise_max_ms"},
                       "simulate");
            auto& sc = cfg.synthetic;
            sc.cities = s.value("cities", sc.cities);
            sc.routers = s.value("routers", sc.routers);
            sc.probes = s.value("probes", sc.probes);
            sc.min_city_separation_km = s.value("min_city_separation_km", sc.min_city_separation_km);
            sc.unresponsive_fraction = s.value("unresponsive_fraction", sc.unresponsive_fraction);
            sc.misnamed_fraction = s.value("misnamed_fraction", sc.misnamed_fraction);
            sc.decoy_fraction = s.value("decoy_fraction", sc.decoy_fraction);
            sc.ip_encoded_fraction = s.value("ip_encoded_fraction", sc.ip_encoded_fraction);
            sc.inactive_probe_fraction = s.value("inactive_probe_fraction", sc.inactive_probe_fraction);
            sc.probe_near_city_fraction = s.value("probe_near_city_fraction", sc.probe_near_city_fraction);
            sc.router_jitter_km = s.value("router_jitter_km", sc.router_jitter_km);
            sc.noise.min_ms = s.value("noise_min_ms", sc.noise.min_ms);
            sc.noise.max_ms = s.value("noise_max_ms", sc.noise.max_ms);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }
    return cfg;
}

CampaignConfig CampaignConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void CampaignConfig::validate() const
{
    try {
        geo.validate();
        validation.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (max_concurrency == 0) throw ConfigError("max_concurrency must be at least 1");
    if (!(same_radius_km > 0)) throw ConfigError("same_radius_km must be positive");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
    const auto& n = synthetic.noise;
    if (!(n.min_ms >= 0 && n.max_ms >= n.min_ms)) throw ConfigError("simulate noise bounds must satisfy 0 <= min <= max");
}

CodesSummary run_codes(const CampaignConfig& cfg)
{
    cfg.validate();
    if (cfg.code_files.empty()) throw ConfigError("no code files configured");
    for (const auto& f : cfg.code_files) require_file(f.path, std::string(to_string(f.source)) + " code file");

    auto parsed = parse_code_files(cfg.code_files, cfg.geo);
    CodesSummary s;
    s.raw_codes = parsed.codes.size();
    s.warnings = std::move(parsed.stats.warnings);
    auto merged = merge_locations(std::move(parsed.codes), cfg.geo);
    s.merged_locations = merged.size();
    const auto locations = apply_population_filter(merged, cfg.geo);
    s.locations = locations.size();

    const CampaignFiles files{cfg.output_dir};
    fs::create_directories(files.dir);
    write_file_atomic(files.locations(), to_jsonl(locations));
    CodeTrie::build(locations).save(files.trie_cache(), file_digest(files.locations()));

    for (const auto& w : s.warnings) log::warn("code_row_skipped", {{"detail", w}});
    log::info("codes_done", {{"raw_codes", s.raw_codes}, {"merged", s.merged_locations}, {"locations", s.locations}});
    return s;
}

PreprocessSummary run_preprocess(const CampaignConfig& cfg)
{
    cfg.validate();
    require_file(cfg.domains, "domain corpus");
    const auto tld_path = cfg.tlds.empty() ? data_dir() / "tlds.txt" : cfg.tlds;
    const auto psl_path = cfg.public_suffix.empty() ? data_dir() / "public_suffix.dat" : cfg.public_suffix;
    require_file(tld_path, "TLD list");
    require_file(psl_path, "public suffix list");

    std::vector<std::string> warnings;
    const auto targets = load_targets(cfg.domains, &warnings);
    for (const auto& w : warnings) log::warn("domain_row_skipped", {{"detail", w}});
    const auto tlds = TldRegistry::load(tld_path);
    const auto rules = SuffixRules::load(psl_path);

    PreprocessSummary s;
    std::vector<DomainRecord> records;
    records.reserve(targets.size());
    for (const auto& t : targets) {
        auto rec = prepare_domain(t.ip, t.fqdn, tlds, rules);
        if (!rec.valid()) ++s.invalid;
        if (rec.ip_encoded) ++s.ip_encoded;
        records.push_back(std::move(rec));
    }
    s.domains = records.size();

    const CampaignFiles files{cfg.output_dir};
    fs::create_directories(files.dir);
    write_file_atomic(files.domains(), to_jsonl(records));
    log::info("preprocess_done", {{"domains", s.domains}, {"invalid", s.invalid}, {"ip_encoded", s.ip_encoded}});
    return s;
}

SearchSummary run_search(const CampaignConfig& cfg)
{
    cfg.validate();
    const CampaignFiles files{cfg.output_dir};
    const auto locations = read_stage<Location>(files.locations(), "locations file", "codes");
    const auto records = read_stage<DomainRecord>(files.domains(), "domain records file", "preprocess");

    SearchSummary s;
    CodeTrie trie;
    const auto key = file_digest(files.locations());
    if (CodeTrie::load(files.trie_cache(), key, trie)) {
        s.trie_from_cache = true;
    } else {
        trie = CodeTrie::build(locations);
        trie.save(files.trie_cache(), key);
    }

    for (const auto& p : {cfg.blacklists.codes, cfg.blacklists.words, cfg.blacklists.code_locations})
        if (!p.empty()) require_file(p, "blacklist");
    const auto loaded = load_blacklists(cfg.blacklists, locations);
    for (const auto& w : loaded.warnings) log::warn("blacklist_entry", {{"detail", w}});

    std::vector<LocationHint> all;
    std::vector<DomainSearchResult> results;
    std::size_t invalid = 0;
    for (const auto& rec : records) {
        if (!rec.valid()) {
            ++invalid;
            continue;
        }
        auto found = find_hints(rec, trie, loaded.lists, cfg.hint_order);
        s.occurrences += found.occurrences;
        all.insert(all.end(), found.hints.begin(), found.hints.end());
        results.push_back({rec.ip_encoded, std::move(found)});
    }
    s.domains = results.size();
    s.hints = all.size();

    const auto stats = corpus_stats(results, invalid);
    const json report = {{"all", count_stats_json(stats.all)},
                         {"ip_encoded", count_stats_json(stats.ip_encoded)},
                         {"not_ip_encoded", count_stats_json(stats.not_ip_encoded)},
                         {"invalid_domains", stats.invalid_domains}};
    write_file_atomic(files.hints(), to_jsonl(all));
    write_file_atomic(files.search_stats(), report.dump(2) + "\n");
    log::info("search_done", {{"domains", s.domains},
                              {"hints", s.hints},
                              {"occurrences", s.occurrences},
                              {"trie_from_cache", s.trie_from_cache}});
    return s;
}

namespace {

struct MeasureInputs {
    std::vector<Location> locations;
    std::vector<DomainTask> tasks;
    std::string digest;
};

MeasureInputs load_measure_inputs(const CampaignConfig& cfg)
{
    const CampaignFiles files{cfg.output_dir};
    MeasureInputs in;
    in.locations = read_stage<Location>(files.locations(), "locations file", "codes");
    const auto records = read_stage<DomainRecord>(files.domains(), "domain records file", "preprocess");
    const auto hints = read_stage<LocationHint>(files.hints(), "hints file", "search");

    std::map<std::string, std::vector<LocationHint>> by_domain;
    for (const auto& h : hints) by_domain[domain_key(h.ip, h.fqdn)].push_back(h);
    for (const auto& rec : records) {
        DomainTask t{rec.fqdn, rec.ip, rec.ip_encoded, !rec.valid(), {}};
        if (rec.valid()) {
            auto it = by_domain.find(domain_key(rec.ip, rec.fqdn));
            if (it == by_domain.end() || it->second.empty()) continue;
            t.hints = std::move(it->second);
            by_domain.erase(it);
        }
        in.tasks.push_back(std::move(t));
    }

    const json fingerprint = {{"locations", to_hex(file_digest(files.locations()))},
                              {"domains", to_hex(file_digest(files.domains()))},
                              {"hints", to_hex(file_digest(files.hints()))},
                              {"validation", validation_json(cfg.validation)},
                              {"backend", to_string(cfg.backend)},
                              {"seed", cfg.seed},
                              {"prescan", cfg.prescan}};
    in.digest = to_hex(bytes_digest(fingerprint.dump()));
    return in;
}

struct Slot {
    DomainState state;
    std::optional<DomainVerdict> verdict;
    bool resumed = false;
};

void write_state(const fs::path& path, const std::string& digest, const std::vector<Slot>& slots)
{
    std::ostringstream out;
    out << json{{"version", kCampaignStateVersion}, {"inputs", digest}}.dump() << '\n';
    for (const auto& s : slots) {
        json line = {{"ip", s.state.task.ip}, {"fqdn", s.state.task.fqdn}};
        if (s.verdict) {
            line["status"] = "done";
            line["verdict"] = *s.verdict;
        } else {
            line["status"] = "parked";
            line["state"] = s.state;
        }
        out << line.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

std::size_t restore_state(const fs::path& path, const std::string& digest, std::vector<Slot>& slots)
{
    std::vector<json> lines;
    try {
        lines = read_jsonl(path);
    } catch (const std::exception& e) {
        throw InputError(std::string("unreadable campaign state: ") + e.what());
    }
    if (lines.empty() || lines[0].value("version", 0) != kCampaignStateVersion)
        throw InputError("campaign state " + path.string() + " has an unsupported version; re-run without --resume");
    if (lines[0].value("inputs", std::string()) != digest)
        throw InputError("campaign state " + path.string() +
                         " was written for different inputs or parameters; re-run without --resume");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < slots.size(); ++i)
        index.emplace(domain_key(slots[i].state.task.ip, slots[i].state.task.fqdn), i);
    std::size_t restored = 0;
    try {
        for (std::size_t l = 1; l < lines.size(); ++l) {
            const auto& line = lines[l];
            const auto it = index.find(domain_key(line.at("ip").get<IpAddress>(), line.at("fqdn").get<std::string>()));
            if (it == index.end()) continue;
            auto& slot = slots[it->second];
            if (line.at("status") == "done") {
                slot.verdict = line.at("verdict").get<DomainVerdict>();
            } else {
                slot.state = line.at("state").get<DomainState>();
            }
            slot.resumed = true;
            ++restored;
        }
    } catch (const json::exception& e) {
        throw InputError("malformed campaign state: " + std::string(e.what()));
    }
    return restored;
}

std::vector<Vantage> configured_vantages(const CampaignConfig& cfg)
{
    if (cfg.vantages.empty()) return default_vantages();
    require_file(cfg.vantages, "vantage file");
    return load_vantages(cfg.vantages);
}

}  // namespace

MeasureSummary run_measure(const CampaignConfig& cfg, bool resume)
{
    cfg.validate();
    const CampaignFiles files{cfg.output_dir};
    auto inputs = load_measure_inputs(cfg);
    const auto vantages = configured_vantages(cfg);

    std::unique_ptr<MeasurementBackend> backend;
    std::optional<SimWorld> world;
    std::vector<Probe> probes;
    switch (cfg.backend) {
    case BackendKind::Sim:
        require_file(cfg.sim_world, "simulated world file");
        require_file(cfg.probes, "probe inventory");
        world = load_sim_world(cfg.sim_world, cfg.probes);
        probes = world->probes;
        backend = std::make_unique<SimBackend>(*world, cfg.seed, cfg.validation.km_per_ms());
        break;
    case BackendKind::File:
        require_file(cfg.recorded_results, "recorded results file");
        require_file(cfg.probes, "probe inventory");
        probes = load_probes(cfg.probes);
        backend = std::make_unique<FileBackend>(FileBackend::load(cfg.recorded_results));
        break;
    case BackendKind::Remote: {
        auto rc = cfg.remote;
        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (!key || !*key) throw ConfigError("remote backend needs an API key in $" + cfg.api_key_env);
        rc.api_key = key;
        auto remote = std::make_unique<RemoteBackend>(rc);
        if (cfg.probes.empty()) {
            probes = remote->list_probes();
        } else {
            require_file(cfg.probes, "probe inventory");
            probes = load_probes(cfg.probes);
        }
        backend = std::move(remote);
        break;
    }
    }

    std::optional<BudgetBackend> budget;
    if (cfg.max_measurements) budget.emplace(*backend, *cfg.max_measurements);
    MeasurementBackend& active = budget ? static_cast<MeasurementBackend&>(*budget) : *backend;

    std::unordered_map<LocationId, LatLon> positions;
    for (const auto& loc : inputs.locations) positions.emplace(loc.id, loc.pos);
    const ProbeSelector selector(probes, cfg.validation.x_km);

    std::vector<Slot> slots(inputs.tasks.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i].state.task = inputs.tasks[i];

    MeasureSummary summary;
    summary.domains = slots.size();
    if (resume) {
        if (fs::exists(files.state()))
            summary.resumed = restore_state(files.state(), inputs.digest, slots);
        else
            log::warn("resume_without_state", {{"path", files.state().string()}});
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> measurements{0};
    std::mutex err_mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) {
            auto& slot = slots[i];
            if (slot.verdict) continue;
            try {
                std::optional<TargetPrescan> pre;
                if (cfg.prescan && !slot.state.task.filtered && !slot.state.prescan_applied) {
                    const IpAddress ip = slot.state.task.ip;
                    auto table = prescan(active, vantages, std::span(&ip, 1));
                    pre = std::move(table[ip]);
                }
                const std::size_t before = slot.state.pinpoint_measurements;
                ValidationContext ctx{positions, selector, active, pre ? &*pre : nullptr, vantages, cfg.validation};
                slot.verdict = run_validation(slot.state, ctx);
                measurements += slot.state.pinpoint_measurements - before;
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!failure) failure = std::current_exception();
                next = slots.size();
            }
        }
    };
    {
        const auto n = std::min<std::size_t>(cfg.max_concurrency, std::max<std::size_t>(1, slots.size()));
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    summary.pinpoint_measurements = measurements;
    for (const auto& s : slots) (s.verdict ? summary.completed : summary.parked)++;
    fs::create_directories(files.dir);
    write_state(files.state(), inputs.digest, slots);
    if (failure) std::rethrow_exception(failure);

    const json done = {{"domains", summary.domains},
                       {"completed", summary.completed},
                       {"parked", summary.parked},
                       {"resumed", summary.resumed},
                       {"pinpoint_measurements", summary.pinpoint_measurements}};
    if (summary.parked > 0) {
        log::warn("measure_incomplete", done);
        throw IncompleteError(std::to_string(summary.parked) + " of " + std::to_string(summary.domains) +
                              " domains parked; re-run `hloc measure --resume`");
    }

    std::vector<DomainVerdict> verdicts;
    verdicts.reserve(slots.size());
    for (auto& s : slots) verdicts.push_back(std::move(*s.verdict));
    write_file_atomic(files.verdicts(), to_jsonl(verdicts));
    write_file_atomic(files.sensitivity(), sensitivity_json(sensitivity_report(verdicts, cfg.validation)).dump(2) + "\n");
    log::info("measure_done", done);
    return summary;
}

EvaluateSummary run_evaluate(const CampaignConfig& cfg)
{
    cfg.validate();
    const CampaignFiles files{cfg.output_dir};
    if (cfg.answers.empty()) throw ConfigError("no external answer sources configured (evaluate.sources)");
    const auto verdicts = read_stage<DomainVerdict>(files.verdicts(), "verdicts file", "measure");

    std::map<IpAddress, std::size_t> by_ip;
    for (std::size_t i = 0; i < verdicts.size(); ++i) by_ip.emplace(verdicts[i].ip, i);

    EvaluateSummary s;
    std::vector<EvaluationRecord> records;
    for (const auto& src : cfg.answers) {
        require_file(src.path, "answers file for source " + src.name);
        std::vector<std::string> warnings;
        for (const auto& answer : load_external_answers(src.path, src.name, &warnings)) {
            const auto it = by_ip.find(answer.ip);
            if (it == by_ip.end()) {
                ++s.unmatched;
                continue;
            }
            records.push_back(classify(answer, verdicts[it->second], cfg.validation, cfg.same_radius_km));
        }
        for (const auto& w : warnings) log::warn("answer_row_skipped", {{"source", src.name}, {"detail", w}});
    }
    s.records = records.size();

    std::ostringstream lines;
    for (const auto& r : records)
        lines << json{{"ip", r.ip},
                      {"source", r.source},
                      {"verdict", to_string(r.verdict)},
                      {"category", to_string(r.category)}}
                     .dump()
              << '\n';

    const auto rows = summarize(records);
    std::ostringstream csv;
    csv << "source,verdict,n,applicable,with_data,same,possible,wrong,no_data,same_pct,possible_pct,wrong_pct,no_data_pct\n";
    json report_rows = json::array();
    for (const auto& r : rows) {
        auto count = [&](EvalCategory c) {
            const auto it = r.counts.find(c);
            return it == r.counts.end() ? std::size_t{0} : it->second;
        };
        char pct[128];
        std::snprintf(pct, sizeof pct, "%.2f,%.2f,%.2f,%.2f", r.same_pct, r.possible_pct, r.wrong_pct, r.no_data_pct);
        csv << r.source << ',' << to_string(r.verdict) << ',' << r.n << ',' << r.applicable << ',' << r.with_data
            << ',' << count(EvalCategory::Same) << ',' << count(EvalCategory::Possible) << ','
            << count(EvalCategory::Wrong) << ',' << count(EvalCategory::NoData) << ',' << pct << '\n';
        report_rows.push_back({{"source", r.source},
                               {"verdict", to_string(r.verdict)},
                               {"n", r.n},
                               {"applicable", r.applicable},
                               {"with_data", r.with_data},
                               {"same", count(EvalCategory::Same)},
                               {"possible", count(EvalCategory::Possible)},
                               {"wrong", count(EvalCategory::Wrong)},
                               {"no_data", count(EvalCategory::NoData)},
                               {"not_applicable", count(EvalCategory::NotApplicable)},
                               {"same_pct", r.same_pct},
                               {"possible_pct", r.possible_pct},
                               {"wrong_pct", r.wrong_pct},
                               {"no_data_pct", r.no_data_pct}});
    }
    const json report = {{"same_radius_km", cfg.same_radius_km},
                         {"records", s.records},
                         {"unmatched_answers", s.unmatched},
                         {"rows", report_rows}};
    fs::create_directories(files.dir);
    write_file_atomic(files.evaluation(), lines.str());
    write_file_atomic(files.evaluation_summary(), csv.str());
    write_file_atomic(files.evaluation_report(), report.dump(2) + "\n");
    log::info("evaluate_done", {{"records", s.records}, {"unmatched", s.unmatched}});
    return s;
}

json run_stats(const CampaignConfig& cfg)
{
    const CampaignFiles files{cfg.output_dir};
    json out = json::object();
    if (fs::exists(files.locations())) {
        const auto locs = read_stage<Location>(files.locations(), "locations file", "codes");
        std::map<std::string, std::size_t> codes;
        for (const auto& l : locs)
            for (const auto& c : l.codes) ++codes[std::string(to_string(c.source))];
        out["locations"] = {{"count", locs.size()}, {"codes_by_source", codes}};
    }
    if (fs::exists(files.domains())) {
        const auto recs = read_stage<DomainRecord>(files.domains(), "domain records file", "preprocess");
        std::map<std::string, std::size_t> rejected;
        std::size_t encoded = 0;
        for (const auto& r : recs) {
            if (r.rejection) ++rejected[std::string(to_string(*r.rejection))];
            if (r.ip_encoded) ++encoded;
        }
        out["domains"] = {{"count", recs.size()}, {"ip_encoded", encoded}, {"rejected", rejected}};
    }
    if (fs::exists(files.search_stats())) out["search"] = json::parse(read_text(files.search_stats()));
    if (fs::exists(files.verdicts())) {
        const auto verdicts = read_stage<DomainVerdict>(files.verdicts(), "verdicts file", "measure");
        json split = json::object();
        for (const char* group : {"all", "ip_encoded", "not_ip_encoded"}) {
            std::map<std::string, std::size_t> cats;
            std::size_t falsified = 0, no_probe = 0, latency = 0, timeouts = 0, pinpoint = 0, hints = 0;
            for (const auto& v : verdicts) {
                if (std::string_view(group) == "ip_encoded" && !v.ip_encoded) continue;
                if (std::string_view(group) == "not_ip_encoded" && v.ip_encoded) continue;
                ++cats[std::string(to_string(v.category))];
                falsified += v.tally.falsified;
                no_probe += v.tally.no_probe;
                latency += v.tally.latency;
                timeouts += v.tally.timeouts;
                pinpoint += v.pinpoint_measurements;
                hints += v.hints.size();
            }
            split[group] = {{"categories", cats},
                            {"hints", hints},
                            {"hints_falsified", falsified},
                            {"hints_no_probe", no_probe},
                            {"hints_latency_too_high", latency},
                            {"timeouts", timeouts},
                            {"pinpoint_measurements", pinpoint}};
        }
        out["verdicts"] = split;
    }
    if (fs::exists(files.evaluation_report())) out["evaluation"] = json::parse(read_text(files.evaluation_report()));
    if (out.empty()) throw InputError("no stage outputs in " + files.dir.string() + "; run `hloc codes` first");
    write_file_atomic(files.stats(), out.dump(2) + "\n");
    return out;
}

void use_corpus(CampaignConfig& cfg, const CorpusPaths& paths)
{
    cfg.code_files = {{CodeSource::IATA, paths.iata},
                      {CodeSource::CLLI, paths.clli},
                      {CodeSource::UNLOCODE, paths.unlocode},
                      {CodeSource::GEONAMES, paths.geonames}};
    cfg.domains = paths.domains;
    cfg.probes = paths.probes;
    cfg.vantages = paths.vantages;
    cfg.sim_world = paths.world;
    cfg.blacklists = {paths.code_blacklist, paths.word_blacklist, paths.code_location_blacklist};
    cfg.backend = BackendKind::Sim;
}

namespace {

// Two answer sources for the synthetic routers: "truth" knows the real city
// for most routers, "coarse" is right about half the time.
std::vector<AnswerSource> write_synthetic_answers(const SyntheticCorpus& corpus, const fs::path& dir,
                                                  std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
    auto draw = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::ostringstream truth, coarse;
    truth << "ip,lat,lon,city\n";
    coarse << "ip,lat,lon,city\n";
    for (const auto& t : corpus.targets) {
        const auto& city = corpus.cities[corpus.true_city.at(t.ip)];
        const auto ip = t.ip.to_string();
        if (draw() < 0.1)
            truth << ip << ",,,\n";
        else
            truth << ip << ',' << format_double(city.pos.lat) << ',' << format_double(city.pos.lon) << ','
                  << city.name << '\n';
        const auto& pick = draw() < 0.5 ? city : corpus.cities[rng() % corpus.cities.size()];
        coarse << ip << ',' << format_double(pick.pos.lat) << ',' << format_double(pick.pos.lon) << ',' << pick.name
               << '\n';
    }
    write_file_atomic(dir / "answers_truth.csv", truth.str());
    write_file_atomic(dir / "answers_coarse.csv", coarse.str());
    return {{"truth", dir / "answers_truth.csv"}, {"coarse", dir / "answers_coarse.csv"}};
}

}  // namespace

MeasureSummary run_simulate(CampaignConfig& cfg, bool resume)
{
    cfg.validate();
    const CampaignFiles files{cfg.output_dir};
    auto sc = cfg.synthetic;
    sc.seed = cfg.seed;
    const auto corpus = generate_corpus(sc);
    const auto paths = write_corpus(corpus, files.corpus());
    use_corpus(cfg, paths);
    cfg.answers = write_synthetic_answers(corpus, files.corpus(), cfg.seed);
    log::info("simulate_corpus", {{"dir", files.corpus().string()},
                                  {"cities", corpus.cities.size()},
                                  {"routers", corpus.targets.size()},
                                  {"probes", corpus.world.probes.size()}});
    run_codes(cfg);
    run_preprocess(cfg);
    run_search(cfg);
    auto summary = run_measure(cfg, resume);
    run_evaluate(cfg);
    run_stats(cfg);
    return summary;
}

}  // namespace hloc
