#include "hloc/remote_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

namespace hloc {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

// Splits an absolute URL (as returned in "next" links) into base and path.
Endpoint split_url(const std::string& url)
{
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class Http {
public:
    Http(const RemoteConfig& cfg, const std::string& base) : client_(base)
    {
        client_.set_connection_timeout(cfg.http_timeout);
        client_.set_read_timeout(cfg.http_timeout);
        client_.set_write_timeout(cfg.http_timeout);
        headers_ = {{"Authorization", "Key " + cfg.api_key}, {"Accept", "application/json"}};
    }

    json get(const std::string& path) { return check(client_.Get(path, headers_), path); }

    json post(const std::string& path, const json& body)
    {
        return check(client_.Post(path, headers_, body.dump(), "application/json"), path);
    }

private:
    static json check(const httplib::Result& res, const std::string& path)
    {
        if (!res) {
            throw BackendError(BackendError::Kind::Transport,
                               path + ": " + httplib::to_string(res.error()));
        }
        const int status = res->status;
        const auto& body = res->body;
        if (status == 429 || (status == 403 && body.find("quota") != std::string::npos))
            throw BackendError(BackendError::Kind::QuotaExceeded, path + ": quota exceeded: " + body);
        if (status == 400 && body.find("probe") != std::string::npos)
            throw BackendError(BackendError::Kind::UnknownProbe, path + ": " + body);
        if (status >= 500) throw BackendError(BackendError::Kind::Transport, path + ": HTTP " + std::to_string(status));
        if (status >= 400)
            throw BackendError(BackendError::Kind::Protocol, path + ": HTTP " + std::to_string(status) + ": " + body);
        try {
            return json::parse(body);
        } catch (const json::exception& e) {
            throw BackendError(BackendError::Kind::Protocol, path + ": bad JSON: " + e.what());
        }
    }

    httplib::Client client_;
    httplib::Headers headers_;
};

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config)
    : config_(std::move(config)),
      limiter_(std::make_unique<RateLimiter>(config_.rate_capacity, config_.rate_per_second))
{
}

std::vector<Probe> RemoteBackend::list_probes()
{
    std::vector<Probe> probes;
    Endpoint ep{config_.base_url, "/api/v2/probes/?format=json"};
    while (true) {
        Http http(config_, ep.base);
        const auto page = http.get(ep.path);
        try {
            for (const auto& r : page.at("results")) {
                const auto& geom = r.at("geometry");
                if (geom.is_null()) continue;
                const auto& coords = geom.at("coordinates");
                Probe p;
                p.id = std::to_string(r.at("id").get<long long>());
                p.pos = {coords.at(1).get<double>(), coords.at(0).get<double>()};
                const auto status = r.contains("status") && r["status"].is_object()
                                        ? r["status"].value("name", std::string{})
                                        : std::string{};
                p.active = status == "Connected";
                if (valid_coordinates(p.pos)) probes.push_back(std::move(p));
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::Protocol, std::string("probe listing: ") + e.what());
        }
        const auto next = page.value("next", json());
        if (!next.is_string()) break;
        ep = split_url(next.get<std::string>());
    }
    return probes;
}

MeasurementResult RemoteBackend::ping(const Origin& origin, const IpAddress& target, int packets)
{
    if (origin.kind != Origin::Kind::Probe)
        throw BackendError(BackendError::Kind::UnknownProbe, "remote service only measures from probes");
    if (!limiter_->acquire(config_.rate_max_wait))
        throw BackendError(BackendError::Kind::QuotaExceeded, "local rate limit exhausted");

    Http http(config_, config_.base_url);
    const json request = {
        {"definitions",
         json::array({{{"target", target.to_string()},
                       {"af", target.is_v4() ? 4 : 6},
                       {"type", "ping"},
                       {"packets", std::max(1, packets)},
                       {"description", "hloc"}}})},
        {"probes", json::array({{{"requested", 1}, {"type", "probes"}, {"value", origin.id}}})},
        {"is_oneoff", true},
    };
    long long id = 0;
    try {
        id = http.post("/api/v2/measurements/", request).at("measurements").at(0).get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::Protocol, std::string("measurement creation: ") + e.what());
    }

    const auto path = "/api/v2/measurements/" + std::to_string(id) + "/results/?format=json";
    for (int poll = 0; poll < config_.max_polls; ++poll) {
        if (poll > 0) std::this_thread::sleep_for(config_.poll_interval);
        const auto results = http.get(path);
        if (!results.is_array() || results.empty()) continue;
        MeasurementResult out{target, origin.id, std::nullopt, 0};
        try {
            for (const auto& r : results) {
                const double min = r.value("min", -1.0);
                out.timestamp = r.value("timestamp", std::int64_t{0});
                if (min > 0 && (!out.rtt_ms || min < *out.rtt_ms)) out.rtt_ms = min;
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::Protocol, std::string("results: ") + e.what());
        }
        return out;
    }
    return {target, origin.id, std::nullopt, 0};
}

}  // namespace hloc
