#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "hloc/measure.hpp"

namespace hloc {

struct RemoteConfig {
    std::string base_url = "https://atlas.ripe.net";  // scheme://host[:port]
    std::string api_key;
    std::chrono::milliseconds poll_interval{5000};
    int max_polls = 60;
    std::chrono::seconds http_timeout{30};
    // Token bucket in front of measurement creation.
    double rate_capacity = 100;
    double rate_per_second = 1;
    std::chrono::milliseconds rate_max_wait{60000};
};

/// Client for a RIPE-Atlas-shaped probe measurement service.
///
/// Wire format (all JSON, key sent as "Authorization: Key <api_key>"):
///   GET  /api/v2/probes/?format=json            -> {"next": url|null, "results": [
///        {"id": 6001, "geometry": {"coordinates": [lon, lat]}, "status": {"name": "Connected"}}]}
///   POST /api/v2/measurements/                  <- {"definitions": [{"target": ip, "af": 4|6,
///        "type": "ping", "packets": n, "description": "hloc"}], "probes": [{"requested": 1,
///        "type": "probes", "value": "<probe id>"}], "is_oneoff": true}
///                                               -> {"measurements": [id]}
///   GET  /api/v2/measurements/<id>/results/     -> [{"prb_id": 6001, "min": ms|-1, "timestamp": s}]
/// An empty result list means "not finished yet"; polling stops after
/// max_polls and reports a timeout. HTTP 429 (and 403 mentioning a quota) is
/// QuotaExceeded, a 400 mentioning the probe is UnknownProbe, other 4xx are
/// Protocol errors, and 5xx or connection failures are Transport errors.
class RemoteBackend final : public MeasurementBackend {
public:
    explicit RemoteBackend(RemoteConfig config);

    std::vector<Probe> list_probes();
    MeasurementResult ping(const Origin& origin, const IpAddress& target, int packets = 1) override;

private:
    RemoteConfig config_;
    std::unique_ptr<RateLimiter> limiter_;
};

}  // namespace hloc
