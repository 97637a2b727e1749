#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hloc/geo.hpp"
#include "hloc/ip_address.hpp"

namespace hloc {

struct Probe {
    std::string id;
    LatLon pos;
    bool active = true;
    std::string framework = "atlas";
};

/// High-volume pre-scan origin.
struct Vantage {
    std::string name;
    LatLon pos;
};

struct Origin {
    enum class Kind : std::uint8_t { Probe, Vantage };

    std::string id;
    LatLon pos;
    Kind kind = Kind::Probe;

    static Origin of(const Probe& p) { return {p.id, p.pos, Kind::Probe}; }
    static Origin of(const Vantage& v) { return {v.name, v.pos, Kind::Vantage}; }
};

struct MeasurementResult {
    IpAddress target;
    std::string origin_id;
    std::optional<double> rtt_ms;  // nullopt: timeout
    std::int64_t timestamp = 0;    // unix seconds

    bool timed_out() const { return !rtt_ms.has_value(); }
};

class BackendError : public std::runtime_error {
public:
    enum class Kind { Transport, QuotaExceeded, UnknownProbe, Protocol };

    BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }
    /// Transport hiccups and quota exhaustion may be retried later; an
    /// unknown probe or a malformed response will fail again.
    bool retryable() const { return kind_ == Kind::Transport || kind_ == Kind::QuotaExceeded; }

private:
    Kind kind_;
};

std::string_view to_string(BackendError::Kind k);

/// Unified ping interface over every measurement source. Implementations must
/// tolerate concurrent calls.
class MeasurementBackend {
public:
    virtual ~MeasurementBackend() = default;
    /// Minimum RTT over `packets` echo requests, or a timeout.
    virtual MeasurementResult ping(const Origin& origin, const IpAddress& target, int packets = 1) = 0;
};

struct NoiseModel {
    double min_ms = 0.0;
    double max_ms = 9.0;  // uniform in [min_ms, max_ms)
};

struct SimRouter {
    LatLon pos;
    bool responsive = true;
};

/// Synthetic ground truth: where every router really is.
struct SimWorld {
    std::map<IpAddress, SimRouter> routers;
    std::vector<Probe> probes;
    NoiseModel noise;
};

/// Pings in a SimWorld: 2·d/(c·c0) plus uniform noise per packet, minimum over
/// packets. Results depend only on (seed, origin, target, packet index), so
/// they do not change with call order or threading.
class SimBackend final : public MeasurementBackend {
public:
    SimBackend(const SimWorld& world, std::uint64_t seed, double km_per_ms = fiber_km_per_ms(2.0 / 3.0));

    MeasurementResult ping(const Origin& origin, const IpAddress& target, int packets = 1) override;

    /// Propagation-only RTT for a distance.
    double propagation_ms(double km) const { return 2.0 * km / km_per_ms_; }

private:
    const SimWorld& world_;
    std::uint64_t seed_;
    double km_per_ms_;
};

/// Replays a recorded-results file: "ip,origin_id,rtt_ms|timeout,timestamp".
class FileBackend final : public MeasurementBackend {
public:
    static FileBackend load(const std::filesystem::path& path);
    static FileBackend from_results(std::vector<MeasurementResult> results);

    /// Throws BackendError(UnknownProbe) for origins absent from the file.
    MeasurementResult ping(const Origin& origin, const IpAddress& target, int packets = 1) override;

private:
    std::map<std::string, std::map<IpAddress, std::vector<MeasurementResult>>> by_origin_;
};

/// Token bucket: `capacity` tokens, refilled at `refill_per_second`.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    RateLimiter(double capacity, double refill_per_second, Clock clock = std::chrono::steady_clock::now);

    bool try_acquire();
    /// Blocks until a token is available or `max_wait` elapses.
    bool acquire(std::chrono::milliseconds max_wait);
    double available();

private:
    void refill_locked();

    std::mutex mu_;
    double capacity_;
    double refill_per_second_;
    double tokens_;
    Clock clock_;
    std::chrono::steady_clock::time_point last_;
};

/// Passes pin-point pings through until `budget` is spent, then raises
/// BackendError(QuotaExceeded). Vantage pings are not counted.
class BudgetBackend final : public MeasurementBackend {
public:
    BudgetBackend(MeasurementBackend& inner, std::size_t budget) : inner_(inner), remaining_(budget) {}

    MeasurementResult ping(const Origin& origin, const IpAddress& target, int packets = 1) override;

private:
    MeasurementBackend& inner_;
    std::atomic<std::int64_t> remaining_;
};

struct TargetPrescan {
    std::vector<MeasurementResult> results;  // one per vantage, in vantage order
    std::vector<std::string> errors;
    bool responsive = false;
};

using PrescanTable = std::map<IpAddress, TargetPrescan>;

/// Measures every target from every vantage; backend errors are recorded per
/// target and never abort the sweep.
PrescanTable prescan(MeasurementBackend& backend, std::span<const Vantage> vantages,
                     std::span<const IpAddress> targets);

struct ProbeChoice {
    Probe probe;
    double distance_km = 0;
};

/// Active probe closest to `hint`, ties broken by probe id. nullopt when
/// there is no active probe strictly closer than `max_distance_km`.
std::optional<ProbeChoice> nearest_probe(const LatLon& hint, std::span<const Probe> probes,
                                         double max_distance_km);

}  // namespace hloc
