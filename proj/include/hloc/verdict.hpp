#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hloc/geodata.hpp"
#include "hloc/hintsearch.hpp"
#include "hloc/measure.hpp"

namespace hloc {

struct ValidationConfig {
    double x_km = 1000.0;       // maximum probe to hint distance
    double a_ms = 9.0;          // latency buffer
    double c = 2.0 / 3.0;       // inverse refractive index of fiber
    double c0_km_per_s = kSpeedOfLightKmPerS;
    double rtt_floor_ms = 0.1;  // RTTs below this are not credible
    int packets = 1;            // echo requests per pin-point measurement

    void validate() const;
    double km_per_ms() const { return fiber_km_per_ms(c, c0_km_per_s); }
};

enum class VerdictCategory : std::uint8_t { Verified, AllFalsified, NoVerifiedHint, Unresponsive, Filtered };

std::string_view to_string(VerdictCategory c);
std::optional<VerdictCategory> parse_verdict_category(std::string_view s);

/// Farthest distance (km) the target can be from the measuring origin,
/// (rtt/2)·c·c0. nullopt when rtt is below the floor: such a measurement is
/// suspect and excludes nothing.
std::optional<double> exclusion_radius_km(double rtt_ms, const ValidationConfig& cfg);

enum class HintOutcome : std::uint8_t { Verified, Falsified, Inconclusive };

std::string_view to_string(HintOutcome o);

struct HintCheck {
    HintOutcome outcome = HintOutcome::Inconclusive;
    double threshold_ms = 0;      // a + 2·d/(c·c0)
    double buffer_used_ms = 0;    // rtt - 2·d/(c·c0)
    double excess_latency_ms = 0; // rtt - threshold; positive when too slow
    bool timeout = false;
    bool suspect = false;
};

/// Pin-point check of one hint. FALSIFIED when the hint lies outside the
/// measurement's exclusion disc around the probe, otherwise VERIFIED iff
/// rtt < a + 2·d/(c·c0), otherwise INCONCLUSIVE. A timeout or sub-floor RTT is
/// INCONCLUSIVE.
HintCheck verify_hint(double probe_hint_km, std::optional<double> rtt_ms, const ValidationConfig& cfg);

/// 2·d + a·c·c0/2, the radius around the hint that must contain the target.
double max_error_km(double probe_hint_km, const ValidationConfig& cfg);

struct MeasurementEvidence {
    std::string origin_id;
    Origin::Kind kind = Origin::Kind::Probe;
    LatLon origin_pos;
    std::optional<double> rtt_ms;
    std::int64_t timestamp = 0;

    friend bool operator==(const MeasurementEvidence&, const MeasurementEvidence&) = default;
};

struct HintEvidence {
    LocationHint hint;  // carries the final status
    LatLon hint_pos;
    std::optional<std::string> probe_id;
    std::optional<double> probe_distance_km;
    std::optional<std::size_t> measurement;  // index into DomainVerdict::measurements
    std::optional<HintCheck> check;
    std::string note;  // "prescan:<vantage>", "no_probe", "timeout", "suspect_rtt", "backend:<kind>"
};

struct VerdictTally {
    std::size_t falsified = 0;
    std::size_t no_probe = 0;
    std::size_t latency = 0;  // inconclusive pin-point results, timeouts included
    std::size_t timeouts = 0;
    std::size_t pending = 0;  // never measured because an earlier hint verified
};

struct DomainVerdict {
    std::string fqdn;
    IpAddress ip;
    bool ip_encoded = false;
    VerdictCategory category = VerdictCategory::NoVerifiedHint;
    std::optional<std::size_t> verified;  // index into `hints`
    std::optional<double> max_error_km;
    std::vector<MeasurementEvidence> measurements;
    std::vector<HintEvidence> hints;
    VerdictTally tally;
    std::size_t pinpoint_measurements = 0;

    const HintEvidence* verified_hint() const { return verified ? &hints[*verified] : nullptr; }
};

struct PrescanSplit {
    std::vector<LocationHint> surviving;
    std::vector<std::pair<LocationHint, std::string>> falsified;  // status FALSIFIED, excluding vantage
};

/// Drops hints that some vantage places outside its exclusion disc (strictly
/// farther than the radius). Only the physics bound applies; the latency
/// buffer is not added.
PrescanSplit falsify_by_prescan(std::vector<LocationHint> hints,
                                const std::unordered_map<LocationId, LatLon>& positions,
                                std::span<const MeasurementEvidence> vantage_results,
                                const ValidationConfig& cfg);

/// Nearest-probe lookup with a per-location cache. Safe for concurrent use.
class ProbeSelector {
public:
    ProbeSelector(std::vector<Probe> probes, double max_distance_km);

    std::optional<ProbeChoice> for_location(LocationId id, const LatLon& pos) const;

private:
    std::vector<Probe> probes_;
    double max_distance_km_;
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<LocationId, std::optional<ProbeChoice>> cache_;
};

struct DomainTask {
    std::string fqdn;
    IpAddress ip;
    bool ip_encoded = false;
    bool filtered = false;
    std::vector<LocationHint> hints;  // ordered by the hint policy
};

/// Resumable per-domain validation state.
struct DomainState {
    DomainTask task;
    std::vector<HintEvidence> evidence;  // parallel to task.hints once started
    std::vector<MeasurementEvidence> measurements;
    bool started = false;
    bool prescan_applied = false;
    std::size_t pinpoint_measurements = 0;
};

struct ValidationContext {
    const std::unordered_map<LocationId, LatLon>& positions;
    const ProbeSelector& probes;
    MeasurementBackend& backend;
    const TargetPrescan* prescan = nullptr;  // nullptr: pre-scan skipped
    std::span<const Vantage> vantages = {};  // origins of the prescan results
    const ValidationConfig& cfg;
};

/// Advances `state` until a verdict is reached. Returns nullopt when the
/// backend reports a retryable error (quota, transport); `state` then holds
/// everything measured so far and a later call resumes at the first pending
/// hint.
std::optional<DomainVerdict> run_validation(DomainState& state, const ValidationContext& ctx);

/// One-shot form; throws BackendError when the domain would be parked.
DomainVerdict run_validation(const DomainTask& task, const ValidationContext& ctx);

struct Cdf {
    std::size_t count = 0;
    std::vector<std::pair<double, double>> quantiles;  // (fraction, value) at 5% steps
};

Cdf make_cdf(std::vector<double> values);

struct SensitivityReport {
    Cdf probe_distance_km;
    Cdf buffer_used_ms;
    Cdf max_error_km;
    Cdf excess_latency_ms;
    double histogram_bin_ms = 1.0;
    std::vector<std::size_t> buffer_histogram;  // bins of width histogram_bin_ms over [0, a_ms)
};

SensitivityReport sensitivity_report(const std::vector<DomainVerdict>& verdicts, const ValidationConfig& cfg);

}  // namespace hloc
