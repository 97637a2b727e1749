#include "hloc/verdict.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hloc {

void ValidationConfig::validate() const
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0; };
    if (!positive(x_km)) throw std::invalid_argument("x_km must be > 0");
    if (!std::isfinite(a_ms) || a_ms < 0) throw std::invalid_argument("a_ms must be >= 0");
    if (!positive(c) || c > 1) throw std::invalid_argument("c must be in (0, 1]");
    if (!positive(c0_km_per_s)) throw std::invalid_argument("c0 must be > 0");
    if (!positive(rtt_floor_ms)) throw std::invalid_argument("rtt_floor_ms must be > 0");
    if (packets < 1) throw std::invalid_argument("packets must be >= 1");
}

std::string_view to_string(VerdictCategory c)
{
    switch (c) {
    case VerdictCategory::Verified: return "verified";
    case VerdictCategory::AllFalsified: return "all_falsified";
    case VerdictCategory::NoVerifiedHint: return "no_verified_hint";
    case VerdictCategory::Unresponsive: return "unresponsive";
    case VerdictCategory::Filtered: return "filtered";
    }
    return "?";
}

std::optional<VerdictCategory> parse_verdict_category(std::string_view s)
{
    for (auto c : {VerdictCategory::Verified, VerdictCategory::AllFalsified, VerdictCategory::NoVerifiedHint,
                   VerdictCategory::Unresponsive, VerdictCategory::Filtered})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

std::string_view to_string(HintOutcome o)
{
    switch (o) {
    case HintOutcome::Verified: return "verified";
    case HintOutcome::Falsified: return "falsified";
    case HintOutcome::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::optional<double> exclusion_radius_km(double rtt_ms, const ValidationConfig& cfg)
{
    if (!(rtt_ms >= cfg.rtt_floor_ms)) return std::nullopt;
    return rtt_ms / 2.0 * cfg.km_per_ms();
}

HintCheck verify_hint(double probe_hint_km, std::optional<double> rtt_ms, const ValidationConfig& cfg)
{
    HintCheck check;
    const double propagation = 2.0 * probe_hint_km / cfg.km_per_ms();
    check.threshold_ms = cfg.a_ms + propagation;
    if (!rtt_ms) {
        check.timeout = true;
        return check;
    }
    const auto radius = exclusion_radius_km(*rtt_ms, cfg);
    if (!radius) {
        check.suspect = true;
        return check;
    }
    check.buffer_used_ms = *rtt_ms - propagation;
    check.excess_latency_ms = *rtt_ms - check.threshold_ms;
    if (probe_hint_km > *radius)
        check.outcome = HintOutcome::Falsified;
    else if (*rtt_ms < check.threshold_ms)
        check.outcome = HintOutcome::Verified;
    return check;
}

double max_error_km(double probe_hint_km, const ValidationConfig& cfg)
{
    return 2.0 * probe_hint_km + cfg.a_ms * cfg.km_per_ms() / 2.0;
}

namespace {

const LatLon& position_of(const std::unordered_map<LocationId, LatLon>& positions, LocationId id)
{
    const auto it = positions.find(id);
    if (it == positions.end()) throw std::logic_error("hint refers to unknown location " + std::to_string(id));
    return it->second;
}

}  // namespace

PrescanSplit falsify_by_prescan(std::vector<LocationHint> hints,
                                const std::unordered_map<LocationId, LatLon>& positions,
                                std::span<const MeasurementEvidence> vantage_results,
                                const ValidationConfig& cfg)
{
    PrescanSplit out;
    for (auto& hint : hints) {
        const auto& pos = position_of(positions, hint.location_id);
        const MeasurementEvidence* excluded_by = nullptr;
        for (const auto& m : vantage_results) {
            if (!m.rtt_ms) continue;
            const auto radius = exclusion_radius_km(*m.rtt_ms, cfg);
            if (radius && great_circle_km(m.origin_pos, pos) > *radius) {
                excluded_by = &m;
                break;
            }
        }
        if (excluded_by) {
            hint.status = HintStatus::Falsified;
            out.falsified.emplace_back(std::move(hint), excluded_by->origin_id);
        } else {
            out.surviving.push_back(std::move(hint));
        }
    }
    return out;
}

ProbeSelector::ProbeSelector(std::vector<Probe> probes, double max_distance_km)
    : probes_(std::move(probes)), max_distance_km_(max_distance_km)
{
}

std::optional<ProbeChoice> ProbeSelector::for_location(LocationId id, const LatLon& pos) const
{
    {
        std::shared_lock lock(mu_);
        const auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
    }
    auto choice = nearest_probe(pos, probes_, max_distance_km_);
    std::unique_lock lock(mu_);
    cache_.emplace(id, choice);
    return choice;
}

namespace {

DomainVerdict finish(const DomainState& state, VerdictCategory forced)
{
    DomainVerdict v;
    v.fqdn = state.task.fqdn;
    v.ip = state.task.ip;
    v.ip_encoded = state.task.ip_encoded;
    v.category = forced;
    v.measurements = state.measurements;
    v.hints = state.evidence;
    v.pinpoint_measurements = state.pinpoint_measurements;
    return v;
}

DomainVerdict conclude(const DomainState& state, const ValidationConfig& cfg)
{
    auto v = finish(state, VerdictCategory::NoVerifiedHint);
    for (std::size_t i = 0; i < v.hints.size(); ++i) {
        const auto& h = v.hints[i];
        switch (h.hint.status) {
        case HintStatus::Verified:
            v.verified = i;
            v.max_error_km = max_error_km(*h.probe_distance_km, cfg);
            break;
        case HintStatus::Falsified: ++v.tally.falsified; break;
        case HintStatus::UnverifiableNoProbe: ++v.tally.no_probe; break;
        case HintStatus::UnverifiableLatency:
            ++v.tally.latency;
            if (h.check && h.check->timeout) ++v.tally.timeouts;
            break;
        case HintStatus::Pending: ++v.tally.pending; break;
        }
    }
    if (v.verified)
        v.category = VerdictCategory::Verified;
    else if (!v.hints.empty() && v.tally.falsified == v.hints.size())
        v.category = VerdictCategory::AllFalsified;
    return v;
}

}  // namespace

std::optional<DomainVerdict> run_validation(DomainState& state, const ValidationContext& ctx)
{
    const auto& cfg = ctx.cfg;
    const auto& task = state.task;

    if (!state.started) {
        state.started = true;
        state.evidence.clear();
        for (const auto& h : task.hints) {
            HintEvidence e;
            e.hint = h;
            e.hint_pos = position_of(ctx.positions, h.location_id);
            state.evidence.push_back(std::move(e));
        }
    }
    if (task.filtered) return finish(state, VerdictCategory::Filtered);

    if (ctx.prescan && !state.prescan_applied) {
        state.prescan_applied = true;
        std::vector<MeasurementEvidence> vantage_results;
        for (const auto& r : ctx.prescan->results) {
            const auto v = std::find_if(ctx.vantages.begin(), ctx.vantages.end(),
                                        [&](const Vantage& v) { return v.name == r.origin_id; });
            if (v == ctx.vantages.end()) throw std::logic_error("prescan result from unknown vantage " + r.origin_id);
            vantage_results.push_back({r.origin_id, Origin::Kind::Vantage, v->pos, r.rtt_ms, r.timestamp});
        }
        state.measurements.insert(state.measurements.end(), vantage_results.begin(), vantage_results.end());
        if (!ctx.prescan->responsive) return finish(state, VerdictCategory::Unresponsive);

        std::vector<LocationHint> pending;
        for (const auto& e : state.evidence)
            if (e.hint.status == HintStatus::Pending) pending.push_back(e.hint);
        auto split = falsify_by_prescan(std::move(pending), ctx.positions, vantage_results, cfg);
        for (auto& [hint, vantage] : split.falsified) {
            for (auto& e : state.evidence) {
                if (e.hint.location_id == hint.location_id) {
                    e.hint.status = HintStatus::Falsified;
                    e.note = "prescan:" + vantage;
                }
            }
        }
    }

    for (auto& e : state.evidence) {
        if (e.hint.status != HintStatus::Pending) continue;
        const auto choice = ctx.probes.for_location(e.hint.location_id, e.hint_pos);
        if (!choice) {
            e.hint.status = HintStatus::UnverifiableNoProbe;
            e.note = "no_probe";
            continue;
        }
        e.probe_id = choice->probe.id;
        e.probe_distance_km = choice->distance_km;

        MeasurementResult result;
        try {
            result = ctx.backend.ping(Origin::of(choice->probe), task.ip, cfg.packets);
        } catch (const BackendError& err) {
            if (err.retryable()) return std::nullopt;
            e.hint.status = err.kind() == BackendError::Kind::UnknownProbe ? HintStatus::UnverifiableNoProbe
                                                                           : HintStatus::UnverifiableLatency;
            e.note = "backend:" + std::string(to_string(err.kind()));
            continue;
        }
        ++state.pinpoint_measurements;
        e.measurement = state.measurements.size();
        state.measurements.push_back(
            {choice->probe.id, Origin::Kind::Probe, choice->probe.pos, result.rtt_ms, result.timestamp});

        const auto check = verify_hint(choice->distance_km, result.rtt_ms, cfg);
        e.check = check;
        switch (check.outcome) {
        case HintOutcome::Verified: e.hint.status = HintStatus::Verified; break;
        case HintOutcome::Falsified: e.hint.status = HintStatus::Falsified; break;
        case HintOutcome::Inconclusive:
            e.hint.status = HintStatus::UnverifiableLatency;
            if (check.timeout) e.note = "timeout";
            if (check.suspect) e.note = "suspect_rtt";
            break;
        }
        if (e.hint.status == HintStatus::Verified) break;
    }
    return conclude(state, cfg);
}

DomainVerdict run_validation(const DomainTask& task, const ValidationContext& ctx)
{
    DomainState state;
    state.task = task;
    auto v = run_validation(state, ctx);
    if (!v) throw BackendError(BackendError::Kind::QuotaExceeded, "domain parked: " + task.fqdn);
    return std::move(*v);
}

Cdf make_cdf(std::vector<double> values)
{
    Cdf cdf;
    cdf.count = values.size();
    if (values.empty()) return cdf;
    std::sort(values.begin(), values.end());
    for (int step = 1; step <= 20; ++step) {
        const double q = step / 20.0;
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-9));
        rank = std::clamp<std::size_t>(rank, 1, values.size());
        cdf.quantiles.emplace_back(q, values[rank - 1]);
    }
    return cdf;
}

SensitivityReport sensitivity_report(const std::vector<DomainVerdict>& verdicts, const ValidationConfig& cfg)
{
    SensitivityReport rep;
    std::vector<double> distance, buffer, error, excess;
    const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.a_ms / rep.histogram_bin_ms)));
    for (const auto& v : verdicts) {
        if (const auto* h = v.verified_hint(); h && h->check && h->probe_distance_km) {
            distance.push_back(*h->probe_distance_km);
            buffer.push_back(h->check->buffer_used_ms);
            error.push_back(max_error_km(*h->probe_distance_km, cfg));
            continue;
        }
        for (const auto& h : v.hints) {
            if (h.hint.status == HintStatus::UnverifiableLatency && h.check && !h.check->timeout && !h.check->suspect)
                excess.push_back(h.check->excess_latency_ms);
        }
    }
    if (!buffer.empty()) {
        rep.buffer_histogram.assign(bins, 0);
        for (double b : buffer) {
            const auto bin = static_cast<std::size_t>(std::clamp(std::floor(b / rep.histogram_bin_ms), 0.0,
                                                                 static_cast<double>(bins - 1)));
            ++rep.buffer_histogram[bin];
        }
    }
    rep.probe_distance_km = make_cdf(std::move(distance));
    rep.buffer_used_ms = make_cdf(std::move(buffer));
    rep.max_error_km = make_cdf(std::move(error));
    rep.excess_latency_ms = make_cdf(std::move(excess));
    return rep;
}

}  // namespace hloc
