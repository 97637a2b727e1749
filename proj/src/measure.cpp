#include "hloc/measure.hpp"

#include <algorithm>
#include <thread>
#include <tuple>

#include "text.hpp"

namespace hloc {

std::string_view to_string(BackendError::Kind k)
{
    switch (k) {
    case BackendError::Kind::Transport: return "transport";
    case BackendError::Kind::QuotaExceeded: return "quota_exceeded";
    case BackendError::Kind::UnknownProbe: return "unknown_probe";
    case BackendError::Kind::Protocol: return "protocol";
    }
    return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Uniform in [0, 1) from the top 53 bits.
double unit_interval(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// Smallest RTT a responder can report; keeps rtt strictly positive.
constexpr double kMinRttMs = 1e-3;

}  // namespace

SimBackend::SimBackend(const SimWorld& world, std::uint64_t seed, double km_per_ms)
    : world_(world), seed_(seed), km_per_ms_(km_per_ms)
{
    if (!(km_per_ms > 0)) throw std::invalid_argument("km_per_ms must be positive");
    if (world.noise.min_ms < 0 || world.noise.max_ms < world.noise.min_ms)
        throw std::invalid_argument("noise bounds must satisfy 0 <= min <= max");
}

MeasurementResult SimBackend::ping(const Origin& origin, const IpAddress& target, int packets)
{
    MeasurementResult res{target, origin.id, std::nullopt, 0};
    const auto it = world_.routers.find(target);
    if (it == world_.routers.end() || !it->second.responsive) return res;

    const double base = propagation_ms(great_circle_km(origin.pos, it->second.pos));
    const auto& bytes = target.bytes();
    std::uint64_t key = splitmix64(seed_ ^ fnv1a(origin.id));
    key = splitmix64(key ^ fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));

    double best = 0;
    for (int p = 0; p < std::max(1, packets); ++p) {
        const double u = unit_interval(splitmix64(key + static_cast<std::uint64_t>(p)));
        const double noise = world_.noise.min_ms + u * (world_.noise.max_ms - world_.noise.min_ms);
        const double rtt = base + noise;
        best = p == 0 ? rtt : std::min(best, rtt);
    }
    res.rtt_ms = std::max(best, kMinRttMs);
    return res;
}

FileBackend FileBackend::load(const std::filesystem::path& path)
{
    auto in = text::open_input(path);
    std::vector<MeasurementResult> results;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (text::read_line(in, line)) {
        ++line_no;
        if (text::is_blank_or_comment(line)) continue;
        if (!header) {
            header = true;
            if (line.starts_with("ip,")) continue;
        }
        const auto f = text::split_delimited(line, ',');
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (f.size() < 4) throw std::runtime_error(where + ": expected ip,origin_id,rtt_ms,timestamp");
        const auto ip = IpAddress::parse(text::trim(f[0]));
        if (!ip) throw std::runtime_error(where + ": bad ip '" + f[0] + "'");
        MeasurementResult r{*ip, std::string(text::trim(f[1])), std::nullopt, 0};
        const auto rtt_field = text::to_lower(text::trim(f[2]));
        if (rtt_field != "timeout") {
            r.rtt_ms = text::parse_double(rtt_field);
            if (!r.rtt_ms) throw std::runtime_error(where + ": bad rtt '" + f[2] + "'");
        }
        r.timestamp = text::parse_int<std::int64_t>(f[3]).value_or(0);
        results.push_back(std::move(r));
    }
    return from_results(std::move(results));
}

FileBackend FileBackend::from_results(std::vector<MeasurementResult> results)
{
    FileBackend fb;
    for (auto& r : results) {
        auto& slot = fb.by_origin_[r.origin_id][r.target];
        slot.push_back(std::move(r));
    }
    return fb;
}

MeasurementResult FileBackend::ping(const Origin& origin, const IpAddress& target, int)
{
    const auto o = by_origin_.find(origin.id);
    if (o == by_origin_.end())
        throw BackendError(BackendError::Kind::UnknownProbe, "no recorded results for origin " + origin.id);
    const auto t = o->second.find(target);
    if (t == o->second.end()) return {target, origin.id, std::nullopt, 0};

    // Minimum RTT; the earliest timestamp among equal minima so replay is stable.
    std::optional<MeasurementResult> best;
    for (const auto& r : t->second) {
        if (!best) {
            best = r;
            continue;
        }
        if (r.rtt_ms && (!best->rtt_ms || std::tie(*r.rtt_ms, r.timestamp) < std::tie(*best->rtt_ms, best->timestamp)))
            best = r;
        else if (!r.rtt_ms && !best->rtt_ms && r.timestamp < best->timestamp)
            best = r;
    }
    return *best;
}

RateLimiter::RateLimiter(double capacity, double refill_per_second, Clock clock)
    : capacity_(capacity), refill_per_second_(refill_per_second), tokens_(capacity),
      clock_(std::move(clock)), last_(clock_())
{
    if (!(capacity >= 1) || !(refill_per_second >= 0))
        throw std::invalid_argument("rate limiter needs capacity >= 1 and refill >= 0");
}

void RateLimiter::refill_locked()
{
    const auto now = clock_();
    const std::chrono::duration<double> dt = now - last_;
    last_ = now;
    if (dt.count() > 0) tokens_ = std::min(capacity_, tokens_ + dt.count() * refill_per_second_);
}

bool RateLimiter::try_acquire()
{
    std::lock_guard lock(mu_);
    refill_locked();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
}

bool RateLimiter::acquire(std::chrono::milliseconds max_wait)
{
    const auto deadline = std::chrono::steady_clock::now() + max_wait;
    while (true) {
        if (try_acquire()) return true;
        if (std::chrono::steady_clock::now() >= deadline || refill_per_second_ <= 0) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

double RateLimiter::available()
{
    std::lock_guard lock(mu_);
    refill_locked();
    return tokens_;
}

MeasurementResult BudgetBackend::ping(const Origin& origin, const IpAddress& target, int packets)
{
    if (origin.kind == Origin::Kind::Probe && remaining_.fetch_sub(1) <= 0) {
        remaining_.fetch_add(1);
        throw BackendError(BackendError::Kind::QuotaExceeded, "measurement budget exhausted");
    }
    return inner_.ping(origin, target, packets);
}

PrescanTable prescan(MeasurementBackend& backend, std::span<const Vantage> vantages,
                     std::span<const IpAddress> targets)
{
    if (vantages.empty()) throw std::invalid_argument("prescan needs at least one vantage");
    PrescanTable table;
    for (const auto& ip : targets) {
        auto& entry = table[ip];
        if (!entry.results.empty() || !entry.errors.empty()) continue;  // duplicate target
        for (const auto& v : vantages) {
            try {
                auto r = backend.ping(Origin::of(v), ip);
                entry.responsive = entry.responsive || !r.timed_out();
                entry.results.push_back(std::move(r));
            } catch (const BackendError& e) {
                entry.errors.push_back(v.name + ": " + e.what());
                entry.results.push_back({ip, v.name, std::nullopt, 0});
            }
        }
    }
    return table;
}

std::optional<ProbeChoice> nearest_probe(const LatLon& hint, std::span<const Probe> probes,
                                         double max_distance_km)
{
    const Probe* best = nullptr;
    double best_d = 0;
    for (const auto& p : probes) {
        if (!p.active) continue;
        const double d = great_circle_km(hint, p.pos);
        if (!best || d < best_d || (d == best_d && p.id < best->id)) {
            best = &p;
            best_d = d;
        }
    }
    if (!best || !(best_d < max_distance_km)) return std::nullopt;
    return ProbeChoice{*best, best_d};
}

}  // namespace hloc
