#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "hloc/measure.hpp"
#include "hloc/records.hpp"
#include "hloc/simworld.hpp"
#include "oracle.hpp"

using namespace hloc;

namespace {

IpAddress ip(const char* s) { return *IpAddress::parse(s); }

Probe probe(std::string id, LatLon pos, bool active = true) { return {std::move(id), pos, active, "atlas"}; }

}  // namespace

TEST_CASE("sim ping follows propagation physics")
{
    SimWorld w;
    w.noise = {0, 0};
    const LatLon here{48.0, 11.0};
    const LatLon far = destination_point(here, 73.0, 999.3);
    REQUIRE(oracle::distance_km(here.lat, here.lon, far.lat, far.lon) == doctest::Approx(999.3).epsilon(1e-9));
    w.routers[ip("192.0.2.1")] = {here, true};
    w.routers[ip("192.0.2.2")] = {far, true};
    w.routers[ip("192.0.2.3")] = {here, false};
    SimBackend sim(w, 1);

    const Origin at_router{"p1", here, Origin::Kind::Probe};
    const auto co = sim.ping(at_router, ip("192.0.2.1"));
    REQUIRE(co.rtt_ms);
    CHECK(*co.rtt_ms > 0);
    CHECK(*co.rtt_ms < 0.01);

    const auto r = sim.ping(at_router, ip("192.0.2.2"));
    REQUIRE(r.rtt_ms);
    CHECK(*r.rtt_ms == doctest::Approx(2 * 999.3 / oracle::kFiberKmPerMs).epsilon(1e-9));
    CHECK(std::abs(*r.rtt_ms - 10.0) < 1e-3);

    CHECK(sim.ping(at_router, ip("192.0.2.3")).timed_out());
    CHECK(sim.ping(at_router, ip("198.51.100.1")).timed_out());
}

TEST_CASE("sim RTT never beats light in fiber")
{
    std::mt19937_64 rng(99);
    SimWorld w;
    w.noise = {0, 9};
    std::vector<IpAddress> targets;
    for (int i = 0; i < 200; ++i) {
        const auto addr = ip(("10.1." + std::to_string(i / 250) + "." + std::to_string(i % 250 + 1)).c_str());
        w.routers[addr] = {random_point_on_sphere(rng, 85), true};
        targets.push_back(addr);
    }
    SimBackend sim(w, 7);
    for (int i = 0; i < 200; ++i) {
        const Origin o{"o" + std::to_string(i), random_point_on_sphere(rng, 85), Origin::Kind::Probe};
        for (int k = 0; k < 10; ++k) {
            const auto& t = targets[rng() % targets.size()];
            const auto& pos = w.routers.at(t).pos;
            const auto res = sim.ping(o, t, 1 + static_cast<int>(k % 3));
            REQUIRE(res.rtt_ms);
            const double floor = 2 * oracle::distance_km(o.pos.lat, o.pos.lon, pos.lat, pos.lon) / oracle::kFiberKmPerMs;
            CHECK(*res.rtt_ms >= floor - 1e-9);
            CHECK(*res.rtt_ms < floor + 9.0 + 1e-6);
        }
    }
}

TEST_CASE("sim results depend only on seed, origin, target and packet")
{
    SimWorld w;
    w.routers[ip("192.0.2.1")] = {{10, 10}, true};
    w.routers[ip("192.0.2.2")] = {{20, 20}, true};
    SimBackend a(w, 5), b(w, 5), c(w, 6);
    const Origin o{"p", {0, 0}, Origin::Kind::Probe};
    const auto first = a.ping(o, ip("192.0.2.1"));
    a.ping(o, ip("192.0.2.2"));
    CHECK(a.ping(o, ip("192.0.2.1")).rtt_ms == first.rtt_ms);
    CHECK(b.ping(o, ip("192.0.2.1")).rtt_ms == first.rtt_ms);
    CHECK(c.ping(o, ip("192.0.2.1")).rtt_ms != first.rtt_ms);
    // more packets can only lower the minimum
    CHECK(*a.ping(o, ip("192.0.2.1"), 5).rtt_ms <= *first.rtt_ms);
}

TEST_CASE("file backend replays recorded results")
{
    oracle::TempDir dir("file-backend");
    const auto path = dir.path() / "results.csv";
    std::ofstream(path) << "ip,origin_id,rtt_ms,timestamp\n"
                           "192.0.2.1,6001,12.5,100\n"
                           "192.0.2.1,6001,11.0,90\n"
                           "192.0.2.2,6001,timeout,95\n"
                           "2001:db8::1,dallas,40.25,80\n";
    auto fb = FileBackend::load(path);
    const Origin p{"6001", {0, 0}, Origin::Kind::Probe};
    const auto r = fb.ping(p, ip("192.0.2.1"));
    CHECK(r.rtt_ms == 11.0);
    CHECK(r.timestamp == 90);
    CHECK(fb.ping(p, ip("192.0.2.2")).timed_out());
    CHECK(fb.ping(p, ip("192.0.2.9")).timed_out());
    CHECK(fb.ping({"dallas", {0, 0}, Origin::Kind::Vantage}, ip("2001:db8::1")).rtt_ms == 40.25);
    try {
        fb.ping({"7777", {0, 0}, Origin::Kind::Probe}, ip("192.0.2.1"));
        FAIL("expected an error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::UnknownProbe);
        CHECK_FALSE(e.retryable());
    }

    // writing and re-reading gives the same bytes
    std::ostringstream once;
    write_measurements(once, {fb.ping(p, ip("192.0.2.1")), fb.ping(p, ip("192.0.2.2"))});
    std::ofstream(dir.path() / "again.csv") << once.str();
    auto again = FileBackend::load(dir.path() / "again.csv");
    std::ostringstream twice;
    write_measurements(twice, {again.ping(p, ip("192.0.2.1")), again.ping(p, ip("192.0.2.2"))});
    CHECK(once.str() == twice.str());

    std::ofstream(dir.path() / "bad.csv") << "192.0.2.1,6001,fast,1\n";
    CHECK_THROWS_AS(FileBackend::load(dir.path() / "bad.csv"), std::runtime_error);
}

TEST_CASE("backend error kinds")
{
    CHECK(BackendError(BackendError::Kind::Transport, "x").retryable());
    CHECK(BackendError(BackendError::Kind::QuotaExceeded, "x").retryable());
    CHECK_FALSE(BackendError(BackendError::Kind::UnknownProbe, "x").retryable());
    CHECK_FALSE(BackendError(BackendError::Kind::Protocol, "x").retryable());
    CHECK(to_string(BackendError::Kind::QuotaExceeded) == "quota_exceeded");
}

TEST_CASE("prescan")
{
    SimWorld w;
    w.noise = {0, 0};
    w.routers[ip("192.0.2.1")] = {{50.1, 8.7}, true};
    w.routers[ip("192.0.2.2")] = {{0, 0}, false};
    SimBackend sim(w, 1);
    const auto vantages = default_vantages();
    const std::vector<IpAddress> targets{ip("192.0.2.1"), ip("192.0.2.2")};
    const auto table = prescan(sim, vantages, targets);
    REQUIRE(table.size() == 2);
    const auto& up = table.at(targets[0]);
    CHECK(up.responsive);
    REQUIRE(up.results.size() == 3);
    CHECK(up.results[0].origin_id == "dallas");
    CHECK(up.results[1].origin_id == "frankfurt");
    CHECK(*up.results[1].rtt_ms < *up.results[0].rtt_ms);
    CHECK_FALSE(table.at(targets[1]).responsive);

    CHECK(prescan(sim, vantages, {}).empty());
    CHECK_THROWS_AS(prescan(sim, {}, targets), std::invalid_argument);

    // a target answering only one vantage keeps that RTT
    auto fb = FileBackend::from_results({{targets[0], "frankfurt", 3.0, 0}, {targets[0], "dallas", std::nullopt, 0}});
    const auto one = prescan(fb, vantages, std::span(targets.data(), 1));
    const auto& e = one.at(targets[0]);
    CHECK(e.responsive);
    CHECK(e.results[1].rtt_ms == 3.0);
    CHECK(e.results[0].timed_out());
    CHECK(e.results[2].timed_out());
    CHECK(e.errors.size() == 1);  // singapore unknown to the file
}

TEST_CASE("nearest_probe")
{
    const LatLon hint{40.0, -100.0};
    std::vector<Probe> probes{probe("1", hint), probe("2", destination_point(hint, 10, 50))};
    auto c = nearest_probe(hint, probes, 1000);
    REQUIRE(c);
    CHECK(c->probe.id == "1");
    CHECK(c->distance_km == 0.0);

    const std::vector<Probe> beaver{probe("9", destination_point(hint, 200, 927))};
    c = nearest_probe(hint, beaver, 1000);
    REQUIRE(c);
    CHECK(c->distance_km == doctest::Approx(927).epsilon(1e-6));

    const std::vector<Probe> far{probe("9", destination_point(hint, 200, 1200))};
    CHECK_FALSE(nearest_probe(hint, far, 1000));

    // inactive probes are ignored; equidistant probes tie-break on id
    const LatLon east = destination_point(hint, 90, 30), west = destination_point(hint, 270, 30);
    const std::vector<Probe> ties{probe("a", hint, false), probe("c", east), probe("b", west)};
    c = nearest_probe(hint, ties, 1000);
    REQUIRE(c);
    const double de = great_circle_km(hint, east), dw = great_circle_km(hint, west);
    CHECK(c->probe.id == (de == dw ? "b" : (de < dw ? "c" : "b")));
    CHECK_FALSE(nearest_probe(hint, {}, 1000));
}

TEST_CASE("nearest_probe agrees with exhaustive search")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Probe> probes;
        const auto n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i)
            probes.push_back(probe(std::to_string(i), random_point_on_sphere(rng, 80), rng() % 5 != 0));
        const auto hint = random_point_on_sphere(rng, 80);
        const double x = 500 + static_cast<double>(rng() % 8000);
        const auto got = nearest_probe(hint, probes, x);
        std::optional<double> best;
        for (const auto& p : probes)
            if (p.active) {
                const double d = oracle::distance_km(hint.lat, hint.lon, p.pos.lat, p.pos.lon);
                if (!best || d < *best) best = d;
            }
        if (best && *best < x - 1e-6) {
            REQUIRE(got);
            CHECK(got->distance_km == doctest::Approx(*best).epsilon(1e-9));
            for (const auto& p : probes)
                if (p.active) CHECK(got->distance_km <= great_circle_km(hint, p.pos));
        } else if (!best || *best > x + 1e-6) {
            CHECK_FALSE(got);
        }
    }
}

TEST_CASE("rate limiter token bucket")
{
    auto now = std::chrono::steady_clock::time_point{};
    RateLimiter rl(3, 2.0, [&] { return now; });
    CHECK(rl.try_acquire());
    CHECK(rl.try_acquire());
    CHECK(rl.try_acquire());
    CHECK_FALSE(rl.try_acquire());
    now += std::chrono::milliseconds(499);
    CHECK_FALSE(rl.try_acquire());
    now += std::chrono::milliseconds(1);
    CHECK(rl.try_acquire());
    now += std::chrono::seconds(100);
    CHECK(rl.available() == doctest::Approx(3.0));
    CHECK_THROWS_AS(RateLimiter(0, 1), std::invalid_argument);

    RateLimiter frozen(1, 0.0);
    CHECK(frozen.acquire(std::chrono::milliseconds(10)));
    CHECK_FALSE(frozen.acquire(std::chrono::milliseconds(10)));
}

TEST_CASE("rate limiter under concurrency hands out exactly its capacity")
{
    auto now = std::chrono::steady_clock::time_point{};
    RateLimiter rl(100, 0.0, [&] { return now; });
    std::atomic<int> granted{0};
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < 8; ++t)
            pool.emplace_back([&] {
                for (int i = 0; i < 50; ++i)
                    if (rl.try_acquire()) ++granted;
            });
    }
    CHECK(granted == 100);
}

TEST_CASE("budget backend counts probe pings only")
{
    SimWorld w;
    w.routers[ip("192.0.2.1")] = {{0, 0}, true};
    SimBackend sim(w, 1);
    BudgetBackend budget(sim, 2);
    const Origin probe_origin{"p", {0, 0}, Origin::Kind::Probe};
    const Origin vantage{"dallas", {32.7767, -96.797}, Origin::Kind::Vantage};
    for (int i = 0; i < 5; ++i) CHECK_FALSE(budget.ping(vantage, ip("192.0.2.1")).timed_out());
    CHECK_NOTHROW(budget.ping(probe_origin, ip("192.0.2.1")));
    CHECK_NOTHROW(budget.ping(probe_origin, ip("192.0.2.1")));
    try {
        budget.ping(probe_origin, ip("192.0.2.1"));
        FAIL("expected quota error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendError::Kind::QuotaExceeded);
    }
}
