#include <doctest.h>

#include <random>

#include "hloc/hintsearch.hpp"

using namespace hloc;

namespace {

Location loc(LocationId id, std::string name, std::initializer_list<LocationCode> codes)
{
    Location l;
    l.id = id;
    l.name = std::move(name);
    l.codes = codes;
    return l;
}

DomainRecord record(std::string fqdn, std::vector<std::string> labels, bool encoded = false)
{
    DomainRecord r;
    r.ip = *IpAddress::parse("192.0.2.1");
    r.fqdn = std::move(fqdn);
    r.labels = std::move(labels);
    r.ip_encoded = encoded;
    return r;
}

std::vector<Location> world()
{
    return {loc(0, "Melbourne", {{"mel", CodeSource::IATA}, {"melbourne", CodeSource::GEONAMES}}),
            loc(1, "Milan", {{"lin", CodeSource::IATA}, {"milan", CodeSource::GEONAMES}}),
            loc(2, "Dublin", {{"dublin", CodeSource::GEONAMES}, {"dub", CodeSource::IATA}}),
            loc(3, "Houston", {{"hstntx", CodeSource::CLLI}, {"hou", CodeSource::IATA}, {"ushou", CodeSource::UNLOCODE}}),
            loc(4, "Telford", {{"tel", CodeSource::IATA}}),
            loc(5, "Ternate", {{"ter", CodeSource::ICAO}}),
            loc(6, "Nice", {{"nic", CodeSource::FAA}})};
}

std::set<std::string> codes_of(const DomainHints& h)
{
    std::set<std::string> s;
    for (const auto& x : h.hints) s.insert(x.code);
    return s;
}

}  // namespace

TEST_CASE("IP-encoded name yields the Melbourne IATA hint")
{
    const auto trie = CodeTrie::build(world());
    const auto h = find_hints(record("ip-1-2-3-4.mel.xi.com.au", {"ip-1-2-3-4", "mel"}, true), trie, {});
    REQUIRE(h.hints.size() == 1);
    CHECK(h.hints[0].code == "mel");
    CHECK(h.hints[0].source == CodeSource::IATA);
    CHECK(h.hints[0].location_id == 0);
    CHECK(h.hints[0].label_index == 1);
    CHECK(h.hints[0].status == HintStatus::Pending);
}

TEST_CASE("code-location blacklist suppresses lin for Milan inside dublin")
{
    const auto trie = CodeTrie::build(world());
    const auto rec = record("core1.dublin.example.net", {"core1", "dublin"});
    CHECK(codes_of(find_hints(rec, trie, {})) == std::set<std::string>{"dublin", "lin"});
    Blacklists bl;
    bl.code_locations = {{"lin", 1}};
    const auto h = find_hints(rec, trie, bl);
    CHECK(codes_of(h) == std::set<std::string>{"dublin"});
    CHECK(h.hints[0].source == CodeSource::GEONAMES);
}

TEST_CASE("names without matches")
{
    const auto trie = CodeTrie::build(world());
    Blacklists bl;
    bl.words = {"internet", "customer"};
    const auto h = find_hints(record("internet-gw.customer.alter.net", {"internet-gw", "customer"}), trie, bl);
    CHECK(h.hints.empty());
    CHECK(h.occurrences == 0);

    DomainRecord invalid = record("x.local", {});
    invalid.rejection = Rejection::BadTld;
    CHECK(find_hints(invalid, trie, {}).hints.empty());
}

TEST_CASE("code blacklist and word masks")
{
    const auto trie = CodeTrie::build(world());
    const auto rec = record("telecom-mel.example.net", {"telecom-mel"});
    CHECK(codes_of(find_hints(rec, trie, {})) == std::set<std::string>{"tel", "mel"});
    Blacklists bl;
    bl.codes = {"tel"};
    CHECK(codes_of(find_hints(rec, trie, bl)) == std::set<std::string>{"mel"});
    Blacklists words;
    words.words = {"telecom"};
    CHECK(codes_of(find_hints(rec, trie, words)) == std::set<std::string>{"mel"});
}

TEST_CASE("one hint per location, longest code wins")
{
    const auto trie = CodeTrie::build(world());
    const auto h = find_hints(record("mel.melbourne.example.net", {"mel", "melbourne"}), trie, {});
    REQUIRE(h.hints.size() == 1);
    CHECK(h.hints[0].code == "melbourne");
    CHECK(h.hints[0].label_index == 1);
    CHECK(h.hints[0].discovery_rank == 0);
    CHECK(h.occurrences == 3);  // mel, mel (inside melbourne), melbourne
}

TEST_CASE("ranked and discovery order")
{
    const auto trie = CodeTrie::build(world());
    // discovery: hou(3), ter(5), nic(6) ... then hstntx(3) dedups into hou's slot
    const auto rec = record("hou-ter.nic.hstntx.example.net", {"hou-ter", "nic", "hstntx"});
    const auto ranked = find_hints(rec, trie, {}, HintOrder::Ranked);
    const auto discovery = find_hints(rec, trie, {}, HintOrder::Discovery);
    REQUIRE(ranked.hints.size() == 3);
    CHECK(ranked.hints[0].code == "hstntx");
    CHECK(ranked.hints[1].code == "nic");  // FAA before ICAO at equal length
    CHECK(ranked.hints[2].code == "ter");
    REQUIRE(discovery.hints.size() == 3);
    CHECK(discovery.hints[0].code == "hstntx");
    CHECK(discovery.hints[1].code == "ter");
    CHECK(discovery.hints[2].code == "nic");
    CHECK(source_priority(CodeSource::GEONAMES) < source_priority(CodeSource::CLLI));
    CHECK(source_priority(CodeSource::CLLI) < source_priority(CodeSource::IATA));
    CHECK(source_priority(CodeSource::IATA) < source_priority(CodeSource::UNLOCODE));
    CHECK(source_priority(CodeSource::UNLOCODE) < source_priority(CodeSource::FAA));
    CHECK(source_priority(CodeSource::FAA) < source_priority(CodeSource::ICAO));
}

TEST_CASE("adding blacklist entries never adds hints")
{
    std::mt19937_64 rng(41);
    const auto trie = CodeTrie::build(world());
    const std::vector<std::string> pieces{"mel", "lin", "dublin", "hou", "tel", "ter", "nic", "milan", "x", "-", "1"};
    const std::vector<std::string> words{"tele", "bourne", "ubl", "ice", "milan", "hou"};
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> labels;
        for (int k = 0; k < 3; ++k) {
            std::string l;
            for (int j = 0; j < 3; ++j) l += pieces[rng() % pieces.size()];
            labels.push_back(l);
        }
        const auto rec = record("r.example.net", labels);
        Blacklists bl;
        std::size_t prev = find_hints(rec, trie, bl).hints.size();
        std::size_t prev_occ = find_hints(rec, trie, bl).occurrences;
        for (int step = 0; step < 6; ++step) {
            switch (rng() % 3) {
            case 0: bl.codes.insert(pieces[rng() % 8]); break;
            case 1: bl.words.insert(words[rng() % words.size()]); break;
            default: bl.code_locations.insert({pieces[rng() % 8], static_cast<LocationId>(rng() % 7)});
            }
            const auto h = find_hints(rec, trie, bl);
            CHECK(h.hints.size() <= prev);
            CHECK(h.occurrences <= prev_occ);
            prev = h.hints.size();
            prev_occ = h.occurrences;
            std::set<LocationId> ids;
            for (const auto& x : h.hints) CHECK(ids.insert(x.location_id).second);
        }
    }
}

TEST_CASE("corpus_stats")
{
    auto result = [](std::size_t n, bool enc) {
        DomainSearchResult r;
        r.ip_encoded = enc;
        for (std::size_t i = 0; i < n; ++i) {
            LocationHint h;
            h.location_id = static_cast<LocationId>(i);
            h.source = i % 2 ? CodeSource::IATA : CodeSource::CLLI;
            r.hints.hints.push_back(h);
        }
        r.hints.occurrences = 2 * n;
        return r;
    };
    const auto s = corpus_stats({result(2, false), result(4, true), result(6, false)}, 1);
    CHECK(s.all.mean_hints == doctest::Approx(4.0));
    CHECK(s.all.mean_occurrences == doctest::Approx(8.0));
    CHECK(s.all.no_match_fraction == 0.0);
    CHECK(s.all.hints_pct.p50 == 4);
    CHECK(s.all.hints_pct.max == 6);
    CHECK(s.all.hints_by_source.at(CodeSource::IATA) == 1 + 2 + 3);
    CHECK(s.ip_encoded.domains == 1);
    CHECK(s.not_ip_encoded.mean_hints == doctest::Approx(4.0));
    CHECK(s.invalid_domains == 1);

    const auto none = corpus_stats({result(0, false), result(0, true)});
    CHECK(none.all.mean_hints == 0.0);
    CHECK(none.all.no_match_fraction == 1.0);

    const auto empty = corpus_stats({});
    CHECK(empty.all.domains == 0);
    CHECK(empty.all.mean_hints == 0.0);
}

TEST_CASE("lower population threshold never lowers the mean hint count")
{
    std::vector<RawCode> raw{{"mel", CodeSource::IATA, {-37.8, 144.9}, 4900000, "Melbourne"},
                             {"ter", CodeSource::ICAO, {0.8, 127.3}, 5000, "Ternate"},
                             {"nic", CodeSource::FAA, {43.7, 7.26}, 340000, "Nice"},
                             {"ushou", CodeSource::UNLOCODE, {29.75, -95.37}, 2300000, "Houston"},
                             {"lin", CodeSource::IATA, {45.4, 9.27}, 1350000, "Milan"},
                             {"tel", CodeSource::IATA, {52.7, -2.5}, 2000, "Telford"}};
    const auto merged = merge_locations(raw, GeoConfig{});
    const std::vector<DomainRecord> corpus{record("a", {"melter"}), record("b", {"nic-tel"}), record("c", {"ushou1"}),
                                           record("d", {"xyz"}), record("e", {"lin-ter-mel"})};
    auto mean = [&](std::uint64_t threshold) {
        GeoConfig g;
        g.population_threshold = threshold;
        const auto trie = CodeTrie::build(apply_population_filter(merged, g));
        std::vector<DomainSearchResult> results;
        for (const auto& r : corpus) results.push_back({false, find_hints(r, trie, {})});
        return corpus_stats(results).all.mean_hints;
    };
    CHECK(mean(1000) > mean(100000));
    CHECK(mean(100000) >= mean(2000000));
}

TEST_CASE("hint status names")
{
    for (auto s : {HintStatus::Pending, HintStatus::Verified, HintStatus::Falsified, HintStatus::UnverifiableNoProbe,
                   HintStatus::UnverifiableLatency})
        CHECK(parse_hint_status(to_string(s)) == s);
    CHECK(parse_hint_status("nope") == std::nullopt);
}
