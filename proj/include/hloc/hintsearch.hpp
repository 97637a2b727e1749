#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hloc/codetrie.hpp"
#include "hloc/domainprep.hpp"

namespace hloc {

enum class HintStatus : std::uint8_t {
    Pending,
    Verified,
    Falsified,
    UnverifiableNoProbe,
    UnverifiableLatency,
};

std::string_view to_string(HintStatus s);
std::optional<HintStatus> parse_hint_status(std::string_view s);

struct LocationHint {
    std::string fqdn;
    IpAddress ip;
    LocationId location_id = 0;
    std::string code;
    CodeSource source = CodeSource::IATA;
    std::size_t label_index = 0;
    std::size_t char_offset = 0;
    std::size_t discovery_rank = 0;  // position among the domain's matches in trie order
    HintStatus status = HintStatus::Pending;

    friend bool operator==(const LocationHint&, const LocationHint&) = default;
};

enum class HintOrder {
    Ranked,     // longer codes first, then source priority, then discovery order
    Discovery,  // trie discovery order
};

/// GEONAMES > CLLI > IATA > UNLOCODE > FAA > ICAO; lower value sorts first.
int source_priority(CodeSource s);

struct DomainHints {
    std::vector<LocationHint> hints;  // one per location, ordered by the policy
    std::size_t occurrences = 0;      // surviving matches before per-location dedup
};

DomainHints find_hints(const DomainRecord& record, const CodeTrie& trie, const Blacklists& blacklists,
                       HintOrder order = HintOrder::Ranked);

struct Percentiles {
    double p50 = 0, p90 = 0, p99 = 0, max = 0;
};

struct CountStats {
    std::size_t domains = 0;
    std::size_t no_match = 0;
    double mean_hints = 0;        // deduplicated per (domain, location)
    double mean_occurrences = 0;  // every surviving code occurrence
    Percentiles hints_pct;
    double no_match_fraction = 0;
    std::map<CodeSource, std::size_t> hints_by_source;
};

struct CorpusStats {
    CountStats all;
    CountStats ip_encoded;
    CountStats not_ip_encoded;
    std::size_t invalid_domains = 0;
};

struct DomainSearchResult {
    bool ip_encoded = false;
    DomainHints hints;
};

CorpusStats corpus_stats(const std::vector<DomainSearchResult>& results, std::size_t invalid_domains = 0);

}  // namespace hloc
