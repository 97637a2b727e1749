#include "hloc/hintsearch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace hloc {

std::string_view to_string(HintStatus s)
{
    switch (s) {
    case HintStatus::Pending: return "pending";
    case HintStatus::Verified: return "verified";
    case HintStatus::Falsified: return "falsified";
    case HintStatus::UnverifiableNoProbe: return "unverifiable_no_probe";
    case HintStatus::UnverifiableLatency: return "unverifiable_latency";
    }
    return "?";
}

std::optional<HintStatus> parse_hint_status(std::string_view s)
{
    for (auto st : {HintStatus::Pending, HintStatus::Verified, HintStatus::Falsified,
                    HintStatus::UnverifiableNoProbe, HintStatus::UnverifiableLatency})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

int source_priority(CodeSource s)
{
    switch (s) {
    case CodeSource::GEONAMES: return 0;
    case CodeSource::CLLI: return 1;
    case CodeSource::IATA: return 2;
    case CodeSource::UNLOCODE: return 3;
    case CodeSource::FAA: return 4;
    case CodeSource::ICAO: return 5;
    }
    return 6;
}

DomainHints find_hints(const DomainRecord& record, const CodeTrie& trie, const Blacklists& blacklists,
                       HintOrder order)
{
    DomainHints out;
    if (!record.valid()) return out;

    std::map<LocationId, std::size_t> slot;  // location -> index in out.hints
    std::size_t rank = 0;
    for (const auto& label : apply_word_blacklist(record.labels, blacklists)) {
        for (auto& m : trie.search_label(label.text, label.index)) {
            if (blacklists.codes.count(m.code)) continue;
            if (blacklists.code_locations.count({m.code, m.location_id})) continue;
            if (label.overlaps_mask(m.char_offset, m.char_offset + m.code.size())) continue;
            ++out.occurrences;

            LocationHint hint{record.fqdn,   record.ip,     m.location_id,   std::move(m.code),
                              m.source,      m.label_index, m.char_offset,   rank++,
                              HintStatus::Pending};
            const auto [it, fresh] = slot.emplace(hint.location_id, out.hints.size());
            if (fresh) {
                out.hints.push_back(std::move(hint));
                continue;
            }
            // Longest code wins; the earlier discovery keeps ties.
            auto& kept = out.hints[it->second];
            if (hint.code.size() > kept.code.size()) {
                hint.discovery_rank = kept.discovery_rank;
                kept = std::move(hint);
            }
        }
    }

    if (order == HintOrder::Ranked) {
        std::stable_sort(out.hints.begin(), out.hints.end(), [](const auto& a, const auto& b) {
            return std::make_tuple(-static_cast<long>(a.code.size()), source_priority(a.source), a.discovery_rank) <
                   std::make_tuple(-static_cast<long>(b.code.size()), source_priority(b.source), b.discovery_rank);
        });
    } else {
        std::stable_sort(out.hints.begin(), out.hints.end(),
                         [](const auto& a, const auto& b) { return a.discovery_rank < b.discovery_rank; });
    }
    return out;
}

namespace {

// Nearest-rank percentile over a sorted sample.
double percentile(const std::vector<std::size_t>& sorted, double q)
{
    if (sorted.empty()) return 0;
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return static_cast<double>(sorted[rank - 1]);
}

CountStats count(const std::vector<const DomainSearchResult*>& subset)
{
    CountStats s;
    s.domains = subset.size();
    if (subset.empty()) return s;
    std::vector<std::size_t> counts;
    std::size_t total_hints = 0, total_occ = 0;
    for (const auto* r : subset) {
        const auto n = r->hints.hints.size();
        counts.push_back(n);
        total_hints += n;
        total_occ += r->hints.occurrences;
        if (n == 0) ++s.no_match;
        for (const auto& h : r->hints.hints) ++s.hints_by_source[h.source];
    }
    std::sort(counts.begin(), counts.end());
    const auto n = static_cast<double>(subset.size());
    s.mean_hints = static_cast<double>(total_hints) / n;
    s.mean_occurrences = static_cast<double>(total_occ) / n;
    s.no_match_fraction = static_cast<double>(s.no_match) / n;
    s.hints_pct = {percentile(counts, 0.5), percentile(counts, 0.9), percentile(counts, 0.99),
                   static_cast<double>(counts.back())};
    return s;
}

}  // namespace

CorpusStats corpus_stats(const std::vector<DomainSearchResult>& results, std::size_t invalid_domains)
{
    std::vector<const DomainSearchResult*> all, enc, plain;
    for (const auto& r : results) {
        all.push_back(&r);
        (r.ip_encoded ? enc : plain).push_back(&r);
    }
    return {count(all), count(enc), count(plain), invalid_domains};
}

}  // namespace hloc
