#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hloc/geodata.hpp"
#include "hloc/ip_address.hpp"

namespace hloc {

enum class Rejection { BadChar, BadTld, EmptyLabel };

std::string_view to_string(Rejection r);
std::optional<Rejection> parse_rejection(std::string_view s);

struct DomainRecord {
    IpAddress ip;
    std::string fqdn;                 // lowercase, no trailing dot
    std::vector<std::string> labels;  // searchable labels, registrable domain removed
    bool ip_encoded = false;
    std::optional<Rejection> rejection;

    bool valid() const { return !rejection.has_value(); }
};

/// Set of existing top-level domains (IANA root zone list format: one TLD per
/// line, case-insensitive, '#' comments).
class TldRegistry {
public:
    TldRegistry() = default;
    explicit TldRegistry(std::set<std::string> tlds);
    static TldRegistry load(const std::filesystem::path& path);

    bool contains(std::string_view tld) const;
    std::size_t size() const { return tlds_.size(); }

private:
    std::set<std::string, std::less<>> tlds_;
};

/// Public-suffix rules in the publicsuffix.org list format: plain rules,
/// wildcard rules ("*.ck") and exception rules ("!www.ck").
class SuffixRules {
public:
    SuffixRules() = default;
    static SuffixRules load(const std::filesystem::path& path);
    static SuffixRules from_lines(const std::vector<std::string>& lines);

    /// Number of trailing labels forming the public suffix of `labels`.
    /// Falls back to 1 (the TLD) when no rule matches.
    std::size_t public_suffix_length(const std::vector<std::string>& labels) const;

private:
    void add(std::string_view rule);

    std::set<std::string, std::less<>> rules_;
    std::set<std::string, std::less<>> wildcards_;   // stored without the "*."
    std::set<std::string, std::less<>> exceptions_;  // stored without the "!"
};

/// Lowercases, drops one trailing dot, and checks hostname characters
/// ([a-z0-9-] and dots), empty labels and the TLD. The returned record has
/// no labels yet.
DomainRecord validate_domain(const IpAddress& ip, std::string_view fqdn, const TldRegistry& tlds);

/// Labels left of the registrable domain (public suffix plus one label).
std::vector<std::string> strip_registrable(std::string_view fqdn, const SuffixRules& rules);

/// True iff some label embeds `ip` under one of the supported schemes:
/// IPv4 decimal octets in address or reverse order joined by '-' or nothing,
/// optionally zero-padded to three digits, 8-digit hex in either order, or all
/// four octets present as separate labels; IPv6 as the 32-nibble string (either
/// order) or its hex groups joined by '-' (compressed, unpadded or padded).
bool detect_ip_encoding(const IpAddress& ip, const std::vector<std::string>& labels);

/// validate_domain + strip_registrable + detect_ip_encoding.
DomainRecord prepare_domain(const IpAddress& ip, std::string_view fqdn, const TldRegistry& tlds,
                            const SuffixRules& rules);

struct Blacklists {
    std::set<std::string> codes;
    std::set<std::string> words;
    std::set<std::pair<std::string, LocationId>> code_locations;
};

struct BlacklistFiles {
    std::filesystem::path codes;
    std::filesystem::path words;
    std::filesystem::path code_locations;
};

struct LoadedBlacklists {
    Blacklists lists;
    std::vector<std::string> warnings;  // unresolved location names etc.
};

/// Reads the three blacklist files. Code-location lines are "code location-name";
/// the name resolves case-insensitively to every location carrying it.
LoadedBlacklists load_blacklists(const BlacklistFiles& files, const std::vector<Location>& locations);

/// A label after word blacklisting: `masked` holds [begin, end) spans that
/// must not take part in any match.
struct SearchLabel {
    std::string text;
    std::size_t index = 0;  // position in DomainRecord::labels
    std::vector<std::pair<std::size_t, std::size_t>> masked;

    bool overlaps_mask(std::size_t begin, std::size_t end) const;
};

std::vector<SearchLabel> apply_word_blacklist(const std::vector<std::string>& labels,
                                              const Blacklists& blacklists);

}  // namespace hloc
