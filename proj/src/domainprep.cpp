#include "hloc/domainprep.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "text.hpp"

namespace hloc {

std::string_view to_string(Rejection r)
{
    switch (r) {
    case Rejection::BadChar: return "bad_char";
    case Rejection::BadTld: return "bad_tld";
    case Rejection::EmptyLabel: return "empty_label";
    }
    return "?";
}

std::optional<Rejection> parse_rejection(std::string_view s)
{
    for (auto r : {Rejection::BadChar, Rejection::BadTld, Rejection::EmptyLabel})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

namespace {

std::vector<std::string> read_entries(const std::filesystem::path& path)
{
    auto in = text::open_input(path);
    std::vector<std::string> out;
    std::string line;
    while (text::read_line(in, line)) {
        const auto hash = line.find('#');
        const auto entry = text::trim(std::string_view(line).substr(0, hash));
        if (!entry.empty()) out.push_back(text::to_lower(entry));
    }
    return out;
}

bool is_host_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

}  // namespace

TldRegistry::TldRegistry(std::set<std::string> tlds)
{
    for (const auto& t : tlds) tlds_.insert(text::to_lower(t));
}

TldRegistry TldRegistry::load(const std::filesystem::path& path)
{
    TldRegistry reg;
    for (auto& e : read_entries(path)) reg.tlds_.insert(std::move(e));
    return reg;
}

bool TldRegistry::contains(std::string_view tld) const { return tlds_.find(tld) != tlds_.end(); }

SuffixRules SuffixRules::load(const std::filesystem::path& path)
{
    auto in = text::open_input(path);
    SuffixRules rules;
    std::string line;
    while (text::read_line(in, line)) {
        const auto t = text::trim(line);
        if (t.empty() || t.starts_with("//")) continue;
        // Rules end at the first whitespace.
        rules.add(t.substr(0, t.find_first_of(" \t")));
    }
    return rules;
}

SuffixRules SuffixRules::from_lines(const std::vector<std::string>& lines)
{
    SuffixRules rules;
    for (const auto& l : lines) {
        const auto t = text::trim(l);
        if (!t.empty() && !t.starts_with("//")) rules.add(t);
    }
    return rules;
}

void SuffixRules::add(std::string_view rule)
{
    auto r = text::to_lower(rule);
    if (r.starts_with("!")) {
        exceptions_.insert(r.substr(1));
    } else if (r.starts_with("*.")) {
        wildcards_.insert(r.substr(2));
    } else {
        rules_.insert(std::move(r));
    }
}

std::size_t SuffixRules::public_suffix_length(const std::vector<std::string>& labels) const
{
    const auto n = labels.size();
    if (n == 0) return 0;
    std::size_t best = 1;
    std::string suffix;  // last k labels joined
    std::string parent;  // last k-1 labels joined
    for (std::size_t k = 1; k <= n; ++k) {
        parent = suffix;
        const auto& label = labels[n - k];
        suffix = suffix.empty() ? label : label + "." + suffix;
        if (exceptions_.count(suffix)) return k - 1;
        if (rules_.count(suffix)) best = k;
        if (k >= 2 && wildcards_.count(parent)) best = k;
    }
    return best;
}

DomainRecord validate_domain(const IpAddress& ip, std::string_view fqdn, const TldRegistry& tlds)
{
    DomainRecord rec;
    rec.ip = ip;
    rec.fqdn = text::to_lower(text::trim(fqdn));
    if (!rec.fqdn.empty() && rec.fqdn.back() == '.') rec.fqdn.pop_back();

    if (!std::all_of(rec.fqdn.begin(), rec.fqdn.end(), is_host_char)) {
        rec.rejection = Rejection::BadChar;
        return rec;
    }
    const auto labels = text::split(rec.fqdn, '.');
    if (rec.fqdn.empty() ||
        std::any_of(labels.begin(), labels.end(), [](const auto& l) { return l.empty(); })) {
        rec.rejection = Rejection::EmptyLabel;
        return rec;
    }
    if (!tlds.contains(labels.back())) rec.rejection = Rejection::BadTld;
    return rec;
}

std::vector<std::string> strip_registrable(std::string_view fqdn, const SuffixRules& rules)
{
    auto labels = text::split(fqdn, '.');
    const auto suffix = rules.public_suffix_length(labels);
    const auto registrable = suffix + 1;
    if (labels.size() <= registrable) return {};
    labels.resize(labels.size() - registrable);
    return labels;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); }

// Occurrence of `needle` in `hay` not flanked by characters for which
// `joins` is true (which would make the match part of a longer number).
bool contains_isolated(std::string_view hay, std::string_view needle, bool (*joins)(char))
{
    if (needle.empty()) return false;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !joins(hay[pos - 1]);
        const auto end = pos + needle.size();
        const bool right_ok = end == hay.size() || !joins(hay[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

struct Candidates {
    std::vector<std::string> decimal;  // isolated from neighbouring digits
    std::vector<std::string> hex;      // isolated from neighbouring hex digits
};

Candidates ipv4_candidates(const IpAddress& ip)
{
    Candidates c;
    const auto& b = ip.bytes();
    std::vector<std::string> plain, padded;
    for (int i = 0; i < 4; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%u", b[i]);
        plain.emplace_back(buf);
        std::snprintf(buf, sizeof buf, "%03u", b[i]);
        padded.emplace_back(buf);
    }
    for (bool reverse : {false, true}) {
        auto p = plain;
        auto q = padded;
        if (reverse) {
            std::reverse(p.begin(), p.end());
            std::reverse(q.begin(), q.end());
        }
        for (std::string_view sep : {"-", ""}) {
            c.decimal.push_back(join(p, sep));
            c.decimal.push_back(join(q, sep));
        }
        char hex[9];
        if (reverse)
            std::snprintf(hex, sizeof hex, "%02x%02x%02x%02x", b[3], b[2], b[1], b[0]);
        else
            std::snprintf(hex, sizeof hex, "%02x%02x%02x%02x", b[0], b[1], b[2], b[3]);
        c.hex.emplace_back(hex);
    }
    return c;
}

Candidates ipv6_candidates(const IpAddress& ip)
{
    Candidates c;
    const auto& b = ip.bytes();
    std::string nibbles;
    std::vector<std::string> groups, padded_groups;
    for (int g = 0; g < 8; ++g) {
        const unsigned v = (static_cast<unsigned>(b[2 * g]) << 8) | b[2 * g + 1];
        char buf[8];
        std::snprintf(buf, sizeof buf, "%x", v);
        groups.emplace_back(buf);
        std::snprintf(buf, sizeof buf, "%04x", v);
        padded_groups.emplace_back(buf);
        nibbles += buf;
    }
    c.hex.push_back(nibbles);
    c.hex.emplace_back(nibbles.rbegin(), nibbles.rend());
    c.hex.push_back(join(groups, "-"));
    c.hex.push_back(join(padded_groups, "-"));
    auto compressed = ip.to_string();
    std::replace(compressed.begin(), compressed.end(), ':', '-');
    c.hex.push_back(compressed);
    return c;
}

}  // namespace

bool detect_ip_encoding(const IpAddress& ip, const std::vector<std::string>& labels)
{
    const auto cand = ip.is_v4() ? ipv4_candidates(ip) : ipv6_candidates(ip);
    for (const auto& label : labels) {
        for (const auto& d : cand.decimal)
            if (contains_isolated(label, d, is_digit)) return true;
        for (const auto& h : cand.hex)
            if (contains_isolated(label, h, is_hex)) return true;
    }
    if (ip.is_v4()) {
        // Dotted form split across labels: every octet present as its own label.
        std::map<std::string, int> have;
        for (const auto& l : labels) ++have[l];
        std::map<std::string, int> need;
        for (int i = 0; i < 4; ++i) ++need[std::to_string(ip.bytes()[i])];
        const bool all = std::all_of(need.begin(), need.end(), [&](const auto& kv) {
            const auto it = have.find(kv.first);
            return it != have.end() && it->second >= kv.second;
        });
        if (all) return true;
    }
    return false;
}

DomainRecord prepare_domain(const IpAddress& ip, std::string_view fqdn, const TldRegistry& tlds,
                            const SuffixRules& rules)
{
    auto rec = validate_domain(ip, fqdn, tlds);
    if (!rec.valid()) return rec;
    rec.labels = strip_registrable(rec.fqdn, rules);
    rec.ip_encoded = detect_ip_encoding(rec.ip, rec.labels);
    return rec;
}

LoadedBlacklists load_blacklists(const BlacklistFiles& files, const std::vector<Location>& locations)
{
    LoadedBlacklists out;
    if (!files.codes.empty())
        for (auto& e : read_entries(files.codes)) out.lists.codes.insert(std::move(e));
    if (!files.words.empty())
        for (auto& e : read_entries(files.words)) out.lists.words.insert(std::move(e));
    if (!files.code_locations.empty()) {
        std::multimap<std::string, LocationId> by_name;
        for (const auto& loc : locations) by_name.emplace(text::to_lower(loc.name), loc.id);
        for (const auto& e : read_entries(files.code_locations)) {
            const auto sp = e.find_first_of(" \t");
            if (sp == std::string::npos) {
                out.warnings.push_back("code-location entry without location: '" + e + "'");
                continue;
            }
            const auto code = e.substr(0, sp);
            const std::string name(text::trim(std::string_view(e).substr(sp)));
            const auto [lo, hi] = by_name.equal_range(name);
            if (lo == hi) out.warnings.push_back("no location named '" + name + "' for code '" + code + "'");
            for (auto it = lo; it != hi; ++it) out.lists.code_locations.emplace(code, it->second);
        }
    }
    return out;
}

bool SearchLabel::overlaps_mask(std::size_t begin, std::size_t end) const
{
    return std::any_of(masked.begin(), masked.end(),
                       [&](const auto& m) { return begin < m.second && m.first < end; });
}

std::vector<SearchLabel> apply_word_blacklist(const std::vector<std::string>& labels,
                                              const Blacklists& blacklists)
{
    std::vector<SearchLabel> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& label = labels[i];
        if (blacklists.words.count(label)) continue;
        SearchLabel sl{label, i, {}};
        for (const auto& word : blacklists.words) {
            if (word.empty() || word.size() > label.size()) continue;
            for (auto pos = label.find(word); pos != std::string::npos; pos = label.find(word, pos + 1))
                sl.masked.emplace_back(pos, pos + word.size());
        }
        std::sort(sl.masked.begin(), sl.masked.end());
        out.push_back(std::move(sl));
    }
    return out;
}

}  // namespace hloc
