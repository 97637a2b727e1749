#include <doctest.h>

#include <fstream>
#include <random>

#include "hloc/domainprep.hpp"
#include "oracle.hpp"

using namespace hloc;

namespace {

IpAddress ip(const char* s) { return *IpAddress::parse(s); }

const TldRegistry& tlds()
{
    static const TldRegistry r({"net", "com", "au", "de", "ck", "jp", "org"});
    return r;
}

const SuffixRules& rules()
{
    static const SuffixRules r =
        SuffixRules::from_lines({"// comment", "net", "com", "au", "com.au", "*.ck", "!www.ck", "jp", "*.kawasaki.jp",
                                 "!city.kawasaki.jp"});
    return r;
}

// Drops blacklisted labels, then re-scans the rest with every blacklisted
// word overwritten, the way a reader would do it by hand.
std::vector<std::pair<std::string, std::vector<bool>>> naive_mask(const std::vector<std::string>& labels,
                                                                   const std::set<std::string>& words)
{
    std::vector<std::pair<std::string, std::vector<bool>>> out;
    for (const auto& l : labels) {
        if (words.count(l)) continue;
        std::vector<bool> masked(l.size(), false);
        for (const auto& w : words)
            for (std::size_t p = 0; p + w.size() <= l.size(); ++p)
                if (l.compare(p, w.size(), w) == 0)
                    for (std::size_t k = 0; k < w.size(); ++k) masked[p + k] = true;
        out.emplace_back(l, masked);
    }
    return out;
}

}  // namespace

TEST_CASE("validate_domain")
{
    const auto a = ip("1.2.3.4");
    CHECK(validate_domain(a, "router1.example.local", tlds()).rejection == Rejection::BadTld);
    CHECK(validate_domain(a, "host_1.example.net", tlds()).rejection == Rejection::BadChar);
    CHECK(validate_domain(a, "a..example.net", tlds()).rejection == Rejection::EmptyLabel);
    CHECK(validate_domain(a, "", tlds()).rejection == Rejection::EmptyLabel);
    const auto ok = validate_domain(a, "RT230BB131-145-61.Routit.NET.", tlds());
    CHECK(ok.valid());
    CHECK(ok.fqdn == "rt230bb131-145-61.routit.net");
    CHECK(ok.labels.empty());

    // idempotent normalization
    const auto again = validate_domain(a, ok.fqdn, tlds());
    CHECK(again.fqdn == ok.fqdn);
    CHECK(again.valid());
}

TEST_CASE("rejection reasons serialize")
{
    CHECK(to_string(Rejection::BadChar) == "bad_char");
    CHECK(to_string(Rejection::BadTld) == "bad_tld");
    CHECK(to_string(Rejection::EmptyLabel) == "empty_label");
    CHECK(parse_rejection("bad_tld") == Rejection::BadTld);
}

TEST_CASE("strip_registrable with public-suffix rules")
{
    CHECK(strip_registrable("ip-1-2-3-4.mel.xi.com.au", rules()) == std::vector<std::string>{"ip-1-2-3-4", "mel"});
    CHECK(strip_registrable("a.b.example.net", rules()) == std::vector<std::string>{"a", "b"});
    CHECK(strip_registrable("example.net", rules()).empty());
    CHECK(strip_registrable("net", rules()).empty());
    // wildcard: every label under ck is a public suffix
    CHECK(strip_registrable("a.b.c.ck", rules()) == std::vector<std::string>{"a"});
    // exception: www.ck is registrable
    CHECK(strip_registrable("a.b.www.ck", rules()) == std::vector<std::string>{"a", "b"});
    CHECK(strip_registrable("x.y.city.kawasaki.jp", rules()) == std::vector<std::string>{"x", "y"});
    CHECK(strip_registrable("x.y.other.kawasaki.jp", rules()) == std::vector<std::string>{"x"});
    // no rule: last two labels go
    CHECK(strip_registrable("x.y.example.zz", rules()) == std::vector<std::string>{"x", "y"});
}

TEST_CASE("stripped labels never contain dots")
{
    std::mt19937_64 rng(3);
    const std::vector<std::string> parts{"a", "mel", "com", "au", "net", "ck", "www", "jp", "kawasaki", "city"};
    for (int i = 0; i < 2000; ++i) {
        std::string fqdn;
        const auto n = 1 + rng() % 6;
        for (std::size_t k = 0; k < n; ++k) fqdn += (k ? "." : "") + parts[rng() % parts.size()];
        for (const auto& l : strip_registrable(fqdn, rules())) CHECK(l.find('.') == std::string::npos);
    }
}

TEST_CASE("IPv4 encodings")
{
    const auto a = ip("1.2.3.4");
    CHECK(detect_ip_encoding(a, {"1-2-3-4", "lightspeed", "hstntx"}));
    CHECK_FALSE(detect_ip_encoding(a, {"video42"}));
    CHECK(detect_ip_encoding(a, {"4-3-2-1"}));
    CHECK(detect_ip_encoding(a, {"ip1234x"}));
    CHECK(detect_ip_encoding(a, {"host001002003004"}));
    CHECK(detect_ip_encoding(a, {"001-002-003-004-static"}));
    CHECK(detect_ip_encoding(a, {"c0a80102", "01020304"}));
    CHECK(detect_ip_encoding(a, {"04030201"}));
    CHECK(detect_ip_encoding(a, {"4", "3", "2", "1", "in-addr"}));
    CHECK_FALSE(detect_ip_encoding(a, {"4", "3", "2", "core"}));
    // digit-flanked occurrences are part of a longer number
    CHECK_FALSE(detect_ip_encoding(a, {"91-2-3-45"}));
    CHECK_FALSE(detect_ip_encoding(a, {"112345"}));
    // another address
    CHECK_FALSE(detect_ip_encoding(ip("1.2.3.5"), {"1-2-3-4"}));

    const auto b = ip("131.145.61.230");
    CHECK_FALSE(detect_ip_encoding(b, {"rt230bb131-145-61"}));
    CHECK(detect_ip_encoding(b, {"rt230-61-145-131"}));
}

TEST_CASE("IPv6 encodings")
{
    const auto a = ip("2001:db8::ff:fe00:1");
    // 2001:0db8:0000:0000:0000:00ff:fe00:0001
    const std::string nibbles = "20010db8000000000000" "00fffe000001";
    CHECK(nibbles.size() == 32);
    CHECK(detect_ip_encoding(a, {"ip-" + nibbles}));
    CHECK(detect_ip_encoding(a, {std::string(nibbles.rbegin(), nibbles.rend()) + "-ip6"}));
    CHECK(detect_ip_encoding(a, {"2001-db8-0-0-0-ff-fe00-1"}));
    CHECK(detect_ip_encoding(a, {"2001-0db8-0000-0000-0000-00ff-fe00-0001"}));
    CHECK(detect_ip_encoding(a, {"2001-db8--ff-fe00-1"}));
    CHECK_FALSE(detect_ip_encoding(a, {"2001-db8--ff-fe00-2"}));
}

TEST_CASE("IP-encoding detection ignores label order")
{
    std::mt19937_64 rng(17);
    const std::vector<std::vector<std::string>> cases{
        {"1-2-3-4", "mel", "xe-0"}, {"4", "3", "2", "1"}, {"core1", "01020304", "fra"}, {"static", "cr1", "nyc"}};
    for (auto labels : cases) {
        const bool expect = detect_ip_encoding(ip("1.2.3.4"), labels);
        for (int i = 0; i < 50; ++i) {
            std::shuffle(labels.begin(), labels.end(), rng);
            CHECK(detect_ip_encoding(ip("1.2.3.4"), labels) == expect);
        }
    }
}

TEST_CASE("prepare_domain combines the steps")
{
    const auto rec = prepare_domain(ip("1.2.3.4"), "ip-1-2-3-4.mel.xi.com.au", tlds(), rules());
    CHECK(rec.valid());
    CHECK(rec.labels == std::vector<std::string>{"ip-1-2-3-4", "mel"});
    CHECK(rec.ip_encoded);
    const auto bad = prepare_domain(ip("1.2.3.4"), "ip-1-2-3-4.example.local", tlds(), rules());
    CHECK_FALSE(bad.valid());
    CHECK(bad.labels.empty());
}

TEST_CASE("word blacklist drops whole labels and masks embedded words")
{
    Blacklists bl;
    bl.words = {"static", "internet", "linux"};
    const auto a = apply_word_blacklist({"static", "mel"}, bl);
    REQUIRE(a.size() == 1);
    CHECK(a[0].text == "mel");
    CHECK(a[0].index == 1);

    const auto b = apply_word_blacklist({"melstatic"}, bl);
    REQUIRE(b.size() == 1);
    CHECK(b[0].masked == std::vector<std::pair<std::size_t, std::size_t>>{{3, 9}});
    CHECK_FALSE(b[0].overlaps_mask(0, 3));
    CHECK(b[0].overlaps_mask(2, 5));
    CHECK(b[0].overlaps_mask(8, 9));

    CHECK(apply_word_blacklist({}, bl).empty());
}

TEST_CASE("masking agrees with a naive re-scan")
{
    std::mt19937_64 rng(23);
    const std::set<std::string> words{"ab", "bca", "cc", "abc"};
    Blacklists bl;
    bl.words = words;
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> labels;
        for (int k = 0; k < 3; ++k) {
            std::string l;
            const auto n = 1 + rng() % 8;
            for (std::size_t j = 0; j < n; ++j) l.push_back(static_cast<char>('a' + rng() % 3));
            labels.push_back(l);
        }
        const auto got = apply_word_blacklist(labels, bl);
        const auto want = naive_mask(labels, words);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].text == want[k].first);
            for (std::size_t c = 0; c < got[k].text.size(); ++c)
                CHECK(got[k].overlaps_mask(c, c + 1) == static_cast<bool>(want[k].second[c]));
        }
    }
}

TEST_CASE("load_blacklists resolves code-location names")
{
    oracle::TempDir dir("blacklists");
    std::ofstream(dir.path() / "codes.txt") << "# codes\nTEL\ncpe\n\n";
    std::ofstream(dir.path() / "words.txt") << "Internet\n# c\nstatic\n";
    std::ofstream(dir.path() / "cl.txt") << "# code location\nlin dublin\nlin Nowhere\nbroken\n";
    std::vector<Location> locs(3);
    locs[0].id = 0;
    locs[0].name = "Dublin";
    locs[1].id = 1;
    locs[1].name = "dublin";
    locs[2].id = 2;
    locs[2].name = "Milan";
    const auto loaded = load_blacklists({dir.path() / "codes.txt", dir.path() / "words.txt", dir.path() / "cl.txt"}, locs);
    CHECK(loaded.lists.codes == std::set<std::string>{"tel", "cpe"});
    CHECK(loaded.lists.words == std::set<std::string>{"internet", "static"});
    CHECK(loaded.lists.code_locations == std::set<std::pair<std::string, LocationId>>{{"lin", 0}, {"lin", 1}});
    CHECK(loaded.warnings.size() == 2);

    const auto none = load_blacklists({}, locs);
    CHECK(none.lists.codes.empty());
    CHECK(none.warnings.empty());
}

TEST_CASE("TLD registry file")
{
    oracle::TempDir dir("tld");
    std::ofstream(dir.path() / "tlds.txt") << "# Version 2024\nCOM\nNet\n\n";
    const auto r = TldRegistry::load(dir.path() / "tlds.txt");
    CHECK(r.size() == 2);
    CHECK(r.contains("com"));
    CHECK(r.contains("net"));
    CHECK_FALSE(r.contains("local"));
}
