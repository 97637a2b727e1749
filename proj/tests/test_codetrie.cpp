#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>

#include "hloc/codetrie.hpp"
#include "oracle.hpp"

using namespace hloc;

namespace {

Location loc(LocationId id, std::initializer_list<LocationCode> codes)
{
    Location l;
    l.id = id;
    l.name = "loc" + std::to_string(id);
    l.codes = codes;
    return l;
}

std::vector<oracle::Hit> as_hits(const std::vector<TrieMatch>& ms)
{
    std::vector<oracle::Hit> out;
    for (const auto& m : ms) out.push_back({m.code, m.location_id, static_cast<int>(m.source), m.char_offset});
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<oracle::Code> as_codes(const std::vector<Location>& locs)
{
    std::vector<oracle::Code> out;
    for (const auto& l : locs)
        for (const auto& c : l.codes) out.push_back({c.code, l.id, static_cast<int>(c.source)});
    return out;
}

std::vector<Location> munich_locations()
{
    return {loc(0, {{"mun", CodeSource::IATA},
                    {"munic", CodeSource::GEONAMES},
                    {"munich", CodeSource::GEONAMES},
                    {"munici", CodeSource::GEONAMES},
                    {"munc", CodeSource::ICAO},
                    {"munchh", CodeSource::GEONAMES},
                    {"munchen", CodeSource::GEONAMES}}),
            loc(1, {{"uni", CodeSource::IATA}}),
            loc(2, {{"nic", CodeSource::IATA}})};
}

}  // namespace

TEST_CASE("munich matches every stored substring")
{
    const auto locs = munich_locations();
    const auto trie = CodeTrie::build(locs);
    const auto matches = trie.search_label("munich", 2);
    CHECK(as_hits(matches) == oracle::substring_scan("munich", as_codes(locs), 3));

    std::set<std::string> codes;
    for (const auto& m : matches) {
        codes.insert(m.code);
        CHECK(m.label_index == 2);
        CHECK(std::string_view("munich").substr(m.char_offset, m.code.size()) == m.code);
    }
    CHECK(codes == std::set<std::string>{"mun", "munic", "munich", "uni", "nic"});
}

TEST_CASE("matches are ordered by offset, then length")
{
    const auto trie = CodeTrie::build(munich_locations());
    const auto ms = trie.search_label("munichmunchen");
    for (std::size_t i = 1; i < ms.size(); ++i) {
        const auto a = std::make_tuple(ms[i - 1].char_offset, ms[i - 1].code.size(), ms[i - 1].location_id);
        const auto b = std::make_tuple(ms[i].char_offset, ms[i].code.size(), ms[i].location_id);
        CHECK(a <= b);
    }
    CHECK(ms.front().code == "mun");
    CHECK(ms.back().code == "munchen");
}

TEST_CASE("degenerate inputs")
{
    const CodeTrie empty = CodeTrie::build({});
    CHECK(empty.node_count() == 1);
    CHECK(empty.search_label("anything").empty());

    const auto trie = CodeTrie::build(munich_locations());
    CHECK(trie.search_label("").empty());
    CHECK(trie.search_label("zzzz-0000-qqqq").empty());
}

TEST_CASE("codes shorter than the minimum are not stored")
{
    const auto trie = CodeTrie::build({loc(0, {{"ab", CodeSource::IATA}, {"abc", CodeSource::IATA}})});
    CHECK(trie.lookup("ab").empty());
    CHECK(trie.lookup("abc").size() == 1);
    CHECK(trie.code_count() == 1);
    CHECK(trie.search_label("xabx").empty());
}

TEST_CASE("one code can name several locations of different sources")
{
    const auto trie =
        CodeTrie::build({loc(3, {{"lin", CodeSource::IATA}}), loc(7, {{"lin", CodeSource::GEONAMES}})});
    const auto entries = trie.lookup("lin");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].location_id == 3);
    CHECK(entries[1].location_id == 7);
}

TEST_CASE("duplicate (code, source) across locations is rejected")
{
    CHECK_THROWS_AS(CodeTrie::build({loc(0, {{"mel", CodeSource::IATA}}), loc(1, {{"mel", CodeSource::IATA}})}),
                    std::logic_error);
}

TEST_CASE("random corpora agree with the substring oracle")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> letter(0, 3), len(1, 6), nlocs(1, 60);
        auto word = [&](int n) {
            std::string s;
            for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + letter(rng)));
            return s;
        };
        std::vector<Location> locs;
        std::set<std::pair<std::string, int>> used;
        const int n = nlocs(rng);
        for (int i = 0; i < n; ++i) {
            Location l = loc(static_cast<LocationId>(i), {});
            for (int k = 0; k < 3; ++k) {
                const auto code = word(len(rng));
                const int src = static_cast<int>(rng() % 6);
                if (used.insert({code, src}).second) l.codes.insert({code, kAllSources[src]});
            }
            locs.push_back(l);
        }
        const auto trie = CodeTrie::build(locs);
        const auto codes = as_codes(locs);
        for (int i = 0; i < 20; ++i) {
            const auto label = word(len(rng) * 3);
            CHECK(as_hits(trie.search_label(label)) == oracle::substring_scan(label, codes, 3));
        }
    }
}

TEST_CASE("binary cache round trip")
{
    oracle::TempDir dir("trie");
    const auto locs = munich_locations();
    const auto trie = CodeTrie::build(locs);
    const auto locations_file = dir.path() / "locations.jsonl";
    std::ofstream(locations_file) << "placeholder\n";
    const auto key = file_digest(locations_file);
    const auto cache = dir.path() / "trie.bin";
    trie.save(cache, key);

    CodeTrie loaded;
    REQUIRE(CodeTrie::load(cache, key, loaded));
    CHECK(loaded.node_count() == trie.node_count());
    CHECK(loaded.code_count() == trie.code_count());
    CHECK(loaded.search_label("munichen") == trie.search_label("munichen"));

    Digest other = key;
    other[0] ^= 1;
    CodeTrie rejected;
    CHECK_FALSE(CodeTrie::load(cache, other, rejected));
    CHECK_FALSE(CodeTrie::load(dir.path() / "absent.bin", key, rejected));

    // truncated file
    {
        std::ifstream in(cache, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream(cache, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
    }
    CHECK_FALSE(CodeTrie::load(cache, key, rejected));
}

TEST_CASE("file_digest is SHA-256")
{
    oracle::TempDir dir("digest");
    std::ofstream(dir.path() / "abc") << "abc";
    CHECK(to_hex(file_digest(dir.path() / "abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(bytes_digest("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("concurrent readers see identical results")
{
    const auto trie = CodeTrie::build(munich_locations());
    const auto expected = trie.search_label("munichmunchenmunic");
    std::vector<std::jthread> pool;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&] {
            for (int i = 0; i < 2000; ++i)
                if (trie.search_label("munichmunchenmunic") != expected) ++mismatches;
        });
    pool.clear();
    CHECK(mismatches == 0);
}
