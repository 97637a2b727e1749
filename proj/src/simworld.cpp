#include "hloc/simworld.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

namespace hloc {

namespace {

// Portable draws; the std distributions differ between standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n)
{
    if (n == 0) throw std::invalid_argument("uniform_index over empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

bool chance(std::mt19937_64& rng, double p) { return uniform01(rng) < p; }

constexpr double kDeg = std::numbers::pi / 180.0;

std::string random_word(std::mt19937_64& rng, std::size_t syllables)
{
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
        w.push_back(consonants[uniform_index(rng, consonants.size())]);
        w.push_back(vowels[uniform_index(rng, vowels.size())]);
    }
    return w;
}

std::string random_letters(std::mt19937_64& rng, std::size_t n)
{
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + uniform_index(rng, 26)));
    return s;
}

template <typename Gen>
std::string unique(std::set<std::string>& used, std::mt19937_64& rng, Gen&& gen)
{
    for (int attempt = 0; attempt < 10000; ++attempt) {
        auto s = gen(rng);
        if (used.insert(s).second) return s;
    }
    throw std::runtime_error("could not draw a unique synthetic name");
}

IpAddress make_ip(std::size_t i, bool v6)
{
    char buf[64];
    if (v6)
        std::snprintf(buf, sizeof buf, "2001:db8:%zx::%zx", i / 65536, i % 65536 + 1);
    else
        std::snprintf(buf, sizeof buf, "10.%zu.%zu.%zu", (i / 65536) % 256, (i / 256) % 256, i % 256);
    return *IpAddress::parse(buf);
}

std::string ip_label(const IpAddress& ip)
{
    if (!ip.is_v4()) {
        auto s = ip.to_string();
        for (auto& c : s)
            if (c == ':') c = '-';
        return s;
    }
    const auto& b = ip.bytes();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%u-%u-%u-%u", b[0], b[1], b[2], b[3]);
    return buf;
}

std::string upper(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string unlocode_coords(const LatLon& p)
{
    auto dm = [](double v, int deg_digits, char pos, char neg) {
        const char hemi = v < 0 ? neg : pos;
        const double a = std::abs(v);
        int deg = static_cast<int>(a);
        int min = static_cast<int>(std::lround((a - deg) * 60.0));
        if (min == 60) {
            ++deg;
            min = 0;
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "%0*d%02d%c", deg_digits, deg, min, hemi);
        return std::string(buf);
    };
    return dm(p.lat, 2, 'N', 'S') + " " + dm(p.lon, 3, 'E', 'W');
}

}  // namespace

std::vector<Vantage> default_vantages()
{
    return {{"dallas", {32.7767, -96.7970}}, {"frankfurt", {50.1109, 8.6821}}, {"singapore", {1.3521, 103.8198}}};
}

LatLon destination_point(const LatLon& from, double bearing_deg, double distance_km)
{
    const double delta = distance_km / kEarthRadiusKm;
    const double theta = bearing_deg * kDeg;
    const double lat1 = from.lat * kDeg;
    const double lon1 = from.lon * kDeg;
    const double lat2 = std::asin(std::sin(lat1) * std::cos(delta) + std::cos(lat1) * std::sin(delta) * std::cos(theta));
    const double lon2 = lon1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(lat1),
                                          std::cos(delta) - std::sin(lat1) * std::sin(lat2));
    double lon = std::fmod(lon2 / kDeg + 540.0, 360.0) - 180.0;
    return {std::clamp(lat2 / kDeg, -90.0, 90.0), std::clamp(lon, -180.0, 180.0)};
}

LatLon random_point_near(const LatLon& center, double max_km, std::mt19937_64& rng)
{
    // sqrt keeps the density uniform over the disc
    const double d = max_km * std::sqrt(uniform01(rng));
    return destination_point(center, 360.0 * uniform01(rng), d);
}

LatLon random_point_on_sphere(std::mt19937_64& rng, double max_abs_lat)
{
    const double zmax = std::sin(max_abs_lat * kDeg);
    const double z = -zmax + 2 * zmax * uniform01(rng);
    return {std::asin(z) / kDeg, -180.0 + 360.0 * uniform01(rng)};
}

SyntheticCorpus generate_corpus(const SyntheticConfig& cfg)
{
    if (cfg.cities < 2) throw std::invalid_argument("need at least two cities");
    std::mt19937_64 rng(cfg.seed);
    SyntheticCorpus corpus;
    corpus.vantages = default_vantages();
    corpus.world.noise = cfg.noise;

    std::set<std::string> names, iatas, cllis, locodes;
    while (corpus.cities.size() < cfg.cities) {
        const auto pos = random_point_on_sphere(rng, 65);
        bool clear = true;
        for (const auto& c : corpus.cities)
            if (great_circle_km(c.pos, pos) < cfg.min_city_separation_km) {
                clear = false;
                break;
            }
        if (!clear) continue;
        SyntheticCity city;
        city.pos = pos;
        city.name = unique(names, rng, [](auto& r) { return random_word(r, 3); });
        // log-uniform population between 20k and 8M
        city.population = static_cast<std::uint64_t>(std::exp(std::log(2e4) + uniform01(rng) * (std::log(8e6) - std::log(2e4))));
        city.iata = unique(iatas, rng, [](auto& r) { return random_letters(r, 3); });
        city.clli = unique(cllis, rng, [](auto& r) { return random_letters(r, 6); });
        city.unlocode = unique(locodes, rng, [](auto& r) { return random_letters(r, 5); });
        corpus.cities.push_back(std::move(city));
    }

    std::set<std::string> providers;
    for (std::size_t i = 0; i < cfg.routers; ++i) {
        const bool v6 = i % 10 == 9;
        const auto ip = make_ip(i + 1, v6);
        const auto truth = uniform_index(rng, corpus.cities.size());
        auto named = truth;
        if (chance(rng, cfg.misnamed_fraction)) {
            while (named == truth) named = uniform_index(rng, corpus.cities.size());
        }
        const auto& city = corpus.cities[named];
        static constexpr std::string_view kTlds[] = {"net", "com", "net", "de", "com.au", "co.uk", "jp"};
        const auto provider = random_word(rng, 2 + uniform_index(rng, 2)) + "." +
                              std::string(kTlds[uniform_index(rng, std::size(kTlds))]);

        std::vector<std::string> labels;
        if (chance(rng, cfg.ip_encoded_fraction)) labels.push_back((v6 ? "" : "ip-") + ip_label(ip));
        switch (uniform_index(rng, 4)) {
        case 0:
            labels.push_back("ae" + std::to_string(uniform_index(rng, 9)) + "-" + std::to_string(uniform_index(rng, 99)));
            labels.push_back("cr" + std::to_string(1 + uniform_index(rng, 4)));
            labels.push_back(city.iata + std::to_string(1 + uniform_index(rng, 9)));
            break;
        case 1: labels.push_back(city.clli + "0" + std::to_string(1 + uniform_index(rng, 9))); break;
        case 2:
            labels.push_back("xe-" + std::to_string(uniform_index(rng, 9)) + "-" + std::to_string(uniform_index(rng, 9)));
            labels.push_back(city.name);
            break;
        default:
            labels.push_back("static");
            labels.push_back(city.iata);
            break;
        }
        if (chance(rng, cfg.decoy_fraction)) {
            const auto& other = corpus.cities[uniform_index(rng, corpus.cities.size())];
            labels.insert(labels.begin(), other.iata + "-link");
        }
        std::string fqdn;
        for (const auto& l : labels) fqdn += l + ".";
        fqdn += provider;

        corpus.targets.push_back({ip, fqdn});
        corpus.true_city[ip] = truth;
        SimRouter router;
        router.pos = cfg.router_jitter_km > 0 ? random_point_near(corpus.cities[truth].pos, cfg.router_jitter_km, rng)
                                              : corpus.cities[truth].pos;
        router.responsive = !chance(rng, cfg.unresponsive_fraction);
        corpus.world.routers[ip] = router;
    }

    for (std::size_t i = 0; i < cfg.probes; ++i) {
        Probe p;
        char id[16];
        std::snprintf(id, sizeof id, "%zu", 1000 + i);
        p.id = id;
        if (chance(rng, cfg.probe_near_city_fraction)) {
            const auto& city = corpus.cities[uniform_index(rng, corpus.cities.size())];
            p.pos = random_point_near(city.pos, 60, rng);
        } else {
            p.pos = random_point_on_sphere(rng, 70);
        }
        p.active = !chance(rng, cfg.inactive_probe_fraction);
        corpus.world.probes.push_back(std::move(p));
    }
    return corpus;
}

CorpusPaths write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "codes");
    fs::create_directories(dir / "blacklists");
    CorpusPaths p;
    p.iata = dir / "codes" / "iata.csv";
    p.clli = dir / "codes" / "clli.csv";
    p.unlocode = dir / "codes" / "unlocode.csv";
    p.geonames = dir / "codes" / "geonames.tsv";
    p.domains = dir / "domains.csv";
    p.probes = dir / "probes.csv";
    p.vantages = dir / "vantages.csv";
    p.world = dir / "world.jsonl";
    p.code_blacklist = dir / "blacklists" / "codes.txt";
    p.word_blacklist = dir / "blacklists" / "words.txt";
    p.code_location_blacklist = dir / "blacklists" / "code_locations.txt";

    auto open = [](const fs::path& path) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        return out;
    };

    // Airports sit a few km off the city centre and carry no population; the
    // merge folds them into the city.
    std::mt19937_64 rng(0x5eed);
    {
        auto out = open(p.iata);
        out << "code,name,lat,lon\n";
        for (const auto& c : corpus.cities) {
            const auto a = random_point_near(c.pos, 25, rng);
            out << upper(c.iata) << ",\"" << c.name << " Intl\"," << format_double(a.lat) << ','
                << format_double(a.lon) << '\n';
        }
    }
    {
        auto out = open(p.clli);
        out << "code,lat,lon\n";
        for (const auto& c : corpus.cities) {
            const auto a = random_point_near(c.pos, 10, rng);
            out << upper(c.clli) << "MOCG0," << format_double(a.lat) << ',' << format_double(a.lon) << '\n';
        }
    }
    {
        auto out = open(p.unlocode);
        out << "country,place,name,coordinates\n";
        for (const auto& c : corpus.cities)
            out << upper(c.unlocode.substr(0, 2)) << ',' << upper(c.unlocode.substr(2)) << ',' << c.name << ','
                << unlocode_coords(c.pos) << '\n';
    }
    {
        auto out = open(p.geonames);
        out << "geonameid\tname\talternatenames\tlatitude\tlongitude\tpopulation\n";
        std::size_t id = 5000000;
        for (const auto& c : corpus.cities) {
            std::string display = c.name;
            display[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(display[0])));
            out << id++ << '\t' << display << '\t' << c.name << "city\t" << format_double(c.pos.lat) << '\t'
                << format_double(c.pos.lon) << '\t' << c.population << '\n';
        }
    }
    {
        auto out = open(p.domains);
        for (const auto& t : corpus.targets) out << t.ip.to_string() << ',' << t.fqdn << '\n';
    }
    {
        auto out = open(p.probes);
        write_probes(out, corpus.world.probes);
    }
    {
        auto out = open(p.vantages);
        write_vantages(out, corpus.vantages);
    }
    {
        auto out = open(p.world);
        write_sim_routers(out, corpus.world);
    }
    {
        auto out = open(p.code_blacklist);
        out << "# codes never used as hints\ncpe\ntel\n";
    }
    {
        auto out = open(p.word_blacklist);
        out << "# words never searched\nstatic\nlink\n";
    }
    {
        auto out = open(p.code_location_blacklist);
        out << "# code location-name\n";
    }
    return p;
}

}  // namespace hloc
