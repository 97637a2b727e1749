#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hloc/geodata.hpp"
#include "hloc/measure.hpp"
#include "hloc/records.hpp"

namespace hloc {

/// Dallas, Frankfurt and Singapore.
std::vector<Vantage> default_vantages();

struct SyntheticConfig {
    std::uint64_t seed = 1;
    std::size_t cities = 120;
    std::size_t routers = 50;
    std::size_t probes = 200;
    double min_city_separation_km = 300;
    double unresponsive_fraction = 0.1;
    double misnamed_fraction = 0.15;   // routers named after a different city
    double decoy_fraction = 0.3;       // routers carrying an extra foreign code
    double ip_encoded_fraction = 0.3;
    double inactive_probe_fraction = 0.05;
    double probe_near_city_fraction = 0.85;
    double router_jitter_km = 0;
    NoiseModel noise;
};

struct SyntheticCity {
    std::string name;
    LatLon pos;
    std::uint64_t population = 0;
    std::string iata;
    std::string clli;  // six characters
    std::string unlocode;  // "cc" + "ppp"
};

struct SyntheticCorpus {
    std::vector<SyntheticCity> cities;
    std::vector<Target> targets;
    std::map<IpAddress, std::size_t> true_city;  // router -> index into cities
    SimWorld world;
    std::vector<Vantage> vantages;
};

SyntheticCorpus generate_corpus(const SyntheticConfig& cfg);

/// Draws a point at a uniformly random bearing and distance in [0, max_km].
LatLon random_point_near(const LatLon& center, double max_km, std::mt19937_64& rng);
/// Uniform on the sphere, restricted to |lat| <= max_abs_lat.
LatLon random_point_on_sphere(std::mt19937_64& rng, double max_abs_lat = 70);
/// Point at `distance_km` from `from` along `bearing_deg`.
LatLon destination_point(const LatLon& from, double bearing_deg, double distance_km);

struct CorpusPaths {
    std::filesystem::path iata, clli, unlocode, geonames;
    std::filesystem::path domains, probes, vantages, world;
    std::filesystem::path code_blacklist, word_blacklist, code_location_blacklist;
};

/// Writes the corpus as the operator-facing input files under `dir`.
CorpusPaths write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace hloc
