#pragma once

namespace hloc {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Throws std::invalid_argument unless lat in [-90,90] and lon in [-180,180].
void check_coordinates(const LatLon& p);
bool valid_coordinates(const LatLon& p) noexcept;

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const LatLon& a, const LatLon& b);

}  // namespace hloc

namespace hloc {

inline constexpr double kSpeedOfLightKmPerS = 299792.458;

/// Signal speed in fiber in km per millisecond for inverse refractive index c.
inline constexpr double fiber_km_per_ms(double c, double c0_km_per_s = kSpeedOfLightKmPerS)
{
    return c * c0_km_per_s / 1000.0;
}

}  // namespace hloc
