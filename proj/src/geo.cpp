#include "hloc/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hloc {

namespace {

double to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

double sqr(double x) { return x * x; }

}  // namespace

bool valid_coordinates(const LatLon& p) noexcept
{
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

void check_coordinates(const LatLon& p)
{
    if (!valid_coordinates(p)) {
        std::ostringstream msg;
        msg << "coordinates out of range: (" << p.lat << ", " << p.lon << ")";
        throw std::invalid_argument(msg.str());
    }
}

double great_circle_km(const LatLon& a, const LatLon& b)
{
    check_coordinates(a);
    check_coordinates(b);
    const double lat1 = to_rad(a.lat);
    const double lat2 = to_rad(b.lat);
    const double dlat = lat2 - lat1;
    const double dlon = to_rad(b.lon - a.lon);
    double h = sqr(std::sin(dlat / 2)) + std::cos(lat1) * std::cos(lat2) * sqr(std::sin(dlon / 2));
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

}  // namespace hloc
