#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

inline constexpr double kRadiusKm = 6371.0;
inline constexpr double kFiberKmPerMs = (2.0 / 3.0) * 299792.458 / 1000.0;

/// Great-circle distance from the angle between unit vectors (atan2 form),
/// not the haversine formula the library uses.
inline double distance_km(double lat1, double lon1, double lat2, double lon2)
{
    const double r = std::numbers::pi / 180.0;
    const double x1 = std::cos(lat1 * r) * std::cos(lon1 * r), y1 = std::cos(lat1 * r) * std::sin(lon1 * r),
                 z1 = std::sin(lat1 * r);
    const double x2 = std::cos(lat2 * r) * std::cos(lon2 * r), y2 = std::cos(lat2 * r) * std::sin(lon2 * r),
                 z2 = std::sin(lat2 * r);
    const double cx = y1 * z2 - z1 * y2, cy = z1 * x2 - x1 * z2, cz = x1 * y2 - y1 * x2;
    const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    const double dot = x1 * x2 + y1 * y2 + z1 * z2;
    return kRadiusKm * std::atan2(cross, dot);
}

struct Code {
    std::string code;
    unsigned location = 0;
    int source = 0;
};

struct Hit {
    std::string code;
    unsigned location = 0;
    int source = 0;
    std::size_t offset = 0;

    friend auto operator<=>(const Hit&, const Hit&) = default;
};

/// Every code occurring as a substring of `label`, by brute force.
inline std::vector<Hit> substring_scan(const std::string& label, const std::vector<Code>& codes, std::size_t min_len)
{
    std::vector<Hit> out;
    for (const auto& c : codes) {
        if (c.code.size() < min_len) continue;
        for (std::size_t pos = label.find(c.code); pos != std::string::npos; pos = label.find(c.code, pos + 1))
            out.push_back({c.code, c.location, c.source, pos});
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("hloc-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace oracle
