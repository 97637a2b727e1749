#pragma once

// One JSON object per line on stderr.

#include <string_view>

#include <json.hpp>

namespace hloc::log {

enum class Level { Debug, Info, Warn, Error };

void set_level(Level level);
Level level();
/// Optional destination; nullptr restores stderr.
void set_stream(std::ostream* out);

void event(Level level, std::string_view name, nlohmann::json fields = nlohmann::json::object());

inline void debug(std::string_view name, nlohmann::json fields = nlohmann::json::object())
{
    event(Level::Debug, name, std::move(fields));
}
inline void info(std::string_view name, nlohmann::json fields = nlohmann::json::object())
{
    event(Level::Info, name, std::move(fields));
}
inline void warn(std::string_view name, nlohmann::json fields = nlohmann::json::object())
{
    event(Level::Warn, name, std::move(fields));
}
inline void error(std::string_view name, nlohmann::json fields = nlohmann::json::object())
{
    event(Level::Error, name, std::move(fields));
}

}  // namespace hloc::log
