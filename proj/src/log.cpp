#include "hloc/log.hpp"

#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>

namespace hloc::log {

namespace {

std::atomic<Level> g_level{Level::Info};
std::mutex g_mu;
std::ostream* g_out = nullptr;

std::string_view name_of(Level l)
{
    switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    }
    return "info";
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void set_stream(std::ostream* out)
{
    std::lock_guard lock(g_mu);
    g_out = out;
}

void event(Level lvl, std::string_view name, nlohmann::json fields)
{
    if (lvl < g_level.load()) return;
    const auto now = std::chrono::system_clock::now();
    nlohmann::json line = {
        {"ts", std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() / 1000.0},
        {"level", name_of(lvl)},
        {"event", name},
    };
    if (fields.is_object())
        for (auto& [k, v] : fields.items()) line[k] = std::move(v);
    const auto text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::lock_guard lock(g_mu);
    (g_out ? *g_out : std::cerr) << text << '\n';
}

}  // namespace hloc::log
