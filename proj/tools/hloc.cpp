// hloc: command-line driver for the geolocation pipeline.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hloc/campaign.hpp"
#include "hloc/log.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kInput = 3, kBackend = 4, kIncomplete = 5, kInternal = 1 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> threshold_pop;
    std::optional<double> x_km;
    std::optional<double> a_ms;
    std::optional<std::size_t> max_concurrency;
    std::optional<std::size_t> max_measurements;
    std::optional<std::string> output_dir;
    bool resume = false;
    bool verbose = false;
};

hloc::CampaignConfig resolve(const Flags& f)
{
    auto cfg = f.config.empty() ? hloc::CampaignConfig{} : hloc::CampaignConfig::load(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.backend) {
        const auto kind = hloc::parse_backend_kind(*f.backend);
        if (!kind) throw hloc::ConfigError("--backend must be sim, file or remote");
        cfg.backend = *kind;
    }
    if (f.threshold_pop) cfg.geo.population_threshold = *f.threshold_pop;
    if (f.x_km) cfg.validation.x_km = *f.x_km;
    if (f.a_ms) cfg.validation.a_ms = *f.a_ms;
    if (f.max_concurrency) cfg.max_concurrency = *f.max_concurrency;
    if (f.max_measurements) cfg.max_measurements = *f.max_measurements;
    if (f.output_dir) cfg.output_dir = *f.output_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Geolocate routers from location hints in their reverse-DNS names"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--config", flags.config, "Campaign configuration (JSON)");
    app.add_option("--seed", flags.seed, "Random seed for simulation");
    app.add_option("--backend", flags.backend, "Measurement backend")->check(CLI::IsMember({"sim", "file", "remote"}));
    app.add_option("--threshold-pop", flags.threshold_pop, "Minimum population of a location");
    app.add_option("--x-km", flags.x_km, "Maximum probe to hint distance (km)");
    app.add_option("--a-ms", flags.a_ms, "Latency buffer (ms)");
    app.add_option("--max-concurrency", flags.max_concurrency, "Domains measured in parallel");
    app.add_option("--max-measurements", flags.max_measurements, "Pin-point measurement budget for this run");
    app.add_option("--output-dir", flags.output_dir, "Directory for stage outputs");
    app.add_flag("--resume", flags.resume, "Continue a parked measurement campaign");
    app.add_flag("-v,--verbose", flags.verbose, "Debug logging");

    auto* codes = app.add_subcommand("codes", "Parse and merge location codes");
    auto* preprocess = app.add_subcommand("preprocess", "Validate domains, strip registrable parts, detect IP encoding");
    auto* search = app.add_subcommand("search", "Find location hints in domain labels");
    auto* measure = app.add_subcommand("measure", "Pre-scan and validate hints with latency measurements");
    auto* evaluate = app.add_subcommand("evaluate", "Classify external geolocation answers");
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus and run every stage");
    auto* stats = app.add_subcommand("stats", "Summarize stage outputs");
    for (auto* sub : {codes, preprocess, search, measure, evaluate, simulate, stats}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (flags.verbose) hloc::log::set_level(hloc::log::Level::Debug);

    try {
        auto cfg = resolve(flags);
        if (codes->parsed()) {
            hloc::run_codes(cfg);
        } else if (preprocess->parsed()) {
            hloc::run_preprocess(cfg);
        } else if (search->parsed()) {
            hloc::run_search(cfg);
        } else if (measure->parsed()) {
            hloc::run_measure(cfg, flags.resume);
        } else if (evaluate->parsed()) {
            hloc::run_evaluate(cfg);
        } else if (simulate->parsed()) {
            hloc::run_simulate(cfg, flags.resume);
        } else if (stats->parsed()) {
            std::cout << hloc::run_stats(cfg).dump(2) << '\n';
        }
        return kOk;
    } catch (const hloc::ConfigError& e) {
        hloc::log::error("config_error", {{"message", e.what()}});
        return kConfig;
    } catch (const hloc::InputError& e) {
        hloc::log::error("input_error", {{"message", e.what()}});
        return kInput;
    } catch (const hloc::BackendError& e) {
        hloc::log::error("backend_error", {{"kind", hloc::to_string(e.kind())}, {"message", e.what()}});
        return kBackend;
    } catch (const hloc::IncompleteError& e) {
        hloc::log::warn("campaign_incomplete", {{"message", e.what()}});
        return kIncomplete;
    } catch (const std::exception& e) {
        hloc::log::error("internal_error", {{"message", e.what()}});
        return kInternal;
    }
}
