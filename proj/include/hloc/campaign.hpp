#pragma once

// Pipeline stages shared by the CLI and the end-to-end tests. Every stage
// reads the previous stage's files from the output directory and writes its
// own, so each can be re-run on its own.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloc/domainprep.hpp"
#include "hloc/geodata.hpp"
#include "hloc/hintsearch.hpp"
#include "hloc/remote_backend.hpp"
#include "hloc/simworld.hpp"
#include "hloc/verdict.hpp"

namespace hloc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing or malformed stage input.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stage ran but left domains parked; re-run with resume.
class IncompleteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Sim, File, Remote };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct AnswerSource {
    std::string name;
    std::filesystem::path path;
};

struct CampaignConfig {
    std::filesystem::path output_dir = "hloc-out";
    std::uint64_t seed = 1;

    std::vector<CodeFile> code_files;
    GeoConfig geo;

    std::filesystem::path domains;
    std::filesystem::path tlds;
    std::filesystem::path public_suffix;
    BlacklistFiles blacklists;  // empty paths mean empty lists
    HintOrder hint_order = HintOrder::Ranked;

    std::filesystem::path probes;
    std::filesystem::path vantages;  // empty: Dallas, Frankfurt, Singapore
    bool prescan = true;

    BackendKind backend = BackendKind::Sim;
    std::filesystem::path sim_world;         // routers file for the sim backend
    std::filesystem::path recorded_results;  // file backend input
    RemoteConfig remote;
    std::string api_key_env = "HLOC_API_KEY";

    ValidationConfig validation;
    std::size_t max_concurrency = 4;
    std::optional<std::size_t> max_measurements;  // pin-point budget for this invocation

    std::vector<AnswerSource> answers;
    double same_radius_km = 100.0;

    SyntheticConfig synthetic;

    /// Relative paths resolve against `base_dir`. Throws ConfigError on
    /// unknown keys or ill-typed values.
    static CampaignConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static CampaignConfig load(const std::filesystem::path& path);

    /// Numeric invariants only; file checks happen in the stage that reads them.
    void validate() const;
};

/// Names of the files a campaign writes under its output directory.
struct CampaignFiles {
    std::filesystem::path dir;

    std::filesystem::path locations() const { return dir / "locations.jsonl"; }
    std::filesystem::path trie_cache() const { return dir / "trie.bin"; }
    std::filesystem::path domains() const { return dir / "domains.jsonl"; }
    std::filesystem::path hints() const { return dir / "hints.jsonl"; }
    std::filesystem::path search_stats() const { return dir / "search_stats.json"; }
    std::filesystem::path state() const { return dir / "campaign_state.jsonl"; }
    std::filesystem::path verdicts() const { return dir / "verdicts.jsonl"; }
    std::filesystem::path sensitivity() const { return dir / "sensitivity.json"; }
    std::filesystem::path evaluation() const { return dir / "evaluation.jsonl"; }
    std::filesystem::path evaluation_summary() const { return dir / "evaluation_summary.csv"; }
    std::filesystem::path evaluation_report() const { return dir / "evaluation_report.json"; }
    std::filesystem::path stats() const { return dir / "stats.json"; }
    std::filesystem::path corpus() const { return dir / "corpus"; }
};

inline constexpr int kCampaignStateVersion = 1;

struct CodesSummary {
    std::size_t raw_codes = 0;
    std::size_t merged_locations = 0;
    std::size_t locations = 0;  // after the population filter
    std::vector<std::string> warnings;
};

struct PreprocessSummary {
    std::size_t domains = 0;
    std::size_t invalid = 0;
    std::size_t ip_encoded = 0;
};

struct SearchSummary {
    std::size_t domains = 0;
    std::size_t hints = 0;
    std::size_t occurrences = 0;
    bool trie_from_cache = false;
};

struct MeasureSummary {
    std::size_t domains = 0;
    std::size_t completed = 0;
    std::size_t parked = 0;
    std::size_t resumed = 0;  // taken from an earlier run's state
    std::size_t pinpoint_measurements = 0;
};

struct EvaluateSummary {
    std::size_t records = 0;
    std::size_t unmatched = 0;  // answers for IPs without a verdict
};

CodesSummary run_codes(const CampaignConfig& cfg);
PreprocessSummary run_preprocess(const CampaignConfig& cfg);
SearchSummary run_search(const CampaignConfig& cfg);
/// Throws IncompleteError when the budget or backend quota left domains
/// parked; their state is kept and `resume` continues them.
MeasureSummary run_measure(const CampaignConfig& cfg, bool resume);
EvaluateSummary run_evaluate(const CampaignConfig& cfg);
/// Aggregate counts over whatever stage outputs exist.
nlohmann::json run_stats(const CampaignConfig& cfg);

/// Writes a synthetic corpus under <output>/corpus, rewrites `cfg` to read it,
/// and runs every stage.
MeasureSummary run_simulate(CampaignConfig& cfg, bool resume);

/// Points `cfg` at the corpus files and the synthetic answer sources.
void use_corpus(CampaignConfig& cfg, const CorpusPaths& paths);

}  // namespace hloc
