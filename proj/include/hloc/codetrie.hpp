#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hloc/geodata.hpp"

namespace hloc {

struct TrieEntry {
    LocationId location_id = 0;
    CodeSource source = CodeSource::IATA;

    friend auto operator<=>(const TrieEntry&, const TrieEntry&) = default;
};

struct TrieMatch {
    std::string code;
    LocationId location_id = 0;
    CodeSource source = CodeSource::IATA;
    std::size_t label_index = 0;
    std::size_t char_offset = 0;

    friend bool operator==(const TrieMatch&, const TrieMatch&) = default;
};

using Digest = std::array<std::uint8_t, 32>;

/// Prefix tree over location codes. Immutable after construction, so any
/// number of threads may search it concurrently.
class CodeTrie {
public:
    static constexpr std::size_t kDefaultMinCodeLen = 3;

    explicit CodeTrie(std::size_t min_code_len = kDefaultMinCodeLen);

    /// Throws std::logic_error if two locations carry the same (code, source).
    static CodeTrie build(const std::vector<Location>& locations,
                          std::size_t min_code_len = kDefaultMinCodeLen);

    /// Every code occurrence starting at any position of `label`, ordered by
    /// (char_offset, code length, location id, source). `label_index` is
    /// copied into each match.
    std::vector<TrieMatch> search_label(std::string_view label, std::size_t label_index = 0) const;

    /// Payload of an exact code, empty when absent.
    std::span<const TrieEntry> lookup(std::string_view code) const;

    std::size_t min_code_len() const { return min_code_len_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t code_count() const { return code_count_; }

    /// Versioned binary cache keyed by `key` (digest of the locations file).
    void save(const std::filesystem::path& path, const Digest& key) const;
    /// Returns false when the file is missing, malformed, of another version,
    /// or keyed by a different digest.
    static bool load(const std::filesystem::path& path, const Digest& key, CodeTrie& out);

private:
    struct Node {
        std::vector<std::pair<char, std::uint32_t>> children;  // sorted by char
        std::vector<TrieEntry> payload;                          // sorted, unique
    };

    std::uint32_t child(std::uint32_t node, char c) const;
    std::uint32_t child_or_insert(std::uint32_t node, char c);

    std::size_t min_code_len_;
    std::size_t code_count_ = 0;
    std::vector<Node> nodes_;
};

/// SHA-256 of a file's bytes.
Digest file_digest(const std::filesystem::path& path);
Digest bytes_digest(std::string_view bytes);
std::string to_hex(const Digest& d);

}  // namespace hloc
