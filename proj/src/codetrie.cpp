#include "hloc/codetrie.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

namespace hloc {

namespace {

constexpr std::uint32_t kNoNode = 0xffffffffu;
constexpr char kCacheMagic[8] = {'H', 'L', 'O', 'C', 'T', 'R', 'I', 'E'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool get(std::istream& in, T& v)
{
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

CodeTrie::CodeTrie(std::size_t min_code_len) : min_code_len_(std::max<std::size_t>(1, min_code_len))
{
    nodes_.emplace_back();
}

std::uint32_t CodeTrie::child(std::uint32_t node, char c) const
{
    const auto& ch = nodes_[node].children;
    const auto it = std::lower_bound(ch.begin(), ch.end(), c,
                                     [](const auto& e, char key) { return e.first < key; });
    return (it != ch.end() && it->first == c) ? it->second : kNoNode;
}

std::uint32_t CodeTrie::child_or_insert(std::uint32_t node, char c)
{
    auto& ch = nodes_[node].children;
    auto it = std::lower_bound(ch.begin(), ch.end(), c,
                               [](const auto& e, char key) { return e.first < key; });
    if (it != ch.end() && it->first == c) return it->second;
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    ch.insert(it, {c, idx});
    nodes_.emplace_back();  // may invalidate `ch`
    return idx;
}

CodeTrie CodeTrie::build(const std::vector<Location>& locations, std::size_t min_code_len)
{
    CodeTrie trie(min_code_len);
    std::map<LocationCode, LocationId> owner;
    for (const auto& loc : locations) {
        for (const auto& code : loc.codes) {
            const auto [it, fresh] = owner.emplace(code, loc.id);
            if (!fresh && it->second != loc.id) {
                throw std::logic_error("code '" + code.code + "' (" + std::string(to_string(code.source)) +
                                       ") belongs to two locations");
            }
        }
    }
    for (const auto& [code, id] : owner) {
        if (code.code.size() < trie.min_code_len_) continue;
        std::uint32_t node = 0;
        for (char c : code.code) node = trie.child_or_insert(node, c);
        auto& payload = trie.nodes_[node].payload;
        if (payload.empty()) ++trie.code_count_;
        payload.push_back({id, code.source});
    }
    for (auto& n : trie.nodes_) std::sort(n.payload.begin(), n.payload.end());
    return trie;
}

std::vector<TrieMatch> CodeTrie::search_label(std::string_view label, std::size_t label_index) const
{
    std::vector<TrieMatch> out;
    for (std::size_t start = 0; start < label.size(); ++start) {
        std::uint32_t node = 0;
        for (std::size_t i = start; i < label.size(); ++i) {
            node = child(node, label[i]);
            if (node == kNoNode) break;
            const auto len = i - start + 1;
            if (len < min_code_len_) continue;
            for (const auto& e : nodes_[node].payload) {
                out.push_back({std::string(label.substr(start, len)), e.location_id, e.source,
                               label_index, start});
            }
        }
    }
    return out;
}

std::span<const TrieEntry> CodeTrie::lookup(std::string_view code) const
{
    std::uint32_t node = 0;
    for (char c : code) {
        node = child(node, c);
        if (node == kNoNode) return {};
    }
    return nodes_[node].payload;
}

void CodeTrie::save(const std::filesystem::path& path, const Digest& key) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write trie cache: " + path.string());
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, kCacheVersion);
    out.write(reinterpret_cast<const char*>(key.data()), key.size());
    put(out, static_cast<std::uint64_t>(min_code_len_));
    put(out, static_cast<std::uint64_t>(code_count_));
    put(out, static_cast<std::uint64_t>(nodes_.size()));
    for (const auto& n : nodes_) {
        put(out, static_cast<std::uint32_t>(n.children.size()));
        for (const auto& [c, idx] : n.children) {
            put(out, c);
            put(out, idx);
        }
        put(out, static_cast<std::uint32_t>(n.payload.size()));
        for (const auto& e : n.payload) {
            put(out, e.location_id);
            put(out, static_cast<std::uint8_t>(e.source));
        }
    }
    if (!out) throw std::runtime_error("failed writing trie cache: " + path.string());
}

bool CodeTrie::load(const std::filesystem::path& path, const Digest& key, CodeTrie& out)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[sizeof kCacheMagic];
    std::uint32_t version = 0;
    Digest stored{};
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return false;
    if (!get(in, version) || version != kCacheVersion) return false;
    if (!in.read(reinterpret_cast<char*>(stored.data()), stored.size()) || stored != key) return false;

    std::uint64_t min_len = 0, codes = 0, count = 0;
    if (!get(in, min_len) || !get(in, codes) || !get(in, count) || count == 0) return false;
    CodeTrie trie(min_len);
    trie.code_count_ = codes;
    trie.nodes_.assign(count, Node{});
    for (auto& n : trie.nodes_) {
        std::uint32_t nc = 0;
        if (!get(in, nc)) return false;
        n.children.resize(nc);
        for (auto& [c, idx] : n.children) {
            if (!get(in, c) || !get(in, idx) || idx >= count) return false;
        }
        std::uint32_t np = 0;
        if (!get(in, np)) return false;
        n.payload.resize(np);
        for (auto& e : n.payload) {
            std::uint8_t src = 0;
            if (!get(in, e.location_id) || !get(in, src) || src > static_cast<std::uint8_t>(CodeSource::CLLI))
                return false;
            e.source = static_cast<CodeSource>(src);
        }
    }
    out = std::move(trie);
    return true;
}

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 init failed");
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    Digest finish()
    {
        Digest d{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), d.data(), &len);
        return d;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

Digest file_digest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path.string());
    Sha256 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
    return h.finish();
}

Digest bytes_digest(std::string_view bytes)
{
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.finish();
}

std::string to_hex(const Digest& d)
{
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (auto b : d) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xf]);
    }
    return s;
}

}  // namespace hloc
