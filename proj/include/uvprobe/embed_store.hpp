#pragma once
// EMBS v1: a layer-major float32 tensor of per-token hidden states plus a
// JSON sidecar mapping rows to (language, sent_id, token_id).
//
//   offset  size  field
//   0       4     magic "EMBS"
//   4       4     version (u32 LE) = 1
//   8       2     n_layers (u16 LE)
//   10      2     dim (u16 LE)
//   12      8     n_tokens (u64 LE)
//   20      ...   payload: n_layers blocks of n_tokens rows of dim f32 LE
//
// The value of row r in layer L starts at 20 + (L * n_tokens + r) * dim * 4.
// Layer 0 is the embedding layer; layers 1.. are the encoder blocks.

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvprobe/conllu.hpp"
#include "uvprobe/error.hpp"

namespace uvprobe::store {

static_assert(std::endian::native == std::endian::little,
              "EMBS payload is read in place and requires a little-endian host");

inline constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', 'S'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

struct StoreHeader {
    std::uint32_t version = kVersion;
    std::uint16_t n_layers = 0;
    std::uint16_t dim = 0;
    std::uint64_t n_tokens = 0;
    std::uint8_t dtype = 0;  // 0 = f32 LE; implied by version 1, not serialized

    std::uint64_t payload_bytes() const {
        return static_cast<std::uint64_t>(n_layers) * n_tokens * dim * sizeof(float);
    }
    std::uint64_t file_bytes() const { return kHeaderBytes + payload_bytes(); }
};

using TokenKey = conllu::TokenKey;

struct TokenIndex {
    std::vector<TokenKey> records;
};

// Read-only row-major view over a rows x cols float matrix.
struct MatrixView {
    const float* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const float> row(std::size_t r) const { return {data + r * cols, cols}; }
};

inline std::string sidecar_path(const std::filesystem::path& path) {
    return path.string() + ".index.json";
}

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline std::string encode_header(const StoreHeader& h) {
    std::string out(kMagic.begin(), kMagic.end());
    put_le(out, h.version, 4);
    put_le(out, h.n_layers, 2);
    put_le(out, h.dim, 2);
    put_le(out, h.n_tokens, 8);
    return out;
}

// Throws FormatError on bad magic or version. `bytes` must hold >= 20 bytes.
inline StoreHeader decode_header(const unsigned char* bytes) {
    if (std::memcmp(bytes, kMagic.data(), 4) != 0) throw FormatError("bad magic: not an EMBS file");
    StoreHeader h;
    h.version = static_cast<std::uint32_t>(get_le(bytes + 4, 4));
    if (h.version != kVersion)
        throw FormatError("unsupported EMBS version " + std::to_string(h.version) + " (expected 1)");
    h.n_layers = static_cast<std::uint16_t>(get_le(bytes + 8, 2));
    h.dim = static_cast<std::uint16_t>(get_le(bytes + 10, 2));
    h.n_tokens = get_le(bytes + 12, 8);
    if (h.n_layers == 0) throw FormatError("n_layers must be >= 1");
    if (h.dim == 0) throw FormatError("dim must be >= 1");
    return h;
}

inline nlohmann::json index_to_json(const TokenIndex& index) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : index.records) records.push_back({r.language, r.sent_id, r.token_id});
    return {{"format", "EMBS-index"}, {"version", 1}, {"records", std::move(records)}};
}

inline TokenIndex index_from_json(const nlohmann::json& j) {
    TokenIndex index;
    const auto& records = j.at("records");
    index.records.reserve(records.size());
    for (const auto& r : records) {
        if (!r.is_array() || r.size() != 3) throw FormatError("index record must be [language, sent_id, token_id]");
        index.records.push_back({r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<std::uint32_t>()});
    }
    return index;
}

struct KeyHash {
    std::size_t operator()(const TokenKey& k) const {
        std::size_t h = std::hash<std::string>{}(k.language);
        h ^= std::hash<std::string>{}(k.sent_id) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<std::uint32_t>{}(k.token_id) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

class MappedFile {
public:
    explicit MappedFile(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_RDONLY);
        if (fd_ < 0) throw FormatError("cannot open " + path.string());
        struct stat st {};
        if (::fstat(fd_, &st) != 0) {
            ::close(fd_);
            throw FormatError("cannot stat " + path.string());
        }
        size_ = static_cast<std::size_t>(st.st_size);
        if (size_ > 0) {
            void* p = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd_, 0);
            if (p == MAP_FAILED) {
                ::close(fd_);
                throw FormatError("cannot map " + path.string());
            }
            data_ = static_cast<const unsigned char*>(p);
        }
    }
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;
    ~MappedFile() {
        if (data_) ::munmap(const_cast<unsigned char*>(data_), size_);
        if (fd_ >= 0) ::close(fd_);
    }

    const unsigned char* data() const { return data_; }
    std::size_t size() const { return size_; }

private:
    int fd_ = -1;
    const unsigned char* data_ = nullptr;
    std::size_t size_ = 0;
};

}  // namespace detail

// Writes `path` and `<path>.index.json`.
inline void write_store(const StoreHeader& header, std::span<const MatrixView> layers,
                        const TokenIndex& index, const std::filesystem::path& path) {
    if (header.version != kVersion) throw FormatError("only EMBS version 1 can be written");
    if (header.dtype != 0) throw FormatError("only dtype 0 (f32) is supported");
    if (header.n_layers == 0 || header.dim == 0) throw FormatError("n_layers and dim must be >= 1");
    if (layers.size() != header.n_layers)
        throw FormatError("dimension mismatch: header declares " + std::to_string(header.n_layers) +
                          " layers, got " + std::to_string(layers.size()));
    for (std::size_t l = 0; l < layers.size(); ++l)
        if (layers[l].rows != header.n_tokens || layers[l].cols != header.dim)
            throw FormatError("dimension mismatch in layer " + std::to_string(l) + ": " +
                              std::to_string(layers[l].rows) + "x" + std::to_string(layers[l].cols) +
                              ", expected " + std::to_string(header.n_tokens) + "x" +
                              std::to_string(header.dim));
    if (index.records.size() != header.n_tokens)
        throw FormatError("index has " + std::to_string(index.records.size()) + " records, expected " +
                          std::to_string(header.n_tokens));

    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + path.string());
        const auto head = detail::encode_header(header);
        out.write(head.data(), static_cast<std::streamsize>(head.size()));
        for (const auto& m : layers)
            out.write(reinterpret_cast<const char*>(m.data),
                      static_cast<std::streamsize>(m.rows * m.cols * sizeof(float)));
        if (!out) throw FormatError("I/O failure writing " + path.string());
    }
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw FormatError("cannot write " + sidecar_path(path));
    side << detail::index_to_json(index).dump() << '\n';
    if (!side) throw FormatError("I/O failure writing " + sidecar_path(path));
}

// A memory-mapped EMBS file. Immutable once opened; safe for concurrent reads.
class Store {
public:
    static std::shared_ptr<const Store> open(const std::filesystem::path& path) {
        return std::shared_ptr<const Store>(new Store(path));
    }

    const StoreHeader& header() const { return header_; }
    const TokenIndex& index() const { return index_; }
    std::size_t n_layers() const { return header_.n_layers; }
    std::size_t dim() const { return header_.dim; }
    std::size_t n_tokens() const { return header_.n_tokens; }

    MatrixView layer_matrix(std::size_t layer) const {
        if (layer >= header_.n_layers)
            throw FormatError("layer " + std::to_string(layer) + " out of range [0, " +
                              std::to_string(header_.n_layers) + ")");
        const auto* base = reinterpret_cast<const float*>(file_.data() + kHeaderBytes);
        return {base + layer * header_.n_tokens * header_.dim, header_.n_tokens, header_.dim};
    }

    std::span<const float> row(std::size_t layer, std::size_t r) const { return layer_matrix(layer).row(r); }

    const std::uint64_t* find_row(const TokenKey& key) const {
        auto it = rows_by_key_.find(key);
        return it == rows_by_key_.end() ? nullptr : &it->second;
    }

    bool has_language(const std::string& lang) const {
        return std::any_of(index_.records.begin(), index_.records.end(),
                           [&](const TokenKey& k) { return k.language == lang; });
    }

private:
    explicit Store(const std::filesystem::path& path) : file_(path) {
        if (file_.size() < kHeaderBytes)
            throw FormatError("size mismatch: file has " + std::to_string(file_.size()) +
                              " bytes, smaller than the 20-byte header");
        header_ = detail::decode_header(file_.data());
        if (header_.file_bytes() != file_.size())
            throw FormatError("size mismatch: expected " + std::to_string(header_.file_bytes()) +
                              " bytes from header, actual " + std::to_string(file_.size()));
        const auto side = sidecar_path(path);
        std::ifstream in(side);
        if (!in) throw FormatError("missing index sidecar " + side);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
            index_ = detail::index_from_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed index sidecar " + side + ": " + e.what());
        }
        if (index_.records.size() != header_.n_tokens)
            throw FormatError("index has " + std::to_string(index_.records.size()) +
                              " records, header declares " + std::to_string(header_.n_tokens));
        rows_by_key_.reserve(index_.records.size());
        for (std::uint64_t r = 0; r < index_.records.size(); ++r)
            if (!rows_by_key_.emplace(index_.records[r], r).second)
                throw FormatError("duplicate index record (" + index_.records[r].language + ", " +
                                  index_.records[r].sent_id + ", " +
                                  std::to_string(index_.records[r].token_id) + ")");
    }

    detail::MappedFile file_;
    StoreHeader header_;
    TokenIndex index_;
    std::unordered_map<TokenKey, std::uint64_t, detail::KeyHash> rows_by_key_;
};

inline std::shared_ptr<const Store> open_store(const std::filesystem::path& path) { return Store::open(path); }

// Labeled rows of one layer. Vectors are read through `matrix` without
// copying; `owner` keeps the backing storage alive.
struct AlignedDataset {
    std::shared_ptr<const void> owner;
    MatrixView matrix;
    std::vector<std::uint64_t> rows;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> class_names;
    std::size_t layer = 0;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return matrix.cols; }
    std::size_t num_classes() const { return class_names.size(); }
    std::span<const float> vector(std::size_t i) const { return matrix.row(rows[i]); }

    // In-memory dataset: `data` is n x dim row-major, one label per row.
    static AlignedDataset from_dense(std::vector<float> data, std::size_t dim,
                                     std::vector<std::uint32_t> labels, std::vector<std::string> class_names) {
        if (dim == 0 || data.size() != labels.size() * dim)
            throw FormatError("dense dataset shape mismatch");
        auto storage = std::make_shared<std::vector<float>>(std::move(data));
        AlignedDataset d;
        d.matrix = {storage->data(), labels.size(), dim};
        d.owner = storage;
        d.rows.resize(labels.size());
        for (std::size_t i = 0; i < d.rows.size(); ++i) d.rows[i] = i;
        d.labels = std::move(labels);
        d.class_names = std::move(class_names);
        return d;
    }
};

// Aligns labeled tokens with store rows of one layer, in store row order.
inline AlignedDataset join(const std::shared_ptr<const Store>& store, const conllu::LabeledTokens& labels,
                           std::size_t layer) {
    if (layer >= store->n_layers())
        throw JoinError("layer " + std::to_string(layer) + " out of range [0, " +
                        std::to_string(store->n_layers()) + ")");
    std::vector<std::pair<std::uint64_t, std::uint32_t>> picked;
    picked.reserve(labels.size());
    std::vector<const TokenKey*> missing;
    std::size_t n_missing = 0;
    for (const auto& l : labels.labels) {
        if (const auto* r = store->find_row(l.key)) {
            picked.emplace_back(*r, l.class_id);
        } else {
            if (missing.size() < 10) missing.push_back(&l.key);
            ++n_missing;
        }
    }
    if (n_missing) {
        std::string msg = std::to_string(n_missing) + " labeled tokens missing from the store index:";
        for (const auto* k : missing)
            msg += " (" + k->language + ", " + k->sent_id + ", " + std::to_string(k->token_id) + ")";
        throw JoinError(msg);
    }
    std::sort(picked.begin(), picked.end());
    AlignedDataset d;
    d.owner = store;
    d.matrix = store->layer_matrix(layer);
    d.layer = layer;
    d.class_names = labels.class_names;
    d.rows.reserve(picked.size());
    d.labels.reserve(picked.size());
    for (const auto& [row, cls] : picked) {
        d.rows.push_back(row);
        d.labels.push_back(cls);
    }
    return d;
}

inline AlignedDataset join(const std::shared_ptr<const Store>& store, const conllu::Corpus& corpus,
                           const conllu::LabeledTokens& labels, std::size_t layer) {
    for (const auto& l : labels.labels)
        if (l.key.language != corpus.language)
            throw JoinError("label for language '" + l.key.language + "' joined against corpus '" +
                            corpus.language + "'");
    return join(store, labels, layer);
}

}  // namespace uvprobe::store
