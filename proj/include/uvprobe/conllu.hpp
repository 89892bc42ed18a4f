#pragma once
// CoNLL-U ingestion and per-task label extraction.
//
// Only syntactic words (integer ids) become tokens. Multiword ranges
// (`1-2`) and empty nodes (`1.1`) are counted in Corpus::skipped_lines and
// otherwise ignored. HEAD/DEPREL/DEPS are kept verbatim so a corpus can be
// written back out unchanged, but nothing here interprets them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "uvprobe/error.hpp"

namespace uvprobe::conllu {

// ---------------------------------------------------------------------------
// UPOS
// ---------------------------------------------------------------------------

enum class Upos : std::uint8_t {
    ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
    PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X
};

inline constexpr std::array<std::string_view, 17> kUposNames = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

inline std::string_view to_string(Upos u) { return kUposNames[static_cast<std::size_t>(u)]; }

inline std::optional<Upos> parse_upos(std::string_view s) {
    for (std::size_t i = 0; i < kUposNames.size(); ++i)
        if (kUposNames[i] == s) return static_cast<Upos>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Language registry
// ---------------------------------------------------------------------------

struct LanguageInfo {
    std::string code;
    std::string name;
    std::string case_system;
    std::string gender_system;  // "-" for languages without grammatical gender
};

class LanguageRegistry {
public:
    // Built-in languages.
    static LanguageRegistry defaults() {
        LanguageRegistry r;
        r.add({"ar", "Arabic", "Rich (3)", "M/F"});
        r.add({"en", "English", "Pronominal", "Pronominal"});
        r.add({"fr", "French", "Pronominal", "M/F"});
        r.add({"de", "German", "Rich (4)", "M/F/N"});
        r.add({"hi", "Hindi", "Postpositional", "M/F"});
        r.add({"ja", "Japanese", "Particles", "-"});
        r.add({"ru", "Russian", "Rich (6)", "M/F/N"});
        r.add({"tr", "Turkish", "Rich (6+)", "-"});
        return r;
    }

    void add(LanguageInfo info) {
        auto it = std::find_if(langs_.begin(), langs_.end(),
                               [&](const LanguageInfo& l) { return l.code == info.code; });
        if (it != langs_.end())
            *it = std::move(info);
        else
            langs_.push_back(std::move(info));
    }

    const LanguageInfo* find(std::string_view code) const {
        for (const auto& l : langs_)
            if (l.code == code) return &l;
        return nullptr;
    }

    bool contains(std::string_view code) const { return find(code) != nullptr; }
    const std::vector<LanguageInfo>& languages() const { return langs_; }

private:
    std::vector<LanguageInfo> langs_;
};

// ---------------------------------------------------------------------------
// Corpus model
// ---------------------------------------------------------------------------

using Feats = std::vector<std::pair<std::string, std::string>>;

struct Token {
    std::uint32_t id = 0;
    std::string form;
    std::string lemma;
    Upos upos = Upos::X;
    std::string xpos;
    Feats feats;
    std::string head;
    std::string deprel;
    std::string deps;
    std::string misc;

    const std::string* feat(std::string_view key) const {
        for (const auto& [k, v] : feats)
            if (k == key) return &v;
        return nullptr;
    }
};

struct Sentence {
    std::string sent_id;
    std::string text;
    std::vector<Token> tokens;
};

struct Corpus {
    std::string language;
    std::vector<Sentence> sentences;
    std::size_t token_count = 0;
    std::size_t skipped_lines = 0;  // multiword ranges and empty nodes
};

// "A=B|C=D" <-> Feats. A piece without '=' belongs to the previous value,
// which keeps odd input such as "Case=Nom|Acc" byte-identical on output.
inline Feats parse_feats(std::string_view s) {
    Feats out;
    if (s.empty() || s == "_") return out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t bar = s.find('|', start);
        if (bar == std::string_view::npos) bar = s.size();
        std::string_view piece = s.substr(start, bar - start);
        const auto eq = piece.find('=');
        if (eq == std::string_view::npos && !out.empty()) {
            out.back().second += '|';
            out.back().second += piece;
        } else if (eq == std::string_view::npos) {
            out.emplace_back(std::string(piece), std::string());
        } else {
            out.emplace_back(std::string(piece.substr(0, eq)), std::string(piece.substr(eq + 1)));
        }
        start = bar + 1;
    }
    return out;
}

inline std::string serialize_feats(const Feats& feats) {
    if (feats.empty()) return "_";
    std::string out;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (i) out += '|';
        out += feats[i].first;
        // a leading piece without '=' parses to (piece, "")
        if (!feats[i].second.empty()) {
            out += '=';
            out += feats[i].second;
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

// Parses a whole document. The language code must be known to `registry`.
inline Corpus parse_conllu(std::string_view document, std::string_view language,
                           const LanguageRegistry& registry = LanguageRegistry::defaults()) {
    if (!registry.contains(language))
        throw ParseError(0, "unknown language code '" + std::string(language) + "'");

    Corpus corpus;
    corpus.language = std::string(language);
    std::unordered_set<std::string> seen_ids;

    Sentence current;
    bool in_sentence = false;
    std::size_t sentence_start_line = 0;

    auto finish = [&](std::size_t line_no) {
        if (!in_sentence) return;
        if (current.tokens.empty())
            throw ParseError(sentence_start_line, "sentence without syntactic words");
        if (current.sent_id.empty()) current.sent_id = std::to_string(corpus.sentences.size() + 1);
        if (!seen_ids.insert(current.sent_id).second)
            throw ParseError(line_no ? line_no : sentence_start_line,
                             "duplicate sent_id '" + current.sent_id + "'");
        corpus.token_count += current.tokens.size();
        corpus.sentences.push_back(std::move(current));
        current = Sentence{};
        in_sentence = false;
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < document.size()) {
        auto nl = document.find('\n', pos);
        if (nl == std::string_view::npos) nl = document.size();
        std::string_view line = document.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (detail::trim(line).empty()) {
            finish(line_no - 1);
            continue;
        }
        if (!in_sentence) {
            in_sentence = true;
            sentence_start_line = line_no;
        }
        if (line.front() == '#') {
            auto body = detail::trim(line.substr(1));
            auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            auto key = detail::trim(body.substr(0, eq));
            auto value = detail::trim(body.substr(eq + 1));
            if (key == "sent_id")
                current.sent_id = std::string(value);
            else if (key == "text")
                current.text = std::string(value);
            continue;
        }

        auto cols = detail::split_tabs(line);
        if (cols.size() != 10)
            throw ParseError(line_no, "expected 10 tab-separated columns, found " +
                                          std::to_string(cols.size()));
        const std::string_view id = cols[0];
        if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
            ++corpus.skipped_lines;
            continue;
        }
        if (!detail::all_digits(id) || id.size() > 9)
            throw ParseError(line_no, "invalid token id '" + std::string(id) + "'");
        Token tok;
        tok.id = static_cast<std::uint32_t>(std::stoul(std::string(id)));
        if (tok.id == 0) throw ParseError(line_no, "token id must be >= 1");
        if (!current.tokens.empty() && tok.id <= current.tokens.back().id)
            throw ParseError(line_no, "token ids must be strictly increasing");
        auto upos = parse_upos(cols[3]);
        if (!upos) throw ParseError(line_no, "unknown UPOS tag '" + std::string(cols[3]) + "'");
        tok.form = std::string(cols[1]);
        tok.lemma = std::string(cols[2]);
        tok.upos = *upos;
        tok.xpos = std::string(cols[4]);
        tok.feats = parse_feats(cols[5]);
        tok.head = std::string(cols[6]);
        tok.deprel = std::string(cols[7]);
        tok.deps = std::string(cols[8]);
        tok.misc = std::string(cols[9]);
        current.tokens.push_back(std::move(tok));
    }
    finish(line_no);
    return corpus;
}

// Writes syntactic words back out. Multiword ranges are not reproduced.
inline std::string serialize_conllu(const Corpus& corpus) {
    std::string out;
    for (const auto& s : corpus.sentences) {
        out += "# sent_id = " + s.sent_id + "\n";
        if (!s.text.empty()) out += "# text = " + s.text + "\n";
        for (const auto& t : s.tokens) {
            out += std::to_string(t.id);
            for (std::string_view col : {std::string_view(t.form), std::string_view(t.lemma),
                                         to_string(t.upos), std::string_view(t.xpos)}) {
                out += '\t';
                out += col;
            }
            out += '\t';
            out += serialize_feats(t.feats);
            for (std::string_view col : {std::string_view(t.head), std::string_view(t.deprel),
                                         std::string_view(t.deps), std::string_view(t.misc)}) {
                out += '\t';
                out += col;
            }
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Task labels
// ---------------------------------------------------------------------------

enum class Task : std::uint8_t { LangID, UPOS, Case, Gender };

inline constexpr std::array<Task, 4> kAllTasks = {Task::LangID, Task::UPOS, Task::Case, Task::Gender};

inline std::string_view to_string(Task t) {
    switch (t) {
        case Task::LangID: return "LangID";
        case Task::UPOS: return "UPOS";
        case Task::Case: return "Case";
        case Task::Gender: return "Gender";
    }
    return "?";
}

inline std::optional<Task> parse_task(std::string_view s) {
    for (Task t : kAllTasks)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

enum class MissingFeaturePolicy : std::uint8_t { NoneClass, DropMissing };

inline std::string_view to_string(MissingFeaturePolicy p) {
    return p == MissingFeaturePolicy::NoneClass ? "NoneClass" : "DropMissing";
}

inline std::optional<MissingFeaturePolicy> parse_policy(std::string_view s) {
    if (s == "NoneClass") return MissingFeaturePolicy::NoneClass;
    if (s == "DropMissing") return MissingFeaturePolicy::DropMissing;
    return std::nullopt;
}

inline constexpr std::string_view kNoneClass = "None";

struct TokenKey {
    std::string language;
    std::string sent_id;
    std::uint32_t token_id = 0;

    friend bool operator==(const TokenKey&, const TokenKey&) = default;
    friend auto operator<=>(const TokenKey&, const TokenKey&) = default;
};

struct LabeledToken {
    TokenKey key;
    std::uint32_t class_id = 0;
};

struct LabeledTokens {
    Task task = Task::LangID;
    MissingFeaturePolicy policy = MissingFeaturePolicy::NoneClass;
    std::vector<LabeledToken> labels;
    std::vector<std::string> class_names;  // sorted
    double coverage = 0.0;

    const std::string& class_name(const LabeledToken& t) const { return class_names.at(t.class_id); }
    std::size_t size() const { return labels.size(); }
};

namespace detail {

// Sorts the vocabulary and assigns class ids.
inline LabeledTokens index_labels(Task task, MissingFeaturePolicy policy,
                                  std::vector<std::pair<TokenKey, std::string>> raw,
                                  std::size_t universe) {
    if (raw.empty())
        throw EmptyDatasetError(std::string("no tokens retained for task ") +
                                std::string(to_string(task)));
    std::set<std::string> vocab;
    for (const auto& r : raw) vocab.insert(r.second);
    LabeledTokens out;
    out.task = task;
    out.policy = policy;
    out.class_names.assign(vocab.begin(), vocab.end());
    out.labels.reserve(raw.size());
    for (auto& [key, name] : raw) {
        auto it = std::lower_bound(out.class_names.begin(), out.class_names.end(), name);
        out.labels.push_back({std::move(key), static_cast<std::uint32_t>(it - out.class_names.begin())});
    }
    out.coverage = universe ? static_cast<double>(out.labels.size()) / static_cast<double>(universe) : 0.0;
    return out;
}

}  // namespace detail

inline LabeledTokens extract_task_labels(const Corpus& corpus, Task task,
                                         MissingFeaturePolicy policy = MissingFeaturePolicy::NoneClass) {
    std::vector<std::pair<TokenKey, std::string>> raw;
    raw.reserve(corpus.token_count);
    for (const auto& s : corpus.sentences) {
        for (const auto& t : s.tokens) {
            TokenKey key{corpus.language, s.sent_id, t.id};
            switch (task) {
                case Task::LangID:
                    raw.emplace_back(std::move(key), corpus.language);
                    break;
                case Task::UPOS:
                    raw.emplace_back(std::move(key), std::string(to_string(t.upos)));
                    break;
                case Task::Case:
                case Task::Gender: {
                    const char* name = task == Task::Case ? "Case" : "Gender";
                    const std::string* v = t.feat(name);
                    if (v && v->find('|') != std::string::npos)
                        throw ParseError(0, "sentence " + s.sent_id + " token " + std::to_string(t.id) +
                                                ": malformed " + name + " value '" + *v + "'");
                    if (v && !v->empty()) {
                        raw.emplace_back(std::move(key), v->substr(0, v->find(',')));
                    } else if (policy == MissingFeaturePolicy::NoneClass) {
                        raw.emplace_back(std::move(key), std::string(kNoneClass));
                    }
                    break;
                }
            }
        }
    }
    return detail::index_labels(task, policy, std::move(raw), corpus.token_count);
}

// Merges label sets from several corpora under one sorted vocabulary.
inline LabeledTokens pool_labels(std::span<const LabeledTokens> parts) {
    if (parts.empty()) throw EmptyDatasetError("nothing to pool");
    std::vector<std::pair<TokenKey, std::string>> raw;
    double universe = 0.0;
    for (const auto& p : parts) {
        for (const auto& l : p.labels) raw.emplace_back(l.key, p.class_name(l));
        if (p.coverage > 0) universe += static_cast<double>(p.labels.size()) / p.coverage;
    }
    auto out = detail::index_labels(parts.front().task, parts.front().policy, std::move(raw), 0);
    out.coverage = universe > 0 ? static_cast<double>(out.labels.size()) / universe : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

// Plugin entropy in nats of a vector of class counts. Terms are summed in
// ascending order so the value is invariant to class order bit-for-bit.
inline double plugin_entropy_from_counts(std::span<const std::size_t> counts) {
    std::vector<std::size_t> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t total = 0;
    for (auto c : sorted) total += c;
    if (total == 0) throw EmptyDatasetError("entropy of an empty label set");
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (auto c : sorted) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

inline std::vector<std::size_t> class_counts(const LabeledTokens& labels) {
    std::vector<std::size_t> counts(labels.class_names.size(), 0);
    for (const auto& l : labels.labels) ++counts[l.class_id];
    return counts;
}

inline double plugin_entropy(const LabeledTokens& labels) {
    if (labels.labels.empty()) throw EmptyDatasetError("entropy of an empty label set");
    auto counts = class_counts(labels);
    return plugin_entropy_from_counts(counts);
}

}  // namespace uvprobe::conllu
