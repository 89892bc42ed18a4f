#pragma once
// A small self-contained workspace: CoNLL-U treebanks for four languages, an
// EMBS store whose vectors carry planted, layer-dependent signal, and a run
// config. Used by `probe-cli selfcheck`, the report tests and the acceptance
// suite; no model or external data needed.
//
// Planted signal, strength growing (s) or fading (1 - s/2) with depth:
//   dims 0..3    language one-hot       3 * (0.25 + s)
//   dims 4..9    UPOS one-hot           3 * (1 - s/2)
//   dims 10..13  Case one-hot           2.5 * s
//   dims 14..16  Gender one-hot         2.5 * s
// Japanese carries no Case or Gender, so its Gender heatmap row under
// NoneClass is a single class with undefined normalized information.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvprobe/conllu.hpp"
#include "uvprobe/embed_store.hpp"
#include "uvprobe/format.hpp"
#include "uvprobe/rng.hpp"

namespace uvprobe::synthetic {

namespace fs = std::filesystem;

struct Shape {
    std::size_t sentences = 30;  // per language
    std::uint16_t n_layers = 4;
    std::uint16_t dim = 24;      // >= 17
};

struct Workspace {
    fs::path dir;
    fs::path config;
    fs::path store;
    std::vector<fs::path> treebanks;
};

namespace detail {

struct Lang {
    const char* code;
    const char* word;
    std::vector<const char*> cases;    // empty = no Case feature
    std::vector<const char*> genders;  // empty = no Gender feature
    std::vector<conllu::Upos> marked;  // UPOS carrying the features
};

inline const std::array<conllu::Upos, 6> kTags = {conllu::Upos::NOUN, conllu::Upos::VERB, conllu::Upos::ADJ,
                                                   conllu::Upos::DET,  conllu::Upos::PRON, conllu::Upos::ADP};
inline const std::array<const char*, 4> kCaseNames = {"Acc", "Dat", "Gen", "Nom"};
inline const std::array<const char*, 3> kGenderNames = {"Fem", "Masc", "Neut"};

inline std::vector<Lang> languages() {
    using U = conllu::Upos;
    return {{"ar", "kalima", {"Acc", "Gen", "Nom"}, {"Fem", "Masc"}, {U::NOUN, U::ADJ}},
            {"de", "wort", {"Acc", "Dat", "Gen", "Nom"}, {"Fem", "Masc", "Neut"}, {U::NOUN, U::DET, U::PRON}},
            {"en", "word", {"Acc", "Nom"}, {"Fem", "Masc"}, {U::PRON}},
            {"ja", "kotoba", {}, {}, {}}};
}

template <std::size_t N>
int index_of(const std::array<const char*, N>& names, const std::string& v) {
    for (std::size_t i = 0; i < N; ++i)
        if (v == names[i]) return static_cast<int>(i);
    return -1;
}

}  // namespace detail

inline Workspace write_workspace(const fs::path& dir, std::uint64_t seed = 7, Shape shape = {}) {
    if (shape.dim < 17) throw Error("synthetic store needs dim >= 17");
    fs::create_directories(dir);
    Rng rng(seed);
    const auto langs = detail::languages();

    struct Tok {
        std::size_t lang;
        int upos, cas, gender;
    };
    std::vector<Tok> toks;
    store::TokenIndex index;
    Workspace ws;
    ws.dir = dir;
    nlohmann::json treebanks = nlohmann::json::array();

    for (std::size_t li = 0; li < langs.size(); ++li) {
        const auto& L = langs[li];
        std::string doc = "# generated synthetic treebank\n";
        for (std::size_t s = 0; s < shape.sentences; ++s) {
            const std::string sid = std::string(L.code) + "-s" + std::to_string(s + 1);
            const std::size_t n = 5 + rng.below(5);
            doc += "# sent_id = " + sid + "\n# text = synthetic\n";
            if (s == 0) doc += "1-2\t" + std::string(L.word) + "s\t_\t_\t_\t_\t_\t_\t_\t_\n";
            for (std::size_t t = 1; t <= n; ++t) {
                const auto tag = detail::kTags[rng.below(detail::kTags.size())];
                std::string feats;
                int cas = -1, gender = -1;
                const bool marked = std::find(L.marked.begin(), L.marked.end(), tag) != L.marked.end();
                if (marked && !L.cases.empty()) {
                    const std::string c = L.cases[rng.below(L.cases.size())];
                    cas = detail::index_of(detail::kCaseNames, c);
                    feats = "Case=" + c;
                }
                if (marked && !L.genders.empty()) {
                    const std::string g = L.genders[rng.below(L.genders.size())];
                    gender = detail::index_of(detail::kGenderNames, g);
                    feats += (feats.empty() ? "" : "|") + std::string("Gender=") + g;
                }
                if (feats.empty()) feats = "_";
                const std::string head = t == 1 ? "0" : "1";
                doc += std::to_string(t) + "\t" + L.word + std::to_string(t) + "\t" + L.word + "\t" +
                       std::string(conllu::to_string(tag)) + "\t_\t" + feats + "\t" + head + "\t" +
                       (t == 1 ? "root" : "dep") + "\t_\t_\n";
                if (s == 0 && t == 2) doc += "2.1\t_\t_\t_\t_\t_\t_\t_\t_\t_\n";
                const int ui = static_cast<int>(std::find(detail::kTags.begin(), detail::kTags.end(), tag) -
                                                detail::kTags.begin());
                toks.push_back({li, ui, cas, gender});
                index.records.push_back({L.code, sid, static_cast<std::uint32_t>(t)});
            }
            doc += "\n";
        }
        const auto path = dir / (std::string(L.code) + "-synthetic.conllu");
        write_file(path, doc);
        ws.treebanks.push_back(path);
        treebanks.push_back({{"language", L.code}, {"path", path.filename().string()}});
    }

    const std::size_t n = toks.size(), d = shape.dim;
    std::vector<std::vector<float>> layers(shape.n_layers, std::vector<float>(n * d));
    for (std::size_t l = 0; l < shape.n_layers; ++l) {
        const double s = shape.n_layers > 1 ? static_cast<double>(l) / (shape.n_layers - 1) : 1.0;
        auto& m = layers[l];
        for (std::size_t i = 0; i < n; ++i) {
            float* x = &m[i * d];
            for (std::size_t j = 0; j < d; ++j) x[j] = static_cast<float>(rng.normal());
            const auto& t = toks[i];
            x[t.lang] += static_cast<float>(3.0 * (0.25 + s));
            x[4 + t.upos] += static_cast<float>(3.0 * (1.0 - 0.5 * s));
            if (t.cas >= 0) x[10 + t.cas] += static_cast<float>(2.5 * s);
            if (t.gender >= 0) x[14 + t.gender] += static_cast<float>(2.5 * s);
        }
    }
    std::vector<store::MatrixView> views;
    for (const auto& m : layers) views.push_back({m.data(), n, d});
    store::StoreHeader h;
    h.n_layers = shape.n_layers;
    h.dim = shape.dim;
    h.n_tokens = n;
    ws.store = dir / "synthetic.embs";
    store::write_store(h, views, index, ws.store);

    nlohmann::json cfg = {
        {"treebanks", treebanks},
        {"store", "synthetic.embs"},
        {"tasks", {"LangID", "UPOS", "Case", "Gender"}},
        {"policy", "NoneClass"},
        {"langid_mode", "one_vs_rest"},
        {"probe",
         {{"family", "Linear"}, {"step_size", 0.01}, {"batch_size", 32}, {"max_epochs", 40}, {"patience", 5}}},
        {"lape", {{"q", 10}, {"p_min", 0.05}, {"tau", 0.0}, {"scope", "global"}}},
        {"output_dir", "out"},
        {"jobs", 2},
        {"extraction_point", "synthetic"}};
    ws.config = dir / "config.json";
    write_file(ws.config, cfg.dump(2) + "\n");
    return ws;
}

}  // namespace uvprobe::synthetic
