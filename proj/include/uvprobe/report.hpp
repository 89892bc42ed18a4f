#pragma once
// Run orchestration: JSON config, input validation, probing and LAPE job
// scheduling, output files and the run manifest.
//
// Jobs run on a bounded worker pool and only compute; every file is written
// afterwards from the main thread so that output bytes never depend on
// scheduling. Each probing job gets its own seed derived from the base seed
// and the job identity (task, language, layer).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "uvprobe/conllu.hpp"
#include "uvprobe/embed_store.hpp"
#include "uvprobe/error.hpp"
#include "uvprobe/format.hpp"
#include "uvprobe/lape.hpp"
#include "uvprobe/probe.hpp"
#include "uvprobe/rng.hpp"
#include "uvprobe/svg.hpp"

namespace uvprobe::report {

namespace fs = std::filesystem;
using conllu::Task;
using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kRestClass = "rest";

// ===========================================================================
// Configuration
// ===========================================================================

enum class LangIdMode { OneVsRest, Multiclass };

inline std::string_view to_string(LangIdMode m) { return m == LangIdMode::OneVsRest ? "one_vs_rest" : "multiclass"; }

struct TreebankRef {
    std::string language;
    fs::path path;
};

struct LapeRunConfig {
    lape::LapeConfig params;
    bool exclude_none = true;  // drop the "None" class from Case/Gender conditions
};

struct RunConfig {
    std::vector<TreebankRef> treebanks;
    fs::path store;
    std::vector<Task> tasks;
    conllu::MissingFeaturePolicy policy = conllu::MissingFeaturePolicy::NoneClass;
    LangIdMode langid_mode = LangIdMode::OneVsRest;
    std::optional<std::vector<std::size_t>> layers;
    probe::ProbeConfig probe;
    LapeRunConfig lape;
    fs::path output_dir = "out";
    std::size_t jobs = 1;
    std::string extraction_point = "hidden_states";
    std::vector<conllu::LanguageInfo> extra_languages;

    conllu::LanguageRegistry registry() const {
        auto r = conllu::LanguageRegistry::defaults();
        for (const auto& l : extra_languages) r.add(l);
        return r;
    }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

// Relative paths are resolved against `base_dir`.
inline RunConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
    RunConfig c;
    try {
        for (const auto& t : j.at("treebanks"))
            c.treebanks.push_back({t.at("language").get<std::string>(),
                                   detail::resolve(base_dir, t.at("path").get<std::string>())});
        c.store = detail::resolve(base_dir, j.at("store").get<std::string>());
        std::set<Task> seen;
        for (const auto& t : j.at("tasks")) {
            auto task = conllu::parse_task(t.get<std::string>());
            if (!task) throw ConfigError("unknown task '" + t.get<std::string>() + "'");
            if (seen.insert(*task).second) c.tasks.push_back(*task);
        }
        std::sort(c.tasks.begin(), c.tasks.end());
        if (j.contains("policy")) {
            auto p = conllu::parse_policy(j.at("policy").get<std::string>());
            if (!p) throw ConfigError("unknown policy '" + j.at("policy").get<std::string>() + "'");
            c.policy = *p;
        }
        if (j.contains("langid_mode")) {
            auto m = j.at("langid_mode").get<std::string>();
            if (m == "one_vs_rest") c.langid_mode = LangIdMode::OneVsRest;
            else if (m == "multiclass") c.langid_mode = LangIdMode::Multiclass;
            else throw ConfigError("unknown langid_mode '" + m + "'");
        }
        if (j.contains("layers") && !j.at("layers").is_null())
            c.layers = j.at("layers").get<std::vector<std::size_t>>();
        if (j.contains("probe")) c.probe = probe::probe_config_from_json(j.at("probe"));
        if (j.contains("lape")) {
            c.lape.params = lape::lape_config_from_json(j.at("lape"));
            c.lape.exclude_none = j.at("lape").value("exclude_none", true);
        }
        if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j.at("output_dir").get<std::string>());
        c.jobs = j.value("jobs", std::size_t{1});
        c.extraction_point = j.value("extraction_point", c.extraction_point);
        if (j.contains("languages"))
            for (const auto& l : j.at("languages"))
                c.extra_languages.push_back({l.at("code").get<std::string>(), l.value("name", ""),
                                             l.value("case", ""), l.value("gender", "")});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (c.tasks.empty()) throw ConfigError("config lists no tasks");
    if (c.treebanks.empty()) throw ConfigError("config lists no treebanks");
    if (c.jobs == 0) c.jobs = 1;
    std::set<std::string> langs;
    for (const auto& t : c.treebanks)
        if (!langs.insert(t.language).second) throw ConfigError("language '" + t.language + "' listed twice");
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j, path.parent_path());
}

// Snapshot with every default materialized.
inline json to_json(const RunConfig& c) {
    json tb = json::array();
    for (const auto& t : c.treebanks) tb.push_back({{"language", t.language}, {"path", t.path.string()}});
    json tasks = json::array();
    for (auto t : c.tasks) tasks.push_back(std::string(conllu::to_string(t)));
    json lape = lape::to_json(c.lape.params);
    lape["exclude_none"] = c.lape.exclude_none;
    json langs = json::array();
    for (const auto& l : c.extra_languages)
        langs.push_back({{"code", l.code}, {"name", l.name}, {"case", l.case_system}, {"gender", l.gender_system}});
    return {{"treebanks", tb},
            {"store", c.store.string()},
            {"tasks", tasks},
            {"policy", std::string(conllu::to_string(c.policy))},
            {"langid_mode", std::string(to_string(c.langid_mode))},
            {"layers", c.layers ? json(*c.layers) : json(nullptr)},
            {"probe", probe::to_json(c.probe)},
            {"lape", lape},
            {"output_dir", c.output_dir.string()},
            {"jobs", c.jobs},
            {"extraction_point", c.extraction_point},
            {"languages", langs}};
}

// ===========================================================================
// Inputs and validation
// ===========================================================================

struct Inputs {
    std::vector<conllu::Corpus> corpora;  // config order
    std::shared_ptr<const store::Store> store;
    std::vector<std::size_t> layers;

    const conllu::Corpus& corpus(const std::string& lang) const {
        for (const auto& c : corpora)
            if (c.language == lang) return c;
        throw Error("no corpus for language '" + lang + "'");
    }
};

// Throws ConfigError for missing files, ParseError/FormatError for bad input.
inline Inputs load_inputs(const RunConfig& cfg) {
    for (const auto& t : cfg.treebanks)
        if (!fs::exists(t.path)) throw ConfigError("treebank not found: " + t.path.string());
    if (!fs::exists(cfg.store)) throw ConfigError("store not found: " + cfg.store.string());
    Inputs in;
    const auto registry = cfg.registry();
    for (const auto& t : cfg.treebanks) {
        try {
            in.corpora.push_back(conllu::parse_conllu(read_file(t.path), t.language, registry));
        } catch (const ParseError& e) {
            throw ParseError(e.line, t.path.string() + ": " + e.what());
        }
    }
    in.store = store::open_store(cfg.store);
    if (cfg.layers) {
        in.layers = *cfg.layers;
        for (auto l : in.layers)
            if (l >= in.store->n_layers())
                throw ConfigError("layer " + std::to_string(l) + " out of range; store has " +
                                  std::to_string(in.store->n_layers()) + " layers");
    } else {
        for (std::size_t l = 0; l < in.store->n_layers(); ++l) in.layers.push_back(l);
    }
    return in;
}

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::string table;
    bool ok() const { return errors.empty(); }
};

inline ValidationReport validate(const RunConfig& cfg, const Inputs& in) {
    ValidationReport rep;
    const auto registry = cfg.registry();
    const bool langid = std::find(cfg.tasks.begin(), cfg.tasks.end(), Task::LangID) != cfg.tasks.end();
    if (langid && in.corpora.size() < 2) rep.errors.push_back("LangID needs at least 2 languages");

    std::ostringstream t;
    t << "lang  name        #sent   #tok  store  Case classes             Gender classes\n";
    std::map<Task, std::size_t> langs_without;
    for (const auto& c : in.corpora) {
        std::size_t in_store = 0;
        std::size_t missing = 0;
        std::string first_missing;
        for (const auto& s : c.sentences)
            for (const auto& tok : s.tokens) {
                if (in.store->find_row({c.language, s.sent_id, tok.id})) {
                    ++in_store;
                } else {
                    if (!missing) first_missing = "(" + c.language + ", " + s.sent_id + ", " + std::to_string(tok.id) + ")";
                    ++missing;
                }
            }
        if (in_store == 0)
            rep.errors.push_back(c.language + ": language missing from store");
        else if (missing)
            rep.errors.push_back(c.language + ": " + std::to_string(missing) + " tokens missing from store, first " +
                                 first_missing);

        auto inventory = [&](Task task) {
            std::set<std::string> classes;
            for (const auto& s : c.sentences)
                for (const auto& tok : s.tokens)
                    if (const auto* v = tok.feat(conllu::to_string(task)); v && !v->empty())
                        classes.insert(v->substr(0, v->find(',')));
            if (classes.empty()) {
                ++langs_without[task];
                return std::string("-");
            }
            std::vector<std::string> v(classes.begin(), classes.end());
            return join(v, "/");
        };
        const auto* info = registry.find(c.language);
        char line[256];
        std::snprintf(line, sizeof(line), "%-4s  %-10s %6zu %6zu %6zu  %-24s %s\n", c.language.c_str(),
                      info ? info->name.c_str() : "?", c.sentences.size(), c.token_count, in_store,
                      inventory(Task::Case).c_str(), inventory(Task::Gender).c_str());
        t << line;
    }
    for (Task task : {Task::Case, Task::Gender}) {
        if (std::find(cfg.tasks.begin(), cfg.tasks.end(), task) == cfg.tasks.end()) continue;
        const auto without = langs_without[task];
        if (without == 0) continue;
        if (cfg.policy == conllu::MissingFeaturePolicy::DropMissing)
            rep.warnings.push_back(std::string(conllu::to_string(task)) + " requested with DropMissing but " +
                                   std::to_string(without) + " language(s) carry no " +
                                   std::string(conllu::to_string(task)) + " feature: empty datasets expected");
        else if (without == in.corpora.size())
            rep.warnings.push_back(std::string(conllu::to_string(task)) +
                                   ": no language carries the feature, every label is None");
    }
    rep.table = t.str();
    return rep;
}

// ===========================================================================
// Worker pool
// ===========================================================================

// Calls f(i) for i in [0, n) on up to `workers` threads. f must not throw.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    for (auto& th : pool) th.join();
}

// ===========================================================================
// Label sets
// ===========================================================================

inline std::uint64_t job_seed(std::uint64_t base, Task task, const std::string& language, std::size_t layer) {
    return base ^ fnv1a64(std::string(conllu::to_string(task)) + "|" + language + "|" + std::to_string(layer));
}

// Tokens of `language` against an equal-size sample of the other languages.
inline conllu::LabeledTokens one_vs_rest_labels(const Inputs& in, const std::string& language, std::uint64_t seed) {
    std::vector<conllu::TokenKey> pos, others;
    for (const auto& c : in.corpora)
        for (const auto& s : c.sentences)
            for (const auto& t : s.tokens)
                (c.language == language ? pos : others).push_back({c.language, s.sent_id, t.id});
    if (pos.empty() || others.empty())
        throw EmptyDatasetError("one-vs-rest for '" + language + "' needs tokens of it and of other languages");
    const std::size_t k = std::min(pos.size(), others.size());
    Rng rng(seed ^ fnv1a64("LangID-balance|" + language));
    auto sample = [&](std::vector<conllu::TokenKey>& v) {
        for (std::size_t i = 0; i < k; ++i) std::swap(v[i], v[i + rng.below(v.size() - i)]);
        v.resize(k);
    };
    if (pos.size() > k) sample(pos);
    if (others.size() > k) sample(others);
    std::vector<std::string> names = {language, std::string(kRestClass)};
    std::sort(names.begin(), names.end());
    const std::uint32_t pos_id = names[0] == language ? 0 : 1;
    conllu::LabeledTokens out;
    out.task = Task::LangID;
    out.class_names = names;
    for (auto& key : pos) out.labels.push_back({std::move(key), pos_id});
    for (auto& key : others) out.labels.push_back({std::move(key), 1 - pos_id});
    out.coverage = 1.0;
    return out;
}

inline conllu::LabeledTokens drop_class(const conllu::LabeledTokens& in, std::string_view name) {
    std::vector<conllu::LabeledTokens> parts(1);
    parts[0] = in;
    parts[0].labels.clear();
    for (const auto& l : in.labels)
        if (in.class_name(l) != name) parts[0].labels.push_back(l);
    if (parts[0].labels.empty()) throw EmptyDatasetError("no tokens left after dropping class '" + std::string(name) + "'");
    // pooling re-indexes the vocabulary over the remaining labels
    auto out = conllu::pool_labels(parts);
    out.coverage = in.coverage * static_cast<double>(out.labels.size()) / static_cast<double>(in.labels.size());
    return out;
}

// ===========================================================================
// Outputs
// ===========================================================================

// Collects output files and writes them from a single thread.
class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& rel, std::string_view content) {
        const auto path = dir_ / rel;
        fs::create_directories(path.parent_path());
        write_file(path, content);
        files_.insert(rel);
    }

    const fs::path& dir() const { return dir_; }
    const std::set<std::string>& files() const { return files_; }
    void adopt(const std::string& rel) { files_.insert(rel); }

private:
    fs::path dir_;
    std::set<std::string> files_;
};

inline std::string usable_info_csv(const std::vector<probe::UsableInfoResult>& rows) {
    std::string out = std::string(probe::kResultCsvHeader) + "\n";
    for (const auto& r : rows) out += probe::to_csv_row(r) + "\n";
    return out;
}

inline std::vector<probe::UsableInfoResult> usable_info_from_csv(std::string_view text) {
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != probe::kResultCsvHeader) throw Error("not a usable-information CSV");
    std::vector<probe::UsableInfoResult> out;
    for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(probe::from_csv_row(lines[i]));
    return out;
}

// Languages x layers heatmap of i_hat, rows in order of first appearance.
inline std::string heatmap_from_csv(std::string_view csv) {
    auto rows = usable_info_from_csv(csv);
    if (rows.empty()) throw Error("cannot render an empty heatmap");
    svg::Heatmap h;
    std::vector<std::size_t> layers;
    for (const auto& r : rows) {
        if (std::find(h.row_labels.begin(), h.row_labels.end(), r.language) == h.row_labels.end())
            h.row_labels.push_back(r.language);
        layers.push_back(r.layer);
    }
    std::sort(layers.begin(), layers.end());
    layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
    for (auto l : layers) h.col_labels.push_back(std::to_string(l));
    h.values.assign(h.row_labels.size(), std::vector<svg::Cell>(layers.size(), std::nullopt));
    for (const auto& r : rows) {
        const auto ri = static_cast<std::size_t>(
            std::find(h.row_labels.begin(), h.row_labels.end(), r.language) - h.row_labels.begin());
        const auto ci = static_cast<std::size_t>(std::find(layers.begin(), layers.end(), r.layer) - layers.begin());
        if (r.i_hat_defined) h.values[ri][ci] = r.i_hat;
    }
    h.title = "Normalized usable information: " + rows.front().task;
    return svg::render_heatmap(h);
}

inline std::string bars_from_csv(std::string_view csv, svg::BarMode mode, const std::string& task) {
    auto s = lape::summary_from_csv(csv);
    const std::string title = mode == svg::BarMode::Total ? "LAPE selective elements per condition: " + task
                                                          : "LAPE selective elements per layer: " + task;
    return svg::render_bars(s, mode, title);
}

inline std::string task_prefix(Task t) { return std::string(conllu::to_string(t)); }

// ===========================================================================
// Jobs
// ===========================================================================

struct JobStatus {
    std::string id;
    std::string kind;  // probe | lape
    std::string task;
    std::string language;
    std::optional<std::size_t> layer;
    bool ok = true;
    std::string error;
    double seconds = 0.0;
};

inline json to_json(const JobStatus& s) {
    return {{"id", s.id},
            {"kind", s.kind},
            {"task", s.task},
            {"language", s.language},
            {"layer", s.layer ? json(*s.layer) : json(nullptr)},
            {"status", s.ok ? "ok" : "failed"},
            {"error", s.error},
            {"seconds", s.seconds}};
}

struct PhaseResult {
    std::vector<JobStatus> jobs;
    bool any_failed() const {
        return std::any_of(jobs.begin(), jobs.end(), [](const JobStatus& j) { return !j.ok; });
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// The label set probed for (task, language). `language` is "all" for
// multiclass LangID.
inline conllu::LabeledTokens probe_labels(const RunConfig& cfg, const Inputs& in, Task task,
                                          const std::string& language) {
    if (task == Task::LangID) {
        if (cfg.langid_mode == LangIdMode::OneVsRest) return one_vs_rest_labels(in, language, cfg.probe.seed);
        std::vector<conllu::LabeledTokens> parts;
        for (const auto& c : in.corpora) parts.push_back(conllu::extract_task_labels(c, Task::LangID));
        return conllu::pool_labels(parts);
    }
    return conllu::extract_task_labels(in.corpus(language), task, cfg.policy);
}

}  // namespace detail

// Trains every (task, language, layer) probe and writes, per task,
// <Task>_usable_info.csv/.json and <Task>_heatmap.svg.
inline PhaseResult run_probes(const RunConfig& cfg, const Inputs& in, OutputWriter& out) {
    struct Job {
        Task task;
        std::string language;
        std::size_t layer;
        std::size_t label_set;
    };
    struct LabelSet {
        std::optional<conllu::LabeledTokens> labels;
        std::string error;
    };
    std::vector<LabelSet> label_sets;
    std::vector<Job> jobs;
    std::vector<std::pair<Task, std::string>> label_keys;
    for (Task task : cfg.tasks) {
        std::vector<std::string> langs;
        if (task == Task::LangID && cfg.langid_mode == LangIdMode::Multiclass)
            langs.push_back("all");
        else
            for (const auto& c : in.corpora) langs.push_back(c.language);
        for (const auto& lang : langs) {
            LabelSet ls;
            try {
                ls.labels = detail::probe_labels(cfg, in, task, lang);
            } catch (const Error& e) {
                ls.error = e.what();
            }
            label_sets.push_back(std::move(ls));
            for (auto layer : in.layers) jobs.push_back({task, lang, layer, label_sets.size() - 1});
        }
    }

    std::vector<std::optional<probe::UsableInfoResult>> results(jobs.size());
    PhaseResult phase;
    phase.jobs.resize(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
        const auto& job = jobs[i];
        auto& st = phase.jobs[i];
        st.kind = "probe";
        st.task = std::string(conllu::to_string(job.task));
        st.language = job.language;
        st.layer = job.layer;
        st.id = "probe/" + st.task + "/" + st.language + "/" + std::to_string(job.layer);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto& ls = label_sets[job.label_set];
            if (!ls.labels) throw Error(ls.error);
            auto ds = store::join(in.store, *ls.labels, job.layer);
            auto pc = cfg.probe;
            pc.seed = job_seed(cfg.probe.seed, job.task, job.language, job.layer);
            results[i] = probe::usable_information(ds, pc, st.task, st.language);
        } catch (const TrainingError& e) {
            st.ok = false;
            st.error = std::string(e.what()) + "\n" + e.epoch_trace;
        } catch (const std::exception& e) {
            st.ok = false;
            st.error = e.what();
        }
        st.seconds = detail::seconds_since(t0);
    });

    for (Task task : cfg.tasks) {
        std::vector<probe::UsableInfoResult> rows;
        for (std::size_t i = 0; i < jobs.size(); ++i)
            if (jobs[i].task == task && results[i]) rows.push_back(*results[i]);
        const auto prefix = task_prefix(task);
        const auto csv = usable_info_csv(rows);
        out.write(prefix + "_usable_info.csv", csv);
        json doc = {{"task", prefix},
                    {"policy", std::string(conllu::to_string(cfg.policy))},
                    {"evaluation", "held-out split"},
                    {"probe", probe::to_json(cfg.probe)}};
        if (task == Task::LangID) doc["langid_mode"] = std::string(to_string(cfg.langid_mode));
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(probe::to_json(r));
        doc["results"] = arr;
        out.write(prefix + "_usable_info.json", doc.dump(2) + "\n");
        if (!rows.empty()) out.write(prefix + "_heatmap.svg", heatmap_from_csv(csv));
    }
    return phase;
}

// Conditions for LAPE pooled over all configured languages.
inline conllu::LabeledTokens lape_conditions(const RunConfig& cfg, const Inputs& in, Task task) {
    std::vector<conllu::LabeledTokens> parts;
    for (const auto& c : in.corpora) {
        try {
            parts.push_back(conllu::extract_task_labels(c, task, cfg.policy));
        } catch (const EmptyDatasetError&) {
        }
    }
    if (parts.empty()) throw EmptyDatasetError("no tokens for LAPE conditions of " + task_prefix(task));
    auto pooled = conllu::pool_labels(parts);
    if (cfg.lape.exclude_none && (task == Task::Case || task == Task::Gender)) {
        const auto& names = pooled.class_names;
        if (std::find(names.begin(), names.end(), conllu::kNoneClass) != names.end())
            pooled = drop_class(pooled, conllu::kNoneClass);
    }
    return pooled;
}

// Per task: <Task>_lape_records.csv, <Task>_lape_summary.csv/.json and the
// total and per-layer bar charts.
inline PhaseResult run_lape(const RunConfig& cfg, const Inputs& in, OutputWriter& out) {
    PhaseResult phase;
    for (Task task : cfg.tasks) {
        JobStatus st;
        st.kind = "lape";
        st.task = task_prefix(task);
        st.language = "all";
        st.id = "lape/" + st.task;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto conditions = lape_conditions(cfg, in, task);
            std::vector<std::optional<lape::ActivationProfile>> profiles(in.layers.size());
            std::vector<std::string> errors(in.layers.size());
            parallel_for(in.layers.size(), cfg.jobs, [&](std::size_t i) {
                try {
                    auto ds = store::join(in.store, conditions, in.layers[i]);
                    profiles[i] = lape::activation_probabilities(ds, cfg.lape.params.tau);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
            std::vector<lape::ActivationProfile> ready;
            for (std::size_t i = 0; i < profiles.size(); ++i) {
                if (!profiles[i]) throw Error("layer " + std::to_string(in.layers[i]) + ": " + errors[i]);
                ready.push_back(std::move(*profiles[i]));
            }
            const auto& p = cfg.lape.params;
            auto sel = lape::select_selective_elements(ready, p.q, p.p_min, p.scope);
            auto summary = lape::aggregate(sel.records, conditions.class_names, in.layers, p);
            const auto prefix = task_prefix(task);
            out.write(prefix + "_lape_records.csv", lape::records_csv(sel, conditions.class_names, p));
            const auto summary_text = lape::summary_csv(summary);
            out.write(prefix + "_lape_summary.csv", summary_text);
            auto doc = lape::to_json(summary);
            doc["task"] = prefix;
            doc["policy"] = std::string(conllu::to_string(cfg.policy));
            doc["exclude_none"] = cfg.lape.exclude_none;
            doc["extraction_point"] = cfg.extraction_point;
            doc["warnings"] = sel.no_active ? json::array({"no active elements"}) : json::array();
            out.write(prefix + "_lape_summary.json", doc.dump(2) + "\n");
            out.write(prefix + "_lape_total.svg", bars_from_csv(summary_text, svg::BarMode::Total, prefix));
            out.write(prefix + "_lape_layers.svg", bars_from_csv(summary_text, svg::BarMode::PerLayer, prefix));
        } catch (const std::exception& e) {
            st.ok = false;
            st.error = e.what();
        }
        st.seconds = detail::seconds_since(t0);
        phase.jobs.push_back(std::move(st));
    }
    return phase;
}

// labels/<Task>_<lang>.csv for every configured task and language.
inline PhaseResult extract_labels(const RunConfig& cfg, const Inputs& in, OutputWriter& out) {
    PhaseResult phase;
    for (Task task : cfg.tasks)
        for (const auto& c : in.corpora) {
            JobStatus st;
            st.kind = "labels";
            st.task = task_prefix(task);
            st.language = c.language;
            st.id = "labels/" + st.task + "/" + c.language;
            try {
                auto labels = conllu::extract_task_labels(c, task, cfg.policy);
                std::string csv = "# policy=" + std::string(conllu::to_string(cfg.policy)) +
                                  ",coverage=" + format_double(labels.coverage) + "\nlanguage,sent_id,token_id,label\n";
                for (const auto& l : labels.labels)
                    csv += l.key.language + "," + l.key.sent_id + "," + std::to_string(l.key.token_id) + "," +
                           labels.class_name(l) + "\n";
                out.write("labels/" + st.task + "_" + c.language + ".csv", csv);
            } catch (const std::exception& e) {
                st.ok = false;
                st.error = e.what();
            }
            phase.jobs.push_back(std::move(st));
        }
    return phase;
}

// Re-renders every figure from the CSVs present in `dir`.
inline std::vector<std::string> rerender(OutputWriter& out) {
    std::vector<std::string> written;
    for (Task task : conllu::kAllTasks) {
        const auto prefix = task_prefix(task);
        const auto ui = out.dir() / (prefix + "_usable_info.csv");
        if (fs::exists(ui)) {
            const auto csv = read_file(ui);
            if (usable_info_from_csv(csv).size()) {
                out.write(prefix + "_heatmap.svg", heatmap_from_csv(csv));
                written.push_back(prefix + "_heatmap.svg");
            }
        }
        const auto ls = out.dir() / (prefix + "_lape_summary.csv");
        if (fs::exists(ls)) {
            const auto csv = read_file(ls);
            out.write(prefix + "_lape_total.svg", bars_from_csv(csv, svg::BarMode::Total, prefix));
            out.write(prefix + "_lape_layers.svg", bars_from_csv(csv, svg::BarMode::PerLayer, prefix));
            written.push_back(prefix + "_lape_total.svg");
            written.push_back(prefix + "_lape_layers.svg");
        }
    }
    return written;
}

// ===========================================================================
// Manifest
// ===========================================================================

inline constexpr std::string_view kManifestName = "manifest.json";

inline std::vector<std::string> previous_outputs(const fs::path& dir) {
    const auto path = dir / kManifestName;
    if (!fs::exists(path)) return {};
    try {
        return json::parse(read_file(path)).at("outputs").get<std::vector<std::string>>();
    } catch (const std::exception&) {
        return {};
    }
}

// Files under `dir`, relative, sorted.
inline std::vector<std::string> files_under(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).generic_string());
    std::sort(out.begin(), out.end());
    return out;
}

// Every regular file under `dir` plus the manifest itself, sorted.
inline std::vector<std::string> manifest_outputs(const fs::path& dir) {
    const auto tmp_name = std::string(kManifestName) + ".tmp";
    std::vector<std::string> outputs;
    for (auto& f : files_under(dir))
        if (f != tmp_name && f != kManifestName) outputs.push_back(std::move(f));
    outputs.push_back(std::string(kManifestName));
    std::sort(outputs.begin(), outputs.end());
    return outputs;
}

// Refreshes the output list and writes via temp file + rename.
inline void store_manifest(const fs::path& dir, json m) {
    m["outputs"] = manifest_outputs(dir);
    const auto tmp = dir / (std::string(kManifestName) + ".tmp");
    write_file(tmp, m.dump(2) + "\n");
    fs::rename(tmp, dir / kManifestName);
}

inline json load_manifest(const fs::path& dir) {
    const auto path = dir / kManifestName;
    if (!fs::exists(path)) throw ConfigError("no " + std::string(kManifestName) + " in " + dir.string());
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("unreadable manifest: " + std::string(e.what()));
    }
}

inline json write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                           const json& jobs, double total_seconds) {
    json m = {{"tool", "probe-cli"},
              {"version", std::string(kToolVersion)},
              {"command", command},
              {"config", to_json(cfg)},
              {"notes",
               {{"evaluation", "usable information on a held-out split"},
                {"policy", std::string(conllu::to_string(cfg.policy))},
                {"langid_mode", std::string(to_string(cfg.langid_mode))},
                {"extraction_point", cfg.extraction_point},
                {"layer_numbering", "0 = embedding layer, 1.. = encoder blocks"}}},
              {"jobs", jobs},
              {"timings", {{"total_seconds", total_seconds}}}};
    store_manifest(dir, m);
    return load_manifest(dir);
}

// Jobs recorded by an earlier manifest in `dir`, minus ids in `replaced`.
inline std::vector<json> previous_jobs(const fs::path& dir, const std::set<std::string>& replaced) {
    std::vector<json> out;
    const auto path = dir / kManifestName;
    if (!fs::exists(path)) return out;
    try {
        const auto m = json::parse(read_file(path));
        for (const auto& j : m.at("jobs"))
            if (!replaced.count(j.at("id").get<std::string>())) out.push_back(j);
    } catch (const std::exception&) {
    }
    return out;
}

}  // namespace uvprobe::report
