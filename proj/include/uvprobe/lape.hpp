#pragma once
// Activation-probability entropy (LAPE) attribution.
//
// For every representation element and every condition (class of the target
// variable) we measure how often the element exceeds a threshold tau. The
// entropy of that row, normalized to sum to one, is the element's score: a
// low score means the element fires preferentially for few conditions.
// Elements that are rarely active (max probability below p_min) are dropped,
// the lowest q percent of the remaining scores are selected, and each
// selected element is assigned to its most activating condition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvprobe/embed_store.hpp"
#include "uvprobe/error.hpp"
#include "uvprobe/format.hpp"

namespace uvprobe::lape {

using store::AlignedDataset;

enum class Scope : std::uint8_t { Global, PerLayer };

inline std::string_view to_string(Scope s) { return s == Scope::Global ? "global" : "per_layer"; }

struct LapeConfig {
    double q = 1.0;       // percentile, (0, 100]
    double p_min = 0.05;  // activity filter, (0, 1)
    double tau = 0.0;     // activation threshold on hidden-state values
    Scope scope = Scope::Global;

    void validate() const {
        if (!(q > 0.0 && q <= 100.0)) throw ConfigError("lape q must lie in (0, 100]");
        if (!(p_min > 0.0 && p_min < 1.0)) throw ConfigError("lape p_min must lie in (0, 1)");
        if (!std::isfinite(tau)) throw ConfigError("lape tau must be finite");
    }
};

inline nlohmann::json to_json(const LapeConfig& c) {
    return {{"q", c.q}, {"p_min", c.p_min}, {"tau", c.tau}, {"scope", std::string(to_string(c.scope))}};
}

inline LapeConfig lape_config_from_json(const nlohmann::json& j) {
    LapeConfig c;
    c.q = j.value("q", c.q);
    c.p_min = j.value("p_min", c.p_min);
    c.tau = j.value("tau", c.tau);
    if (j.contains("scope")) {
        auto s = j.at("scope").get<std::string>();
        if (s == "global")
            c.scope = Scope::Global;
        else if (s == "per_layer")
            c.scope = Scope::PerLayer;
        else
            throw ConfigError("unknown lape scope '" + s + "'");
    }
    c.validate();
    return c;
}

inline std::string params_comment(const LapeConfig& c) {
    return "# q=" + format_double(c.q) + ",p_min=" + format_double(c.p_min) + ",tau=" + format_double(c.tau) +
           ",scope=" + std::string(to_string(c.scope));
}

// ---------------------------------------------------------------------------
// Activation probabilities
// ---------------------------------------------------------------------------

struct ActivationProfile {
    std::size_t layer = 0;
    std::size_t dim = 0;
    std::vector<double> probs;          // dim x C, row-major
    std::vector<std::size_t> counts;    // tokens per condition
    std::vector<std::string> class_names;
    double tau = 0.0;

    std::size_t num_conditions() const { return counts.size(); }
    std::span<const double> row(std::size_t element) const {
        return {probs.data() + element * num_conditions(), num_conditions()};
    }
};

// One streaming pass over the dataset rows.
inline ActivationProfile activation_probabilities(const AlignedDataset& data, double tau) {
    const std::size_t C = data.num_classes();
    if (C < 2) throw EmptyDatasetError("LAPE needs at least 2 conditions, got " + std::to_string(C));
    ActivationProfile p;
    p.layer = data.layer;
    p.dim = data.dim();
    p.tau = tau;
    p.class_names = data.class_names;
    p.counts.assign(C, 0);
    std::vector<std::uint64_t> active(p.dim * C, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto c = data.labels[i];
        ++p.counts[c];
        const auto v = data.vector(i);
        for (std::size_t j = 0; j < p.dim; ++j)
            if (v[j] > tau) ++active[j * C + c];
    }
    for (std::size_t c = 0; c < C; ++c)
        if (p.counts[c] == 0) throw EmptyDatasetError("condition '" + p.class_names[c] + "' has no tokens");
    p.probs.resize(active.size());
    for (std::size_t j = 0; j < p.dim; ++j)
        for (std::size_t c = 0; c < C; ++c)
            p.probs[j * C + c] = static_cast<double>(active[j * C + c]) / static_cast<double>(p.counts[c]);
    return p;
}

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

// Entropy in nats of the row normalized to sum 1; nullopt for an all-zero
// row. Terms are accumulated in ascending order, so permuting the row gives
// a bit-identical score.
inline std::optional<double> lape_score(std::span<const double> row) {
    if (row.size() < 2) throw Error("lape_score needs at least 2 conditions");
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0.0) throw Error("lape_score: negative activation probability");
    double total = 0.0;
    for (double v : sorted) total += v;
    if (total <= 0.0) return std::nullopt;
    double h = 0.0;
    for (double v : sorted) {
        if (v <= 0.0) continue;
        const double p = v / total;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

struct LapeRecord {
    std::size_t layer = 0;
    std::size_t element = 0;
    std::optional<double> score;  // nullopt = never active
    double max_prob = 0.0;
    bool active = false;
    bool selected = false;
    std::optional<std::uint32_t> assigned;
};

struct Selection {
    std::vector<LapeRecord> records;
    bool no_active = false;  // warning: nothing passed the activity filter
};

// Nearest-rank cutoff: the smallest k with k / n >= q / 100.
inline std::size_t nearest_rank(double q, std::size_t n) {
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) / 100.0 - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

inline Selection select_selective_elements(std::span<const ActivationProfile> profiles, double q, double p_min,
                                           Scope scope = Scope::Global) {
    if (!(q > 0.0 && q <= 100.0)) throw ConfigError("q must lie in (0, 100]");
    if (!(p_min > 0.0 && p_min < 1.0)) throw ConfigError("p_min must lie in (0, 1)");
    Selection out;
    for (const auto& prof : profiles) {
        if (prof.class_names != profiles.front().class_names)
            throw Error("profiles disagree on the condition vocabulary");
        for (std::size_t i = 0; i < prof.dim; ++i) {
            LapeRecord r;
            r.layer = prof.layer;
            r.element = i;
            const auto row = prof.row(i);
            r.score = lape_score(row);
            r.max_prob = *std::max_element(row.begin(), row.end());
            r.active = r.max_prob >= p_min;
            out.records.push_back(r);
        }
    }

    auto select_group = [&](auto&& in_group) {
        std::vector<double> scores;
        for (const auto& r : out.records)
            if (r.active && in_group(r)) scores.push_back(*r.score);
        if (scores.empty()) return false;
        std::sort(scores.begin(), scores.end());
        const double cutoff = scores[nearest_rank(q, scores.size()) - 1];
        for (auto& r : out.records)
            if (r.active && in_group(r) && *r.score <= cutoff) r.selected = true;
        return true;
    };

    if (scope == Scope::Global) {
        out.no_active = !select_group([](const LapeRecord&) { return true; });
    } else {
        bool any = false;
        for (const auto& prof : profiles)
            any |= select_group([&](const LapeRecord& r) { return r.layer == prof.layer; });
        out.no_active = !any;
    }

    std::size_t k = 0;
    for (const auto& prof : profiles) {
        for (std::size_t i = 0; i < prof.dim; ++i, ++k) {
            auto& r = out.records[k];
            if (!r.selected) continue;
            const auto row = prof.row(i);
            // max_element returns the first maximum: ties go to the lowest index
            r.assigned = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct LapeSummary {
    std::vector<std::string> class_names;
    std::vector<std::size_t> layers;                   // layer ids, ascending
    std::vector<std::size_t> totals;                   // per condition
    std::vector<std::vector<std::size_t>> per_layer;   // [layer index][condition]
    LapeConfig params;

    std::size_t layer_count(std::size_t layer, std::size_t condition) const {
        auto it = std::find(layers.begin(), layers.end(), layer);
        if (it == layers.end()) return 0;
        return per_layer[static_cast<std::size_t>(it - layers.begin())][condition];
    }
};

inline LapeSummary aggregate(std::span<const LapeRecord> records, std::vector<std::string> class_names,
                             std::vector<std::size_t> layers, LapeConfig params = {}) {
    std::sort(layers.begin(), layers.end());
    layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
    LapeSummary s;
    s.class_names = std::move(class_names);
    s.layers = std::move(layers);
    s.params = params;
    const std::size_t C = s.class_names.size();
    s.totals.assign(C, 0);
    s.per_layer.assign(s.layers.size(), std::vector<std::size_t>(C, 0));
    for (const auto& r : records) {
        if (!r.selected || !r.assigned) continue;
        const auto c = *r.assigned;
        if (c >= C) throw Error("record assigned to unknown condition " + std::to_string(c));
        auto it = std::find(s.layers.begin(), s.layers.end(), r.layer);
        if (it == s.layers.end()) {
            s.layers.insert(std::upper_bound(s.layers.begin(), s.layers.end(), r.layer), r.layer);
            it = std::find(s.layers.begin(), s.layers.end(), r.layer);
            s.per_layer.insert(s.per_layer.begin() + (it - s.layers.begin()), std::vector<std::size_t>(C, 0));
        }
        ++s.totals[c];
        ++s.per_layer[static_cast<std::size_t>(it - s.layers.begin())][c];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr std::string_view kRecordCsvHeader = "layer,element,score,max_prob,active,selected,assigned";

inline std::string records_csv(const Selection& sel, const std::vector<std::string>& class_names,
                               const LapeConfig& params) {
    std::string out = params_comment(params) + "\n" + std::string(kRecordCsvHeader) + "\n";
    for (const auto& r : sel.records) {
        out += std::to_string(r.layer) + "," + std::to_string(r.element) + "," +
               (r.score ? format_double(*r.score) : std::string("NA")) + "," + format_double(r.max_prob) + "," +
               (r.active ? "1" : "0") + "," + (r.selected ? "1" : "0") + "," +
               (r.assigned ? class_names[*r.assigned] : std::string()) + "\n";
    }
    return out;
}

// Rows "total,<condition>,<count>" then "<layer>,<condition>,<count>".
inline std::string summary_csv(const LapeSummary& s) {
    std::string out = params_comment(s.params) + "\nlayer,condition,count\n";
    for (std::size_t c = 0; c < s.class_names.size(); ++c)
        out += "total," + s.class_names[c] + "," + std::to_string(s.totals[c]) + "\n";
    for (std::size_t l = 0; l < s.layers.size(); ++l)
        for (std::size_t c = 0; c < s.class_names.size(); ++c)
            out += std::to_string(s.layers[l]) + "," + s.class_names[c] + "," +
                   std::to_string(s.per_layer[l][c]) + "\n";
    return out;
}

inline LapeSummary summary_from_csv(std::string_view text) {
    LapeSummary s;
    auto lines = lines_of(text);
    std::size_t i = 0;
    if (i < lines.size() && lines[i].rfind("# ", 0) == 0) {
        for (const auto& kv : split(lines[i].substr(2), ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
            if (k == "q") s.params.q = parse_double(v);
            else if (k == "p_min") s.params.p_min = parse_double(v);
            else if (k == "tau") s.params.tau = parse_double(v);
            else if (k == "scope") s.params.scope = v == "per_layer" ? Scope::PerLayer : Scope::Global;
        }
        ++i;
    }
    if (i >= lines.size() || lines[i] != "layer,condition,count") throw Error("not a LAPE summary CSV");
    ++i;
    std::vector<std::pair<std::string, std::pair<std::string, std::size_t>>> rows;
    for (; i < lines.size(); ++i) {
        auto f = split(lines[i], ',');
        if (f.size() != 3) throw Error("bad LAPE summary row '" + lines[i] + "'");
        rows.push_back({f[0], {f[1], std::stoul(f[2])}});
    }
    for (const auto& [layer, cc] : rows)
        if (layer == "total") {
            s.class_names.push_back(cc.first);
            s.totals.push_back(cc.second);
        }
    const std::size_t C = s.class_names.size();
    for (const auto& [layer, cc] : rows) {
        if (layer == "total") continue;
        const auto l = std::stoul(layer);
        if (s.layers.empty() || s.layers.back() != l) {
            s.layers.push_back(l);
            s.per_layer.emplace_back(C, 0);
        }
        auto it = std::find(s.class_names.begin(), s.class_names.end(), cc.first);
        if (it == s.class_names.end()) throw Error("unknown condition '" + cc.first + "' in LAPE summary");
        s.per_layer.back()[static_cast<std::size_t>(it - s.class_names.begin())] = cc.second;
    }
    return s;
}

inline nlohmann::json to_json(const LapeSummary& s) {
    nlohmann::json totals = nlohmann::json::object();
    for (std::size_t c = 0; c < s.class_names.size(); ++c) totals[s.class_names[c]] = s.totals[c];
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
        nlohmann::json counts = nlohmann::json::object();
        for (std::size_t c = 0; c < s.class_names.size(); ++c) counts[s.class_names[c]] = s.per_layer[l][c];
        layers.push_back({{"layer", s.layers[l]}, {"counts", counts}});
    }
    return {{"params", to_json(s.params)}, {"conditions", s.class_names}, {"totals", totals}, {"per_layer", layers}};
}

}  // namespace uvprobe::lape
