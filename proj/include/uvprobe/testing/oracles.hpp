#pragma once
// Test-only reference routes. Nothing in the engine includes this header;
// it is shared by the unit tests, the acceptance suite and `selfcheck`.
// Each oracle takes the slow obvious path so that it stays independent of
// the implementation it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvprobe/embed_store.hpp"
#include "uvprobe/probe.hpp"
#include "uvprobe/rng.hpp"

namespace uvprobe::oracle {

// ---------------------------------------------------------------------------
// Synthetic probing data
// ---------------------------------------------------------------------------

// n standard-normal vectors in d dims; label = [x0 > 0].
inline store::AlignedDataset threshold_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> x(n * d);
    std::vector<std::uint32_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x[i * d + j] = static_cast<float>(rng.normal());
        y[i] = x[i * d] > 0.0f ? 1u : 0u;
    }
    return store::AlignedDataset::from_dense(std::move(x), d, std::move(y), {"neg", "pos"});
}

// Same vectors with labels permuted independently of them.
inline store::AlignedDataset permuted_labels(const store::AlignedDataset& d, std::uint64_t seed) {
    auto out = d;
    Rng rng(seed);
    rng.shuffle(std::span<std::uint32_t>(out.labels));
    return out;
}

// Appends `extra` pure-noise dimensions.
inline store::AlignedDataset with_noise_dims(const store::AlignedDataset& d, std::size_t extra, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t dim = d.dim() + extra;
    std::vector<float> x(d.size() * dim);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto v = d.vector(i);
        std::copy(v.begin(), v.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim));
        for (std::size_t j = d.dim(); j < dim; ++j) x[i * dim + j] = static_cast<float>(rng.normal());
    }
    return store::AlignedDataset::from_dense(std::move(x), dim, d.labels, d.class_names);
}

// Probe settings for the synthetic oracles. The separable benchmark needs
// weights far from the origin, which the default step size (1e-3) cannot
// reach within 100 epochs of 8K examples.
inline probe::ProbeConfig synthetic_probe_config() {
    probe::ProbeConfig c;
    c.adam.step_size = 0.01;
    c.batch_size = 32;
    c.max_epochs = 100;
    c.patience = 10;
    return c;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

// Central differences of the loss with step h.
inline std::vector<double> finite_difference_grad(const probe::ProbeModel& model, const store::MatrixView& x,
                                                  std::span<const std::uint32_t> y,
                                                  std::span<const std::size_t> idx, double l2, double h = 1e-4) {
    auto work = model;
    std::vector<double> g(model.num_params());
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double orig = work.params()[p];
        work.params()[p] = orig + h;
        const double up = probe::probe_loss_and_grad(work, x, y, idx, l2).loss;
        work.params()[p] = orig - h;
        const double down = probe::probe_loss_and_grad(work, x, y, idx, l2).loss;
        work.params()[p] = orig;
        g[p] = (up - down) / (2.0 * h);
    }
    return g;
}

// ||a - b|| / max(||a||, ||b||, 1e-8)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

struct GradInstance {
    probe::ProbeModel model;
    std::vector<float> x;
    std::vector<std::uint32_t> y;
    std::vector<std::size_t> idx;
    std::size_t dim = 0;
    double l2 = 0;
    store::MatrixView view() const { return {x.data(), y.size(), dim}; }
};

inline GradInstance random_grad_instance(Rng& rng, probe::Family family) {
    GradInstance g;
    g.dim = 1 + rng.below(8);
    const std::size_t C = 2 + rng.below(4);
    const std::size_t n = 1 + rng.below(12);
    const std::size_t hidden = 1 + rng.below(6);
    g.model = probe::ProbeModel(family, g.dim, C, hidden);
    for (auto& p : g.model.params()) p = 0.5 * rng.normal();
    g.x.resize(n * g.dim);
    for (auto& v : g.x) v = static_cast<float>(rng.normal());
    g.y.resize(n);
    for (auto& v : g.y) v = static_cast<std::uint32_t>(rng.below(C));
    g.idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.idx[i] = i;
    g.l2 = rng.below(2) ? 0.0 : 0.01 * rng.uniform();
    return g;
}

// ---------------------------------------------------------------------------
// LAPE brute force
// ---------------------------------------------------------------------------

struct LapeInstance {
    std::size_t n_layers = 0, d = 0, C = 0, n = 0;
    std::vector<std::vector<float>> layers;  // each n x d
    std::vector<std::uint32_t> labels;       // n, every class present
    std::vector<std::string> class_names;
};

inline LapeInstance random_lape_instance(Rng& rng, std::size_t max_d = 64, std::size_t max_C = 6,
                                         std::size_t max_n = 500) {
    LapeInstance in;
    in.n_layers = 1 + rng.below(3);
    in.d = 1 + rng.below(max_d);
    in.C = 2 + rng.below(max_C - 1);
    in.n = in.C + rng.below(max_n - in.C + 1);
    for (std::size_t c = 0; c < in.C; ++c) in.class_names.push_back("c" + std::to_string(c));
    in.labels.resize(in.n);
    for (std::size_t i = 0; i < in.n; ++i) in.labels[i] = static_cast<std::uint32_t>(i < in.C ? i : rng.below(in.C));
    // per-(element, condition) biases make some elements selective
    in.layers.assign(in.n_layers, std::vector<float>(in.n * in.d));
    for (auto& layer : in.layers) {
        std::vector<double> bias(in.d * in.C);
        for (auto& b : bias) b = rng.uniform() < 0.3 ? 2.0 * rng.normal() : -3.0 + rng.normal();
        for (std::size_t i = 0; i < in.n; ++i)
            for (std::size_t j = 0; j < in.d; ++j)
                layer[i * in.d + j] = static_cast<float>(bias[j * in.C + in.labels[i]] + rng.normal());
    }
    return in;
}

// probs[j][c] by explicit per-condition counting.
inline std::vector<std::vector<double>> brute_activation_probs(const std::vector<float>& layer, std::size_t d,
                                                               const std::vector<std::uint32_t>& labels,
                                                               std::size_t C, double tau) {
    std::vector<std::vector<double>> probs(d, std::vector<double>(C, 0.0));
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) members.push_back(i);
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t hits = 0;
            for (auto i : members)
                if (layer[i * d + j] > tau) ++hits;
            probs[j][c] = static_cast<double>(hits) / static_cast<double>(members.size());
        }
    }
    return probs;
}

// Row entropy in canonical (ascending) term order.
inline std::optional<double> brute_entropy(std::vector<double> row) {
    std::sort(row.begin(), row.end());
    double s = 0;
    for (double v : row) s += v;
    if (s == 0) return std::nullopt;
    double h = 0;
    for (double v : row)
        if (v > 0) h -= (v / s) * std::log(v / s);
    return std::max(h, 0.0);
}

struct BruteSelection {
    std::vector<bool> selected;                   // flattened [layer][element]
    std::vector<std::optional<std::uint32_t>> assigned;
};

// Sort active scores, keep the smallest k with k / N >= q / 100 (found by
// scanning), then assign by scanning for the first strict maximum.
inline BruteSelection brute_select(const std::vector<std::vector<std::vector<double>>>& probs_by_layer, double q,
                                   double p_min) {
    struct Item {
        double score;
        std::size_t flat;
    };
    std::vector<Item> active;
    std::vector<std::vector<double>> rows;
    for (const auto& layer : probs_by_layer)
        for (const auto& row : layer) rows.push_back(row);
    for (std::size_t f = 0; f < rows.size(); ++f) {
        double mx = 0;
        for (double v : rows[f]) mx = std::max(mx, v);
        if (mx >= p_min) active.push_back({*brute_entropy(rows[f]), f});
    }
    BruteSelection out;
    out.selected.assign(rows.size(), false);
    out.assigned.assign(rows.size(), std::nullopt);
    if (active.empty()) return out;
    std::sort(active.begin(), active.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
    const std::size_t N = active.size();
    std::size_t k = 1;
    while (k < N && static_cast<double>(k) * 100.0 < q * static_cast<double>(N) - 1e-9 * 100.0) ++k;
    const double cutoff = active[k - 1].score;
    for (const auto& it : active) {
        if (it.score > cutoff) continue;
        out.selected[it.flat] = true;
        std::uint32_t best = 0;
        for (std::uint32_t c = 1; c < rows[it.flat].size(); ++c)
            if (rows[it.flat][c] > rows[it.flat][best]) best = c;
        out.assigned[it.flat] = best;
    }
    return out;
}

}  // namespace uvprobe::oracle
