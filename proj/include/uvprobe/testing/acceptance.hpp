#pragma once
// The acceptance criteria as callable checks. Shared by the `acceptance`
// test binary and `probe-cli selfcheck`; each check generates its own data.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "uvprobe/commands.hpp"
#include "uvprobe/conllu.hpp"
#include "uvprobe/embed_store.hpp"
#include "uvprobe/lape.hpp"
#include "uvprobe/probe.hpp"
#include "uvprobe/synthetic.hpp"
#include "uvprobe/testing/oracles.hpp"

namespace uvprobe::acceptance {

namespace fs = std::filesystem;

struct Outcome {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

inline std::string line(const Outcome& o) {
    std::ostringstream s;
    s << (o.passed ? "PASS" : "FAIL") << "  " << o.name << "  (" << o.detail << "; "
      << std::round(o.seconds * 100) / 100 << " s)";
    return s.str();
}

namespace detail {

template <typename F>
Outcome timed(std::string name, F&& body) {
    Outcome o;
    o.name = std::move(name);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.passed = false;
        o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

inline store::TokenIndex index_of_size(std::size_t n) {
    store::TokenIndex idx;
    for (std::size_t i = 0; i < n; ++i)
        idx.records.push_back({"xx", "s" + std::to_string(i / 10), static_cast<std::uint32_t>(i % 10 + 1)});
    return idx;
}

}  // namespace detail

// 10K vectors, d = 32, label = [x0 > 0]: i_hat >= 0.95; permuted: <= 0.05; < 60 s.
inline Outcome synthetic_usable_information() {
    return detail::timed("synthetic usable-information oracle", [](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto cfg = oracle::synthetic_probe_config();
        auto data = oracle::threshold_dataset(10000, 32, 2024);
        auto sep = probe::usable_information(data, cfg);
        auto perm = probe::usable_information(oracle::permuted_labels(data, 99), cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.passed = sep.i_hat_defined && perm.i_hat_defined && sep.i_hat >= 0.95 && perm.i_hat <= 0.05 &&
                   secs < 60.0;
        o.detail = "separable i_hat=" + detail::fmt(sep.i_hat) + " (>= 0.95), permuted i_hat=" +
                   detail::fmt(perm.i_hat) + " (<= 0.05), " + detail::fmt(secs) + " s (< 60 s)";
    });
}

// Analytic vs central-difference gradients, 100 instances per family, <= 1e-4.
inline Outcome gradient_correctness() {
    return detail::timed("gradient correctness", [](Outcome& o) {
        Rng rng(77);
        double worst = 0.0;
        for (auto family : {probe::Family::Linear, probe::Family::MLP1})
            for (int i = 0; i < 100; ++i) {
                auto g = oracle::random_grad_instance(rng, family);
                auto analytic = probe::probe_loss_and_grad(g.model, g.view(), g.y, g.idx, g.l2).grad;
                auto numeric = oracle::finite_difference_grad(g.model, g.view(), g.y, g.idx, g.l2);
                worst = std::max(worst, oracle::relative_error(analytic, numeric));
            }
        o.passed = worst <= 1e-4;
        o.detail = "max relative error " + detail::fmt(worst) + " over 200 instances (<= 1e-4)";
    });
}

// plugin_entropy and lape_score against ln 2, ln 3 and 1.5 ln 2 to 1e-9.
inline Outcome entropy_exactness() {
    return detail::timed("entropy exactness", [](Outcome& o) {
        struct Case {
            std::vector<std::size_t> counts;
            std::vector<double> row;
            double expected;
        };
        const std::vector<Case> cases = {{{4, 4}, {0.3, 0.3}, std::log(2.0)},
                                         {{5, 5, 5}, {0.2, 0.2, 0.2}, std::log(3.0)},
                                         {{2, 1, 1}, {0.4, 0.2, 0.2}, 1.039720770839918}};
        double worst = 0.0;
        for (const auto& c : cases) {
            worst = std::max(worst, std::abs(conllu::plugin_entropy_from_counts(c.counts) - c.expected));
            const auto s = lape::lape_score(c.row);
            worst = std::max(worst, s ? std::abs(*s - c.expected) : 1.0);
        }
        // the rounded literal quoted for the three-class case
        const bool literal = std::abs(1.5 * std::log(2.0) - 1.039721) < 5e-7;
        o.passed = worst <= 1e-9 && literal;
        o.detail = "max abs error " + detail::fmt(worst) + " (<= 1e-9)";
    });
}

// 200 random instances against counting and sorting oracles, exact equality.
inline Outcome lape_brute_force() {
    return detail::timed("LAPE brute-force equivalence", [](Outcome& o) {
        Rng rng(4242);
        std::size_t mismatches = 0, elements = 0;
        for (int trial = 0; trial < 200; ++trial) {
            auto in = oracle::random_lape_instance(rng, 64, 6, 500);
            const double tau = rng.below(2) ? 0.0 : rng.normal();
            std::vector<lape::ActivationProfile> profiles;
            std::vector<std::vector<std::vector<double>>> brute;
            for (std::size_t l = 0; l < in.n_layers; ++l) {
                auto ds = store::AlignedDataset::from_dense(in.layers[l], in.d, in.labels, in.class_names);
                ds.layer = l;
                profiles.push_back(lape::activation_probabilities(ds, tau));
                brute.push_back(oracle::brute_activation_probs(in.layers[l], in.d, in.labels, in.C, tau));
                for (std::size_t j = 0; j < in.d; ++j) {
                    const auto row = profiles.back().row(j);
                    if (!std::equal(row.begin(), row.end(), brute.back()[j].begin())) ++mismatches;
                    if (lape::lape_score(row) != oracle::brute_entropy(brute.back()[j])) ++mismatches;
                }
            }
            const double q = 0.5 + 20.0 * rng.uniform();
            const double p_min = 0.01 + 0.3 * rng.uniform();
            auto sel = lape::select_selective_elements(profiles, q, p_min);
            auto expected = oracle::brute_select(brute, q, p_min);
            for (std::size_t k = 0; k < sel.records.size(); ++k) {
                ++elements;
                if (sel.records[k].selected != expected.selected[k] ||
                    sel.records[k].assigned != expected.assigned[k])
                    ++mismatches;
            }
        }
        o.passed = mismatches == 0;
        o.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(elements) + " elements";
    });
}

// 100 random tensors round-trip bit-identically; corrupted headers rejected.
inline Outcome format_round_trip(const fs::path& scratch) {
    return detail::timed("EMBS format round-trip", [&](Outcome& o) {
        fs::create_directories(scratch);
        const auto path = scratch / "rt.embs";
        Rng rng(31337);
        std::size_t bad = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto L = static_cast<std::uint16_t>(1 + rng.below(13));
            const auto d = static_cast<std::uint16_t>(1 + rng.below(64));
            const std::size_t n = 1 + rng.below(200);
            std::vector<std::vector<float>> layers(L, std::vector<float>(n * d));
            std::vector<store::MatrixView> views;
            for (auto& m : layers) {
                for (auto& v : m) {
                    // raw bit patterns, including subnormals and signed zeros
                    std::uint32_t bits = static_cast<std::uint32_t>(rng.next());
                    if ((bits & 0x7f800000u) == 0x7f800000u) bits &= 0xbfffffffu;  // avoid NaN/Inf payloads
                    std::memcpy(&v, &bits, 4);
                }
                views.push_back({m.data(), n, d});
            }
            store::StoreHeader h;
            h.n_layers = L;
            h.dim = d;
            h.n_tokens = n;
            const auto idx = detail::index_of_size(n);
            store::write_store(h, views, idx, path);
            auto s = store::open_store(path);
            if (s->n_layers() != L || s->dim() != d || s->n_tokens() != n || s->index().records != idx.records) {
                ++bad;
                continue;
            }
            for (std::size_t l = 0; l < L; ++l)
                if (std::memcmp(s->layer_matrix(l).data, layers[l].data(), n * d * 4) != 0) ++bad;
        }

        // corrupted headers
        std::vector<float> m = {1, 2, 3, 4, 5, 6};
        store::StoreHeader h;
        h.n_layers = 1;
        h.dim = 3;
        h.n_tokens = 2;
        store::MatrixView v[] = {{m.data(), 2, 3}};
        store::write_store(h, v, detail::index_of_size(2), path);
        const auto good = read_file(path);
        auto rejects = [&](std::string bytes, const std::string& needle) {
            write_file(path, bytes);
            try {
                store::open_store(path);
            } catch (const FormatError& e) {
                return std::string(e.what()).find(needle) != std::string::npos;
            }
            return false;
        };
        auto magic = good;
        magic[0] = 'X';
        auto version = good;
        version[4] = 2;
        std::size_t rejected = 0;
        rejected += rejects(magic, "bad magic");
        rejected += rejects(version, "unsupported EMBS version 2");
        rejected += rejects(good.substr(0, good.size() - 4), "size mismatch: expected 44");
        rejected += rejects(good + "xxxx", "size mismatch");
        rejected += rejects(good.substr(0, 12), "size mismatch");
        o.passed = bad == 0 && rejected == 5;
        o.detail = std::to_string(100 - bad) + "/100 tensors identical, " + std::to_string(rejected) +
                   "/5 corruptions rejected";
    });
}

// Two in-process runs on the synthetic workspace; CSV and SVG bytes compared.
inline Outcome determinism_in_process(const fs::path& scratch) {
    return detail::timed("determinism (synthetic run twice)", [&](Outcome& o) {
        auto ws = synthetic::write_workspace(scratch / "ws");
        std::ostringstream sink;
        int codes = 0;
        for (const char* out : {"run1", "run2"}) {
            commands::Overrides ov;
            ov.out = scratch / out;
            codes |= commands::pipeline("run", ws.config, ov, sink, sink);
        }
        std::size_t compared = 0, differing = 0;
        for (const auto& rel : report::files_under(scratch / "run1")) {
            const auto ext = fs::path(rel).extension();
            if (ext != ".csv" && ext != ".svg") continue;
            ++compared;
            const auto other = scratch / "run2" / rel;
            if (!fs::exists(other) || read_file(scratch / "run1" / rel) != read_file(other)) ++differing;
        }
        o.passed = codes == 0 && compared > 0 && differing == 0;
        o.detail = std::to_string(compared) + " CSV/SVG files compared, " + std::to_string(differing) +
                   " differ, exit codes " + (codes == 0 ? "0" : "nonzero");
    });
}

}  // namespace uvprobe::acceptance
