#pragma once
// Variational usable information probes.
//
// The numerator of the normalized score is a difference of two held-out
// cross-entropies: the smoothed class prior (the input-free predictor) and
// a softmax probe trained on the representation. The plugin entropy of all
// labels is only used as the normalizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvprobe/conllu.hpp"
#include "uvprobe/embed_store.hpp"
#include "uvprobe/error.hpp"
#include "uvprobe/format.hpp"
#include "uvprobe/rng.hpp"

namespace uvprobe::probe {

using store::AlignedDataset;
using store::MatrixView;

// ===========================================================================
// Configuration
// ===========================================================================

enum class Family : std::uint8_t { Linear, MLP1 };

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct ProbeConfig {
    Family family = Family::Linear;
    std::size_t hidden = 128;  // MLP1 only
    AdamConfig adam;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    double l2 = 1e-5;
    double split_ratio = 0.8;
    std::uint64_t seed = 42;

    void validate() const {
        if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
        if (family == Family::MLP1 && hidden < 1) throw ConfigError("MLP1 hidden size must be >= 1");
        if (!(adam.step_size > 0.0)) throw ConfigError("step_size must be > 0");
        if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
    }
};

inline nlohmann::json to_json(const ProbeConfig& c) {
    return {{"family", c.family == Family::Linear ? "Linear" : "MLP1"},
            {"hidden", c.hidden},
            {"step_size", c.adam.step_size},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"l2", c.l2},
            {"split_ratio", c.split_ratio},
            {"seed", c.seed}};
}

// Missing keys keep their defaults.
inline ProbeConfig probe_config_from_json(const nlohmann::json& j) {
    ProbeConfig c;
    if (j.contains("family")) {
        auto f = j.at("family").get<std::string>();
        if (f == "Linear")
            c.family = Family::Linear;
        else if (f == "MLP1")
            c.family = Family::MLP1;
        else
            throw ConfigError("unknown probe family '" + f + "'");
    }
    c.hidden = j.value("hidden", c.hidden);
    c.adam.step_size = j.value("step_size", c.adam.step_size);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.l2 = j.value("l2", c.l2);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

// ===========================================================================
// Models
// ===========================================================================

// Softmax probe. All parameters live in one flat vector so the optimizer
// and the gradient check can treat both families uniformly.
//   Linear: W[C x d] | b[C]
//   MLP1:   W1[h x d] | b1[h] | W2[C x h] | b2[C], tanh hidden units
class ProbeModel {
public:
    ProbeModel() = default;
    ProbeModel(Family family, std::size_t dim, std::size_t classes, std::size_t hidden = 0)
        : family_(family), dim_(dim), classes_(classes), hidden_(family == Family::MLP1 ? hidden : 0) {
        params_.assign(num_params(), 0.0);
    }

    Family family() const { return family_; }
    std::size_t dim() const { return dim_; }
    std::size_t num_classes() const { return classes_; }
    std::size_t hidden() const { return hidden_; }

    std::size_t num_params() const {
        if (family_ == Family::Linear) return classes_ * dim_ + classes_;
        return hidden_ * dim_ + hidden_ + classes_ * hidden_ + classes_;
    }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    // Offsets into params().
    std::size_t out_weights() const { return family_ == Family::Linear ? 0 : hidden_ * dim_ + hidden_; }
    std::size_t out_bias() const { return out_weights() + classes_ * width(); }
    std::size_t in_weights() const { return 0; }
    std::size_t in_bias() const { return hidden_ * dim_; }
    // Input width of the output layer.
    std::size_t width() const { return family_ == Family::Linear ? dim_ : hidden_; }

    bool is_penalized(std::size_t p) const {
        if (family_ == Family::Linear) return p < classes_ * dim_;
        return p < hidden_ * dim_ || (p >= out_weights() && p < out_bias());
    }

    void init_random(Rng& rng) {
        std::fill(params_.begin(), params_.end(), 0.0);
        if (family_ != Family::MLP1) return;
        const double s1 = std::sqrt(2.0 / static_cast<double>(dim_ + hidden_));
        for (std::size_t i = 0; i < hidden_ * dim_; ++i) params_[i] = s1 * rng.normal();
        const double s2 = std::sqrt(2.0 / static_cast<double>(hidden_ + classes_));
        for (std::size_t i = 0; i < classes_ * hidden_; ++i) params_[out_weights() + i] = s2 * rng.normal();
    }

    // Hidden activations (MLP1) or a copy of x (Linear).
    void features(std::span<const float> x, std::vector<double>& out) const {
        out.resize(width());
        if (family_ == Family::Linear) {
            for (std::size_t j = 0; j < dim_; ++j) out[j] = x[j];
            return;
        }
        const double* w1 = params_.data();
        const double* b1 = params_.data() + in_bias();
        for (std::size_t k = 0; k < hidden_; ++k) {
            double a = b1[k];
            const double* row = w1 + k * dim_;
            for (std::size_t j = 0; j < dim_; ++j) a += row[j] * x[j];
            out[k] = std::tanh(a);
        }
    }

    // Log-softmax over classes given features().
    void log_probs_from_features(std::span<const double> f, std::vector<double>& out) const {
        out.resize(classes_);
        const double* w = params_.data() + out_weights();
        const double* b = params_.data() + out_bias();
        const std::size_t n = width();
        for (std::size_t c = 0; c < classes_; ++c) {
            double z = b[c];
            const double* row = w + c * n;
            for (std::size_t j = 0; j < n; ++j) z += row[j] * f[j];
            out[c] = z;
        }
        const double mx = *std::max_element(out.begin(), out.end());
        double s = 0.0;
        for (double z : out) s += std::exp(z - mx);
        const double lse = mx + std::log(s);
        for (double& z : out) z -= lse;
    }

    // Class probabilities for a raw input vector; the fitted standardization
    // is applied first when present.
    std::vector<double> predict(std::span<const float> x) const {
        std::vector<double> f, lp;
        if (!mean.empty()) {
            std::vector<float> z(dim_);
            for (std::size_t j = 0; j < dim_; ++j) z[j] = static_cast<float>((x[j] - mean[j]) * inv_std[j]);
            features(z, f);
        } else {
            features(x, f);
        }
        log_probs_from_features(f, lp);
        for (double& v : lp) v = std::exp(v);
        return lp;
    }

    double weight_norm_sq() const {
        double s = 0.0;
        for (std::size_t p = 0; p < params_.size(); ++p)
            if (is_penalized(p)) s += params_[p] * params_[p];
        return s;
    }

    std::vector<std::string> class_names;
    // Per-dimension standardization fitted on the training split.
    std::vector<double> mean;
    std::vector<double> inv_std;

private:
    Family family_ = Family::Linear;
    std::size_t dim_ = 0;
    std::size_t classes_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
};

// Input-free predictor: add-one smoothed training frequencies.
struct NullModel {
    std::vector<double> log_probs;

    static NullModel fit(std::span<const std::uint32_t> train_labels, std::size_t num_classes) {
        std::vector<double> counts(num_classes, 1.0);
        for (auto y : train_labels) counts[y] += 1.0;
        const double total = static_cast<double>(train_labels.size() + num_classes);
        NullModel m;
        m.log_probs.resize(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) m.log_probs[c] = std::log(counts[c] / total);
        return m;
    }

    double cross_entropy(std::span<const std::uint32_t> labels) const {
        double s = 0.0;
        for (auto y : labels) s -= log_probs[y];
        return labels.empty() ? 0.0 : s / static_cast<double>(labels.size());
    }
};

// ===========================================================================
// Loss and gradient
// ===========================================================================

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean negative log-likelihood over the rows `idx` of x plus l2 * |W|^2 / 2.
inline LossAndGrad probe_loss_and_grad(const ProbeModel& model, const MatrixView& x,
                                       std::span<const std::uint32_t> y, std::span<const std::size_t> idx,
                                       double l2, std::size_t batch_id = 0) {
    if (idx.empty()) throw EmptyDatasetError("empty batch");
    if (x.cols != model.dim()) throw Error("feature dimension mismatch");
    LossAndGrad out;
    out.grad.assign(model.num_params(), 0.0);
    const auto params = model.params();
    const std::size_t C = model.num_classes();
    const std::size_t W = model.width();
    const std::size_t d = model.dim();
    const std::size_t ow = model.out_weights();
    const std::size_t ob = model.out_bias();
    const double inv_n = 1.0 / static_cast<double>(idx.size());

    std::vector<double> f, lp, gz(C), gh;
    double nll = 0.0;
    for (std::size_t i : idx) {
        const auto xi = x.row(i);
        model.features(xi, f);
        model.log_probs_from_features(f, lp);
        const std::uint32_t yi = y[i];
        if (!std::isfinite(lp[yi]))
            throw NumericError("non-finite activations in batch " + std::to_string(batch_id));
        nll -= lp[yi];
        for (std::size_t c = 0; c < C; ++c) gz[c] = (std::exp(lp[c]) - (c == yi ? 1.0 : 0.0)) * inv_n;
        for (std::size_t c = 0; c < C; ++c) {
            double* g = out.grad.data() + ow + c * W;
            for (std::size_t j = 0; j < W; ++j) g[j] += gz[c] * f[j];
            out.grad[ob + c] += gz[c];
        }
        if (model.family() == Family::MLP1) {
            gh.assign(W, 0.0);
            for (std::size_t c = 0; c < C; ++c) {
                const double* w2 = params.data() + ow + c * W;
                for (std::size_t k = 0; k < W; ++k) gh[k] += gz[c] * w2[k];
            }
            for (std::size_t k = 0; k < W; ++k) {
                const double ga = gh[k] * (1.0 - f[k] * f[k]);
                double* g1 = out.grad.data() + k * d;
                for (std::size_t j = 0; j < d; ++j) g1[j] += ga * xi[j];
                out.grad[model.in_bias() + k] += ga;
            }
        }
    }
    out.loss = nll * inv_n;
    if (l2 > 0.0) {
        out.loss += 0.5 * l2 * model.weight_norm_sq();
        for (std::size_t p = 0; p < params.size(); ++p)
            if (model.is_penalized(p)) out.grad[p] += l2 * params[p];
    }
    if (!std::isfinite(out.loss)) throw NumericError("non-finite loss in batch " + std::to_string(batch_id));
    return out;
}

// Mean -ln p(y|x) over all rows, no penalty.
inline double cross_entropy(const ProbeModel& model, const MatrixView& x, std::span<const std::uint32_t> y) {
    std::vector<double> f, lp;
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        model.features(x.row(i), f);
        model.log_probs_from_features(f, lp);
        s -= lp[y[i]];
    }
    return x.rows ? s / static_cast<double>(x.rows) : 0.0;
}

// ===========================================================================
// Optimizer
// ===========================================================================

class Adam {
public:
    Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mh = m_[i] / c1;
            const double vh = v_[i] / c2;
            params[i] -= cfg_.step_size * mh / (std::sqrt(vh) + cfg_.epsilon);
        }
    }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

// ===========================================================================
// Splitting
// ===========================================================================

struct Split {
    AlignedDataset train;
    AlignedDataset eval;
    bool stratified = true;
};

namespace detail {

inline AlignedDataset subset(const AlignedDataset& d, std::span<const std::size_t> idx) {
    AlignedDataset out;
    out.owner = d.owner;
    out.matrix = d.matrix;
    out.class_names = d.class_names;
    out.layer = d.layer;
    out.rows.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (auto i : idx) {
        out.rows.push_back(d.rows[i]);
        out.labels.push_back(d.labels[i]);
    }
    return out;
}

}  // namespace detail

// Deterministic shuffled split, stratified by class whenever every class with
// two or more examples can be placed in both halves.
inline Split split_dataset(const AlignedDataset& dataset, double ratio, std::uint64_t seed) {
    const std::size_t n = dataset.size();
    if (n < 2) throw EmptyDatasetError("need at least 2 examples to split, got " + std::to_string(n));
    if (dataset.num_classes() < 1) throw EmptyDatasetError("dataset has no classes");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");

    Rng rng(seed);
    const std::size_t C = dataset.num_classes();
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t i = 0; i < n; ++i) by_class[dataset.labels[i]].push_back(i);
    for (auto& members : by_class) rng.shuffle(std::span<std::size_t>(members));

    const auto target = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))), 1, n - 1);
    std::size_t multi = 0, singles = 0;
    for (const auto& m : by_class) {
        if (m.size() >= 2) ++multi;
        else if (m.size() == 1) ++singles;
    }

    std::vector<std::size_t> train_idx, eval_idx;
    Split out;
    if (target >= multi + singles && n - target >= multi) {
        // Largest-remainder allocation of the train quota, each class with
        // >= 2 members keeping at least one example on each side.
        std::vector<std::size_t> take(C, 0), lo(C, 0), hi(C, 0);
        std::vector<double> frac(C, 0.0);
        std::size_t total = 0;
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t nc = by_class[c].size();
            if (nc == 0) continue;
            lo[c] = 1;
            hi[c] = nc >= 2 ? nc - 1 : 1;
            const double q = ratio * static_cast<double>(nc);
            take[c] = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(q)), lo[c], hi[c]);
            frac[c] = q - std::floor(q);
            total += take[c];
        }
        std::vector<std::size_t> order(C);
        for (std::size_t c = 0; c < C; ++c) order[c] = c;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
        while (total < target) {
            for (auto c : order)
                if (total < target && take[c] < hi[c]) ++take[c], ++total;
        }
        while (total > target) {
            for (auto it = order.rbegin(); it != order.rend(); ++it)
                if (total > target && take[*it] > lo[*it]) --take[*it], --total;
        }
        for (std::size_t c = 0; c < C; ++c) {
            const auto& m = by_class[c];
            train_idx.insert(train_idx.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take[c]));
            eval_idx.insert(eval_idx.end(), m.begin() + static_cast<std::ptrdiff_t>(take[c]), m.end());
        }
    } else {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        rng.shuffle(std::span<std::size_t>(all));
        train_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(target));
        eval_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(target), all.end());
        out.stratified = false;
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(eval_idx.begin(), eval_idx.end());
    out.train = detail::subset(dataset, train_idx);
    out.eval = detail::subset(dataset, eval_idx);
    return out;
}

// ===========================================================================
// Training
// ===========================================================================

// Standardized copy of a dataset's vectors.
struct DenseFeatures {
    std::vector<float> data;
    MatrixView view() const { return {data.data(), rows, cols}; }
    std::size_t rows = 0;
    std::size_t cols = 0;
};

inline void fit_standardizer(const AlignedDataset& train, ProbeModel& model) {
    const std::size_t d = train.dim();
    model.mean.assign(d, 0.0);
    model.inv_std.assign(d, 1.0);
    const double n = static_cast<double>(train.size());
    std::vector<double> sq(d, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto v = train.vector(i);
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += v[j];
    }
    for (auto& m : model.mean) m /= n;
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto v = train.vector(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = v[j] - model.mean[j];
            sq[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) model.inv_std[j] = 1.0 / std::sqrt(std::max(sq[j] / n, 1e-8));
}

inline DenseFeatures standardize(const AlignedDataset& d, const ProbeModel& model) {
    DenseFeatures out;
    out.rows = d.size();
    out.cols = d.dim();
    out.data.resize(out.rows * out.cols);
    for (std::size_t i = 0; i < out.rows; ++i) {
        auto v = d.vector(i);
        float* dst = out.data.data() + i * out.cols;
        for (std::size_t j = 0; j < out.cols; ++j)
            dst[j] = static_cast<float>((v[j] - model.mean[j]) * model.inv_std[j]);
    }
    return out;
}

struct FitResult {
    ProbeModel model;
    double h_cond = 0.0;
    bool degenerate = false;
    std::size_t best_epoch = 0;
    std::vector<double> eval_trace;  // eval cross-entropy per epoch
};

inline constexpr double kDivergenceNats = 50.0;

inline FitResult fit_probe(const AlignedDataset& train, const AlignedDataset& eval, const ProbeConfig& config) {
    config.validate();
    if (train.size() == 0 || eval.size() == 0) throw EmptyDatasetError("empty train or eval split");
    if (train.class_names != eval.class_names)
        throw Error("train and eval splits do not share a class vocabulary");
    if (train.dim() != eval.dim()) throw Error("train and eval splits differ in dimension");

    FitResult out;
    const std::size_t C = train.num_classes();
    out.model = ProbeModel(config.family, train.dim(), C, config.hidden);
    out.model.class_names = train.class_names;
    fit_standardizer(train, out.model);

    const bool one_class = std::all_of(train.labels.begin(), train.labels.end(),
                                       [&](auto y) { return y == train.labels.front(); });
    if (one_class) {
        out.degenerate = true;
        out.h_cond = 0.0;
        return out;
    }

    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    out.model.init_random(rng);
    const auto xtr = standardize(train, out.model);
    const auto xev = standardize(eval, out.model);

    ProbeModel best = out.model;
    double best_ce = std::numeric_limits<double>::infinity();
    Adam adam(out.model.num_params(), config.adam);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto trace_text = [&] {
        std::string s;
        for (std::size_t e = 0; e < out.eval_trace.size(); ++e)
            s += "epoch " + std::to_string(e + 1) + ": " + format_double(out.eval_trace[e]) + "\n";
        return s;
    };

    std::size_t since_best = 0;
    std::size_t batch_id = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto len = std::min(config.batch_size, order.size() - start);
            auto lg = probe_loss_and_grad(out.model, xtr.view(), train.labels,
                                          std::span<const std::size_t>(order).subspan(start, len), config.l2,
                                          batch_id++);
            adam.step(out.model.params(), lg.grad);
        }
        const double ce = cross_entropy(out.model, xev.view(), eval.labels);
        out.eval_trace.push_back(ce);
        if (!std::isfinite(ce) || ce > kDivergenceNats)
            throw TrainingError("probe diverged at epoch " + std::to_string(epoch) + " (eval loss " +
                                    format_double(ce) + " nats)",
                                trace_text());
        if (ce < best_ce) {
            best_ce = ce;
            best = out.model;
            out.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    out.model = std::move(best);
    out.h_cond = best_ce;
    return out;
}

// ===========================================================================
// Usable information
// ===========================================================================

struct UsableInfoResult {
    std::string task;
    std::string language;
    std::size_t layer = 0;
    double h_prior = 0.0;
    double h_cond = 0.0;
    double h_marginal = 0.0;
    double i_v = 0.0;
    double i_hat = 0.0;
    bool i_hat_defined = true;
    std::size_t n_train = 0;
    std::size_t n_eval = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> flags;

    bool has_flag(std::string_view f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

inline constexpr double kMarginalFloor = 1e-9;

inline UsableInfoResult usable_information(const AlignedDataset& dataset, const ProbeConfig& config,
                                           std::string task = {}, std::string language = {}) {
    UsableInfoResult r;
    r.task = std::move(task);
    r.language = std::move(language);
    r.layer = dataset.layer;
    r.seed = config.seed;

    std::vector<std::size_t> counts(dataset.num_classes(), 0);
    for (auto y : dataset.labels) ++counts[y];
    r.h_marginal = conllu::plugin_entropy_from_counts(counts);

    auto split = split_dataset(dataset, config.split_ratio, config.seed);
    if (!split.stratified) r.flags.emplace_back("unstratified");
    r.n_train = split.train.size();
    r.n_eval = split.eval.size();

    const auto null_model = NullModel::fit(split.train.labels, dataset.num_classes());
    r.h_prior = null_model.cross_entropy(split.eval.labels);

    auto fit = fit_probe(split.train, split.eval, config);
    if (fit.degenerate) r.flags.emplace_back("degenerate");
    r.h_cond = fit.h_cond;
    r.i_v = r.h_prior - r.h_cond;
    if (r.h_marginal < kMarginalFloor) {
        r.i_hat_defined = false;
        r.i_hat = std::nan("");
        r.flags.emplace_back("undefined_i_hat");
    } else {
        r.i_hat = std::clamp(r.i_v / r.h_marginal, 0.0, 1.0);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr std::string_view kResultCsvHeader =
    "task,language,layer,h_prior,h_cond,h_marginal,i_v,i_hat,n_train,n_eval,seed,flags";

inline std::string to_csv_row(const UsableInfoResult& r) {
    return r.task + "," + r.language + "," + std::to_string(r.layer) + "," + format_double(r.h_prior) + "," +
           format_double(r.h_cond) + "," + format_double(r.h_marginal) + "," + format_double(r.i_v) + "," +
           (r.i_hat_defined ? format_double(r.i_hat) : std::string("NA")) + "," + std::to_string(r.n_train) +
           "," + std::to_string(r.n_eval) + "," + std::to_string(r.seed) + "," + join(r.flags, ";");
}

inline UsableInfoResult from_csv_row(std::string_view line) {
    auto f = split(line, ',');
    if (f.size() != 12) throw Error("usable-information row needs 12 fields: '" + std::string(line) + "'");
    UsableInfoResult r;
    r.task = f[0];
    r.language = f[1];
    r.layer = std::stoul(f[2]);
    r.h_prior = parse_double(f[3]);
    r.h_cond = parse_double(f[4]);
    r.h_marginal = parse_double(f[5]);
    r.i_v = parse_double(f[6]);
    r.i_hat = parse_double(f[7]);
    r.i_hat_defined = !std::isnan(r.i_hat);
    r.n_train = std::stoul(f[8]);
    r.n_eval = std::stoul(f[9]);
    r.seed = std::stoull(f[10]);
    if (!f[11].empty()) r.flags = split(f[11], ';');
    return r;
}

inline nlohmann::json to_json(const UsableInfoResult& r) {
    nlohmann::json j = {{"task", r.task},       {"language", r.language}, {"layer", r.layer},
                        {"h_prior", r.h_prior}, {"h_cond", r.h_cond},     {"h_marginal", r.h_marginal},
                        {"i_v", r.i_v},         {"n_train", r.n_train},   {"n_eval", r.n_eval},
                        {"seed", r.seed},       {"flags", r.flags}};
    j["i_hat"] = r.i_hat_defined ? nlohmann::json(r.i_hat) : nlohmann::json(nullptr);
    return j;
}

}  // namespace uvprobe::probe
