#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "screc/catalog.hpp"
#include "screc/error.hpp"
#include "screc/util.hpp"

namespace screc {

using EmbeddingVector = std::vector<double>;

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual int dimension() const = 0;
};

// Feature-hashing bag of words: tokens land in fnv1a64(token) % d buckets,
// counts are L2-normalised. No vocabulary, no state, stable across runs.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(int dimension = 64) : dimension_(dimension) {
        if (dimension < 1) throw config_error("embedding dimension must be >= 1");
    }

    EmbeddingVector embed(const std::string& text) override {
        const auto tokens = tokenize(text);
        if (tokens.empty()) throw contract_error("cannot embed text without tokens");
        EmbeddingVector v(static_cast<std::size_t>(dimension_), 0.0);
        for (const auto& token : tokens)
            v[fnv1a64(token) % static_cast<uint64_t>(dimension_)] += 1.0;
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }

    int dimension() const override { return dimension_; }

private:
    int dimension_;
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw contract_error("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw contract_error("cosine: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct IndexEntry {
    std::string scene_id;
    EmbeddingVector vector;
};

struct VectorIndex {
    int dimension = 0;
    std::vector<IndexEntry> entries;

    std::size_t size() const { return entries.size(); }

    const EmbeddingVector* find(const std::string& scene_id) const {
        for (const auto& e : entries)
            if (e.scene_id == scene_id) return &e.vector;
        return nullptr;
    }
};

inline VectorIndex build_index(const std::vector<SceneProfile>& profiles, Embedder& embedder) {
    VectorIndex index;
    index.dimension = embedder.dimension();
    for (const auto& profile : profiles) {
        if (index.find(profile.scene_id))
            throw contract_error("duplicate scene in index: " + profile.scene_id);
        index.entries.push_back({profile.scene_id, embedder.embed(profile.canonical_text)});
    }
    return index;
}

inline void save_index(const VectorIndex& index, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw contract_error("cannot write index file: " + path);
    out << "screc-index " << index.dimension << "\n";
    for (const auto& e : index.entries) {
        out << e.scene_id;
        for (double x : e.vector) out << "\t" << format_g17(x);
        out << "\n";
    }
}

inline VectorIndex load_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw contract_error("cannot read index file: " + path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("screc-index ", 0) != 0)
        throw parse_error("index file missing header: " + path);
    VectorIndex index;
    index.dimension = std::atoi(header.c_str() + 12);
    if (index.dimension < 1) throw parse_error("index header has bad dimension: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        IndexEntry entry;
        std::size_t start = 0;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw parse_error("index row without vector: " + line);
        entry.scene_id = line.substr(0, tab);
        start = tab + 1;
        while (start <= line.size()) {
            tab = line.find('\t', start);
            auto stop = tab == std::string::npos ? line.size() : tab;
            entry.vector.push_back(std::strtod(line.c_str() + start, nullptr));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (entry.vector.size() != static_cast<std::size_t>(index.dimension))
            throw parse_error("index row dimension mismatch for " + entry.scene_id);
        index.entries.push_back(std::move(entry));
    }
    return index;
}

struct ScoredScene {
    std::string scene_id;
    double score = 0.0;
};

// Top-N by cosine, descending; equal scores order by ascending scene_id.
inline std::vector<ScoredScene> coarse_retrieve(const VectorIndex& index,
                                                const EmbeddingVector& query, int n) {
    if (n < 1) throw config_error("retrieval depth must be >= 1");
    std::vector<ScoredScene> scored;
    scored.reserve(index.entries.size());
    for (const auto& e : index.entries) scored.push_back({e.scene_id, cosine(query, e.vector)});
    std::sort(scored.begin(), scored.end(), [](const ScoredScene& a, const ScoredScene& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.scene_id < b.scene_id;
    });
    if (scored.size() > static_cast<std::size_t>(n)) scored.resize(static_cast<std::size_t>(n));
    return scored;
}

// Bilinear compatibility f(q, c) = q^T W c + bias over embedded profiles.
struct RerankerParams {
    int dimension = 0;
    std::vector<double> weights;  // row-major d x d
    double bias = 0.0;

    static RerankerParams zero(int dimension) {
        if (dimension < 1) throw config_error("reranker dimension must be >= 1");
        RerankerParams p;
        p.dimension = dimension;
        p.weights.assign(static_cast<std::size_t>(dimension) * dimension, 0.0);
        return p;
    }

    void validate() const {
        if (dimension < 1) throw config_error("reranker dimension must be >= 1");
        if (weights.size() != static_cast<std::size_t>(dimension) * dimension)
            throw config_error("reranker weight matrix has wrong size");
    }
};

inline double rerank_score(const RerankerParams& params, const EmbeddingVector& query,
                           const EmbeddingVector& candidate) {
    params.validate();
    const auto d = static_cast<std::size_t>(params.dimension);
    if (query.size() != d || candidate.size() != d)
        throw contract_error("rerank_score: embedding dimension mismatch");
    double total = params.bias;
    for (std::size_t r = 0; r < d; ++r) {
        if (query[r] == 0.0) continue;
        double row = 0.0;
        for (std::size_t c = 0; c < d; ++c) row += params.weights[r * d + c] * candidate[c];
        total += query[r] * row;
    }
    return total;
}

// One listwise training example: the pool holds every candidate including the
// gold profile at gold_index.
struct RerankExample {
    EmbeddingVector query;
    std::vector<EmbeddingVector> pool;
    std::size_t gold_index = 0;
};

namespace detail {
inline std::vector<double> pool_softmax(const RerankerParams& params, const RerankExample& ex) {
    if (ex.pool.size() < 2) throw contract_error("rerank pool needs at least 2 entries");
    if (ex.gold_index >= ex.pool.size())
        throw contract_error("rerank gold_index outside the pool");
    std::vector<double> scores;
    scores.reserve(ex.pool.size());
    for (const auto& c : ex.pool) scores.push_back(rerank_score(params, ex.query, c));
    const double peak = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - peak);
        sum += s;
    }
    for (double& s : scores) s /= sum;
    return scores;
}
}  // namespace detail

// Negative log-probability of the gold candidate under a softmax over the
// pool scores. With zero parameters this is exactly ln(pool size).
inline double rerank_loss(const RerankerParams& params, const RerankExample& ex) {
    const auto probs = detail::pool_softmax(params, ex);
    return -std::log(probs[ex.gold_index]);
}

struct RerankerGrad {
    std::vector<double> weights;
    double bias = 0.0;
    double loss = 0.0;
};

// Analytic gradient of rerank_loss. The bias shifts every pool score equally,
// so its gradient is identically zero; it is reported for checking.
inline RerankerGrad reranker_grad(const RerankerParams& params, const RerankExample& ex) {
    const auto probs = detail::pool_softmax(params, ex);
    const auto d = static_cast<std::size_t>(params.dimension);
    RerankerGrad grad;
    grad.weights.assign(d * d, 0.0);
    grad.loss = -std::log(probs[ex.gold_index]);
    for (std::size_t j = 0; j < ex.pool.size(); ++j) {
        const double coeff = probs[j] - (j == ex.gold_index ? 1.0 : 0.0);
        grad.bias += coeff;
        for (std::size_t r = 0; r < d; ++r) {
            if (ex.query[r] == 0.0) continue;
            const double qr = coeff * ex.query[r];
            for (std::size_t c = 0; c < d; ++c) grad.weights[r * d + c] += qr * ex.pool[j][c];
        }
    }
    return grad;
}

// Relative error between analytic and central-difference gradients, taken
// over the stacked weight+bias vector. The norm denominator matters: a
// per-component ratio would let difference-quotient rounding noise dominate
// on entries where the pool contributions nearly cancel.
inline double reranker_grad_check(const RerankerParams& params, const RerankExample& ex,
                                  double h = 1e-6) {
    if (h <= 0.0) throw config_error("grad check step must be positive");
    const auto analytic = reranker_grad(params, ex);
    RerankerParams probe = params;
    double diff2 = 0.0, analytic2 = 0.0, numeric2 = 0.0;
    auto accumulate = [&](double a, double n) {
        diff2 += (a - n) * (a - n);
        analytic2 += a * a;
        numeric2 += n * n;
    };
    for (std::size_t i = 0; i < probe.weights.size(); ++i) {
        const double saved = probe.weights[i];
        probe.weights[i] = saved + h;
        const double up = rerank_loss(probe, ex);
        probe.weights[i] = saved - h;
        const double down = rerank_loss(probe, ex);
        probe.weights[i] = saved;
        accumulate(analytic.weights[i], (up - down) / (2.0 * h));
    }
    {
        const double saved = probe.bias;
        probe.bias = saved + h;
        const double up = rerank_loss(probe, ex);
        probe.bias = saved - h;
        const double down = rerank_loss(probe, ex);
        probe.bias = saved;
        accumulate(analytic.bias, (up - down) / (2.0 * h));
    }
    return std::sqrt(diff2) / std::max(1e-8, std::sqrt(analytic2) + std::sqrt(numeric2));
}

struct RerankerTrainConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    uint64_t seed = 1;
    double init_scale = 0.01;  // W ~ uniform(-init_scale, init_scale)

    void validate() const {
        if (learning_rate <= 0.0) throw config_error("learning_rate must be positive");
        if (epochs < 1) throw config_error("epochs must be >= 1");
        if (init_scale < 0.0) throw config_error("init_scale must be >= 0");
    }
};

struct RerankerTrainResult {
    RerankerParams params;
    std::vector<double> trace;  // mean loss before each epoch's update
};

// Full-batch gradient descent on the mean listwise loss. The trace records
// the loss evaluated before each update, so trace.front() is the loss of the
// initial parameters and losses must be non-increasing for small rates.
inline RerankerTrainResult train_reranker(const std::vector<RerankExample>& examples,
                                          int dimension, const RerankerTrainConfig& config) {
    config.validate();
    if (examples.empty()) throw contract_error("train_reranker needs at least one example");
    for (const auto& ex : examples) {
        if (ex.pool.size() < 2) throw contract_error("rerank pool needs at least 2 entries");
        if (ex.query.size() != static_cast<std::size_t>(dimension))
            throw contract_error("train_reranker: example dimension mismatch");
    }
    RerankerTrainResult result;
    result.params = RerankerParams::zero(dimension);
    SplitMix64 rng(config.seed);
    for (double& w : result.params.weights)
        w = rng.uniform_range(-config.init_scale, config.init_scale);
    const double scale = 1.0 / static_cast<double>(examples.size());
    const auto n_weights = result.params.weights.size();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<double> batch(n_weights, 0.0);
        double mean_loss = 0.0;
        for (const auto& ex : examples) {
            const auto grad = reranker_grad(result.params, ex);
            mean_loss += grad.loss * scale;
            for (std::size_t i = 0; i < n_weights; ++i) batch[i] += grad.weights[i] * scale;
        }
        if (!std::isfinite(mean_loss))
            throw divergence_error("training diverged at epoch " + std::to_string(epoch));
        result.trace.push_back(mean_loss);
        for (std::size_t i = 0; i < n_weights; ++i)
            result.params.weights[i] -= config.learning_rate * batch[i];
    }
    return result;
}

inline void save_reranker(const RerankerParams& params, const std::string& path) {
    params.validate();
    std::ofstream out(path);
    if (!out) throw contract_error("cannot write reranker file: " + path);
    const auto d = static_cast<std::size_t>(params.dimension);
    out << "screc-reranker " << params.dimension << "\n";
    out << format_g17(params.bias) << "\n";
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c)
            out << (c ? "\t" : "") << format_g17(params.weights[r * d + c]);
        out << "\n";
    }
}

inline RerankerParams load_reranker(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw contract_error("cannot read reranker file: " + path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("screc-reranker ", 0) != 0)
        throw parse_error("reranker file missing header: " + path);
    RerankerParams params;
    params.dimension = std::atoi(header.c_str() + 15);
    if (params.dimension < 1) throw parse_error("reranker header has bad dimension: " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("reranker file missing bias: " + path);
    params.bias = std::strtod(line.c_str(), nullptr);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto tab = line.find('\t', start);
            params.weights.push_back(std::strtod(line.c_str() + start, nullptr));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
    }
    params.validate();
    return params;
}

}  // namespace screc
