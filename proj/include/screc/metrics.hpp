#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "screc/error.hpp"
#include "screc/util.hpp"

namespace screc {

struct RankingRecord {
    std::vector<std::string> ranked;      // system order, best first
    std::vector<std::string> gold_items;  // non-empty
};

namespace detail {
inline bool is_gold(const RankingRecord& rec, const std::string& id) {
    return std::find(rec.gold_items.begin(), rec.gold_items.end(), id) != rec.gold_items.end();
}

inline void check_rankings(const std::vector<RankingRecord>& records) {
    if (records.empty()) throw metric_error("ranking metric over zero records");
    for (const auto& rec : records)
        if (rec.gold_items.empty()) throw metric_error("ranking record without gold items");
}
}  // namespace detail

// Mean fraction of gold items found in the top k.
inline double recall_at_k(const std::vector<RankingRecord>& records, int k) {
    if (k < 1) throw config_error("k must be >= 1");
    detail::check_rankings(records);
    double total = 0.0;
    for (const auto& rec : records) {
        const auto depth = std::min(rec.ranked.size(), static_cast<std::size_t>(k));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < depth; ++i)
            if (detail::is_gold(rec, rec.ranked[i])) ++hits;
        total += static_cast<double>(hits) / static_cast<double>(rec.gold_items.size());
    }
    return total / static_cast<double>(records.size());
}

// Mean reciprocal rank of the first gold item within the top k, 0 on a miss.
inline double mrr_at_k(const std::vector<RankingRecord>& records, int k) {
    if (k < 1) throw config_error("k must be >= 1");
    detail::check_rankings(records);
    double total = 0.0;
    for (const auto& rec : records) {
        const auto depth = std::min(rec.ranked.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < depth; ++i) {
            if (detail::is_gold(rec, rec.ranked[i])) {
                total += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return total / static_cast<double>(records.size());
}

struct ScoredLabel {
    double score = 0.0;
    bool label = false;
};

// Mann-Whitney AUC via average ranks; tied scores contribute 1/2.
inline double roc_auc(const std::vector<ScoredLabel>& records) {
    std::size_t n_pos = 0;
    for (const auto& r : records) n_pos += r.label ? 1 : 0;
    const std::size_t n_neg = records.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw metric_error("roc_auc needs both positive and negative records");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].score < records[b].score;
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && records[order[j]].score == records[order[i]].score) ++j;
        const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (records[order[t]].label) rank_sum_pos += mean_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct CalibrationBin {
    std::size_t count = 0;
    double mean_score = 0.0;
    double mean_label = 0.0;
};

struct CalibrationCurve {
    std::vector<CalibrationBin> bins;
    double ece = 0.0;
};

// Equal-width bins over [0, 1]; a score of exactly 1 lands in the last bin.
// ECE is the count-weighted mean |confidence - accuracy|.
inline CalibrationCurve calibration(const std::vector<ScoredLabel>& records, int n_bins = 10) {
    if (n_bins < 1) throw config_error("n_bins must be >= 1");
    if (records.empty()) throw metric_error("calibration over zero records");
    CalibrationCurve curve;
    curve.bins.resize(static_cast<std::size_t>(n_bins));
    for (const auto& r : records) {
        if (!(r.score >= 0.0 && r.score <= 1.0))
            throw metric_error("calibration score outside [0, 1]");
        auto b = static_cast<std::size_t>(
            std::min(static_cast<int>(r.score * n_bins), n_bins - 1));
        curve.bins[b].count += 1;
        curve.bins[b].mean_score += r.score;
        curve.bins[b].mean_label += r.label ? 1.0 : 0.0;
    }
    for (auto& bin : curve.bins) {
        if (bin.count == 0) continue;
        bin.mean_score /= static_cast<double>(bin.count);
        bin.mean_label /= static_cast<double>(bin.count);
        curve.ece += static_cast<double>(bin.count) / static_cast<double>(records.size()) *
                     std::fabs(bin.mean_score - bin.mean_label);
    }
    return curve;
}

namespace detail {
inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                            int n) {
    std::map<std::vector<std::string>, int> counts;
    if (tokens.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
    return counts;
}
}  // namespace detail

// Single-order BLEU: clipped n-gram precision times the brevity penalty.
inline double bleu_n(const std::string& candidate, const std::string& reference, int n) {
    if (n < 1) throw config_error("bleu order must be >= 1");
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty()) return 0.0;
    const auto cand_counts = detail::ngram_counts(cand, n);
    const auto ref_counts = detail::ngram_counts(ref, n);
    int total = 0, matched = 0;
    for (const auto& [gram, count] : cand_counts) {
        total += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    if (total == 0) return 0.0;
    const double precision = static_cast<double>(matched) / static_cast<double>(total);
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
    return brevity * precision;
}

// Unigram F1.
inline double rouge_1(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    const auto cand_counts = detail::ngram_counts(cand, 1);
    const auto ref_counts = detail::ngram_counts(ref, 1);
    int overlap = 0;
    for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * p * r / (p + r);
}

// Longest-common-subsequence F measure, 2 * LCS / (len(c) + len(r)).
inline double rouge_l(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    std::vector<std::size_t> prev(ref.size() + 1, 0), curr(ref.size() + 1, 0);
    for (std::size_t i = 1; i <= cand.size(); ++i) {
        for (std::size_t j = 1; j <= ref.size(); ++j) {
            if (cand[i - 1] == ref[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    const double lcs = static_cast<double>(prev[ref.size()]);
    return 2.0 * lcs / static_cast<double>(cand.size() + ref.size());
}

struct StageLatency {
    double transition_ms = 0.0;
    double inference_ms = 0.0;
    double generation_ms = 0.0;
};

struct EvalInputs {
    std::vector<RankingRecord> rankings;
    std::vector<ScoredLabel> decisions;  // transition probability vs gold label
    std::vector<std::pair<std::string, std::string>> responses;  // candidate, reference
    std::vector<StageLatency> latencies;
};

struct MetricReport {
    std::vector<std::pair<std::string, double>> values;  // fixed order
    std::map<std::string, std::size_t> counts;
    std::map<std::string, double> latency_ms;  // stage means, wall clock

    double value(const std::string& name) const {
        for (const auto& [key, v] : values)
            if (key == name) return v;
        throw metric_error("metric not in report: " + name);
    }

    bool has(const std::string& name) const {
        for (const auto& [key, v] : values)
            if (key == name) return true;
        return false;
    }
};

// Aggregates whatever sections are present. AUC needs both decision classes
// and is omitted otherwise; every other metric of a non-empty section is
// always reported.
inline MetricReport evaluate_run(const EvalInputs& inputs) {
    MetricReport report;
    report.counts["rankings"] = inputs.rankings.size();
    report.counts["decisions"] = inputs.decisions.size();
    report.counts["responses"] = inputs.responses.size();
    if (!inputs.rankings.empty()) {
        report.values.emplace_back("R@1", recall_at_k(inputs.rankings, 1));
        report.values.emplace_back("R@3", recall_at_k(inputs.rankings, 3));
        report.values.emplace_back("R@5", recall_at_k(inputs.rankings, 5));
        report.values.emplace_back("MRR@3", mrr_at_k(inputs.rankings, 3));
        report.values.emplace_back("MRR@5", mrr_at_k(inputs.rankings, 5));
    }
    if (!inputs.responses.empty()) {
        double b1 = 0.0, b2 = 0.0, r1 = 0.0, rl = 0.0;
        for (const auto& [cand, ref] : inputs.responses) {
            b1 += bleu_n(cand, ref, 1);
            b2 += bleu_n(cand, ref, 2);
            r1 += rouge_1(cand, ref);
            rl += rouge_l(cand, ref);
        }
        const double n = static_cast<double>(inputs.responses.size());
        report.values.emplace_back("BLEU-1", b1 / n);
        report.values.emplace_back("BLEU-2", b2 / n);
        report.values.emplace_back("ROUGE-1", r1 / n);
        report.values.emplace_back("ROUGE-L", rl / n);
    }
    if (!inputs.decisions.empty()) {
        bool has_pos = false, has_neg = false;
        for (const auto& d : inputs.decisions) (d.label ? has_pos : has_neg) = true;
        if (has_pos && has_neg) report.values.emplace_back("AUC", roc_auc(inputs.decisions));
        report.values.emplace_back("ECE", calibration(inputs.decisions).ece);
    }
    if (!inputs.latencies.empty()) {
        double t = 0.0, f = 0.0, g = 0.0;
        for (const auto& l : inputs.latencies) {
            t += l.transition_ms;
            f += l.inference_ms;
            g += l.generation_ms;
        }
        const double n = static_cast<double>(inputs.latencies.size());
        report.latency_ms["transition"] = t / n;
        report.latency_ms["inference"] = f / n;
        report.latency_ms["generation"] = g / n;
    }
    return report;
}

// Machine-readable form. Latency is wall clock and varies run to run, so it
// is deliberately absent here; fixed-seed runs must serialise identically.
inline nlohmann::ordered_json report_json(const MetricReport& report) {
    nlohmann::ordered_json out;
    auto& metrics = out["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.values) metrics[name] = value;
    auto& counts = out["counts"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.counts) counts[name] = value;
    return out;
}

// Human-readable table, latency included.
inline std::string report_table(const MetricReport& report) {
    std::string out;
    for (const auto& [name, value] : report.values) {
        std::string line = name;
        line.resize(10, ' ');
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", value);
        out += line + buf + "\n";
    }
    for (const auto& [stage, ms] : report.latency_ms) {
        std::string line = stage + " latency";
        line.resize(22, ' ');
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f ms (mean)", ms);
        out += line + buf + "\n";
    }
    for (const auto& [name, value] : report.counts)
        out += name + ": " + std::to_string(value) + "\n";
    return out;
}

}  // namespace screc
