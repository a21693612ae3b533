#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "screc/backend.hpp"
#include "screc/retrieval.hpp"

namespace screc {

// P(transition) = logistic(z_yes - z_no), evaluated without overflow.
inline double decision_probability(double z_yes, double z_no) {
    if (!std::isfinite(z_yes) || !std::isfinite(z_no))
        throw contract_error("decision logits must be finite");
    const double x = z_yes - z_no;
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct TransitionDecision {
    double z_yes = 0.0;
    double z_no = 0.0;
    double probability = 0.0;
    bool transition = false;
};

inline TransitionDecision decide_transition(double z_yes, double z_no, double tau = 0.5) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw config_error("tau must be in [0, 1]");
    TransitionDecision d;
    d.z_yes = z_yes;
    d.z_no = z_no;
    d.probability = decision_probability(z_yes, z_no);
    d.transition = d.probability >= tau;
    return d;
}

struct GroundingTrace {
    std::vector<ScoredScene> coarse;    // cosine stage, descending
    std::vector<ScoredScene> reranked;  // bilinear scores in coarse order
    std::string grounded_scene_id;
};

// Coarse top-N by cosine, then bilinear argmax. Candidates are visited in
// coarse order and only a strictly larger score displaces the leader, so
// rerank ties resolve to the coarse winner.
inline GroundingTrace ground_target(const VectorIndex& index, Embedder& embedder,
                                    const RerankerParams& params, const std::string& target_text,
                                    int coarse_n = 10) {
    if (index.entries.empty()) throw contract_error("ground_target: empty index");
    GroundingTrace trace;
    const EmbeddingVector query = embedder.embed(target_text);
    trace.coarse = coarse_retrieve(index, query, coarse_n);
    double best = 0.0;
    for (const auto& candidate : trace.coarse) {
        const EmbeddingVector* vec = index.find(candidate.scene_id);
        if (!vec) throw contract_error("ground_target: candidate missing from index");
        const double score = rerank_score(params, query, *vec);
        trace.reranked.push_back({candidate.scene_id, score});
        if (trace.grounded_scene_id.empty() || score > best) {
            best = score;
            trace.grounded_scene_id = candidate.scene_id;
        }
    }
    return trace;
}

struct TransitionOutcome {
    TransitionDecision decision;
    std::string target_profile_text;  // retrieval query only, never shown
    std::string scene_id;             // grounded target, or the current scene
    int retriever_calls = 0;
    GroundingTrace trace;
};

// Runs the decision head and grounds the generated target profile when the
// decision is yes. A no-decision keeps the current scene and must leave the
// retriever untouched; retriever_calls makes that auditable.
inline TransitionOutcome estimate_transition(Backend& backend, const TurnContext& ctx,
                                             const SceneProfile& current_profile,
                                             const VectorIndex& index, Embedder& embedder,
                                             const RerankerParams& params, double tau = 0.5,
                                             int coarse_n = 10) {
    const TransitionInference inference = backend.transition_inference(ctx, current_profile);
    TransitionOutcome outcome;
    outcome.decision = decide_transition(inference.z_yes, inference.z_no, tau);
    outcome.target_profile_text = inference.target_profile_text;
    if (!outcome.decision.transition) {
        outcome.scene_id = current_profile.scene_id;
        return outcome;
    }
    outcome.trace = ground_target(index, embedder, params, inference.target_profile_text, coarse_n);
    outcome.retriever_calls = 1;
    outcome.scene_id = outcome.trace.grounded_scene_id;
    return outcome;
}

}  // namespace screc
