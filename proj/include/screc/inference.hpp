#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "screc/backend.hpp"
#include "screc/catalog.hpp"
#include "screc/dialogue.hpp"
#include <json.hpp>

namespace screc {

struct RecConfig {
    int k = 5;               // recommendation list length
    double epsilon = 1e-9;   // per-turn likelihood floor
    double gamma = 1.0;      // per-turn evidence discount

    void validate() const {
        if (k < 1) throw config_error("k must be >= 1");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw config_error("epsilon must be in (0, 1)");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw config_error("gamma must be in (0, 1]");
    }
};

struct Hypothesis {
    std::string item_id;
    HypothesisPolarity polarity = HypothesisPolarity::like;
};

// Like and dislike hypotheses for each requested item, like first. Ids
// outside the scene are rejected rather than silently dropped.
inline std::vector<Hypothesis> make_hypotheses(const Scene& scene,
                                               const std::vector<std::string>& item_ids = {}) {
    std::vector<std::string> ids = item_ids;
    if (ids.empty())
        for (const auto& item : scene.items) ids.push_back(item.item_id);
    std::vector<Hypothesis> hypotheses;
    hypotheses.reserve(ids.size() * 2);
    for (const auto& id : ids) {
        if (!scene.find_item(id))
            throw contract_error("hypothesis item " + id + " not in scene " + scene.scene_id);
        hypotheses.push_back({id, HypothesisPolarity::like});
        hypotheses.push_back({id, HypothesisPolarity::dislike});
    }
    return hypotheses;
}

// Accumulated evidence for one dialogue grounded in one scene. cum_* hold the
// floored, discounted log-likelihood sums; observed_states is the belief
// context handed to the policy as prior_states on the next turn.
struct InferenceSession {
    std::string scene_id;
    std::vector<Item> items;
    std::map<std::string, double> cum_like;
    std::map<std::string, double> cum_dislike;
    std::map<std::string, std::pair<double, double>> prior;  // (p_like, p_dislike)
    bool has_custom_prior = false;
    std::vector<DialogueState> observed_states;

    const Item* find_item(const std::string& id) const {
        for (const auto& item : items)
            if (item.item_id == id) return &item;
        return nullptr;
    }
};

inline InferenceSession begin_session(const Scene& scene,
                                      const std::vector<std::string>& item_ids = {}) {
    InferenceSession session;
    session.scene_id = scene.scene_id;
    if (item_ids.empty()) {
        session.items = scene.items;
    } else {
        for (const auto& id : item_ids) {
            const Item* item = scene.find_item(id);
            if (!item)
                throw contract_error("session item " + id + " not in scene " + scene.scene_id);
            session.items.push_back(*item);
        }
    }
    if (session.items.empty()) throw contract_error("session needs at least one item");
    for (const auto& item : session.items) {
        session.cum_like[item.item_id] = 0.0;
        session.cum_dislike[item.item_id] = 0.0;
    }
    return session;
}

// Swap the session onto a new scene after a transition: hypotheses and
// accumulators restart, the belief context carries over.
inline void reground_session(InferenceSession& session, const Scene& scene) {
    auto observed = std::move(session.observed_states);
    session = begin_session(scene);
    session.observed_states = std::move(observed);
}

inline void set_prior(InferenceSession& session,
                      const std::map<std::string, std::pair<double, double>>& prior) {
    for (const auto& item : session.items) {
        auto it = prior.find(item.item_id);
        if (it == prior.end())
            throw contract_error("prior missing item " + item.item_id);
        const auto [p_like, p_dislike] = it->second;
        if (!(p_like > 0.0 && p_dislike > 0.0))
            throw contract_error("prior components must be positive for " + item.item_id);
        if (std::fabs(p_like + p_dislike - 1.0) > 1e-9)
            throw contract_error("prior for " + item.item_id + " must sum to 1");
    }
    if (prior.size() != session.items.size())
        throw contract_error("prior names items outside the session");
    session.prior = prior;
    session.has_custom_prior = true;
}

// One turn's evidence for one item: raw policy log-likelihoods and the
// floored, discounted log ratio they contribute.
struct TurnFactor {
    double loglik_like = 0.0;
    double loglik_dislike = 0.0;
    double log_ratio = 0.0;
};

inline double floored(double loglik, const RecConfig& config) {
    return std::max(loglik, std::log(config.epsilon));
}

inline double turn_log_ratio(double loglik_like, double loglik_dislike, const RecConfig& config) {
    config.validate();
    return config.gamma * (floored(loglik_like, config) - floored(loglik_dislike, config));
}

inline std::map<std::string, TurnFactor> compute_turn_factors(const InferenceSession& session,
                                                              Backend& backend,
                                                              const TurnContext& ctx,
                                                              const DialogueState& observed,
                                                              const RecConfig& config) {
    config.validate();
    std::map<std::string, TurnFactor> factors;
    for (const auto& item : session.items) {
        PolicyQuery query{ctx, item, HypothesisPolarity::like, session.observed_states, observed};
        TurnFactor f;
        f.loglik_like = backend.state_loglik(query);
        query.polarity = HypothesisPolarity::dislike;
        f.loglik_dislike = backend.state_loglik(query);
        f.log_ratio = turn_log_ratio(f.loglik_like, f.loglik_dislike, config);
        factors[item.item_id] = f;
    }
    return factors;
}

// Folds one turn into the accumulators and extends the belief context.
inline void update_session(InferenceSession& session,
                           const std::map<std::string, TurnFactor>& factors,
                           const DialogueState& observed, const RecConfig& config) {
    config.validate();
    for (const auto& item : session.items)
        if (!factors.count(item.item_id))
            throw contract_error("turn factors missing item " + item.item_id);
    for (const auto& item : session.items) {
        const TurnFactor& f = factors.at(item.item_id);
        session.cum_like[item.item_id] += config.gamma * floored(f.loglik_like, config);
        session.cum_dislike[item.item_id] += config.gamma * floored(f.loglik_dislike, config);
    }
    session.observed_states.push_back(observed);
}

inline double log_preference_ratio(const InferenceSession& session, const std::string& item_id) {
    if (!session.find_item(item_id))
        throw contract_error("unknown item " + item_id + " in preference query");
    double log_r = session.cum_like.at(item_id) - session.cum_dislike.at(item_id);
    if (session.has_custom_prior) {
        const auto& [p_like, p_dislike] = session.prior.at(item_id);
        log_r += std::log(p_like) - std::log(p_dislike);
    }
    return log_r;
}

// r = P(like)/P(dislike) evidence ratio; the exponent is clamped so extreme
// evidence saturates instead of overflowing.
inline double preference_ratio(const InferenceSession& session, const std::string& item_id) {
    return std::exp(std::clamp(log_preference_ratio(session, item_id), -700.0, 700.0));
}

struct RankedItem {
    std::string item_id;
    double log_ratio = 0.0;
    double ratio = 0.0;
};

// Evidence differences below this quantum are accumulation noise, never
// signal; ranking treats them as exact ties so the order stays reproducible.
constexpr double kEvidenceQuantum = 1e-9;

inline double quantized_evidence(double log_ratio) {
    return std::round(log_ratio / kEvidenceQuantum);
}

// Top-k by descending log ratio; evidence equal within the quantum orders by
// ascending item_id.
inline std::vector<RankedItem> rank_items(const InferenceSession& session,
                                          const RecConfig& config) {
    config.validate();
    std::vector<RankedItem> ranked;
    ranked.reserve(session.items.size());
    for (const auto& item : session.items) {
        RankedItem r;
        r.item_id = item.item_id;
        r.log_ratio = log_preference_ratio(session, item.item_id);
        r.ratio = preference_ratio(session, item.item_id);
        ranked.push_back(r);
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedItem& a, const RankedItem& b) {
        const double qa = quantized_evidence(a.log_ratio);
        const double qb = quantized_evidence(b.log_ratio);
        if (qa != qb) return qa > qb;
        return a.item_id < b.item_id;
    });
    const auto k = std::min(ranked.size(), static_cast<std::size_t>(config.k));
    ranked.resize(k);
    return ranked;
}

namespace oracle {

// Straight-line enumeration of the rational-user policy. Shares only compat()
// with the engine path; everything else is written out longhand so the two
// implementations can disagree.
inline double policy_loglik(const std::vector<DialogueState>& action_space,
                            const DialogueState& observed, const Item& item, double beta,
                            bool like) {
    std::vector<DialogueState> actions = action_space;
    bool present = false;
    for (const auto& a : actions)
        if (a == observed) present = true;
    if (!present) actions.push_back(observed);
    const double sign = like ? 1.0 : -1.0;
    double denom = 0.0;
    double numer = 0.0;
    bool counted = false;
    for (const auto& a : actions) {
        const double weight = std::exp(sign * beta * compat(a, item));
        denom += weight;
        if (!counted && a == observed) {
            numer = weight;
            counted = true;
        }
    }
    return std::log(numer) - std::log(denom);
}

// Posterior P(the liked item is i | observations) over single-liked-item
// hypotheses with a uniform prior, no floor, no discount.
inline std::map<std::string, double> brute_force_posterior(
    const std::vector<Item>& items, const std::vector<DialogueState>& action_space,
    const std::vector<DialogueState>& observations, double beta) {
    if (items.empty()) throw contract_error("brute_force_posterior needs items");
    std::map<std::string, double> log_joint;
    for (const auto& item : items) {
        double total = 0.0;
        for (const auto& obs : observations)
            total += policy_loglik(action_space, obs, item, beta, true);
        log_joint[item.item_id] = total;
    }
    double peak = log_joint.begin()->second;
    for (const auto& [id, lp] : log_joint) peak = std::max(peak, lp);
    double sum = 0.0;
    for (const auto& [id, lp] : log_joint) sum += std::exp(lp - peak);
    std::map<std::string, double> posterior;
    for (const auto& [id, lp] : log_joint) posterior[id] = std::exp(lp - peak) / sum;
    return posterior;
}

// Log evidence ratio per item under the same floor and discount rules as the
// engine, computed by direct enumeration.
inline std::map<std::string, double> brute_force_ratio(
    const std::vector<Item>& items, const std::vector<DialogueState>& action_space,
    const std::vector<DialogueState>& observations, double beta, const RecConfig& config) {
    config.validate();
    const double floor_log = std::log(config.epsilon);
    std::map<std::string, double> ratios;
    for (const auto& item : items) {
        double total = 0.0;
        for (const auto& obs : observations) {
            double ll_like = policy_loglik(action_space, obs, item, beta, true);
            double ll_dislike = policy_loglik(action_space, obs, item, beta, false);
            if (ll_like < floor_log) ll_like = floor_log;
            if (ll_dislike < floor_log) ll_dislike = floor_log;
            total += config.gamma * (ll_like - ll_dislike);
        }
        ratios[item.item_id] = total;
    }
    return ratios;
}

}  // namespace oracle

inline nlohmann::ordered_json session_snapshot(const InferenceSession& session) {
    nlohmann::ordered_json snap;
    snap["scene_id"] = session.scene_id;
    snap["turns_observed"] = session.observed_states.size();
    auto& items = snap["items"] = nlohmann::ordered_json::array();
    for (const auto& item : session.items) {
        nlohmann::ordered_json row;
        row["item_id"] = item.item_id;
        row["cum_like"] = session.cum_like.at(item.item_id);
        row["cum_dislike"] = session.cum_dislike.at(item.item_id);
        row["log_ratio"] = log_preference_ratio(session, item.item_id);
        items.push_back(std::move(row));
    }
    auto& states = snap["observed_states"] = nlohmann::ordered_json::array();
    for (const auto& s : session.observed_states) states.push_back(serialize_state(s));
    return snap;
}

}  // namespace screc
