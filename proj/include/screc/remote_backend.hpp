#pragma once

#include <chrono>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "screc/backend.hpp"
#include "screc/retrieval.hpp"

namespace screc {

namespace detail {

inline nlohmann::json wire_context(const TurnContext& ctx) {
    nlohmann::json j;
    j["dialogue_id"] = ctx.dialogue_id;
    j["t"] = ctx.t;
    auto& history = j["history"] = nlohmann::json::array();
    for (const auto& turn : ctx.history) {
        nlohmann::json jt;
        jt["speaker"] = turn.speaker == Speaker::user ? "user" : "system";
        jt["text"] = turn.text;
        history.push_back(std::move(jt));
    }
    return j;
}

inline nlohmann::json wire_item(const Item& item) {
    nlohmann::json j;
    j["item_id"] = item.item_id;
    j["attributes"] = nlohmann::json::object();
    for (const auto& [slot, value] : item.attributes) j["attributes"][slot] = value;
    return j;
}

}  // namespace detail

// HTTP+JSON client for a policy/generation service. Every request runs on a
// fresh connection under an in-flight cap; failed transports are retried
// with a short linear backoff, then surface as transport_error. A server
// that answers 200 but omits the contracted field is a capability_error and
// is never retried.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteBackendConfig config)
        : config_(std::move(config)),
          slots_((config_.validate(), static_cast<std::ptrdiff_t>(config_.max_in_flight))) {}

    double state_loglik(const PolicyQuery& query) override {
        nlohmann::json body;
        body["context"] = detail::wire_context(query.context);
        body["item"] = detail::wire_item(query.item);
        body["polarity"] = polarity_name(query.polarity);
        auto& prior = body["prior_states"] = nlohmann::json::array();
        for (const auto& s : query.prior_states) prior.push_back(serialize_state(s));
        body["observed_state"] = serialize_state(query.observed_state);
        const nlohmann::json reply = post("/score_state", body);
        if (!reply.contains("loglik") || !reply["loglik"].is_number())
            throw capability_error("score_state reply lacks a numeric loglik");
        return reply["loglik"].get<double>();
    }

    TransitionInference transition_inference(const TurnContext& ctx,
                                             const SceneProfile& current_profile) override {
        nlohmann::json body;
        body["history"] = detail::wire_context(ctx);
        body["current_profile"] = current_profile.canonical_text;
        const nlohmann::json reply = post("/transition", body);
        if (!reply.contains("z_yes") || !reply["z_yes"].is_number() || !reply.contains("z_no") ||
            !reply["z_no"].is_number())
            throw capability_error("transition reply lacks numeric z_yes/z_no");
        TransitionInference inf;
        inf.z_yes = reply["z_yes"].get<double>();
        inf.z_no = reply["z_no"].get<double>();
        if (reply.contains("target_profile") && reply["target_profile"].is_string())
            inf.target_profile_text = reply["target_profile"].get<std::string>();
        return inf;
    }

    std::string generate_text(const std::string& prompt, const DecodingParams& params) override {
        params.validate();
        nlohmann::json body;
        body["prompt"] = prompt;
        body["decoding"] = {{"top_p", params.top_p},
                            {"top_k", params.top_k},
                            {"temperature", params.temperature},
                            {"max_tokens", params.max_tokens}};
        const nlohmann::json reply = post("/generate", body);
        if (!reply.contains("text") || !reply["text"].is_string())
            throw capability_error("generate reply lacks a text field");
        return reply["text"].get<std::string>();
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{slots_};
        const std::string payload = body.dump();
        std::string reply_body;
        bool ok = false;
        for (int attempt = 0; attempt <= config_.retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(10 * attempt));
            httplib::Client client(config_.endpoint);
            client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            auto res = client.Post(path, payload, "application/json");
            if (res && res->status == 200) {
                reply_body = res->body;
                ok = true;
                break;
            }
        }
        if (!ok)
            throw transport_error("no usable reply from " + config_.endpoint + path + " after " +
                                  std::to_string(config_.retries + 1) + " attempts");
        try {
            return nlohmann::json::parse(reply_body);
        } catch (const nlohmann::json::parse_error&) {
            throw capability_error("malformed JSON reply from " + path);
        }
    }

    const RemoteBackendConfig& config() const { return config_; }

private:
    RemoteBackendConfig config_;
    std::counting_semaphore<1024> slots_;
};

// Embeddings served over the same wire. The service owns the representation;
// only the dimension is pinned client-side.
class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(RemoteBackend& backend, int dimension)
        : backend_(&backend), dimension_(dimension) {
        if (dimension < 1) throw config_error("embedding dimension must be >= 1");
    }

    EmbeddingVector embed(const std::string& text) override {
        nlohmann::json body;
        body["text"] = text;
        body["dimension"] = dimension_;
        const nlohmann::json reply = backend_->post("/embed", body);
        if (!reply.contains("values") || !reply["values"].is_array())
            throw capability_error("embed reply lacks a values array");
        EmbeddingVector v;
        for (const auto& x : reply["values"]) {
            if (!x.is_number()) throw capability_error("embed values must be numbers");
            v.push_back(x.get<double>());
        }
        if (v.size() != static_cast<std::size_t>(dimension_))
            throw capability_error("embed reply has wrong dimension");
        return v;
    }

    int dimension() const override { return dimension_; }

private:
    RemoteBackend* backend_;
    int dimension_;
};

}  // namespace screc
