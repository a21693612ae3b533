#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "screc/catalog.hpp"
#include "screc/dialogue.hpp"
#include "screc/util.hpp"

namespace screc {

// One grounded dialogue: the conversation plus the active scene for every
// user turn and optional gold recommendation targets keyed by user turn.
struct Dialogue {
    Conversation conversation;
    std::vector<std::string> scene_by_user_turn;  // [t - 1] is user turn t
    std::map<int, std::vector<std::string>> gold_items;

    const std::string& scene_id_at(int t) const {
        if (t < 1 || static_cast<std::size_t>(t) > scene_by_user_turn.size())
            throw bounds_error("no scene for user turn " + std::to_string(t));
        return scene_by_user_turn[static_cast<std::size_t>(t) - 1];
    }

    bool has_transition() const {
        for (std::size_t i = 1; i < scene_by_user_turn.size(); ++i)
            if (scene_by_user_turn[i] != scene_by_user_turn[i - 1]) return true;
        return false;
    }

    // Gold decision for user turn t: did the scene change going into t?
    bool transition_label(int t) const {
        if (t < 2) return false;
        return scene_id_at(t) != scene_id_at(t - 1);
    }
};

struct Corpus {
    Environment env;
    std::vector<Dialogue> dialogues;

    const Dialogue* find_dialogue(const std::string& id) const {
        for (const auto& d : dialogues)
            if (d.conversation.dialogue_id == id) return &d;
        return nullptr;
    }
};

struct CorpusStats {
    std::size_t n_dialogues = 0;
    std::size_t n_utterances = 0;
    std::size_t n_scenes = 0;
    std::size_t n_items = 0;
};

inline CorpusStats stats(const Corpus& corpus) {
    CorpusStats s;
    s.n_dialogues = corpus.dialogues.size();
    for (const auto& d : corpus.dialogues) s.n_utterances += d.conversation.turns.size();
    s.n_scenes = corpus.env.scenes.size();
    s.n_items = corpus.env.total_items();
    return s;
}

namespace detail {

inline Dialogue parse_dialogue(const nlohmann::json& jd, const std::string& source,
                               const Environment& env, const StateSchema& schema,
                               Warnings* warnings) {
    if (!jd.is_object() || !jd.contains("dialogue_id") || !jd["dialogue_id"].is_string())
        throw parse_error("missing dialogue_id in " + source);
    Dialogue dialogue;
    auto& conv = dialogue.conversation;
    conv.dialogue_id = jd["dialogue_id"].get<std::string>();
    const std::string where = "dialogue " + conv.dialogue_id + " (" + source + ")";
    if (!jd.contains("turns") || !jd["turns"].is_array())
        throw parse_error(where + ": missing turns array");
    int user_index = 0;
    std::string active_scene;
    for (const auto& jt : jd["turns"]) {
        const std::string turn_at = where + " turn " + std::to_string(conv.turns.size() + 1);
        if (!jt.is_object() || !jt.contains("speaker") || !jt["speaker"].is_string())
            throw parse_error(turn_at + ": missing speaker");
        const std::string speaker = jt["speaker"].get<std::string>();
        if (speaker != "user" && speaker != "system")
            throw schema_error(turn_at + ": speaker must be \"user\" or \"system\"");
        if (!jt.contains("text") || !jt["text"].is_string())
            throw parse_error(turn_at + ": missing text");
        Turn turn;
        turn.speaker = speaker == "user" ? Speaker::user : Speaker::system;
        turn.text = jt["text"].get<std::string>();
        if (turn.speaker == Speaker::user) {
            ++user_index;
            turn.index = user_index;
            if (jt.contains("scene_id")) {
                if (!jt["scene_id"].is_string())
                    throw parse_error(turn_at + ": scene_id must be a string");
                active_scene = jt["scene_id"].get<std::string>();
            } else if (active_scene.empty()) {
                throw schema_error(turn_at + ": first user turn needs a scene_id");
            }
            if (!env.find_scene(active_scene))
                throw schema_error(turn_at + ": unknown scene \"" + active_scene + "\"");
            dialogue.scene_by_user_turn.push_back(active_scene);
        } else {
            turn.index = user_index;
            if (user_index == 0)
                warn(warnings, where + ": system turn before the first user turn, index 0");
        }
        if (jt.contains("state")) {
            if (!jt["state"].is_string()) throw parse_error(turn_at + ": state must be a string");
            try {
                turn.state = parse_state(jt["state"].get<std::string>(), schema);
            } catch (const std::exception& e) {
                throw schema_error(turn_at + ": bad state: " + e.what());
            }
        }
        if (jt.contains("gold_items")) {
            if (turn.speaker != Speaker::user)
                throw schema_error(turn_at + ": gold_items belong on user turns");
            if (!jt["gold_items"].is_array())
                throw parse_error(turn_at + ": gold_items must be an array");
            const Scene* scene = env.find_scene(active_scene);
            std::vector<std::string> gold;
            for (const auto& jg : jt["gold_items"]) {
                if (!jg.is_string()) throw parse_error(turn_at + ": gold item ids are strings");
                const std::string id = jg.get<std::string>();
                if (!scene->find_item(id))
                    throw schema_error(turn_at + ": gold item \"" + id + "\" not in scene \"" +
                                       active_scene + "\"");
                gold.push_back(id);
            }
            if (!gold.empty()) dialogue.gold_items[user_index] = std::move(gold);
        }
        conv.turns.push_back(std::move(turn));
    }
    if (user_index == 0) throw schema_error(where + ": dialogue has no user turns");
    for (const auto& issue : validate_conversation(conv))
        warn(warnings, where + ": " + issue.message);
    return dialogue;
}

}  // namespace detail

// Merge any number of parsed dataset documents. Each may carry "scenes",
// "dialogues", or both; scene and dialogue ids must be globally unique, and
// every dialogue reference must resolve against the merged environment.
inline Corpus corpus_from_docs(const std::vector<std::pair<std::string, nlohmann::json>>& docs,
                               const StateSchema& schema = default_schema(),
                               Warnings* warnings = nullptr) {
    Corpus corpus;
    std::set<std::string> scene_ids;
    for (const auto& [source, doc] : docs) {
        if (!doc.is_object()) throw parse_error("expected a top-level object in " + source);
        if (!doc.contains("scenes")) continue;
        nlohmann::json env_doc;
        env_doc["scenes"] = doc["scenes"];
        if (env_doc["scenes"].is_array() && env_doc["scenes"].empty()) continue;
        Environment part = environment_from_json(env_doc, source);
        for (auto& scene : part.scenes) {
            if (!scene_ids.insert(scene.scene_id).second)
                throw schema_error("scene \"" + scene.scene_id + "\" appears in multiple files (" +
                                   source + ")");
            corpus.env.scenes.push_back(std::move(scene));
        }
    }
    if (corpus.env.scenes.empty()) throw schema_error("dataset contains no scenes");
    std::set<std::string> dialogue_ids;
    for (const auto& [source, doc] : docs) {
        if (!doc.contains("dialogues")) continue;
        if (!doc["dialogues"].is_array())
            throw parse_error("dialogues must be an array in " + source);
        for (const auto& jd : doc["dialogues"]) {
            Dialogue dialogue = detail::parse_dialogue(jd, source, corpus.env, schema, warnings);
            if (!dialogue_ids.insert(dialogue.conversation.dialogue_id).second)
                throw schema_error("duplicate dialogue_id \"" + dialogue.conversation.dialogue_id +
                                   "\" in " + source);
            corpus.dialogues.push_back(std::move(dialogue));
        }
    }
    return corpus;
}

inline Corpus ingest_dataset(const std::vector<std::string>& paths,
                             const StateSchema& schema = default_schema(),
                             Warnings* warnings = nullptr) {
    if (paths.empty()) throw config_error("ingest_dataset needs at least one file");
    std::vector<std::pair<std::string, nlohmann::json>> docs;
    for (const auto& path : paths) {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw parse_error("cannot open dataset file " + path);
        std::string data;
        char buf[1 << 16];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, n);
        std::fclose(f);
        try {
            docs.emplace_back(path, nlohmann::json::parse(data));
        } catch (const nlohmann::json::parse_error& e) {
            throw parse_error("malformed dataset file " + path + ": " + e.what());
        }
    }
    return corpus_from_docs(docs, schema, warnings);
}

struct BalancedSplit {
    std::vector<std::string> transition_ids;
    std::vector<std::string> retention_ids;
};

// Largest ratio_t : ratio_r subset of the two dialogue classes, sampled
// without replacement. Sizes are (ratio_t * m, ratio_r * m) for the largest
// m both classes can supply.
inline BalancedSplit balance_split(const Corpus& corpus, int ratio_transition,
                                   int ratio_retention, uint64_t seed) {
    if (ratio_transition < 1 || ratio_retention < 1)
        throw config_error("split ratios must be >= 1");
    std::vector<std::string> transition, retention;
    for (const auto& d : corpus.dialogues)
        (d.has_transition() ? transition : retention).push_back(d.conversation.dialogue_id);
    const auto m = std::min(transition.size() / static_cast<std::size_t>(ratio_transition),
                            retention.size() / static_cast<std::size_t>(ratio_retention));
    if (m == 0)
        throw contract_error("cannot balance split: transition=" +
                             std::to_string(transition.size()) +
                             " retention=" + std::to_string(retention.size()));
    SplitMix64 rng(seed);
    auto sample = [&rng](std::vector<std::string>& pool, std::size_t take) {
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
    };
    BalancedSplit split;
    sample(transition, m * static_cast<std::size_t>(ratio_transition));
    sample(retention, m * static_cast<std::size_t>(ratio_retention));
    split.transition_ids = std::move(transition);
    split.retention_ids = std::move(retention);
    return split;
}

}  // namespace screc
