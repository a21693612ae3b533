#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "screc/backend.hpp"
#include "screc/catalog.hpp"
#include "screc/corpus.hpp"
#include "screc/dialogue.hpp"
#include "screc/inference.hpp"
#include "screc/metrics.hpp"
#include "screc/mock_backend.hpp"
#include "screc/retrieval.hpp"
#include "screc/transition.hpp"
#include "screc/world.hpp"

namespace screc {

struct RetrievalConfig {
    int coarse_n = 10;
    int dimension = 64;
    double learning_rate = 0.1;
    int epochs = 500;
    uint64_t seed = 11;
};

struct PipelineConfig {
    RetrievalConfig retrieval;
    RecConfig rec;
    double tau = 0.5;
    DecodingParams decoding;

    void validate() const {
        rec.validate();
        decoding.validate();
        if (!(tau >= 0.0 && tau <= 1.0)) throw config_error("tau must be in [0, 1]");
        if (retrieval.coarse_n < 1) throw config_error("coarse_n must be >= 1");
        if (retrieval.dimension < 1) throw config_error("dimension must be >= 1");
    }
};

// Prepared engine state: profiles and their index are built once per
// environment; everything here is read-only during turn processing, so one
// pipeline can serve concurrent dialogue runs.
struct Pipeline {
    const Environment* env = nullptr;
    Backend* backend = nullptr;
    PipelineConfig config;
    std::shared_ptr<Embedder> embedder;
    std::vector<SceneProfile> profiles;
    VectorIndex index;
    RerankerParams reranker;

    const SceneProfile* find_profile(const std::string& scene_id) const {
        for (const auto& p : profiles)
            if (p.scene_id == scene_id) return &p;
        return nullptr;
    }
};

inline Pipeline make_pipeline(const Environment& env, Backend& backend,
                              const PipelineConfig& config,
                              std::shared_ptr<Embedder> embedder = nullptr) {
    config.validate();
    Pipeline p;
    p.env = &env;
    p.backend = &backend;
    p.config = config;
    p.embedder = embedder ? std::move(embedder)
                          : std::make_shared<HashingEmbedder>(config.retrieval.dimension);
    for (const auto& scene : env.scenes) p.profiles.push_back(build_profile(scene));
    p.index = build_index(p.profiles, *p.embedder);
    p.reranker = RerankerParams::zero(p.embedder->dimension());
    return p;
}

// Exact prompt grammar consumed by the generation backend. recs pair item
// ids with their surface descriptors; an empty list renders as "(none)".
inline std::string build_prompt(const SceneProfile& profile,
                                const std::vector<std::pair<std::string, std::string>>& recs,
                                const std::vector<Turn>& history) {
    std::string prompt = "You are a situated shopping assistant.\n";
    prompt += "Scene: " + profile.canonical_text + "\n";
    prompt += "Recommended items: ";
    if (recs.empty()) {
        prompt += "(none)";
    } else {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            if (i) prompt += "; ";
            prompt += recs[i].first + " (" + recs[i].second + ")";
        }
    }
    prompt += "\nDialogue:\n";
    for (const auto& turn : history)
        prompt += std::string(turn.speaker == Speaker::user ? "user: " : "system: ") + turn.text +
                  "\n";
    prompt += "Respond to the last user turn, recommending the items that fit.";
    return prompt;
}

// One in-flight dialogue: the evolving history, the active scene, and the
// evidence accumulated for its items.
struct DialogueRun {
    std::string dialogue_id;
    const Scene* scene = nullptr;
    SceneProfile profile;
    InferenceSession session;
    std::vector<Turn> history;
    int t = 0;
};

inline DialogueRun begin_dialogue(const Pipeline& pipeline, const std::string& dialogue_id,
                                  const std::string& scene_id) {
    const Scene* scene = pipeline.env->find_scene(scene_id);
    if (!scene) throw contract_error("begin_dialogue: unknown scene " + scene_id);
    DialogueRun run;
    run.dialogue_id = dialogue_id;
    run.scene = scene;
    const SceneProfile* profile = pipeline.find_profile(scene_id);
    run.profile = profile ? *profile : build_profile(*scene);
    run.session = begin_session(*scene);
    return run;
}

struct TurnInput {
    std::string text;
    std::optional<DialogueState> gold_state;     // skip tracking when present
    std::optional<std::string> gold_scene_id;    // ground-truth grounding when present
    bool generate = true;
};

struct TurnLog {
    int t = 0;
    TransitionOutcome transition;
    bool regrounded = false;
    DialogueState observed;
    std::vector<RankedItem> ranked;
    std::string response;
    StageLatency latency;
    Warnings warnings;
};

namespace detail {
class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};
}  // namespace detail

inline void reground_run(const Pipeline& pipeline, DialogueRun& run,
                         const std::string& scene_id) {
    const Scene* scene = pipeline.env->find_scene(scene_id);
    if (!scene) throw contract_error("reground: unknown scene " + scene_id);
    run.scene = scene;
    const SceneProfile* profile = pipeline.find_profile(scene_id);
    run.profile = profile ? *profile : build_profile(*scene);
    reground_session(run.session, *scene);
}

inline std::string compose_response(const Pipeline& pipeline, const DialogueRun& run,
                                    const std::vector<RankedItem>& ranked, TurnLog& log) {
    if (ranked.empty())
        return "I have nothing to recommend yet; we are looking at " + run.profile.scene_id + ".";
    std::vector<std::pair<std::string, std::string>> recs;
    for (const auto& r : ranked) {
        const Item* item = run.scene->find_item(r.item_id);
        recs.emplace_back(r.item_id, item ? item_descriptor(*item) : r.item_id);
    }
    const std::string prompt = build_prompt(run.profile, recs, run.history);
    try {
        return pipeline.backend->generate_text(prompt, pipeline.config.decoding);
    } catch (const std::exception& e) {
        warn(&log.warnings, "generation failed (" + std::string(e.what()) + "); using fallback");
        std::vector<std::string> descriptors;
        for (const auto& [id, desc] : recs) descriptors.push_back(desc);
        return recommendation_template(descriptors);
    }
}

// One user turn end to end: transition estimate, optional regrounding,
// state tracking, evidence update, ranking, response. Stage latencies are
// wall clock and never feed the machine-readable report.
inline TurnLog run_turn(const Pipeline& pipeline, DialogueRun& run, const TurnInput& input) {
    TurnLog log;
    log.t = ++run.t;
    Turn user;
    user.index = run.t;
    user.speaker = Speaker::user;
    user.text = input.text;
    user.state = input.gold_state;
    run.history.push_back(user);
    TurnContext ctx{run.dialogue_id, run.t, run.history, run.scene, &run.profile};

    {
        detail::StageTimer timer;
        if (input.gold_scene_id) {
            const TransitionInference inf =
                pipeline.backend->transition_inference(ctx, run.profile);
            log.transition.decision = decide_transition(inf.z_yes, inf.z_no, pipeline.config.tau);
            log.transition.target_profile_text = inf.target_profile_text;
            log.transition.scene_id = *input.gold_scene_id;
        } else {
            log.transition = estimate_transition(*pipeline.backend, ctx, run.profile,
                                                 pipeline.index, *pipeline.embedder,
                                                 pipeline.reranker, pipeline.config.tau,
                                                 pipeline.config.retrieval.coarse_n);
        }
        log.latency.transition_ms = timer.ms();
    }
    if (log.transition.scene_id != run.scene->scene_id) {
        reground_run(pipeline, run, log.transition.scene_id);
        log.regrounded = true;
        ctx.scene = run.scene;
        ctx.profile = &run.profile;
    }

    {
        detail::StageTimer timer;
        if (input.gold_state) {
            log.observed = *input.gold_state;
        } else {
            try {
                const std::string generated = pipeline.backend->generate_text(
                    dst_prompt(input.text, *run.scene, default_schema()), pipeline.config.decoding);
                log.observed = parse_state(generated, default_schema());
            } catch (const transport_error&) {
                throw;
            } catch (const std::exception& e) {
                warn(&log.warnings, "state tracking failed (" + std::string(e.what()) +
                                        "); repaired to OTHER");
                log.observed = DialogueState{"OTHER", {}};
            }
        }
        const auto factors =
            compute_turn_factors(run.session, *pipeline.backend, ctx, log.observed,
                                 pipeline.config.rec);
        update_session(run.session, factors, log.observed, pipeline.config.rec);
        log.ranked = rank_items(run.session, pipeline.config.rec);
        log.latency.inference_ms = timer.ms();
    }

    {
        detail::StageTimer timer;
        if (input.generate) log.response = compose_response(pipeline, run, log.ranked, log);
        log.latency.generation_ms = timer.ms();
    }
    Turn system;
    system.index = run.t;
    system.speaker = Speaker::system;
    system.text = log.response;
    run.history.push_back(system);
    return log;
}

// Rerank training data from corpus transitions: the gold scene's canonical
// text stands in for the generated target profile, the pool is the coarse
// shortlist with the gold appended when it missed.
inline std::vector<RerankExample> make_rerank_examples(const Corpus& corpus,
                                                       const Pipeline& pipeline) {
    std::vector<RerankExample> examples;
    for (const auto& dialogue : corpus.dialogues) {
        for (int t = 2; t <= dialogue.conversation.user_turn_count(); ++t) {
            if (!dialogue.transition_label(t)) continue;
            const std::string& gold = dialogue.scene_id_at(t);
            const SceneProfile* profile = pipeline.find_profile(gold);
            if (!profile) throw contract_error("no profile for scene " + gold);
            RerankExample ex;
            ex.query = pipeline.embedder->embed(profile->canonical_text);
            const auto coarse = coarse_retrieve(pipeline.index, ex.query,
                                                pipeline.config.retrieval.coarse_n);
            std::size_t gold_at = coarse.size();
            for (std::size_t i = 0; i < coarse.size(); ++i) {
                const EmbeddingVector* vec = pipeline.index.find(coarse[i].scene_id);
                ex.pool.push_back(*vec);
                if (coarse[i].scene_id == gold) gold_at = i;
            }
            if (gold_at == coarse.size()) ex.pool.push_back(*pipeline.index.find(gold));
            ex.gold_index = gold_at;
            if (ex.pool.size() < 2) continue;  // single-scene corpus, nothing to rank
            examples.push_back(std::move(ex));
        }
    }
    return examples;
}

// Scripts the mock decision head from corpus ground truth: every gold
// transition turn answers a strong yes carrying the gold scene's profile.
inline void script_from_corpus(MockBackend& backend, const Corpus& corpus,
                               const Pipeline& pipeline) {
    for (const auto& dialogue : corpus.dialogues) {
        for (int t = 2; t <= dialogue.conversation.user_turn_count(); ++t) {
            if (!dialogue.transition_label(t)) continue;
            const SceneProfile* profile = pipeline.find_profile(dialogue.scene_id_at(t));
            if (!profile) continue;
            backend.script_transition(dialogue.conversation.dialogue_id, t,
                                      TransitionInference{10.0, -10.0, profile->canonical_text});
        }
    }
}

struct EpisodeResult {
    std::string episode_id;
    std::vector<std::string> final_ranking;
    std::string final_scene;
    std::string response;
    std::vector<ScoredLabel> decisions;
    StageLatency latency;
    bool scene_match = false;
};

struct BenchmarkResult {
    std::vector<EpisodeResult> episodes;
    MetricReport report;
};

// Runs every episode of a synthetic world against the mock backend and
// aggregates the standard report. Episodes are independent, so they are
// spread over a worker pool; results are stored by episode index and the
// machine-readable report is identical for any worker count.
inline BenchmarkResult simulate_benchmark(const World& world, const PipelineConfig& config,
                                          int threads = 1) {
    config.validate();
    if (threads < 1) throw config_error("threads must be >= 1");
    MockBackend backend(world_mock_config(world));
    script_world(backend, world);
    Pipeline pipeline = make_pipeline(world.env, backend, config);

    std::vector<EpisodeResult> results(world.episodes.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= world.episodes.size()) return;
            const Episode& ep = world.episodes[i];
            EpisodeResult res;
            res.episode_id = ep.episode_id;
            DialogueRun run = begin_dialogue(pipeline, ep.episode_id, ep.start_scene);
            StageLatency total;
            for (std::size_t t = 0; t < ep.turns.size(); ++t) {
                TurnInput input;
                input.text = ep.turns[t].text;
                input.gold_state = ep.turns[t].observed;
                input.generate = true;
                TurnLog log = run_turn(pipeline, run, input);
                if (t > 0)
                    res.decisions.push_back(
                        {log.transition.decision.probability, ep.turns[t].transition});
                total.transition_ms += log.latency.transition_ms;
                total.inference_ms += log.latency.inference_ms;
                total.generation_ms += log.latency.generation_ms;
                if (t + 1 == ep.turns.size()) {
                    for (const auto& r : log.ranked) res.final_ranking.push_back(r.item_id);
                    res.response = log.response;
                }
            }
            const double n = static_cast<double>(ep.turns.size());
            res.latency = {total.transition_ms / n, total.inference_ms / n,
                           total.generation_ms / n};
            res.final_scene = run.scene->scene_id;
            res.scene_match = res.final_scene == ep.final_scene;
            results[i] = std::move(res);
        }
    };
    std::vector<std::thread> pool;
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                 world.episodes.size());
    for (std::size_t w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    EvalInputs inputs;
    for (std::size_t i = 0; i < world.episodes.size(); ++i) {
        const Episode& ep = world.episodes[i];
        const EpisodeResult& res = results[i];
        const Scene* scene = world.env.find_scene(ep.final_scene);
        const Item* target = scene->find_item(ep.target_item);
        inputs.rankings.push_back({res.final_ranking, {ep.target_item}});
        inputs.responses.emplace_back(res.response,
                                      recommendation_template({item_descriptor(*target)}));
        for (const auto& d : res.decisions) inputs.decisions.push_back(d);
        inputs.latencies.push_back(res.latency);
    }
    BenchmarkResult out;
    out.episodes = std::move(results);
    out.report = evaluate_run(inputs);
    return out;
}

struct DialogueResult {
    std::string dialogue_id;
    std::vector<std::string> final_ranking;
    std::string final_scene;
    std::string response;
    std::vector<ScoredLabel> decisions;
    bool scene_match = false;
};

struct CorpusEvalResult {
    std::vector<DialogueResult> dialogues;
    MetricReport report;
};

// Replays corpus dialogues through the engine. ground_gold switches the
// grounding source from the engine's own scene estimate to corpus truth;
// the decision head runs and is scored either way. The reference response
// is the dialogue's closing system turn.
inline CorpusEvalResult evaluate_corpus(const Corpus& corpus, Backend& backend,
                                        const PipelineConfig& config, bool ground_gold = false,
                                        const std::vector<std::string>& dialogue_ids = {},
                                        std::shared_ptr<Embedder> embedder = nullptr) {
    Pipeline pipeline = make_pipeline(corpus.env, backend, config, std::move(embedder));
    CorpusEvalResult out;
    EvalInputs inputs;
    for (const auto& dialogue : corpus.dialogues) {
        const std::string& id = dialogue.conversation.dialogue_id;
        if (!dialogue_ids.empty() &&
            std::find(dialogue_ids.begin(), dialogue_ids.end(), id) == dialogue_ids.end())
            continue;
        DialogueResult res;
        res.dialogue_id = id;
        DialogueRun run = begin_dialogue(pipeline, id, dialogue.scene_id_at(1));
        StageLatency total;
        int seen = 0;
        const Turn* last_user = nullptr;
        std::string reference;
        for (const auto& turn : dialogue.conversation.turns) {
            if (turn.speaker == Speaker::system) {
                if (last_user && turn.index == dialogue.conversation.user_turn_count())
                    reference = turn.text;
                continue;
            }
            last_user = &turn;
            ++seen;
            TurnInput input;
            input.text = turn.text;
            input.gold_state = turn.state;
            if (ground_gold) input.gold_scene_id = dialogue.scene_id_at(seen);
            TurnLog log = run_turn(pipeline, run, input);
            if (seen > 1)
                res.decisions.push_back(
                    {log.transition.decision.probability, dialogue.transition_label(seen)});
            total.transition_ms += log.latency.transition_ms;
            total.inference_ms += log.latency.inference_ms;
            total.generation_ms += log.latency.generation_ms;
            if (seen == dialogue.conversation.user_turn_count()) {
                for (const auto& r : log.ranked) res.final_ranking.push_back(r.item_id);
                res.response = log.response;
            }
        }
        res.final_scene = run.scene->scene_id;
        res.scene_match =
            res.final_scene == dialogue.scene_id_at(dialogue.conversation.user_turn_count());
        auto gold = dialogue.gold_items.find(dialogue.conversation.user_turn_count());
        if (gold != dialogue.gold_items.end())
            inputs.rankings.push_back({res.final_ranking, gold->second});
        if (!reference.empty()) inputs.responses.emplace_back(res.response, reference);
        for (const auto& d : res.decisions) inputs.decisions.push_back(d);
        const double n = std::max(1, dialogue.conversation.user_turn_count());
        inputs.latencies.push_back(
            {total.transition_ms / n, total.inference_ms / n, total.generation_ms / n});
        out.dialogues.push_back(std::move(res));
    }
    if (out.dialogues.empty()) throw contract_error("evaluate_corpus matched no dialogues");
    out.report = evaluate_run(inputs);
    return out;
}

}  // namespace screc
