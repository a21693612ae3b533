// Acceptance gate: nine checks, one pass/fail line each, nonzero exit on any
// failure. Each check pins its tolerances inline and reports the measured
// values so a failing line is diagnosable on its own.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "screc/pipeline.hpp"

using namespace screc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Posterior argsort under the engine's tie rule: log-probabilities within the
// same evidence quantum tie and order by ascending item_id.
std::vector<std::string> argsort_posterior(const std::map<std::string, double>& posterior) {
    std::map<std::string, double> key;
    for (const auto& [id, p] : posterior) key[id] = quantized_evidence(std::log(p));
    std::vector<std::string> ids;
    for (const auto& [id, v] : key) ids.push_back(id);
    std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
        if (key.at(a) != key.at(b)) return key.at(a) > key.at(b);
        return a < b;
    });
    return ids;
}

long double reference_logistic(double z_yes, double z_no) {
    const long double d = static_cast<long double>(z_yes) - static_cast<long double>(z_no);
    if (d >= 0.0L) return 1.0L / (1.0L + std::exp(-d));
    const long double e = std::exp(d);
    return e / (1.0L + e);
}

std::vector<DialogueState> episode_evidence(const Episode& ep) {
    std::vector<DialogueState> observations;
    for (std::size_t t = 0; t < ep.turns.size(); ++t)
        if (ep.transition_turn == 0 || static_cast<int>(t) + 1 >= ep.transition_turn)
            observations.push_back(ep.turns[t].observed);
    return observations;
}

// 1. Engine vs enumeration: per-item log ratio within 1e-9 and identical
//    final ranking on 100 seeded worlds (<= 12 items, <= 6 turns).
Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const double betas[3] = {0.5, 1.0, 5.0};
    double max_err = 0.0;
    int episodes = 0, ranking_mismatches = 0;
    for (int w = 0; w < 100; ++w) {
        SyntheticWorldConfig wc;
        wc.n_scenes = 1;
        wc.items_per_scene = 4 + w % 9;  // 4..12
        wc.n_attributes = 2;
        wc.n_turns = 1 + w % 6;  // 1..6
        wc.episodes = 2;
        wc.beta = betas[w % 3];
        wc.seed = 1000 + static_cast<uint64_t>(w);
        const World world = make_world(wc);
        MockBackend backend(world_mock_config(world));
        const Scene& scene = world.env.scenes.front();
        const SceneProfile profile = build_profile(scene);
        RecConfig config;
        config.k = wc.items_per_scene;
        for (const auto& ep : world.episodes) {
            ++episodes;
            InferenceSession session = begin_session(scene);
            std::vector<DialogueState> observations;
            int t = 0;
            for (const auto& turn : ep.turns) {
                TurnContext ctx;
                ctx.dialogue_id = ep.episode_id;
                ctx.t = ++t;
                ctx.scene = &scene;
                ctx.profile = &profile;
                const auto factors =
                    compute_turn_factors(session, backend, ctx, turn.observed, config);
                update_session(session, factors, turn.observed, config);
                observations.push_back(turn.observed);
            }
            const auto brute = oracle::brute_force_ratio(scene.items, world.action_space,
                                                         observations, world.beta, config);
            for (const auto& [id, expected] : brute)
                max_err = std::max(max_err,
                                   std::fabs(log_preference_ratio(session, id) - expected));
            const auto posterior = oracle::brute_force_posterior(scene.items, world.action_space,
                                                                 observations, world.beta);
            const auto expected_order = argsort_posterior(posterior);
            const auto ranked = rank_items(session, config);
            bool same = ranked.size() == expected_order.size();
            for (std::size_t i = 0; same && i < ranked.size(); ++i)
                same = ranked[i].item_id == expected_order[i];
            if (!same) ++ranking_mismatches;
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = max_err <= 1e-9 && ranking_mismatches == 0 && secs < 60.0;
    o.detail = fmt("%d episodes over 100 worlds, max log-ratio err %.2e, "
                   "ranking mismatches %d, %.1fs",
                   episodes, max_err, ranking_mismatches, secs);
    return o;
}

// 2. decision_probability against a long-double logistic, plus shift
//    invariance, both within 1e-12 over 1000 random logit pairs.
Outcome criterion2() {
    SplitMix64 rng(4242);
    double max_err = 0.0, max_shift = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double z_yes = rng.uniform_range(-50.0, 50.0);
        const double z_no = rng.uniform_range(-50.0, 50.0);
        const double p = decision_probability(z_yes, z_no);
        const double ref = static_cast<double>(reference_logistic(z_yes, z_no));
        max_err = std::max(max_err, std::fabs(p - ref));
        const double shift = rng.uniform_range(-100.0, 100.0);
        max_shift = std::max(max_shift,
                             std::fabs(decision_probability(z_yes + shift, z_no + shift) - p));
    }
    Outcome o;
    o.pass = max_err <= 1e-12 && max_shift <= 1e-12;
    o.detail = fmt("1000 pairs, max logistic err %.2e, max shift err %.2e", max_err, max_shift);
    return o;
}

// 3. cosine vs long-double brute force within 1e-12; coarse_retrieve equal to
//    a full scan on every fixture; every grounded scene a real scene id.
Outcome criterion3() {
    SplitMix64 rng(333);
    double max_cos_err = 0.0;
    for (int dim : {3, 8, 64}) {
        for (int trial = 0; trial < 50; ++trial) {
            EmbeddingVector a(static_cast<std::size_t>(dim)), b(a);
            for (auto& v : a) v = rng.uniform_range(-2.0, 2.0);
            for (auto& v : b) v = rng.uniform_range(-2.0, 2.0);
            long double dot = 0.0L, na = 0.0L, nb = 0.0L;
            for (int i = 0; i < dim; ++i) {
                dot += static_cast<long double>(a[static_cast<std::size_t>(i)]) *
                       b[static_cast<std::size_t>(i)];
                na += static_cast<long double>(a[static_cast<std::size_t>(i)]) *
                      a[static_cast<std::size_t>(i)];
                nb += static_cast<long double>(b[static_cast<std::size_t>(i)]) *
                      b[static_cast<std::size_t>(i)];
            }
            const double ref = static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
            max_cos_err = std::max(max_cos_err, std::fabs(cosine(a, b) - ref));
        }
    }

    int coarse_mismatches = 0, coarse_checks = 0;
    VectorIndex random_index;
    random_index.dimension = 8;
    for (int e = 0; e < 30; ++e) {
        EmbeddingVector v(8);
        for (auto& x : v) x = rng.uniform_range(-1.0, 1.0);
        random_index.entries.push_back({fmt("p%02d", e), v});
    }
    auto full_scan = [](const VectorIndex& index, const EmbeddingVector& q, int n) {
        std::vector<ScoredScene> all;
        for (const auto& entry : index.entries)
            all.push_back(ScoredScene{entry.scene_id, cosine(q, entry.vector)});
        std::sort(all.begin(), all.end(), [](const ScoredScene& x, const ScoredScene& y) {
            if (x.score != y.score) return x.score > y.score;
            return x.scene_id < y.scene_id;
        });
        all.resize(std::min(all.size(), static_cast<std::size_t>(n)));
        return all;
    };
    auto compare = [&](const VectorIndex& index, const EmbeddingVector& q, int n) {
        ++coarse_checks;
        const auto got = coarse_retrieve(index, q, n);
        const auto expected = full_scan(index, q, n);
        bool same = got.size() == expected.size();
        for (std::size_t i = 0; same && i < got.size(); ++i)
            same = got[i].scene_id == expected[i].scene_id && got[i].score == expected[i].score;
        if (!same) ++coarse_mismatches;
    };
    for (int n : {1, 3, 10, 30}) {
        for (int trial = 0; trial < 10; ++trial) {
            EmbeddingVector q(8);
            for (auto& x : q) x = rng.uniform_range(-1.0, 1.0);
            compare(random_index, q, n);
        }
    }

    SyntheticWorldConfig wc;
    wc.seed = 31;
    const World world = make_world(wc);
    HashingEmbedder embedder(64);
    std::vector<SceneProfile> profiles;
    for (const auto& scene : world.env.scenes) profiles.push_back(build_profile(scene));
    const VectorIndex scene_index = build_index(profiles, embedder);
    for (const auto& profile : profiles)
        for (int n : {1, 2, 4}) compare(scene_index, embedder.embed(profile.canonical_text), n);

    int grounding_checks = 0, grounding_violations = 0;
    std::set<std::string> scene_ids;
    for (const auto& scene : world.env.scenes) scene_ids.insert(scene.scene_id);
    RerankerParams params = RerankerParams::zero(64);
    for (int trial = 0; trial < 100; ++trial) {
        for (double& w : params.weights) w = rng.uniform_range(-0.3, 0.3);
        const std::string query = trial % 2 == 0
                                      ? profiles[static_cast<std::size_t>(trial) % profiles.size()]
                                            .canonical_text
                                      : fmt("random probe %d about scenes", trial);
        const auto trace = ground_target(scene_index, embedder, params, query, 3);
        ++grounding_checks;
        if (!scene_ids.count(trace.grounded_scene_id)) ++grounding_violations;
    }

    Outcome o;
    o.pass = max_cos_err <= 1e-12 && coarse_mismatches == 0 && grounding_violations == 0;
    o.detail = fmt("max cosine err %.2e, %d/%d coarse scans equal, %d/%d groundings real",
                   max_cos_err, coarse_checks - coarse_mismatches, coarse_checks,
                   grounding_checks - grounding_violations, grounding_checks);
    return o;
}

// 4. Reranker training: ln n initial loss, finite-difference gradient
//    agreement, and a 10x loss drop on the separable set with defaults.
Outcome criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 rng(444);
    double max_init_err = 0.0;
    for (int n : {2, 3, 5, 9, 17}) {
        RerankExample ex;
        ex.query.resize(6);
        for (auto& v : ex.query) v = rng.uniform_range(-1.0, 1.0);
        for (int i = 0; i < n; ++i) {
            EmbeddingVector c(6);
            for (auto& v : c) v = rng.uniform_range(-1.0, 1.0);
            ex.pool.push_back(std::move(c));
        }
        ex.gold_index = rng.uniform_int(static_cast<uint64_t>(n));
        const double loss = rerank_loss(RerankerParams::zero(6), ex);
        max_init_err = std::max(max_init_err, std::fabs(loss - std::log(n)));
    }

    double worst_grad = 0.0;
    for (int f = 0; f < 20; ++f) {
        RerankerParams params = RerankerParams::zero(5);
        for (double& w : params.weights) w = rng.uniform_range(-0.5, 0.5);
        params.bias = rng.uniform_range(-0.5, 0.5);
        RerankExample ex;
        ex.query.resize(5);
        for (auto& v : ex.query) v = rng.uniform_range(-1.0, 1.0);
        const int pool = 2 + f % 5;
        for (int i = 0; i < pool; ++i) {
            EmbeddingVector c(5);
            for (auto& v : c) v = rng.uniform_range(-1.0, 1.0);
            ex.pool.push_back(std::move(c));
        }
        ex.gold_index = rng.uniform_int(static_cast<uint64_t>(pool));
        worst_grad = std::max(worst_grad, reranker_grad_check(params, ex));
    }

    // Each marker hashes to its own bucket, so the four classes are linearly
    // separable and the default config must drive the loss down hard.
    HashingEmbedder embedder(16);
    const std::vector<std::string> markers = {"alpha", "bravo", "charlie", "echo"};
    std::vector<EmbeddingVector> anchors;
    for (const auto& m : markers) anchors.push_back(embedder.embed(m));
    std::vector<RerankExample> examples;
    for (std::size_t k = 0; k < markers.size(); ++k) {
        RerankExample ex;
        ex.query = anchors[k];
        ex.pool = anchors;
        ex.gold_index = k;
        examples.push_back(std::move(ex));
    }
    const RerankerTrainResult trained = train_reranker(examples, 16, RerankerTrainConfig{});
    const double initial = trained.trace.front();
    double final_loss = 0.0;
    for (const auto& ex : examples) final_loss += rerank_loss(trained.params, ex);
    final_loss /= static_cast<double>(examples.size());

    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = max_init_err <= 1e-9 && worst_grad < 1e-4 && final_loss < 0.1 * initial &&
             secs < 30.0;
    o.detail = fmt("max ln-n err %.2e, worst grad rel err %.2e, loss %.3f -> %.3f, %.1fs",
                   max_init_err, worst_grad, initial, final_loss, secs);
    return o;
}

// 5. Synthetic benchmark: beta=5, 10 items/scene, 6 turns, 200 episodes must
//    reach R@1 >= 0.9 and equal the enumerated pipeline exactly; beta=0 must
//    sit at chance within 0.05.
Outcome criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticWorldConfig wc;
    wc.n_scenes = 1;
    wc.items_per_scene = 10;
    wc.n_attributes = 2;
    wc.n_turns = 6;
    wc.episodes = 200;
    wc.beta = 5.0;
    wc.seed = 2024;
    const World world = make_world(wc);
    PipelineConfig config;
    const BenchmarkResult bench = simulate_benchmark(world, config, 4);
    const double engine_r1 = bench.report.value("R@1");

    int oracle_hits = 0, top1_mismatches = 0;
    for (std::size_t i = 0; i < world.episodes.size(); ++i) {
        const Episode& ep = world.episodes[i];
        const Scene* final_scene = world.env.find_scene(ep.final_scene);
        const auto posterior = oracle::brute_force_posterior(
            final_scene->items, world.action_space, episode_evidence(ep), world.beta);
        const std::string top = argsort_posterior(posterior).front();
        if (top == ep.target_item) ++oracle_hits;
        if (bench.episodes[i].final_ranking.empty() ||
            top != bench.episodes[i].final_ranking.front())
            ++top1_mismatches;
    }
    const double oracle_r1 = static_cast<double>(oracle_hits) / 200.0;

    wc.beta = 0.0;
    wc.seed = 2025;
    const World flat = make_world(wc);
    const double chance_r1 = simulate_benchmark(flat, config, 4).report.value("R@1");

    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = engine_r1 >= 0.9 && engine_r1 == oracle_r1 && top1_mismatches == 0 &&
             std::fabs(chance_r1 - 0.1) <= 0.05 && secs < 120.0;
    o.detail = fmt("beta=5 R@1 %.3f (oracle %.3f, top-1 mismatches %d), beta=0 R@1 %.3f, %.1fs",
                   engine_r1, oracle_r1, top1_mismatches, chance_r1, secs);
    return o;
}

// 6. Transition pipeline: scripted logits reproduce the tau=0.5 rule on every
//    turn, no-decision turns never touch the retriever, and the ROC machinery
//    lands at 1.0 / 0.5 where it must.
Outcome criterion6() {
    SyntheticWorldConfig wc;
    wc.seed = 66;
    const World world = make_world(wc);
    MockBackend backend(world_mock_config(world));
    HashingEmbedder embedder(64);
    std::vector<SceneProfile> profiles;
    for (const auto& scene : world.env.scenes) profiles.push_back(build_profile(scene));
    const VectorIndex index = build_index(profiles, embedder);
    const RerankerParams params = RerankerParams::zero(64);
    std::set<std::string> scene_ids;
    for (const auto& scene : world.env.scenes) scene_ids.insert(scene.scene_id);

    SplitMix64 rng(666);
    int disagreements = 0, fallback_violations = 0, grounding_violations = 0;
    const int turns = 400;
    for (int i = 0; i < turns; ++i) {
        const double z_yes = i == 0 ? 1.25 : rng.uniform_range(-8.0, 8.0);
        const double z_no = i == 0 ? 1.25 : rng.uniform_range(-8.0, 8.0);  // exact boundary once
        const std::string dialogue_id = fmt("ep-x%03d", i);
        const std::string target =
            profiles[rng.uniform_int(profiles.size())].canonical_text;
        backend.script_transition(dialogue_id, 1, TransitionInference{z_yes, z_no, target});
        TurnContext ctx;
        ctx.dialogue_id = dialogue_id;
        ctx.t = 1;
        ctx.scene = &world.env.scenes.front();
        ctx.profile = &profiles.front();
        const TransitionOutcome outcome =
            estimate_transition(backend, ctx, profiles.front(), index, embedder, params, 0.5, 10);
        const bool expected =
            static_cast<double>(reference_logistic(z_yes, z_no)) >= 0.5;
        if (outcome.decision.transition != expected) ++disagreements;
        if (!outcome.decision.transition) {
            if (outcome.retriever_calls != 0 || !outcome.trace.coarse.empty() ||
                outcome.scene_id != profiles.front().scene_id)
                ++fallback_violations;
        } else if (outcome.retriever_calls != 1 || !scene_ids.count(outcome.scene_id)) {
            ++grounding_violations;
        }
    }

    std::vector<ScoredLabel> separable, shuffled;
    for (int i = 0; i < 10000; ++i) {
        const bool label = i % 2 == 0;
        separable.push_back({label ? 0.6 + 0.4 * rng.uniform() : 0.4 * rng.uniform(), label});
        shuffled.push_back({rng.uniform(), rng.uniform() < 0.5});
    }
    const double auc_separable = roc_auc(separable);
    const double auc_shuffled = roc_auc(shuffled);

    Outcome o;
    o.pass = disagreements == 0 && fallback_violations == 0 && grounding_violations == 0 &&
             auc_separable == 1.0 && std::fabs(auc_shuffled - 0.5) <= 0.02;
    o.detail = fmt("%d scripted turns, %d disagreements, %d fallback / %d grounding "
                   "violations, AUC %.1f / %.3f",
                   turns, disagreements, fallback_violations, grounding_violations,
                   auc_separable, auc_shuffled);
    return o;
}

// 7. Metric suite: exact hand values, the per-record ranking invariant on 10k
//    samples, pairwise-AUC agreement, and near-zero ECE when calibrated.
Outcome criterion7() {
    const bool mrr_exact = mrr_at_k({RankingRecord{{"a", "b", "gold"}, {"gold"}}}, 5) == 1.0 / 3.0;
    const bool rouge_exact = rouge_l("a c", "a b c") == 0.8;

    SplitMix64 rng(777);
    int invariant_violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto n = 3 + rng.uniform_int(8);
        std::vector<std::string> ranked;
        for (std::uint64_t i = 0; i < n; ++i) ranked.push_back("it" + std::to_string(i));
        for (std::size_t i = 0; i + 1 < ranked.size(); ++i)
            std::swap(ranked[i], ranked[i + rng.uniform_int(ranked.size() - i)]);
        const std::string gold = rng.uniform_int(8) == 0
                                     ? std::string("missing")
                                     : ranked[rng.uniform_int(ranked.size())];
        const std::vector<RankingRecord> rec = {{ranked, {gold}}};
        const double r1 = recall_at_k(rec, 1);
        const double mrr5 = mrr_at_k(rec, 5);
        const double r5 = recall_at_k(rec, 5);
        if (!(r1 <= mrr5 && mrr5 <= r5)) ++invariant_violations;
    }

    double max_auc_err = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<ScoredLabel> records;
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < 200; ++i) {
            ScoredLabel r;
            r.score = static_cast<double>(rng.uniform_int(16)) / 16.0;  // plenty of ties
            r.label = rng.uniform() < 0.5;
            (r.label ? has_pos : has_neg) = true;
            records.push_back(r);
        }
        if (!has_pos || !has_neg) continue;
        double num = 0.0;
        std::size_t pairs = 0;
        for (const auto& p : records) {
            if (!p.label) continue;
            for (const auto& n : records) {
                if (n.label) continue;
                ++pairs;
                if (p.score > n.score)
                    num += 1.0;
                else if (p.score == n.score)
                    num += 0.5;
            }
        }
        max_auc_err = std::max(
            max_auc_err, std::fabs(roc_auc(records) - num / static_cast<double>(pairs)));
    }

    std::vector<ScoredLabel> calibrated;
    for (int i = 0; i < 10000; ++i) {
        ScoredLabel r;
        r.score = rng.uniform();
        r.label = rng.uniform() < r.score;
        calibrated.push_back(r);
    }
    const double ece = calibration(calibrated, 10).ece;

    Outcome o;
    o.pass = mrr_exact && rouge_exact && invariant_violations == 0 && max_auc_err <= 1e-12 &&
             ece < 0.02;
    o.detail = fmt("MRR/ROUGE exact %s/%s, %d invariant violations, max AUC err %.2e, "
                   "calibrated ECE %.4f",
                   mrr_exact ? "yes" : "no", rouge_exact ? "yes" : "no", invariant_violations,
                   max_auc_err, ece);
    return o;
}

// 8. Determinism: consecutive seeded simulate and evaluate runs serialise to
//    byte-identical reports.
Outcome criterion8() {
    SyntheticWorldConfig wc;
    wc.items_per_scene = 8;
    wc.n_turns = 4;
    wc.episodes = 30;
    wc.beta = 2.0;
    wc.seed = 88;
    PipelineConfig config;
    const std::string sim_a =
        report_json(simulate_benchmark(make_world(wc), config, 3).report).dump();
    const std::string sim_b =
        report_json(simulate_benchmark(make_world(wc), config, 3).report).dump();

    auto evaluate_once = [&]() {
        const Corpus corpus =
            ingest_dataset({"data/fixture_scenes.json", "data/fixture_dialogues.json"});
        MockUserConfig mock;
        for (const char* v : {"red", "blue", "grey", "green", "black"})
            mock.action_space.push_back(DialogueState{"INFORM:GET", {{"color", v}}});
        for (const char* v : {"jacket", "hat", "shoes", "dress", "coat"})
            mock.action_space.push_back(DialogueState{"INFORM:GET", {{"type", v}}});
        MockBackend backend(mock);
        Pipeline pipeline = make_pipeline(corpus.env, backend, config);
        script_from_corpus(backend, corpus, pipeline);
        return report_json(evaluate_corpus(corpus, backend, config).report).dump();
    };
    const std::string eval_a = evaluate_once();
    const std::string eval_b = evaluate_once();

    Outcome o;
    o.pass = sim_a == sim_b && eval_a == eval_b;
    o.detail = fmt("simulate reports %s, evaluate reports %s",
                   sim_a == sim_b ? "identical" : "DIFFER",
                   eval_a == eval_b ? "identical" : "DIFFER");
    return o;
}

// 9. Replay mode: bundled corpus ingestion matches its manifest and the 1:1
//    balanced split follows the limiting class.
Outcome criterion9() {
    Warnings warnings;
    const Corpus corpus = ingest_dataset(
        {"data/fixture_scenes.json", "data/fixture_dialogues.json"}, default_schema(), &warnings);
    const CorpusStats s = stats(corpus);
    std::size_t transition = 0, retention = 0;
    for (const auto& d : corpus.dialogues) (d.has_transition() ? transition : retention) += 1;

    nlohmann::json manifest;
    {
        std::FILE* f = std::fopen("data/fixture_manifest.json", "rb");
        if (!f) return {false, "cannot open data/fixture_manifest.json"};
        std::string data;
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, n);
        std::fclose(f);
        manifest = nlohmann::json::parse(data);
    }
    const bool stats_match = s.n_dialogues == manifest["n_dialogues"].get<std::size_t>() &&
                             s.n_utterances == manifest["n_utterances"].get<std::size_t>() &&
                             s.n_scenes == manifest["n_scenes"].get<std::size_t>() &&
                             s.n_items == manifest["n_items"].get<std::size_t>() &&
                             transition == manifest["n_transition"].get<std::size_t>() &&
                             retention == manifest["n_retention"].get<std::size_t>();

    const BalancedSplit split = balance_split(corpus, 1, 1, 5);
    const std::size_t expect = std::min(transition, retention);
    const bool split_match =
        split.transition_ids.size() == expect && split.retention_ids.size() == expect;

    Corpus reduced = corpus;
    for (std::size_t i = 0; i < reduced.dialogues.size(); ++i) {
        if (reduced.dialogues[i].has_transition()) {
            reduced.dialogues.erase(reduced.dialogues.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    const BalancedSplit limited = balance_split(reduced, 1, 1, 5);
    const bool limited_match =
        limited.transition_ids.size() == 9 && limited.retention_ids.size() == 9;

    Outcome o;
    o.pass = warnings.empty() && stats_match && split_match && limited_match;
    o.detail = fmt("stats %s manifest, 1:1 split (%zu, %zu), limited split (%zu, %zu)",
                   stats_match ? "match" : "MISMATCH", split.transition_ids.size(),
                   split.retention_ids.size(), limited.transition_ids.size(),
                   limited.retention_ids.size());
    return o;
}

}  // namespace

int main() {
    struct Entry {
        const char* label;
        Outcome (*run)();
    };
    const Entry entries[] = {
        {"oracle equivalence of ratios and rankings", criterion1},
        {"decision probability against high-precision logistic", criterion2},
        {"cosine, coarse retrieval, and grounding integrity", criterion3},
        {"reranker loss, gradients, and training", criterion4},
        {"end-to-end synthetic benchmark", criterion5},
        {"transition rule, fallback audit, and ROC", criterion6},
        {"metric suite fixtures and invariants", criterion7},
        {"byte-identical seeded reports", criterion8},
        {"replay ingestion and balanced split", criterion9},
    };
    int failures = 0;
    int n = 0;
    for (const auto& entry : entries) {
        ++n;
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = fmt("threw %s", e.what());
        }
        if (!outcome.pass) ++failures;
        std::printf("[%s] criterion %d: %s (%s)\n", outcome.pass ? "PASS" : "FAIL", n,
                    entry.label, outcome.detail.c_str());
    }
    if (failures) std::printf("%d of 9 criteria failing\n", failures);
    return failures == 0 ? 0 : 1;
}
