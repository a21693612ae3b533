#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "screc/catalog.hpp"
#include "screc/retrieval.hpp"
#include "screc/util.hpp"

using namespace screc;

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLn4 = 1.3862943611198906188;
constexpr double kLn16 = 2.7725887222397812377;
constexpr double kInvSqrt2 = 0.7071067811865475244;

// d = 4 bilinear fixture; all parameter values are dyadic so the expected
// score 0.475 is reached without rounding slack worth worrying about.
RerankerParams fixture_params() {
    RerankerParams p = RerankerParams::zero(4);
    p.weights = {0.5,  -0.25, 0.0,   1.0,    //
                 0.125, 0.75, -0.5,  0.25,   //
                 1.0,   0.0,  0.375, -0.125, //
                 -0.75, 0.5,  0.25,  0.0};
    p.bias = 0.125;
    return p;
}

std::vector<SceneProfile> fixture_profiles() {
    const Environment env = load_environment("data/fixture_scenes.json");
    std::vector<SceneProfile> profiles;
    for (const auto& scene : env.scenes) profiles.push_back(build_profile(scene));
    return profiles;
}

// Four orthogonal one-token profiles: queries and candidates coincide, so
// the listwise problem is perfectly separable.
std::vector<RerankExample> separable_examples(HashingEmbedder& embedder) {
    const std::vector<std::string> texts = {"alpha alpha", "bravo bravo", "charlie charlie",
                                            "echo echo"};
    std::vector<EmbeddingVector> pool;
    for (const auto& t : texts) pool.push_back(embedder.embed(t));
    std::vector<RerankExample> examples;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        RerankExample ex;
        ex.query = pool[i];
        ex.pool = pool;
        ex.gold_index = i;
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::string temp_path(const char* name) {
    return std::string("data/tmp_") + name;
}

}  // namespace

TEST_CASE("hashing embedder is deterministic with the frozen bucket layout") {
    HashingEmbedder embedder(4);
    CHECK(embedder.dimension() == 4);

    const EmbeddingVector q = embedder.embed("red jacket outdoor");
    REQUIRE(q.size() == 4);
    const double s5 = std::sqrt(5.0);
    CHECK_THAT(q[0], Catch::Matchers::WithinAbs(1.0 / s5, 1e-15));  // "red"
    CHECK_THAT(q[1], Catch::Matchers::WithinAbs(0.0, 0.0));
    CHECK_THAT(q[2], Catch::Matchers::WithinAbs(0.0, 0.0));
    CHECK_THAT(q[3], Catch::Matchers::WithinAbs(2.0 / s5, 1e-15));  // "jacket", "outdoor"

    const EmbeddingVector c = embedder.embed("blue hat indoor");
    CHECK_THAT(c[1], Catch::Matchers::WithinAbs(1.0 / s5, 1e-15));  // "blue"
    CHECK_THAT(c[2], Catch::Matchers::WithinAbs(2.0 / s5, 1e-15));  // "hat", "indoor"

    CHECK(embedder.embed("red jacket outdoor") == q);
    CHECK(embedder.embed("Red, JACKET; outdoor!") == q);  // punctuation and case wash out

    double norm = 0.0;
    for (double x : q) norm += x * x;
    CHECK_THAT(norm, Catch::Matchers::WithinAbs(1.0, 1e-12));

    CHECK_THROWS_AS(embedder.embed("  !!  "), contract_error);
    CHECK_THROWS_AS(HashingEmbedder(0), config_error);
}

TEST_CASE("cosine similarity") {
    CHECK_THAT(cosine({1.0, 0.0}, {1.0, 1.0}), Catch::Matchers::WithinAbs(kInvSqrt2, 1e-15));
    CHECK_THAT(cosine({2.0, 0.0}, {5.0, 0.0}), Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(cosine({1.0, 0.0}, {0.0, 3.0}), Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(cosine({1.0, 0.0}, {0.0, 0.0}), contract_error);
    CHECK_THROWS_AS(cosine({1.0}, {1.0, 0.0}), contract_error);
}

TEST_CASE("rerank score reproduces the bilinear fixture") {
    HashingEmbedder embedder(4);
    const double score = rerank_score(fixture_params(), embedder.embed("red jacket outdoor"),
                                      embedder.embed("blue hat indoor"));
    CHECK_THAT(score, Catch::Matchers::WithinAbs(0.475, 1e-12));
}

TEST_CASE("rerank score validates shapes") {
    const RerankerParams params = fixture_params();
    CHECK_THROWS_AS(rerank_score(params, {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0}), contract_error);
    RerankerParams bad;
    bad.dimension = 4;  // weights missing
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("uniform pools start at ln n loss") {
    HashingEmbedder embedder(16);
    const EmbeddingVector a = embedder.embed("alpha");
    const EmbeddingVector b = embedder.embed("bravo");
    const EmbeddingVector c = embedder.embed("charlie");
    const EmbeddingVector e = embedder.embed("echo");
    const RerankerParams zero = RerankerParams::zero(16);

    RerankExample two{a, {a, b}, 0};
    CHECK_THAT(rerank_loss(zero, two), Catch::Matchers::WithinAbs(kLn2, 1e-15));

    RerankExample four{a, {a, b, c, e}, 2};
    CHECK_THAT(rerank_loss(zero, four), Catch::Matchers::WithinAbs(kLn4, 1e-15));

    RerankExample sixteen{a, {}, 5};
    for (int i = 0; i < 16; ++i) sixteen.pool.push_back(b);
    CHECK_THAT(rerank_loss(zero, sixteen), Catch::Matchers::WithinAbs(kLn16, 1e-15));
}

TEST_CASE("pool contracts") {
    const RerankerParams zero = RerankerParams::zero(2);
    RerankExample single{{1.0, 0.0}, {{1.0, 0.0}}, 0};
    CHECK_THROWS_AS(rerank_loss(zero, single), contract_error);
    RerankExample out{{1.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}, 2};
    CHECK_THROWS_AS(rerank_loss(zero, out), contract_error);
}

TEST_CASE("analytic gradients agree with central differences") {
    SplitMix64 rng(1234);
    for (int round = 0; round < 20; ++round) {
        const int d = 2 + static_cast<int>(rng.uniform_int(4));
        RerankerParams params = RerankerParams::zero(d);
        for (double& w : params.weights) w = rng.uniform_range(-0.5, 0.5);
        params.bias = rng.uniform_range(-0.5, 0.5);
        RerankExample ex;
        for (int i = 0; i < d; ++i) ex.query.push_back(rng.uniform_range(-1.0, 1.0));
        const auto n_pool = 2 + rng.uniform_int(4);
        for (uint64_t j = 0; j < n_pool; ++j) {
            EmbeddingVector c;
            for (int i = 0; i < d; ++i) c.push_back(rng.uniform_range(-1.0, 1.0));
            ex.pool.push_back(std::move(c));
        }
        ex.gold_index = rng.uniform_int(ex.pool.size());
        CHECK(reranker_grad_check(params, ex) < 1e-4);
    }
}

TEST_CASE("bias gradient vanishes by shift invariance") {
    HashingEmbedder embedder(16);
    const auto examples = separable_examples(embedder);
    RerankerParams params = RerankerParams::zero(16);
    params.bias = 0.375;
    const RerankerGrad grad = reranker_grad(params, examples[0]);
    CHECK_THAT(grad.bias, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("grad check rejects a degenerate step") {
    HashingEmbedder embedder(16);
    const auto examples = separable_examples(embedder);
    CHECK_THROWS_AS(reranker_grad_check(RerankerParams::zero(16), examples[0], 0.0), config_error);
}

TEST_CASE("training separates the marker pools with the default config") {
    HashingEmbedder embedder(16);
    const auto examples = separable_examples(embedder);
    const RerankerTrainConfig config;
    const RerankerTrainResult result = train_reranker(examples, 16, config);

    REQUIRE(result.trace.size() == static_cast<std::size_t>(config.epochs));
    CHECK_THAT(result.trace.front(), Catch::Matchers::WithinAbs(kLn4, 0.05));
    for (std::size_t i = 1; i < result.trace.size(); ++i)
        CHECK(result.trace[i] <= result.trace[i - 1] + 1e-12);

    const double final_loss = rerank_loss(result.params, examples[0]);
    CHECK(final_loss < 0.1 * result.trace.front());

    for (const auto& ex : examples) {
        std::size_t best = 0;
        double best_score = rerank_score(result.params, ex.query, ex.pool[0]);
        for (std::size_t j = 1; j < ex.pool.size(); ++j) {
            const double s = rerank_score(result.params, ex.query, ex.pool[j]);
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        CHECK(best == ex.gold_index);
    }
}

TEST_CASE("non-finite losses abort training as divergence") {
    RerankExample ex;
    ex.query = {1e200, 1e200};
    ex.pool = {{1e200, 1e200}, {-1e200, 1e200}};
    ex.gold_index = 0;
    RerankerTrainConfig config;
    CHECK_THROWS_MATCHES(train_reranker({ex}, 2, config), divergence_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("epoch 0")));
}

TEST_CASE("training input contracts") {
    RerankerTrainConfig config;
    CHECK_THROWS_AS(train_reranker({}, 4, config), contract_error);
    RerankExample thin{{1.0, 0.0}, {{1.0, 0.0}}, 0};
    CHECK_THROWS_AS(train_reranker({thin}, 2, config), contract_error);
    RerankExample mismatched{{1.0}, {{1.0, 0.0}, {0.0, 1.0}}, 0};
    CHECK_THROWS_AS(train_reranker({mismatched}, 2, config), contract_error);
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(config.validate(), config_error);
}

TEST_CASE("index ranks fixture scenes by cosine with ascending-id ties") {
    HashingEmbedder embedder(64);
    const auto profiles = fixture_profiles();
    const VectorIndex index = build_index(profiles, embedder);
    REQUIRE(index.size() == 4);
    CHECK(index.dimension == 64);

    const EmbeddingVector query = embedder.embed(profiles[1].canonical_text);
    const auto top = coarse_retrieve(index, query, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].scene_id == profiles[1].scene_id);
    CHECK_THAT(top[0].score, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(top[0].score >= top[1].score);

    const auto all = coarse_retrieve(index, query, 99);  // n beyond size truncates
    CHECK(all.size() == 4);
    CHECK_THROWS_AS(coarse_retrieve(index, query, 0), config_error);
}

TEST_CASE("equal-similarity scenes order by ascending scene id") {
    const EmbeddingVector v = {1.0, 0.0, 0.0};
    const EmbeddingVector w = {0.0, 1.0, 0.0};
    VectorIndex index;
    index.dimension = 3;
    index.entries = {{"sY", v}, {"sX", v}, {"sA", w}};

    const auto top = coarse_retrieve(index, v, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].score == top[1].score);
    CHECK(top[0].scene_id == "sX");  // tie resolved by id, not insertion order
    CHECK(top[1].scene_id == "sY");
    CHECK(top[2].scene_id == "sA");
}

TEST_CASE("duplicate scene ids cannot be indexed") {
    HashingEmbedder embedder(16);
    Scene s;
    s.scene_id = "dup";
    Item item;
    item.item_id = "i1";
    s.items = {item};
    const std::vector<SceneProfile> profiles = {build_profile(s), build_profile(s)};
    CHECK_THROWS_AS(build_index(profiles, embedder), contract_error);
}

TEST_CASE("index file round trip preserves every coefficient") {
    HashingEmbedder embedder(64);
    const auto profiles = fixture_profiles();
    const VectorIndex index = build_index(profiles, embedder);
    const std::string path = temp_path("index.tsv");
    save_index(index, path);
    const VectorIndex loaded = load_index(path);
    std::remove(path.c_str());

    CHECK(loaded.dimension == index.dimension);
    REQUIRE(loaded.size() == index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.entries[i].scene_id == index.entries[i].scene_id);
        REQUIRE(loaded.entries[i].vector.size() == index.entries[i].vector.size());
        for (std::size_t j = 0; j < index.entries[i].vector.size(); ++j)
            CHECK(loaded.entries[i].vector[j] == index.entries[i].vector[j]);
    }

    CHECK_THROWS_AS(load_index("data/missing_index.tsv"), contract_error);
}

TEST_CASE("reranker file round trip preserves every coefficient") {
    SplitMix64 rng(5150);
    RerankerParams params = RerankerParams::zero(6);
    for (double& w : params.weights) w = rng.uniform_range(-2.0, 2.0);
    params.bias = rng.uniform_range(-1.0, 1.0);

    const std::string path = temp_path("reranker.txt");
    save_reranker(params, path);
    const RerankerParams loaded = load_reranker(path);
    std::remove(path.c_str());

    CHECK(loaded.dimension == 6);
    CHECK(loaded.bias == params.bias);
    REQUIRE(loaded.weights.size() == params.weights.size());
    for (std::size_t i = 0; i < params.weights.size(); ++i)
        CHECK(loaded.weights[i] == params.weights[i]);

    CHECK_THROWS_AS(load_reranker("data/missing_reranker.txt"), contract_error);
}
