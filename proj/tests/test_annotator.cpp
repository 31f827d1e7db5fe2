#include <set>
#include <sstream>

#include <doctest.h>

#include "sceneforge/annotator.hpp"
#include "sceneforge/errors.hpp"
#include "sceneforge/integrator.hpp"
#include "sceneforge/synthetic.hpp"

using namespace sceneforge;

namespace {

std::set<std::string> tokens(const std::string& text) {
    std::set<std::string> out;
    std::istringstream iss(text);
    std::string w;
    while (iss >> w) out.insert(w);
    return out;
}

// Wraps a client to make one answer overly verbose.
class VerboseOnce final : public ChatClient {
public:
    explicit VerboseOnce(std::shared_ptr<ChatClient> inner) : inner_(std::move(inner)) {}
    std::string describe(const Image& image, const std::string& prompt) override {
        if (!fired_) {
            fired_ = true;
            std::string big;
            for (int i = 0; i < 200; ++i) big += "word ";
            return big;
        }
        return inner_->describe(image, prompt);
    }
    std::string complete(const std::string& prompt) override { return inner_->complete(prompt); }
    void observe(const Image& img, const ObjectFacts& f) override { inner_->observe(img, f); }
    void observe_pair(const Image& img, const ObjectFacts& t, const ObjectFacts& d) override {
        inner_->observe_pair(img, t, d);
    }

private:
    std::shared_ptr<ChatClient> inner_;
    bool fired_ = false;
};

// Always throws; used to exercise the retry-then-fail path.
class FlakyClient final : public ChatClient {
public:
    std::string describe(const Image&, const std::string&) override { throw Error("backend down"); }
    std::string complete(const std::string&) override { throw Error("backend down"); }
};

AnnotationConfig small_config() {
    AnnotationConfig cfg;
    cfg.image_width = 64;
    cfg.image_height = 64;
    return cfg;
}

PairContext chair_ctx() {
    PairContext ctx;
    ctx.pair_id = "p0";
    ctx.target_class = "chair";
    ctx.distractor_class = "chair";
    return ctx;
}

}  // namespace

TEST_CASE("location phrases follow vocabulary v1") {
    CHECK(location_phrase(SpatialPredicate::Left, {"chair"}) == "to the left of the chair");
    CHECK(location_phrase(SpatialPredicate::Right, {"table"}) == "to the right of the table");
    CHECK(location_phrase(SpatialPredicate::Front, {"lamp"}) == "in front of the lamp");
    CHECK(location_phrase(SpatialPredicate::Back, {"cart"}) == "behind the cart");
    CHECK(location_phrase(SpatialPredicate::Above, {"chair"}) == "above the chair");
    CHECK(location_phrase(SpatialPredicate::Below, {"chair"}) == "below the chair");
    CHECK(location_phrase(SpatialPredicate::UpperLeft, {"chair"}) == "to the upper left of the chair");
    CHECK(location_phrase(SpatialPredicate::Between, {"chair", "chair"}) == "between the two chairs");
    CHECK(location_phrase(SpatialPredicate::Between, {"chair", "table"}) ==
          "between the chair and the table");
    CHECK(location_phrase(SpatialPredicate::Surrounded, {"chair", "chair", "chair", "chair"}) ==
          "surrounded by the chairs");
    CHECK(location_phrase(SpatialPredicate::Near, {"lamp"}) == "near the lamp");
    CHECK_THROWS_AS(location_phrase(SpatialPredicate::Between, {"chair"}), ArityMismatch);
    CHECK_THROWS_AS(location_phrase(SpatialPredicate::Left, {"a", "b"}), ArityMismatch);
}

TEST_CASE("iter_cap produces one caption per iteration with the mock") {
    const PointCloud a = sample_cuboid({1, 1, 1}, {121, 85, 61}, 256, 7);
    const PointCloud b = sample_sphere(0.5, {121, 85, 61}, 256, 8);
    const AnnotationConfig cfg = small_config();
    ClientPair clients = mock_clients(1);

    const Image ia = render_view({a}, cfg.views[0], 64, 64);
    const Image ib = render_view({b}, cfg.views[0], 64, 64);
    const Image pair = concat_horizontal(ia, ib);
    ObjectFacts fa{"chair", "brown", ShapeCategory::Cuboid, 1.7, 1.0};
    ObjectFacts fb{"chair", "brown", ShapeCategory::Sphere, 1.0, 1.0};
    clients.vision->observe_pair(pair, fa, fb);

    SUBCASE("three iterations, three accepted captions, stable across runs") {
        const IterCapResult r1 = iter_cap(pair, 3, clients, cfg);
        CHECK(r1.captions.size() == 3);
        CHECK(r1.entries.size() == 3);
        const IterCapResult r2 = iter_cap(pair, 3, clients, cfg);
        CHECK(r1.captions == r2.captions);
    }
    SUBCASE("a single iteration returns the seeded first answer") {
        const IterCapResult r = iter_cap(pair, 1, clients, cfg);
        REQUIRE(r.captions.size() == 1);
        CHECK(r.entries[0].accepted);
        CHECK(r.entries[0].question.find("height") != std::string::npos);
    }
    SUBCASE("verbose answers are re-asked once and marked") {
        ClientPair wrapped = clients;
        wrapped.vision = std::make_shared<VerboseOnce>(clients.vision);
        const IterCapResult r = iter_cap(pair, 3, wrapped, cfg);
        CHECK(r.captions.size() == 3);  // retry recovered the round
        int rejections = 0;
        for (const QAEntry& e : r.entries) rejections += e.rejections;
        CHECK(rejections == 1);
        CHECK(r.entries[0].rejection_reason.find("verbose") != std::string::npos);
    }
    SUBCASE("a failing client surfaces as ClientFailure with the round") {
        ClientPair broken = clients;
        broken.vision = std::make_shared<FlakyClient>();
        try {
            iter_cap(pair, 2, broken, cfg, 4, 0);
            FAIL("expected ClientFailure");
        } catch (const ClientFailure& e) {
            CHECK(e.round == 4);
        }
    }
}

TEST_CASE("annotate_pair follows the round/view/iteration loop") {
    const PointCloud target = sample_cuboid({1, 1, 1.4}, {121, 85, 61}, 512, 9);
    const PointCloud distractor = sample_sphere(0.55, {118, 88, 60}, 512, 10);
    const AnnotationConfig cfg = small_config();
    ClientPair clients = mock_clients(2);

    auto [summary, transcript] = annotate_pair(target, distractor, clients, cfg, chair_ctx());

    CHECK(transcript.slots.size() == static_cast<std::size_t>(cfg.qa_rounds) * cfg.views.size());
    CHECK(transcript.accepted_captions() <=
          static_cast<std::size_t>(cfg.qa_rounds) * cfg.views.size() * cfg.iter_rounds);
    // A shape-distinct pair surfaces the differing attribute in the summary.
    CHECK(summary.combined.find("shape") != std::string::npos);
    CHECK(summary.dimensions_covered.count("shape") == 1);
    CHECK_FALSE(summary.combined.empty());

    SUBCASE("slot keys are unique and ordered by (round, view)") {
        int last_round = 0, last_view = -1;
        for (const ViewSlot& slot : transcript.slots) {
            const bool advanced = slot.round > last_round || (slot.round == last_round && slot.view > last_view);
            CHECK(advanced);
            last_round = slot.round;
            last_view = slot.view;
            std::set<int> iterations;
            for (const QAEntry& e : slot.qa) iterations.insert(e.iteration);
            CHECK(iterations.size() == slot.qa.size());
        }
    }

    SUBCASE("determinism: identical inputs give identical transcripts") {
        ClientPair clients2 = mock_clients(2);
        auto [summary2, transcript2] = annotate_pair(target, distractor, clients2, cfg, chair_ctx());
        CHECK(summary2.combined == summary.combined);
        CHECK(transcript_json({"s", {transcript2}}) == transcript_json({"s", {transcript}}));
    }

    SUBCASE("identical clouds flag no salient difference") {
        ClientPair clients3 = mock_clients(3);
        auto [summary3, transcript3] = annotate_pair(target, target, clients3, cfg, chair_ctx());
        CHECK(summary3.combined.find("no salient difference") != std::string::npos);
        CHECK_FALSE(summary3.dimensions_covered.empty());
    }
}

TEST_CASE("the language mock cycles attributes starting at height") {
    ClientPair clients = mock_clients(4);
    const std::string q1 = clients.language->complete("[ask round=1 check=1] ...\n(none)");
    CHECK(q1.find("height") != std::string::npos);
    const std::string q2 = clients.language->complete("[ask round=2 check=1] ...\n(none)");
    CHECK(q2.find("color") != std::string::npos);
    const std::string q7 = clients.language->complete("[ask round=7 check=1] ...\n(none)");
    CHECK(q7 == q1);  // cycle wraps after six attributes
}

TEST_CASE("the mock summarizer is extractive") {
    ClientPair clients = mock_clients(5);
    const std::string prompt =
        "[condense] keep distinct lines\n---\n"
        "the left object is taller than the right object.\n"
        "both objects are brown.\n"
        "the left object is taller than the right object.\n";
    const std::string out = clients.language->complete(prompt);
    const auto in_tokens = tokens(prompt);
    for (const std::string& tok : tokens(out)) CHECK(in_tokens.count(tok) == 1);
    // Deduplication kept one copy of the repeated line.
    CHECK(out.find("taller") == out.rfind("taller"));
}

namespace {

Scene tiny_scene(DistinctionType distinction, std::uint64_t seed) {
    DemoPoolConfig pool_cfg;
    pool_cfg.classes = {"chair", "table"};
    pool_cfg.per_cell = 3;
    pool_cfg.points = 256;
    const Pool pool = build_demo_pool(pool_cfg, seed);
    const ObjectRecord& target = pool.records()[Rng(seed).uniform_index(pool.size())];
    BackgroundConfig bg;
    bg.floor_points = 512;
    const SyntheticBackground backdrop = synthesize_background(target, pool, derive_seed(seed, "bg"), bg);

    SceneSpec spec;
    spec.scene_id = "anno" + std::to_string(seed);
    spec.background = "synthetic:" + target.id;
    spec.target_instance = backdrop.target_instance;
    spec.target_class = target.class_label;
    spec.distinction = distinction;
    spec.num_distractors = 1;
    spec.predicates = {{SpatialPredicate::Left, 1}};
    spec.seed = seed;
    return assemble(spec, pool, backdrop.scene);
}

}  // namespace

TEST_CASE("compose_annotation builds class + clause + phrase") {
    AnnotationConfig cfg = small_config();
    cfg.qa_rounds = 2;
    cfg.iter_rounds = 2;

    SUBCASE("shape distinction mentions class, shape word and phrase") {
        const Scene scene = tiny_scene(DistinctionType::LocationShape, 11);
        ClientPair clients = mock_clients(11);
        auto [ann, transcript] = annotate_scene(scene, clients, cfg);
        CHECK(ann.scene_id == scene.scene_id);
        CHECK(ann.text.find(scene.target().class_label) != std::string::npos);
        CHECK(ann.text.find(shape_word(scene.target().shape)) != std::string::npos);
        CHECK(ann.text.find(ann.location_phrase) != std::string::npos);
        CHECK(ann.location_phrase.find("to the left of the") != std::string::npos);
        CHECK(transcript.pairs.size() == 1);
    }
    SUBCASE("location distinction relies on the phrase alone") {
        const Scene scene = tiny_scene(DistinctionType::Location, 12);
        ClientPair clients = mock_clients(12);
        auto [ann, transcript] = annotate_scene(scene, clients, cfg);
        CHECK(ann.text == "the " + scene.target().class_label + " " + ann.location_phrase);
    }
    SUBCASE("deterministic annotation text") {
        const Scene scene = tiny_scene(DistinctionType::LocationColor, 13);
        auto [a1, t1] = annotate_scene(scene, mock_clients(13), cfg);
        auto [a2, t2] = annotate_scene(scene, mock_clients(13), cfg);
        CHECK(a1.text == a2.text);
    }
}

TEST_CASE("ambiguous layouts raise NonUniqueDescription") {
    // Near between two same-class objects reads both ways, so the mechanical
    // check must find two matches.
    const PointCloud cloud_a = sample_cuboid({1, 1, 1}, {121, 85, 61}, 256, 21);
    const PointCloud cloud_b = sample_cuboid({1, 1, 1}, {119, 87, 62}, 256, 22);

    Scene scene;
    scene.scene_id = "ambiguous";
    scene.spec.distinction = DistinctionType::Location;
    scene.spec.clearance = 0.05;
    scene.spec.num_distractors = 1;
    scene.spec.predicates = {{SpatialPredicate::Near, 1}};

    PlacedObject target;
    target.record_id = "t";
    target.instance_id = 1;
    target.role = Role::Target;
    target.class_label = "chair";
    target.cloud = cloud_a;
    target.box = aabb(cloud_a);
    target.mean_color = mean_color(cloud_a);
    target.shape = classify_shape(cloud_a);

    PlacedObject distractor = target;
    distractor.record_id = "d";
    distractor.instance_id = 2;
    distractor.role = Role::Distractor;
    distractor.cloud = translate(cloud_b, {1.3, 0, 0});
    distractor.box = aabb(distractor.cloud);
    distractor.mean_color = mean_color(distractor.cloud);
    distractor.shape = classify_shape(distractor.cloud);
    distractor.predicate = SpatialPredicate::Near;
    distractor.predicate_group = 0;

    scene.objects = {target, distractor};
    scene.target_box = target.box;

    CHECK(matching_objects(scene) == 2);
    const std::vector<DistinctionSummary> summaries(1);
    CHECK_THROWS_AS(compose_annotation(scene, summaries, AnnotationConfig{}), NonUniqueDescription);
}
