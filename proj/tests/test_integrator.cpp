#include <algorithm>
#include <set>

#include <doctest.h>

#include "sceneforge/errors.hpp"
#include "sceneforge/integrator.hpp"
#include "sceneforge/ply.hpp"
#include "sceneforge/synthetic.hpp"

using namespace sceneforge;

namespace {

PointCloud tagged_cloud(std::initializer_list<std::pair<Vec3, int>> pts) {
    PointCloud pc;
    for (const auto& [p, inst] : pts) {
        pc.push_back(p, {50, 50, 50});
        pc.instance.push_back(inst);
    }
    return pc;
}

std::multiset<std::array<double, 3>> point_multiset(const PointCloud& pc) {
    std::multiset<std::array<double, 3>> s;
    for (const Vec3& p : pc.xyz) s.insert({p.x, p.y, p.z});
    return s;
}

PlacedObject placed_target(const PointCloud& cloud) {
    PlacedObject obj;
    obj.role = Role::Target;
    obj.cloud = cloud;
    obj.box = aabb(cloud);
    obj.class_label = "chair";
    return obj;
}

Pool small_pool(std::uint64_t seed) {
    DemoPoolConfig cfg;
    cfg.classes = {"chair", "table"};
    cfg.per_cell = 3;
    cfg.points = 256;
    return build_demo_pool(cfg, seed);
}

}  // namespace

TEST_CASE("extract_target partitions the scene exactly") {
    PointCloud scene;
    Rng rng(60);
    for (int i = 0; i < 100; ++i) {
        scene.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}, {1, 2, 3});
        scene.instance.push_back(i < 20 ? 7 : (i % 3));
    }
    const ExtractResult res = extract_target(scene, 7);
    CHECK(res.target.size() == 20);
    CHECK(res.background.size() == 80);
    CHECK(res.background_objects.size() == 3);

    PointCloud merged = res.target;
    merged.append(res.background);
    CHECK(point_multiset(merged) == point_multiset(scene));

    CHECK_THROWS_AS(extract_target(scene, 99), UnknownInstance);
    PointCloud untagged;
    untagged.push_back({0, 0, 0}, {0, 0, 0});
    CHECK_THROWS_AS(extract_target(untagged, 0), Error);
}

TEST_CASE("normalize_distractor matches count, scale band and is deterministic") {
    const PointCloud target = sample_cuboid({1, 1, 1}, {90, 90, 90}, 500, 61);
    ObjectRecord rec = make_record(sample_sphere(0.8, {90, 90, 90}, 900, 62), "ball",
                                   Provenance::RealScan, "test");

    const PointCloud out = normalize_distractor(rec, target, 63);
    CHECK(out.size() == target.size());
    const double ratio = aabb(out).diagonal() / aabb(target).diagonal();
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.2);

    const PointCloud out2 = normalize_distractor(rec, target, 63);
    REQUIRE(out2.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.xyz[i] == out2.xyz[i]);
}

TEST_CASE("place satisfies its own predicate") {
    const PointCloud target_cloud = sample_cuboid({1, 1, 1}, {90, 90, 90}, 400, 64);
    const PlacedObject target = placed_target(target_cloud);
    const PointCloud distractor = sample_cuboid({0.8, 0.8, 0.8}, {90, 90, 90}, 400, 65);

    for (SpatialPredicate pred : {SpatialPredicate::Left, SpatialPredicate::Right,
                                  SpatialPredicate::Front, SpatialPredicate::Back,
                                  SpatialPredicate::Above, SpatialPredicate::Below,
                                  SpatialPredicate::UpperLeft, SpatialPredicate::UpperRight,
                                  SpatialPredicate::LowerLeft, SpatialPredicate::LowerRight}) {
        CAPTURE(to_string(pred));
        const PointCloud posed = place(target, pred, distractor, {target.box}, 0.05, 66);
        CHECK(evaluate_predicate(pred, target.box, {aabb(posed)}, 0.05));
    }
}

TEST_CASE("multi-arity placement round-trips through the evaluator") {
    const PointCloud target_cloud = sample_cuboid({1, 1, 1}, {90, 90, 90}, 400, 67);
    const PlacedObject target = placed_target(target_cloud);

    SUBCASE("between") {
        std::vector<PointCloud> pair = {sample_cuboid({0.9, 0.9, 0.9}, {90, 90, 90}, 400, 68),
                                        sample_sphere(0.5, {90, 90, 90}, 400, 69)};
        const auto posed = place_group(target, SpatialPredicate::Between, pair, {target.box}, 0.05, 70);
        REQUIRE(posed.size() == 2);
        CHECK(evaluate_predicate(SpatialPredicate::Between, target.box,
                                 {aabb(posed[0]), aabb(posed[1])}, 0.05));
    }
    SUBCASE("surrounded") {
        std::vector<PointCloud> ring;
        for (int i = 0; i < 4; ++i) ring.push_back(sample_cuboid({0.7, 0.7, 0.7}, {90, 90, 90}, 300, 71 + i));
        const auto posed = place_group(target, SpatialPredicate::Surrounded, ring, {target.box}, 0.05, 75);
        std::vector<Aabb> boxes;
        for (const PointCloud& pc : posed) boxes.push_back(aabb(pc));
        CHECK(evaluate_predicate(SpatialPredicate::Surrounded, target.box, boxes, 0.05));
    }
    SUBCASE("near") {
        const PointCloud posed = place(target, SpatialPredicate::Near,
                                       sample_cuboid({0.8, 0.8, 0.8}, {90, 90, 90}, 300, 76),
                                       {target.box}, 0.05, 77);
        CHECK(evaluate_predicate(SpatialPredicate::Near, target.box, {aabb(posed)}, 0.05));
    }
}

TEST_CASE("a boxed-in target makes placement infeasible") {
    const PointCloud target_cloud = sample_cuboid({1, 1, 1}, {90, 90, 90}, 300, 80);
    const PlacedObject target = placed_target(target_cloud);
    const Vec3 c = target.box.center();
    // A wall blocking the whole band left of the target.
    const Aabb wall{{c.x - 30.0, c.y - 30.0, c.z - 30.0}, {c.x - 0.51, c.y + 30.0, c.z + 30.0}};
    const PointCloud distractor = sample_cuboid({0.8, 0.8, 0.8}, {90, 90, 90}, 300, 81);
    CHECK_THROWS_AS(place(target, SpatialPredicate::Left, distractor, {target.box, wall}, 0.05, 82),
                    PlacementInfeasible);
}

TEST_CASE("exclude_overlaps drops colliding instances but keeps structure") {
    // Floor (instance 0) spans the scene; lamp (instance 5) sits inside the
    // placed box; shelf (instance 6) is clear of it.
    PointCloud background = tagged_cloud({
        {{-5, -5, 0}, 0}, {{5, 5, 0}, 0}, {{5, -5, 0}, 0}, {{-5, 5, 0}, 0},
        {{1.0, 1.0, 0.5}, 5}, {{1.1, 1.1, 0.7}, 5},
        {{-3, -3, 0.5}, 6}, {{-3.1, -3, 0.6}, 6},
    });
    const Aabb placed{{0.8, 0.8, 0.0}, {1.5, 1.5, 1.0}};

    const ExcludeResult res = exclude_overlaps(background, {placed});
    CHECK(res.dropped_instances == std::vector<int>{5});
    CHECK(res.dropped_points == 2);
    std::set<int> kept(res.retained.instance.begin(), res.retained.instance.end());
    CHECK(kept == std::set<int>{0, 6});

    SUBCASE("no intersections leaves the background unchanged") {
        const ExcludeResult clear = exclude_overlaps(background, {Aabb{{40, 40, 40}, {41, 41, 41}}});
        CHECK(clear.dropped_instances.empty());
        CHECK(clear.retained.size() == background.size());
    }
    SUBCASE("fallback crops points without instance ids") {
        PointCloud loose;
        loose.push_back({1.0, 1.0, 0.5}, {1, 1, 1});   // inside
        loose.push_back({-3.0, 0.0, 0.2}, {1, 1, 1});  // outside
        const ExcludeResult res2 = exclude_overlaps(loose, {placed});
        CHECK(res2.dropped_points == 1);
        REQUIRE(res2.retained.size() == 1);
        CHECK(res2.retained.xyz[0] == Vec3{-3.0, 0.0, 0.2});
    }
}

namespace {

SceneSpec spec_for(const ObjectRecord& target, DistinctionType distinction,
                   std::vector<PredicateAssignment> predicates, std::uint64_t seed) {
    SceneSpec spec;
    spec.scene_id = "t" + std::to_string(seed);
    spec.background = "synthetic:" + target.id;
    spec.target_instance = 1;
    spec.target_class = target.class_label;
    spec.distinction = distinction;
    spec.num_distractors = 0;
    for (const auto& pa : predicates) spec.num_distractors += pa.count;
    spec.predicates = std::move(predicates);
    spec.seed = seed;
    return spec;
}

Scene assemble_synthetic(const Pool& pool, DistinctionType distinction,
                         std::vector<PredicateAssignment> predicates, std::uint64_t seed) {
    const ObjectRecord& target = pool.records()[Rng(seed).uniform_index(pool.size())];
    BackgroundConfig bg;
    bg.floor_points = 1024;
    const SyntheticBackground backdrop = synthesize_background(target, pool, derive_seed(seed, "bg"), bg);
    SceneSpec spec = spec_for(target, distinction, std::move(predicates), seed);
    spec.target_instance = backdrop.target_instance;
    return assemble(spec, pool, backdrop.scene);
}

void check_scene_invariants(const Scene& scene) {
    REQUIRE_FALSE(scene.objects.empty());
    CHECK(scene.objects.front().role == Role::Target);
    std::size_t targets = 0;
    for (const PlacedObject& obj : scene.objects) targets += obj.role == Role::Target;
    CHECK(targets == 1);
    CHECK(scene.target_box.min == scene.objects.front().box.min);
    CHECK(scene.target_box.max == scene.objects.front().box.max);

    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
            CHECK(intersection_volume(scene.objects[i].box, scene.objects[j].box) == 0.0);
        }
    }

    // Declared predicates hold under re-evaluation.
    std::map<int, std::vector<const PlacedObject*>> groups;
    for (const PlacedObject& obj : scene.objects) {
        if (obj.role == Role::Distractor) groups[obj.predicate_group].push_back(&obj);
    }
    for (const auto& [g, members] : groups) {
        std::vector<Aabb> boxes;
        for (const PlacedObject* m : members) boxes.push_back(m->box);
        REQUIRE(members[0]->predicate.has_value());
        CHECK(evaluate_predicate(*members[0]->predicate, scene.target_box, boxes,
                                 scene.spec.clearance));
    }

    // Post-hoc distinction audit against the constraint matrix.
    RetrievalSpec rspec;
    rspec.target.id = "(target)";
    rspec.target.class_label = scene.target().class_label;
    rspec.target.shape = scene.target().shape;
    rspec.target.mean_color = scene.target().mean_color;
    rspec.distinction = scene.spec.distinction;
    rspec.color_same_max = scene.spec.color_same_max;
    rspec.color_diff_min = scene.spec.color_diff_min;
    for (const PlacedObject& obj : scene.objects) {
        if (obj.role != Role::Distractor) continue;
        ObjectRecord as_record;
        as_record.id = obj.record_id;
        as_record.class_label = obj.class_label;
        as_record.shape = obj.shape;
        as_record.mean_color = obj.mean_color;
        CHECK(Pool::satisfies(as_record, rspec));
    }
}

}  // namespace

TEST_CASE("assemble produces a verified scene") {
    const Pool pool = small_pool(90);

    SUBCASE("location scene with left and right distractors") {
        const Scene scene = assemble_synthetic(
            pool, DistinctionType::Location,
            {{SpatialPredicate::Left, 1}, {SpatialPredicate::Right, 1}}, 91);
        CHECK(scene.objects.size() == 3);
        check_scene_invariants(scene);
        // All three share class, shape and similar color.
        for (const PlacedObject& obj : scene.objects) {
            CHECK(obj.class_label == scene.target().class_label);
            CHECK(obj.shape == scene.target().shape);
        }
        // Point conservation.
        const PointCloud flat = scene_cloud(scene);
        std::size_t placed = 0;
        for (const PlacedObject& obj : scene.objects) placed += obj.cloud.size();
        CHECK(flat.size() == scene.background_points.size() + placed);
    }

    SUBCASE("shape distinction forces a different shape category") {
        const Scene scene =
            assemble_synthetic(pool, DistinctionType::LocationShape, {{SpatialPredicate::Back, 1}}, 92);
        check_scene_invariants(scene);
        const PlacedObject& d = scene.objects[1];
        CHECK(d.class_label == scene.target().class_label);
        CHECK(d.shape != scene.target().shape);
        CHECK(color_distance(d.mean_color, scene.target().mean_color) <= scene.spec.color_same_max);
    }

    SUBCASE("deterministic: same spec yields byte-identical output") {
        const Scene a = assemble_synthetic(pool, DistinctionType::Location,
                                           {{SpatialPredicate::Between, 2}}, 93);
        const Scene b = assemble_synthetic(pool, DistinctionType::Location,
                                           {{SpatialPredicate::Between, 2}}, 93);
        CHECK(serialize_ply(scene_cloud(a)) == serialize_ply(scene_cloud(b)));
        CHECK(scene_manifest_json(a) == scene_manifest_json(b));
    }

    SUBCASE("ten distractors or an honest failure") {
        try {
            const Scene scene = assemble_synthetic(
                pool, DistinctionType::LocationClass,
                {{SpatialPredicate::Surrounded, 4}, {SpatialPredicate::Left, 1},
                 {SpatialPredicate::Right, 1}, {SpatialPredicate::Front, 1},
                 {SpatialPredicate::Back, 1}, {SpatialPredicate::Near, 1},
                 {SpatialPredicate::Above, 1}},
                94);
            CHECK(scene.objects.size() == 11);
            check_scene_invariants(scene);
        } catch (const PlacementInfeasible&) {
            // bounded-attempt contract
        }
    }
}

TEST_CASE("scene save and load round-trip") {
    const Pool pool = small_pool(95);
    const Scene scene =
        assemble_synthetic(pool, DistinctionType::Location, {{SpatialPredicate::Left, 1}}, 96);
    const auto dir = std::filesystem::temp_directory_path() / "sceneforge-test-scene-io";
    std::filesystem::remove_all(dir);
    save_scene(dir, scene);

    const Scene loaded = load_scene(dir, scene.scene_id);
    CHECK(loaded.scene_id == scene.scene_id);
    CHECK(loaded.objects.size() == scene.objects.size());
    CHECK(loaded.target().record_id == scene.target().record_id);
    CHECK(point_multiset(scene_cloud(loaded)) == point_multiset(scene_cloud(scene)));
    CHECK(loaded.spec.distinction == scene.spec.distinction);
}

TEST_CASE("generate-check closure over random specs") {
    const Pool pool = small_pool(97);
    Rng rng(98);
    int built = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const DistinctionType distinction = kAllDistinctions[rng.uniform_index(4)];
        std::vector<PredicateAssignment> preds;
        std::size_t budget = 1 + rng.uniform_index(4);
        while (budget > 0) {
            SpatialPredicate p = kAllPredicates[rng.uniform_index(kAllPredicates.size())];
            if (p == SpatialPredicate::Near && distinction != DistinctionType::LocationClass) continue;
            const std::size_t need = predicate_arity(p).min;
            if (need > budget) continue;
            preds.push_back({p, need});
            budget -= need;
        }
        try {
            const Scene scene = assemble_synthetic(pool, distinction, preds, 1000 + trial);
            check_scene_invariants(scene);
            ++built;
        } catch (const InsufficientCandidates&) {
        } catch (const PlacementInfeasible&) {
        }
    }
    CHECK(built >= 40);  // the pool is rich enough for most draws
}

TEST_CASE("segmentation pairs validate their case and keep part labels") {
    PointCloud a_cloud = sample_cuboid({1.2, 0.8, 0.7}, {121, 85, 61}, 400, 99);
    a_cloud.part.assign(a_cloud.size(), 0);
    for (std::size_t i = 0; i < a_cloud.size() / 2; ++i) a_cloud.part[i] = 1;
    PointCloud b_cloud = sample_lshape({1.0, 1.0, 0.8}, 0.2, 0.2, {125, 88, 59}, 400, 100);
    b_cloud.part.assign(b_cloud.size(), 2);
    PointCloud c_cloud = sample_cuboid({1.0, 0.9, 0.8}, {40, 60, 200}, 400, 101);

    const ObjectRecord table_cuboid = make_record(a_cloud, "table", Provenance::RealScan, "test");
    const ObjectRecord table_l = make_record(b_cloud, "table", Provenance::RealScan, "test");
    const ObjectRecord skateboard = make_record(c_cloud, "skateboard", Provenance::CAD, "test");

    SUBCASE("same class, different shape") {
        const Scene scene = build_segmentation_pair(table_cuboid, table_l, SegCase::LocShape, 7);
        CHECK(scene.objects.size() == 2);
        CHECK(scene.background_points.empty());
        CHECK(evaluate_predicate(SpatialPredicate::Near, scene.target_box, {scene.objects[1].box},
                                 scene.spec.clearance));
        CHECK(scene.objects[0].cloud.has_parts());
        CHECK(scene.objects[1].cloud.has_parts());
    }
    SUBCASE("different class, same shape") {
        const Scene scene = build_segmentation_pair(table_cuboid, skateboard, SegCase::LocClass, 8);
        CHECK(scene.objects[1].class_label == "skateboard");
    }
    SUBCASE("case violations") {
        CHECK_THROWS_AS(build_segmentation_pair(table_cuboid, table_cuboid, SegCase::LocShape, 9),
                        CaseViolation);
        CHECK_THROWS_AS(build_segmentation_pair(table_cuboid, table_l, SegCase::LocClass, 10),
                        CaseViolation);
    }
}
