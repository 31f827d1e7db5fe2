#include "sceneforge/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "sceneforge/errors.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

namespace {
constexpr int kPlacementAttempts = 64;
}

ExtractResult extract_target(const PointCloud& scene, int target_instance) {
    if (!scene.has_instances()) throw Error("scene cloud has no instance channel");
    ExtractResult res;
    bool found = false;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const int inst = scene.instance[i];
        PointCloud& dst = (inst == target_instance) ? res.target : res.background;
        dst.push_back(scene.xyz[i], scene.rgb[i]);
        dst.instance.push_back(inst);
        if (scene.has_parts()) dst.part.push_back(scene.part[i]);
        if (inst == target_instance) {
            found = true;
        } else {
            PointCloud& obj = res.background_objects[inst];
            obj.push_back(scene.xyz[i], scene.rgb[i]);
            obj.instance.push_back(inst);
            if (scene.has_parts()) obj.part.push_back(scene.part[i]);
        }
    }
    if (!found) throw UnknownInstance(target_instance);
    return res;
}

PointCloud normalize_distractor(const ObjectRecord& distractor, const PointCloud& target,
                                std::uint64_t seed) {
    if (target.empty()) throw EmptyCloud();
    Rng rng(seed);
    const double target_diag = aabb(target).diagonal();
    if (target_diag <= 0.0) throw DegenerateCloud("target has zero diagonal");
    PointCloud out = resample(distractor.cloud, target.size(), rng.next_u64());
    out = rescale_to(out, target_diag * rng.uniform(0.8, 1.2));
    out = reorient(out, rng.uniform(0.0, 2.0 * M_PI));
    return out;
}

namespace {

struct Candidate {
    Vec3 offset;  // desired box-center delta from the target box center
};

// Offset satisfying axis dominance for primitive-based predicates: the
// participating axes get half-extent sums plus clearance plus a seeded
// nudge, the rest bounded jitter.
Vec3 primitive_offset(const std::vector<std::pair<int, int>>& axes, const Vec3& t_half,
                      const Vec3& d_half, double clearance, Rng& rng) {
    Vec3 o;
    double min_mag = 1e300;
    bool participating[3] = {false, false, false};
    for (const auto& [axis, sign] : axes) {
        const double mag = t_half[axis] + d_half[axis] + clearance + rng.uniform(0.01, 0.5);
        if (axis == 0) o.x = sign * mag;
        if (axis == 1) o.y = sign * mag;
        if (axis == 2) o.z = sign * mag;
        participating[axis] = true;
        min_mag = std::min(min_mag, mag);
    }
    for (int axis = 0; axis < 3; ++axis) {
        if (participating[axis]) continue;
        const double j = rng.uniform(-0.45, 0.45) * min_mag;
        if (axis == 0) o.x = j;
        if (axis == 1) o.y = j;
        if (axis == 2) o.z = j;
    }
    return o;
}

// Horizontal offset along a unit direction, pushed far enough along the
// dominant axis that the boxes cannot overlap.
Vec3 radial_offset(double theta, const Vec3& t_half, const Vec3& d_half, double clearance,
                   double extra) {
    const double ux = std::cos(theta), uy = std::sin(theta);
    const int a = std::abs(ux) >= std::abs(uy) ? 0 : 1;
    const double ua = a == 0 ? ux : uy;
    const double dist = (t_half[a] + d_half[a] + clearance + extra) / std::abs(ua);
    return {ux * dist, uy * dist, 0.0};
}

}  // namespace

std::vector<PointCloud> place_group(const PlacedObject& target, SpatialPredicate pred,
                                    const std::vector<PointCloud>& distractors,
                                    const std::vector<Aabb>& already_placed, double clearance,
                                    std::uint64_t seed) {
    const PredicateArity arity = predicate_arity(pred);
    if (distractors.size() < arity.min || distractors.size() > arity.max) {
        throw ArityMismatch("predicate '" + to_string(pred) + "' cannot place " +
                            std::to_string(distractors.size()) + " distractors");
    }
    const Vec3 t_half = target.box.size() * 0.5;
    const Vec3 t_center = target.box.center();
    const auto axes = predicate_axes(pred);

    std::vector<Aabb> boxes(distractors.size());
    std::vector<Vec3> centers(distractors.size());
    std::vector<Vec3> halves(distractors.size());
    for (std::size_t i = 0; i < distractors.size(); ++i) {
        boxes[i] = aabb(distractors[i]);
        centers[i] = boxes[i].center();
        halves[i] = boxes[i].size() * 0.5;
    }

    Rng rng(seed);
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        std::vector<Vec3> offsets(distractors.size());
        switch (pred) {
            case SpatialPredicate::Between: {
                const double theta = rng.uniform(0.0, 2.0 * M_PI);
                offsets[0] = radial_offset(theta, t_half, halves[0], clearance, rng.uniform(0.01, 0.5));
                offsets[1] = radial_offset(theta + M_PI, t_half, halves[1], clearance, rng.uniform(0.01, 0.5));
                break;
            }
            case SpatialPredicate::Surrounded: {
                for (std::size_t i = 0; i < distractors.size(); ++i) {
                    const double base = (i % 4) * (M_PI / 2.0);
                    const double theta = base + 0.15 + rng.uniform(0.0, M_PI / 2.0 - 0.3);
                    offsets[i] = radial_offset(theta, t_half, halves[i], clearance, rng.uniform(0.01, 0.5));
                }
                break;
            }
            case SpatialPredicate::Near: {
                const double theta = rng.uniform(0.0, 2.0 * M_PI);
                offsets[0] = radial_offset(theta, t_half, halves[0], clearance, rng.uniform(0.01, 0.1));
                break;
            }
            default:
                offsets[0] = primitive_offset(axes, t_half, halves[0], clearance, rng);
                break;
        }

        std::vector<Aabb> posed_boxes(distractors.size());
        for (std::size_t i = 0; i < distractors.size(); ++i) {
            const Vec3 shift = t_center + offsets[i] - centers[i];
            posed_boxes[i] = Aabb{boxes[i].min + shift, boxes[i].max + shift};
        }

        bool ok = evaluate_predicate(pred, target.box, posed_boxes, clearance);
        for (std::size_t i = 0; ok && i < posed_boxes.size(); ++i) {
            for (const Aabb& other : already_placed) {
                if (intersection_volume(posed_boxes[i], other) > 0.0) {
                    ok = false;
                    break;
                }
            }
            for (std::size_t k = 0; ok && k < i; ++k) {
                if (intersection_volume(posed_boxes[i], posed_boxes[k]) > 0.0) ok = false;
            }
        }
        if (!ok) continue;

        std::vector<PointCloud> out;
        out.reserve(distractors.size());
        for (std::size_t i = 0; i < distractors.size(); ++i) {
            out.push_back(translate(distractors[i], t_center + offsets[i] - centers[i]));
        }
        return out;
    }
    throw PlacementInfeasible("no valid pose for '" + to_string(pred) + "' after " +
                              std::to_string(kPlacementAttempts) + " attempts");
}

PointCloud place(const PlacedObject& target, SpatialPredicate pred, const PointCloud& distractor,
                 const std::vector<Aabb>& already_placed, double clearance, std::uint64_t seed) {
    return place_group(target, pred, {distractor}, already_placed, clearance, seed).front();
}

namespace {

double footprint_area(const Aabb& box) {
    const Vec3 s = box.size();
    return s.x * s.y;
}

}  // namespace

ExcludeResult exclude_overlaps(const std::map<int, PointCloud>& background_objects,
                               const std::vector<Aabb>& placed_boxes) {
    ExcludeResult res;
    if (background_objects.empty()) return res;

    Aabb scene_box;
    bool first = true;
    std::map<int, Aabb> instance_boxes;
    for (const auto& [inst, pc] : background_objects) {
        const Aabb box = aabb(pc);
        instance_boxes.emplace(inst, box);
        if (first) {
            scene_box = box;
            first = false;
        } else {
            scene_box.min = {std::min(scene_box.min.x, box.min.x), std::min(scene_box.min.y, box.min.y),
                             std::min(scene_box.min.z, box.min.z)};
            scene_box.max = {std::max(scene_box.max.x, box.max.x), std::max(scene_box.max.y, box.max.y),
                             std::max(scene_box.max.z, box.max.z)};
        }
    }
    const double scene_area = footprint_area(scene_box);

    for (const auto& [inst, pc] : background_objects) {
        const Aabb& box = instance_boxes.at(inst);
        const bool structural = scene_area > 0.0 && footprint_area(box) > 0.5 * scene_area;
        bool drop = false;
        if (!structural) {
            for (const Aabb& placed : placed_boxes) {
                if (intersection_volume(box, placed) > 0.0) {
                    drop = true;
                    break;
                }
            }
        }
        if (drop) {
            res.dropped_instances.push_back(inst);
            res.dropped_points += pc.size();
        } else {
            res.retained.append(pc);
        }
    }
    return res;
}

ExcludeResult exclude_overlaps(const PointCloud& background, const std::vector<Aabb>& placed_boxes) {
    if (background.empty()) return {};
    if (background.has_instances()) {
        std::map<int, PointCloud> objects;
        for (std::size_t i = 0; i < background.size(); ++i) {
            PointCloud& dst = objects[background.instance[i]];
            dst.push_back(background.xyz[i], background.rgb[i]);
            dst.instance.push_back(background.instance[i]);
            if (background.has_parts()) dst.part.push_back(background.part[i]);
        }
        return exclude_overlaps(objects, placed_boxes);
    }
    // Fallback for unsegmented backgrounds: crop points inside placed boxes.
    ExcludeResult res;
    for (std::size_t i = 0; i < background.size(); ++i) {
        const Vec3& p = background.xyz[i];
        bool inside = false;
        for (const Aabb& box : placed_boxes) {
            if (box.contains(p)) {
                inside = true;
                break;
            }
        }
        if (inside) {
            ++res.dropped_points;
        } else {
            res.retained.push_back(p, background.rgb[i]);
            if (background.has_parts()) res.retained.part.push_back(background.part[i]);
        }
    }
    return res;
}

namespace {

PlacedObject make_placed(std::string record_id, int instance_id, Role role, std::string class_label,
                         PointCloud cloud, std::optional<SpatialPredicate> predicate, int group) {
    PlacedObject obj;
    obj.record_id = std::move(record_id);
    obj.instance_id = instance_id;
    obj.role = role;
    obj.class_label = std::move(class_label);
    obj.cloud = std::move(cloud);
    obj.cloud.instance.clear();
    obj.box = aabb(obj.cloud);
    obj.mean_color = mean_color(obj.cloud);
    obj.shape = classify_shape(obj.cloud);
    obj.predicate = predicate;
    obj.predicate_group = group;
    return obj;
}

std::string derived_scene_id(const SceneSpec& spec) {
    std::uint64_t h = fnv1a(spec.background);
    h = fnv1a(spec.target_class, h);
    h = fnv1a(&spec.seed, sizeof(spec.seed), h);
    h = fnv1a(&spec.num_distractors, sizeof(spec.num_distractors), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
    return std::string("scene-") + buf;
}

}  // namespace

Scene assemble(const SceneSpec& spec, const Pool& pool) {
    return assemble(spec, pool, load_ply(spec.background));
}

Scene assemble(const SceneSpec& spec, const Pool& pool, const PointCloud& background_scene) {
    validate_spec(spec);
    ExtractResult extract = extract_target(background_scene, spec.target_instance);

    PointCloud target_cloud = extract.target;
    target_cloud.instance.clear();

    ObjectRecord target_rec = make_record(target_cloud, spec.target_class, Provenance::RealScan, "scene");

    RetrievalSpec rspec;
    rspec.target = target_rec;
    rspec.distinction = spec.distinction;
    rspec.color_same_max = spec.color_same_max;
    rspec.color_diff_min = spec.color_diff_min;
    rspec.count = spec.num_distractors;
    const std::vector<ObjectRecord> picks = retrieve(pool, rspec, derive_seed(spec.seed, "retrieve"));

    Scene scene;
    scene.scene_id = spec.scene_id.empty() ? derived_scene_id(spec) : spec.scene_id;
    scene.spec = spec;
    scene.spec.scene_id = scene.scene_id;

    int next_instance = spec.target_instance + 1;
    for (const auto& [inst, _] : extract.background_objects) next_instance = std::max(next_instance, inst + 1);

    scene.objects.push_back(make_placed(target_rec.id, spec.target_instance, Role::Target,
                                        spec.target_class, std::move(target_cloud), std::nullopt, -1));
    scene.target_box = scene.objects.front().box;

    std::vector<Aabb> placed_boxes = {scene.target_box};
    std::vector<Aabb> distractor_boxes;
    std::size_t next_pick = 0;
    for (std::size_t g = 0; g < spec.predicates.size(); ++g) {
        const PredicateAssignment& pa = spec.predicates[g];
        std::vector<PointCloud> group;
        std::vector<const ObjectRecord*> group_recs;
        for (std::size_t k = 0; k < pa.count; ++k, ++next_pick) {
            const ObjectRecord& rec = picks[next_pick];
            group.push_back(
                normalize_distractor(rec, scene.target().cloud, derive_seed(spec.seed, "normalize", next_pick)));
            group_recs.push_back(&rec);
        }
        std::vector<PointCloud> posed = place_group(scene.target(), pa.predicate, group, placed_boxes,
                                                    spec.clearance, derive_seed(spec.seed, "place", g));
        for (std::size_t k = 0; k < posed.size(); ++k) {
            PlacedObject obj = make_placed(group_recs[k]->id, next_instance++, Role::Distractor,
                                           group_recs[k]->class_label, std::move(posed[k]), pa.predicate,
                                           static_cast<int>(g));
            placed_boxes.push_back(obj.box);
            distractor_boxes.push_back(obj.box);
            scene.objects.push_back(std::move(obj));
        }
    }

    ExcludeResult excluded = exclude_overlaps(extract.background_objects, distractor_boxes);
    scene.background_points = std::move(excluded.retained);
    scene.dropped_instances = std::move(excluded.dropped_instances);

    // Closing audit: every declared predicate must hold on the final boxes.
    std::size_t obj_idx = 1;
    for (std::size_t g = 0; g < spec.predicates.size(); ++g) {
        std::vector<Aabb> group_boxes;
        for (std::size_t k = 0; k < spec.predicates[g].count; ++k) {
            group_boxes.push_back(scene.objects[obj_idx++].box);
        }
        if (!evaluate_predicate(spec.predicates[g].predicate, scene.target_box, group_boxes, spec.clearance)) {
            throw PlacementInfeasible("declared predicate '" + to_string(spec.predicates[g].predicate) +
                                      "' does not hold after assembly");
        }
    }
    return scene;
}

std::string to_string(SegCase c) { return c == SegCase::LocShape ? "loc_shape" : "loc_class"; }

Scene build_segmentation_pair(const ObjectRecord& a, const ObjectRecord& b, SegCase seg_case,
                              std::uint64_t seed) {
    if (seg_case == SegCase::LocShape) {
        if (a.class_label != b.class_label || a.shape == b.shape) {
            throw CaseViolation("loc_shape needs same class and different shape, got " +
                                a.class_label + "/" + to_string(a.shape) + " vs " + b.class_label +
                                "/" + to_string(b.shape));
        }
    } else {
        if (a.class_label == b.class_label || a.shape != b.shape) {
            throw CaseViolation("loc_class needs different class and same shape, got " +
                                a.class_label + "/" + to_string(a.shape) + " vs " + b.class_label +
                                "/" + to_string(b.shape));
        }
    }

    // Target recentred at the origin, partner normalized against it.
    PointCloud target_cloud = a.cloud;
    const Vec3 center = aabb(target_cloud).center();
    target_cloud = translate(target_cloud, Vec3{} - center);

    PointCloud partner = normalize_distractor(b, target_cloud, derive_seed(seed, "normalize"));

    Scene scene;
    scene.spec.background = "empty";
    scene.spec.target_instance = 1;
    scene.spec.target_class = a.class_label;
    scene.spec.distinction = seg_case == SegCase::LocShape ? DistinctionType::LocationShape
                                                           : DistinctionType::LocationClass;
    scene.spec.num_distractors = 1;
    scene.spec.predicates = {{SpatialPredicate::Near, 1}};
    scene.spec.seed = seed;

    scene.objects.push_back(
        make_placed(a.id, 1, Role::Target, a.class_label, std::move(target_cloud), std::nullopt, -1));
    scene.target_box = scene.objects.front().box;

    std::vector<PointCloud> posed = place_group(scene.target(), SpatialPredicate::Near, {partner},
                                                {scene.target_box}, scene.spec.clearance,
                                                derive_seed(seed, "place"));
    scene.objects.push_back(make_placed(b.id, 2, Role::Distractor, b.class_label, std::move(posed[0]),
                                        SpatialPredicate::Near, 0));

    scene.scene_id = "pair-" + to_string(seg_case) + "-" + content_hash(scene.objects[0].cloud).substr(0, 8) +
                     content_hash(scene.objects[1].cloud).substr(0, 8);
    scene.spec.scene_id = scene.scene_id;
    return scene;
}

}  // namespace sceneforge
