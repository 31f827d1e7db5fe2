#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sceneforge/object_pool.hpp"
#include "sceneforge/scene.hpp"

namespace sceneforge {

struct ExtractResult {
    PointCloud target;
    PointCloud background;
    std::map<int, PointCloud> background_objects;
};

/// Splits an instance-tagged scene cloud into the target instance and
/// everything else; the partition is exact. Throws UnknownInstance when the
/// id is absent and Error when the cloud has no instance channel.
ExtractResult extract_target(const PointCloud& scene, int target_instance);

/// Resamples the distractor to the target's point count, rescales its AABB
/// diagonal into [0.8, 1.2] x the target's (seeded draw) and applies a
/// seeded yaw in [0, 2pi).
PointCloud normalize_distractor(const ObjectRecord& distractor, const PointCloud& target,
                                std::uint64_t seed);

/// Poses all distractors of one predicate instance relative to the target so
/// that evaluate_predicate holds and nothing overlaps already_placed (nor the
/// group itself). Up to 64 seeded attempts, then PlacementInfeasible.
std::vector<PointCloud> place_group(const PlacedObject& target, SpatialPredicate pred,
                                    const std::vector<PointCloud>& distractors,
                                    const std::vector<Aabb>& already_placed, double clearance,
                                    std::uint64_t seed);

/// Single-distractor convenience wrapper over place_group.
PointCloud place(const PlacedObject& target, SpatialPredicate pred, const PointCloud& distractor,
                 const std::vector<Aabb>& already_placed, double clearance, std::uint64_t seed);

struct ExcludeResult {
    PointCloud retained;
    std::vector<int> dropped_instances;
    std::size_t dropped_points = 0;
};

/// Removes background objects whose AABB intersects any placed box.
/// Instances whose horizontal footprint exceeds half the background's
/// (floors, walls) are never dropped. The cloud overload falls back to
/// per-point cropping when no instance channel is present.
ExcludeResult exclude_overlaps(const std::map<int, PointCloud>& background_objects,
                               const std::vector<Aabb>& placed_boxes);
ExcludeResult exclude_overlaps(const PointCloud& background, const std::vector<Aabb>& placed_boxes);

/// Full pipeline for one scene: extract target, retrieve distractors,
/// normalize, place per predicate, drop colliding background objects.
/// Deterministic for a fixed spec. The first overload loads spec.background
/// from disk; the second takes the background cloud directly.
Scene assemble(const SceneSpec& spec, const Pool& pool);
Scene assemble(const SceneSpec& spec, const Pool& pool, const PointCloud& background_scene);

enum class SegCase { LocShape, LocClass };

std::string to_string(SegCase c);

/// Two-object concatenation scene for the part-segmentation study: b is
/// normalized against a and placed Near it on an empty background; per-point
/// part labels are carried through. LocShape wants same class / different
/// shape, LocClass different class / same shape; throws CaseViolation
/// otherwise.
Scene build_segmentation_pair(const ObjectRecord& a, const ObjectRecord& b, SegCase seg_case,
                              std::uint64_t seed);

}  // namespace sceneforge
