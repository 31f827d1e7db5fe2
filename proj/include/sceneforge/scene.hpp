#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sceneforge/geometry.hpp"
#include "sceneforge/object_pool.hpp"
#include "sceneforge/predicates.hpp"

namespace sceneforge {

/// One predicate instance and the number of distractors it binds (1 for the
/// primitive predicates, 2 for between, >= 4 for surrounded).
struct PredicateAssignment {
    SpatialPredicate predicate = SpatialPredicate::Near;
    std::size_t count = 1;
};

/// The integration recipe: where the target comes from, how many distractors
/// of which distinction to pull in, and how they sit relative to the target.
struct SceneSpec {
    std::string scene_id;              // derived from content when empty
    std::string background;            // scene PLY path, or "synthetic:<record-id>"
    int target_instance = -1;
    std::string target_class;
    DistinctionType distinction = DistinctionType::Location;
    std::size_t num_distractors = 1;
    std::vector<PredicateAssignment> predicates;
    double clearance = 0.05;
    double color_same_max = 30.0;
    double color_diff_min = 80.0;
    std::uint64_t seed = 0;
};

/// Throws when predicate multiplicities do not add up to num_distractors or
/// violate a predicate's arity.
void validate_spec(const SceneSpec& spec);

enum class Role { Target, Distractor };

std::string to_string(Role r);

struct PlacedObject {
    std::string record_id;
    int instance_id = -1;
    Role role = Role::Distractor;
    std::string class_label;
    Rgb mean_color;            // of the posed cloud
    ShapeCategory shape = ShapeCategory::Other;
    PointCloud cloud;          // posed in the scene frame
    Aabb box;                  // aabb(cloud)
    std::optional<SpatialPredicate> predicate;  // none for the target
    int predicate_group = -1;  // distractors sharing one predicate instance
};

/// An assembled scene: retained background plus the posed target and
/// distractors. objects.front() is always the target.
struct Scene {
    std::string scene_id;
    PointCloud background_points;
    std::vector<PlacedObject> objects;
    Aabb target_box;
    SceneSpec spec;
    std::vector<int> dropped_instances;  // background objects removed for overlap

    const PlacedObject& target() const { return objects.front(); }
};

/// Flattens the scene into one instance-tagged cloud (background ids kept,
/// placed objects on their assigned ids).
PointCloud scene_cloud(const Scene& scene);

/// Scene manifest JSON (scene_id, target_id, target_box, per-object rows,
/// distinction, num_distractors, seed, ...).
std::string scene_manifest_json(const Scene& scene);

/// Writes <id>.ply and <id>.json into dir.
void save_scene(const std::filesystem::path& dir, const Scene& scene);

/// Reloads a scene from its PLY + manifest pair.
Scene load_scene(const std::filesystem::path& dir, const std::string& scene_id);

}  // namespace sceneforge
