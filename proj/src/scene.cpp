#include "sceneforge/scene.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "sceneforge/errors.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

using nlohmann::json;

std::string to_string(Role r) { return r == Role::Target ? "target" : "distractor"; }

void validate_spec(const SceneSpec& spec) {
    if (spec.num_distractors < 1) throw Error("scene spec needs num_distractors >= 1");
    if (!(spec.color_same_max < spec.color_diff_min)) {
        throw Error("scene spec requires color_same_max < color_diff_min");
    }
    std::size_t bound = 0;
    for (const PredicateAssignment& pa : spec.predicates) {
        const PredicateArity arity = predicate_arity(pa.predicate);
        if (pa.count < arity.min || pa.count > arity.max) {
            throw ArityMismatch("predicate '" + to_string(pa.predicate) + "' cannot bind " +
                                std::to_string(pa.count) + " distractors");
        }
        bound += pa.count;
    }
    if (bound != spec.num_distractors) {
        throw Error("predicate assignments bind " + std::to_string(bound) +
                    " distractors but the spec declares " + std::to_string(spec.num_distractors));
    }
}

PointCloud scene_cloud(const Scene& scene) {
    PointCloud out;
    PointCloud background = scene.background_points;
    if (!background.empty() && !background.has_instances()) {
        background.instance.assign(background.size(), 0);
    }
    out.append(background);
    for (const PlacedObject& obj : scene.objects) {
        PointCloud c = obj.cloud;
        c.instance.assign(c.size(), obj.instance_id);
        out.append(c);
    }
    return out;
}

namespace {

json box_json(const Aabb& b) {
    return json::array({b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z});
}

Aabb box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 6) throw Error("box must be an array of 6 numbers");
    return Aabb{{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()},
                {j[3].get<double>(), j[4].get<double>(), j[5].get<double>()}};
}

json spec_json(const SceneSpec& spec) {
    json preds = json::array();
    for (const PredicateAssignment& pa : spec.predicates) {
        preds.push_back({{"predicate", to_string(pa.predicate)}, {"count", pa.count}});
    }
    return json{
        {"background", spec.background},
        {"target_instance", spec.target_instance},
        {"target_class", spec.target_class},
        {"distinction", to_string(spec.distinction)},
        {"num_distractors", spec.num_distractors},
        {"predicates", preds},
        {"clearance", spec.clearance},
        {"color_same_max", spec.color_same_max},
        {"color_diff_min", spec.color_diff_min},
        {"seed", spec.seed},
    };
}

SceneSpec spec_from_json(const json& j, const std::string& scene_id) {
    SceneSpec spec;
    spec.scene_id = scene_id;
    spec.background = j.at("background").get<std::string>();
    spec.target_instance = j.at("target_instance").get<int>();
    spec.target_class = j.at("target_class").get<std::string>();
    spec.distinction = distinction_from_string(j.at("distinction").get<std::string>());
    spec.num_distractors = j.at("num_distractors").get<std::size_t>();
    for (const json& p : j.at("predicates")) {
        spec.predicates.push_back(
            {predicate_from_string(p.at("predicate").get<std::string>()), p.at("count").get<std::size_t>()});
    }
    spec.clearance = j.at("clearance").get<double>();
    spec.color_same_max = j.at("color_same_max").get<double>();
    spec.color_diff_min = j.at("color_diff_min").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

std::string scene_manifest_json(const Scene& scene) {
    json objects = json::array();
    for (const PlacedObject& obj : scene.objects) {
        json row = {
            {"id", obj.record_id},
            {"instance_id", obj.instance_id},
            {"role", to_string(obj.role)},
            {"class", obj.class_label},
            {"mean_color", {obj.mean_color.r, obj.mean_color.g, obj.mean_color.b}},
            {"shape", to_string(obj.shape)},
            {"box", box_json(obj.box)},
            {"predicate", obj.predicate ? json(to_string(*obj.predicate)) : json(nullptr)},
            {"predicate_group", obj.predicate_group},
        };
        objects.push_back(std::move(row));
    }
    json j = {
        {"scene_id", scene.scene_id},
        {"seed", scene.spec.seed},
        {"distinction", to_string(scene.spec.distinction)},
        {"num_distractors", scene.spec.num_distractors},
        {"clearance", scene.spec.clearance},
        {"target_id", scene.target().record_id},
        {"target_box", box_json(scene.target_box)},
        {"objects", objects},
        {"dropped_instances", scene.dropped_instances},
        {"spec", spec_json(scene.spec)},
    };
    return j.dump(2) + "\n";
}

void save_scene(const std::filesystem::path& dir, const Scene& scene) {
    std::filesystem::create_directories(dir);
    save_ply(dir / (scene.scene_id + ".ply"), scene_cloud(scene));
    write_file(dir / (scene.scene_id + ".json"), scene_manifest_json(scene));
}

Scene load_scene(const std::filesystem::path& dir, const std::string& scene_id) {
    const json j = json::parse(read_file(dir / (scene_id + ".json")));
    const PointCloud cloud = load_ply(dir / (scene_id + ".ply"));
    if (!cloud.has_instances()) {
        throw Error("scene " + scene_id + " has no instance channel");
    }

    Scene scene;
    scene.scene_id = j.at("scene_id").get<std::string>();
    scene.spec = spec_from_json(j.at("spec"), scene.scene_id);
    scene.target_box = box_from_json(j.at("target_box"));
    scene.dropped_instances = j.at("dropped_instances").get<std::vector<int>>();

    std::map<int, PointCloud> by_instance;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        PointCloud& dst = by_instance[cloud.instance[i]];
        dst.push_back(cloud.xyz[i], cloud.rgb[i]);
        if (cloud.has_parts()) dst.part.push_back(cloud.part[i]);
    }

    std::vector<int> object_instances;
    for (const json& row : j.at("objects")) {
        PlacedObject obj;
        obj.record_id = row.at("id").get<std::string>();
        obj.instance_id = row.at("instance_id").get<int>();
        obj.role = row.at("role").get<std::string>() == "target" ? Role::Target : Role::Distractor;
        obj.class_label = row.at("class").get<std::string>();
        const auto& mc = row.at("mean_color");
        obj.mean_color = Rgb{mc[0].get<std::uint8_t>(), mc[1].get<std::uint8_t>(), mc[2].get<std::uint8_t>()};
        obj.shape = shape_category_from_string(row.at("shape").get<std::string>());
        obj.box = box_from_json(row.at("box"));
        if (!row.at("predicate").is_null()) {
            obj.predicate = predicate_from_string(row.at("predicate").get<std::string>());
        }
        obj.predicate_group = row.at("predicate_group").get<int>();
        auto it = by_instance.find(obj.instance_id);
        if (it == by_instance.end()) throw UnknownInstance(obj.instance_id);
        obj.cloud = it->second;
        object_instances.push_back(obj.instance_id);
        scene.objects.push_back(std::move(obj));
    }
    if (scene.objects.empty() || scene.objects.front().role != Role::Target) {
        throw Error("scene " + scene_id + " manifest lists no leading target object");
    }

    // Everything not claimed by a placed object is background.
    for (auto& [inst, pc] : by_instance) {
        if (std::find(object_instances.begin(), object_instances.end(), inst) != object_instances.end()) {
            continue;
        }
        PointCloud tagged = pc;
        tagged.instance.assign(tagged.size(), inst);
        scene.background_points.append(tagged);
    }
    return scene;
}

}  // namespace sceneforge
