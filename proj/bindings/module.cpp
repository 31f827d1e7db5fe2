#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sceneforge/annotator.hpp"
#include "sceneforge/errors.hpp"
#include "sceneforge/eval.hpp"
#include "sceneforge/integrator.hpp"
#include "sceneforge/pipeline.hpp"
#include "sceneforge/ply.hpp"
#include "sceneforge/render.hpp"
#include "sceneforge/synthetic.hpp"

namespace py = pybind11;
using namespace sceneforge;

namespace {

PointCloud cloud_from_lists(const std::vector<std::tuple<double, double, double>>& xyz,
                            const std::vector<std::tuple<int, int, int>>& rgb) {
    if (!rgb.empty() && rgb.size() != xyz.size()) {
        throw Error("rgb list must be empty or match the point count");
    }
    PointCloud pc;
    pc.xyz.reserve(xyz.size());
    pc.rgb.reserve(xyz.size());
    for (std::size_t i = 0; i < xyz.size(); ++i) {
        const auto& [x, y, z] = xyz[i];
        Rgb c{128, 128, 128};
        if (!rgb.empty()) {
            const auto& [r, g, b] = rgb[i];
            c = Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                    static_cast<std::uint8_t>(b)};
        }
        pc.push_back({x, y, z}, c);
    }
    return pc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Point-cloud scene synthesis and grounding evaluation toolkit";

    py::register_exception<Error>(m, "SceneforgeError", PyExc_RuntimeError);

    py::class_<Vec3>(m, "Vec3")
        .def(py::init<double, double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0,
             py::arg("z") = 0.0)
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z)
        .def("__repr__", [](const Vec3& v) {
            return "Vec3(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " +
                   std::to_string(v.z) + ")";
        });

    py::class_<Rgb>(m, "Rgb")
        .def(py::init([](int r, int g, int b) {
                 return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                            static_cast<std::uint8_t>(b)};
             }),
             py::arg("r"), py::arg("g"), py::arg("b"))
        .def_property_readonly("r", [](const Rgb& c) { return static_cast<int>(c.r); })
        .def_property_readonly("g", [](const Rgb& c) { return static_cast<int>(c.g); })
        .def_property_readonly("b", [](const Rgb& c) { return static_cast<int>(c.b); })
        .def("__iter__", [](const Rgb& c) {
            return py::iter(py::make_tuple(static_cast<int>(c.r), static_cast<int>(c.g),
                                           static_cast<int>(c.b)));
        });

    py::class_<Aabb>(m, "Aabb")
        .def(py::init([](std::tuple<double, double, double> lo, std::tuple<double, double, double> hi) {
                 return Aabb{{std::get<0>(lo), std::get<1>(lo), std::get<2>(lo)},
                             {std::get<0>(hi), std::get<1>(hi), std::get<2>(hi)}};
             }),
             py::arg("min"), py::arg("max"))
        .def_readwrite("min", &Aabb::min)
        .def_readwrite("max", &Aabb::max)
        .def("volume", &Aabb::volume)
        .def("diagonal", &Aabb::diagonal)
        .def("center", &Aabb::center);

    py::enum_<ShapeCategory>(m, "ShapeCategory")
        .value("Cuboid", ShapeCategory::Cuboid)
        .value("LShape", ShapeCategory::LShape)
        .value("Sphere", ShapeCategory::Sphere)
        .value("Other", ShapeCategory::Other);

    py::class_<PointCloud>(m, "PointCloud")
        .def(py::init(&cloud_from_lists), py::arg("xyz"),
             py::arg("rgb") = std::vector<std::tuple<int, int, int>>{})
        .def("__len__", &PointCloud::size)
        .def("xyz", [](const PointCloud& pc) {
            std::vector<std::tuple<double, double, double>> out;
            out.reserve(pc.size());
            for (const Vec3& p : pc.xyz) out.emplace_back(p.x, p.y, p.z);
            return out;
        })
        .def("rgb", [](const PointCloud& pc) {
            std::vector<std::tuple<int, int, int>> out;
            out.reserve(pc.size());
            for (const Rgb& c : pc.rgb) out.emplace_back(c.r, c.g, c.b);
            return out;
        })
        .def("instances", [](const PointCloud& pc) { return pc.instance; })
        .def("parts", [](const PointCloud& pc) { return pc.part; })
        .def("set_instances",
             [](PointCloud& pc, std::vector<int> v) {
                 if (!v.empty() && v.size() != pc.size()) {
                     throw Error("instance list must be empty or match the point count");
                 }
                 pc.instance = std::move(v);
             })
        .def("set_parts",
             [](PointCloud& pc, std::vector<int> v) {
                 if (!v.empty() && v.size() != pc.size()) {
                     throw Error("part list must be empty or match the point count");
                 }
                 pc.part = std::move(v);
             })
        .def("append", &PointCloud::append);

    m.def("parse_ply", [](py::bytes data) { return parse_ply(std::string(data)); });
    m.def("serialize_ply", [](const PointCloud& pc) { return py::bytes(serialize_ply(pc)); });
    m.def("load_ply", &load_ply);
    m.def("save_ply", &save_ply);

    m.def("aabb", &aabb);
    m.def("iou", &iou);
    m.def("mean_color", &mean_color);
    m.def("color_distance", &color_distance);
    m.def("centroid", &centroid);
    m.def("classify_shape", [](const PointCloud& pc) { return classify_shape(pc); });
    m.def("resample", &resample, py::arg("cloud"), py::arg("n"), py::arg("seed"));
    m.def("rescale_to", &rescale_to, py::arg("cloud"), py::arg("target_diag"));
    m.def("reorient", &reorient, py::arg("cloud"), py::arg("yaw"));

    py::class_<ViewPose>(m, "ViewPose")
        .def(py::init<std::string, const Vec3&, const Vec3&>(), py::arg("name"), py::arg("direction"),
             py::arg("up"))
        .def_readonly("name", &ViewPose::name);
    m.def("canonical_views", &canonical_views);

    py::class_<Image>(m, "Image")
        .def_readonly("width", &Image::width)
        .def_readonly("height", &Image::height)
        .def("ppm", [](const Image& img) { return py::bytes(encode_ppm(img)); });
    m.def("render_view", &render_view, py::arg("clouds"), py::arg("view"), py::arg("width"),
          py::arg("height"));

    py::enum_<Provenance>(m, "Provenance")
        .value("RealScan", Provenance::RealScan)
        .value("CAD", Provenance::CAD);

    py::enum_<DistinctionType>(m, "DistinctionType")
        .value("Location", DistinctionType::Location)
        .value("LocationShape", DistinctionType::LocationShape)
        .value("LocationColor", DistinctionType::LocationColor)
        .value("LocationClass", DistinctionType::LocationClass);

    py::class_<ObjectRecord>(m, "ObjectRecord")
        .def_readonly("id", &ObjectRecord::id)
        .def_readonly("class_label", &ObjectRecord::class_label)
        .def_readonly("provenance", &ObjectRecord::provenance)
        .def_readonly("mean_color", &ObjectRecord::mean_color)
        .def_readonly("shape", &ObjectRecord::shape)
        .def_readonly("cloud", &ObjectRecord::cloud)
        .def_readonly("source", &ObjectRecord::source);
    m.def("make_record", &make_record, py::arg("cloud"), py::arg("class_label"), py::arg("provenance"),
          py::arg("source"));
    m.def("ingest", &ingest, py::arg("path"), py::arg("class_label"), py::arg("provenance"),
          py::arg("source"));

    py::class_<RetrievalSpec>(m, "RetrievalSpec")
        .def(py::init<>())
        .def_readwrite("target", &RetrievalSpec::target)
        .def_readwrite("distinction", &RetrievalSpec::distinction)
        .def_readwrite("color_same_max", &RetrievalSpec::color_same_max)
        .def_readwrite("color_diff_min", &RetrievalSpec::color_diff_min)
        .def_readwrite("count", &RetrievalSpec::count);

    py::class_<Pool>(m, "Pool")
        .def(py::init<>())
        .def("add", [](Pool& pool, const ObjectRecord& rec) { return pool.add(rec); })
        .def("__len__", &Pool::size)
        .def("records", &Pool::records);
    m.def("retrieve", &retrieve, py::arg("pool"), py::arg("spec"), py::arg("seed"));
    m.def("save_pool", &save_pool);
    m.def("load_pool", &load_pool);

    py::enum_<SpatialPredicate>(m, "SpatialPredicate")
        .value("Left", SpatialPredicate::Left)
        .value("Right", SpatialPredicate::Right)
        .value("Front", SpatialPredicate::Front)
        .value("Back", SpatialPredicate::Back)
        .value("Above", SpatialPredicate::Above)
        .value("Below", SpatialPredicate::Below)
        .value("UpperLeft", SpatialPredicate::UpperLeft)
        .value("UpperRight", SpatialPredicate::UpperRight)
        .value("LowerLeft", SpatialPredicate::LowerLeft)
        .value("LowerRight", SpatialPredicate::LowerRight)
        .value("Between", SpatialPredicate::Between)
        .value("Surrounded", SpatialPredicate::Surrounded)
        .value("Near", SpatialPredicate::Near);
    m.def("evaluate_predicate", &evaluate_predicate, py::arg("predicate"), py::arg("target_box"),
          py::arg("distractor_boxes"), py::arg("clearance"));
    m.def("location_phrase", &location_phrase, py::arg("predicate"), py::arg("distractor_classes"));

    py::class_<PredicateAssignment>(m, "PredicateAssignment")
        .def(py::init([](SpatialPredicate p, std::size_t count) {
                 return PredicateAssignment{p, count};
             }),
             py::arg("predicate"), py::arg("count") = 1)
        .def_readwrite("predicate", &PredicateAssignment::predicate)
        .def_readwrite("count", &PredicateAssignment::count);

    py::class_<SceneSpec>(m, "SceneSpec")
        .def(py::init<>())
        .def_readwrite("scene_id", &SceneSpec::scene_id)
        .def_readwrite("background", &SceneSpec::background)
        .def_readwrite("target_instance", &SceneSpec::target_instance)
        .def_readwrite("target_class", &SceneSpec::target_class)
        .def_readwrite("distinction", &SceneSpec::distinction)
        .def_readwrite("num_distractors", &SceneSpec::num_distractors)
        .def_readwrite("predicates", &SceneSpec::predicates)
        .def_readwrite("clearance", &SceneSpec::clearance)
        .def_readwrite("color_same_max", &SceneSpec::color_same_max)
        .def_readwrite("color_diff_min", &SceneSpec::color_diff_min)
        .def_readwrite("seed", &SceneSpec::seed);

    py::enum_<Role>(m, "Role").value("Target", Role::Target).value("Distractor", Role::Distractor);

    py::class_<PlacedObject>(m, "PlacedObject")
        .def_readonly("record_id", &PlacedObject::record_id)
        .def_readonly("instance_id", &PlacedObject::instance_id)
        .def_readonly("role", &PlacedObject::role)
        .def_readonly("class_label", &PlacedObject::class_label)
        .def_readonly("mean_color", &PlacedObject::mean_color)
        .def_readonly("shape", &PlacedObject::shape)
        .def_readonly("cloud", &PlacedObject::cloud)
        .def_readonly("box", &PlacedObject::box)
        .def_readonly("predicate_group", &PlacedObject::predicate_group);

    py::class_<Scene>(m, "Scene")
        .def_readonly("scene_id", &Scene::scene_id)
        .def_readonly("background_points", &Scene::background_points)
        .def_readonly("objects", &Scene::objects)
        .def_readonly("target_box", &Scene::target_box)
        .def_readonly("dropped_instances", &Scene::dropped_instances)
        .def("cloud", [](const Scene& s) { return scene_cloud(s); })
        .def("manifest_json", [](const Scene& s) { return scene_manifest_json(s); });

    m.def("extract_target", [](const PointCloud& scene, int instance) {
        ExtractResult r = extract_target(scene, instance);
        return py::make_tuple(r.target, r.background, r.background_objects);
    });
    m.def("normalize_distractor", &normalize_distractor);
    m.def(
        "assemble",
        [](const SceneSpec& spec, const Pool& pool, const std::optional<PointCloud>& background) {
            return background ? assemble(spec, pool, *background) : assemble(spec, pool);
        },
        py::arg("spec"), py::arg("pool"), py::arg("background") = std::nullopt);
    m.def("save_scene", &save_scene);
    m.def("load_scene", &load_scene);
    m.def("matching_objects", &matching_objects);

    py::class_<GroundingSample>(m, "GroundingSample")
        .def(py::init<>())
        .def_readwrite("scene_id", &GroundingSample::scene_id)
        .def_readwrite("text", &GroundingSample::text)
        .def_readwrite("gt_box", &GroundingSample::gt_box)
        .def_readwrite("num_distractors", &GroundingSample::num_distractors)
        .def_readwrite("distinction", &GroundingSample::distinction);

    py::class_<Prediction>(m, "Prediction")
        .def(py::init<>())
        .def_readwrite("scene_id", &Prediction::scene_id)
        .def_readwrite("pred_box", &Prediction::pred_box);

    py::class_<EvalGroup>(m, "EvalGroup")
        .def_readonly("key", &EvalGroup::key)
        .def_readonly("n", &EvalGroup::n)
        .def_readonly("acc_25", &EvalGroup::acc_25)
        .def_readonly("acc_50", &EvalGroup::acc_50);

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("acc_25", &EvalResult::acc_25)
        .def_readonly("acc_50", &EvalResult::acc_50)
        .def_readonly("n", &EvalResult::n)
        .def_readonly("groups", &EvalResult::groups);

    py::enum_<BreakdownAxis>(m, "BreakdownAxis")
        .value("Distractors", BreakdownAxis::Distractors)
        .value("Distinction", BreakdownAxis::Distinction);

    m.def("grounding_accuracy", &grounding_accuracy);
    m.def("breakdown", &breakdown);

    py::class_<SegScore>(m, "SegScore")
        .def_readonly("miou_i", &SegScore::miou_i)
        .def_readonly("per_instance", &SegScore::per_instance);
    m.def("segmentation_miou", &segmentation_miou);

    m.def("sample_cuboid", &sample_cuboid);
    m.def("sample_sphere", &sample_sphere);
    m.def("sample_lshape", &sample_lshape);
}
