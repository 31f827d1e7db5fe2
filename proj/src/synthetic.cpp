#include "sceneforge/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "sceneforge/errors.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

namespace {

Rgb jitter_color(const Rgb& base, double amount, Rng& rng) {
    auto channel = [&](int v) {
        const int j = static_cast<int>(std::lround(rng.uniform(-amount, amount)));
        return static_cast<std::uint8_t>(std::clamp(v + j, 0, 255));
    };
    return Rgb{channel(base.r), channel(base.g), channel(base.b)};
}

}  // namespace

PointCloud sample_cuboid(const Vec3& extents, const Rgb& color, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud pc;
    pc.xyz.reserve(n);
    pc.rgb.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pc.push_back({rng.uniform(-0.5, 0.5) * extents.x, rng.uniform(-0.5, 0.5) * extents.y,
                      rng.uniform(-0.5, 0.5) * extents.z},
                     jitter_color(color, 3.0, rng));
    }
    return pc;
}

PointCloud sample_sphere(double radius, const Rgb& color, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud pc;
    pc.xyz.reserve(n);
    pc.rgb.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pc.push_back({radius * r * std::cos(phi), radius * r * std::sin(phi), radius * z},
                     jitter_color(color, 3.0, rng));
    }
    return pc;
}

PointCloud sample_lshape(const Vec3& extents, double leg_frac_x, double leg_frac_y, const Rgb& color,
                         std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud pc;
    pc.xyz.reserve(n);
    pc.rgb.reserve(n);
    // Rejection-sample the union of the two slabs inside the unit box.
    while (pc.size() < n) {
        const double x = rng.uniform(0.0, 1.0);
        const double y = rng.uniform(0.0, 1.0);
        if (x > leg_frac_x && y > leg_frac_y) continue;
        const double z = rng.uniform(0.0, 1.0);
        pc.push_back({(x - 0.5) * extents.x, (y - 0.5) * extents.y, (z - 0.5) * extents.z},
                     jitter_color(color, 3.0, rng));
    }
    return pc;
}

const std::vector<std::pair<std::string, Rgb>>& demo_palette() {
    static const std::vector<std::pair<std::string, Rgb>> palette = {
        {"brown", {121, 85, 61}},
        {"red", {200, 30, 30}},
        {"blue", {40, 60, 200}},
        {"green", {40, 160, 60}},
    };
    return palette;
}

namespace {

PointCloud demo_object_cloud(int shape_kind, const Rgb& color, const DemoPoolConfig& cfg, Rng& rng) {
    switch (shape_kind) {
        case 0:  // cuboid
            return sample_cuboid({rng.uniform(0.35, 1.1), rng.uniform(0.35, 1.1), rng.uniform(0.35, 1.1)},
                                 color, cfg.points, rng.next_u64());
        case 1:  // l-shape
            return sample_lshape({rng.uniform(0.6, 1.2), rng.uniform(0.6, 1.2), rng.uniform(0.4, 1.0)},
                                 rng.uniform(0.15, 0.25), rng.uniform(0.15, 0.25), color, cfg.points,
                                 rng.next_u64());
        default:  // sphere
            return sample_sphere(rng.uniform(0.2, 0.5), color, cfg.points, rng.next_u64());
    }
}

}  // namespace

Pool build_demo_pool(const DemoPoolConfig& cfg, std::uint64_t seed) {
    Pool pool;
    std::uint64_t index = 0;
    for (const std::string& cls : cfg.classes) {
        for (int shape_kind = 0; shape_kind < 3; ++shape_kind) {
            for (const auto& [color_name, base] : demo_palette()) {
                for (std::size_t k = 0; k < cfg.per_cell; ++k, ++index) {
                    Rng rng(derive_seed(seed, "demo-object", index));
                    const Rgb color = jitter_color(base, cfg.color_jitter, rng);
                    PointCloud cloud = demo_object_cloud(shape_kind, color, cfg, rng);
                    cloud = reorient(cloud, rng.uniform(0.0, 2.0 * M_PI));
                    const Provenance prov = (k % 2 == 0) ? Provenance::RealScan : Provenance::CAD;
                    pool.add(make_record(std::move(cloud), cls, prov,
                                         prov == Provenance::RealScan ? "demo-scan" : "demo-cad"));
                }
            }
        }
    }
    return pool;
}

std::size_t write_demo_objects(const std::filesystem::path& dir, const DemoPoolConfig& cfg,
                               std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    nlohmann::json mapping = nlohmann::json::object();
    const Pool pool = build_demo_pool(cfg, seed);
    std::size_t count = 0;
    for (const ObjectRecord& rec : pool.records()) {
        const std::string name = rec.class_label + "-" + rec.id.substr(0, 10) + ".ply";
        save_ply(dir / name, rec.cloud);
        mapping[name] = {{"class", rec.class_label},
                         {"provenance", to_string(rec.provenance)},
                         {"source", rec.source}};
        ++count;
    }
    write_file(dir / "mapping.json", mapping.dump(2) + "\n");
    return count;
}

SyntheticBackground synthesize_background(const ObjectRecord& target, const Pool& pool,
                                          std::uint64_t seed, const BackgroundConfig& cfg) {
    Rng rng(seed);
    SyntheticBackground out;

    const double half = cfg.floor_size / 2.0;
    PointCloud floor;
    floor.xyz.reserve(cfg.floor_points);
    for (std::size_t i = 0; i < cfg.floor_points; ++i) {
        floor.push_back({rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-0.02, 0.0)},
                        jitter_color({168, 168, 168}, 6.0, rng));
    }
    floor.instance.assign(floor.size(), 0);
    out.scene.append(floor);

    auto place_on_floor = [&](PointCloud cloud, double x, double y) {
        const Aabb box = aabb(cloud);
        return translate(std::move(cloud), {x - box.center().x, y - box.center().y, 0.001 - box.min.z});
    };

    const double area = std::max(0.1, half - cfg.target_margin);
    PointCloud target_cloud = rescale_to(target.cloud, rng.uniform(cfg.target_diag_min, cfg.target_diag_max));
    target_cloud = reorient(target_cloud, rng.uniform(0.0, 2.0 * M_PI));
    target_cloud = place_on_floor(std::move(target_cloud), rng.uniform(-area, area), rng.uniform(-area, area));
    target_cloud.instance.assign(target_cloud.size(), 1);
    std::vector<Aabb> occupied = {aabb(target_cloud)};
    out.scene.append(target_cloud);
    out.target_instance = 1;

    int next_instance = 2;
    for (int c = 0; c < cfg.clutter_objects && !pool.empty(); ++c) {
        const ObjectRecord& rec = pool.records()[rng.uniform_index(pool.size())];
        PointCloud cloud = rescale_to(rec.cloud, rng.uniform(0.5, 1.0));
        cloud = reorient(cloud, rng.uniform(0.0, 2.0 * M_PI));
        for (int attempt = 0; attempt < 32; ++attempt) {
            PointCloud posed = place_on_floor(cloud, rng.uniform(-half + 0.6, half - 0.6),
                                              rng.uniform(-half + 0.6, half - 0.6));
            const Aabb box = aabb(posed);
            bool clear = true;
            for (const Aabb& other : occupied) {
                if (intersection_volume(box, other) > 0.0) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            posed.instance.assign(posed.size(), next_instance);
            occupied.push_back(box);
            out.scene.append(posed);
            ++next_instance;
            break;
        }
    }
    return out;
}

}  // namespace sceneforge
