#pragma once

#include <cstdint>
#include <vector>

#include "sceneforge/geometry.hpp"
#include "sceneforge/object_pool.hpp"

namespace sceneforge {

/// Volume-sampled axis-aligned box centered at the origin.
PointCloud sample_cuboid(const Vec3& extents, const Rgb& color, std::size_t n, std::uint64_t seed);

/// Surface-sampled sphere centered at the origin.
PointCloud sample_sphere(double radius, const Rgb& color, std::size_t n, std::uint64_t seed);

/// Volume-sampled L-extrusion: two fused slabs hugging the low-x and low-y
/// faces of an extents-sized box, extruded over z. leg fractions are the leg
/// thicknesses relative to the box extents.
PointCloud sample_lshape(const Vec3& extents, double leg_frac_x, double leg_frac_y, const Rgb& color,
                         std::size_t n, std::uint64_t seed);

struct DemoPoolConfig {
    std::vector<std::string> classes = {"chair", "table", "lamp", "cart"};
    std::size_t per_cell = 12;    // objects per (class, shape, color) cell
    std::size_t points = 1024;
    double color_jitter = 4.0;    // per-channel, keeps cluster colors nameable
};

/// Named base colors used by the demo pool; pairwise distances exceed 100 on
/// the RGB L2 scale, so cross-cluster pairs clear the differ threshold while
/// jittered in-cluster pairs stay under the same threshold.
const std::vector<std::pair<std::string, Rgb>>& demo_palette();

/// Procedural candidates pool: classes x {cuboid, l-shape, sphere} x palette
/// with per_cell seeded variants each; half real-scan, half CAD provenance.
Pool build_demo_pool(const DemoPoolConfig& cfg, std::uint64_t seed);

/// Writes per_cell * 3 * |palette| object PLYs for one class into dir along
/// with a mapping.json consumable by the ingest command; returns file count.
std::size_t write_demo_objects(const std::filesystem::path& dir, const DemoPoolConfig& cfg,
                               std::uint64_t seed);

struct BackgroundConfig {
    double floor_size = 6.0;      // meters, square floor
    std::size_t floor_points = 4096;
    int clutter_objects = 2;
    double target_margin = 1.8;   // keep the target this far from the floor edge
    double target_diag_min = 0.8;
    double target_diag_max = 1.4;
};

struct SyntheticBackground {
    PointCloud scene;     // instance-tagged: floor 0, target 1, clutter 2+
    int target_instance = 1;
};

/// Builds an instance-tagged backdrop holding the target (rescaled,
/// reoriented, resting on a floor plane) plus a little clutter pulled from
/// the pool. Deterministic per seed.
SyntheticBackground synthesize_background(const ObjectRecord& target, const Pool& pool,
                                          std::uint64_t seed, const BackgroundConfig& cfg = {});

}  // namespace sceneforge
