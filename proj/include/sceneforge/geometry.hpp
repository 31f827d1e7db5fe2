#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sceneforge/rng.hpp"

namespace sceneforge {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb& o) const { return r == o.r && g == o.g && b == o.b; }
};

/// Axis-aligned bounding box; min <= max componentwise.
struct Aabb {
    Vec3 min, max;

    Vec3 size() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5; }
    double volume() const {
        Vec3 s = size();
        return s.x * s.y * s.z;
    }
    double diagonal() const { return size().norm(); }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
};

enum class ShapeCategory { Cuboid, LShape, Sphere, Other };

std::string to_string(ShapeCategory s);
ShapeCategory shape_category_from_string(const std::string& s);

/// Colored point cloud, optionally carrying per-point instance ids and part
/// labels (both either empty or sized like the point list).
struct PointCloud {
    std::vector<Vec3> xyz;
    std::vector<Rgb> rgb;
    std::vector<int> instance;  // per-point instance id, or empty
    std::vector<int> part;      // per-point part label, or empty

    std::size_t size() const { return xyz.size(); }
    bool empty() const { return xyz.empty(); }
    bool has_instances() const { return !instance.empty(); }
    bool has_parts() const { return !part.empty(); }

    void push_back(const Vec3& p, const Rgb& c) {
        xyz.push_back(p);
        rgb.push_back(c);
    }
    /// Appends another cloud, keeping optional channels consistent: a channel
    /// survives only if both sides carry it (or one side is empty).
    void append(const PointCloud& other);
};

// --- frame convention -------------------------------------------------------
// Right-handed, z-up. A canonical viewer sits at -y looking toward +y, so
// left = -x, right = +x, front = -y, back = +y, up = +z, down = -z.

/// Componentwise extrema of a non-empty cloud. Throws EmptyCloud.
Aabb aabb(const PointCloud& pc);

/// Intersection-over-union of two boxes; 0 when disjoint, symmetric, in [0,1].
double iou(const Aabb& a, const Aabb& b);

/// Intersection volume of two boxes (0 when disjoint or merely touching).
double intersection_volume(const Aabb& a, const Aabb& b);

/// Arithmetic mean color, each channel rounded half-up. Throws EmptyCloud.
Rgb mean_color(const PointCloud& pc);

/// Euclidean distance between colors on the 0-255 scale.
double color_distance(const Rgb& a, const Rgb& b);

/// Arithmetic mean of the point positions. Throws EmptyCloud.
Vec3 centroid(const PointCloud& pc);

/// Exactly n points drawn from pc: without replacement when n <= |pc|, all
/// originals plus uniform re-draws when n > |pc|. Every output point is a
/// copy of an input point; deterministic for a fixed seed.
PointCloud resample(const PointCloud& pc, std::size_t n, std::uint64_t seed);

/// Uniform scaling about the centroid so the AABB diagonal equals
/// target_diag. Colors and labels unchanged. Throws DegenerateCloud when the
/// cloud has zero diagonal.
PointCloud rescale_to(const PointCloud& pc, double target_diag);

/// Rotation by yaw radians about the vertical (z) axis through the centroid.
PointCloud reorient(const PointCloud& pc, double yaw);

/// Translates every point by delta.
PointCloud translate(const PointCloud& pc, const Vec3& delta);

// --- shape classification ---------------------------------------------------

struct ShapeClassifierConfig {
    std::size_t min_points = 32;
    double sphere_cv_max = 0.1;     // coefficient of variation of radial distance
    double cuboid_fill_min = 0.6;   // occupied fraction of the aligned 8^3 grid
    double lshape_fill_min = 0.25;
    double slab_coverage_min = 0.8; // fraction of occupied voxels two slabs must cover
    int grid = 8;
    int max_slab_thickness = 3;     // voxels per slab considered in the L test
    int yaw_steps = 90;             // resolution of the alignment search over [0, pi/2)
};

/// Buckets a cloud into one of the standard shape categories. The cloud is
/// first aligned by searching the yaw that minimises its horizontal bounding
/// rectangle, then voxelised on a grid^3 lattice over its own AABB:
///   Sphere  - radial distance from the centroid has CV < sphere_cv_max
///   Cuboid  - voxel fill ratio > cuboid_fill_min
///   LShape  - fill ratio in [lshape_fill_min, cuboid_fill_min] and two
///             orthogonal boundary slabs cover > slab_coverage_min of the
///             occupied voxels
///   Other   - anything else
/// Throws TooFewPoints below cfg.min_points.
ShapeCategory classify_shape(const PointCloud& pc, const ShapeClassifierConfig& cfg = {});

/// Content hash of a cloud (positions, colors, labels); hex string.
std::string content_hash(const PointCloud& pc);

}  // namespace sceneforge
