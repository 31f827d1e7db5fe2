#include <algorithm>
#include <cmath>
#include <vector>

#include "sceneforge/errors.hpp"
#include "sceneforge/geometry.hpp"

namespace sceneforge {

namespace {

// Yaw in [0, pi/2) that minimises the horizontal bounding-rectangle area.
// Objects in this pipeline are only ever rotated about z, so searching yaw
// recovers the natural frame of cuboids and L-extrusions.
double alignment_yaw(const std::vector<Vec3>& pts, const Vec3& c, int steps) {
    double best_yaw = 0.0;
    double best_area = std::numeric_limits<double>::infinity();
    for (int k = 0; k < steps; ++k) {
        const double yaw = (M_PI / 2.0) * k / steps;
        const double cs = std::cos(yaw), sn = std::sin(yaw);
        double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
        for (const Vec3& p : pts) {
            const double dx = p.x - c.x, dy = p.y - c.y;
            const double rx = cs * dx + sn * dy;
            const double ry = -sn * dx + cs * dy;
            minx = std::min(minx, rx);
            maxx = std::max(maxx, rx);
            miny = std::min(miny, ry);
            maxy = std::max(maxy, ry);
        }
        const double area = (maxx - minx) * (maxy - miny);
        if (area < best_area) {
            best_area = area;
            best_yaw = yaw;
        }
    }
    return best_yaw;
}

struct VoxelGrid {
    int g = 8;
    std::vector<bool> occ;
    int occupied = 0;

    int index(int i, int j, int k) const { return (i * g + j) * g + k; }
};

VoxelGrid voxelize(const std::vector<Vec3>& pts, int grid) {
    Vec3 lo = pts.front(), hi = pts.front();
    for (const Vec3& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 ext = hi - lo;
    auto cell = [&](double v, double l, double e) {
        if (e < 1e-12) return 0;
        int c = static_cast<int>((v - l) / e * grid);
        return std::clamp(c, 0, grid - 1);
    };
    VoxelGrid vg;
    vg.g = grid;
    vg.occ.assign(static_cast<std::size_t>(grid) * grid * grid, false);
    for (const Vec3& p : pts) {
        const int i = cell(p.x, lo.x, ext.x);
        const int j = cell(p.y, lo.y, ext.y);
        const int k = cell(p.z, lo.z, ext.z);
        const int id = vg.index(i, j, k);
        if (!vg.occ[id]) {
            vg.occ[id] = true;
            ++vg.occupied;
        }
    }
    return vg;
}

// True when two orthogonal boundary slabs cover at least min_cover of the
// occupied voxels: the signature of an L-extrusion whose legs hug two faces
// of its bounding box.
bool l_pattern(const VoxelGrid& vg, int max_thickness, double min_cover) {
    const int g = vg.g;
    std::vector<std::array<int, 3>> occ;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            for (int k = 0; k < g; ++k)
                if (vg.occ[vg.index(i, j, k)]) occ.push_back({i, j, k});
    if (occ.empty()) return false;

    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            for (int side_a = 0; side_a < 2; ++side_a) {
                for (int side_b = 0; side_b < 2; ++side_b) {
                    for (int ta = 1; ta <= max_thickness; ++ta) {
                        for (int tb = 1; tb <= max_thickness; ++tb) {
                            int covered = 0;
                            for (const auto& v : occ) {
                                const bool in_a = side_a ? v[a] >= g - ta : v[a] < ta;
                                const bool in_b = side_b ? v[b] >= g - tb : v[b] < tb;
                                if (in_a || in_b) ++covered;
                            }
                            if (covered > min_cover * static_cast<double>(occ.size())) return true;
                        }
                    }
                }
            }
        }
    }
    return false;
}

}  // namespace

ShapeCategory classify_shape(const PointCloud& pc, const ShapeClassifierConfig& cfg) {
    if (pc.size() < cfg.min_points) throw TooFewPoints(pc.size(), cfg.min_points);

    const Vec3 c = centroid(pc);

    double mean_r = 0.0;
    for (const Vec3& p : pc.xyz) mean_r += (p - c).norm();
    mean_r /= static_cast<double>(pc.size());
    if (mean_r > 1e-12) {
        double var = 0.0;
        for (const Vec3& p : pc.xyz) {
            const double d = (p - c).norm() - mean_r;
            var += d * d;
        }
        const double cv = std::sqrt(var / static_cast<double>(pc.size())) / mean_r;
        if (cv < cfg.sphere_cv_max) return ShapeCategory::Sphere;
    } else {
        return ShapeCategory::Other;  // all points coincide
    }

    const double yaw = alignment_yaw(pc.xyz, c, cfg.yaw_steps);
    std::vector<Vec3> aligned;
    aligned.reserve(pc.size());
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    for (const Vec3& p : pc.xyz) {
        const double dx = p.x - c.x, dy = p.y - c.y;
        aligned.push_back({cs * dx + sn * dy, -sn * dx + cs * dy, p.z - c.z});
    }

    const VoxelGrid vg = voxelize(aligned, cfg.grid);
    const double fill = static_cast<double>(vg.occupied) / static_cast<double>(vg.occ.size());
    if (fill > cfg.cuboid_fill_min) return ShapeCategory::Cuboid;
    if (fill >= cfg.lshape_fill_min && l_pattern(vg, cfg.max_slab_thickness, cfg.slab_coverage_min)) {
        return ShapeCategory::LShape;
    }
    return ShapeCategory::Other;
}

}  // namespace sceneforge
