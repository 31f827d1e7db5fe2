#include "sceneforge/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <numeric>

#include "sceneforge/errors.hpp"

namespace sceneforge {

std::string to_string(ShapeCategory s) {
    switch (s) {
        case ShapeCategory::Cuboid: return "Cuboid";
        case ShapeCategory::LShape: return "LShape";
        case ShapeCategory::Sphere: return "Sphere";
        case ShapeCategory::Other: return "Other";
    }
    return "Other";
}

ShapeCategory shape_category_from_string(const std::string& s) {
    if (s == "Cuboid") return ShapeCategory::Cuboid;
    if (s == "LShape") return ShapeCategory::LShape;
    if (s == "Sphere") return ShapeCategory::Sphere;
    if (s == "Other") return ShapeCategory::Other;
    throw Error("unknown shape category '" + s + "'");
}

void PointCloud::append(const PointCloud& other) {
    const bool keep_instance = (has_instances() || empty()) && (other.has_instances() || other.empty());
    const bool keep_part = (has_parts() || empty()) && (other.has_parts() || other.empty());
    xyz.insert(xyz.end(), other.xyz.begin(), other.xyz.end());
    rgb.insert(rgb.end(), other.rgb.begin(), other.rgb.end());
    if (keep_instance) {
        instance.insert(instance.end(), other.instance.begin(), other.instance.end());
    } else {
        instance.clear();
    }
    if (keep_part) {
        part.insert(part.end(), other.part.begin(), other.part.end());
    } else {
        part.clear();
    }
}

Aabb aabb(const PointCloud& pc) {
    if (pc.empty()) throw EmptyCloud();
    Aabb box{pc.xyz.front(), pc.xyz.front()};
    for (const Vec3& p : pc.xyz) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.min.z = std::min(box.min.z, p.z);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
        box.max.z = std::max(box.max.z, p.z);
    }
    return box;
}

double intersection_volume(const Aabb& a, const Aabb& b) {
    const double dx = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
    const double dy = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
    const double dz = std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z);
    if (dx <= 0.0 || dy <= 0.0 || dz <= 0.0) return 0.0;
    return dx * dy * dz;
}

double iou(const Aabb& a, const Aabb& b) {
    const double inter = intersection_volume(a, b);
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) {
        // Two degenerate (zero-volume) boxes: identical boxes count as a
        // perfect match, anything else as disjoint.
        return (a.min == b.min && a.max == b.max) ? 1.0 : 0.0;
    }
    return inter / uni;
}

Rgb mean_color(const PointCloud& pc) {
    if (pc.empty()) throw EmptyCloud();
    double r = 0, g = 0, b = 0;
    for (const Rgb& c : pc.rgb) {
        r += c.r;
        g += c.g;
        b += c.b;
    }
    const double n = static_cast<double>(pc.size());
    auto round_half_up = [](double v) {
        return static_cast<std::uint8_t>(std::min(255.0, std::floor(v + 0.5)));
    };
    return Rgb{round_half_up(r / n), round_half_up(g / n), round_half_up(b / n)};
}

double color_distance(const Rgb& a, const Rgb& b) {
    const double dr = static_cast<double>(a.r) - b.r;
    const double dg = static_cast<double>(a.g) - b.g;
    const double db = static_cast<double>(a.b) - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

Vec3 centroid(const PointCloud& pc) {
    if (pc.empty()) throw EmptyCloud();
    Vec3 sum;
    for (const Vec3& p : pc.xyz) sum = sum + p;
    return sum / static_cast<double>(pc.size());
}

namespace {

PointCloud select_indices(const PointCloud& pc, const std::vector<std::size_t>& idx) {
    PointCloud out;
    out.xyz.reserve(idx.size());
    out.rgb.reserve(idx.size());
    if (pc.has_instances()) out.instance.reserve(idx.size());
    if (pc.has_parts()) out.part.reserve(idx.size());
    for (std::size_t i : idx) {
        out.xyz.push_back(pc.xyz[i]);
        out.rgb.push_back(pc.rgb[i]);
        if (pc.has_instances()) out.instance.push_back(pc.instance[i]);
        if (pc.has_parts()) out.part.push_back(pc.part[i]);
    }
    return out;
}

}  // namespace

PointCloud resample(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
    if (pc.empty()) throw EmptyCloud();
    Rng rng(seed);
    std::vector<std::size_t> idx;
    idx.reserve(n);
    if (n <= pc.size()) {
        // Partial Fisher-Yates: the first n entries of a seeded shuffle.
        std::vector<std::size_t> all(pc.size());
        std::iota(all.begin(), all.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(all.size() - i));
            std::swap(all[i], all[j]);
            idx.push_back(all[i]);
        }
    } else {
        idx.resize(pc.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = pc.size(); i < n; ++i) {
            idx.push_back(static_cast<std::size_t>(rng.uniform_index(pc.size())));
        }
    }
    return select_indices(pc, idx);
}

PointCloud rescale_to(const PointCloud& pc, double target_diag) {
    if (pc.empty()) throw EmptyCloud();
    if (!(target_diag > 0.0)) throw DegenerateCloud("target diagonal must be positive");
    const double diag = aabb(pc).diagonal();
    if (diag <= 0.0) throw DegenerateCloud("cloud has zero diagonal, cannot rescale");
    const double s = target_diag / diag;
    const Vec3 c = centroid(pc);
    PointCloud out = pc;
    for (Vec3& p : out.xyz) p = c + (p - c) * s;
    return out;
}

PointCloud reorient(const PointCloud& pc, double yaw) {
    if (pc.empty()) return pc;
    const Vec3 c = centroid(pc);
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    PointCloud out = pc;
    for (Vec3& p : out.xyz) {
        const double dx = p.x - c.x, dy = p.y - c.y;
        p.x = c.x + cs * dx - sn * dy;
        p.y = c.y + sn * dx + cs * dy;
    }
    return out;
}

PointCloud translate(const PointCloud& pc, const Vec3& delta) {
    PointCloud out = pc;
    for (Vec3& p : out.xyz) p = p + delta;
    return out;
}

std::string content_hash(const PointCloud& pc) {
    std::uint64_t h = fnv1a(pc.xyz.data(), pc.xyz.size() * sizeof(Vec3));
    h = fnv1a(pc.rgb.data(), pc.rgb.size() * sizeof(Rgb), h);
    if (pc.has_instances()) h = fnv1a(pc.instance.data(), pc.instance.size() * sizeof(int), h);
    if (pc.has_parts()) h = fnv1a(pc.part.data(), pc.part.size() * sizeof(int), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace sceneforge
