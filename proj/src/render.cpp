#include "sceneforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sceneforge/errors.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

ViewPose::ViewPose(std::string name_, const Vec3& direction_, const Vec3& up_)
    : name(std::move(name_)), direction(direction_), up(up_) {
    if (std::abs(direction.norm() - 1.0) > 1e-9) throw Error("view direction must be a unit vector");
    if (std::abs(up.norm() - 1.0) > 1e-9) throw Error("view up must be a unit vector");
    if (std::abs(direction.dot(up)) > 1e-9) throw Error("view up must be orthogonal to direction");
}

std::vector<ViewPose> canonical_views() {
    return {
        ViewPose("front", {0, 1, 0}, {0, 0, 1}),
        ViewPose("left", {1, 0, 0}, {0, 0, 1}),
        ViewPose("back", {0, -1, 0}, {0, 0, 1}),
        ViewPose("top", {0, 0, -1}, {0, 1, 0}),
    };
}

Image render_view(const std::vector<PointCloud>& pcs, const ViewPose& view, int width, int height) {
    if (width < 16 || height < 16) throw Error("render target must be at least 16x16");
    std::size_t total = 0;
    for (const PointCloud& pc : pcs) total += pc.size();
    if (total == 0) throw EmptyCloud("render_view requires at least one point");

    const Vec3 right = view.direction.cross(view.up);
    const Vec3& up = view.up;

    // Screen-space extent of the combined cloud.
    double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
    for (const PointCloud& pc : pcs) {
        for (const Vec3& p : pc.xyz) {
            const double u = p.dot(right);
            const double v = p.dot(up);
            min_u = std::min(min_u, u);
            max_u = std::max(max_u, u);
            min_v = std::min(min_v, v);
            max_v = std::max(max_v, v);
        }
    }
    const double ext_u = max_u - min_u;
    const double ext_v = max_v - min_v;
    const double usable_w = 0.9 * width;   // 5% margin per side
    const double usable_h = 0.9 * height;
    double scale = std::numeric_limits<double>::infinity();
    if (ext_u > 0.0) scale = std::min(scale, usable_w / ext_u);
    if (ext_v > 0.0) scale = std::min(scale, usable_h / ext_v);
    if (!std::isfinite(scale)) scale = 1.0;  // single point or a view-axis line

    const double mid_u = 0.5 * (min_u + max_u);
    const double mid_v = 0.5 * (min_v + max_v);
    const double cx = width / 2.0;
    const double cy = height / 2.0;

    Image img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height, kRenderBackground);
    std::vector<double> depth(img.pixels.size(), std::numeric_limits<double>::infinity());

    for (const PointCloud& pc : pcs) {
        for (std::size_t i = 0; i < pc.size(); ++i) {
            const Vec3& p = pc.xyz[i];
            const double u = p.dot(right);
            const double v = p.dot(up);
            const double d = p.dot(view.direction);
            int px = static_cast<int>(std::lround(cx + (u - mid_u) * scale));
            int py = static_cast<int>(std::lround(cy - (v - mid_v) * scale));
            px = std::clamp(px, 0, width - 1);
            py = std::clamp(py, 0, height - 1);
            const std::size_t idx = static_cast<std::size_t>(py) * width + px;
            if (d < depth[idx]) {
                depth[idx] = d;
                img.pixels[idx] = pc.rgb[i];
            }
        }
    }
    return img;
}

Image concat_horizontal(const Image& a, const Image& b) {
    if (a.height != b.height) throw Error("concat_horizontal requires equal heights");
    Image out;
    out.width = a.width + b.width;
    out.height = a.height;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < a.width; ++x) out.at(x, y) = a.at(x, y);
        for (int x = 0; x < b.width; ++x) out.at(a.width + x, y) = b.at(x, y);
    }
    return out;
}

std::string encode_ppm(const Image& img) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.pixels.size() * 3);
    for (const Rgb& c : img.pixels) {
        out.push_back(static_cast<char>(c.r));
        out.push_back(static_cast<char>(c.g));
        out.push_back(static_cast<char>(c.b));
    }
    return out;
}

void save_ppm(const std::filesystem::path& path, const Image& img) {
    write_file(path, encode_ppm(img));
}

std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = fnv1a(&img.width, sizeof(img.width));
    h = fnv1a(&img.height, sizeof(img.height), h);
    return fnv1a(img.pixels.data(), img.pixels.size() * sizeof(Rgb), h);
}

}  // namespace sceneforge
