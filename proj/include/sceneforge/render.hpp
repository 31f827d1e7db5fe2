#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sceneforge/geometry.hpp"

namespace sceneforge {

/// Orthographic camera pose: unit look direction plus a unit up vector
/// orthogonal to it. Validated on construction.
struct ViewPose {
    std::string name;
    Vec3 direction;
    Vec3 up;

    ViewPose(std::string name, const Vec3& direction, const Vec3& up);
};

/// Four canonical poses: front, left, back, top (z-up frame, viewer at -y).
std::vector<ViewPose> canonical_views();

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;  // row-major, size = width * height

    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr Rgb kRenderBackground{235, 235, 235};

/// Orthographic splat render of the combined clouds: 1-pixel dots,
/// nearest-point-wins depth, scene fit with a 5% margin, fixed background.
/// Deterministic. Throws EmptyCloud when no points are given; width and
/// height must be >= 16.
Image render_view(const std::vector<PointCloud>& pcs, const ViewPose& view, int width, int height);

/// Side-by-side concatenation; heights must match.
Image concat_horizontal(const Image& a, const Image& b);

/// Binary PPM (P6) encoding of an image.
std::string encode_ppm(const Image& img);
void save_ppm(const std::filesystem::path& path, const Image& img);

std::uint64_t image_hash(const Image& img);

}  // namespace sceneforge
