#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "patchtrack/geometry.hpp"
#include "patchtrack/image.hpp"

namespace patchtrack {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    using Color = std::array<std::uint8_t, 3>;

    static RgbImage from_gray(const GrayImage& g);
    Color at(int x, int y) const;
    void set(int x, int y, const Color& c);
};

/// Burns a rectangle outline `thickness` pixels wide, inside the rounded box
/// [round(x), round(x+w)) x [round(y), round(y+h)), clipped to the image.
void draw_box(RgbImage& img, const Box& box, const RgbImage::Color& color, int thickness = 2);

void save_rgb(const std::filesystem::path& path, const RgbImage& img);

}  // namespace patchtrack
