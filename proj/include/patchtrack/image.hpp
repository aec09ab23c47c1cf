#pragma once

#include <cstddef>
#include <vector>

namespace patchtrack {

/// Row-major grayscale raster. Frames and templates hold intensities in [0,1];
/// intermediate images (subspace reconstructions) may leave that range.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    /// Throws DimensionError on length mismatch and ConfigError on values outside [0,1].
    static GrayImage from_data(int w, int h, std::vector<double> values);

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }
    bool same_shape(const GrayImage& other) const {
        return width == other.width && height == other.height;
    }
};

}  // namespace patchtrack
