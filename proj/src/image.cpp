#include "patchtrack/image.hpp"

#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

GrayImage::GrayImage(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw DimensionError("negative image size");
}

GrayImage GrayImage::from_data(int w, int h, std::vector<double> values) {
    if (w < 0 || h < 0 || values.size() != static_cast<std::size_t>(w) * h)
        throw DimensionError("image data length " + std::to_string(values.size()) +
                             " does not match " + std::to_string(w) + "x" + std::to_string(h));
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("image intensity outside [0,1]");
    GrayImage img;
    img.width = w;
    img.height = h;
    img.data = std::move(values);
    return img;
}

}  // namespace patchtrack
