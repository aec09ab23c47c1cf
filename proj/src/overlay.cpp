#include "patchtrack/overlay.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "patchtrack/error.hpp"

namespace patchtrack {

RgbImage RgbImage::from_gray(const GrayImage& g) {
    RgbImage img;
    img.width = g.width;
    img.height = g.height;
    img.data.resize(g.size() * 3);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(g.data[p], 0.0, 1.0) * 255.0));
        img.data[3 * p] = img.data[3 * p + 1] = img.data[3 * p + 2] = v;
    }
    return img;
}

RgbImage::Color RgbImage::at(int x, int y) const {
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
    return {data[o], data[o + 1], data[o + 2]};
}

void RgbImage::set(int x, int y, const Color& c) {
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
    data[o] = c[0];
    data[o + 1] = c[1];
    data[o + 2] = c[2];
}

void draw_box(RgbImage& img, const Box& box, const RgbImage::Color& color, int thickness) {
    if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) || !std::isfinite(box.h)) return;
    const long x0 = std::lround(box.x);
    const long y0 = std::lround(box.y);
    const long x1 = std::lround(box.x + box.w);  // exclusive
    const long y1 = std::lround(box.y + box.h);
    if (x1 <= x0 || y1 <= y0) return;
    const long cx0 = std::max(0L, x0), cy0 = std::max(0L, y0);
    const long cx1 = std::min<long>(img.width, x1), cy1 = std::min<long>(img.height, y1);
    for (long y = cy0; y < cy1; ++y) {
        for (long x = cx0; x < cx1; ++x) {
            const bool edge = x < x0 + thickness || x >= x1 - thickness || y < y0 + thickness || y >= y1 - thickness;
            if (edge) img.set(static_cast<int>(x), static_cast<int>(y), color);
        }
    }
}

void save_rgb(const std::filesystem::path& path, const RgbImage& img) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto c = img.at(x, y);
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(c[2], c[1], c[0]);  // BGR
        }
    if (!cv::imwrite(path.string(), m)) throw IoError("cannot write image " + path.string());
}

}  // namespace patchtrack
