#include "patchtrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "patchtrack/bench.hpp"
#include "patchtrack/error.hpp"

namespace fs = std::filesystem;

namespace patchtrack {

namespace {

// Random control values on a coarse lattice, bilinearly interpolated.
GrayImage smooth_texture(int w, int h, int cell, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(lo, hi);
    const int gw = w / cell + 2;
    const int gh = h / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = uni(rng);
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) / cell;
        const int y0 = static_cast<int>(fy);
        const double ay = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / cell;
            const int x0 = static_cast<int>(fx);
            const double ax = fx - x0;
            const auto l = [&](int gx, int gy) { return lattice[static_cast<std::size_t>(gy) * gw + gx]; };
            img.at(x, y) = (1 - ax) * (1 - ay) * l(x0, y0) + ax * (1 - ay) * l(x0 + 1, y0) +
                           (1 - ax) * ay * l(x0, y0 + 1) + ax * ay * l(x0 + 1, y0 + 1);
        }
    }
    return img;
}

double sample(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, img.width - 1.0);
    y = std::clamp(y, 0.0, img.height - 1.0);
    const int x0 = std::min(static_cast<int>(x), img.width - 2);
    const int y0 = std::min(static_cast<int>(y), img.height - 2);
    const double ax = x - x0;
    const double ay = y - y0;
    return (1 - ax) * (1 - ay) * img.at(x0, y0) + ax * (1 - ay) * img.at(x0 + 1, y0) +
           (1 - ax) * ay * img.at(x0, y0 + 1) + ax * ay * img.at(x0 + 1, y0 + 1);
}

}  // namespace

SyntheticSequence make_synthetic(const SyntheticSpec& spec) {
    if (!(spec.occlusion.fraction >= 0.0 && spec.occlusion.fraction <= 1.0))
        throw ConfigError("occlusion fraction must lie in [0, 1]");
    if (spec.target_side + 2 * spec.margin >= std::min(spec.width, spec.height))
        throw ConfigError("synthetic target does not fit in the frame");
    std::mt19937_64 rng(spec.seed);
    const GrayImage background = smooth_texture(spec.width, spec.height, 16, 0.25, 0.75, rng);

    // Blocky target texture with a smooth shading component.
    const int side = spec.target_side;
    GrayImage target = smooth_texture(side, side, 32, 0.0, 0.3, rng);
    std::uniform_real_distribution<double> block(0.0, 0.7);
    const int cell = std::max(1, side / 8);
    for (int by = 0; by < side; by += cell)
        for (int bx = 0; bx < side; bx += cell) {
            const double v = block(rng);
            for (int y = by; y < std::min(side, by + cell); ++y)
                for (int x = bx; x < std::min(side, bx + cell); ++x) target.at(x, y) += v;
        }

    SyntheticSequence seq;
    const double lo_x = spec.margin, hi_x = spec.width - spec.margin - side;
    const double lo_y = spec.margin, hi_y = spec.height - spec.margin - side;
    double px = lo_x;
    double py = (lo_y + hi_y) / 2.0;
    double vx = spec.speed * std::cos(spec.heading);
    double vy = spec.speed * std::sin(spec.heading);

    for (int f = 1; f <= spec.frames; ++f) {
        if (f > 1) {
            px += vx;
            py += vy;
            if (px < lo_x) { px = 2 * lo_x - px; vx = -vx; }
            if (px > hi_x) { px = 2 * hi_x - px; vx = -vx; }
            if (py < lo_y) { py = 2 * lo_y - py; vy = -vy; }
            if (py > hi_y) { py = 2 * hi_y - py; vy = -vy; }
        }
        GrayImage frame = background;
        const bool occluded = spec.occlusion.first_frame > 0 && f >= spec.occlusion.first_frame &&
                              f <= spec.occlusion.last_frame;
        const int x_begin = static_cast<int>(std::floor(px));
        const int y_begin = static_cast<int>(std::floor(py));
        for (int y = y_begin; y <= y_begin + side; ++y) {
            for (int x = x_begin; x <= x_begin + side; ++x) {
                if (x < 0 || y < 0 || x >= spec.width || y >= spec.height) continue;
                // Fraction of this pixel covered by the target square [px, px+side).
                const double cover_x = std::clamp(std::min(x + 1.0, px + side) - std::max<double>(x, px), 0.0, 1.0);
                const double cover_y = std::clamp(std::min(y + 1.0, py + side) - std::max<double>(y, py), 0.0, 1.0);
                const double cover = cover_x * cover_y;
                if (cover <= 0.0) continue;
                const double tv = sample(target, x - px, y - py);
                frame.at(x, y) = (1.0 - cover) * frame.at(x, y) + cover * std::clamp(tv, 0.0, 1.0);
            }
        }
        if (occluded) {
            const auto& occ = spec.occlusion;
            const double half = 0.5 * side * std::sqrt(occ.fraction);
            const double cx = px + 0.5 * side, cy = py + 0.5 * side;
            for (int y = static_cast<int>(std::floor(cy - half)); y <= static_cast<int>(cy + half); ++y)
                for (int x = static_cast<int>(std::floor(cx - half)); x <= static_cast<int>(cx + half); ++x) {
                    if (x < 0 || y < 0 || x >= spec.width || y >= spec.height) continue;
                    // Pixel centres inside the square are covered.
                    if (std::fabs(x + 0.5 - cx) < half && std::fabs(y + 0.5 - cy) < half) frame.at(x, y) = occ.intensity;
                }
        }
        seq.frames.push_back(std::move(frame));
        seq.truth.push_back({px, py, static_cast<double>(side), static_cast<double>(side)});
    }
    return seq;
}

void write_sequence(const fs::path& dir, const SyntheticSequence& seq) {
    std::error_code ec;
    fs::create_directories(dir / "img", ec);
    if (ec) throw IoError("cannot create " + (dir / "img").string() + ": " + ec.message());
    char name[32];
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        std::snprintf(name, sizeof name, "%04zu.png", f + 1);
        save_gray(dir / "img" / name, seq.frames[f]);
    }
    std::ofstream gt(dir / "groundtruth_rect.txt");
    if (!gt) throw IoError("cannot write ground truth in " + dir.string());
    char line[128];
    for (const Box& b : seq.truth) {
        std::snprintf(line, sizeof line, "%.4f,%.4f,%.4f,%.4f\n", b.x + 1.0, b.y + 1.0, b.w, b.h);
        gt << line;
    }
}

}  // namespace patchtrack
