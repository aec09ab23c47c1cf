#include "patchtrack/patching.hpp"

#include <cmath>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

GridSpec grid_layout(int template_side, int patch_side, int step) {
    const auto describe = [&] {
        return "(template_side=" + std::to_string(template_side) +
               ", patch_side=" + std::to_string(patch_side) + ", step=" + std::to_string(step) + ")";
    };
    if (patch_side < 1 || template_side < patch_side || step < 1)
        throw ConfigError("invalid patch grid " + describe());
    if ((template_side - patch_side) % step != 0)
        throw ConfigError("patch grid does not tile the template " + describe());

    GridSpec g;
    g.template_side = template_side;
    g.patch_side = patch_side;
    g.step = step;
    g.w = (template_side - patch_side) / step + 1;
    g.u = g.w;
    g.count = g.w * g.u;
    g.dim = patch_side * patch_side;
    return g;
}

GrayImage warp_crop(const GrayImage& frame, const AffineState& state, int out_side) {
    if (out_side < 1) throw DimensionError("crop side must be positive");
    const AffineMatrix m = affine_matrix(state);
    GrayImage out(out_side, out_side);
    const int fw = frame.width;
    const int fh = frame.height;

    const auto pixel = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= fw || y >= fh) return 0.0;
        return frame.at(x, y);
    };

    for (int r = 0; r < out_side; ++r) {
        const double v = (r + 0.5) / out_side - 0.5;
        for (int c = 0; c < out_side; ++c) {
            const double u = (c + 0.5) / out_side - 0.5;
            const double fx = m[0] * u + m[1] * v + m[2];
            const double fy = m[3] * u + m[4] * v + m[5];
            const double x0f = std::floor(fx);
            const double y0f = std::floor(fy);
            const double ax = fx - x0f;
            const double ay = fy - y0f;
            // Far outside: avoid integer overflow on the casts below.
            if (x0f < -2.0 || y0f < -2.0 || x0f > fw + 1.0 || y0f > fh + 1.0) {
                out.at(c, r) = 0.0;
                continue;
            }
            const int x0 = static_cast<int>(x0f);
            const int y0 = static_cast<int>(y0f);
            double value = (1.0 - ax) * (1.0 - ay) * pixel(x0, y0);
            if (ax > 0.0) value += ax * (1.0 - ay) * pixel(x0 + 1, y0);
            if (ay > 0.0) value += (1.0 - ax) * ay * pixel(x0, y0 + 1);
            if (ax > 0.0 && ay > 0.0) value += ax * ay * pixel(x0 + 1, y0 + 1);
            out.at(c, r) = value;
        }
    }
    return out;
}

void normalize_columns(Eigen::MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        const double n = m.col(k).norm();
        if (n > 0.0)
            m.col(k) /= n;
        else
            m.col(k).setZero();
    }
}

PatchMatrix extract_patches(const GrayImage& templ, const GridSpec& grid) {
    if (templ.width != grid.template_side || templ.height != grid.template_side)
        throw DimensionError("template is " + std::to_string(templ.width) + "x" +
                             std::to_string(templ.height) + ", grid expects " +
                             std::to_string(grid.template_side));
    PatchMatrix out(grid.dim, grid.count);
    const int p = grid.patch_side;
    for (int k = 0; k < grid.count; ++k) {
        const auto corner = grid.corner(k);
        double* col = out.col(k).data();
        for (int dx = 0; dx < p; ++dx)
            for (int dy = 0; dy < p; ++dy)
                col[dx * p + dy] = templ.at(corner.x + dx, corner.y + dy);
    }
    normalize_columns(out);
    return out;
}

}  // namespace patchtrack
