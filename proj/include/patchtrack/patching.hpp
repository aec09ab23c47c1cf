#pragma once

#include <Eigen/Dense>

#include "patchtrack/geometry.hpp"
#include "patchtrack/image.hpp"

namespace patchtrack {

inline constexpr int kTemplateSide = 32;

/// Overlapping square patch grid over a square template.
///
/// Patches are indexed row-major: with 1-based grid coordinates (i, j),
/// i = column in [1, w], j = row in [1, u], the 1-based index is (j-1)*w + i.
/// Code uses the 0-based k = (j-1)*w + (i-1).
struct GridSpec {
    int template_side = 0;
    int patch_side = 0;
    int step = 0;
    int w = 0;      // patches per row
    int u = 0;      // patches per column
    int count = 0;  // w * u
    int dim = 0;    // patch_side^2

    struct Coords {
        int i;  // 1-based column
        int j;  // 1-based row
    };
    struct Corner {
        int x;  // top-left pixel column
        int y;  // top-left pixel row
    };

    Coords coords(int k) const { return {k % w + 1, k / w + 1}; }
    int index(int i, int j) const { return (j - 1) * w + (i - 1); }
    Corner corner(int k) const {
        const auto c = coords(k);
        return {(c.i - 1) * step, (c.j - 1) * step};
    }
    bool operator==(const GridSpec&) const = default;
};

/// Throws ConfigError naming the inputs when the geometry does not tile exactly.
GridSpec grid_layout(int template_side, int patch_side, int step);

/// Columns are ℓ2-normalized vectorized patches (zero column for an all-zero patch).
using PatchMatrix = Eigen::MatrixXd;

/// Bilinear crop of the warped canonical square into an out_side x out_side image.
/// Samples outside the frame read as 0.
GrayImage warp_crop(const GrayImage& frame, const AffineState& state, int out_side);

/// dim x count matrix; column k is patch k vectorized column-major then normalized.
PatchMatrix extract_patches(const GrayImage& templ, const GridSpec& grid);

/// Normalizes in place; leaves zero-norm vectors at zero.
void normalize_columns(Eigen::MatrixXd& m);

}  // namespace patchtrack
