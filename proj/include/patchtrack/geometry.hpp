#pragma once

#include <array>

namespace patchtrack {

/// Axis-aligned box in 0-based frame pixels: covers columns [x, x+w) and rows [y, y+h).
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return w * h; }
    bool operator==(const Box&) const = default;
};

/// Six-parameter affine pose of a candidate.
///
/// The canonical square [-1/2, 1/2]^2 is mapped to frame coordinates (pixel
/// centres at integer positions) by
///
///     p = (lx, ly) + R(theta) * Shear(phi) * diag(s, s * psi) * (u, v)
///
/// with Shear(phi) = [[1, tan(phi)], [0, 1]]. `s` is the target width in
/// pixels and `psi` the height/width ratio.
struct AffineState {
    double lx = 0.0;
    double ly = 0.0;
    double theta = 0.0;
    double s = 1.0;
    double psi = 1.0;
    double phi = 0.0;

    static constexpr int kDims = 6;

    std::array<double, kDims> as_array() const { return {lx, ly, theta, s, psi, phi}; }
    static AffineState from_array(const std::array<double, kDims>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }
    bool operator==(const AffineState&) const = default;
};

/// Row-major 2x3 matrix [a b tx; c d ty] mapping canonical (u,v) to frame (x,y).
using AffineMatrix = std::array<double, 6>;

bool is_valid(const AffineState& st);

/// Throws InvalidStateError for s <= 0, psi <= 0 or non-finite parameters.
AffineMatrix affine_matrix(const AffineState& st);

AffineState state_from_box(const Box& box);

/// Axis-aligned bounding box of the warped canonical square.
Box box_from_state(const AffineState& st);

}  // namespace patchtrack
