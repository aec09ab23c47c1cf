#include "patchtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

bool is_valid(const AffineState& st) {
    for (double v : st.as_array())
        if (!std::isfinite(v)) return false;
    return st.s > 0.0 && st.psi > 0.0;
}

AffineMatrix affine_matrix(const AffineState& st) {
    if (!is_valid(st))
        throw InvalidStateError("degenerate affine state (s=" + std::to_string(st.s) +
                                ", psi=" + std::to_string(st.psi) + ")");
    const double c = std::cos(st.theta);
    const double sn = std::sin(st.theta);
    const double k = std::tan(st.phi);
    const double sx = st.s;
    const double sy = st.s * st.psi;
    // R * [[1, k], [0, 1]] * diag(sx, sy)
    return {c * sx, (c * k - sn) * sy, st.lx,
            sn * sx, (sn * k + c) * sy, st.ly};
}

AffineState state_from_box(const Box& box) {
    AffineState st;
    st.lx = box.x + box.w / 2.0 - 0.5;
    st.ly = box.y + box.h / 2.0 - 0.5;
    st.s = box.w;
    st.psi = box.w > 0.0 ? box.h / box.w : 1.0;
    return st;
}

Box box_from_state(const AffineState& st) {
    const auto m = affine_matrix(st);
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (double u : {-0.5, 0.5}) {
        for (double v : {-0.5, 0.5}) {
            const double x = m[0] * u + m[1] * v + m[2];
            const double y = m[3] * u + m[4] * v + m[5];
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    return {x0 + 0.5, y0 + 0.5, x1 - x0, y1 - y0};
}

}  // namespace patchtrack
