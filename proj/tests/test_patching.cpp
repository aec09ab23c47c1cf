#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "patchtrack/error.hpp"
#include "patchtrack/geometry.hpp"
#include "patchtrack/patching.hpp"

using namespace patchtrack;

namespace {

GrayImage random_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GrayImage img(w, h);
    for (double& v : img.data) v = uni(rng);
    return img;
}

AffineState unit_state(double cx, double cy, double side) {
    AffineState st;
    st.lx = cx;
    st.ly = cy;
    st.s = side;
    st.psi = 1.0;
    return st;
}

}  // namespace

TEST_CASE("grid_layout matches the configured patch scales") {
    const GridSpec large = grid_layout(32, 16, 8);
    CHECK(large.w == 3);
    CHECK(large.u == 3);
    CHECK(large.count == 9);
    CHECK(large.dim == 256);

    const GridSpec small = grid_layout(32, 8, 2);
    CHECK(small.w == 13);
    CHECK(small.count == 169);
    CHECK(small.dim == 64);

    const GridSpec whole = grid_layout(32, 32, 1);
    CHECK(whole.count == 1);
    CHECK(whole.dim == 1024);
}

TEST_CASE("grid_layout rejects geometry that does not tile") {
    CHECK_THROWS_AS(grid_layout(32, 16, 5), ConfigError);
    CHECK_THROWS_AS(grid_layout(8, 16, 1), ConfigError);
    CHECK_THROWS_AS(grid_layout(32, 0, 1), ConfigError);
    try {
        grid_layout(32, 16, 5);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("32") != std::string::npos);
        CHECK(msg.find("16") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("grid index <-> coordinates round-trips for every valid grid") {
    for (int side = 1; side <= 32; ++side)
        for (int patch = 1; patch <= side; ++patch)
            for (int step = 1; step <= side; ++step) {
                if ((side - patch) % step) continue;
                const GridSpec g = grid_layout(side, patch, step);
                for (int k = 0; k < g.count; ++k) {
                    const auto c = g.coords(k);
                    REQUIRE(c.i >= 1);
                    REQUIRE(c.i <= g.w);
                    REQUIRE(c.j >= 1);
                    REQUIRE(c.j <= g.u);
                    // 1-based rule k1 = (j-1)*w + i
                    REQUIRE((c.j - 1) * g.w + c.i == k + 1);
                    REQUIRE(g.index(c.i, c.j) == k);
                    const auto corner = g.corner(k);
                    REQUIRE(corner.x / step + 1 == c.i);
                    REQUIRE(corner.y / step + 1 == c.j);
                }
            }
}

TEST_CASE("warp_crop of a constant frame is constant") {
    GrayImage frame(100, 80, 0.5);
    const GrayImage crop = warp_crop(frame, unit_state(50, 40, 32), 32);
    CHECK(crop.width == 32);
    CHECK(crop.height == 32);
    for (double v : crop.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("warp_crop translation relocates a bright pixel against a direct lookup") {
    GrayImage frame(64, 64, 0.0);
    frame.at(30, 20) = 1.0;
    // Unit scale: crop pixel (c, r) samples frame (lx - 15.5 + c, ly - 15.5 + r).
    const AffineState base = unit_state(31.5, 31.5, 32);
    AffineState moved = base;
    moved.lx += 5.0;

    const GrayImage a = warp_crop(frame, base, 32);
    const GrayImage b = warp_crop(frame, moved, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
            const int fx = static_cast<int>(moved.lx - 15.5) + c;
            const int fy = static_cast<int>(moved.ly - 15.5) + r;
            const double oracle = (fx >= 0 && fy >= 0 && fx < 64 && fy < 64) ? frame.at(fx, fy) : 0.0;
            REQUIRE(b.at(c, r) == oracle);
        }
    CHECK(a.at(30 - 16, 20 - 16) == 1.0);
    CHECK(b.at(30 - 16 - 5, 20 - 16) == 1.0);
}

TEST_CASE("warp_crop is exact for integer translations of integer-aligned content") {
    std::mt19937_64 rng(3);
    const GrayImage frame = random_image(90, 70, rng);
    for (int dx = -6; dx <= 6; dx += 3)
        for (int dy = -4; dy <= 4; dy += 4) {
            const AffineState st = unit_state(40.5 + dx, 30.5 + dy, 32);
            const GrayImage crop = warp_crop(frame, st, 32);
            for (int r = 0; r < 32; ++r)
                for (int c = 0; c < 32; ++c)
                    REQUIRE(std::abs(crop.at(c, r) - frame.at(25 + dx + c, 15 + dy + r)) <= 1e-12);
        }
}

TEST_CASE("warp_crop samples outside the frame as zero") {
    GrayImage frame(40, 40, 1.0);
    const GrayImage crop = warp_crop(frame, unit_state(-100, -100, 32), 32);
    for (double v : crop.data) CHECK(v == 0.0);
}

TEST_CASE("warp_crop rotation by pi/2 rotates an axis-aligned gradient") {
    // Horizontal gradient g(x, y) = 0.01 * x.
    GrayImage frame(100, 100);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x) frame.at(x, y) = 0.01 * x;
    AffineState st = unit_state(50, 50, 32);
    st.theta = std::numbers::pi / 2;
    const GrayImage crop = warp_crop(frame, st, 32);
    // Rotation maps canonical (u, v) to (-v, u) about the centre, so the
    // crop varies along rows: frame x = 50 - 32 * v.
    for (int r = 0; r < 32; ++r) {
        const double v = (r + 0.5) / 32.0 - 0.5;
        const double expected = 0.01 * (50.0 - 32.0 * v);
        for (int c = 0; c < 32; ++c) REQUIRE(std::abs(crop.at(c, r) - expected) < 1e-6);
    }
}

TEST_CASE("warp_crop rejects degenerate states") {
    GrayImage frame(10, 10, 0.5);
    AffineState st = unit_state(5, 5, 0.0);
    CHECK_THROWS_AS(warp_crop(frame, st, 32), InvalidStateError);
    st.s = 4;
    st.psi = std::nan("");
    CHECK_THROWS_AS(warp_crop(frame, st, 32), InvalidStateError);
}

TEST_CASE("extract_patches of a constant template") {
    const GridSpec g = grid_layout(32, 16, 8);
    const PatchMatrix p = extract_patches(GrayImage(32, 32, 1.0), g);
    REQUIRE(p.rows() == 256);
    REQUIRE(p.cols() == 9);
    for (Eigen::Index k = 0; k < p.size(); ++k) CHECK(p.data()[k] == doctest::Approx(1.0 / 16.0).epsilon(1e-15));

    const PatchMatrix z = extract_patches(GrayImage(32, 32, 0.0), g);
    CHECK(z.isZero(0.0));
}

TEST_CASE("extract_patches matches a naive per-patch copy") {
    std::mt19937_64 rng(11);
    for (const auto& g : {grid_layout(32, 16, 8), grid_layout(32, 8, 2)}) {
        const GrayImage t = random_image(32, 32, rng);
        const PatchMatrix p = extract_patches(t, g);
        for (int j = 1; j <= g.u; ++j)
            for (int i = 1; i <= g.w; ++i) {
                const int k = (j - 1) * g.w + i - 1;
                Eigen::VectorXd naive(g.dim);
                int e = 0;
                for (int col = 0; col < g.patch_side; ++col)
                    for (int row = 0; row < g.patch_side; ++row)
                        naive[e++] = t.at((i - 1) * g.step + col, (j - 1) * g.step + row);
                naive /= naive.norm();
                REQUIRE((p.col(k) - naive).cwiseAbs().maxCoeff() == 0.0);
            }
    }
}

TEST_CASE("extract_patches columns have norm 0 or 1") {
    std::mt19937_64 rng(5);
    const GridSpec g = grid_layout(32, 8, 2);
    GrayImage t = random_image(32, 32, rng);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) t.at(x, y) = 0.0;
    const PatchMatrix p = extract_patches(t, g);
    int zeros = 0;
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
        const double n = p.col(k).norm();
        if (n == 0.0)
            ++zeros;
        else
            REQUIRE(n == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(zeros == 9);  // corners (0..4, 0..4) in steps of 2
}

TEST_CASE("extract_patches rejects a mis-sized template") {
    CHECK_THROWS_AS(extract_patches(GrayImage(31, 32), grid_layout(32, 16, 8)), DimensionError);
}

TEST_CASE("box and affine state convert both ways") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> pos(-20.0, 300.0), size(1.0, 120.0);
    for (int k = 0; k < 200; ++k) {
        const Box b{pos(rng), pos(rng), size(rng), size(rng)};
        const AffineState st = state_from_box(b);
        CHECK(st.theta == 0.0);
        CHECK(st.s == doctest::Approx(b.w));
        CHECK(st.psi * st.s == doctest::Approx(b.h));
        const Box back = box_from_state(st);
        CHECK(back.x == doctest::Approx(b.x).epsilon(1e-12));
        CHECK(back.y == doctest::Approx(b.y).epsilon(1e-12));
        CHECK(back.w == doctest::Approx(b.w).epsilon(1e-12));
        CHECK(back.h == doctest::Approx(b.h).epsilon(1e-12));
    }
}

TEST_CASE("rotated state yields the bounding box of the warped corners") {
    AffineState st;
    st.lx = 49.5;
    st.ly = 49.5;
    st.s = 20.0;
    st.psi = 1.0;
    st.theta = std::numbers::pi / 4;
    const Box b = box_from_state(st);
    const double half = 10.0 * std::sqrt(2.0);
    CHECK(b.w == doctest::Approx(2 * half));
    CHECK(b.h == doctest::Approx(2 * half));
    CHECK(b.cx() - 0.5 == doctest::Approx(49.5));
    CHECK(is_valid(st));
    st.s = 0.0;
    CHECK_FALSE(is_valid(st));
    CHECK_THROWS_AS(affine_matrix(st), InvalidStateError);
}
