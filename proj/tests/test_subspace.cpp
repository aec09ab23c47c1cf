#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "patchtrack/error.hpp"
#include "patchtrack/subspace.hpp"

using namespace patchtrack;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
}

GrayImage random_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GrayImage img(w, h);
    for (double& v : img.data) v = uni(rng);
    return img;
}

GrayImage from_vector(const Eigen::VectorXd& v) {
    GrayImage img(32, 32);
    for (std::size_t k = 0; k < img.size(); ++k) img.data[k] = v[static_cast<Eigen::Index>(k)];
    return img;
}

// Top-k left singular vectors of the batch centred at the batch mean.
Eigen::MatrixXd batch_basis(const Eigen::MatrixXd& data, int k) {
    const Eigen::MatrixXd centred = data.colwise() - data.rowwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(k);
}

}  // namespace

TEST_CASE("incremental updates without forgetting match a batch SVD") {
    std::mt19937_64 rng(1);
    // Decaying spectrum keeps the top directions well separated.
    Eigen::MatrixXd data = gaussian(1024, 50, rng);
    for (int c = 0; c < 50; ++c) data.col(c) += 0.3 * Eigen::VectorXd::LinSpaced(1024, 0.0, 1.0);
    const Eigen::MatrixXd mix = gaussian(50, 50, rng);
    Eigen::MatrixXd shaped = data;
    for (int r = 0; r < 8; ++r) shaped += (8.0 - r) * gaussian(1024, 1, rng) * mix.row(r);

    for (int batch : {1, 5, 7}) {
        SubspaceModel m;
        m.forgetting = 1.0;
        m.max_rank = 60;
        for (int c = 0; c < 50; c += batch) m = incremental_update(m, shaped.middleCols(c, std::min(batch, 50 - c)));
        CAPTURE(batch);
        CHECK(m.n_observed == doctest::Approx(50.0));
        CHECK((m.mean - shaped.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::MatrixXd ref = batch_basis(shaped, 5);
        CHECK(oracle::max_principal_angle(ref, m.basis.leftCols(5)) < 1e-6);

        const Eigen::MatrixXd centred = shaped.colwise() - shaped.rowwise().mean();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
        for (int k = 0; k < 5; ++k) CHECK(m.singular_values[k] == doctest::Approx(svd.singularValues()[k]).epsilon(1e-9));
        CHECK((m.basis.transpose() * m.basis - Eigen::MatrixXd::Identity(m.rank(), m.rank())).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("subspace rank is capped and singular values are nonincreasing") {
    std::mt19937_64 rng(2);
    SubspaceModel m;
    m.max_rank = 20;
    for (int k = 0; k < 8; ++k) m = incremental_update(m, gaussian(1024, 5, rng));
    CHECK(m.rank() == 20);
    for (int k = 1; k < m.rank(); ++k) CHECK(m.singular_values[k] <= m.singular_values[k - 1]);
}

TEST_CASE("forgetting shrinks the effective sample count and weights recent data") {
    std::mt19937_64 rng(3);
    SubspaceModel m;
    m.forgetting = 0.5;
    m = incremental_update(m, Eigen::MatrixXd::Zero(16, 4));
    m = incremental_update(m, Eigen::MatrixXd::Ones(16, 4));
    CHECK(m.n_observed == doctest::Approx(6.0));
    // mean = (0.5*4*0 + 4*1) / 6
    CHECK(m.mean[0] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("reconstruction recovers a template lying in a three-dimensional subspace") {
    std::mt19937_64 rng(4);
    Eigen::MatrixXd basis = gaussian(1024, 3, rng);
    basis = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() * Eigen::MatrixXd::Identity(1024, 3);
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(1024, 0.5);
    Eigen::MatrixXd samples(1024, 12);
    for (int c = 0; c < 12; ++c) samples.col(c) = mean + 0.1 * basis * gaussian(3, 1, rng);
    SubspaceModel m;
    m.forgetting = 1.0;
    m = incremental_update(m, samples);
    CHECK(m.rank() == 3);

    const Eigen::VectorXd target = mean + 0.1 * basis * gaussian(3, 1, rng);
    const GrayImage clean = from_vector(target);
    CHECK((vectorize(project(m, clean)) - target).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((vectorize(reconstruct(m, clean)) - target).cwiseAbs().maxCoeff() < 1e-10);

    // Salt noise on 5% of the pixels: the trimmed re-fit ignores it.
    GrayImage salted = clean;
    std::uniform_int_distribution<int> pix(0, 1023);
    for (int k = 0; k < 51; ++k) salted.data[static_cast<std::size_t>(pix(rng))] = 1.0;
    const double plain_err = (vectorize(project(m, salted)) - target).cwiseAbs().maxCoeff();
    const double trimmed_err = (vectorize(reconstruct(m, salted)) - target).cwiseAbs().maxCoeff();
    CHECK(trimmed_err < 1e-9);
    CHECK(plain_err > 1e-3);
}

TEST_CASE("subspace operations reject misuse") {
    SubspaceModel m;
    CHECK_THROWS_AS(reconstruct(m, GrayImage(32, 32)), ContractError);
    m = incremental_update(m, Eigen::MatrixXd::Ones(1024, 1));
    CHECK(m.rank() == 0);
    CHECK(reconstruct(m, GrayImage(32, 32, 0.2)).data[0] == 1.0);
    CHECK_THROWS_AS(reconstruct(m, GrayImage(16, 16)), DimensionError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(1024, 1);
    bad(3, 0) = std::nan("");
    CHECK_THROWS_AS(incremental_update(m, bad), NumericError);
}

TEST_CASE("pixel mask follows the per-pixel majority of covering patches") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution flag(0.5);
    for (const GridSpec& g : {grid_layout(32, 16, 8), grid_layout(32, 8, 2)}) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd flags(g.count);
            for (int k = 0; k < g.count; ++k) flags[k] = flag(rng);
            const GrayImage mask = patch_mask_to_pixel_mask(flags, g);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    int cover = 0, clear = 0;
                    for (int j = 0; j < g.u; ++j)
                        for (int i = 0; i < g.w; ++i) {
                            const int x0 = i * g.step, y0 = j * g.step;
                            if (x >= x0 && x < x0 + g.patch_side && y >= y0 && y < y0 + g.patch_side) {
                                ++cover;
                                clear += flags[j * g.w + i] == 1.0;
                            }
                        }
                    REQUIRE(mask.at(x, y) == (2 * clear >= cover ? 1.0 : 0.0));
                }
        }
    }
}

TEST_CASE("pixel mask extremes and the lone occluded centre patch") {
    const GridSpec g = grid_layout(32, 16, 8);
    for (double v : patch_mask_to_pixel_mask(Eigen::VectorXd::Ones(9), g).data) CHECK(v == 1.0);
    for (double v : patch_mask_to_pixel_mask(Eigen::VectorXd::Zero(9), g).data) CHECK(v == 0.0);
    Eigen::VectorXd centre = Eigen::VectorXd::Ones(9);
    centre[4] = 0.0;
    // Every pixel of the centre patch is also covered by clear neighbours.
    for (double v : patch_mask_to_pixel_mask(centre, g).data) CHECK(v == 1.0);
}

TEST_CASE("guided filter preserves constants exactly") {
    std::mt19937_64 rng(6);
    const GrayImage guide = random_image(32, 32, rng);
    for (double c : {0.0, 0.3, 0.7071, 1.0}) {
        const GrayImage out = guided_filter(guide, GrayImage(32, 32, c), 2, 0.1);
        for (double v : out.data) REQUIRE(v == c);
    }
}

TEST_CASE("self-guided filter approaches identity as reg goes to zero") {
    std::mt19937_64 rng(7);
    const GrayImage img = random_image(32, 32, rng);
    const GrayImage out = guided_filter(img, img, 2, 1e-8);
    double worst = 0.0;
    for (std::size_t k = 0; k < img.size(); ++k) worst = std::max(worst, std::abs(out.data[k] - img.data[k]));
    CHECK(worst < 1e-3);
}

TEST_CASE("guided filter with large reg approaches a double box mean") {
    std::mt19937_64 rng(8);
    const GrayImage guide = random_image(20, 20, rng);
    const GrayImage input = random_image(20, 20, rng);
    const GrayImage out = guided_filter(guide, input, 1, 1e9);
    // Oracle: box mean of the box mean with edge replication.
    auto box = [](const GrayImage& in) {
        GrayImage o(in.width, in.height);
        for (int y = 0; y < in.height; ++y)
            for (int x = 0; x < in.width; ++x) {
                double s = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        s += in.at(std::clamp(x + dx, 0, in.width - 1), std::clamp(y + dy, 0, in.height - 1));
                o.at(x, y) = s / 9.0;
            }
        return o;
    };
    const GrayImage want = box(box(input));
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(out.data[k] == doctest::Approx(want.data[k]).epsilon(1e-6));
}

TEST_CASE("guided filter rejects bad parameters") {
    CHECK_THROWS_AS(guided_filter(GrayImage(4, 4), GrayImage(5, 4), 1, 0.1), DimensionError);
    CHECK_THROWS_AS(guided_filter(GrayImage(4, 4), GrayImage(4, 4), 0, 0.1), ConfigError);
    CHECK_THROWS_AS(guided_filter(GrayImage(4, 4), GrayImage(4, 4), 1, 0.0), ConfigError);
}

TEST_CASE("fusion keeps trusted pixels, fills the rest from the reconstruction, stays in range") {
    std::mt19937_64 rng(9);
    const GrayImage crop(32, 32, 0.8);
    const GrayImage recon(32, 32, 0.2);
    // Full trust, constant crop: output equals the crop exactly.
    for (double v : fuse_template(crop, recon, GrayImage(32, 32, 1.0)).data) CHECK(v == 0.8);
    // No trust, constant guide: output equals the reconstruction.
    for (double v : fuse_template(crop, recon, GrayImage(32, 32, 0.0)).data) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

    GrayImage wild(32, 32);
    std::uniform_real_distribution<double> uni(-2.0, 3.0);
    for (double& v : wild.data) v = uni(rng);
    GrayImage half(32, 32, 0.0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 16; ++x) half.at(x, y) = 1.0;
    const GrayImage fused = fuse_template(random_image(32, 32, rng), wild, half);
    for (double v : fused.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
