#include "patchtrack/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

namespace {

void truncate(SubspaceModel& m, const Eigen::MatrixXd& u, const Eigen::VectorXd& s) {
    const double top = s.size() ? s[0] : 0.0;
    Eigen::Index keep = 0;
    while (keep < s.size() && keep < m.max_rank && s[keep] > 1e-10 * top && s[keep] > 0.0) ++keep;
    m.basis = u.leftCols(keep);
    m.singular_values = s.head(keep);
}

}  // namespace

SubspaceModel incremental_update(const SubspaceModel& model, const Eigen::MatrixXd& new_columns) {
    if (new_columns.cols() < 1) throw DimensionError("incremental_update needs at least one column");
    if (!new_columns.allFinite()) throw NumericError("subspace update", 0, "non-finite input column");
    if (!model.empty() && new_columns.rows() != model.mean.size())
        throw DimensionError("incremental_update: column dimension mismatch");

    const double m = static_cast<double>(new_columns.cols());
    const Eigen::VectorXd mu_new = new_columns.rowwise().mean();
    Eigen::MatrixXd centered = new_columns.colwise() - mu_new;

    SubspaceModel out = model;
    if (model.empty()) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
        out.mean = mu_new;
        out.n_observed = m;
        truncate(out, svd.matrixU(), svd.singularValues());
        return out;
    }

    const double n0 = model.n_observed;
    const double f = model.forgetting;
    Eigen::MatrixXd data(centered.rows(), centered.cols() + 1);
    data.leftCols(centered.cols()) = centered;
    data.col(centered.cols()) = std::sqrt(m * n0 / (m + n0)) * (model.mean - mu_new);

    out.mean = (f * n0 * model.mean + m * mu_new) / (m + f * n0);
    out.n_observed = m + f * n0;

    const Eigen::MatrixXd& u0 = model.basis;
    const Eigen::Index r0 = u0.cols();
    const Eigen::Index k = data.cols();
    Eigen::MatrixXd proj = u0.transpose() * data;
    Eigen::MatrixXd res = data - u0 * proj;
    // second pass keeps the new directions orthogonal to u0 when res is tiny
    const Eigen::MatrixXd proj2 = u0.transpose() * res;
    res -= u0 * proj2;
    proj += proj2;

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(res);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(res.rows(), k);

    Eigen::MatrixXd basis_ext(res.rows(), r0 + k);
    basis_ext << u0, q;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(r0 + k, r0 + k);
    r.topLeftCorner(r0, r0) = (f * model.singular_values).asDiagonal();
    r.topRightCorner(r0, k) = proj;
    r.bottomRightCorner(k, k) = q.transpose() * res;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU);
    truncate(out, basis_ext * svd.matrixU(), svd.singularValues());
    return out;
}

Eigen::VectorXd vectorize(const GrayImage& img) {
    return Eigen::Map<const Eigen::VectorXd>(img.data.data(), static_cast<Eigen::Index>(img.data.size()));
}

namespace {

GrayImage to_image(const Eigen::VectorXd& v, int w, int h) {
    GrayImage img(w, h);
    Eigen::Map<Eigen::VectorXd>(img.data.data(), v.size()) = v;
    return img;
}

void check_model(const SubspaceModel& model, const GrayImage& templ) {
    if (model.empty()) throw ContractError("subspace model has no observations");
    if (static_cast<Eigen::Index>(templ.size()) != model.mean.size())
        throw DimensionError("template size does not match the subspace dimension");
}

}  // namespace

GrayImage project(const SubspaceModel& model, const GrayImage& templ) {
    check_model(model, templ);
    const Eigen::VectorXd c = vectorize(templ) - model.mean;
    const Eigen::VectorXd h = model.mean + model.basis * (model.basis.transpose() * c);
    return to_image(h, templ.width, templ.height);
}

GrayImage reconstruct(const SubspaceModel& model, const GrayImage& templ) {
    check_model(model, templ);
    if (model.rank() == 0) return to_image(model.mean, templ.width, templ.height);

    const Eigen::VectorXd c = vectorize(templ) - model.mean;
    const Eigen::MatrixXd& u = model.basis;
    const Eigen::VectorXd q = u.transpose() * c;
    const Eigen::VectorXd resid = (c - u * q).cwiseAbs();

    // Drop the 10% largest residuals (ties broken by pixel index) and re-fit.
    const auto d = static_cast<std::size_t>(c.size());
    const std::size_t trimmed = d / 10;
    std::vector<Eigen::Index> order(d);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(trimmed), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                          return resid[a] != resid[b] ? resid[a] > resid[b] : a < b;
                      });
    Eigen::VectorXd w = Eigen::VectorXd::Ones(c.size());
    for (std::size_t t = 0; t < trimmed; ++t) w[order[t]] = 0.0;

    const Eigen::MatrixXd uw = w.asDiagonal() * u;
    const Eigen::MatrixXd normal = uw.transpose() * uw;
    const Eigen::VectorXd rhs = uw.transpose() * c;
    const Eigen::VectorXd q2 = normal.ldlt().solve(rhs);
    const Eigen::VectorXd h = model.mean + u * (q2.allFinite() ? q2 : q);
    return to_image(h, templ.width, templ.height);
}

GrayImage patch_mask_to_pixel_mask(const Eigen::VectorXd& flags, const GridSpec& grid) {
    if (flags.size() != grid.count) throw DimensionError("pixel mask: flag count mismatch");
    const int side = grid.template_side;
    std::vector<int> covering(static_cast<std::size_t>(side) * side, 0);
    std::vector<int> clear(covering.size(), 0);
    for (int k = 0; k < grid.count; ++k) {
        const auto corner = grid.corner(k);
        const bool ok = flags[k] > 0.5;
        for (int y = corner.y; y < corner.y + grid.patch_side; ++y)
            for (int x = corner.x; x < corner.x + grid.patch_side; ++x) {
                ++covering[y * side + x];
                if (ok) ++clear[y * side + x];
            }
    }
    GrayImage mask(side, side);
    for (std::size_t p = 0; p < covering.size(); ++p)
        mask.data[p] = 2 * clear[p] >= covering[p] ? 1.0 : 0.0;
    return mask;
}

namespace {

// Box mean over a (2r+1)^2 window with edge replication, accumulated relative
// to the centre value so that locally constant input is reproduced exactly.
Eigen::ArrayXXd box_mean(const Eigen::ArrayXXd& img, int r) {
    const Eigen::Index h = img.rows();
    const Eigen::Index w = img.cols();
    Eigen::ArrayXXd out(h, w);
    const double norm = 1.0 / ((2.0 * r + 1.0) * (2.0 * r + 1.0));
    for (Eigen::Index y = 0; y < h; ++y) {
        for (Eigen::Index x = 0; x < w; ++x) {
            const double centre = img(y, x);
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const Eigen::Index yy = std::clamp<Eigen::Index>(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const Eigen::Index xx = std::clamp<Eigen::Index>(x + dx, 0, w - 1);
                    acc += img(yy, xx) - centre;
                }
            }
            out(y, x) = centre + acc * norm;
        }
    }
    return out;
}

Eigen::ArrayXXd as_array(const GrayImage& img) {
    Eigen::ArrayXXd a(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) a(y, x) = img.at(x, y);
    return a;
}

}  // namespace

GrayImage guided_filter(const GrayImage& guide, const GrayImage& input, int radius, double reg) {
    if (!guide.same_shape(input)) throw DimensionError("guided_filter: guide and input differ in size");
    if (radius < 1 || !(reg > 0.0)) throw ConfigError("guided_filter needs radius >= 1 and reg > 0");

    const Eigen::ArrayXXd i = as_array(guide);
    const Eigen::ArrayXXd p = as_array(input);
    const Eigen::ArrayXXd mean_i = box_mean(i, radius);
    const Eigen::ArrayXXd mean_p = box_mean(p, radius);
    // Centred second moments: exact zeros on flat windows.
    Eigen::ArrayXXd var_i(i.rows(), i.cols());
    Eigen::ArrayXXd cov_ip(i.rows(), i.cols());
    const Eigen::Index h = i.rows();
    const Eigen::Index w = i.cols();
    const double norm = 1.0 / ((2.0 * radius + 1.0) * (2.0 * radius + 1.0));
    for (Eigen::Index y = 0; y < h; ++y) {
        for (Eigen::Index x = 0; x < w; ++x) {
            double vi = 0.0, cip = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const Eigen::Index yy = std::clamp<Eigen::Index>(y + dy, 0, h - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const Eigen::Index xx = std::clamp<Eigen::Index>(x + dx, 0, w - 1);
                    const double gi = i(yy, xx) - mean_i(y, x);
                    const double gp = p(yy, xx) - mean_p(y, x);
                    vi += gi * gi;
                    cip += gi * gp;
                }
            }
            var_i(y, x) = vi * norm;
            cov_ip(y, x) = cip * norm;
        }
    }
    const Eigen::ArrayXXd a = cov_ip / (var_i + reg);
    const Eigen::ArrayXXd b = mean_p - a * mean_i;
    const Eigen::ArrayXXd q = box_mean(a, radius) * i + box_mean(b, radius);

    GrayImage out(guide.width, guide.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = q(y, x);
    return out;
}

GrayImage fuse_template(const GrayImage& best_crop, const GrayImage& reconstruction,
                        const GrayImage& mask, const GuidedFilterParams& params) {
    if (!best_crop.same_shape(reconstruction) || !best_crop.same_shape(mask))
        throw DimensionError("fuse_template: inputs differ in size");
    GrayImage blend(best_crop.width, best_crop.height);
    for (std::size_t p = 0; p < blend.size(); ++p)
        blend.data[p] = mask.data[p] * best_crop.data[p] + (1.0 - mask.data[p]) * reconstruction.data[p];
    GrayImage out = guided_filter(best_crop, blend, params.radius, params.reg);
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

}  // namespace patchtrack
