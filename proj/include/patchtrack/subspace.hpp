#pragma once

#include <Eigen/Dense>

#include "patchtrack/image.hpp"
#include "patchtrack/patching.hpp"

namespace patchtrack {

/// Incrementally learned eigenbasis of vectorized templates (IVT-style).
struct SubspaceModel {
    Eigen::VectorXd mean;            // empty until the first update
    Eigen::MatrixXd basis;           // dim x r, orthonormal columns
    Eigen::VectorXd singular_values; // r, nonincreasing
    double n_observed = 0.0;         // effective sample count (decays with forgetting)
    double forgetting = 0.95;
    int max_rank = 20;

    bool empty() const { return mean.size() == 0; }
    int rank() const { return static_cast<int>(basis.cols()); }
};

/// Sequential Karhunen-Loeve update with mean tracking. Throws NumericError on
/// non-finite input.
SubspaceModel incremental_update(const SubspaceModel& model, const Eigen::MatrixXd& new_columns);

/// Least-squares projection onto the subspace followed by one re-fit that
/// ignores the 10% of pixels with the largest residuals. Returns the mean when
/// the basis is empty. The result is not clamped.
GrayImage reconstruct(const SubspaceModel& model, const GrayImage& templ);

/// Plain least-squares projection, no outlier trimming.
GrayImage project(const SubspaceModel& model, const GrayImage& templ);

Eigen::VectorXd vectorize(const GrayImage& img);

/// Pixel is trusted iff at least half of the patches covering it are clear.
GrayImage patch_mask_to_pixel_mask(const Eigen::VectorXd& flags, const GridSpec& grid);

struct GuidedFilterParams {
    int radius = 2;
    double reg = 0.01;
};

/// Local linear guided filter with box means over edge-replicated windows.
GrayImage guided_filter(const GrayImage& guide, const GrayImage& input, int radius, double reg);

/// guided_filter(guide = best_crop, mask * crop + (1 - mask) * reconstruction), clamped to [0,1].
GrayImage fuse_template(const GrayImage& best_crop, const GrayImage& reconstruction,
                        const GrayImage& mask, const GuidedFilterParams& params = {});

}  // namespace patchtrack
