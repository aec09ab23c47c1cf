#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchtrack/geometry.hpp"
#include "patchtrack/image.hpp"

namespace patchtrack {

struct Sequence {
    std::string name;
    std::vector<std::filesystem::path> frames;
    std::vector<Box> ground_truth; // 0-based
};

struct MetricCurves {
    std::vector<double> precision_thresholds; // 0..50 px
    std::vector<double> precision;
    std::vector<double> success_thresholds;   // 0, 0.05, ..., 1
    std::vector<double> success;
    double dp20 = 0.0;
    double auc = 0.0;
};

/// Intersection over union of the two boxes; 0 for an empty union.
double overlap_score(const Box& a, const Box& b);

double center_error(const Box& a, const Box& b);

/// precision[t] = fraction with center error <= t; success[k] = fraction with
/// overlap > k/20; auc = mean of the success samples.
MetricCurves compute_curves(const std::vector<Box>& track, const std::vector<Box>& gt);

/// Parses "x,y,w,h" with comma, tab or whitespace delimiters. No origin shift.
Box parse_box(const std::string& text);

/// Reads a ground-truth file; 1-based OTB coordinates become 0-based.
std::vector<Box> read_ground_truth(const std::filesystem::path& path);

/// Loads a sequence directory: frames from DIR/img or DIR, sorted by numeric
/// stem, ground truth from DIR/groundtruth_rect.txt (IoError if required and missing).
Sequence load_sequence(const std::filesystem::path& dir, bool require_ground_truth = true);

/// Result lines `frame_index,x,y,w,h` in 1-based OTB coordinates.
void write_results(const std::filesystem::path& path, const std::vector<int>& frame_indices,
                   const std::vector<Box>& boxes);
std::vector<Box> read_results(const std::filesystem::path& path);

/// `threshold,value` rows.
void write_curve_csv(const std::filesystem::path& path, const std::vector<double>& thresholds,
                     const std::vector<double>& values);

std::string format_summary(const MetricCurves& curves);

GrayImage load_gray(const std::filesystem::path& path);
void save_gray(const std::filesystem::path& path, const GrayImage& img);

}  // namespace patchtrack
