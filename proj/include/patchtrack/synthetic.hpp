#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "patchtrack/geometry.hpp"
#include "patchtrack/image.hpp"

namespace patchtrack {

/// Flat square centred on the target on a range of frames.
struct OcclusionSchedule {
    int first_frame = 0;    // 1-based, inclusive; 0 disables
    int last_frame = 0;
    double fraction = 0.5;  // covered share of the target area
    double intensity = 0.5;
};

struct SyntheticSpec {
    int width = 320;
    int height = 240;
    int target_side = 64;
    int frames = 200;
    double speed = 2.0;    // px/frame, reflected at the frame margins
    double heading = 0.35; // radians from the +x axis
    int margin = 16;
    std::uint64_t seed = 7;
    OcclusionSchedule occlusion;
};

struct SyntheticSequence {
    std::vector<GrayImage> frames;
    std::vector<Box> truth; // 0-based
};

/// Textured square target sliding over a textured background.
SyntheticSequence make_synthetic(const SyntheticSpec& spec);

/// Writes DIR/img/0001.png ... and DIR/groundtruth_rect.txt (1-based).
void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& seq);

}  // namespace patchtrack
