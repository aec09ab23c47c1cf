#pragma once

#include <cstdint>
#include <vector>

#include "patchtrack/appearance.hpp"
#include "patchtrack/filter.hpp"
#include "patchtrack/geometry.hpp"
#include "patchtrack/image.hpp"
#include "patchtrack/sparse.hpp"
#include "patchtrack/subspace.hpp"

namespace patchtrack {

struct TrackerConfig {
    int n_templates = 10;
    int template_update_period = 5;
    int large_update_period = 5;
    int small_update_period = 20;
    int n_particles = 650;
    MotionSigma sigma = kDefaultSigma;
    int upsilon = 4;
    int eigvecs = 20;
    GateConfig gates;
    std::uint64_t seed = 0;

    double residual_tol = 1e-9;
    double forgetting = 0.95;
    GuidedFilterParams guided;
    int threads = 0; // 0 = hardware concurrency

    void validate() const;
};

struct TrackRecord {
    int frame_index = 0; // 1-based
    Box box;
    AffineState state;
    double likelihood = 0.0;
    double gamma = 1.0;
    double clear_small = 0.0;
    double clear_large = 0.0;
    bool degenerate = false;
    // Gates evaluated on the MAP candidate, and what the commit phase did.
    bool dictionary_gate = false;
    bool large_buffer_gate = false;
    bool small_buffer_gate = false;
    bool pushed_large = false;
    bool pushed_small = false;
    bool updated_templates = false;
    bool rebuilt_large = false;
    bool rebuilt_small = false;
};

/// Patchwise joint-sparse tracker.
///
/// Each step propagates particles, scores every candidate against read-only
/// model state, picks the MAP particle, resamples, then runs a single-owner
/// commit phase: gated buffer pushes, template fusion and replacement,
/// subspace update, gated dictionary rebuilds.
class Tracker {
public:
    /// Throws ConfigError for an invalid config or a zero-area box.
    Tracker(const GrayImage& first_frame, const Box& init_box, const TrackerConfig& cfg);

    TrackRecord step(const GrayImage& frame);

    /// Scoring sub-phase only: likelihood of each state on `frame`. Does not mutate.
    std::vector<double> score_states(const GrayImage& frame, std::span<const AffineState> states) const;
    CandidateEvaluation evaluate_state(const GrayImage& frame, const AffineState& state,
                                       bool detailed = false) const;

    int frame_index() const { return frame_index_; }
    const TrackerConfig& config() const { return cfg_; }
    const TemplateSet& templates() const { return templates_; }
    const ScaleGroup& small_group() const { return small_; }
    const ScaleGroup& large_group() const { return large_; }
    const SubspaceModel& subspace() const { return subspace_; }
    const ParticleSet& particles() const { return particles_; }
    const AffineState& last_map() const { return last_map_; }
    const std::vector<TrackRecord>& history() const { return history_; }

private:
    void commit(const GrayImage& best_crop, const CandidateEvaluation& best, TrackRecord& rec);
    int worker_count() const;

    TrackerConfig cfg_;
    SolverConfig solver_;
    int frame_width_ = 0;
    int frame_height_ = 0;
    int frame_index_ = 0;
    TemplateSet templates_;
    ScaleGroup small_;
    ScaleGroup large_;
    SubspaceModel subspace_;
    std::vector<Eigen::VectorXd> subspace_batch_;
    ParticleSet particles_;
    AffineState last_map_;
    Rng rng_;
    std::vector<TrackRecord> history_;
};

}  // namespace patchtrack
