#include "patchtrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "patchtrack/error.hpp"

namespace patchtrack {

namespace {

constexpr int kLargePatch = 16;
constexpr int kLargeStep = 8;
constexpr int kSmallPatch = 8;
constexpr int kSmallStep = 2;

}  // namespace

void TrackerConfig::validate() const {
    if (n_templates < 1) throw ConfigError("n_templates must be >= 1");
    if (template_update_period < 1 || large_update_period < 1 || small_update_period < 1)
        throw ConfigError("update periods must be >= 1");
    if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
    if (upsilon < 1) throw ConfigError("upsilon must be >= 1");
    if (eigvecs < 1) throw ConfigError("eigvecs must be >= 1");
    for (double s : sigma)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma entries must be finite and >= 0");
    gates.validate();
    if (!(residual_tol >= 0.0)) throw ConfigError("residual_tol must be >= 0");
    if (!(forgetting > 0.0 && forgetting <= 1.0)) throw ConfigError("forgetting must lie in (0,1]");
    if (guided.radius < 1 || !(guided.reg > 0.0)) throw ConfigError("guided filter needs radius >= 1, reg > 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
}

Tracker::Tracker(const GrayImage& first_frame, const Box& init_box, const TrackerConfig& cfg)
    : cfg_(cfg), templates_(static_cast<std::size_t>(std::max(cfg.n_templates, 1))), rng_(cfg.seed) {
    cfg_.validate();
    if (!(init_box.w > 0.0 && init_box.h > 0.0) || !std::isfinite(init_box.x) || !std::isfinite(init_box.y))
        throw ConfigError("initial box must have positive width and height");
    if (first_frame.empty()) throw ConfigError("first frame is empty");
    if (init_box.x + init_box.w <= 0.0 || init_box.y + init_box.h <= 0.0 ||
        init_box.x >= first_frame.width || init_box.y >= first_frame.height)
        throw ConfigError("initial box lies outside the frame");

    solver_.max_atoms = cfg_.upsilon;
    solver_.residual_tol = cfg_.residual_tol;
    frame_width_ = first_frame.width;
    frame_height_ = first_frame.height;
    frame_index_ = 1;

    last_map_ = state_from_box(init_box);
    const GrayImage crop = warp_crop(first_frame, last_map_, kTemplateSide);
    templates_.add(crop);

    const GridSpec large_grid = grid_layout(kTemplateSide, kLargePatch, kLargeStep);
    const GridSpec small_grid = grid_layout(kTemplateSide, kSmallPatch, kSmallStep);
    large_ = make_scale_group(ScaleLabel::large, large_grid, cfg_.large_update_period, templates_,
                              extract_patches(crop, large_grid));
    small_ = make_scale_group(ScaleLabel::small, small_grid, cfg_.small_update_period, templates_,
                              extract_patches(crop, small_grid));

    subspace_.forgetting = cfg_.forgetting;
    subspace_.max_rank = cfg_.eigvecs;
    subspace_ = incremental_update(subspace_, vectorize(crop));

    particles_ = ParticleSet::at(last_map_, static_cast<std::size_t>(cfg_.n_particles));

    const CandidateEvaluation ev = evaluate_state(first_frame, last_map_);
    TrackRecord rec;
    rec.frame_index = 1;
    rec.box = init_box;
    rec.state = last_map_;
    rec.likelihood = ev.likelihood;
    rec.gamma = ev.gamma;
    rec.clear_small = ev.small.report.fraction_clear;
    rec.clear_large = ev.large.report.fraction_clear;
    rec.dictionary_gate = dictionary_update_gate(ev.large.report, ev.small.report, cfg_.gates.delta);
    rec.large_buffer_gate = buffer_update_gate(ev.large.report, cfg_.gates.o1);
    rec.small_buffer_gate = buffer_update_gate(ev.small.report, cfg_.gates.o2);
    history_.push_back(rec);
}

int Tracker::worker_count() const {
    int n = cfg_.threads;
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

CandidateEvaluation Tracker::evaluate_state(const GrayImage& frame, const AffineState& state,
                                            bool detailed) const {
    ScoringWorkspace ws;
    const GrayImage crop = warp_crop(frame, state, kTemplateSide);
    return evaluate_candidate(small_, large_, crop, solver_, cfg_.gates, ws, detailed);
}

std::vector<double> Tracker::score_states(const GrayImage& frame,
                                          std::span<const AffineState> states) const {
    std::vector<double> out(states.size(), 0.0);
    std::vector<std::size_t> valid;
    for (std::size_t k = 0; k < states.size(); ++k)
        if (is_valid(states[k])) valid.push_back(k);

    // Batches are fixed in candidate order so scores do not depend on the thread count.
    const auto batch = static_cast<std::size_t>(kScoringBatch);
    const std::size_t batches = (valid.size() + batch - 1) / batch;
    const auto work = [&](std::size_t first, std::size_t last) {
        ScoringWorkspace ws;
        std::vector<GrayImage> crops;
        for (std::size_t b = first; b < last; ++b) {
            const std::size_t begin = b * batch;
            const std::size_t end = std::min(valid.size(), begin + batch);
            crops.clear();
            for (std::size_t c = begin; c < end; ++c) crops.push_back(warp_crop(frame, states[valid[c]], kTemplateSide));
            const std::vector<double> scores = evaluate_candidates(small_, large_, crops, solver_, cfg_.gates, ws);
            for (std::size_t c = begin; c < end; ++c) out[valid[c]] = scores[c - begin];
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), batches);
    if (workers <= 1) {
        work(0, batches);
        return out;
    }
    std::vector<std::jthread> pool;
    const std::size_t share = (batches + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t first = w * share;
        const std::size_t last = std::min(batches, first + share);
        if (first < last) pool.emplace_back(work, first, last);
    }
    pool.clear();
    return out;
}

TrackRecord Tracker::step(const GrayImage& frame) {
    if (frame.width != frame_width_ || frame.height != frame_height_)
        throw DimensionError("frame size changed mid-sequence");
    ++frame_index_;

    particles_ = propagate(particles_, cfg_.sigma, rng_);
    const std::vector<double> likelihoods = score_states(frame, particles_.states);
    for (double l : likelihoods)
        if (!std::isfinite(l)) throw NumericError("candidate scoring", frame_index_, "non-finite likelihood");
    particles_ = reweight(particles_, likelihoods);

    const std::size_t best = map_index(particles_);
    last_map_ = particles_.states[best];
    TrackRecord rec;
    rec.frame_index = frame_index_;
    rec.state = last_map_;
    rec.box = box_from_state(last_map_);
    rec.likelihood = likelihoods[best];
    rec.degenerate = particles_.degenerate;

    particles_ = resample(particles_, rng_);

    const GrayImage best_crop = warp_crop(frame, last_map_, kTemplateSide);
    ScoringWorkspace ws;
    const CandidateEvaluation ev = evaluate_candidate(small_, large_, best_crop, solver_, cfg_.gates, ws);
    rec.gamma = ev.gamma;
    rec.clear_small = ev.small.report.fraction_clear;
    rec.clear_large = ev.large.report.fraction_clear;

    commit(best_crop, ev, rec);
    history_.push_back(rec);
    return rec;
}

void Tracker::commit(const GrayImage& best_crop, const CandidateEvaluation& best, TrackRecord& rec) {
    const int t = frame_index_;
    const GateConfig& g = cfg_.gates;
    rec.dictionary_gate = dictionary_update_gate(best.large.report, best.small.report, g.delta);
    rec.large_buffer_gate = buffer_update_gate(best.large.report, g.o1);
    rec.small_buffer_gate = buffer_update_gate(best.small.report, g.o2);

    const bool large_due = t % cfg_.large_update_period == 0;
    const bool small_due = t % cfg_.small_update_period == 0;
    const bool templates_due = t % cfg_.template_update_period == 0;

    if (large_due && rec.large_buffer_gate) {
        push_buffers(large_, best.large.patches);
        rec.pushed_large = true;
    }
    if (small_due && rec.small_buffer_gate) {
        push_buffers(small_, best.small.patches);
        rec.pushed_small = true;
    }

    subspace_batch_.push_back(vectorize(best_crop));
    if (templates_due) {
        const GrayImage mask = patch_mask_to_pixel_mask(best.large.report.flags, large_.grid);
        const GrayImage recon = reconstruct(subspace_, best_crop);
        GrayImage fused = fuse_template(best_crop, recon, mask, cfg_.guided);
        for (double v : fused.data)
            if (!std::isfinite(v)) throw NumericError("template fusion", t, "non-finite template pixel");
        templates_.add(std::move(fused));
        rec.updated_templates = true;

        Eigen::MatrixXd batch(static_cast<Eigen::Index>(best_crop.size()),
                              static_cast<Eigen::Index>(subspace_batch_.size()));
        for (std::size_t c = 0; c < subspace_batch_.size(); ++c)
            batch.col(static_cast<Eigen::Index>(c)) = subspace_batch_[c];
        subspace_batch_.clear();
        try {
            subspace_ = incremental_update(subspace_, batch);
        } catch (const NumericError& e) {
            throw NumericError("subspace update", t, e.what());
        }
    }

    if (rec.dictionary_gate && large_due && large_.template_generation != templates_.generation()) {
        rebuild_dictionary(large_, templates_);
        rec.rebuilt_large = true;
    }
    if (rec.dictionary_gate && small_due && small_.template_generation != templates_.generation()) {
        rebuild_dictionary(small_, templates_);
        rec.rebuilt_small = true;
    }
}

}  // namespace patchtrack
