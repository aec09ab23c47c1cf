#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "patchtrack/image.hpp"
#include "patchtrack/patching.hpp"
#include "patchtrack/sparse.hpp"

namespace patchtrack {

/// Thresholds and decays of the appearance model and its update gates.
struct GateConfig {
    double beta = 0.8;   // spatial weight decay
    double eps = 0.04;   // occlusion threshold on squared reconstruction error
    double delta = 0.08; // dictionary gate
    double o1 = 0.13;    // large-scale buffer gate
    double o2 = 0.13;    // small-scale buffer gate
    double eta = 10.0;   // sharpness of the large-scale down-weight

    void validate() const;
};

/// Ordered target templates. Template 1 is the first-frame crop and is never evicted.
class TemplateSet {
public:
    explicit TemplateSet(std::size_t capacity);

    /// Appends while below capacity; once full, evicts the oldest of T2..Tn first.
    void add(GrayImage templ);

    const std::vector<GrayImage>& templates() const { return templates_; }
    const GrayImage& operator[](std::size_t i) const { return templates_[i]; }
    std::size_t size() const { return templates_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return templates_.empty(); }
    /// Bumped on every mutation.
    std::uint64_t generation() const { return generation_; }

private:
    std::size_t capacity_;
    std::vector<GrayImage> templates_;
    std::uint64_t generation_ = 0;
};

enum class ScaleLabel { small, large };

const char* to_string(ScaleLabel label);

/// Scalar type of the hot scoring path (dictionary correlations and SOMP selection).
using ScoringScalar = float;

/// Derived data for scoring, recomputed whenever the dictionary or buffers change.
struct ScoringCache {
    using Matrix = Eigen::Matrix<ScoringScalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<ScoringScalar, Eigen::Dynamic, 1>;

    Matrix dictionary_t;             // atoms x dim
    Matrix gram;                     // atoms x atoms
    std::vector<Matrix> past_corr;   // per location: D^T * retained past columns
    std::vector<Vector> past_score;  // per location: row-wise squared norms of past_corr
    std::vector<double> past_energy; // per location: squared norm of retained past columns
};

/// One patch scale: grid, dictionary, per-location temporal buffers.
///
/// The dictionary has n * grid.count atoms ordered location-major, template-minor:
/// 0-based column q*n + p is patch q of template p.
struct ScaleGroup {
    static constexpr std::size_t kBufferCapacity = 5;

    ScaleLabel label = ScaleLabel::large;
    GridSpec grid;
    int update_period = 1;
    int n_templates = 0;
    std::uint64_t template_generation = 0; // generation the dictionary was built from
    Eigen::MatrixXd dictionary;            // dim x (n * count)
    std::vector<std::deque<Eigen::VectorXd>> buffers;
    ScoringCache cache;

    int atom_count() const { return static_cast<int>(dictionary.cols()); }
    /// Rebuilds the scoring cache. Called by every mutating operation.
    void refresh_cache();
};

/// dim x (n * count) dictionary in location-major, template-minor order.
Eigen::MatrixXd build_dictionary(std::span<const GrayImage> templates, const GridSpec& grid);
Eigen::MatrixXd build_dictionary(const TemplateSet& tset, const GridSpec& grid);

ScaleGroup make_scale_group(ScaleLabel label, const GridSpec& grid, int update_period,
                            const TemplateSet& tset, const PatchMatrix& first_patches);

void rebuild_dictionary(ScaleGroup& group, const TemplateSet& tset);

/// Appends each location's current patch; evicts the oldest beyond capacity.
void push_buffers(ScaleGroup& group, const PatchMatrix& patches);

/// Per-location accumulation (1/n) * sum over templates of the clamped code
/// fragments. `code` has n * count entries in dictionary order.
Eigen::VectorXd accumulate_fragments(const Eigen::VectorXd& code, int n);

/// Diagonal of the square stack: entry k is entry k of vector k.
Eigen::VectorXd alignment_pool(std::span<const Eigen::VectorXd> vectors);

struct OcclusionReport {
    Eigen::VectorXd flags;  // 1 = clear, 0 = occluded
    Eigen::VectorXd errors; // location-constrained squared reconstruction error
    double fraction_clear = 0.0;
};

/// Flags from per-location errors: clear iff error < eps.
OcclusionReport make_occlusion_report(Eigen::VectorXd errors, double eps);

/// Reconstructs patch i from the atoms of location group i only.
OcclusionReport occlusion_flags(const PatchMatrix& patches, const ScaleGroup& group,
                                std::span<const Eigen::VectorXd> codes, double eps);

/// w_k = 1 + flag_k * exp(-beta * (|i - (1+w)/2| + |j - (1+u)/2|)).
Eigen::VectorXd spatial_weights(const GridSpec& grid, const Eigen::VectorXd& flags, double beta);

/// Mean of exp(-eta * e_k) over the large-scale location errors.
double gamma_weight(const OcclusionReport& large, double eta);

struct PooledFeatures {
    std::vector<Eigen::VectorXd> raw; // per-location accumulated vectors; empty on the fast path
    Eigen::VectorXd pooled;
    Eigen::VectorXd weighted;
};

/// gamma * mean(large weighted) + mean(small weighted).
double candidate_likelihood(const PooledFeatures& small, const PooledFeatures& large, double gamma);

bool dictionary_update_gate(const OcclusionReport& large, const OcclusionReport& small, double delta);
bool buffer_update_gate(const OcclusionReport& report, double threshold);

struct ScaleScore {
    PatchMatrix patches;
    std::vector<Eigen::VectorXd> codes; // dense current-frame codes; detailed mode only
    PooledFeatures features;
    OcclusionReport report;
};

struct CandidateEvaluation {
    ScaleScore small;
    ScaleScore large;
    double gamma = 1.0;
    double likelihood = 0.0;
};

/// Per-thread scratch space for candidate scoring.
struct ScoringWorkspace {
    GramSomp<ScoringScalar> solver;
    ScoringCache::Matrix patches;
    ScoringCache::Matrix corr_current;
    ScoringCache::Vector corr_column;
    Eigen::VectorXd residual;
};

/// Candidates per correlation GEMM in batch scoring. Results depend on how
/// candidates are grouped into batches of this size, not on anything else.
inline constexpr std::ptrdiff_t kScoringBatch = 64;

/// Per-location pooled scores and errors of many candidates: count x candidates.
struct BatchScaleScores {
    Eigen::MatrixXd pooled;
    Eigen::MatrixXd errors;
};

/// Scores one patch scale of a 32x32 candidate crop. Each location is coded
/// jointly with the retained past patches of its buffer, the candidate's own
/// patch last. Read-only on the group.
ScaleScore score_scale(const ScaleGroup& group, const GrayImage& crop, const SolverConfig& solver,
                       const GateConfig& gates, ScoringWorkspace& ws, bool detailed = false);

CandidateEvaluation evaluate_candidate(const ScaleGroup& small, const ScaleGroup& large,
                                       const GrayImage& crop, const SolverConfig& solver,
                                       const GateConfig& gates, ScoringWorkspace& ws,
                                       bool detailed = false);

/// Scores many candidates on one scale, location by location. Column c
/// matches score_scale() on candidate c up to float rounding of the GEMM.
void score_scale_batch(const ScaleGroup& group, std::span<const PatchMatrix> patches,
                       const SolverConfig& solver, ScoringWorkspace& ws, BatchScaleScores& out);

/// Likelihoods of many crops; entry c matches evaluate_candidate() on crop c.
std::vector<double> evaluate_candidates(const ScaleGroup& small, const ScaleGroup& large,
                                        std::span<const GrayImage> crops, const SolverConfig& solver,
                                        const GateConfig& gates, ScoringWorkspace& ws);

}  // namespace patchtrack
