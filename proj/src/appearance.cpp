#include "patchtrack/appearance.hpp"

#include <cmath>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

void GateConfig::validate() const {
    if (!(beta >= 0.0) || !(eps >= 0.0) || !(eta >= 0.0))
        throw ConfigError("beta, eps and eta must be >= 0");
    for (double g : {delta, o1, o2})
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("delta, o1 and o2 must lie in [0,1]");
}

TemplateSet::TemplateSet(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("template set capacity must be >= 1");
}

void TemplateSet::add(GrayImage templ) {
    if (templates_.size() >= capacity_) {
        if (capacity_ == 1) {
            ++generation_;
            return;  // only the frozen first template fits
        }
        templates_.erase(templates_.begin() + 1);
    }
    templates_.push_back(std::move(templ));
    ++generation_;
}

const char* to_string(ScaleLabel label) {
    return label == ScaleLabel::small ? "small" : "large";
}

Eigen::MatrixXd build_dictionary(std::span<const GrayImage> templates, const GridSpec& grid) {
    if (templates.empty()) throw ConfigError("cannot build a dictionary from an empty template set");
    const auto n = static_cast<Eigen::Index>(templates.size());
    Eigen::MatrixXd dict(grid.dim, n * grid.count);
    for (Eigen::Index p = 0; p < n; ++p) {
        const PatchMatrix patches = extract_patches(templates[p], grid);
        for (Eigen::Index q = 0; q < grid.count; ++q) dict.col(q * n + p) = patches.col(q);
    }
    return dict;
}

Eigen::MatrixXd build_dictionary(const TemplateSet& tset, const GridSpec& grid) {
    return build_dictionary(std::span<const GrayImage>(tset.templates()), grid);
}

void ScaleGroup::refresh_cache() {
    using Matrix = ScoringCache::Matrix;
    const Matrix d = dictionary.cast<ScoringScalar>();
    cache.dictionary_t = d.transpose();
    cache.gram.noalias() = cache.dictionary_t * d;

    constexpr std::size_t kPast = kBufferCapacity - 1;
    cache.past_corr.assign(buffers.size(), Matrix());
    cache.past_energy.assign(buffers.size(), 0.0);
    cache.past_score.assign(buffers.size(), ScoringCache::Vector());
    for (std::size_t q = 0; q < buffers.size(); ++q) {
        const auto& buf = buffers[q];
        const std::size_t keep = std::min(buf.size(), kPast);
        Matrix past(grid.dim, static_cast<Eigen::Index>(keep));
        double energy = 0.0;
        for (std::size_t c = 0; c < keep; ++c) {
            const auto& col = buf[buf.size() - keep + c];
            past.col(static_cast<Eigen::Index>(c)) = col.cast<ScoringScalar>();
            energy += col.squaredNorm();
        }
        cache.past_corr[q].noalias() = cache.dictionary_t * past;
        cache.past_score[q] = cache.past_corr[q].rowwise().squaredNorm();
        cache.past_energy[q] = energy;
    }
}

ScaleGroup make_scale_group(ScaleLabel label, const GridSpec& grid, int update_period,
                            const TemplateSet& tset, const PatchMatrix& first_patches) {
    if (first_patches.rows() != grid.dim || first_patches.cols() != grid.count)
        throw DimensionError("initial patches do not match the grid");
    ScaleGroup g;
    g.label = label;
    g.grid = grid;
    g.update_period = update_period;
    g.dictionary = build_dictionary(tset, grid);
    g.n_templates = static_cast<int>(tset.size());
    g.template_generation = tset.generation();
    g.buffers.resize(static_cast<std::size_t>(grid.count));
    for (int q = 0; q < grid.count; ++q) g.buffers[q].push_back(first_patches.col(q));
    g.refresh_cache();
    return g;
}

void rebuild_dictionary(ScaleGroup& group, const TemplateSet& tset) {
    group.dictionary = build_dictionary(tset, group.grid);
    group.n_templates = static_cast<int>(tset.size());
    group.template_generation = tset.generation();
    group.refresh_cache();
}

void push_buffers(ScaleGroup& group, const PatchMatrix& patches) {
    if (patches.cols() != group.grid.count || patches.rows() != group.grid.dim)
        throw DimensionError("push_buffers: patch matrix does not match the grid");
    for (int q = 0; q < group.grid.count; ++q) {
        auto& buf = group.buffers[q];
        buf.push_back(patches.col(q));
        while (buf.size() > ScaleGroup::kBufferCapacity) buf.pop_front();
    }
    group.refresh_cache();
}

Eigen::VectorXd accumulate_fragments(const Eigen::VectorXd& code, int n) {
    if (n < 1 || code.size() % n != 0)
        throw DimensionError("code length " + std::to_string(code.size()) +
                             " is not a multiple of n=" + std::to_string(n));
    const Eigen::Index count = code.size() / n;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(count);
    for (Eigen::Index q = 0; q < count; ++q) {
        double acc = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) acc += std::max(0.0, code[q * n + p]);
        z[q] = acc / n;
    }
    return z;
}

Eigen::VectorXd alignment_pool(std::span<const Eigen::VectorXd> vectors) {
    const auto count = static_cast<Eigen::Index>(vectors.size());
    Eigen::VectorXd pooled(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        if (vectors[k].size() != count)
            throw DimensionError("alignment_pool needs a square stack");
        pooled[k] = vectors[k][k];
    }
    return pooled;
}

OcclusionReport make_occlusion_report(Eigen::VectorXd errors, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("occlusion threshold eps must be >= 0");
    OcclusionReport rep;
    rep.errors = std::move(errors);
    rep.flags = (rep.errors.array() < eps).cast<double>();
    rep.fraction_clear = rep.flags.size() > 0 ? rep.flags.mean() : 0.0;
    return rep;
}

OcclusionReport occlusion_flags(const PatchMatrix& patches, const ScaleGroup& group,
                                std::span<const Eigen::VectorXd> codes, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("occlusion threshold eps must be >= 0");
    const int count = group.grid.count;
    const int n = group.n_templates;
    if (patches.cols() != count || static_cast<int>(codes.size()) != count)
        throw DimensionError("occlusion_flags: one patch and one code per location required");
    Eigen::VectorXd errors(count);
    for (int i = 0; i < count; ++i) {
        if (codes[i].size() != group.atom_count())
            throw DimensionError("occlusion_flags: code length does not match the dictionary");
        Eigen::VectorXd masked = Eigen::VectorXd::Zero(codes[i].size());
        masked.segment(static_cast<Eigen::Index>(i) * n, n) = codes[i].segment(static_cast<Eigen::Index>(i) * n, n);
        errors[i] = (patches.col(i) - group.dictionary * masked).squaredNorm();
    }
    return make_occlusion_report(std::move(errors), eps);
}

Eigen::VectorXd spatial_weights(const GridSpec& grid, const Eigen::VectorXd& flags, double beta) {
    if (flags.size() != grid.count) throw DimensionError("spatial_weights: flag count mismatch");
    const double ci = (1.0 + grid.w) / 2.0;
    const double cj = (1.0 + grid.u) / 2.0;
    Eigen::VectorXd w(grid.count);
    for (int k = 0; k < grid.count; ++k) {
        const auto c = grid.coords(k);
        w[k] = 1.0 + flags[k] * std::exp(-beta * (std::abs(c.i - ci) + std::abs(c.j - cj)));
    }
    return w;
}

double gamma_weight(const OcclusionReport& large, double eta) {
    if (large.errors.size() == 0) return 1.0;
    return (-eta * large.errors.array()).exp().mean();
}

double candidate_likelihood(const PooledFeatures& small, const PooledFeatures& large, double gamma) {
    const double l = large.weighted.size() ? large.weighted.mean() : 0.0;
    const double s = small.weighted.size() ? small.weighted.mean() : 0.0;
    return gamma * l + s;
}

bool dictionary_update_gate(const OcclusionReport& large, const OcclusionReport& small, double delta) {
    return small.fraction_clear + large.fraction_clear > 2.0 * delta;
}

bool buffer_update_gate(const OcclusionReport& report, double threshold) {
    return report.fraction_clear > threshold;
}

namespace {

struct LocationScore {
    double pooled = 0.0;
    double error = 0.0;
};

// Codes location i given the candidate's correlations in ws.corr_column.
LocationScore code_location(const ScaleGroup& group, int i, const Eigen::Ref<const Eigen::VectorXd>& patch,
                            const SolverConfig& solver, ScoringWorkspace& ws) {
    const ScoringCache& cache = group.cache;
    const int n = group.n_templates;
    const auto& past = cache.past_corr[i];
    const double energy = cache.past_energy[i] + patch.squaredNorm();
    ws.solver.solve(cache.gram, past, ws.corr_column, energy, solver, &cache.past_score[i]);

    const auto& support = ws.solver.support();
    const auto current = ws.solver.values().col(past.cols());
    double acc = 0.0;
    ws.residual = patch;
    for (std::size_t s = 0; s < support.size(); ++s) {
        const int atom = support[s];
        const double x = current[static_cast<Eigen::Index>(s)];
        if (atom / n == i) {
            acc += std::max(0.0, x);
            ws.residual -= x * group.dictionary.col(atom);
        }
    }
    return {acc / n, ws.residual.squaredNorm()};
}

}  // namespace

ScaleScore score_scale(const ScaleGroup& group, const GrayImage& crop, const SolverConfig& solver,
                       const GateConfig& gates, ScoringWorkspace& ws, bool detailed) {
    const GridSpec& grid = group.grid;
    const int count = grid.count;
    const int n = group.n_templates;
    const ScoringCache& cache = group.cache;

    ScaleScore out;
    out.patches = extract_patches(crop, grid);
    ws.patches = out.patches.cast<ScoringScalar>();
    ws.corr_current.noalias() = cache.dictionary_t * ws.patches;

    Eigen::VectorXd pooled(count);
    Eigen::VectorXd errors(count);
    if (detailed) {
        out.codes.assign(count, Eigen::VectorXd::Zero(group.atom_count()));
        out.features.raw.reserve(count);
    }

    for (int i = 0; i < count; ++i) {
        ws.corr_column = ws.corr_current.col(i);
        const LocationScore loc = code_location(group, i, out.patches.col(i), solver, ws);
        pooled[i] = loc.pooled;
        errors[i] = loc.error;

        if (detailed) {
            const auto& support = ws.solver.support();
            const auto current = ws.solver.values().col(ws.solver.values().cols() - 1);
            for (std::size_t s = 0; s < support.size(); ++s)
                out.codes[i][support[s]] = current[static_cast<Eigen::Index>(s)];
            out.features.raw.push_back(accumulate_fragments(out.codes[i], n));
        }
    }

    out.report = make_occlusion_report(std::move(errors), gates.eps);
    out.features.pooled = std::move(pooled);
    const Eigen::VectorXd weights = spatial_weights(grid, out.report.flags, gates.beta);
    out.features.weighted = weights.cwiseProduct(out.features.pooled);
    return out;
}

CandidateEvaluation evaluate_candidate(const ScaleGroup& small, const ScaleGroup& large,
                                       const GrayImage& crop, const SolverConfig& solver,
                                       const GateConfig& gates, ScoringWorkspace& ws,
                                       bool detailed) {
    CandidateEvaluation ev;
    ev.large = score_scale(large, crop, solver, gates, ws, detailed);
    ev.small = score_scale(small, crop, solver, gates, ws, detailed);
    ev.gamma = gamma_weight(ev.large.report, gates.eta);
    ev.likelihood = candidate_likelihood(ev.small.features, ev.large.features, ev.gamma);
    return ev;
}

void score_scale_batch(const ScaleGroup& group, std::span<const PatchMatrix> patches,
                       const SolverConfig& solver, ScoringWorkspace& ws, BatchScaleScores& out) {
    // Location-major order keeps each location's cached correlations and the
    // Gram columns of its atoms resident while all candidates are coded.
    const int count = group.grid.count;
    const auto total = static_cast<Eigen::Index>(patches.size());
    const Eigen::Index dim = group.grid.dim;
    for (const auto& p : patches)
        if (p.rows() != dim || p.cols() != count) throw DimensionError("score_scale_batch: patch matrix does not match the grid");
    out.pooled.resize(count, total);
    out.errors.resize(count, total);
    for (int i = 0; i < count; ++i) {
        for (Eigen::Index b0 = 0; b0 < total; b0 += kScoringBatch) {
            const Eigen::Index m = std::min(kScoringBatch, total - b0);
            ws.patches.resize(dim, m);
            for (Eigen::Index j = 0; j < m; ++j)
                ws.patches.col(j) = patches[static_cast<std::size_t>(b0 + j)].col(i).cast<ScoringScalar>();
            ws.corr_current.noalias() = group.cache.dictionary_t * ws.patches;
            for (Eigen::Index j = 0; j < m; ++j) {
                ws.corr_column = ws.corr_current.col(j);
                const LocationScore loc =
                    code_location(group, i, patches[static_cast<std::size_t>(b0 + j)].col(i), solver, ws);
                out.pooled(i, b0 + j) = loc.pooled;
                out.errors(i, b0 + j) = loc.error;
            }
        }
    }
}

std::vector<double> evaluate_candidates(const ScaleGroup& small, const ScaleGroup& large,
                                        std::span<const GrayImage> crops, const SolverConfig& solver,
                                        const GateConfig& gates, ScoringWorkspace& ws) {
    std::vector<PatchMatrix> small_patches, large_patches;
    small_patches.reserve(crops.size());
    large_patches.reserve(crops.size());
    for (const auto& crop : crops) {
        small_patches.push_back(extract_patches(crop, small.grid));
        large_patches.push_back(extract_patches(crop, large.grid));
    }
    BatchScaleScores s, l;
    score_scale_batch(large, large_patches, solver, ws, l);
    score_scale_batch(small, small_patches, solver, ws, s);

    std::vector<double> out(crops.size());
    for (std::size_t k = 0; k < crops.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        const OcclusionReport lr = make_occlusion_report(l.errors.col(c), gates.eps);
        const OcclusionReport sr = make_occlusion_report(s.errors.col(c), gates.eps);
        PooledFeatures lf, sf;
        lf.pooled = l.pooled.col(c);
        lf.weighted = spatial_weights(large.grid, lr.flags, gates.beta).cwiseProduct(lf.pooled);
        sf.pooled = s.pooled.col(c);
        sf.weighted = spatial_weights(small.grid, sr.flags, gates.beta).cwiseProduct(sf.pooled);
        out[k] = candidate_likelihood(sf, lf, gamma_weight(lr, gates.eta));
    }
    return out;
}

}  // namespace patchtrack
