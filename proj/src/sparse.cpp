#include "patchtrack/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

void SolverConfig::validate() const {
    if (max_atoms < 1) throw ConfigError("max_atoms must be >= 1");
    if (!(residual_tol >= 0.0)) throw ConfigError("residual_tol must be >= 0");
}

namespace detail {

Eigen::MatrixXd solve_on_support(const Eigen::MatrixXd& gram_ss, const Eigen::MatrixXd& corr_s) {
    constexpr double kJitter = 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(gram_ss);
    bool singular = llt.info() != Eigen::Success;
    if (!singular) {
        const auto d = llt.matrixL().toDenseMatrix().diagonal();
        singular = d.minCoeff() <= 1e-7 * std::max(1.0, d.maxCoeff());
    }
    if (!singular) return llt.solve(corr_s);

    Eigen::MatrixXd jittered = gram_ss;
    jittered.diagonal().array() += kJitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jittered);
    return ldlt.solve(corr_s);
}

}  // namespace detail

namespace {

// Best not-yet-selected atom by score; -1 if none has a positive score.
template <typename Vec>
int pick_atom(const Vec& score, const std::vector<char>& taken) {
    int best = -1;
    auto best_score = typename Vec::Scalar(0);
    for (Eigen::Index a = 0; a < score.size(); ++a) {
        if (taken[a]) continue;
        if (score[a] > best_score) {
            best_score = score[a];
            best = static_cast<int>(a);
        }
    }
    return best;
}

}  // namespace

SompResult somp_solve(const Eigen::MatrixXd& dict, const Eigen::MatrixXd& signals,
                      const SolverConfig& cfg) {
    cfg.validate();
    if (dict.rows() != signals.rows())
        throw DimensionError("dictionary dim " + std::to_string(dict.rows()) +
                             " != signal dim " + std::to_string(signals.rows()));
    if (signals.cols() < 1) throw DimensionError("somp_solve needs at least one signal");

    const Eigen::Index n_atoms = dict.cols();
    SompResult res;
    res.coefficients = Eigen::MatrixXd::Zero(n_atoms, signals.cols());

    Eigen::MatrixXd residual = signals;
    res.residual_trace.push_back(residual.norm());
    if (res.residual_trace.back() <= cfg.residual_tol) return res;

    std::vector<char> taken(static_cast<std::size_t>(n_atoms), 0);
    Eigen::MatrixXd x;
    const int budget = static_cast<int>(std::min<Eigen::Index>(cfg.max_atoms, n_atoms));
    while (static_cast<int>(res.support.size()) < budget) {
        const Eigen::MatrixXd corr = dict.transpose() * residual;
        const Eigen::VectorXd score = corr.rowwise().squaredNorm();
        const int atom = pick_atom(score, taken);
        if (atom < 0) break;
        taken[atom] = 1;
        res.support.push_back(atom);

        const auto k = static_cast<Eigen::Index>(res.support.size());
        Eigen::MatrixXd sub(dict.rows(), k);
        for (Eigen::Index s = 0; s < k; ++s) sub.col(s) = dict.col(res.support[s]);
        x = detail::solve_on_support(sub.transpose() * sub, sub.transpose() * signals);
        residual = signals - sub * x;
        res.residual_trace.push_back(residual.norm());
        if (res.residual_trace.back() <= cfg.residual_tol) break;
    }
    for (std::size_t s = 0; s < res.support.size(); ++s)
        res.coefficients.row(res.support[s]) = x.row(static_cast<Eigen::Index>(s));
    return res;
}

Eigen::VectorXd select_current(const Eigen::MatrixXd& coeffs) {
    if (coeffs.cols() < 1 || coeffs.rows() < 1)
        throw DimensionError("select_current on an empty coefficient matrix");
    return coeffs.col(coeffs.cols() - 1);
}

namespace {

// First index holding the maximum of v; -1 unless that maximum is positive.
// Block maxima first, so only one short block is scanned element by element.
template <typename Vec>
Eigen::Index first_argmax(const Vec& v) {
    constexpr Eigen::Index kBlock = 64;
    const Eigen::Index n = v.size();
    if (n == 0) return -1;
    typename Vec::Scalar top = v[0];
    Eigen::Index top_block = 0;
    for (Eigen::Index b = 0; b < n; b += kBlock) {
        const auto m = v.segment(b, std::min(kBlock, n - b)).maxCoeff();
        if (m > top) {
            top = m;
            top_block = b;
        }
    }
    if (!(top > 0)) return -1;
    Eigen::Index i = top_block;
    while (v[i] != top) ++i;
    return i;
}

}  // namespace

template <typename Scalar>
void GramSomp<Scalar>::solve(const Matrix& gram, const Matrix& corr0, double signal_energy,
                             const SolverConfig& cfg) {
    if (gram.cols() != gram.rows() || corr0.rows() != gram.rows())
        throw DimensionError("GramSomp: gram/correlation shape mismatch");
    past_ = &corr0;
    current_ = nullptr;
    n_sig_ = corr0.cols();
    score_ = corr0.rowwise().squaredNorm();
    run(gram, signal_energy, cfg);
}

template <typename Scalar>
void GramSomp<Scalar>::solve(const Matrix& gram, const Matrix& past, const Vector& current,
                             double signal_energy, const SolverConfig& cfg, const Vector* past_score) {
    if (gram.cols() != gram.rows() || past.rows() != gram.rows() || current.size() != gram.rows() ||
        (past_score && past_score->size() != gram.rows()))
        throw DimensionError("GramSomp: gram/correlation shape mismatch");
    past_ = &past;
    current_ = &current;
    n_sig_ = past.cols() + 1;
    if (past_score)
        score_ = *past_score + current.cwiseAbs2();
    else
        score_ = past.rowwise().squaredNorm() + current.cwiseAbs2();
    run(gram, signal_energy, cfg);
}

template <typename Scalar>
void GramSomp<Scalar>::run(const Matrix& gram, double signal_energy, const SolverConfig& cfg) {
    const Eigen::Index n_atoms = gram.rows();
    const Eigen::Index n_sig = n_sig_;
    support_.clear();
    values_.resize(0, n_sig);
    residual_sq_ = signal_energy;
    const double tol_sq = cfg.residual_tol * cfg.residual_tol;
    if (residual_sq_ <= tol_sq) return;

    const int budget = static_cast<int>(std::min<Eigen::Index>(cfg.max_atoms, n_atoms));
    chol_.setZero(budget, budget);
    proj_.resize(budget, n_sig);
    w_.resize(budget);
    z_.resize(budget);
    // corr_ holds the residual correlations once the first update has been
    // applied; before that they are read straight from the initial blocks.
    bool materialized = false;
    bool orthogonal = true;
    double remaining = signal_energy;

    while (static_cast<int>(support_.size()) < budget) {
        for (int s : support_) score_[s] = Scalar(-1);
        const Eigen::Index best = first_argmax(score_);
        if (best < 0) break;
        const int atom = static_cast<int>(best);
        support_.push_back(atom);
        const auto k = static_cast<Eigen::Index>(support_.size());

        if (orthogonal) {
            // Extend the Cholesky factor of the support Gram matrix by one row.
            for (Eigen::Index r = 0; r + 1 < k; ++r) {
                double acc = static_cast<double>(gram(support_[r], atom));
                for (Eigen::Index c = 0; c < r; ++c) acc -= chol_(r, c) * w_[c];
                w_[r] = acc / chol_(r, r);
            }
            const double gjj = static_cast<double>(gram(atom, atom));
            const double d2 = gjj - w_.head(k - 1).squaredNorm();
            if (d2 <= 1e-14 * std::max(1.0, gjj)) {
                orthogonal = false;
            } else {
                const double d = std::sqrt(d2);
                chol_.row(k - 1).head(k - 1) = w_.head(k - 1).transpose();
                chol_(k - 1, k - 1) = d;
                for (Eigen::Index l = 0; l < n_sig; ++l)
                    proj_(k - 1, l) = static_cast<double>(materialized ? corr_(atom, l) : initial(atom, l)) / d;
                remaining -= proj_.row(k - 1).squaredNorm();
                if (remaining <= tol_sq || k == budget) break;

                // D^T q for the new orthonormal direction q.
                for (Eigen::Index r = k - 2; r >= 0; --r) {
                    double acc = w_[r];
                    for (Eigen::Index c = r + 1; c + 1 < k; ++c) acc -= chol_(c, r) * z_[c];
                    z_[r] = acc / chol_(r, r);
                }
                update_ = gram.col(atom);
                for (Eigen::Index s = 0; s + 1 < k; ++s)
                    update_ -= static_cast<Scalar>(z_[s]) * gram.col(support_[s]);
                update_ *= static_cast<Scalar>(1.0 / d);

                // Rank-1 correlation update fused with the next selection scores.
                if (!materialized) corr_.resize(n_atoms, n_sig);
                for (Eigen::Index l = 0; l < n_sig; ++l) {
                    const auto p = static_cast<Scalar>(proj_(k - 1, l));
                    auto col = corr_.col(l).array();
                    if (materialized)
                        col -= p * update_.array();
                    else if (l < past_->cols())
                        col = past_->col(l).array() - p * update_.array();
                    else
                        col = current_->array() - p * update_.array();
                    if (l == 0)
                        score_ = col.square();
                    else
                        score_.array() += col.square();
                }
                materialized = true;
                continue;
            }
        }

        // Linearly dependent support: refit and recompute correlations directly.
        fit(gram, signal_energy);
        remaining = residual_sq_;
        if (remaining <= tol_sq || k == budget) return;
        corr_.resize(n_atoms, n_sig);
        for (Eigen::Index l = 0; l < n_sig; ++l)
            for (Eigen::Index a = 0; a < n_atoms; ++a) corr_(a, l) = initial(a, l);
        for (Eigen::Index s = 0; s < k; ++s)
            corr_.noalias() -= gram.col(support_[s]) * values_.row(s).template cast<Scalar>();
        score_ = corr_.rowwise().squaredNorm();
        materialized = true;
    }

    if (!orthogonal) {
        fit(gram, signal_energy);
        return;
    }
    // Least squares on the support: G_SS X = C0_S with G_SS = L L^T gives X = L^-T P.
    const auto k = static_cast<Eigen::Index>(support_.size());
    values_ = chol_.topLeftCorner(k, k).transpose().template triangularView<Eigen::Upper>().solve(
        proj_.topRows(k));
    residual_sq_ = std::max(0.0, signal_energy - proj_.topRows(k).squaredNorm());
}

template <typename Scalar>
void GramSomp<Scalar>::fit(const Matrix& gram, double signal_energy) {
    const auto k = static_cast<Eigen::Index>(support_.size());
    if (k == 0) {
        values_.resize(0, n_sig_);
        residual_sq_ = signal_energy;
        return;
    }
    Eigen::MatrixXd gram_ss(k, k);
    Eigen::MatrixXd corr_s(k, n_sig_);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) gram_ss(r, c) = static_cast<double>(gram(support_[r], support_[c]));
        for (Eigen::Index l = 0; l < n_sig_; ++l) corr_s(r, l) = static_cast<double>(initial(support_[r], l));
    }
    values_ = detail::solve_on_support(gram_ss, corr_s);
    residual_sq_ = std::max(0.0, signal_energy - (values_.array() * corr_s.array()).sum());
}

template class GramSomp<float>;
template class GramSomp<double>;

}  // namespace patchtrack
