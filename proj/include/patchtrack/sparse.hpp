#pragma once

#include <vector>

#include <Eigen/Dense>

namespace patchtrack {

struct SolverConfig {
    int max_atoms = 4;          // row-sparsity budget
    double residual_tol = 1e-9; // early stop on the Frobenius residual

    void validate() const;
};

struct SompResult {
    Eigen::MatrixXd coefficients;       // n_atoms x n_signals, zero rows off the support
    std::vector<int> support;           // atoms in selection order
    std::vector<double> residual_trace; // Frobenius residual: [0] = ||R||_F, then after each selection

    double residual() const { return residual_trace.back(); }
};

/// Simultaneous orthogonal matching pursuit.
///
/// Greedily picks the atom whose correlations with the current residual matrix
/// have the largest ℓ2 norm across signal columns, refits every signal on the
/// support by least squares, and stops after max_atoms atoms or once the
/// Frobenius residual drops to residual_tol. Ties go to the lowest atom index.
SompResult somp_solve(const Eigen::MatrixXd& dict, const Eigen::MatrixXd& signals,
                      const SolverConfig& cfg);

/// Coefficients of the current-frame signal, i.e. the last buffer column.
Eigen::VectorXd select_current(const Eigen::MatrixXd& coeffs);

namespace detail {

/// Least-squares coefficients on a support from its Gram block and the
/// support rows of D^T R. Adds a 1e-10 diagonal jitter if the block is singular.
Eigen::MatrixXd solve_on_support(const Eigen::MatrixXd& gram_ss, const Eigen::MatrixXd& corr_s);

}  // namespace detail

/// SOMP driven by a precomputed Gram matrix G = D^T D and initial correlations
/// C0 = D^T R, so repeated solves against one dictionary never touch the raw
/// atoms. Makes the same selections as somp_solve. Correlations are updated
/// with one orthogonalized rank-1 step per selected atom, and the coefficients
/// are the least-squares fit on the support.
///
/// Holds its workspace, so reuse one instance per thread.
template <typename Scalar>
class GramSomp {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    void solve(const Matrix& gram, const Matrix& corr0, double signal_energy,
               const SolverConfig& cfg);
    /// Same as solve() with C0 = [past, current], without materializing C0.
    /// `past_score`, if given, must equal the row-wise squared norms of `past`.
    void solve(const Matrix& gram, const Matrix& past, const Vector& current, double signal_energy,
               const SolverConfig& cfg, const Vector* past_score = nullptr);

    const std::vector<int>& support() const { return support_; }
    /// |support| x n_signals, rows in selection order.
    const Eigen::MatrixXd& values() const { return values_; }
    double residual_sq() const { return residual_sq_; }

private:
    void run(const Matrix& gram, double signal_energy, const SolverConfig& cfg);
    void fit(const Matrix& gram, double signal_energy);
    // Initial correlation entry for atom a and signal l.
    Scalar initial(Eigen::Index a, Eigen::Index l) const {
        return l < past_->cols() ? (*past_)(a, l) : (*current_)[a];
    }

    const Matrix* past_ = nullptr;
    const Vector* current_ = nullptr;
    Eigen::Index n_sig_ = 0;

    std::vector<int> support_;
    Eigen::MatrixXd values_;
    double residual_sq_ = 0.0;
    Matrix corr_;
    Vector score_;
    Vector update_;
    Eigen::MatrixXd chol_;
    Eigen::MatrixXd proj_;
    Eigen::VectorXd w_;
    Eigen::VectorXd z_;
};

extern template class GramSomp<float>;
extern template class GramSomp<double>;

}  // namespace patchtrack
