#pragma once

#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"
#include "mfheat/operator.hpp"
#include "mfheat/solver.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfheat {

/// Compressed sparse row matrix with sorted, unique column indices per row.
struct CsrMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> val;

    [[nodiscard]] std::size_t nnz() const noexcept { return val.size(); }
    void multiply(std::span<const double> x, std::span<double> y) const;
    /// y = c A x + b
    void multiply_add(std::span<const double> x, double c, std::span<const double> b, std::span<double> y) const;
    [[nodiscard]] double at(std::size_t r, std::size_t c) const;
    [[nodiscard]] std::vector<double> diagonal() const;

    // Operator interface shared with the matrix-free path.
    void apply(std::span<const double> x, std::span<double> y) const { multiply(x, y); }
    void apply_fused(std::span<const double> x, double c, std::span<const double> b, std::span<double> y) const
    {
        multiply_add(x, c, b, y);
    }
};

/// Element-loop scatter-add of the scaled element matrices (general
/// per-element routine, not the fixed-grid store).
[[nodiscard]] CsrMatrix assemble_csr(const GridSpec& spec, const MaterialEvaluator& materials,
                                     const OperatorParams& params);
[[nodiscard]] CsrMatrix assemble_csr(const SystemOperator<double>& op);

/// Row-major dense matrix; oracle for small systems only.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }
    void multiply(std::span<const double> x, std::span<double> y) const;
};

inline constexpr std::size_t kDenseLimit = 1000;

[[nodiscard]] DenseMatrix assemble_dense(const GridSpec& spec, const MaterialEvaluator& materials,
                                         const OperatorParams& params);
[[nodiscard]] DenseMatrix to_dense(const CsrMatrix& a);
/// Solves A x = b by dense Cholesky; throws on a non-positive pivot.
[[nodiscard]] std::vector<double> dense_cholesky_solve(const DenseMatrix& a, std::span<const double> b);

class IcholBreakdownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lower-triangular factor L with A ~ L L^T, stored by columns.
struct IncompleteCholesky {
    std::size_t n = 0;
    std::vector<std::size_t> col_ptr;
    std::vector<std::size_t> row;  // row[col_ptr[j]] == j (diagonal first)
    std::vector<double> val;
    double shift = 0.0;            // diagonal shift that was needed
    std::size_t retries = 0;

    [[nodiscard]] std::size_t nnz() const noexcept { return val.size(); }
    /// z = (L L^T)^{-1} r
    void solve(std::span<const double> r, std::span<double> z) const;
    /// ||A - L L^T||_F over the union of both patterns.
    [[nodiscard]] double residual_norm(const CsrMatrix& a) const;
};

/// Threshold incomplete Cholesky: column-wise left-looking factorization that
/// drops off-diagonal entries with |L_ij L_jj| < droptol * ||A(j:n, j)||_1. A
/// non-positive pivot restarts with a diagonal shift starting at
/// 1e-12 trace(A)/n, doubled on each retry; five failed retries raise.
[[nodiscard]] IncompleteCholesky icholt(const CsrMatrix& a, double droptol);

/// Preconditioner for the serial PCG: Jacobi diagonal or an IC factor.
class SparsePreconditioner {
public:
    static SparsePreconditioner jacobi(std::vector<double> diagonal);
    static SparsePreconditioner incomplete_cholesky(IncompleteCholesky factor);

    void apply(std::span<const double> r, std::span<double> z) const;

private:
    std::vector<double> diagonal_;
    IncompleteCholesky factor_;
    bool use_factor_ = false;
};

/// Serial PCG with explicit SpMV and the same iteration structure as pcg()
/// (periodic residual recompute, relative stopping rule). Sequential sums.
PcgResult pcg_sparse(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                     const SparsePreconditioner& precond, const PcgConfig& cfg,
                     const PcgMonitor<double>* monitor = nullptr);

}  // namespace mfheat
