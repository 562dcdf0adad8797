#include "mfheat/baseline.hpp"

#include "mfheat/elements.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfheat {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            sum += val[p] * x[col[p]];
        }
        y[r] = sum;
    }
}

void CsrMatrix::multiply_add(std::span<const double> x, double c, std::span<const double> b,
                             std::span<double> y) const
{
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            sum += val[p] * x[col[p]];
        }
        y[r] = c * sum + b[r];
    }
}

double CsrMatrix::at(std::size_t r, std::size_t c) const
{
    const auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    return (it != last && *it == c) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const
{
    std::vector<double> d(n);
    for (std::size_t r = 0; r < n; ++r) {
        d[r] = at(r, r);
    }
    return d;
}

namespace {

// Scaled element matrix from the general element routine.
Mat4 scaled_element(const GridSpec& spec, const MaterialEvaluator& materials, double stiffness_scale,
                    std::size_t e, std::array<std::size_t, 4>& verts)
{
    verts = element_vertices(spec, e);
    const auto pos = element_positions(spec, e);
    const auto local = local_matrices(pos);
    const auto coef = materials.element(pos);
    Mat4 out{};
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            out[r][c] = coef.rhoC * local.mass[r][c] + stiffness_scale * coef.k * local.stiffness[r][c];
        }
    }
    return out;
}

}  // namespace

CsrMatrix assemble_csr(const GridSpec& spec, const MaterialEvaluator& materials, const OperatorParams& params)
{
    const std::size_t n = spec.vertex_count();
    std::vector<std::vector<std::size_t>> pattern(n);
    for (std::size_t e = 0; e < spec.element_count(); ++e) {
        const auto verts = element_vertices(spec, e);
        for (auto r : verts) {
            for (auto c : verts) {
                pattern[r].push_back(c);
            }
        }
    }
    CsrMatrix a;
    a.n = n;
    a.row_ptr.assign(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        auto& cols = pattern[r];
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        a.row_ptr[r + 1] = a.row_ptr[r] + cols.size();
    }
    a.col.reserve(a.row_ptr[n]);
    for (auto& cols : pattern) {
        a.col.insert(a.col.end(), cols.begin(), cols.end());
        std::vector<std::size_t>().swap(cols);
    }
    a.val.assign(a.col.size(), 0.0);

    const double sk = params.stiffness_scale();
    std::array<std::size_t, 4> verts{};
    for (std::size_t e = 0; e < spec.element_count(); ++e) {
        const Mat4 m = scaled_element(spec, materials, sk, e, verts);
        for (std::size_t r = 0; r < 4; ++r) {
            const auto first = a.col.begin() + static_cast<std::ptrdiff_t>(a.row_ptr[verts[r]]);
            const auto last = a.col.begin() + static_cast<std::ptrdiff_t>(a.row_ptr[verts[r] + 1]);
            for (std::size_t c = 0; c < 4; ++c) {
                const auto it = std::lower_bound(first, last, verts[c]);
                a.val[static_cast<std::size_t>(it - a.col.begin())] += m[r][c];
            }
        }
    }
    return a;
}

CsrMatrix assemble_csr(const SystemOperator<double>& op)
{
    return assemble_csr(op.spec(), op.evaluator(), op.params());
}

void DenseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            sum += a[r * n + c] * x[c];
        }
        y[r] = sum;
    }
}

DenseMatrix assemble_dense(const GridSpec& spec, const MaterialEvaluator& materials, const OperatorParams& params)
{
    const std::size_t n = spec.vertex_count();
    if (n > kDenseLimit) {
        throw std::invalid_argument("dense oracle limited to " + std::to_string(kDenseLimit) + " unknowns");
    }
    DenseMatrix d{n, std::vector<double>(n * n, 0.0)};
    std::array<std::size_t, 4> verts{};
    for (std::size_t e = 0; e < spec.element_count(); ++e) {
        const Mat4 m = scaled_element(spec, materials, params.stiffness_scale(), e, verts);
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                d(verts[r], verts[c]) += m[r][c];
            }
        }
    }
    return d;
}

DenseMatrix to_dense(const CsrMatrix& a)
{
    DenseMatrix d{a.n, std::vector<double>(a.n * a.n, 0.0)};
    for (std::size_t r = 0; r < a.n; ++r) {
        for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
            d(r, a.col[p]) = a.val[p];
        }
    }
    return d;
}

std::vector<double> dense_cholesky_solve(const DenseMatrix& a, std::span<const double> b)
{
    const std::size_t n = a.n;
    DenseMatrix l{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            diag -= l(j, k) * l(j, k);
        }
        if (!(diag > 0.0)) {
            throw std::domain_error("dense Cholesky: matrix is not positive definite");
        }
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= l(i, k) * l(j, k);
            }
            l(i, j) = s / l(j, j);
        }
    }
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            y[i] -= l(i, k) * y[k];
        }
        y[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) {
            y[i] -= l(k, i) * y[k];
        }
        y[i] /= l(i, i);
    }
    return y;
}

void IncompleteCholesky::solve(std::span<const double> r, std::span<double> z) const
{
    std::vector<double> y(r.begin(), r.end());
    for (std::size_t j = 0; j < n; ++j) {
        y[j] /= val[col_ptr[j]];
        const double yj = y[j];
        for (std::size_t p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) {
            y[row[p]] -= val[p] * yj;
        }
    }
    for (std::size_t j = n; j-- > 0;) {
        double s = y[j];
        for (std::size_t p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) {
            s -= val[p] * z[row[p]];
        }
        z[j] = s / val[col_ptr[j]];
    }
}

double IncompleteCholesky::residual_norm(const CsrMatrix& a) const
{
    // Row-wise access to L: rows of L are the columns of L^T.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
            rows[row[p]].emplace_back(j, val[p]);
        }
    }
    // (L L^T)_{ij} = sum_k L_ik L_jk; row lists are sorted by k.
    auto product = [&rows](std::size_t i, std::size_t j) {
        const auto& ri = rows[i];
        const auto& rj = rows[j];
        double s = 0.0;
        std::size_t p = 0;
        std::size_t q = 0;
        while (p < ri.size() && q < rj.size()) {
            if (ri[p].first == rj[q].first) {
                s += ri[p].second * rj[q].second;
                ++p;
                ++q;
            }
            else if (ri[p].first < rj[q].first) {
                ++p;
            }
            else {
                ++q;
            }
        }
        return s;
    };
    // Entries of L L^T outside the pattern of A are only possible between
    // rows sharing a column of L; collect them via the column lists.
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> cols;
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            cols.push_back(a.col[p]);
        }
        for (const auto& [k, v] : rows[i]) {
            (void)v;
            for (std::size_t p = col_ptr[k]; p < col_ptr[k + 1]; ++p) {
                cols.push_back(row[p]);
            }
        }
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        for (auto j : cols) {
            const double diff = a.at(i, j) - product(i, j);
            sum += diff * diff;
        }
    }
    return std::sqrt(sum);
}

namespace {

// One factorization attempt with a fixed diagonal shift. Returns false on a
// non-positive pivot.
bool try_icholt(const CsrMatrix& a, double droptol, double shift, IncompleteCholesky& out)
{
    const std::size_t n = a.n;
    std::vector<std::vector<std::size_t>> lrow(n);       // row indices per column of L
    std::vector<std::vector<double>> lval(n);
    std::vector<std::size_t> next(n, 0);                 // cursor into column k
    std::vector<std::vector<std::size_t>> pending(n);    // columns whose cursor row is j
    std::vector<double> w(n, 0.0);
    std::vector<char> mark(n, 0);
    std::vector<std::size_t> nz;

    for (std::size_t j = 0; j < n; ++j) {
        nz.clear();
        double col_norm = 0.0;
        for (std::size_t p = a.row_ptr[j]; p < a.row_ptr[j + 1]; ++p) {
            const std::size_t i = a.col[p];
            if (i < j) {
                continue;
            }
            w[i] = a.val[p] + (i == j ? shift : 0.0);
            col_norm += std::abs(a.val[p]);
            mark[i] = 1;
            nz.push_back(i);
        }
        if (!mark[j]) {
            w[j] = shift;
            mark[j] = 1;
            nz.push_back(j);
        }
        // w(j:n) -= L(j:n, k) L(j, k) for every column k with L(j,k) != 0.
        auto ks = std::move(pending[j]);
        pending[j].clear();
        for (const std::size_t k : ks) {
            const auto& rows = lrow[k];
            const auto& vals = lval[k];
            const std::size_t start = next[k];
            const double ljk = vals[start];
            for (std::size_t p = start; p < rows.size(); ++p) {
                const std::size_t i = rows[p];
                if (!mark[i]) {
                    mark[i] = 1;
                    w[i] = 0.0;
                    nz.push_back(i);
                }
                w[i] -= vals[p] * ljk;
            }
            next[k] = start + 1;
            if (next[k] < rows.size()) {
                pending[rows[next[k]]].push_back(k);
            }
        }
        const double pivot = w[j];
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            return false;
        }
        const double ljj = std::sqrt(pivot);
        std::sort(nz.begin(), nz.end());
        auto& rows = lrow[j];
        auto& vals = lval[j];
        rows.push_back(j);
        vals.push_back(ljj);
        const double drop = droptol * col_norm;
        for (const std::size_t i : nz) {
            if (i != j) {
                // Threshold on the unscaled entry, so the rule does not depend
                // on the magnitude of A.
                const double lij = w[i] / ljj;
                if (std::abs(w[i]) >= drop && lij != 0.0) {
                    rows.push_back(i);
                    vals.push_back(lij);
                }
            }
            w[i] = 0.0;
            mark[i] = 0;
        }
        next[j] = 1;
        if (rows.size() > 1) {
            pending[rows[1]].push_back(j);
        }
    }

    out.n = n;
    out.col_ptr.assign(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
        out.col_ptr[j + 1] = out.col_ptr[j] + lrow[j].size();
    }
    out.row.clear();
    out.val.clear();
    out.row.reserve(out.col_ptr[n]);
    out.val.reserve(out.col_ptr[n]);
    for (std::size_t j = 0; j < n; ++j) {
        out.row.insert(out.row.end(), lrow[j].begin(), lrow[j].end());
        out.val.insert(out.val.end(), lval[j].begin(), lval[j].end());
    }
    out.shift = shift;
    return true;
}

}  // namespace

IncompleteCholesky icholt(const CsrMatrix& a, double droptol)
{
    if (droptol < 0.0) {
        throw std::invalid_argument("drop tolerance must be non-negative");
    }
    IncompleteCholesky factor;
    if (try_icholt(a, droptol, 0.0, factor)) {
        return factor;
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) {
        trace += a.at(i, i);
    }
    double shift = 1e-12 * std::abs(trace) / static_cast<double>(std::max<std::size_t>(a.n, 1));
    for (std::size_t retry = 1; retry <= 5; ++retry) {
        if (try_icholt(a, droptol, shift, factor)) {
            factor.retries = retry;
            return factor;
        }
        shift *= 2.0;
    }
    throw IcholBreakdownError("incomplete Cholesky broke down after 5 diagonal-shift retries");
}

SparsePreconditioner SparsePreconditioner::jacobi(std::vector<double> diagonal)
{
    SparsePreconditioner p;
    p.diagonal_ = std::move(diagonal);
    return p;
}

SparsePreconditioner SparsePreconditioner::incomplete_cholesky(IncompleteCholesky factor)
{
    SparsePreconditioner p;
    p.factor_ = std::move(factor);
    p.use_factor_ = true;
    return p;
}

void SparsePreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
    if (use_factor_) {
        factor_.solve(r, z);
        return;
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        z[i] = r[i] / diagonal_[i];
    }
}

namespace {

double serial_dot(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

}  // namespace

PcgResult pcg_sparse(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                     const SparsePreconditioner& precond, const PcgConfig& cfg, const PcgMonitor<double>* monitor)
{
    cfg.validate();
    const std::size_t n = a.n;
    if (b.size() != n || x.size() != n) {
        throw std::invalid_argument("pcg_sparse: vector length mismatch");
    }
    const std::size_t i_max = cfg.max_iterations(n);
    std::vector<double> r(n), d(n), q(n), s(n);

    precond.apply(b, s);
    const double delta_b = serial_dot(b, s);
    a.multiply_add(x, -1.0, b, r);
    precond.apply(r, d);
    double delta_new = serial_dot(r, d);
    const double delta0 = delta_new;
    const double threshold = cfg.threshold(delta0, delta_b);

    std::size_t i = 0;
    while (i < i_max && delta_new > threshold) {
        a.multiply(d, q);
        const double dq = serial_dot(d, q);
        if (!(dq > 0.0)) {
            throw BreakdownError("sparse PCG breakdown: d^T A d = " + std::to_string(dq) + " is not positive");
        }
        const double alpha = delta_new / dq;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * d[k];
        }
        if (i % cfg.recompute_period == 0) {
            a.multiply_add(x, -1.0, b, r);
        }
        else {
            for (std::size_t k = 0; k < n; ++k) {
                r[k] -= alpha * q[k];
            }
        }
        precond.apply(r, s);
        const double delta_old = delta_new;
        delta_new = serial_dot(r, s);
        if (!std::isfinite(delta_new)) {
            throw BreakdownError("sparse PCG breakdown: non-finite residual");
        }
        const double beta = delta_new / delta_old;
        for (std::size_t k = 0; k < n; ++k) {
            d[k] = s[k] + beta * d[k];
        }
        ++i;
        if (monitor && monitor->on_iteration) {
            monitor->on_iteration(i, x, r, d, delta_new);
        }
    }
    if (delta_new > threshold) {
        throw NonConvergenceError(i, delta_new);
    }
    return {i, delta_new, delta0};
}

}  // namespace mfheat
