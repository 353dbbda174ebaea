#pragma once

// Row-compressed M-matrix systems coupling the implicitly updated nodes of the
// uniform stopping-time scheme, and their Gauss-Seidel solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fkwide/errors.hpp"

namespace fkwide {

struct SparseSystem {
    // CSR storage; the diagonal is stored like any other entry.
    std::vector<std::size_t> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> rhs;
    // Grid node (flat field index) behind each row.
    std::vector<std::size_t> node_of_row;

    std::size_t size() const noexcept { return rhs.size(); }

    /// Appends a row. Duplicate columns are merged.
    void add_row(std::size_t node, const std::vector<std::pair<int, double>>& entries, double b) {
        const std::size_t start = col.size();
        for (const auto& [c, v] : entries) {
            bool merged = false;
            for (std::size_t k = start; k < col.size(); ++k) {
                if (col[k] == c) {
                    val[k] += v;
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                col.push_back(c);
                val.push_back(v);
            }
        }
        row_ptr.push_back(col.size());
        rhs.push_back(b);
        node_of_row.push_back(node);
    }

    double diagonal(std::size_t row) const noexcept {
        for (std::size_t k = row_ptr[row]; k < row_ptr[row + 1]; ++k) {
            if (static_cast<std::size_t>(col[k]) == row) return val[k];
        }
        return 0.0;
    }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(size(), 0.0);
        for (std::size_t r = 0; r < size(); ++r) {
            double acc = 0.0;
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[static_cast<std::size_t>(col[k])];
            y[r] = acc;
        }
        return y;
    }
};

struct MMatrixCheck {
    bool ok = true;
    /// max over rows of sum|offdiag| / diag.
    double worst_offdiag_ratio = 0.0;
    std::string failure;
};

/// Positive diagonal, nonpositive off-diagonals, strict row diagonal dominance.
inline MMatrixCheck check_m_matrix(const SparseSystem& s) {
    MMatrixCheck res;
    for (std::size_t r = 0; r < s.size(); ++r) {
        double diag = 0.0, off = 0.0;
        for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
            if (static_cast<std::size_t>(s.col[k]) == r) {
                diag += s.val[k];
            } else {
                if (s.val[k] > 0.0 && res.ok) {
                    res.ok = false;
                    res.failure = "positive off-diagonal in row " + std::to_string(r);
                }
                off += std::abs(s.val[k]);
            }
        }
        if (!(diag > 0.0)) {
            if (res.ok) res.failure = "nonpositive diagonal in row " + std::to_string(r);
            res.ok = false;
            continue;
        }
        if (!(diag > off) && res.ok) {
            res.ok = false;
            res.failure = "row " + std::to_string(r) + " not strictly diagonally dominant";
        }
        res.worst_offdiag_ratio = std::max(res.worst_offdiag_ratio, off / diag);
    }
    return res;
}

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

inline double relative_residual(const SparseSystem& s, const std::vector<double>& x) {
    const auto ax = s.multiply(x);
    double rn = 0.0, bn = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        rn = std::max(rn, std::abs(s.rhs[r] - ax[r]));
        bn = std::max(bn, std::abs(s.rhs[r]));
    }
    return bn > 0.0 ? rn / bn : rn;
}

/// Gauss-Seidel sweeps from `x` until the relative max-norm residual is <= tol.
/// max_iters <= 0 selects 10000 sweeps.
inline SolveStats solve_m_matrix(const SparseSystem& s, std::vector<double>& x, double tol = 1e-12,
                                 int max_iters = 0) {
    const std::size_t n = s.size();
    x.resize(n, 0.0);
    SolveStats st;
    if (n == 0) return st;
    if (max_iters <= 0) max_iters = 10000;
    for (int it = 1; it <= max_iters; ++it) {
        for (std::size_t r = 0; r < n; ++r) {
            double diag = 0.0, acc = s.rhs[r];
            for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
                const auto c = static_cast<std::size_t>(s.col[k]);
                if (c == r) diag += s.val[k];
                else acc -= s.val[k] * x[c];
            }
            x[r] = acc / diag;
        }
        st.iterations = it;
        st.relative_residual = relative_residual(s, x);
        if (st.relative_residual <= tol) return st;
    }
    throw NumericError("Gauss-Seidel did not converge in " + std::to_string(max_iters) +
                       " sweeps (relative residual " + std::to_string(st.relative_residual) + ")");
}

inline std::vector<double> solve_m_matrix(const SparseSystem& s, double tol = 1e-12, int max_iters = 0) {
    std::vector<double> x(s.size(), 0.0);
    solve_m_matrix(s, x, tol, max_iters);
    return x;
}

}  // namespace fkwide
