#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "quivhom/scalar.hpp"

namespace quivhom {

// Sparse matrix over an exact field.  Row-major storage; stored entries are
// always nonzero.  Dimensions are fixed at construction.
class SparseMatrix {
public:
    SparseMatrix(int rows, int cols, std::uint64_t p)
        : rows_(rows), cols_(cols), p_(p), data_(static_cast<std::size_t>(rows)) {}

    static SparseMatrix identity(int n, std::uint64_t p) {
        SparseMatrix m(n, n, p);
        for (int i = 0; i < n; ++i) m.set(i, i, Scalar::one(p));
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::uint64_t field() const { return p_; }

    void set(int r, int c, const Scalar& v) {
        auto& row = data_[static_cast<std::size_t>(r)];
        if (v.is_zero())
            row.erase(c);
        else
            row[c] = v;
    }
    void add(int r, int c, const Scalar& v) {
        auto& row = data_[static_cast<std::size_t>(r)];
        auto it = row.find(c);
        if (it == row.end()) {
            if (!v.is_zero()) row.emplace(c, v);
            return;
        }
        it->second += v;
        if (it->second.is_zero()) row.erase(it);
    }
    Scalar get(int r, int c) const {
        const auto& row = data_[static_cast<std::size_t>(r)];
        auto it = row.find(c);
        return it == row.end() ? Scalar::zero(p_) : it->second;
    }
    const std::map<int, Scalar>& row(int r) const { return data_[static_cast<std::size_t>(r)]; }

    bool operator==(const SparseMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    SparseMatrix multiply(const SparseMatrix& o) const {
        SparseMatrix out(rows_, o.cols_, p_);
        for (int i = 0; i < rows_; ++i)
            for (const auto& [k, a] : data_[static_cast<std::size_t>(i)])
                for (const auto& [j, b] : o.data_[static_cast<std::size_t>(k)]) out.add(i, j, a * b);
        return out;
    }

    std::vector<Scalar> apply(const std::vector<Scalar>& x) const {
        std::vector<Scalar> y(static_cast<std::size_t>(rows_), Scalar::zero(p_));
        for (int i = 0; i < rows_; ++i)
            for (const auto& [j, a] : data_[static_cast<std::size_t>(i)])
                y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(j)];
        return y;
    }

private:
    int rows_, cols_;
    std::uint64_t p_;
    std::vector<std::map<int, Scalar>> data_;
};

struct RrefResult {
    SparseMatrix R;             // reduced row-echelon form
    std::vector<int> pivot_cols;
    SparseMatrix basis_change;  // basis_change * M == R
};

// Deterministic reduced row-echelon form: scan columns left to right and pick
// the lowest-index row with a nonzero entry as the pivot.  Identical inputs
// give identical outputs on every platform.
inline RrefResult rref(const SparseMatrix& M) {
    const std::uint64_t p = M.field();
    const int nr = M.rows(), nc = M.cols();
    // dense-ish working copy of rows (kept as maps for sparsity)
    std::vector<std::map<int, Scalar>> rows(static_cast<std::size_t>(nr));
    std::vector<std::map<int, Scalar>> chg(static_cast<std::size_t>(nr));
    for (int i = 0; i < nr; ++i) {
        rows[static_cast<std::size_t>(i)] = M.row(i);
        chg[static_cast<std::size_t>(i)][i] = Scalar::one(p);
    }
    auto axpy = [&](std::map<int, Scalar>& dst, const Scalar& c, const std::map<int, Scalar>& src) {
        for (const auto& [j, v] : src) {
            auto it = dst.find(j);
            if (it == dst.end()) {
                Scalar w = c * v;
                if (!w.is_zero()) dst.emplace(j, std::move(w));
            } else {
                it->second += c * v;
                if (it->second.is_zero()) dst.erase(it);
            }
        }
    };
    std::vector<int> pivots;
    int next_row = 0;
    for (int col = 0; col < nc && next_row < nr; ++col) {
        int pr = -1;
        for (int r = next_row; r < nr; ++r) {
            auto it = rows[static_cast<std::size_t>(r)].find(col);
            if (it != rows[static_cast<std::size_t>(r)].end()) {
                pr = r;
                break;
            }
        }
        if (pr < 0) continue;
        std::swap(rows[static_cast<std::size_t>(pr)], rows[static_cast<std::size_t>(next_row)]);
        std::swap(chg[static_cast<std::size_t>(pr)], chg[static_cast<std::size_t>(next_row)]);
        Scalar inv = rows[static_cast<std::size_t>(next_row)].at(col).inverse();
        if (!inv.is_one()) {
            for (auto& [j, v] : rows[static_cast<std::size_t>(next_row)]) v *= inv;
            for (auto& [j, v] : chg[static_cast<std::size_t>(next_row)]) v *= inv;
        }
        for (int r = 0; r < nr; ++r) {
            if (r == next_row) continue;
            auto it = rows[static_cast<std::size_t>(r)].find(col);
            if (it == rows[static_cast<std::size_t>(r)].end()) continue;
            Scalar c = -it->second;
            axpy(rows[static_cast<std::size_t>(r)], c, rows[static_cast<std::size_t>(next_row)]);
            axpy(chg[static_cast<std::size_t>(r)], c, chg[static_cast<std::size_t>(next_row)]);
        }
        pivots.push_back(col);
        ++next_row;
    }
    RrefResult out{SparseMatrix(nr, nc, p), std::move(pivots), SparseMatrix(nr, nr, p)};
    for (int i = 0; i < nr; ++i) {
        for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) out.R.set(i, j, v);
        for (const auto& [j, v] : chg[static_cast<std::size_t>(i)]) out.basis_change.set(i, j, v);
    }
    return out;
}

// Canonical solution of A x = b (free variables zero); absent if inconsistent.
inline std::optional<std::vector<Scalar>> solve(const SparseMatrix& A, const std::vector<Scalar>& b) {
    const std::uint64_t p = A.field();
    RrefResult rr = rref(A);
    std::vector<Scalar> rb = rr.basis_change.apply(b);
    std::vector<Scalar> x(static_cast<std::size_t>(A.cols()), Scalar::zero(p));
    const int rank = static_cast<int>(rr.pivot_cols.size());
    for (int i = 0; i < rank; ++i) x[static_cast<std::size_t>(rr.pivot_cols[static_cast<std::size_t>(i)])] = rb[static_cast<std::size_t>(i)];
    for (int i = rank; i < A.rows(); ++i)
        if (!rb[static_cast<std::size_t>(i)].is_zero()) return std::nullopt;
    return x;
}

// Canonical x in span(S) with A x = b: solve (A·S) c = b and return S c.
// S is given as spanning columns (each of height A.cols()).
inline std::optional<std::vector<Scalar>> solve_in_subspace(const SparseMatrix& A,
                                                            const std::vector<Scalar>& b,
                                                            const std::vector<std::vector<Scalar>>& S) {
    const std::uint64_t p = A.field();
    SparseMatrix AS(A.rows(), static_cast<int>(S.size()), p);
    for (int k = 0; k < static_cast<int>(S.size()); ++k) {
        std::vector<Scalar> col = A.apply(S[static_cast<std::size_t>(k)]);
        for (int i = 0; i < A.rows(); ++i) AS.add(i, k, col[static_cast<std::size_t>(i)]);
    }
    auto c = solve(AS, b);
    if (!c) return std::nullopt;
    std::vector<Scalar> x(static_cast<std::size_t>(A.cols()), Scalar::zero(p));
    for (std::size_t k = 0; k < S.size(); ++k)
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += (*c)[k] * S[k][i];
    return x;
}

}  // namespace quivhom
