#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/scalar.hpp"
#include "quivhom/sparse_matrix.hpp"

namespace quivhom {

// Finite graded vector space with an ordered, labeled basis.
class GradedSpace {
public:
    GradedSpace() = default;

    int add(const std::string& label, int degree) {
        if (index_.count(label)) throw std::invalid_argument("duplicate basis label: " + label);
        index_[label] = static_cast<int>(labels_.size());
        labels_.push_back(label);
        degrees_.push_back(degree);
        return static_cast<int>(labels_.size()) - 1;
    }

    int dim() const { return static_cast<int>(labels_.size()); }
    const std::string& label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
    int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }
    int index(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) throw std::invalid_argument("unknown basis label: " + label);
        return it->second;
    }
    bool has(const std::string& label) const { return index_.count(label) != 0; }

    bool operator==(const GradedSpace& o) const {
        return labels_ == o.labels_ && degrees_ == o.degrees_;
    }

private:
    std::vector<std::string> labels_;
    std::vector<int> degrees_;
    std::map<std::string, int> index_;
};

// Degree-homogeneous sparse linear map between graded spaces.
class GradedMap {
public:
    GradedMap() : source_(nullptr), target_(nullptr), degree_(0), p_(0) {}
    GradedMap(const GradedSpace* source, const GradedSpace* target, int degree, std::uint64_t p)
        : source_(source), target_(target), degree_(degree), p_(p) {}

    const GradedSpace* source() const { return source_; }
    const GradedSpace* target() const { return target_; }
    int degree() const { return degree_; }
    std::uint64_t field() const { return p_; }

    void add(int src, int tgt, const Scalar& c) {
        if (c.is_zero()) return;
        if (target_->degree(tgt) != source_->degree(src) + degree_)
            throw std::invalid_argument("graded map entry violates homogeneity");
        auto& col = entries_[src];
        auto it = col.find(tgt);
        if (it == col.end()) {
            col.emplace(tgt, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) col.erase(it);
        }
        if (col.empty()) entries_.erase(src);
    }

    const std::map<int, Scalar>& column(int src) const {
        static const std::map<int, Scalar> empty;
        auto it = entries_.find(src);
        return it == entries_.end() ? empty : it->second;
    }
    const std::map<int, std::map<int, Scalar>>& entries() const { return entries_; }
    bool is_zero() const { return entries_.empty(); }

    bool operator==(const GradedMap& o) const {
        return degree_ == o.degree_ && entries_ == o.entries_ && *source_ == *o.source_ &&
               *target_ == *o.target_;
    }

    GradedMap compose(const GradedMap& inner) const {  // this ∘ inner
        GradedMap out(inner.source_, target_, degree_ + inner.degree_, p_);
        for (const auto& [s, mid] : inner.entries_)
            for (const auto& [m, a] : mid)
                for (const auto& [t, b] : column(m)) out.add(s, t, a * b);
        return out;
    }

    GradedMap scaled(const Scalar& c) const {
        GradedMap out(source_, target_, degree_, p_);
        for (const auto& [s, col] : entries_)
            for (const auto& [t, v] : col) out.add(s, t, v * c);
        return out;
    }

    GradedMap plus(const GradedMap& o) const {
        GradedMap out(source_, target_, degree_, p_);
        for (const auto& [s, col] : entries_)
            for (const auto& [t, v] : col) out.add(s, t, v);
        for (const auto& [s, col] : o.entries_)
            for (const auto& [t, v] : col) out.add(s, t, v);
        return out;
    }

    static GradedMap identity(const GradedSpace* sp, std::uint64_t p) {
        GradedMap out(sp, sp, 0, p);
        for (int i = 0; i < sp->dim(); ++i) out.add(i, i, Scalar::one(p));
        return out;
    }

    // Matrix restricted to a fixed source degree n (targets have degree n+deg).
    // Row/column indices refer to the basis indices listed in src_idx/tgt_idx.
    SparseMatrix degree_block(int n, std::vector<int>& src_idx, std::vector<int>& tgt_idx) const {
        src_idx.clear();
        tgt_idx.clear();
        std::map<int, int> tpos;
        for (int i = 0; i < source_->dim(); ++i)
            if (source_->degree(i) == n) src_idx.push_back(i);
        for (int i = 0; i < target_->dim(); ++i)
            if (target_->degree(i) == n + degree_) {
                tpos[i] = static_cast<int>(tgt_idx.size());
                tgt_idx.push_back(i);
            }
        SparseMatrix M(static_cast<int>(tgt_idx.size()), static_cast<int>(src_idx.size()), p_);
        for (int c = 0; c < static_cast<int>(src_idx.size()); ++c)
            for (const auto& [t, v] : column(src_idx[static_cast<std::size_t>(c)]))
                M.set(tpos.at(t), c, v);
        return M;
    }

private:
    const GradedSpace* source_;
    const GradedSpace* target_;
    int degree_;
    std::uint64_t p_;
    // source index -> (target index -> coefficient)
    std::map<int, std::map<int, Scalar>> entries_;
};

// Sign (-1)^ε of permuting homogeneous elements of the given degrees by
// sigma, where sigma maps slot positions to their new positions: the element
// in slot i moves to slot sigma[i].  ε counts weighted inversions: pairs that
// arrive in the opposite relative order contribute the product of their
// degrees.
inline int koszul_sign(const std::vector<int>& degrees, const std::vector<int>& sigma) {
    if (degrees.size() != sigma.size()) throw std::invalid_argument("koszul_sign: size mismatch");
    long eps = 0;
    const std::size_t n = degrees.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (sigma[i] > sigma[j]) eps += static_cast<long>(degrees[i]) * static_cast<long>(degrees[j]);
    return (eps % 2 == 0) ? 1 : -1;
}

}  // namespace quivhom
