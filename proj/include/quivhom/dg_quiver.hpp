#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/graded.hpp"
#include "quivhom/sparse_matrix.hpp"

namespace quivhom {

// Finite graded quiver with a degree +1 differential on every hom space.
// hom(x, y) is the space written  _x A _y  with tuples (x_1, ..., x_n)
// indexing tensor factors hom(x_i, x_{i+1}).
class DgQuiver {
public:
    explicit DgQuiver(std::uint64_t p = 0) : p_(p) {}

    std::uint64_t field() const { return p_; }

    int add_object(const std::string& name) {
        if (obj_index_.count(name)) throw std::invalid_argument("duplicate object: " + name);
        obj_index_[name] = static_cast<int>(objects_.size());
        objects_.push_back(name);
        return static_cast<int>(objects_.size()) - 1;
    }
    int object_count() const { return static_cast<int>(objects_.size()); }
    const std::string& object_name(int i) const { return objects_[static_cast<std::size_t>(i)]; }
    int object_index(const std::string& name) const {
        auto it = obj_index_.find(name);
        if (it == obj_index_.end()) throw std::invalid_argument("unknown object: " + name);
        return it->second;
    }

    GradedSpace& hom(int x, int y) { return hom_[{x, y}]; }
    const GradedSpace& hom(int x, int y) const {
        static const GradedSpace empty;
        auto it = hom_.find({x, y});
        return it == hom_.end() ? empty : it->second;
    }

    void set_differential(int x, int y, GradedMap d) {
        if (d.degree() != 1) throw std::invalid_argument("differential must have degree +1");
        diff_[{x, y}] = std::move(d);
    }
    const GradedMap& differential(int x, int y) const {
        auto it = diff_.find({x, y});
        if (it != diff_.end()) return it->second;
        auto z = zero_diff_.find({x, y});
        if (z == zero_diff_.end())
            z = zero_diff_.emplace(std::make_pair(std::make_pair(x, y), GradedMap(&hom(x, y), &hom(x, y), 1, p_))).first;
        return z->second;
    }
    bool has_differential(int x, int y) const { return diff_.count({x, y}) != 0; }

    // Returns the first (x, y) whose differential fails d² = 0, if any.
    std::optional<std::pair<int, int>> square_nonzero() const {
        for (int x = 0; x < object_count(); ++x)
            for (int y = 0; y < object_count(); ++y) {
                const GradedMap& d = differential(x, y);
                if (!d.compose(d).is_zero()) return std::make_pair(x, y);
            }
        return std::nullopt;
    }

    bool has_zero_differential() const {
        for (const auto& [k, d] : diff_)
            if (!d.is_zero()) return false;
        return true;
    }

private:
    std::uint64_t p_;
    std::vector<std::string> objects_;
    std::map<std::string, int> obj_index_;
    std::map<std::pair<int, int>, GradedSpace> hom_;
    std::map<std::pair<int, int>, GradedMap> diff_;
    mutable std::map<std::pair<int, int>, GradedMap> zero_diff_;
};

// Chain-level contraction data (i, p, h) between a dg quiver and its
// cohomology: p i = id, d h + h d = i p − id, and the side conditions
// h i = 0, p h = 0, h h = 0.
struct Contraction {
    const DgQuiver* total = nullptr;  // A
    DgQuiver reduced;                 // H(A), zero differential
    std::map<std::pair<int, int>, GradedMap> include;   // i : H -> A, degree 0
    std::map<std::pair<int, int>, GradedMap> project;   // p : A -> H, degree 0
    std::map<std::pair<int, int>, GradedMap> homotopy;  // h : A -> A, degree −1

    Contraction() : reduced(0) {}

    // Exact verification of all five identities on every hom space.
    bool verify() const {
        const std::uint64_t p = total->field();
        for (int x = 0; x < total->object_count(); ++x)
            for (int y = 0; y < total->object_count(); ++y) {
                const GradedMap& i = include.at({x, y});
                const GradedMap& pr = project.at({x, y});
                const GradedMap& h = homotopy.at({x, y});
                const GradedMap& d = total->differential(x, y);
                GradedMap idH = GradedMap::identity(&reduced.hom(x, y), p);
                GradedMap idA = GradedMap::identity(&total->hom(x, y), p);
                if (!(pr.compose(i) == idH)) return false;
                GradedMap lhs = d.compose(h).plus(h.compose(d));
                GradedMap rhs = i.compose(pr).plus(idA.scaled(-Scalar::one(p)));
                if (!(lhs == rhs)) return false;
                if (!h.compose(i).is_zero()) return false;
                if (!pr.compose(h).is_zero()) return false;
                if (!h.compose(h).is_zero()) return false;
                if (!d.compose(i).is_zero()) return false;          // i is a chain map (d_H = 0)
                if (!pr.compose(d).is_zero()) return false;         // p is a chain map
            }
        return true;
    }
};

// Builds a special contraction onto cohomology, per hom space and degree:
// pivots of the rank decomposition choose image representatives and
// complements, canonical under the deterministic rref.  Throws if d² != 0.
inline Contraction cohomology_contraction(const DgQuiver& A) {
    if (auto bad = A.square_nonzero())
        throw std::invalid_argument("differential does not square to zero on hom(" +
                                    A.object_name(bad->first) + ", " + A.object_name(bad->second) + ")");
    const std::uint64_t p = A.field();
    Contraction C;
    C.total = &A;
    C.reduced = DgQuiver(p);
    for (int x = 0; x < A.object_count(); ++x) C.reduced.add_object(A.object_name(x));

    struct PerHom {
        // columns over the ambient hom basis
        std::vector<std::vector<Scalar>> h_reps;              // cohomology representatives
        std::vector<int> h_degs;
        std::vector<std::vector<Scalar>> im_basis;            // image of d
        std::vector<std::vector<Scalar>> im_preimage;         // d(preimage) = im_basis
        std::vector<std::vector<Scalar>> comp_basis;          // complement C with d injective on it
    };

    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            const GradedSpace& V = A.hom(x, y);
            const GradedMap& d = A.differential(x, y);
            const int dim = V.dim();
            std::set<int> degs;
            for (int i = 0; i < dim; ++i) degs.insert(V.degree(i));

            // per degree n: kernel of d^n, image of d^{n-1} with preimages,
            // complement = span of pivot-column unit vectors of d^n
            std::vector<std::vector<Scalar>> h_reps, im_basis, im_pre, comp;
            std::vector<int> rep_src_deg;
            for (int n : degs) {
                std::vector<int> s_lo, t_lo, s_hi, t_hi;
                SparseMatrix Dn = d.degree_block(n, s_hi, t_hi);        // d^n on degree n
                SparseMatrix Dprev = d.degree_block(n - 1, s_lo, t_lo);  // d^{n-1} into degree n

                auto unit = [&](int idx) {
                    std::vector<Scalar> v(static_cast<std::size_t>(dim), Scalar::zero(p));
                    v[static_cast<std::size_t>(idx)] = Scalar::one(p);
                    return v;
                };

                // image of d^{n-1}: columns d(e_c) for pivot columns c, with
                // preimages e_c (free variables zero by the pivot rule)
                RrefResult rlo = rref(Dprev);
                std::vector<std::vector<Scalar>> im_n;
                for (int c : rlo.pivot_cols) {
                    std::vector<Scalar> col(static_cast<std::size_t>(dim), Scalar::zero(p));
                    int src = s_lo[static_cast<std::size_t>(c)];
                    for (const auto& [t, v] : d.column(src)) col[static_cast<std::size_t>(t)] = v;
                    im_n.push_back(col);
                    im_basis.push_back(col);
                    im_pre.push_back(unit(src));
                }

                // kernel of d^n (canonical basis from rref free columns)
                RrefResult rhi = rref(Dn);
                std::set<int> piv(rhi.pivot_cols.begin(), rhi.pivot_cols.end());
                std::vector<std::vector<Scalar>> ker_n;
                for (int c = 0; c < Dn.cols(); ++c) {
                    if (piv.count(c)) continue;
                    std::vector<Scalar> v(static_cast<std::size_t>(dim), Scalar::zero(p));
                    v[static_cast<std::size_t>(s_hi[static_cast<std::size_t>(c)])] = Scalar::one(p);
                    for (int r = 0; r < static_cast<int>(rhi.pivot_cols.size()); ++r) {
                        Scalar coef = rhi.R.get(r, c);
                        if (!coef.is_zero())
                            v[static_cast<std::size_t>(s_hi[static_cast<std::size_t>(rhi.pivot_cols[static_cast<std::size_t>(r)])])] = -coef;
                    }
                    ker_n.push_back(v);
                }

                // complement: unit vectors at pivot columns of d^n
                for (int c : rhi.pivot_cols) comp.push_back(unit(s_hi[static_cast<std::size_t>(c)]));

                // extend the image basis to the kernel: kernel vectors whose
                // reduction against [im | ker] picks up a pivot are reps
                {
                    const int rows = dim;
                    SparseMatrix ext(rows, static_cast<int>(im_n.size() + ker_n.size()), p);
                    int cc = 0;
                    for (const auto& v : im_n) {
                        for (int r = 0; r < rows; ++r) ext.add(r, cc, v[static_cast<std::size_t>(r)]);
                        ++cc;
                    }
                    for (const auto& v : ker_n) {
                        for (int r = 0; r < rows; ++r) ext.add(r, cc, v[static_cast<std::size_t>(r)]);
                        ++cc;
                    }
                    RrefResult re = rref(ext);
                    for (int c : re.pivot_cols)
                        if (c >= static_cast<int>(im_n.size())) {
                            h_reps.push_back(ker_n[static_cast<std::size_t>(c) - im_n.size()]);
                            rep_src_deg.push_back(n);
                        }
                }
            }

            // reduced hom space with deterministic labels
            GradedSpace& H = C.reduced.hom(x, y);
            for (std::size_t k = 0; k < h_reps.size(); ++k)
                H.add("h" + std::to_string(k), rep_src_deg[k]);
            C.reduced.set_differential(x, y, GradedMap(&H, &H, 1, p));

            // include: representative vectors
            GradedMap inc(&H, &V, 0, p);
            for (std::size_t k = 0; k < h_reps.size(); ++k)
                for (int r = 0; r < dim; ++r) inc.add(static_cast<int>(k), r, h_reps[k][static_cast<std::size_t>(r)]);

            // Solve for p and h simultaneously via the decomposition
            // V = span(h_reps) ⊕ span(im_basis) ⊕ span(comp):
            // express each unit vector in that basis; p keeps the h_reps
            // coordinates, h sends the im part to −(preimage), 0 elsewhere.
            const int tot = static_cast<int>(h_reps.size() + im_basis.size() + comp.size());
            if (tot != dim) throw std::logic_error("contraction decomposition dimension mismatch");
            SparseMatrix B(dim, tot, p);
            {
                int cc = 0;
                for (const auto& v : h_reps) {
                    for (int r = 0; r < dim; ++r) B.add(r, cc, v[static_cast<std::size_t>(r)]);
                    ++cc;
                }
                for (const auto& v : im_basis) {
                    for (int r = 0; r < dim; ++r) B.add(r, cc, v[static_cast<std::size_t>(r)]);
                    ++cc;
                }
                for (const auto& v : comp) {
                    for (int r = 0; r < dim; ++r) B.add(r, cc, v[static_cast<std::size_t>(r)]);
                    ++cc;
                }
            }
            GradedMap proj(&V, &H, 0, p);
            GradedMap hmt(&V, &V, -1, p);
            for (int e = 0; e < dim; ++e) {
                std::vector<Scalar> rhs(static_cast<std::size_t>(dim), Scalar::zero(p));
                rhs[static_cast<std::size_t>(e)] = Scalar::one(p);
                auto coords = solve(B, rhs);
                if (!coords) throw std::logic_error("contraction basis is not spanning");
                for (std::size_t k = 0; k < h_reps.size(); ++k)
                    proj.add(e, static_cast<int>(k), (*coords)[k]);
                for (std::size_t k = 0; k < im_basis.size(); ++k) {
                    Scalar c = (*coords)[h_reps.size() + k];
                    if (c.is_zero()) continue;
                    for (int r = 0; r < dim; ++r)
                        hmt.add(e, r, -(c * im_pre[k][static_cast<std::size_t>(r)]));
                }
            }
            C.include.emplace(std::make_pair(x, y), std::move(inc));
            C.project.emplace(std::make_pair(x, y), std::move(proj));
            C.homotopy.emplace(std::make_pair(x, y), std::move(hmt));
        }
    return C;
}

}  // namespace quivhom
