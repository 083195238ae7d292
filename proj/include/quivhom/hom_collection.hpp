#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/dg_quiver.hpp"
#include "quivhom/graded.hpp"

namespace quivhom {

// One tensor factor of a multilinear component: a graded space read with a
// degree shift (shift −1 realizes V[1], shift +d realizes V[−d]).
struct FactorRef {
    const GradedSpace* sp = nullptr;
    int shift = 0;

    int sdeg(int idx) const { return sp->degree(idx) + shift; }
    bool operator==(const FactorRef& o) const { return sp == o.sp && shift == o.shift; }
};

// Sparse multilinear map  ⊗ ins  →  ⊗ outs  between shifted graded spaces,
// homogeneous of the stored intrinsic (shifted) degree.
class MMap {
public:
    MMap() : intrinsic_(0), p_(0) {}
    MMap(std::vector<FactorRef> ins, std::vector<FactorRef> outs, int intrinsic, std::uint64_t p)
        : ins_(std::move(ins)), outs_(std::move(outs)), intrinsic_(intrinsic), p_(p) {}

    const std::vector<FactorRef>& ins() const { return ins_; }
    const std::vector<FactorRef>& outs() const { return outs_; }
    int intrinsic() const { return intrinsic_; }
    std::uint64_t field() const { return p_; }

    int in_sdeg(const std::vector<int>& in) const {
        int s = 0;
        for (std::size_t i = 0; i < ins_.size(); ++i) s += ins_[i].sdeg(in[i]);
        return s;
    }
    int out_sdeg(const std::vector<int>& out) const {
        int s = 0;
        for (std::size_t i = 0; i < outs_.size(); ++i) s += outs_[i].sdeg(out[i]);
        return s;
    }

    void add(const std::vector<int>& in, const std::vector<int>& out, const Scalar& c) {
        if (c.is_zero()) return;
        if (in.size() != ins_.size() || out.size() != outs_.size())
            throw std::invalid_argument("component entry arity mismatch");
        if (out_sdeg(out) != in_sdeg(in) + intrinsic_)
            throw std::invalid_argument("component entry violates homogeneity");
        auto& row = ent_[in];
        auto it = row.find(out);
        if (it == row.end()) {
            row.emplace(out, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) row.erase(it);
        }
        if (row.empty()) ent_.erase(in);
    }

    const std::map<std::vector<int>, std::map<std::vector<int>, Scalar>>& entries() const { return ent_; }
    bool is_zero() const { return ent_.empty(); }

    bool same_shape(const MMap& o) const {
        return ins_ == o.ins_ && outs_ == o.outs_ && intrinsic_ == o.intrinsic_;
    }
    bool operator==(const MMap& o) const { return same_shape(o) && ent_ == o.ent_; }

    void accumulate(const MMap& o, const Scalar& c) {
        if (!same_shape(o)) throw std::invalid_argument("accumulating mismatched components");
        for (const auto& [in, row] : o.ent_)
            for (const auto& [out, v] : row) add(in, out, v * c);
    }

    MMap scaled(const Scalar& c) const {
        MMap r(ins_, outs_, intrinsic_, p_);
        r.accumulate(*this, c);
        return r;
    }

    // Postcompose output factor k with a degree-0 graded map (no Koszul signs
    // arise for degree-0 maps).
    MMap postcompose_out(std::size_t k, const GradedMap& g) const {
        if (g.degree() != 0) throw std::invalid_argument("postcompose_out expects a degree-0 map");
        std::vector<FactorRef> outs = outs_;
        outs[k].sp = g.target();
        MMap r(ins_, outs, intrinsic_, p_);
        for (const auto& [in, row] : ent_)
            for (const auto& [out, v] : row)
                for (const auto& [t, c] : g.column(out[k])) {
                    std::vector<int> o2 = out;
                    o2[k] = t;
                    r.add(in, o2, v * c);
                }
        return r;
    }

    // Precompose input factor k with a degree-0 graded map.
    MMap precompose_in(std::size_t k, const GradedMap& g) const {
        if (g.degree() != 0) throw std::invalid_argument("precompose_in expects a degree-0 map");
        std::vector<FactorRef> ins = ins_;
        ins[k].sp = g.source();
        MMap r(ins, outs_, intrinsic_, p_);
        // Iterate over g's entries and match them against stored inputs.
        for (int s = 0; s < g.source()->dim(); ++s)
            for (const auto& [t, c] : g.column(s))
                for (const auto& [in, row] : ent_) {
                    if (in[k] != t) continue;
                    std::vector<int> i2 = in;
                    i2[k] = s;
                    for (const auto& [out, v] : row) r.add(i2, out, v * c);
                }
        return r;
    }

private:
    std::vector<FactorRef> ins_, outs_;
    int intrinsic_;
    std::uint64_t p_;
    std::map<std::vector<int>, std::map<std::vector<int>, Scalar>> ent_;
};

// Truncated element of the hom complex C(A,B)[1]: one multilinear component
// per object tuple (x_1, ..., x_n), 2 ≤ n ≤ nmax, mapping the shifted tensor
// space hom(x_1,x_2)[1] ⊗ ... ⊗ hom(x_{n−1},x_n)[1] into
// hom(F0 x_1, F0 x_n)[1].  intrinsic 1 for structures, 0 for morphisms.
class HomCollection {
public:
    HomCollection() : src_(nullptr), tgt_(nullptr), intrinsic_(0), nmax_(0) {}
    HomCollection(const DgQuiver* src, const DgQuiver* tgt, std::vector<int> F0, int intrinsic, int nmax)
        : src_(src), tgt_(tgt), F0_(std::move(F0)), intrinsic_(intrinsic), nmax_(nmax) {
        if (static_cast<int>(F0_.size()) != src_->object_count())
            throw std::invalid_argument("object map size mismatch");
    }

    static HomCollection structure(const DgQuiver* A, int nmax, int intrinsic = 1) {
        std::vector<int> id(static_cast<std::size_t>(A->object_count()));
        for (int i = 0; i < A->object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
        return HomCollection(A, A, std::move(id), intrinsic, nmax);
    }

    const DgQuiver* source() const { return src_; }
    const DgQuiver* target() const { return tgt_; }
    const std::vector<int>& F0() const { return F0_; }
    int map_object(int x) const { return F0_[static_cast<std::size_t>(x)]; }
    int intrinsic() const { return intrinsic_; }
    int nmax() const { return nmax_; }
    bool is_structure_shaped() const {
        if (src_ != tgt_) return false;
        for (int i = 0; i < src_->object_count(); ++i)
            if (F0_[static_cast<std::size_t>(i)] != i) return false;
        return true;
    }

    // Component shape for a tuple, built on demand.
    MMap make_component(const std::vector<int>& tuple) const {
        if (tuple.size() < 2) throw std::invalid_argument("tuples must have length at least 2");
        std::vector<FactorRef> ins, outs;
        for (std::size_t i = 0; i + 1 < tuple.size(); ++i)
            ins.push_back({&src_->hom(tuple[i], tuple[i + 1]), -1});
        outs.push_back({&tgt_->hom(map_object(tuple.front()), map_object(tuple.back())), -1});
        return MMap(std::move(ins), std::move(outs), intrinsic_, src_->field());
    }

    bool has(const std::vector<int>& tuple) const {
        auto it = comp_.find(tuple);
        return it != comp_.end() && !it->second.is_zero();
    }
    const MMap& at(const std::vector<int>& tuple) const {
        auto it = comp_.find(tuple);
        if (it == comp_.end()) throw std::invalid_argument("missing component");
        return it->second;
    }
    MMap& ensure(const std::vector<int>& tuple) {
        auto it = comp_.find(tuple);
        if (it == comp_.end()) it = comp_.emplace(tuple, make_component(tuple)).first;
        return it->second;
    }
    void set(const std::vector<int>& tuple, MMap m) { comp_[tuple] = std::move(m); }
    const std::map<std::vector<int>, MMap>& components() const { return comp_; }
    void prune() {
        for (auto it = comp_.begin(); it != comp_.end();)
            it = it->second.is_zero() ? comp_.erase(it) : std::next(it);
    }

    bool is_zero() const {
        for (const auto& [k, m] : comp_)
            if (!m.is_zero()) return false;
        return true;
    }
    bool equals(const HomCollection& o) const {
        for (const auto& [k, m] : comp_) {
            if (m.is_zero()) continue;
            if (!o.has(k) || !(o.at(k) == m)) return false;
        }
        for (const auto& [k, m] : o.comp_) {
            if (m.is_zero()) continue;
            if (!has(k)) return false;
        }
        return true;
    }

    // All object tuples of a given length over a quiver.
    static std::vector<std::vector<int>> all_tuples(const DgQuiver& Q, int len) {
        std::vector<std::vector<int>> out;
        std::vector<int> cur(static_cast<std::size_t>(len), 0);
        const int n = Q.object_count();
        if (n == 0) return out;
        while (true) {
            out.push_back(cur);
            int i = len - 1;
            while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - 1) {
                cur[static_cast<std::size_t>(i)] = 0;
                --i;
            }
            if (i < 0) break;
            ++cur[static_cast<std::size_t>(i)];
        }
        return out;
    }

private:
    const DgQuiver* src_;
    const DgQuiver* tgt_;
    std::vector<int> F0_;
    int intrinsic_;
    int nmax_;
    std::map<std::vector<int>, MMap> comp_;
};

}  // namespace quivhom
