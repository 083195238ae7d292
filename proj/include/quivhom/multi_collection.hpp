#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/ainfty.hpp"
#include "quivhom/dg_quiver.hpp"
#include "quivhom/hom_collection.hpp"

namespace quivhom {

// Object type of a multi-output component: an ordered list of nonempty object
// groups (x̄¹, ..., x̄ⁿ).  Group i supplies the consecutive input factors
// hom(x^i_j, x^i_{j+1})[1]; output i lands in hom(F0 lt x̄^i, F0 rt x̄^{i+1})
// with indices cyclic.
using MultiType = std::vector<std::vector<int>>;

inline int type_length(const MultiType& t) { return static_cast<int>(t.size()); }
inline int type_size(const MultiType& t) {
    int s = 0;
    for (const auto& g : t) s += static_cast<int>(g.size());
    return s;
}
inline int type_inputs(const MultiType& t) { return type_size(t) - type_length(t); }

inline std::string type_str(const MultiType& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += ";";
        for (std::size_t j = 0; j < t[i].size(); ++j) {
            if (j) s += ",";
            s += std::to_string(t[i][j]);
        }
    }
    return s + ")";
}

inline bool type_valid(const MultiType& t) {
    if (t.empty()) return false;
    for (const auto& g : t)
        if (g.empty()) return false;
    if (t.size() == 1 && t[0].size() < 2) return false;
    return type_size(t) >= 2;
}

// Truncated element of the d-shifted multi-output complex: one multilinear
// component per type with length ≤ lmax and size ≤ nmax.  Inputs are read in
// V[1] (shift −1), outputs in W[−d] (shift +d).  mu is the Koszul degree of
// the element (1 for structures, 0 for morphisms; composites add); the stored
// intrinsic of every component is mu + d + 1.
class MultiCollection {
public:
    MultiCollection() : src_(nullptr), tgt_(nullptr), d_(0), mu_(0), lmax_(0), nmax_(0) {}
    MultiCollection(const DgQuiver* src, const DgQuiver* tgt, std::vector<int> F0, int d, int mu,
                    int lmax, int nmax)
        : src_(src), tgt_(tgt), F0_(std::move(F0)), d_(d), mu_(mu), lmax_(lmax), nmax_(nmax) {
        if (static_cast<int>(F0_.size()) != src_->object_count())
            throw std::invalid_argument("object map size mismatch");
    }

    static MultiCollection structure(const DgQuiver* A, int d, int lmax, int nmax, int mu = 1) {
        std::vector<int> id(static_cast<std::size_t>(A->object_count()));
        for (int i = 0; i < A->object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
        return MultiCollection(A, A, std::move(id), d, mu, lmax, nmax);
    }

    const DgQuiver* source() const { return src_; }
    const DgQuiver* target() const { return tgt_; }
    const std::vector<int>& F0() const { return F0_; }
    int map_object(int x) const { return F0_[static_cast<std::size_t>(x)]; }
    int d() const { return d_; }
    int mu() const { return mu_; }
    int lmax() const { return lmax_; }
    int nmax() const { return nmax_; }
    int intrinsic() const { return mu_ + d_ + 1; }
    bool is_structure_shaped() const {
        if (src_ != tgt_) return false;
        for (int i = 0; i < src_->object_count(); ++i)
            if (F0_[static_cast<std::size_t>(i)] != i) return false;
        return true;
    }

    std::vector<FactorRef> type_ins(const MultiType& t) const {
        std::vector<FactorRef> ins;
        for (const auto& g : t)
            for (std::size_t j = 0; j + 1 < g.size(); ++j)
                ins.push_back({&src_->hom(g[j], g[j + 1]), -1});
        return ins;
    }
    std::vector<FactorRef> type_outs(const MultiType& t) const {
        std::vector<FactorRef> outs;
        const std::size_t n = t.size();
        for (std::size_t i = 0; i < n; ++i) {
            int lt = map_object(t[i].front());
            int rt = map_object(t[(i + 1) % n].back());
            outs.push_back({&tgt_->hom(lt, rt), d_});
        }
        return outs;
    }
    MMap make_component(const MultiType& t) const {
        if (!type_valid(t)) throw std::invalid_argument("invalid component type " + type_str(t));
        return MMap(type_ins(t), type_outs(t), intrinsic(), src_->field());
    }

    bool has(const MultiType& t) const {
        auto it = comp_.find(t);
        return it != comp_.end() && !it->second.is_zero();
    }
    const MMap& at(const MultiType& t) const {
        auto it = comp_.find(t);
        if (it == comp_.end()) throw std::invalid_argument("missing component " + type_str(t));
        return it->second;
    }
    MMap& ensure(const MultiType& t) {
        auto it = comp_.find(t);
        if (it == comp_.end()) it = comp_.emplace(t, make_component(t)).first;
        return it->second;
    }
    void set(const MultiType& t, MMap m) { comp_[t] = std::move(m); }
    const std::map<MultiType, MMap>& components() const { return comp_; }
    void prune() {
        for (auto it = comp_.begin(); it != comp_.end();)
            it = it->second.is_zero() ? comp_.erase(it) : std::next(it);
    }

    bool is_zero() const {
        for (const auto& [k, m] : comp_)
            if (!m.is_zero()) return false;
        return true;
    }
    bool equals(const MultiCollection& o) const {
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

    MultiCollection shape_like(int mu) const {
        MultiCollection r(src_, tgt_, F0_, d_, mu, lmax_, nmax_);
        return r;
    }

    void accumulate(const MultiCollection& o, const Scalar& c) {
        for (const auto& [t, m] : o.components()) {
            if (m.is_zero()) continue;
            ensure(t).accumulate(m, c);
        }
        prune();
    }

    // All valid types over a quiver within the bounds, in lexicographic order.
    static std::vector<MultiType> all_types(const DgQuiver& Q, int lmax, int nmax) {
        std::vector<MultiType> out;
        if (Q.object_count() == 0) return out;
        MultiType cur;
        enumerate_types(Q, lmax, nmax, 0, cur, out);
        return out;
    }

private:
    static void enumerate_types(const DgQuiver& Q, int lmax, int nmax, int used, MultiType& cur,
                                std::vector<MultiType>& out) {
        if (!cur.empty() && type_valid(cur)) out.push_back(cur);
        if (static_cast<int>(cur.size()) == lmax) return;
        for (int len = 1; len <= nmax - used; ++len) {
            std::vector<int> g(static_cast<std::size_t>(len), 0);
            while (true) {
                cur.push_back(g);
                enumerate_types(Q, lmax, nmax, used + len, cur, out);
                cur.pop_back();
                int i = len - 1;
                while (i >= 0 && g[static_cast<std::size_t>(i)] == Q.object_count() - 1) {
                    g[static_cast<std::size_t>(i)] = 0;
                    --i;
                }
                if (i < 0) break;
                ++g[static_cast<std::size_t>(i)];
            }
        }
    }

    const DgQuiver* src_;
    const DgQuiver* tgt_;
    std::vector<int> F0_;
    int d_, mu_, lmax_, nmax_;
    std::map<MultiType, MMap> comp_;
};

// View an A-infinity collection (single-output components) as a multi-output
// collection of length-1 types.  Input factors coincide; the output factor is
// reindexed from W[1] to W[−d], which changes no basis indices or entries.
inline MultiCollection embed_multi(const HomCollection& c, int d, int lmax) {
    int mu = c.intrinsic();  // 1 for structures, 0 for morphisms
    MultiCollection r(c.source(), c.target(), c.F0(), d, mu, lmax, c.nmax());
    for (const auto& [tuple, m] : c.components()) {
        if (m.is_zero()) continue;
        MMap& t = r.ensure({tuple});
        for (const auto& [in, row] : m.entries())
            for (const auto& [out, v] : row) t.add(in, out, v);
    }
    return r;
}

// Restrict a multi-output collection to its length-1 part.
inline HomCollection restrict_multi(const MultiCollection& c) {
    HomCollection r(c.source(), c.target(), c.F0(), c.mu(), c.nmax());
    for (const auto& [type, m] : c.components()) {
        if (type.size() != 1 || m.is_zero()) continue;
        MMap& t = r.ensure(type[0]);
        for (const auto& [in, row] : m.entries())
            for (const auto& [out, v] : row) t.add(in, out, v);
    }
    return r;
}

// Generator of the cyclic action on types of length n: the component of the
// rotated element at (x̄¹,...,x̄ⁿ) reads the original component at
// (x̄²,...,x̄ⁿ,x̄¹), moving the last input group to the front (Koszul sign in
// shifted input degrees) and the last output factor to the front (Koszul sign
// in shifted output degrees).
inline MultiCollection cyclic_rotate(const MultiCollection& c) {
    MultiCollection r = c.shape_like(c.mu());
    for (const auto& [rt, m] : c.components()) {
        if (m.is_zero()) continue;
        const std::size_t n = rt.size();
        if (n == 1) {
            r.ensure(rt).accumulate(m, Scalar::one(m.field()));
            continue;
        }
        // rt = (x̄²,...,x̄ⁿ,x̄¹)  ⇒  target type t = (x̄¹, x̄²,...,x̄ⁿ).
        MultiType t;
        t.push_back(rt.back());
        for (std::size_t i = 0; i + 1 < n; ++i) t.push_back(rt[i]);
        MMap& tm = r.ensure(t);
        const std::size_t tail_ins = rt.back().size() - 1;  // inputs of x̄¹'s group
        const std::size_t nin = m.ins().size();
        for (const auto& [in, row] : m.entries()) {
            // Move the last tail_ins input slots to the front.
            std::vector<int> in2;
            in2.reserve(nin);
            for (std::size_t s = nin - tail_ins; s < nin; ++s) in2.push_back(in[s]);
            for (std::size_t s = 0; s + tail_ins < nin; ++s) in2.push_back(in[s]);
            long head = 0, tail = 0;
            for (std::size_t s = 0; s + tail_ins < nin; ++s) head += m.ins()[s].sdeg(in[s]);
            for (std::size_t s = nin - tail_ins; s < nin; ++s) tail += m.ins()[s].sdeg(in[s]);
            int sin = ((head * tail) % 2 == 0) ? 1 : -1;
            for (const auto& [out, v] : row) {
                // Move the last output factor to the front.
                std::vector<int> out2;
                out2.reserve(n);
                out2.push_back(out.back());
                for (std::size_t i = 0; i + 1 < n; ++i) out2.push_back(out[i]);
                long rest = 0;
                for (std::size_t i = 0; i + 1 < n; ++i) rest += m.outs()[i].sdeg(out[i]);
                long last = m.outs()[n - 1].sdeg(out.back());
                int sout = ((rest * last) % 2 == 0) ? 1 : -1;
                Scalar s = v;
                if (sin * sout < 0) s = -s;
                tm.add(in2, out2, s);
            }
        }
    }
    r.prune();
    return r;
}

inline bool is_cyclically_invariant(const MultiCollection& c) {
    return cyclic_rotate(c).equals(c);
}

// Average of each component over its cyclic orbit.  Idempotent; fixes
// invariant collections.  Throws math_error in characteristic p when p
// divides some occurring length.
inline MultiCollection symmetrize(const MultiCollection& c) {
    const std::uint64_t p = c.source()->field();
    int maxlen = 1;
    for (const auto& [t, m] : c.components())
        if (!m.is_zero()) maxlen = std::max(maxlen, type_length(t));
    if (p != 0)
        for (int n = 2; n <= maxlen; ++n)
            if (n % static_cast<int>(p) == 0)
                throw math_error("cannot symmetrize: the characteristic divides a component length");
    MultiCollection sum = c.shape_like(c.mu());
    MultiCollection rot = c;
    for (int k = 0; k < maxlen; ++k) {
        for (const auto& [t, m] : rot.components()) {
            if (m.is_zero()) continue;
            // t^k only contributes to components whose length exceeds k
            // (shorter orbits have already closed up); adding the full power
            // would overcount, so gate on length.
            if (type_length(t) > k) sum.ensure(t).accumulate(m, Scalar::one(m.field()));
        }
        rot = cyclic_rotate(rot);
    }
    MultiCollection r = c.shape_like(c.mu());
    for (const auto& [t, m] : sum.components()) {
        if (m.is_zero()) continue;
        Scalar inv = Scalar::of_int(type_length(t), m.field()).inverse();
        r.ensure(t).accumulate(m, inv);
    }
    r.prune();
    return r;
}

}  // namespace quivhom
