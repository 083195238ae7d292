#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/dg_quiver.hpp"
#include "quivhom/hom_collection.hpp"
#include "quivhom/sparse_matrix.hpp"

namespace quivhom {

// Thrown when a mathematical precondition fails at runtime (nonzero defect,
// unsolvable obstruction, non-invertible component); distinct from
// std::invalid_argument, which signals malformed input.
class math_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int sign_pow(long e) { return (e % 2 == 0) ? 1 : -1; }

// by-output index of a single-output component: out basis index ->
// list of (input tuple, coefficient, shifted input degree sum)
struct ByOut {
    std::map<int, std::vector<std::tuple<std::vector<int>, Scalar, int>>> m;
    static ByOut build(const MMap& c) {
        ByOut b;
        for (const auto& [in, row] : c.entries()) {
            int s = c.in_sdeg(in);
            for (const auto& [out, v] : row) b.m[out[0]].push_back({in, v, s});
        }
        return b;
    }
};

}  // namespace detail

// -------------------------------------------------------------------------
// Gerstenhaber-style insertion sum: component of the result at the composite
// tuple accumulates outer^{(..x_i, x_j..)} ∘ (id ⊗ inner^{(x_i..x_j)} ⊗ id)
// with the Koszul jump sign (−1)^{|inner| · (shifted degrees before the
// insertion slot)}.  inner must be structure-shaped on outer's source quiver.
inline HomCollection insert_sum(const HomCollection& outer, const HomCollection& inner, int nmax) {
    if (inner.source() != outer.source() || !inner.is_structure_shaped())
        throw std::invalid_argument("insert_sum: inner must be a structure on outer's source quiver");
    const std::uint64_t p = outer.source()->field();
    HomCollection R(outer.source(), outer.target(), outer.F0(), outer.intrinsic() + inner.intrinsic(), nmax);
    const Scalar one = Scalar::one(p);
    for (const auto& [ot, O] : outer.components()) {
        const int olen = static_cast<int>(ot.size());
        for (const auto& [it_, I] : inner.components()) {
            const std::vector<int>& zt = it_;
            const int zlen = static_cast<int>(zt.size());
            const int clen = olen + zlen - 2;
            if (clen > nmax) continue;
            detail::ByOut byout = detail::ByOut::build(I);
            for (int slot = 0; slot + 1 < olen; ++slot) {
                if (ot[static_cast<std::size_t>(slot)] != zt.front() ||
                    ot[static_cast<std::size_t>(slot) + 1] != zt.back())
                    continue;
                std::vector<int> ct;
                ct.insert(ct.end(), ot.begin(), ot.begin() + slot + 1);
                ct.insert(ct.end(), zt.begin() + 1, zt.end());
                ct.insert(ct.end(), ot.begin() + slot + 2, ot.end());
                MMap& C = R.ensure(ct);
                for (const auto& [oin, orow] : O.entries()) {
                    auto hit = byout.m.find(oin[static_cast<std::size_t>(slot)]);
                    if (hit == byout.m.end()) continue;
                    int prefix = 0;
                    for (int s = 0; s < slot; ++s)
                        prefix += O.ins()[static_cast<std::size_t>(s)].sdeg(oin[static_cast<std::size_t>(s)]);
                    for (const auto& [iin, ic, isdeg] : hit->second) {
                        (void)isdeg;
                        std::vector<int> cin;
                        cin.insert(cin.end(), oin.begin(), oin.begin() + slot);
                        cin.insert(cin.end(), iin.begin(), iin.end());
                        cin.insert(cin.end(), oin.begin() + slot + 1, oin.end());
                        Scalar sgn = (detail::sign_pow(static_cast<long>(inner.intrinsic()) * prefix) == 1)
                                         ? one
                                         : -one;
                        for (const auto& [oout, oc] : orow) C.add(cin, oout, oc * ic * sgn);
                    }
                }
            }
        }
    }
    R.prune();
    return R;
}

// -------------------------------------------------------------------------
// Block composition: component at x̄ sums, over splittings of the slots of x̄
// into consecutive blocks, outer at the corner-object tuple composed with one
// inner component per block; each block picks up the Koszul jump sign over the
// inputs of the blocks before it.  An optional designated collection fills
// exactly one block (used for the composition with respect to a morphism).
inline HomCollection block_compose_impl(const HomCollection& outer, const HomCollection& inner,
                                        const HomCollection* designated, int nmax) {
    if (inner.target() != outer.source())
        throw std::invalid_argument("block composition: quiver mismatch");
    const DgQuiver& A = *inner.source();
    const std::uint64_t p = A.field();
    const Scalar one = Scalar::one(p);
    std::vector<int> F0c(static_cast<std::size_t>(A.object_count()));
    for (int i = 0; i < A.object_count(); ++i) F0c[static_cast<std::size_t>(i)] = outer.map_object(inner.map_object(i));
    int extra = designated ? designated->intrinsic() - inner.intrinsic() : 0;
    HomCollection R(&A, outer.target(), F0c, outer.intrinsic() + inner.intrinsic() + extra, nmax);

    for (int n = 2; n <= nmax; ++n) {
        for (const auto& xt : HomCollection::all_tuples(A, n)) {
            const int slots = n - 1;
            // iterate over compositions of `slots` into parts >= 1
            std::vector<int> parts;
            std::function<void(int)> rec = [&](int remaining) {
                if (remaining == 0) {
                    const int r = static_cast<int>(parts.size());
                    // corner objects
                    std::vector<int> corners(static_cast<std::size_t>(r) + 1);
                    {
                        int pos = 0;
                        corners[0] = xt[0];
                        for (int t = 0; t < r; ++t) {
                            pos += parts[static_cast<std::size_t>(t)];
                            corners[static_cast<std::size_t>(t) + 1] = xt[static_cast<std::size_t>(pos)];
                        }
                    }
                    std::vector<int> ytuple(corners.size());
                    for (std::size_t i = 0; i < corners.size(); ++i)
                        ytuple[i] = inner.map_object(corners[i]);
                    const int drange = designated ? r : 1;
                    for (int dt = 0; dt < drange; ++dt) {
                        if (!outer.has(ytuple)) continue;
                        const MMap& O = outer.at(ytuple);
                        // block components
                        std::vector<const MMap*> blocks(static_cast<std::size_t>(r), nullptr);
                        bool ok = true;
                        int pos = 0;
                        for (int t = 0; t < r && ok; ++t) {
                            std::vector<int> bt(xt.begin() + pos, xt.begin() + pos + parts[static_cast<std::size_t>(t)] + 1);
                            const HomCollection& filler = (designated && t == dt) ? *designated : inner;
                            if (!filler.has(bt))
                                ok = false;
                            else
                                blocks[static_cast<std::size_t>(t)] = &filler.at(bt);
                            pos += parts[static_cast<std::size_t>(t)];
                        }
                        if (!ok) continue;
                        MMap& C = R.ensure(xt);
                        // convolve block entries, then hit the outer component
                        std::vector<int> cin;
                        std::vector<int> u(static_cast<std::size_t>(r));
                        std::function<void(int, int, Scalar)> conv = [&](int t, int sdeg_before, Scalar coef) {
                            if (t == r) {
                                auto oit = O.entries().find(u);
                                if (oit == O.entries().end()) return;
                                for (const auto& [oout, oc] : oit->second) C.add(cin, oout, coef * oc);
                                return;
                            }
                            const MMap& B = *blocks[static_cast<std::size_t>(t)];
                            const int bi = (designated && t == dt) ? designated->intrinsic() : inner.intrinsic();
                            for (const auto& [bin, brow] : B.entries()) {
                                int bs = B.in_sdeg(bin);
                                Scalar sgn = (detail::sign_pow(static_cast<long>(bi) * sdeg_before) == 1) ? one : -one;
                                std::size_t mark = cin.size();
                                cin.insert(cin.end(), bin.begin(), bin.end());
                                for (const auto& [bout, bc] : brow) {
                                    u[static_cast<std::size_t>(t)] = bout[0];
                                    conv(t + 1, sdeg_before + bs, coef * bc * sgn);
                                }
                                cin.resize(mark);
                            }
                        };
                        conv(0, 0, one);
                    }
                    return;
                }
                for (int part = 1; part <= remaining; ++part) {
                    parts.push_back(part);
                    rec(remaining - part);
                    parts.pop_back();
                }
            };
            rec(slots);
        }
    }
    R.prune();
    return R;
}

inline HomCollection block_compose(const HomCollection& outer, const HomCollection& inner, int nmax) {
    return block_compose_impl(outer, inner, nullptr, nmax);
}

// Composition of a structure (or morphism) with h with respect to F: block
// sums in which exactly one block is filled by h and the rest by F.
inline HomCollection compose_wrt(const HomCollection& m, const HomCollection& h, const HomCollection& F,
                                 int nmax) {
    return block_compose_impl(m, F, &h, nmax);
}

inline HomCollection gerstenhaber_compose(const HomCollection& m, const HomCollection& n, int nmax) {
    return insert_sum(m, n, nmax);
}

inline HomCollection stasheff_defect(const HomCollection& m, int nmax) {
    return insert_sum(m, m, nmax);
}

inline HomCollection compose_M(const HomCollection& mB, const HomCollection& F, int nmax) {
    return block_compose(mB, F, nmax);
}

inline HomCollection compose_morphisms(const HomCollection& G, const HomCollection& F, int nmax) {
    return block_compose(G, F, nmax);
}

inline HomCollection collection_sub(const HomCollection& a, const HomCollection& b) {
    HomCollection r = a;
    const std::uint64_t p = a.source()->field();
    for (const auto& [k, m] : b.components()) {
        if (m.is_zero()) continue;
        r.ensure(k).accumulate(m, -Scalar::one(p));
    }
    r.prune();
    return r;
}

// F ∘_G mA  −  mB ∘_M F ; zero iff (F0, F) is a morphism up to truncation.
inline HomCollection mi_defect(const HomCollection& F, const HomCollection& mA, const HomCollection& mB,
                               int nmax) {
    return collection_sub(insert_sum(F, mA, nmax), block_compose(mB, F, nmax));
}

// Structure report: per-tuple verdicts with the first offending entry.
struct IdentityReport {
    bool ok = true;
    std::vector<std::string> failures;  // human-readable per-tuple diagnostics
};

inline std::string tuple_str(const DgQuiver& Q, const std::vector<int>& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += ",";
        s += Q.object_name(t[i]);
    }
    return s + ")";
}

inline IdentityReport report_zero(const HomCollection& defect) {
    IdentityReport rep;
    for (const auto& [k, m] : defect.components()) {
        if (m.is_zero()) continue;
        rep.ok = false;
        const auto& e = *m.entries().begin();
        std::string msg = "tuple " + tuple_str(*defect.source(), k) + " input (";
        for (std::size_t i = 0; i < e.first.size(); ++i) {
            if (i) msg += ",";
            msg += m.ins()[i].sp->label(e.first[i]);
        }
        msg += ")";
        rep.failures.push_back(msg);
    }
    return rep;
}

inline IdentityReport is_ainf(const HomCollection& m, int nmax) {
    return report_zero(stasheff_defect(m, nmax));
}

// Differential-only structure on a dg quiver: arity-2 components d[1].
inline HomCollection dg_structure(const DgQuiver& A, int nmax) {
    HomCollection m = HomCollection::structure(&A, nmax);
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            const GradedMap& d = A.differential(x, y);
            if (d.is_zero()) continue;
            MMap& c = m.ensure({x, y});
            for (const auto& [s, col] : d.entries())
                for (const auto& [t, v] : col) c.add({s}, {t}, v);
        }
    return m;
}

// A chain map given per hom space as degree-0 graded maps, packaged as the
// arity-2 part of a morphism collection.
inline HomCollection chain_morphism(const DgQuiver& A, const DgQuiver& B, const std::vector<int>& F0,
                                    const std::map<std::pair<int, int>, GradedMap>& f, int nmax) {
    HomCollection F(&A, &B, F0, 0, nmax);
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            auto it = f.find({x, y});
            if (it == f.end() || it->second.is_zero()) continue;
            MMap& c = F.ensure({x, y});
            for (const auto& [s, col] : it->second.entries())
                for (const auto& [t, v] : col) c.add({s}, {t}, v);
        }
    return F;
}

inline HomCollection identity_morphism(const DgQuiver& A, int nmax) {
    std::map<std::pair<int, int>, GradedMap> f;
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y)
            f.emplace(std::make_pair(x, y), GradedMap::identity(&A.hom(x, y), A.field()));
    std::vector<int> id(static_cast<std::size_t>(A.object_count()));
    for (int i = 0; i < A.object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
    return chain_morphism(A, A, id, f, nmax);
}

// Boundary of a single component in the hom complex:
// d_B ∘ F − (−1)^{|F|} Σ_i (−1)^{prefix_i} F ∘ (id ⊗ … d … ⊗ id).
inline MMap hom_complex_boundary(const MMap& F, const std::vector<int>& tuple, const DgQuiver& A,
                                 const DgQuiver& B, const std::vector<int>& F0) {
    const std::uint64_t p = A.field();
    MMap R(F.ins(), F.outs(), F.intrinsic() + 1, p);
    const Scalar one = Scalar::one(p);
    // d_B ∘ F
    const GradedMap& dB = B.differential(F0[static_cast<std::size_t>(tuple.front())],
                                         F0[static_cast<std::size_t>(tuple.back())]);
    for (const auto& [in, row] : F.entries())
        for (const auto& [out, v] : row)
            for (const auto& [t, c] : dB.column(out[0])) R.add(in, {t}, v * c);
    // − (−1)^{|F|} Σ_i F ∘ (d in slot i) with the Koszul jump sign
    const int fs = F.intrinsic();
    for (std::size_t slot = 0; slot + 1 < tuple.size(); ++slot) {
        const GradedMap& dA = A.differential(tuple[slot], tuple[slot + 1]);
        if (dA.is_zero()) continue;
        for (const auto& [s, col] : dA.entries())
            for (const auto& [t, c] : col)
                for (const auto& [in, row] : F.entries()) {
                    if (in[slot] != t) continue;
                    std::vector<int> in2 = in;
                    in2[slot] = s;
                    int prefix = 0;
                    for (std::size_t k = 0; k < slot; ++k) prefix += F.ins()[k].sdeg(in2[k]);
                    Scalar sgn = (detail::sign_pow(static_cast<long>(fs) + prefix) == 1) ? one : -one;
                    for (const auto& [out, v] : row) R.add(in2, out, sgn * (-(v * c)));
                }
    }
    return R;
}

// -------------------------------------------------------------------------
// Inversion of a strict-first-component isomorphism (recursion over arity:
// the top component of (G∘F) isolates G at the full corner tuple against an
// invertible tensor power of the first components).

inline GradedMap invert_graded_iso(const GradedMap& g) {
    if (g.degree() != 0) throw std::invalid_argument("only degree-0 maps can be inverted here");
    const std::uint64_t p = g.field();
    GradedMap inv(g.target(), g.source(), 0, p);
    std::set<int> degs;
    for (int i = 0; i < g.source()->dim(); ++i) degs.insert(g.source()->degree(i));
    for (int i = 0; i < g.target()->dim(); ++i) degs.insert(g.target()->degree(i));
    for (int n : degs) {
        std::vector<int> src_idx, tgt_idx;
        SparseMatrix M = g.degree_block(n, src_idx, tgt_idx);
        if (M.rows() != M.cols()) throw math_error("component not invertible: dimension mismatch");
        RrefResult rr = rref(M);
        if (static_cast<int>(rr.pivot_cols.size()) != M.rows())
            throw math_error("component not invertible: singular block");
        for (int r = 0; r < M.rows(); ++r)
            for (const auto& [c, v] : rr.basis_change.row(r))
                inv.add(tgt_idx[static_cast<std::size_t>(c)], src_idx[static_cast<std::size_t>(r)], v);
    }
    return inv;
}

inline HomCollection invert_morphism(const HomCollection& F, int nmax) {
    const DgQuiver& A = *F.source();
    const DgQuiver& B = *F.target();
    const std::uint64_t p = A.field();
    // F0 must be bijective
    std::vector<int> G0(static_cast<std::size_t>(B.object_count()), -1);
    for (int x = 0; x < A.object_count(); ++x) {
        int y = F.map_object(x);
        if (y < 0 || y >= B.object_count() || G0[static_cast<std::size_t>(y)] != -1)
            throw std::invalid_argument("invert_morphism: object map is not bijective");
        G0[static_cast<std::size_t>(y)] = x;
    }
    for (int y = 0; y < B.object_count(); ++y)
        if (G0[static_cast<std::size_t>(y)] < 0)
            throw std::invalid_argument("invert_morphism: object map is not bijective");

    HomCollection G(&B, &A, G0, 0, nmax);
    // first components: graded inverses
    std::map<std::pair<int, int>, GradedMap> finv;
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            GradedMap g(&A.hom(x, y), &B.hom(F.map_object(x), F.map_object(y)), 0, p);
            if (F.has({x, y}))
                for (const auto& [in, row] : F.at({x, y}).entries())
                    for (const auto& [out, v] : row) g.add(in[0], out[0], v);
            GradedMap gi = invert_graded_iso(g);
            finv.emplace(std::make_pair(F.map_object(x), F.map_object(y)), std::move(gi));
            MMap& c = G.ensure({F.map_object(x), F.map_object(y)});
            for (const auto& [s, col] : finv.at({F.map_object(x), F.map_object(y)}).entries())
                for (const auto& [t, v] : col) c.add({s}, {t}, v);
        }
    for (int n = 3; n <= nmax; ++n) {
        // (G∘F) at arity n must vanish; the only term with the arity-n part of
        // G is G^{F0(x̄)} ∘ (F² ⊗ … ⊗ F²).  Solve for it.
        HomCollection rest = block_compose(G, F, n);
        for (const auto& xt : HomCollection::all_tuples(A, n)) {
            if (!rest.has(xt)) continue;
            MMap r = rest.at(xt);
            // precompose with the inverses of the first components, negate
            for (std::size_t slot = 0; slot + 1 < xt.size(); ++slot)
                r = r.precompose_in(slot, finv.at({F.map_object(xt[slot]), F.map_object(xt[slot + 1])}));
            std::vector<int> yt(xt.size());
            for (std::size_t i = 0; i < xt.size(); ++i) yt[i] = F.map_object(xt[i]);
            MMap& g = G.ensure(yt);
            g.accumulate(r, -Scalar::one(p));
        }
    }
    G.prune();
    return G;
}

// -------------------------------------------------------------------------
// Linear-system plumbing over component spaces.

struct CoordSpace {
    struct Coord {
        std::vector<int> tuple;
        std::vector<int> in;
        std::vector<int> out;
    };
    std::vector<Coord> coords;
    std::map<std::vector<int>, std::map<std::pair<std::vector<int>, std::vector<int>>, int>> index;

    int size() const { return static_cast<int>(coords.size()); }

    // Degree-valid entries of arity-n components of a collection shape.
    static CoordSpace arity(const HomCollection& shape, int n) {
        CoordSpace cs;
        for (const auto& xt : HomCollection::all_tuples(*shape.source(), n)) {
            MMap c = shape.make_component(xt);
            // enumerate input tuples
            std::vector<int> in(c.ins().size(), 0);
            bool any_empty = false;
            for (const auto& f : c.ins())
                if (f.sp->dim() == 0) any_empty = true;
            if (any_empty || c.outs()[0].sp->dim() == 0) continue;
            std::function<void(std::size_t)> rec = [&](std::size_t k) {
                if (k == c.ins().size()) {
                    int is = c.in_sdeg(in);
                    for (int o = 0; o < c.outs()[0].sp->dim(); ++o) {
                        if (c.outs()[0].sdeg(o) != is + c.intrinsic()) continue;
                        cs.index[xt][{in, {o}}] = static_cast<int>(cs.coords.size());
                        cs.coords.push_back({xt, in, {o}});
                    }
                    return;
                }
                for (int i = 0; i < c.ins()[k].sp->dim(); ++i) {
                    in[k] = i;
                    rec(k + 1);
                }
            };
            rec(0);
        }
        return cs;
    }

    std::vector<Scalar> vectorize(const HomCollection& col, std::uint64_t p) const {
        std::vector<Scalar> v(coords.size(), Scalar::zero(p));
        for (const auto& [xt, mp] : index) {
            if (!col.has(xt)) continue;
            const MMap& c = col.at(xt);
            for (const auto& [in, row] : c.entries())
                for (const auto& [out, val] : row) {
                    auto it = mp.find({in, out});
                    if (it == mp.end()) throw std::logic_error("entry outside coordinate space");
                    v[static_cast<std::size_t>(it->second)] = val;
                }
        }
        return v;
    }

    void devectorize(const std::vector<Scalar>& v, HomCollection& col) const {
        for (std::size_t k = 0; k < coords.size(); ++k) {
            if (v[k].is_zero()) continue;
            col.ensure(coords[k].tuple).add(coords[k].in, coords[k].out, v[k]);
        }
    }

    HomCollection unit(const HomCollection& shape, int k) const {
        HomCollection u(shape.source(), shape.target(), shape.F0(), shape.intrinsic(), shape.nmax());
        u.ensure(coords[static_cast<std::size_t>(k)].tuple)
            .add(coords[static_cast<std::size_t>(k)].in, coords[static_cast<std::size_t>(k)].out,
                 Scalar::one(shape.source()->field()));
        return u;
    }
};

// Solve a stacked linear problem: unknowns split into labeled groups, each
// with a shape and a list of linear operators feeding equation groups.
struct StackedSystem {
    std::uint64_t p;
    std::vector<const CoordSpace*> eq_spaces;   // rows, in order
    std::vector<std::vector<Scalar>> rhs;       // −constant per equation group
    // columns: for each unknown group: (coord space, column generator: k -> per-equation-group vectors)
    struct Group {
        const CoordSpace* space;
        std::function<std::vector<std::vector<Scalar>>(int)> column;
    };
    std::vector<Group> groups;

    // Returns the canonical solution per group, or nullopt.
    std::optional<std::vector<std::vector<Scalar>>> solve_canonical() const {
        int rows = 0;
        for (const auto* s : eq_spaces) rows += s->size();
        int cols = 0;
        for (const auto& g : groups) cols += g.space->size();
        SparseMatrix M(rows, cols, p);
        int c0 = 0;
        for (const auto& g : groups) {
            for (int k = 0; k < g.space->size(); ++k) {
                auto colv = g.column(k);
                int r0 = 0;
                for (std::size_t e = 0; e < colv.size(); ++e) {
                    for (std::size_t r = 0; r < colv[e].size(); ++r)
                        if (!colv[e][r].is_zero()) M.add(r0 + static_cast<int>(r), c0 + k, colv[e][r]);
                    r0 += eq_spaces[e]->size();
                }
            }
            c0 += g.space->size();
        }
        std::vector<Scalar> b;
        for (const auto& v : rhs) b.insert(b.end(), v.begin(), v.end());
        auto x = quivhom::solve(M, b);
        if (!x) return std::nullopt;
        std::vector<std::vector<Scalar>> out;
        int o0 = 0;
        for (const auto& g : groups) {
            out.emplace_back(x->begin() + o0, x->begin() + o0 + g.space->size());
            o0 += g.space->size();
        }
        return out;
    }
};

// -------------------------------------------------------------------------
// Homotopy transfer.

struct TransferResult {
    HomCollection structure;  // transferred structure
    HomCollection morphism;   // extending the chain map
};

inline HomCollection restrict_to_arity(const HomCollection& c, int n) {
    HomCollection r(c.source(), c.target(), c.F0(), c.intrinsic(), c.nmax());
    for (const auto& [k, m] : c.components())
        if (static_cast<int>(k.size()) == n && !m.is_zero()) r.set(k, m);
    return r;
}

// f: arity-2 morphism collection A→B (a chain map); mB a structure on B with
// arity-2 components d_B[1].  Builds (mA, F) with mA's arity-2 part d_A[1]
// and F's arity-2 part f, satisfying both identity families up to nmax.
// If `con` is supplied and A has zero differential (f the inclusion of the
// contraction), corrections are taken through (p, h), which reproduces the
// classical tree formulas; otherwise the canonical solver is used.
inline TransferResult transfer_from_target(const HomCollection& f, const HomCollection& mB, int nmax,
                                           const Contraction* con = nullptr) {
    const DgQuiver& A = *f.source();
    const DgQuiver& B = *f.target();
    const std::uint64_t p = A.field();
    HomCollection mA = dg_structure(A, nmax);
    HomCollection F(&A, &B, f.F0(), 0, nmax);
    for (const auto& [k, m] : f.components())
        if (k.size() == 2) F.set(k, m);
    {
        HomCollection d2 = mi_defect(F, mA, mB, 2);
        if (!d2.is_zero()) throw math_error("input is not a chain map");
    }
    const bool use_con = con != nullptr && A.has_zero_differential();

    for (int n = 3; n <= nmax; ++n) {
        HomCollection o = restrict_to_arity(stasheff_defect(mA, n), n);
        HomCollection C = restrict_to_arity(mi_defect(F, mA, mB, n), n);
        if (use_con) {
            if (!o.is_zero()) throw math_error("obstruction does not vanish on the minimal side");
            for (const auto& xt : HomCollection::all_tuples(A, n)) {
                if (!C.has(xt)) continue;
                const MMap& c = C.at(xt);
                int bx = f.map_object(xt.front()), by = f.map_object(xt.back());
                // structure correction −p∘C, morphism component h∘C
                const GradedMap& pr = con->project.at({bx, by});
                const GradedMap& h = con->homotopy.at({bx, by});
                MMap u = c.postcompose_out(0, pr).scaled(-Scalar::one(p));
                mA.set(xt, std::move(u));
                // h has degree −1: compose by hand, intrinsic drops by one
                MMap w(F.make_component(xt));
                for (const auto& [in, row] : c.entries())
                    for (const auto& [out, v] : row)
                        for (const auto& [t, hc] : h.column(out[0])) w.add(in, {t}, -(v * hc));
                F.set(xt, std::move(w));
            }
            // the explicit corrections rely on the side conditions; verify
            if (!restrict_to_arity(mi_defect(F, mA, mB, n), n).is_zero())
                throw math_error("explicit correction failed to close the defect");
        } else {
            HomCollection mshape = HomCollection::structure(&A, nmax);
            HomCollection fshape(&A, &B, f.F0(), 0, nmax);
            CoordSpace U = CoordSpace::arity(mshape, n);
            CoordSpace W = CoordSpace::arity(fshape, n);
            HomCollection si_shape = HomCollection::structure(&A, nmax, 2);
            HomCollection mi_shape(&A, &B, f.F0(), 1, nmax);
            CoordSpace SIrows = CoordSpace::arity(si_shape, n);
            CoordSpace MIrows = CoordSpace::arity(mi_shape, n);
            StackedSystem sys;
            sys.p = p;
            sys.eq_spaces = {&SIrows, &MIrows};
            auto neg = [&](std::vector<Scalar> v) {
                for (auto& s : v) s = -s;
                return v;
            };
            sys.rhs = {neg(SIrows.vectorize(o, p)), neg(MIrows.vectorize(C, p))};
            sys.groups.push_back({&U, [&, n](int k) {
                                      HomCollection u = U.unit(mshape, k);
                                      HomCollection si1 = insert_sum(mA, u, n);
                                      HomCollection si2 = insert_sum(u, mA, n);
                                      HomCollection si = restrict_to_arity(
                                          [&] {
                                              HomCollection s = si1;
                                              for (const auto& [kk, mm] : si2.components())
                                                  if (!mm.is_zero()) s.ensure(kk).accumulate(mm, Scalar::one(p));
                                              return s;
                                          }(),
                                          n);
                                      HomCollection mi = restrict_to_arity(insert_sum(F, u, n), n);
                                      return std::vector<std::vector<Scalar>>{SIrows.vectorize(si, p),
                                                                              MIrows.vectorize(mi, p)};
                                  }});
            sys.groups.push_back({&W, [&, n](int k) {
                                      HomCollection w = W.unit(fshape, k);
                                      HomCollection mi1 = insert_sum(w, mA, n);
                                      HomCollection mi2 = compose_wrt(mB, w, F, n);
                                      HomCollection mi = restrict_to_arity(collection_sub(mi1, mi2), n);
                                      return std::vector<std::vector<Scalar>>{
                                          std::vector<Scalar>(static_cast<std::size_t>(SIrows.size()),
                                                              Scalar::zero(p)),
                                          MIrows.vectorize(mi, p)};
                                  }});
            auto sol = sys.solve_canonical();
            if (!sol) throw math_error("obstruction is not a boundary (input may not be a quasi-isomorphism)");
            U.devectorize((*sol)[0], mA);
            W.devectorize((*sol)[1], F);
        }
    }
    mA.prune();
    F.prune();
    return {std::move(mA), std::move(F)};
}

// Mirror direction: f: A→B chain map, mA a structure on A; builds (mB, F).
// Requires a bijective object map (target components are indexed through it).
inline TransferResult transfer_to_target(const HomCollection& f, const HomCollection& mA, int nmax) {
    const DgQuiver& A = *f.source();
    const DgQuiver& B = *f.target();
    const std::uint64_t p = A.field();
    {
        std::vector<int> seen(static_cast<std::size_t>(B.object_count()), 0);
        for (int x = 0; x < A.object_count(); ++x) seen[static_cast<std::size_t>(f.map_object(x))]++;
        for (int y = 0; y < B.object_count(); ++y)
            if (seen[static_cast<std::size_t>(y)] != 1)
                throw std::invalid_argument("transfer requires a bijective object map");
    }
    HomCollection mB = dg_structure(B, nmax);
    HomCollection F(&A, &B, f.F0(), 0, nmax);
    for (const auto& [k, m] : f.components())
        if (k.size() == 2) F.set(k, m);
    {
        HomCollection d2 = mi_defect(F, mA, mB, 2);
        if (!d2.is_zero()) throw math_error("input is not a chain map");
    }
    for (int n = 3; n <= nmax; ++n) {
        HomCollection oB = restrict_to_arity(stasheff_defect(mB, n), n);
        HomCollection C = restrict_to_arity(mi_defect(F, mA, mB, n), n);
        HomCollection mshapeB = HomCollection::structure(&B, nmax);
        HomCollection fshape(&A, &B, f.F0(), 0, nmax);
        CoordSpace V = CoordSpace::arity(mshapeB, n);
        CoordSpace W = CoordSpace::arity(fshape, n);
        HomCollection siB_shape = HomCollection::structure(&B, nmax, 2);
        HomCollection mi_shape(&A, &B, f.F0(), 1, nmax);
        CoordSpace SIrows = CoordSpace::arity(siB_shape, n);
        CoordSpace MIrows = CoordSpace::arity(mi_shape, n);
        StackedSystem sys;
        sys.p = p;
        sys.eq_spaces = {&SIrows, &MIrows};
        auto neg = [&](std::vector<Scalar> v) {
            for (auto& s : v) s = -s;
            return v;
        };
        sys.rhs = {neg(SIrows.vectorize(oB, p)), neg(MIrows.vectorize(C, p))};
        sys.groups.push_back({&V, [&, n](int k) {
                                  HomCollection v = V.unit(mshapeB, k);
                                  HomCollection si1 = insert_sum(mB, v, n);
                                  HomCollection si2 = insert_sum(v, mB, n);
                                  HomCollection si = restrict_to_arity(
                                      [&] {
                                          HomCollection s = si1;
                                          for (const auto& [kk, mm] : si2.components())
                                              if (!mm.is_zero()) s.ensure(kk).accumulate(mm, Scalar::one(p));
                                          return s;
                                      }(),
                                      n);
                                  HomCollection mi = restrict_to_arity(block_compose(v, F, n), n);
                                  // MI defect subtracts the ∘_M side
                                  return std::vector<std::vector<Scalar>>{
                                      SIrows.vectorize(si, p), neg(MIrows.vectorize(mi, p))};
                              }});
        sys.groups.push_back({&W, [&, n](int k) {
                                  HomCollection w = W.unit(fshape, k);
                                  HomCollection mi1 = insert_sum(w, mA, n);
                                  HomCollection mi2 = compose_wrt(mB, w, F, n);
                                  HomCollection mi = restrict_to_arity(collection_sub(mi1, mi2), n);
                                  return std::vector<std::vector<Scalar>>{
                                      std::vector<Scalar>(static_cast<std::size_t>(SIrows.size()),
                                                          Scalar::zero(p)),
                                      MIrows.vectorize(mi, p)};
                              }});
        auto sol = sys.solve_canonical();
        if (!sol) throw math_error("obstruction is not a boundary (input may not be a quasi-isomorphism)");
        V.devectorize((*sol)[0], mB);
        W.devectorize((*sol)[1], F);
    }
    mB.prune();
    F.prune();
    return {std::move(mB), std::move(F)};
}

// The chain-level inclusion/projection of a contraction, packaged as arity-2
// morphism collections (object maps are identities: the reduced quiver keeps
// the object order of the total one).
inline HomCollection inclusion_morphism(const Contraction& con, int nmax) {
    return chain_morphism(con.reduced, *con.total,
                          [&] {
                              std::vector<int> id(static_cast<std::size_t>(con.reduced.object_count()));
                              for (int i = 0; i < con.reduced.object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
                              return id;
                          }(),
                          con.include, nmax);
}

inline HomCollection projection_morphism(const Contraction& con, int nmax) {
    return chain_morphism(*con.total, con.reduced,
                          [&] {
                              std::vector<int> id(static_cast<std::size_t>(con.total->object_count()));
                              for (int i = 0; i < con.total->object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
                              return id;
                          }(),
                          con.project, nmax);
}

struct MinimalModel {
    std::shared_ptr<Contraction> con;  // owns the reduced quiver
    HomCollection mH;                  // minimal structure on con->reduced
    HomCollection P;                   // morphism (A, mA) -> (H, mH)
};

inline MinimalModel minimal_model(const DgQuiver& A, const HomCollection& mA, int nmax) {
    auto con = std::make_shared<Contraction>(cohomology_contraction(A));
    TransferResult t = transfer_to_target(projection_morphism(*con, nmax), mA, nmax);
    return {std::move(con), std::move(t.structure), std::move(t.morphism)};
}

// Extends the projection of a contraction to a morphism P : (A, mA) → (H, mH)
// against the structure already transferred through the inclusion I, with the
// additional strict normalization P ∘ I = id.  Both conditions are affine in
// the arity-n part of P and are solved stacked.
inline HomCollection extend_projection(const Contraction& con, const HomCollection& mA,
                                       const HomCollection& mH, const HomCollection& I, int nmax) {
    const DgQuiver& A = *con.total;
    const DgQuiver& H = con.reduced;
    const std::uint64_t p = A.field();
    HomCollection P = projection_morphism(con, nmax);
    if (!mi_defect(P, mA, mH, 2).is_zero()) throw math_error("projection is not a chain map");
    HomCollection idH = identity_morphism(H, nmax);
    for (int n = 3; n <= nmax; ++n) {
        HomCollection Cmi = restrict_to_arity(mi_defect(P, mA, mH, n), n);
        HomCollection Cpi = restrict_to_arity(block_compose(P, I, n), n);
        HomCollection wshape(&A, &H, P.F0(), 0, nmax);
        CoordSpace W = CoordSpace::arity(wshape, n);
        HomCollection mi_shape(&A, &H, P.F0(), 1, nmax);
        HomCollection pi_shape = HomCollection::structure(&H, nmax, 0);
        CoordSpace MIrows = CoordSpace::arity(mi_shape, n);
        CoordSpace PIrows = CoordSpace::arity(pi_shape, n);
        StackedSystem sys;
        sys.p = p;
        sys.eq_spaces = {&MIrows, &PIrows};
        auto neg = [&](std::vector<Scalar> v) {
            for (auto& s : v) s = -s;
            return v;
        };
        sys.rhs = {neg(MIrows.vectorize(Cmi, p)), neg(PIrows.vectorize(Cpi, p))};
        sys.groups.push_back({&W, [&, n](int k) {
                                  HomCollection w = W.unit(wshape, k);
                                  HomCollection mi = restrict_to_arity(
                                      collection_sub(insert_sum(w, mA, n), compose_wrt(mH, w, P, n)), n);
                                  HomCollection pi = restrict_to_arity(block_compose(w, I, n), n);
                                  return std::vector<std::vector<Scalar>>{MIrows.vectorize(mi, p),
                                                                          PIrows.vectorize(pi, p)};
                              }});
        auto sol = sys.solve_canonical();
        if (!sol) throw math_error("projection cannot be normalized against the inclusion");
        W.devectorize((*sol)[0], P);
    }
    P.prune();
    return P;
}

// One transferred structure per quiver, with the inclusion extended through
// the homotopy and the projection normalized so that P ∘ I is the strict
// identity; this normalization is what makes the quasi-inverse composites
// below equal the identity exactly rather than up to homotopy.
struct CohomologySetup {
    std::shared_ptr<Contraction> con;
    HomCollection mH;  // structure on con->reduced
    HomCollection I;   // (H, mH) -> (A, mA)
    HomCollection P;   // (A, mA) -> (H, mH), P ∘ I = id
};

inline CohomologySetup cohomology_setup(const DgQuiver& A, const HomCollection& mA, int nmax) {
    auto con = std::make_shared<Contraction>(cohomology_contraction(A));
    TransferResult t = transfer_from_target(inclusion_morphism(*con, nmax), mA, nmax, con.get());
    HomCollection P = extend_projection(*con, mA, t.structure, t.morphism, nmax);
    return {std::move(con), std::move(t.structure), std::move(t.morphism), std::move(P)};
}

// H(F) = P_B ∘ F ∘ I_A between the transferred structures.
inline HomCollection induced_on_cohomology(const HomCollection& F, const CohomologySetup& SA,
                                           const CohomologySetup& SB, int nmax) {
    return compose_morphisms(SB.P, compose_morphisms(F, SA.I, nmax), nmax);
}

struct QuasiInverseResult {
    CohomologySetup SA, SB;
    HomCollection HF;  // induced morphism (H(A), mHA) -> (H(B), mHB)
    HomCollection K;   // its inverse
    HomCollection G;   // quasi-inverse (B, mB) -> (A, mA)
};

inline QuasiInverseResult quasi_inverse(const HomCollection& F, const HomCollection& mA,
                                        const HomCollection& mB, int nmax) {
    CohomologySetup SA = cohomology_setup(*F.source(), mA, nmax);
    CohomologySetup SB = cohomology_setup(*F.target(), mB, nmax);
    HomCollection HF = induced_on_cohomology(F, SA, SB, nmax);
    HomCollection K = invert_morphism(HF, nmax);
    HomCollection G = compose_morphisms(SA.I, compose_morphisms(K, SB.P, nmax), nmax);
    return {std::move(SA), std::move(SB), std::move(HF), std::move(K), std::move(G)};
}

}  // namespace quivhom
