#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "quivhom/precy.hpp"
#include "quivhom/sparse_matrix.hpp"

namespace quivhom {
namespace testkit {

// Deterministic 64-bit generator (SplitMix64); identical seeds give identical
// artifacts on every platform.
struct SplitMix64 {
    std::uint64_t s;
    explicit SplitMix64(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
    int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
    bool chance(int num, int den) { return static_cast<int>(below(static_cast<std::uint64_t>(den))) < num; }
};

struct GenParams {
    int object_count = 2;
    int max_dim = 2;
    int deg_lo = -1, deg_hi = 1;
    int density_num = 1, density_den = 2;  // inclusion probability of admissible entries
    std::uint64_t p = 0;                   // field characteristic (0 = rationals)
};

inline Scalar random_scalar(SplitMix64& rng, std::uint64_t p) {
    if (p == 0) return Scalar::of_int(rng.range(-3, 3) >= 0 ? rng.range(1, 3) : -rng.range(1, 3), 0);
    return Scalar::of_int(rng.range(1, static_cast<int>(p) - 1), p);
}

// Random graded hom spaces plus a differential built from disjoint matched
// basis pairs (e, e') with |e'| = |e| + 1, d e = c e', d e' = 0; this is the
// triangular-nilpotent construction, so d^2 = 0 holds by design.
inline DgQuiver random_dg_quiver(SplitMix64& rng, const GenParams& gp) {
    DgQuiver Q(gp.p);
    for (int i = 0; i < gp.object_count; ++i) Q.add_object("o" + std::to_string(i));
    for (int x = 0; x < gp.object_count; ++x)
        for (int y = 0; y < gp.object_count; ++y) {
            int dim = rng.range(0, gp.max_dim);
            GradedSpace& h = Q.hom(x, y);
            for (int k = 0; k < dim; ++k)
                h.add("e" + std::to_string(x) + std::to_string(y) + "_" + std::to_string(k),
                      rng.range(gp.deg_lo, gp.deg_hi));
            if (dim == 0) continue;
            GradedMap dm(&h, &h, 1, gp.p);
            std::vector<char> used(static_cast<std::size_t>(dim), 0);
            for (int i = 0; i < dim; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                for (int j = 0; j < dim; ++j) {
                    if (j == i || used[static_cast<std::size_t>(j)]) continue;
                    if (h.degree(j) != h.degree(i) + 1) continue;
                    if (!rng.chance(1, 2)) continue;
                    dm.add(i, j, random_scalar(rng, gp.p));
                    used[static_cast<std::size_t>(i)] = used[static_cast<std::size_t>(j)] = 1;
                    break;
                }
            }
            if (!dm.is_zero()) Q.set_differential(x, y, std::move(dm));
        }
    return Q;
}

// Fill a component with random admissible (degree-homogeneous) entries.
inline void random_fill(MMap& m, SplitMix64& rng, int num, int den) {
    std::vector<int> dims;
    for (const auto& f : m.ins()) dims.push_back(f.sp->dim());
    for (const auto& f : m.outs()) dims.push_back(f.sp->dim());
    for (int d : dims)
        if (d == 0) return;
    std::vector<int> idx(dims.size(), 0);
    const std::size_t nin = m.ins().size();
    while (true) {
        std::vector<int> in(idx.begin(), idx.begin() + static_cast<long>(nin));
        std::vector<int> out(idx.begin() + static_cast<long>(nin), idx.end());
        if (m.out_sdeg(out) == m.in_sdeg(in) + m.intrinsic() && rng.chance(num, den))
            m.add(in, out, random_scalar(rng, m.field()));
        std::size_t k = 0;
        while (k < dims.size() && ++idx[k] == dims[k]) idx[k++] = 0;
        if (k == dims.size()) break;
    }
}

inline std::vector<std::vector<int>> all_tuples(int objects, int len) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(static_cast<std::size_t>(len), 0);
    while (true) {
        out.push_back(t);
        int i = len - 1;
        while (i >= 0 && t[static_cast<std::size_t>(i)] == objects - 1) t[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
        ++t[static_cast<std::size_t>(i)];
    }
    return out;
}

inline HomCollection random_hom_collection(const DgQuiver* A, const DgQuiver* B, std::vector<int> F0,
                                           int intrinsic, int nmax, SplitMix64& rng,
                                           const GenParams& gp) {
    HomCollection c(A, B, std::move(F0), intrinsic, nmax);
    for (int len = 2; len <= nmax; ++len)
        for (const auto& tuple : all_tuples(A->object_count(), len)) {
            MMap m = c.make_component(tuple);
            random_fill(m, rng, gp.density_num, gp.density_den);
            if (!m.is_zero()) c.set(tuple, std::move(m));
        }
    return c;
}

inline HomCollection random_ainf_shaped(const DgQuiver& A, int intrinsic, int nmax, SplitMix64& rng,
                                        const GenParams& gp) {
    std::vector<int> id(static_cast<std::size_t>(A.object_count()));
    for (int i = 0; i < A.object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
    return random_hom_collection(&A, &A, std::move(id), intrinsic, nmax, rng, gp);
}

// Random multi-output collection; structures (mu = 1 on one quiver) are
// symmetrized so they sit in the cyclic-invariant subcomplex.
inline MultiCollection random_multi_collection(const DgQuiver* A, const DgQuiver* B,
                                               std::vector<int> F0, int d, int mu, int lmax,
                                               int nmax, SplitMix64& rng, const GenParams& gp,
                                               bool symmetrized) {
    MultiCollection c(A, B, std::move(F0), d, mu, lmax, nmax);
    for (const auto& t : MultiCollection::all_types(*A, lmax, nmax)) {
        MMap m = c.make_component(t);
        random_fill(m, rng, gp.density_num, gp.density_den);
        if (!m.is_zero()) c.set(t, std::move(m));
    }
    c.prune();
    return symmetrized ? symmetrize(c) : c;
}

inline MultiCollection random_multi_structure(const DgQuiver& A, int d, int mu, int lmax, int nmax,
                                              SplitMix64& rng, const GenParams& gp) {
    std::vector<int> id(static_cast<std::size_t>(A.object_count()));
    for (int i = 0; i < A.object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
    return random_multi_collection(&A, &A, std::move(id), d, mu, lmax, nmax, rng, gp, mu % 2 == 1);
}

// Random path dg-quiver with genuine products: hom bases are the paths of
// length 1..word_cap through randomly chosen generator arrows, the binary
// product is concatenation (paths longer than the cap are dropped — length is
// additive, so truncation preserves associativity), and the differential
// matches generator pairs and extends by the Leibniz rule.
struct PathDga {
    std::shared_ptr<DgQuiver> Q;
    HomCollection m;  // structure with arity-2 products and the differential
};

inline PathDga random_path_dga(SplitMix64& rng, const GenParams& gp, int gen_count, int word_cap,
                               int nmax) {
    auto Q = std::make_shared<DgQuiver>(gp.p);
    for (int i = 0; i < gp.object_count; ++i) Q->add_object("o" + std::to_string(i));
    struct Gen {
        int src, tgt, deg;
        std::string name;
    };
    std::vector<Gen> gens;
    for (int g = 0; g < gen_count; ++g)
        gens.push_back({rng.range(0, gp.object_count - 1), rng.range(0, gp.object_count - 1),
                        rng.range(gp.deg_lo, gp.deg_hi), std::string(1, static_cast<char>('a' + g))});
    // Differential on generators: match disjoint parallel pairs of adjacent degree.
    std::vector<int> dpair(gens.size(), -1);
    std::vector<Scalar> dcoef(gens.size(), Scalar::zero(gp.p));
    std::vector<char> used(gens.size(), 0);
    for (std::size_t i = 0; i < gens.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t j = 0; j < gens.size(); ++j) {
            if (j == i || used[j]) continue;
            if (gens[j].src != gens[i].src || gens[j].tgt != gens[i].tgt) continue;
            if (gens[j].deg != gens[i].deg + 1) continue;
            if (!rng.chance(1, 2)) continue;
            dpair[i] = static_cast<int>(j);
            dcoef[i] = random_scalar(rng, gp.p);
            used[i] = used[j] = 1;
            break;
        }
    }
    // Enumerate composable words up to the cap.
    struct Word {
        std::vector<int> gs;
        int src, tgt, deg;
        std::string label;
    };
    std::vector<Word> words;
    std::vector<Word> frontier;
    for (std::size_t g = 0; g < gens.size(); ++g)
        frontier.push_back({{static_cast<int>(g)}, gens[g].src, gens[g].tgt, gens[g].deg, gens[g].name});
    for (int len = 1; len <= word_cap; ++len) {
        for (const auto& w : frontier) words.push_back(w);
        std::vector<Word> nxt;
        if (len == word_cap) break;
        for (const auto& w : frontier)
            for (std::size_t g = 0; g < gens.size(); ++g)
                if (gens[g].src == w.tgt) {
                    Word w2 = w;
                    w2.gs.push_back(static_cast<int>(g));
                    w2.tgt = gens[g].tgt;
                    w2.deg += gens[g].deg;
                    w2.label += gens[g].name;
                    nxt.push_back(w2);
                }
        frontier = std::move(nxt);
    }
    std::map<std::string, int> widx;
    for (std::size_t w = 0; w < words.size(); ++w) {
        Q->hom(words[w].src, words[w].tgt).add(words[w].label, words[w].deg);
        widx[words[w].label] = static_cast<int>(w);
    }
    HomCollection m = HomCollection::structure(Q.get(), nmax);
    // Differential: Leibniz extension of the generator matching; the sign for
    // replacing generator k inside a word is (-1)^{degree of the prefix}.
    for (int x = 0; x < gp.object_count; ++x)
        for (int y = 0; y < gp.object_count; ++y) {
            const GradedSpace& h = Q->hom(x, y);
            if (h.dim() == 0) continue;
            GradedMap dm(&h, &h, 1, gp.p);
            for (const auto& w : words) {
                if (w.src != x || w.tgt != y) continue;
                int prefix = 0;
                for (std::size_t k = 0; k < w.gs.size(); ++k) {
                    int g = w.gs[k];
                    if (dpair[static_cast<std::size_t>(g)] >= 0) {
                        std::string lbl;
                        for (std::size_t t = 0; t < w.gs.size(); ++t)
                            lbl += (t == k) ? gens[static_cast<std::size_t>(
                                                  dpair[static_cast<std::size_t>(g)])].name
                                            : gens[static_cast<std::size_t>(w.gs[t])].name;
                        Scalar c = dcoef[static_cast<std::size_t>(g)];
                        if (prefix % 2 != 0) c = -c;
                        dm.add(h.index(w.label), h.index(lbl), c);
                    }
                    prefix += gens[static_cast<std::size_t>(w.gs[k])].deg;
                }
            }
            if (!dm.is_zero()) Q->set_differential(x, y, std::move(dm));
        }
    // m1 = differential, m2 = concatenation read through the shift: the
    // stored arity-2 entry for (a, b) -> ab carries the sign (-1)^{|a|}.
    for (int x = 0; x < Q->object_count(); ++x)
        for (int y = 0; y < Q->object_count(); ++y) {
            const GradedMap& dxy = Q->differential(x, y);
            if (dxy.is_zero()) continue;
            MMap& c1 = m.ensure({x, y});
            for (const auto& [i, col] : dxy.entries())
                for (const auto& [j, v] : col) c1.add({i}, {j}, v);
        }
    for (const auto& wa : words)
        for (const auto& wb : words) {
            if (wa.tgt != wb.src) continue;
            if (static_cast<int>(wa.gs.size() + wb.gs.size()) > word_cap) continue;
            const GradedSpace& ha = Q->hom(wa.src, wa.tgt);
            const GradedSpace& hb = Q->hom(wb.src, wb.tgt);
            const GradedSpace& hc = Q->hom(wa.src, wb.tgt);
            MMap& c2 = m.ensure({wa.src, wa.tgt, wb.tgt});
            Scalar s = Scalar::one(gp.p);
            if (wa.deg % 2 != 0) s = -s;
            c2.add({ha.index(wa.label), hb.index(wb.label)}, {hc.index(wa.label + wb.label)}, s);
        }
    m.prune();
    return {std::move(Q), std::move(m)};
}

// Kernel basis of a sparse matrix (free columns parametrized, deterministic).
inline std::vector<std::vector<Scalar>> kernel_basis(const SparseMatrix& A) {
    const std::uint64_t p = A.field();
    RrefResult rr = rref(A);
    std::vector<char> is_pivot(static_cast<std::size_t>(A.cols()), 0);
    for (int c : rr.pivot_cols) is_pivot[static_cast<std::size_t>(c)] = 1;
    std::vector<std::vector<Scalar>> out;
    for (int f = 0; f < A.cols(); ++f) {
        if (is_pivot[static_cast<std::size_t>(f)]) continue;
        std::vector<Scalar> v(static_cast<std::size_t>(A.cols()), Scalar::zero(p));
        v[static_cast<std::size_t>(f)] = Scalar::one(p);
        for (int r = 0; r < static_cast<int>(rr.pivot_cols.size()); ++r) {
            Scalar c = rr.R.get(r, f);
            if (!c.is_zero())
                v[static_cast<std::size_t>(rr.pivot_cols[static_cast<std::size_t>(r)])] = -c;
        }
        out.push_back(std::move(v));
    }
    return out;
}

// --- reference diagram evaluator ---------------------------------------

// Slow element-wise oracle: for each consistent choice of stored entries it
// recomputes the sign by explicit adjacent transpositions of the leg word
// (move each disc's inputs one position at a time toward the gathering
// point), rather than by a single permutation sign.  No batched reuse.
inline MMap reference_evaluate_diagram(const Diagram& dg) {
    validate_diagram(dg);
    std::vector<FactorRef> ins(static_cast<std::size_t>(dg.n_ext_in));
    std::uint64_t p = 0;
    int intr = 0;
    for (std::size_t t = 0; t < dg.discs.size(); ++t) {
        p = dg.discs[t].comp->field();
        intr += dg.discs[t].comp->intrinsic();
        for (std::size_t s = 0; s < dg.in_src[t].size(); ++s)
            if (dg.in_src[t][s].disc == -1)
                ins[static_cast<std::size_t>(dg.in_src[t][s].idx)] = dg.discs[t].comp->ins()[s];
    }
    intr -= diagram_internal_edges(dg) * (dg.d + 1);
    std::vector<FactorRef> outs;
    for (const auto& s : dg.out_order)
        outs.push_back(dg.discs[static_cast<std::size_t>(s.disc)].comp->outs()[static_cast<std::size_t>(s.idx)]);
    MMap result(std::move(ins), std::move(outs), intr, p);

    struct Leg {
        Diagram::Src key;
        long deg;
    };
    std::vector<std::vector<int>> cin(dg.discs.size()), cout(dg.discs.size());
    std::vector<int> ext(static_cast<std::size_t>(dg.n_ext_in), -1);

    auto evaluate_choice = [&](const Scalar& coeff) {
        std::vector<Leg> word;
        for (int e = 0; e < dg.n_ext_in; ++e) {
            // Degree of the external leg: the consuming slot's shifted degree.
            long deg = 0;
            for (std::size_t t = 0; t < dg.discs.size(); ++t)
                for (std::size_t s = 0; s < dg.in_src[t].size(); ++s)
                    if (dg.in_src[t][s].disc == -1 && dg.in_src[t][s].idx == e)
                        deg = dg.discs[t].comp->ins()[s].sdeg(cin[t][s]);
            word.push_back({{-1, e}, deg});
        }
        long sgn = 0;
        auto swap_adj = [&](std::size_t i) {
            sgn += word[i].deg * word[i + 1].deg;
            std::swap(word[i], word[i + 1]);
        };
        for (std::size_t t = 0; t < dg.discs.size(); ++t) {
            const MMap& c = *dg.discs[t].comp;
            const std::size_t nin = c.ins().size();
            std::size_t anchor;
            if (nin == 0) {
                anchor = word.size();
                for (const auto& l : word) sgn += static_cast<long>(dg.discs[t].mu) * l.deg;
            } else {
                auto find_pos = [&](const Diagram::Src& k) {
                    for (std::size_t i = 0; i < word.size(); ++i)
                        if (word[i].key == k) return i;
                    throw std::invalid_argument("reference: input leg missing");
                };
                anchor = find_pos(dg.in_src[t][0]);
                for (std::size_t s = 1; s < nin; ++s)
                    anchor = std::min(anchor, find_pos(dg.in_src[t][s]));
                // Bubble each required leg into position anchor + s.
                for (std::size_t s = 0; s < nin; ++s) {
                    std::size_t cur = find_pos(dg.in_src[t][s]);
                    while (cur > anchor + s) {
                        swap_adj(cur - 1);
                        --cur;
                    }
                    while (cur < anchor + s) {
                        swap_adj(cur);
                        ++cur;
                    }
                }
                long left = 0;
                for (std::size_t i = 0; i < anchor; ++i) left += word[i].deg;
                sgn += static_cast<long>(dg.discs[t].mu) * left;
            }
            std::vector<Leg> nw(word.begin(), word.begin() + static_cast<long>(anchor));
            for (std::size_t o = 0; o < c.outs().size(); ++o)
                nw.push_back({{static_cast<int>(t), static_cast<int>(o)}, c.outs()[o].sdeg(cout[t][o])});
            for (std::size_t i = anchor + nin; i < word.size(); ++i) nw.push_back(word[i]);
            word = std::move(nw);
        }
        // Bubble outputs into the declared boundary order.
        for (std::size_t target = 0; target < dg.out_order.size(); ++target) {
            std::size_t cur = target;
            while (!(word[cur].key == dg.out_order[target])) ++cur;
            while (cur > target) {
                swap_adj(cur - 1);
                --cur;
            }
        }
        std::vector<int> eout;
        for (const auto& s : dg.out_order)
            eout.push_back(cout[static_cast<std::size_t>(s.disc)][static_cast<std::size_t>(s.idx)]);
        Scalar v = coeff;
        if (sgn % 2 != 0) v = -v;
        result.add(ext, eout, v);
    };

    auto rec = [&](auto&& self, std::size_t t, Scalar coeff) -> void {
        if (t == dg.discs.size()) {
            evaluate_choice(coeff);
            return;
        }
        for (const auto& [in, row] : dg.discs[t].comp->entries()) {
            bool ok = true;
            for (std::size_t s = 0; s < in.size() && ok; ++s) {
                const auto& src = dg.in_src[t][s];
                if (src.disc != -1 &&
                    cout[static_cast<std::size_t>(src.disc)][static_cast<std::size_t>(src.idx)] != in[s])
                    ok = false;
            }
            if (!ok) continue;
            cin[t] = in;
            for (std::size_t s = 0; s < in.size(); ++s)
                if (dg.in_src[t][s].disc == -1) ext[static_cast<std::size_t>(dg.in_src[t][s].idx)] = in[s];
            for (const auto& [out, v] : row) {
                cout[t] = out;
                self(self, t + 1, coeff * v);
            }
        }
    };
    rec(rec, 0, Scalar::one(p));
    return result;
}

// Recompute a family operation with the reference evaluator.
inline MultiCollection reference_op(const MultiCollection& shape_like_result,
                                    const std::function<void(const neck::DiagramSink&)>& driver) {
    MultiCollection r = shape_like_result;
    driver([&r](const MultiType& t, const Diagram& dg) {
        if (!type_valid(t) || type_length(t) > r.lmax() || type_size(t) > r.nmax()) return;
        MMap val = reference_evaluate_diagram(dg);
        if (val.is_zero()) return;
        r.ensure(t).accumulate(val, Scalar::one(val.field()));
    });
    r.prune();
    return r;
}

// A structure satisfying the Maurer-Cartan equation exactly: the embedded
// differential plus a random cyclically invariant top-length cocycle (whose
// self-gluings exceed the length bound, so only closedness is needed).
inline MultiCollection random_pcy_structure(const DgQuiver& A, int d, int lmax, int nmax,
                                            SplitMix64& rng) {
    MultiCollection M = dg_pcy_structure(A, d, lmax, nmax);
    if (lmax < 2) return M;
    const std::uint64_t p = A.field();
    MultiCollection mshape = MultiCollection::structure(&A, d, lmax, nmax, 1);
    MultiCollection si_shape = MultiCollection::structure(&A, d, lmax, nmax, 2);
    MultiCoordSpace cols = MultiCoordSpace::length(mshape, lmax);
    MultiCoordSpace rows = MultiCoordSpace::length(si_shape, lmax);
    if (cols.size() == 0) return M;
    SparseMatrix mat(rows.size(), cols.size(), p);
    for (int k = 0; k < cols.size(); ++k) {
        MultiCollection u = orbit_sum(cols.unit(mshape, k));
        MultiCollection b = necklace_compose(M, u);
        b.accumulate(necklace_compose(u, M), Scalar::one(p));
        auto v = rows.vectorize(restrict_length(b, lmax), p);
        for (std::size_t r = 0; r < v.size(); ++r)
            if (!v[r].is_zero()) mat.add(static_cast<int>(r), k, v[r]);
    }
    auto ker = kernel_basis(mat);
    for (const auto& kv : ker) {
        Scalar c = random_scalar(rng, p);
        if (c.is_zero()) continue;
        for (int k = 0; k < cols.size(); ++k) {
            Scalar ck = kv[static_cast<std::size_t>(k)] * c;
            if (!ck.is_zero()) M.accumulate(orbit_sum(cols.unit(mshape, k)), ck);
        }
    }
    M.prune();
    return M;
}

// A quiver isomorphic to A (same graded hom spaces, differential conjugated
// by a random invertible degree-0 change of basis) together with the chain
// isomorphism A → B.
struct TwistedQuiver {
    std::shared_ptr<DgQuiver> B;
    HomCollection f;  // chain iso A -> *B (arity-2 collection)
};

inline TwistedQuiver random_twisted_quiver(const DgQuiver& A, int nmax, SplitMix64& rng) {
    const std::uint64_t p = A.field();
    auto B = std::make_shared<DgQuiver>(p);
    for (int x = 0; x < A.object_count(); ++x) B->add_object(A.object_name(x));
    std::map<std::pair<int, int>, GradedMap> phi;
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            const GradedSpace& V = A.hom(x, y);
            GradedSpace& W = B->hom(x, y);
            for (int i = 0; i < V.dim(); ++i) W.add(V.label(i) + "t", V.degree(i));
        }
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            const GradedSpace& V = A.hom(x, y);
            // unit triangular in each degree block: invertible over any field
            GradedMap g(&V, &B->hom(x, y), 0, p);
            for (int i = 0; i < V.dim(); ++i) {
                g.add(i, i, Scalar::one(p));
                for (int j = i + 1; j < V.dim(); ++j)
                    if (V.degree(j) == V.degree(i) && rng.range(0, 2) == 0)
                        g.add(i, j, random_scalar(rng, p));
            }
            phi.emplace(std::make_pair(x, y), std::move(g));
        }
    for (int x = 0; x < A.object_count(); ++x)
        for (int y = 0; y < A.object_count(); ++y) {
            const GradedMap& g = phi.at({x, y});
            GradedMap ginv = invert_graded_iso(g);
            // d_B = phi ∘ d_A ∘ phi^{-1}
            GradedMap dB = g.compose(A.differential(x, y)).compose(ginv);
            B->set_differential(x, y, std::move(dB));
        }
    std::vector<int> id(static_cast<std::size_t>(A.object_count()));
    for (int i = 0; i < A.object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
    HomCollection f = chain_morphism(A, *B, id, phi, nmax);
    return {std::move(B), std::move(f)};
}

// --- identity suites ----------------------------------------------------

struct SuiteReport {
    bool ok = true;
    std::vector<std::string> failures;
    void check(bool cond, const std::string& what, std::uint64_t seed) {
        if (!cond) {
            ok = false;
            failures.push_back("seed " + std::to_string(seed) + ": " + what);
        }
    }
};

// Arity-graded identities for single-output collections (arbitrary inputs of
// the correct degrees; no structure equations assumed).
inline void run_ainf_identity_suite(std::uint64_t seed, int nmax, SuiteReport& rep,
                                    const GenParams& gp0 = GenParams{}) {
    SplitMix64 rng(seed);
    GenParams gp = gp0;
    DgQuiver A = random_dg_quiver(rng, gp);
    DgQuiver B = random_dg_quiver(rng, gp);
    std::vector<int> F0;
    for (int i = 0; i < gp.object_count; ++i)
        F0.push_back(rng.range(0, gp.object_count - 1));
    HomCollection mA = random_ainf_shaped(A, 1, nmax, rng, gp);
    HomCollection F = random_hom_collection(&A, &B, F0, 0, nmax, rng, gp);
    HomCollection mBr = random_ainf_shaped(B, 1, nmax, rng, gp);

    // Pre-Lie associator symmetry for odd elements.
    HomCollection lhs = insert_sum(mA, insert_sum(mA, mA, nmax), nmax);
    HomCollection rhs = insert_sum(insert_sum(mA, mA, nmax), mA, nmax);
    rep.check(lhs.equals(rhs), "arity associativity (structure side)", seed);

    // (mB ∘_M F) ∘_G mA = mB ∘_M-wrt-F (F ∘_G mA).
    HomCollection l2 = insert_sum(block_compose(mBr, F, nmax), mA, nmax);
    HomCollection r2 = compose_wrt(mBr, insert_sum(F, mA, nmax), F, nmax);
    rep.check(l2.equals(r2), "arity associativity (mixed)", seed);

    // F ∘_G (mA ∘_G mA) = defect ∘_G mA + mB ∘_M-wrt-F defect  for mB with
    // vanishing structure defect (here: the dg structure of B).
    HomCollection mB = dg_structure(B, nmax);
    HomCollection D = mi_defect(F, mA, mB, nmax);
    HomCollection l3 = insert_sum(F, insert_sum(mA, mA, nmax), nmax);
    HomCollection diff = collection_sub(collection_sub(l3, insert_sum(D, mA, nmax)),
                                        compose_wrt(mB, D, F, nmax));
    rep.check(diff.is_zero(), "arity second identity", seed);
}

// Necklace-level identities for multi-output collections.
inline void run_pcy_identity_suite(std::uint64_t seed, int d, int lmax, int nmax, SuiteReport& rep,
                                   const GenParams& gp0 = GenParams{}) {
    SplitMix64 rng(seed);
    GenParams gp = gp0;
    DgQuiver A = random_dg_quiver(rng, gp);
    DgQuiver B = random_dg_quiver(rng, gp);
    std::vector<int> F0;
    for (int i = 0; i < gp.object_count; ++i)
        F0.push_back(rng.range(0, gp.object_count - 1));
    MultiCollection MA = random_multi_structure(A, d, 1, lmax, nmax, rng, gp);
    MultiCollection F =
        random_multi_collection(&A, &B, F0, d, 0, lmax, nmax, rng, gp, true);
    MultiCollection MBr = random_multi_structure(B, d, 1, lmax, nmax, rng, gp);

    // Pre-Lie associator symmetry for the necklace product, odd M.
    MultiCollection lhs = necklace_compose(MA, necklace_compose(MA, MA));
    MultiCollection rhs = necklace_compose(necklace_compose(MA, MA), MA);
    rep.check(lhs.equals(rhs), "necklace associativity (structure side)", seed);

    // (MB ∘_pre F) ∘^upper_F MA = MB ∘^lower_F (F ∘_multinec MA).
    MultiCollection l2 = upper_compose(pre_compose(MBr, F), MA, F);
    MultiCollection r2 = lower_compose(MBr, multinec_compose(F, MA), F);
    rep.check(l2.equals(r2), "necklace associativity (mixed, target)", seed);

    // (F ∘_multinec MA) ∘^upper_F MA = F ∘_multinec (MA ∘_nec MA).
    MultiCollection l3 = upper_compose(multinec_compose(F, MA), MA, F);
    MultiCollection r3 = multinec_compose(F, necklace_compose(MA, MA));
    rep.check(l3.equals(r3), "necklace associativity (mixed, source)", seed);

    // Second identity, for MB with vanishing structure defect.
    MultiCollection MB = embed_multi(dg_structure(B, nmax), d, lmax);
    MultiCollection D = pcy_mi_defect(F, MA, MB);
    MultiCollection l4 = multinec_compose(F, necklace_compose(MA, MA));
    MultiCollection r4 = upper_compose(D, MA, F);
    r4.accumulate(lower_compose(MB, D, F), Scalar::one(A.field()));
    r4.prune();
    rep.check(l4.equals(r4), "necklace second identity", seed);
}

inline SuiteReport run_identity_suite(int seeds, int nmax_ainf, int d, int lmax, int nmax_pcy,
                                      std::uint64_t p = 0) {
    SuiteReport rep;
    GenParams gp;
    gp.p = p;
    for (int s = 0; s < seeds; ++s) {
        run_ainf_identity_suite(static_cast<std::uint64_t>(s) + 1, nmax_ainf, rep, gp);
        run_pcy_identity_suite(static_cast<std::uint64_t>(s) + 1, d, lmax, nmax_pcy, rep, gp);
    }
    return rep;
}

}  // namespace testkit
}  // namespace quivhom
