#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/ainfty.hpp"
#include "quivhom/diagram.hpp"
#include "quivhom/multi_collection.hpp"

namespace quivhom {

namespace neck {

// Object of a (possibly mixed) boundary type during gluing.  tag 0: objects
// of the eventual source quiver; tag 1: objects of an intermediate quiver
// still awaiting identification through an object map.
struct TObj {
    int tag = 0;
    int idx = 0;
    friend bool operator==(const TObj& a, const TObj& b) { return a.tag == b.tag && a.idx == b.idx; }
    friend bool operator<(const TObj& a, const TObj& b) {
        return a.tag != b.tag ? a.tag < b.tag : a.idx < b.idx;
    }
};
using TType = std::vector<std::vector<TObj>>;

inline TType tag_type(const MultiType& t, int tag) {
    TType r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        for (int x : t[i]) r[i].push_back({tag, x});
    return r;
}
inline int ttype_size(const TType& t) {
    int s = 0;
    for (const auto& g : t) s += static_cast<int>(g.size());
    return s;
}

inline bool tcompat(const TObj& a, const TObj& b, const std::vector<int>* f0) {
    if (a.tag == b.tag) return a.idx == b.idx;
    if (!f0) return false;
    const TObj& lo = a.tag == 0 ? a : b;
    const TObj& hi = a.tag == 0 ? b : a;
    return (*f0)[static_cast<std::size_t>(lo.idx)] == hi.idx;
}
inline TObj trefine(const TObj& a, const TObj& b) { return a.tag <= b.tag ? a : b; }

// Single gluing of boundary types: output og of the inner type Z is consumed
// by edge (g, j) of the outer type Y.  Returns the composite type and, for
// each composite input edge / output, its provenance (side 0 = outer,
// side 1 = inner; flat index on that side).
struct PairGlue {
    bool ok = false;
    TType type;
    std::vector<std::pair<int, int>> in_prov, out_prov;
};

inline PairGlue glue_types(const TType& Y, int g, int j, const TType& Z, int og,
                           const std::vector<int>* f0) {
    PairGlue r;
    const int m = static_cast<int>(Y.size());
    const int n = static_cast<int>(Z.size());
    const TObj zlt = Z[static_cast<std::size_t>(og)].front();
    const TObj zrt = Z[static_cast<std::size_t>((og + 1) % n)].back();
    const TObj ya = Y[static_cast<std::size_t>(g)][static_cast<std::size_t>(j)];
    const TObj yb = Y[static_cast<std::size_t>(g)][static_cast<std::size_t>(j + 1)];
    if (!tcompat(zlt, ya, f0) || !tcompat(zrt, yb, f0)) return r;

    auto outer_flat = [&](int gi, int e) {
        int s = 0;
        for (int i = 0; i < gi; ++i) s += static_cast<int>(Y[static_cast<std::size_t>(i)].size()) - 1;
        return s + e;
    };
    auto inner_flat = [&](int gi, int e) {
        int s = 0;
        for (int i = 0; i < gi; ++i) s += static_cast<int>(Z[static_cast<std::size_t>(i)].size()) - 1;
        return s + e;
    };

    // Groups assembled in boundary order with per-edge provenance and the
    // provenance of the output following each group.
    std::vector<std::vector<TObj>> cg;
    std::vector<std::vector<std::pair<int, int>>> ged;
    std::vector<std::pair<int, int>> gout;
    auto push_outer = [&](int i) {
        const auto& grp = Y[static_cast<std::size_t>(i)];
        std::vector<std::pair<int, int>> ed;
        for (int e = 0; e + 1 < static_cast<int>(grp.size()); ++e) ed.push_back({0, outer_flat(i, e)});
        cg.push_back(grp);
        ged.push_back(std::move(ed));
        gout.push_back({0, i});
    };

    for (int i = 0; i < g; ++i) push_outer(i);
    if (n == 1) {
        const auto& z0 = Z[0];
        const auto& yg = Y[static_cast<std::size_t>(g)];
        std::vector<TObj> mg;
        std::vector<std::pair<int, int>> ed;
        for (int t = 0; t < j; ++t) {
            mg.push_back(yg[static_cast<std::size_t>(t)]);
            ed.push_back({0, outer_flat(g, t)});
        }
        mg.push_back(trefine(zlt, ya));
        for (int e = 0; e + 1 < static_cast<int>(z0.size()); ++e) ed.push_back({1, inner_flat(0, e)});
        for (std::size_t t = 1; t + 1 < z0.size(); ++t) mg.push_back(z0[t]);
        mg.push_back(trefine(zrt, yb));
        for (int t = j + 1; t + 1 < static_cast<int>(yg.size()); ++t) ed.push_back({0, outer_flat(g, t)});
        for (std::size_t t = static_cast<std::size_t>(j) + 2; t < yg.size(); ++t) mg.push_back(yg[t]);
        cg.push_back(std::move(mg));
        ged.push_back(std::move(ed));
        gout.push_back({0, g});
    } else {
        const auto& yg = Y[static_cast<std::size_t>(g)];
        // B group: inner group og+1 (last object refined) then the tail of Y_g.
        {
            const auto& zb = Z[static_cast<std::size_t>((og + 1) % n)];
            std::vector<TObj> bg(zb.begin(), zb.end());
            bg.back() = trefine(zrt, yb);
            std::vector<std::pair<int, int>> ed;
            for (int e = 0; e + 1 < static_cast<int>(zb.size()); ++e)
                ed.push_back({1, inner_flat((og + 1) % n, e)});
            for (int t = j + 1; t + 1 < static_cast<int>(yg.size()); ++t) {
                bg.push_back(yg[static_cast<std::size_t>(t + 1)]);
                ed.push_back({0, outer_flat(g, t)});
            }
            cg.push_back(std::move(bg));
            ged.push_back(std::move(ed));
            gout.push_back({1, (og + 1) % n});
        }
        // Middle inner groups og+2, ..., og+n-1 (cyclically).
        for (int t = 2; t < n; ++t) {
            int gi = (og + t) % n;
            const auto& zg = Z[static_cast<std::size_t>(gi)];
            std::vector<std::pair<int, int>> ed;
            for (int e = 0; e + 1 < static_cast<int>(zg.size()); ++e) ed.push_back({1, inner_flat(gi, e)});
            cg.push_back(std::vector<TObj>(zg.begin(), zg.end()));
            ged.push_back(std::move(ed));
            gout.push_back({1, gi});
        }
        // A group: head of Y_g, refined corner, inner group og after its first object.
        {
            const auto& za = Z[static_cast<std::size_t>(og)];
            std::vector<TObj> ag;
            std::vector<std::pair<int, int>> ed;
            for (int t = 0; t < j; ++t) {
                ag.push_back(yg[static_cast<std::size_t>(t)]);
                ed.push_back({0, outer_flat(g, t)});
            }
            ag.push_back(trefine(zlt, ya));
            for (int e = 0; e + 1 < static_cast<int>(za.size()); ++e) ed.push_back({1, inner_flat(og, e)});
            for (std::size_t t = 1; t < za.size(); ++t) ag.push_back(za[t]);
            cg.push_back(std::move(ag));
            ged.push_back(std::move(ed));
            gout.push_back({0, g});
        }
    }
    for (int i = g + 1; i < m; ++i) push_outer(i);

    r.type = std::move(cg);
    for (auto& ed : ged)
        for (auto& e : ed) r.in_prov.push_back(e);
    r.out_prov = std::move(gout);
    r.ok = true;
    return r;
}

// Growing glued diagram.  Discs carry the layer used for the canonical
// application order (0: applied first / producers, 1: applied last).
struct DiscRec {
    const MMap* comp;
    int mu;
    int layer;
    bool designated;
    std::vector<int> gin;  // input edges per boundary group of the stored reading
};

inline std::vector<int> group_ins(const MultiType& t) {
    std::vector<int> g;
    g.reserve(t.size());
    for (const auto& grp : t) g.push_back(static_cast<int>(grp.size()) - 1);
    return g;
}

inline int slot_group(const std::vector<int>& gin, int slot) {
    int g = 0;
    while (slot >= gin[static_cast<std::size_t>(g)]) {
        slot -= gin[static_cast<std::size_t>(g)];
        ++g;
    }
    return g;
}

struct BuildState {
    TType type;
    std::vector<DiscRec> discs;
    std::vector<std::array<int, 4>> edges;  // producer id, out idx, consumer id, slot
    std::vector<std::pair<int, int>> in_prov, out_prov;  // (disc id, flat index)
    int designated_used = 0;
};

inline BuildState init_state(const MMap* comp, int mu, int layer, bool desig, const MultiType& t,
                             int tag) {
    BuildState st;
    st.type = tag_type(t, tag);
    st.discs.push_back({comp, mu, layer, desig, group_ins(t)});
    if (desig) st.designated_used = 1;
    int ins = 0, outs = static_cast<int>(t.size());
    for (const auto& g : t) ins += static_cast<int>(g.size()) - 1;
    for (int e = 0; e < ins; ++e) st.in_prov.push_back({0, e});
    for (int o = 0; o < outs; ++o) st.out_prov.push_back({0, o});
    return st;
}

inline int flat_slot(const MultiType& t, int g, int j) {
    int s = 0;
    for (int i = 0; i < g; ++i) s += static_cast<int>(t[static_cast<std::size_t>(i)].size()) - 1;
    return s + j;
}

// Rotate the boundary linearization left by s groups (provenances follow;
// no sign bookkeeping is needed — the evaluator derives signs from the
// final input/output orders).
inline void rotate_state(BuildState& st, int s) {
    const int n = static_cast<int>(st.type.size());
    if (n == 0 || s % n == 0) return;
    s %= n;
    int eshift = 0;
    for (int i = 0; i < s; ++i) eshift += static_cast<int>(st.type[static_cast<std::size_t>(i)].size()) - 1;
    std::rotate(st.type.begin(), st.type.begin() + s, st.type.end());
    std::rotate(st.out_prov.begin(), st.out_prov.begin() + s, st.out_prov.end());
    std::rotate(st.in_prov.begin(), st.in_prov.begin() + eshift, st.in_prov.end());
}

// Attachments build the glued tree without committing to a boundary cut; the
// finishing step enumerates all cuts and keeps exactly those for which every
// disc is stored at the linearization the cut induces on it.

// New disc consumes the composite output at position out_pos via its edge (g,j).
inline bool attach_consumer(BuildState& st, const MMap* comp, int mu, int layer, bool desig,
                            const MultiType& t, int g, int j, int out_pos,
                            const std::vector<int>* f0, int tag) {
    PairGlue pg = glue_types(tag_type(t, tag), g, j, st.type, out_pos, f0);
    if (!pg.ok) return false;
    int nid = static_cast<int>(st.discs.size());
    auto prod = st.out_prov[static_cast<std::size_t>(out_pos)];
    std::vector<std::pair<int, int>> nin, nout;
    for (auto [side, flat] : pg.in_prov)
        nin.push_back(side == 0 ? std::make_pair(nid, flat) : st.in_prov[static_cast<std::size_t>(flat)]);
    for (auto [side, flat] : pg.out_prov)
        nout.push_back(side == 0 ? std::make_pair(nid, flat) : st.out_prov[static_cast<std::size_t>(flat)]);
    st.type = std::move(pg.type);
    st.in_prov = std::move(nin);
    st.out_prov = std::move(nout);
    st.edges.push_back({prod.first, prod.second, nid, flat_slot(t, g, j)});
    st.discs.push_back({comp, mu, layer, desig, group_ins(t)});
    if (desig) ++st.designated_used;
    return true;
}

// New disc feeds the composite input at position in_pos with its output og.
inline bool attach_producer(BuildState& st, const MMap* comp, int mu, int layer, bool desig,
                            const MultiType& t, int og, int in_pos, const std::vector<int>* f0,
                            int tag) {
    // Locate (g, j) of the composite input.
    int g = 0, j = in_pos;
    while (j >= static_cast<int>(st.type[static_cast<std::size_t>(g)].size()) - 1) {
        j -= static_cast<int>(st.type[static_cast<std::size_t>(g)].size()) - 1;
        ++g;
    }
    PairGlue pg = glue_types(st.type, g, j, tag_type(t, tag), og, f0);
    if (!pg.ok) return false;
    int nid = static_cast<int>(st.discs.size());
    auto cons = st.in_prov[static_cast<std::size_t>(in_pos)];
    std::vector<std::pair<int, int>> nin, nout;
    for (auto [side, flat] : pg.in_prov)
        nin.push_back(side == 0 ? st.in_prov[static_cast<std::size_t>(flat)] : std::make_pair(nid, flat));
    for (auto [side, flat] : pg.out_prov)
        nout.push_back(side == 0 ? st.out_prov[static_cast<std::size_t>(flat)] : std::make_pair(nid, flat));
    st.type = std::move(pg.type);
    st.in_prov = std::move(nin);
    st.out_prov = std::move(nout);
    st.edges.push_back({nid, og, cons.first, cons.second});
    st.discs.push_back({comp, mu, layer, desig, group_ins(t)});
    if (desig) ++st.designated_used;
    return true;
}

using DiagramSink = std::function<void(const MultiType&, const Diagram&)>;

// Reading induced by the boundary cut: orient the disc tree at the producer
// of the last boundary output.  The cut is the gap right after that output,
// so the root's stored reading must end with it; a disc producing toward its
// parent must have the consumed output last in its stored reading; a disc fed
// by its parent must carry the feeding slot in its stored first group.
inline bool cut_consistent(const BuildState& st) {
    const int nd = static_cast<int>(st.discs.size());
    const int root = st.out_prov.back().first;
    if (st.out_prov.back().second !=
        static_cast<int>(st.discs[static_cast<std::size_t>(root)].comp->outs().size()) - 1)
        return false;
    std::vector<int> parent_edge(static_cast<std::size_t>(nd), -1);
    std::vector<char> vis(static_cast<std::size_t>(nd), 0);
    std::vector<int> stack{root};
    vis[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (std::size_t ei = 0; ei < st.edges.size(); ++ei) {
            const auto& e = st.edges[ei];
            int v = e[0] == u ? e[2] : e[2] == u ? e[0] : -1;
            if (v < 0 || vis[static_cast<std::size_t>(v)]) continue;
            vis[static_cast<std::size_t>(v)] = 1;
            parent_edge[static_cast<std::size_t>(v)] = static_cast<int>(ei);
            stack.push_back(v);
        }
    }
    for (int u = 0; u < nd; ++u) {
        if (u == root) continue;
        const auto& e = st.edges[static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(u)])];
        if (e[0] == u) {
            if (e[1] != static_cast<int>(st.discs[static_cast<std::size_t>(u)].comp->outs().size()) - 1)
                return false;
        } else {
            if (slot_group(st.discs[static_cast<std::size_t>(u)].gin, e[3]) != 0) return false;
        }
    }
    return true;
}

// Canonicalize the finished state (path-independent disc order), deduplicate,
// resolve leftover tag-1 objects through object-map preimages, and emit.
inline void emit_state(const BuildState& st, int d, const std::vector<int>* f0,
                       const DgQuiver* preimage_src, std::set<std::string>& seen,
                       const DiagramSink& sink) {
    const int nd = static_cast<int>(st.discs.size());
    // Deterministic DFS from the producer of composite output 0.
    std::vector<int> order(static_cast<std::size_t>(nd), -1);
    int stamp = 0;
    std::vector<int> stack{st.out_prov[0].first};
    std::vector<char> vis(static_cast<std::size_t>(nd), 0);
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (vis[static_cast<std::size_t>(u)]) continue;
        vis[static_cast<std::size_t>(u)] = 1;
        order[static_cast<std::size_t>(u)] = stamp++;
        // Neighbors via input slots then outputs, pushed in reverse so that
        // lower slots are visited first.
        std::vector<int> nb;
        const auto& comp = *st.discs[static_cast<std::size_t>(u)].comp;
        for (std::size_t s = 0; s < comp.ins().size(); ++s)
            for (const auto& e : st.edges)
                if (e[2] == u && e[3] == static_cast<int>(s)) nb.push_back(e[0]);
        for (std::size_t o = 0; o < comp.outs().size(); ++o)
            for (const auto& e : st.edges)
                if (e[0] == u && e[1] == static_cast<int>(o)) nb.push_back(e[2]);
        for (auto it = nb.rbegin(); it != nb.rend(); ++it)
            if (!vis[static_cast<std::size_t>(*it)]) stack.push_back(*it);
    }
    // Final application order: layer first, then DFS discovery.
    std::vector<int> ids(static_cast<std::size_t>(nd));
    for (int i = 0; i < nd; ++i) ids[static_cast<std::size_t>(i)] = i;
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        const auto &da = st.discs[static_cast<std::size_t>(a)], &db = st.discs[static_cast<std::size_t>(b)];
        if (da.layer != db.layer) return da.layer < db.layer;
        return order[static_cast<std::size_t>(a)] < order[static_cast<std::size_t>(b)];
    });
    std::vector<int> pos(static_cast<std::size_t>(nd));
    for (int i = 0; i < nd; ++i) pos[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = i;

    // Dedupe on the canonical serialization.
    std::ostringstream key;
    for (const auto& g : st.type) {
        key << "g";
        for (const auto& o : g) key << o.tag << "." << o.idx << ",";
    }
    for (int i = 0; i < nd; ++i) {
        const auto& dr = st.discs[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
        key << "|d" << dr.comp << "." << dr.designated;
    }
    std::vector<std::array<int, 4>> ce;
    for (const auto& e : st.edges)
        ce.push_back({pos[static_cast<std::size_t>(e[0])], e[1], pos[static_cast<std::size_t>(e[2])], e[3]});
    std::sort(ce.begin(), ce.end());
    for (const auto& e : ce) key << "|e" << e[0] << "." << e[1] << "." << e[2] << "." << e[3];
    for (const auto& p : st.in_prov) key << "|i" << pos[static_cast<std::size_t>(p.first)] << "." << p.second;
    for (const auto& p : st.out_prov) key << "|o" << pos[static_cast<std::size_t>(p.first)] << "." << p.second;
    if (!seen.insert(key.str()).second) return;

    Diagram dg;
    dg.d = d;
    dg.n_ext_in = static_cast<int>(st.in_prov.size());
    dg.discs.resize(static_cast<std::size_t>(nd));
    dg.in_src.resize(static_cast<std::size_t>(nd));
    for (int i = 0; i < nd; ++i) {
        const auto& dr = st.discs[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
        dg.discs[static_cast<std::size_t>(i)] = {dr.comp, dr.mu};
        dg.in_src[static_cast<std::size_t>(i)].assign(dr.comp->ins().size(), {-1, 0});
    }
    for (std::size_t e = 0; e < st.in_prov.size(); ++e) {
        auto [id, slot] = st.in_prov[e];
        dg.in_src[static_cast<std::size_t>(pos[static_cast<std::size_t>(id)])][static_cast<std::size_t>(slot)] =
            {-1, static_cast<int>(e)};
    }
    for (const auto& e : st.edges)
        dg.in_src[static_cast<std::size_t>(pos[static_cast<std::size_t>(e[2])])][static_cast<std::size_t>(e[3])] =
            {pos[static_cast<std::size_t>(e[0])], e[1]};
    for (const auto& p : st.out_prov)
        dg.out_order.push_back({pos[static_cast<std::size_t>(p.first)], p.second});

    // Resolve remaining tag-1 objects (isolated boundary objects of the
    // intermediate quiver) through object-map preimages.
    std::vector<std::pair<std::size_t, std::size_t>> holes;
    for (std::size_t g = 0; g < st.type.size(); ++g)
        for (std::size_t t = 0; t < st.type[g].size(); ++t)
            if (st.type[g][t].tag == 1) holes.push_back({g, t});
    MultiType base(st.type.size());
    for (std::size_t g = 0; g < st.type.size(); ++g)
        for (const auto& o : st.type[g]) base[g].push_back(o.idx);
    if (holes.empty()) {
        sink(base, dg);
        return;
    }
    if (!f0 || !preimage_src) throw std::invalid_argument("unresolved boundary objects");
    std::vector<std::vector<int>> pre(holes.size());
    for (std::size_t h = 0; h < holes.size(); ++h) {
        int b = st.type[holes[h].first][holes[h].second].idx;
        for (int x = 0; x < preimage_src->object_count(); ++x)
            if ((*f0)[static_cast<std::size_t>(x)] == b) pre[h].push_back(x);
        if (pre[h].empty()) return;
    }
    std::vector<std::size_t> pick(holes.size(), 0);
    while (true) {
        MultiType t = base;
        for (std::size_t h = 0; h < holes.size(); ++h)
            t[holes[h].first][holes[h].second] = pre[h][pick[h]];
        sink(t, dg);
        std::size_t h = 0;
        while (h < holes.size() && ++pick[h] == pre[h].size()) pick[h++] = 0;
        if (h == holes.size()) break;
    }
}

// Emit the finished gluing once per admissible boundary cut.
inline void finish_state(BuildState st, int d, const std::vector<int>* f0,
                         const DgQuiver* preimage_src, std::set<std::string>& seen,
                         const DiagramSink& sink) {
    const int n = static_cast<int>(st.type.size());
    for (int s = 0; s < n; ++s) {
        if (s) rotate_state(st, 1);
        if (cut_consistent(st)) emit_state(st, d, f0, preimage_src, seen, sink);
    }
}

struct FamilyBounds {
    int lmax, nmax, d;
    bool within(const TType& t) const {
        return static_cast<int>(t.size()) <= lmax && ttype_size(t) <= nmax;
    }
};

// --- family drivers ----------------------------------------------------

// Two-disc necklace gluings: every output of an N-disc into every matching
// input of an M-disc, each diagram once.
inline void necklace_diagrams(const MultiCollection& M, const MultiCollection& N,
                              const FamilyBounds& fb, const DiagramSink& sink) {
    std::set<std::string> seen;
    for (const auto& [zt, zm] : N.components()) {
        if (zm.is_zero()) continue;
        BuildState st0 = init_state(&zm, N.mu(), 0, false, zt, 0);
        for (const auto& [yt, ym] : M.components()) {
            if (ym.is_zero()) continue;
            for (std::size_t g = 0; g < yt.size(); ++g)
                for (int j = 0; j + 1 < static_cast<int>(yt[g].size()); ++j)
                    for (int op = 0; op < static_cast<int>(zt.size()); ++op) {
                        BuildState st = st0;
                        if (!attach_consumer(st, &ym, M.mu(), 1, false, yt, static_cast<int>(g), j,
                                             op, nullptr, 0))
                            continue;
                        if (!fb.within(st.type)) continue;
                        finish_state(st, fb.d, nullptr, nullptr, seen, sink);
                    }
        }
    }
}

// Multinec-style diagrams: one central disc of MA whose outputs are each
// consumed by a surrounding disc from F (with exactly one taken from the
// designated collection when present).
inline void multinec_diagrams(const MultiCollection& F, const MultiCollection& MA,
                              const MultiCollection* desig, const FamilyBounds& fb,
                              const DiagramSink& sink) {
    std::set<std::string> seen;
    std::function<void(const BuildState&)> rec = [&](const BuildState& st) {
        std::vector<int> pend;
        for (std::size_t o = 0; o < st.out_prov.size(); ++o)
            if (st.out_prov[o].first == 0) pend.push_back(static_cast<int>(o));
        if (pend.empty()) {
            if (!desig || st.designated_used == 1) finish_state(st, fb.d, nullptr, nullptr, seen, sink);
            return;
        }
        auto try_all = [&](const MultiCollection& coll, bool dflag) {
            for (const auto& [yt, ym] : coll.components()) {
                if (ym.is_zero()) continue;
                for (int op : pend)
                    for (std::size_t g = 0; g < yt.size(); ++g)
                        for (int j = 0; j + 1 < static_cast<int>(yt[g].size()); ++j) {
                            BuildState s2 = st;
                            if (!attach_consumer(s2, &ym, coll.mu(), 1, dflag, yt,
                                                 static_cast<int>(g), j, op, nullptr, 0))
                                continue;
                            if (!fb.within(s2.type)) continue;
                            rec(s2);
                        }
            }
        };
        try_all(F, false);
        if (desig && st.designated_used == 0) try_all(*desig, true);
    };
    for (const auto& [zt, zm] : MA.components()) {
        if (zm.is_zero()) continue;
        rec(init_state(&zm, MA.mu(), 0, false, zt, 0));
    }
}

// Pre-style diagrams: one central disc of MB (boundary read through F0) each
// of whose input edges is fed by one output of a surrounding disc from F
// (exactly one designated when requested); the feeders' remaining outputs
// stay on the boundary.
inline void pre_diagrams(const MultiCollection& MB, const MultiCollection& F,
                         const MultiCollection* desig, const FamilyBounds& fb,
                         const DiagramSink& sink) {
    std::set<std::string> seen;
    const std::vector<int>* f0 = &F.F0();
    const DgQuiver* A = F.source();
    std::function<void(const BuildState&)> rec = [&](const BuildState& st) {
        std::vector<int> pend;
        for (std::size_t e = 0; e < st.in_prov.size(); ++e)
            if (st.in_prov[e].first == 0) pend.push_back(static_cast<int>(e));
        if (pend.empty()) {
            if (!desig || st.designated_used == 1) finish_state(st, fb.d, f0, A, seen, sink);
            return;
        }
        auto try_all = [&](const MultiCollection& coll, bool dflag) {
            for (const auto& [zt, zm] : coll.components()) {
                if (zm.is_zero()) continue;
                for (int e : pend)
                    for (int og = 0; og < static_cast<int>(zt.size()); ++og) {
                        BuildState s2 = st;
                        if (!attach_producer(s2, &zm, coll.mu(), 0, dflag, zt, og, e, f0, 0))
                            continue;
                        if (!fb.within(s2.type)) continue;
                        rec(s2);
                    }
            }
        };
        try_all(F, false);
        if (desig && st.designated_used == 0) try_all(*desig, true);
    };
    for (const auto& [yt, ym] : MB.components()) {
        if (ym.is_zero()) continue;
        rec(init_state(&ym, MB.mu(), 1, false, yt, 1));
    }
}

// Composition diagrams: bipartite trees where every output of every F-disc
// feeds a G-disc input and every G-disc input is fed by an F-disc output.
// An optional designated collection replaces exactly one G-layer disc.
inline void compose_diagrams(const MultiCollection& G, const MultiCollection& F,
                             const MultiCollection* desig, const FamilyBounds& fb,
                             const DiagramSink& sink) {
    std::set<std::string> seen;
    const std::vector<int>* f0 = &F.F0();
    const DgQuiver* A = F.source();
    std::function<void(const BuildState&)> rec = [&](const BuildState& st) {
        std::vector<int> pend_in;
        for (std::size_t e = 0; e < st.in_prov.size(); ++e)
            if (st.discs[static_cast<std::size_t>(st.in_prov[e].first)].layer == 1)
                pend_in.push_back(static_cast<int>(e));
        if (!pend_in.empty()) {
            for (const auto& [zt, zm] : F.components()) {
                if (zm.is_zero()) continue;
                for (int e : pend_in)
                    for (int og = 0; og < static_cast<int>(zt.size()); ++og) {
                        BuildState s2 = st;
                        if (!attach_producer(s2, &zm, F.mu(), 0, false, zt, og, e, f0, 0))
                            continue;
                        if (!fb.within(s2.type)) continue;
                        rec(s2);
                    }
            }
            return;
        }
        std::vector<int> pend_out;
        for (std::size_t o = 0; o < st.out_prov.size(); ++o)
            if (st.discs[static_cast<std::size_t>(st.out_prov[o].first)].layer == 0)
                pend_out.push_back(static_cast<int>(o));
        if (pend_out.empty()) {
            if (!desig || st.designated_used == 1) finish_state(st, fb.d, f0, A, seen, sink);
            return;
        }
        auto try_all = [&](const MultiCollection& coll, bool dflag) {
            for (const auto& [yt, ym] : coll.components()) {
                if (ym.is_zero()) continue;
                for (int op : pend_out)
                    for (std::size_t g = 0; g < yt.size(); ++g)
                        for (int j = 0; j + 1 < static_cast<int>(yt[g].size()); ++j) {
                            BuildState s2 = st;
                            if (!attach_consumer(s2, &ym, coll.mu(), 1, dflag, yt,
                                                 static_cast<int>(g), j, op, f0, 1))
                                continue;
                            if (!fb.within(s2.type)) continue;
                            rec(s2);
                        }
            }
        };
        try_all(G, false);
        if (desig && st.designated_used == 0) try_all(*desig, true);
    };
    auto start_all = [&](const MultiCollection& coll, bool dflag) {
        for (const auto& [yt, ym] : coll.components()) {
            if (ym.is_zero()) continue;
            rec(init_state(&ym, coll.mu(), 1, dflag, yt, 1));
        }
    };
    start_all(G, false);
    if (desig) start_all(*desig, true);
}

inline DiagramSink accumulate_into(MultiCollection& r) {
    return [&r](const MultiType& t, const Diagram& dg) {
        if (!type_valid(t) || type_length(t) > r.lmax() || type_size(t) > r.nmax()) return;
        MMap val = evaluate_diagram(dg);
        if (val.is_zero()) return;
        r.ensure(t).accumulate(val, Scalar::one(val.field()));
    };
}

}  // namespace neck

// --- public operations --------------------------------------------------

namespace detail {
inline void require_same_structure_side(const MultiCollection& M, const MultiCollection& N) {
    if (M.source() != N.source() || M.target() != N.target() || M.d() != N.d())
        throw std::invalid_argument("collections live on different quivers");
}
}  // namespace detail

// Necklace product: insert one N-disc output into one M-disc input, summed
// over all matching single gluings.
inline MultiCollection necklace_compose(const MultiCollection& M, const MultiCollection& N) {
    detail::require_same_structure_side(M, N);
    int lmax = std::min(M.lmax(), N.lmax()), nmax = std::min(M.nmax(), N.nmax());
    MultiCollection r(M.source(), M.target(), M.F0(), M.d(), M.mu() + N.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, M.d()};
    neck::necklace_diagrams(M, N, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Maurer–Cartan defect: sum over all two-disc single gluings of M with
// itself; vanishes iff M is a d-pre-Calabi-Yau structure (up to truncation).
inline MultiCollection mc_defect(const MultiCollection& M) { return necklace_compose(M, M); }

inline MultiCollection collection_sub(const MultiCollection& a, const MultiCollection& b) {
    MultiCollection r = a;
    r.accumulate(b, -Scalar::one(a.source()->field()));
    return r;
}

// Graded commutator of the necklace product.
inline MultiCollection necklace_bracket(const MultiCollection& M, const MultiCollection& N) {
    MultiCollection mn = necklace_compose(M, N);
    MultiCollection nm = necklace_compose(N, M);
    Scalar s = Scalar::one(M.source()->field());
    if ((M.mu() * N.mu()) % 2 != 0) s = -s;
    mn.accumulate(nm, -s);
    return mn;
}

// F ∘_multinec MA: one central MA-disc, every output consumed by an F-disc.
inline MultiCollection multinec_compose(const MultiCollection& F, const MultiCollection& MA) {
    if (F.source() != MA.source() || F.d() != MA.d())
        throw std::invalid_argument("object map incompatibility");
    int lmax = std::min(F.lmax(), MA.lmax()), nmax = std::min(F.nmax(), MA.nmax());
    MultiCollection r(F.source(), F.target(), F.F0(), F.d(), F.mu() + MA.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::multinec_diagrams(F, MA, nullptr, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// MB ∘_pre F: one central MB-disc, every input edge fed by an F-disc output.
inline MultiCollection pre_compose(const MultiCollection& MB, const MultiCollection& F) {
    if (F.target() != MB.source() || F.d() != MB.d())
        throw std::invalid_argument("object map incompatibility");
    int lmax = std::min(F.lmax(), MB.lmax()), nmax = std::min(F.nmax(), MB.nmax());
    MultiCollection r(F.source(), F.target(), F.F0(), F.d(), F.mu() + MB.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::pre_diagrams(MB, F, nullptr, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Upper composition: multinec-style diagrams around Mprime whose surrounding
// necklace contains exactly one H-disc, all others from F.
inline MultiCollection upper_compose(const MultiCollection& H, const MultiCollection& Mprime,
                                     const MultiCollection& F) {
    if (F.source() != Mprime.source() || H.source() != F.source() || F.d() != Mprime.d())
        throw std::invalid_argument("object map incompatibility");
    int lmax = std::min({F.lmax(), H.lmax(), Mprime.lmax()});
    int nmax = std::min({F.nmax(), H.nmax(), Mprime.nmax()});
    MultiCollection r(F.source(), F.target(), F.F0(), F.d(), F.mu() + H.mu() + Mprime.mu(), lmax,
                      nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::multinec_diagrams(F, Mprime, &H, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Lower composition: pre-style diagrams around M with exactly one feeding
// H-disc, all others from F.
inline MultiCollection lower_compose(const MultiCollection& M, const MultiCollection& H,
                                     const MultiCollection& F) {
    if (F.target() != M.source() || H.source() != F.source() || F.d() != M.d())
        throw std::invalid_argument("object map incompatibility");
    int lmax = std::min({F.lmax(), H.lmax(), M.lmax()});
    int nmax = std::min({F.nmax(), H.nmax(), M.nmax()});
    MultiCollection r(F.source(), F.target(), F.F0(), F.d(), F.mu() + H.mu() + M.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::pre_diagrams(M, F, &H, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Morphism identity defect: zero iff (F0, F) is a d-pre-Calabi-Yau morphism
// from (A, MA) to (B, MB), up to truncation.
inline MultiCollection pcy_mi_defect(const MultiCollection& F, const MultiCollection& MA,
                                     const MultiCollection& MB) {
    return collection_sub(multinec_compose(F, MA), pre_compose(MB, F));
}

// Composition of pre-Calabi-Yau morphisms: bipartite trees of F- and G-discs.
inline MultiCollection compose_pcy(const MultiCollection& G, const MultiCollection& F) {
    if (F.target() != G.source() || F.d() != G.d())
        throw std::invalid_argument("composition source/target mismatch");
    std::vector<int> f0(F.F0().size());
    for (std::size_t i = 0; i < f0.size(); ++i)
        f0[i] = G.map_object(F.F0()[i]);
    int lmax = std::min(F.lmax(), G.lmax()), nmax = std::min(F.nmax(), G.nmax());
    MultiCollection r(F.source(), G.target(), f0, F.d(), F.mu() + G.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::compose_diagrams(G, F, nullptr, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Composition with exactly one G-layer disc drawn from W instead of G.
inline MultiCollection compose_pcy_designated(const MultiCollection& G, const MultiCollection& F,
                                              const MultiCollection& W) {
    std::vector<int> f0(F.F0().size());
    for (std::size_t i = 0; i < f0.size(); ++i)
        f0[i] = G.map_object(F.F0()[i]);
    int lmax = std::min(F.lmax(), G.lmax()), nmax = std::min(F.nmax(), G.nmax());
    MultiCollection r(F.source(), G.target(), f0, F.d(), F.mu() + G.mu() + W.mu(), lmax, nmax);
    neck::FamilyBounds fb{lmax, nmax, F.d()};
    neck::compose_diagrams(G, F, &W, fb, neck::accumulate_into(r));
    r.prune();
    return r;
}

// Identity morphism: arity-one components are the identity, all others zero.
inline MultiCollection identity_pcy(const DgQuiver& A, int d, int lmax, int nmax) {
    return embed_multi(identity_morphism(A, nmax), d, lmax);
}

inline MultiCollection restrict_stage(const MultiCollection& c, int lg, int N) {
    MultiCollection r = c.shape_like(c.mu());
    for (const auto& [t, m] : c.components())
        if (!m.is_zero() && type_length(t) == lg && type_size(t) == N)
            r.ensure(t).accumulate(m, Scalar::one(m.field()));
    return r;
}

inline MultiCollection restrict_below_stage(const MultiCollection& c, int lg, int N) {
    MultiCollection r = c.shape_like(c.mu());
    for (const auto& [t, m] : c.components())
        if (!m.is_zero() &&
            (type_length(t) < lg || (type_length(t) == lg && type_size(t) <= N)))
            r.ensure(t).accumulate(m, Scalar::one(m.field()));
    return r;
}

inline MultiCollection restrict_length(const MultiCollection& c, int lg) {
    MultiCollection r = c.shape_like(c.mu());
    for (const auto& [t, m] : c.components())
        if (!m.is_zero() && type_length(t) == lg)
            r.ensure(t).accumulate(m, Scalar::one(m.field()));
    return r;
}

// Apply the cyclic generator k times (k may be negative); each component of
// length n rotates by k mod n.
inline MultiCollection cyclic_action(int k, const MultiCollection& F) {
    int m = 1;
    for (int n = 2; n <= std::max(1, F.lmax()); ++n) m = std::lcm(m, n);
    int kk = ((k % m) + m) % m;
    MultiCollection r = F;
    for (int i = 0; i < kk; ++i) r = cyclic_rotate(r);
    return r;
}

inline MultiCollection embed_ainf(const HomCollection& m, int d, int lmax) {
    return embed_multi(m, d, lmax);
}
inline HomCollection restrict_to_ainf(const MultiCollection& M) { return restrict_multi(M); }

// Differential-only structure viewed at the multi level.
inline MultiCollection dg_pcy_structure(const DgQuiver& A, int d, int lmax, int nmax) {
    return embed_multi(dg_structure(A, nmax), d, lmax);
}

inline IdentityReport report_zero_multi(const MultiCollection& defect) {
    IdentityReport rep;
    for (const auto& [t, m] : defect.components()) {
        if (m.is_zero()) continue;
        rep.ok = false;
        const auto& e = *m.entries().begin();
        std::string msg = "type " + type_str(t) + " input (";
        for (std::size_t i = 0; i < e.first.size(); ++i) {
            if (i) msg += ",";
            msg += m.ins()[i].sp->label(e.first[i]);
        }
        msg += ")";
        rep.failures.push_back(msg);
    }
    return rep;
}

// Structure check: Maurer-Cartan equation plus cyclic invariance.
inline IdentityReport is_pcy(const MultiCollection& M) {
    IdentityReport rep = report_zero_multi(mc_defect(M));
    if (!is_cyclically_invariant(M)) {
        rep.ok = false;
        rep.failures.push_back("collection is not cyclically invariant");
    }
    return rep;
}

inline IdentityReport is_pcy_morphism(const MultiCollection& F, const MultiCollection& MA,
                                      const MultiCollection& MB) {
    return report_zero_multi(pcy_mi_defect(F, MA, MB));
}

// -------------------------------------------------------------------------
// Linear-system plumbing over multi-component spaces.

struct MultiCoordSpace {
    struct Coord {
        MultiType type;
        std::vector<int> in, out;
    };
    std::vector<Coord> coords;
    std::map<MultiType, std::map<std::pair<std::vector<int>, std::vector<int>>, int>> index;

    int size() const { return static_cast<int>(coords.size()); }

    static void add_type(MultiCoordSpace& cs, const MultiCollection& shape, const MultiType& t) {
        MMap c = shape.make_component(t);
        for (const auto& f : c.ins())
            if (f.sp->dim() == 0) return;
        for (const auto& f : c.outs())
            if (f.sp->dim() == 0) return;
        std::vector<int> in(c.ins().size(), 0), out(c.outs().size(), 0);
        std::function<void(std::size_t)> irec = [&](std::size_t k) {
            if (k == c.ins().size()) {
                int want = c.in_sdeg(in) + c.intrinsic();
                std::function<void(std::size_t, int)> orec = [&](std::size_t j, int acc) {
                    if (j == c.outs().size()) {
                        if (acc == want) {
                            cs.index[t][{in, out}] = static_cast<int>(cs.coords.size());
                            cs.coords.push_back({t, in, out});
                        }
                        return;
                    }
                    for (int o = 0; o < c.outs()[j].sp->dim(); ++o) {
                        out[j] = o;
                        orec(j + 1, acc + c.outs()[j].sdeg(o));
                    }
                };
                orec(0, 0);
                return;
            }
            for (int i = 0; i < c.ins()[k].sp->dim(); ++i) {
                in[k] = i;
                irec(k + 1);
            }
        };
        irec(0);
    }

    // Degree-valid entries of all components at one (length, size) stage.
    static MultiCoordSpace stage(const MultiCollection& shape, int lg, int N) {
        MultiCoordSpace cs;
        for (const auto& t :
             MultiCollection::all_types(*shape.source(), shape.lmax(), shape.nmax()))
            if (type_length(t) == lg && type_size(t) == N) add_type(cs, shape, t);
        return cs;
    }
    // Degree-valid entries at every size of one length.
    static MultiCoordSpace length(const MultiCollection& shape, int lg) {
        MultiCoordSpace cs;
        for (const auto& t :
             MultiCollection::all_types(*shape.source(), shape.lmax(), shape.nmax()))
            if (type_length(t) == lg) add_type(cs, shape, t);
        return cs;
    }

    std::vector<Scalar> vectorize(const MultiCollection& col, std::uint64_t p) const {
        std::vector<Scalar> v(coords.size(), Scalar::zero(p));
        for (const auto& [t, mp] : index) {
            if (!col.has(t)) continue;
            const MMap& c = col.at(t);
            for (const auto& [in, row] : c.entries())
                for (const auto& [out, val] : row) {
                    auto it = mp.find({in, out});
                    if (it == mp.end()) throw std::logic_error("entry outside coordinate space");
                    v[static_cast<std::size_t>(it->second)] = val;
                }
        }
        return v;
    }

    void devectorize(const std::vector<Scalar>& v, MultiCollection& col) const {
        for (std::size_t k = 0; k < coords.size(); ++k) {
            if (v[k].is_zero()) continue;
            col.ensure(coords[k].type).add(coords[k].in, coords[k].out, v[k]);
        }
    }

    MultiCollection unit(const MultiCollection& shape, int k) const {
        MultiCollection u = shape.shape_like(shape.mu());
        u.ensure(coords[static_cast<std::size_t>(k)].type)
            .add(coords[static_cast<std::size_t>(k)].in, coords[static_cast<std::size_t>(k)].out,
                 Scalar::one(shape.source()->field()));
        return u;
    }
};

// Sum of a collection over its rotation orbit (a cyclically invariant span
// generator; used instead of averaging so the construction survives positive
// characteristic whenever the obstruction is solvable at all).
inline MultiCollection orbit_sum(const MultiCollection& u) {
    int n = 1;
    for (const auto& [t, m] : u.components())
        if (!m.is_zero()) n = std::max(n, type_length(t));
    MultiCollection r = u;
    MultiCollection rot = u;
    for (int i = 1; i < n; ++i) {
        rot = cyclic_rotate(rot);
        r.accumulate(rot, Scalar::one(u.source()->field()));
    }
    return r;
}

// Stacked linear problem over multi-component coordinates (rows and columns
// described by MultiCoordSpace sizes).
struct MultiStackedSystem {
    std::uint64_t p;
    std::vector<const MultiCoordSpace*> eq_spaces;
    std::vector<std::vector<Scalar>> rhs;
    struct Group {
        const MultiCoordSpace* space;
        std::function<std::vector<std::vector<Scalar>>(int)> column;
    };
    std::vector<Group> groups;

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
                        if (!colv[e][r].is_zero())
                            M.add(r0 + static_cast<int>(r), c0 + k, colv[e][r]);
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
// Transfer, inversion, minimal models, quasi-inverses at the multi level.

struct PcyTransferResult {
    MultiCollection structure;
    MultiCollection morphism;
};

namespace detail {
inline std::vector<Scalar> neg_vec(std::vector<Scalar> v) {
    for (auto& s : v) s = -s;
    return v;
}
}  // namespace detail

// f: a chain-map quasi-isomorphism A→B (arity-2 collection); MB a structure
// on B whose length-1 size-2 part is the differential.  Builds (MA, F) with
// the same bottom data satisfying the Maurer-Cartan and morphism identities
// up to (lmax, nmax).  The length-1 layer is delegated to the arity-level
// transfer (optionally through a contraction); higher stages are solved in
// the lexicographic (length, size) order, structure corrections restricted
// to the cyclically invariant subcomplex via orbit-sum generators.
inline PcyTransferResult transfer_pcy_from_target(const HomCollection& f, const MultiCollection& MB,
                                                  int lmax, int nmax,
                                                  const Contraction* con = nullptr) {
    const DgQuiver& A = *f.source();
    const DgQuiver& B = *f.target();
    const std::uint64_t p = A.field();
    const int d = MB.d();
    TransferResult base = transfer_from_target(f, restrict_multi(MB), nmax, con);
    MultiCollection MA = embed_multi(base.structure, d, lmax);
    MultiCollection F = embed_multi(base.morphism, d, lmax);
    MultiCollection mshape = MultiCollection::structure(&A, d, lmax, nmax, 1);
    MultiCollection fshape(&A, &B, f.F0(), d, 0, lmax, nmax);
    MultiCollection si_shape = MultiCollection::structure(&A, d, lmax, nmax, 2);
    MultiCollection mi_shape(&A, &B, f.F0(), d, 1, lmax, nmax);
    for (int L = 2; L <= lmax; ++L)
        for (int N = L; N <= nmax; ++N) {
            MultiCollection o = restrict_stage(mc_defect(MA), L, N);
            MultiCollection C = restrict_stage(pcy_mi_defect(F, MA, MB), L, N);
            MultiCoordSpace U = MultiCoordSpace::stage(mshape, L, N);
            MultiCoordSpace W = MultiCoordSpace::stage(fshape, L, N);
            MultiCoordSpace SIrows = MultiCoordSpace::stage(si_shape, L, N);
            MultiCoordSpace MIrows = MultiCoordSpace::stage(mi_shape, L, N);
            MultiStackedSystem sys;
            sys.p = p;
            sys.eq_spaces = {&SIrows, &MIrows};
            sys.rhs = {detail::neg_vec(SIrows.vectorize(o, p)),
                       detail::neg_vec(MIrows.vectorize(C, p))};
            sys.groups.push_back({&U, [&, L, N](int k) {
                                      MultiCollection u = orbit_sum(U.unit(mshape, k));
                                      MultiCollection si = necklace_compose(MA, u);
                                      si.accumulate(necklace_compose(u, MA), Scalar::one(p));
                                      si = restrict_stage(si, L, N);
                                      MultiCollection mi =
                                          restrict_stage(multinec_compose(F, u), L, N);
                                      return std::vector<std::vector<Scalar>>{
                                          SIrows.vectorize(si, p), MIrows.vectorize(mi, p)};
                                  }});
            sys.groups.push_back({&W, [&, L, N](int k) {
                                      MultiCollection w = W.unit(fshape, k);
                                      MultiCollection mi = restrict_stage(
                                          collection_sub(upper_compose(w, MA, F),
                                                         lower_compose(MB, w, F)),
                                          L, N);
                                      return std::vector<std::vector<Scalar>>{
                                          std::vector<Scalar>(
                                              static_cast<std::size_t>(SIrows.size()),
                                              Scalar::zero(p)),
                                          MIrows.vectorize(mi, p)};
                                  }});
            auto sol = sys.solve_canonical();
            if (!sol)
                throw math_error(
                    "obstruction is not an invariant boundary (input may not be a "
                    "quasi-isomorphism)");
            for (int k = 0; k < U.size(); ++k)
                if (!(*sol)[0][static_cast<std::size_t>(k)].is_zero())
                    MA.accumulate(orbit_sum(U.unit(mshape, k)),
                                  (*sol)[0][static_cast<std::size_t>(k)]);
            W.devectorize((*sol)[1], F);
        }
    MA.prune();
    F.prune();
    return {std::move(MA), std::move(F)};
}

// Mirror direction: f: A→B chain-map quasi-isomorphism with bijective object
// map, MA a structure on A; builds (MB, F).
inline PcyTransferResult transfer_pcy_to_target(const HomCollection& f, const MultiCollection& MA,
                                                int lmax, int nmax) {
    const DgQuiver& A = *f.source();
    const DgQuiver& B = *f.target();
    const std::uint64_t p = A.field();
    const int d = MA.d();
    TransferResult base = transfer_to_target(f, restrict_multi(MA), nmax);
    MultiCollection MB = embed_multi(base.structure, d, lmax);
    MultiCollection F = embed_multi(base.morphism, d, lmax);
    MultiCollection mshapeB = MultiCollection::structure(&B, d, lmax, nmax, 1);
    MultiCollection fshape(&A, &B, f.F0(), d, 0, lmax, nmax);
    MultiCollection si_shape = MultiCollection::structure(&B, d, lmax, nmax, 2);
    MultiCollection mi_shape(&A, &B, f.F0(), d, 1, lmax, nmax);
    for (int L = 2; L <= lmax; ++L)
        for (int N = L; N <= nmax; ++N) {
            MultiCollection o = restrict_stage(mc_defect(MB), L, N);
            MultiCollection C = restrict_stage(pcy_mi_defect(F, MA, MB), L, N);
            MultiCoordSpace V = MultiCoordSpace::stage(mshapeB, L, N);
            MultiCoordSpace W = MultiCoordSpace::stage(fshape, L, N);
            MultiCoordSpace SIrows = MultiCoordSpace::stage(si_shape, L, N);
            MultiCoordSpace MIrows = MultiCoordSpace::stage(mi_shape, L, N);
            MultiStackedSystem sys;
            sys.p = p;
            sys.eq_spaces = {&SIrows, &MIrows};
            sys.rhs = {detail::neg_vec(SIrows.vectorize(o, p)),
                       detail::neg_vec(MIrows.vectorize(C, p))};
            sys.groups.push_back({&V, [&, L, N](int k) {
                                      MultiCollection v = orbit_sum(V.unit(mshapeB, k));
                                      MultiCollection si = necklace_compose(MB, v);
                                      si.accumulate(necklace_compose(v, MB), Scalar::one(p));
                                      si = restrict_stage(si, L, N);
                                      MultiCollection mi =
                                          restrict_stage(pre_compose(v, F), L, N);
                                      return std::vector<std::vector<Scalar>>{
                                          SIrows.vectorize(si, p),
                                          detail::neg_vec(MIrows.vectorize(mi, p))};
                                  }});
            sys.groups.push_back({&W, [&, L, N](int k) {
                                      MultiCollection w = W.unit(fshape, k);
                                      MultiCollection mi = restrict_stage(
                                          collection_sub(upper_compose(w, MA, F),
                                                         lower_compose(MB, w, F)),
                                          L, N);
                                      return std::vector<std::vector<Scalar>>{
                                          std::vector<Scalar>(
                                              static_cast<std::size_t>(SIrows.size()),
                                              Scalar::zero(p)),
                                          MIrows.vectorize(mi, p)};
                                  }});
            auto sol = sys.solve_canonical();
            if (!sol)
                throw math_error(
                    "obstruction is not an invariant boundary (input may not be a "
                    "quasi-isomorphism)");
            for (int k = 0; k < V.size(); ++k)
                if (!(*sol)[0][static_cast<std::size_t>(k)].is_zero())
                    MB.accumulate(orbit_sum(V.unit(mshapeB, k)),
                                  (*sol)[0][static_cast<std::size_t>(k)]);
            W.devectorize((*sol)[1], F);
        }
    MB.prune();
    F.prune();
    return {std::move(MB), std::move(F)};
}

// Inverse of an isomorphism at the multi level.  The length-1 layer comes
// from the arity-level inversion; for each higher length the top components
// are solved from the vanishing of the composite with the source identity,
// all sizes of one length stacked (length-preserving terms are invertible,
// size-changing terms triangular).
inline MultiCollection invert_pcy(const MultiCollection& F, int lmax, int nmax) {
    const DgQuiver& A = *F.source();
    const DgQuiver& B = *F.target();
    const std::uint64_t p = A.field();
    HomCollection G1 = invert_morphism(restrict_multi(F), nmax);
    MultiCollection G = embed_multi(G1, F.d(), lmax);
    MultiCollection gshape(&B, &A, G.F0(), F.d(), 0, lmax, nmax);
    MultiCollection cshape = MultiCollection::structure(&A, F.d(), lmax, nmax, 0);
    for (int L = 2; L <= lmax; ++L) {
        MultiCollection D = restrict_length(compose_pcy(G, F), L);
        MultiCoordSpace rows = MultiCoordSpace::length(cshape, L);
        MultiCoordSpace cols = MultiCoordSpace::length(gshape, L);
        MultiStackedSystem sys;
        sys.p = p;
        sys.eq_spaces = {&rows};
        sys.rhs = {detail::neg_vec(rows.vectorize(D, p))};
        sys.groups.push_back({&cols, [&, L](int k) {
                                  MultiCollection u = cols.unit(gshape, k);
                                  MultiCollection lin =
                                      restrict_length(compose_pcy_designated(G, F, u), L);
                                  return std::vector<std::vector<Scalar>>{
                                      rows.vectorize(lin, p)};
                              }});
        auto sol = sys.solve_canonical();
        if (!sol) throw math_error("morphism is not invertible at the multi level");
        cols.devectorize((*sol)[0], G);
    }
    G.prune();
    return G;
}

struct PcyMinimalModel {
    std::shared_ptr<Contraction> con;
    MultiCollection MH;  // minimal structure on con->reduced
    MultiCollection P;   // morphism (A, MA) -> (H, MH)
};

inline PcyMinimalModel pcy_minimal_model(const DgQuiver& A, const MultiCollection& MA, int lmax,
                                         int nmax) {
    auto con = std::make_shared<Contraction>(cohomology_contraction(A));
    PcyTransferResult t =
        transfer_pcy_to_target(projection_morphism(*con, nmax), MA, lmax, nmax);
    return {std::move(con), std::move(t.structure), std::move(t.morphism)};
}

// Extends the chain-level projection of a contraction to a morphism
// P : (A, MA) → (H, MH) against the structure transferred through the
// inclusion I, normalized so that P ∘ I is the strict identity.  Both
// conditions are affine in the length-L part of P and are solved stacked
// across all sizes of one length.
inline MultiCollection extend_pcy_projection(const Contraction& con, const MultiCollection& MA,
                                             const MultiCollection& MH, const MultiCollection& I,
                                             int lmax, int nmax) {
    const DgQuiver& A = *con.total;
    const DgQuiver& H = con.reduced;
    const std::uint64_t p = A.field();
    const int d = MA.d();
    HomCollection P1 = extend_projection(con, restrict_multi(MA), restrict_multi(MH),
                                         restrict_multi(I), nmax);
    MultiCollection P = embed_multi(P1, d, lmax);
    MultiCollection idH = identity_pcy(H, d, lmax, nmax);
    MultiCollection pshape(&A, &H, P.F0(), d, 0, lmax, nmax);
    MultiCollection mi_shape(&A, &H, P.F0(), d, 1, lmax, nmax);
    MultiCollection pi_shape = MultiCollection::structure(&H, d, lmax, nmax, 0);
    for (int L = 2; L <= lmax; ++L) {
        MultiCollection Cmi = restrict_length(pcy_mi_defect(P, MA, MH), L);
        MultiCollection Cpi =
            restrict_length(collection_sub(compose_pcy(P, I), idH), L);
        MultiCoordSpace W = MultiCoordSpace::length(pshape, L);
        MultiCoordSpace MIrows = MultiCoordSpace::length(mi_shape, L);
        MultiCoordSpace PIrows = MultiCoordSpace::length(pi_shape, L);
        MultiStackedSystem sys;
        sys.p = p;
        sys.eq_spaces = {&MIrows, &PIrows};
        sys.rhs = {detail::neg_vec(MIrows.vectorize(Cmi, p)),
                   detail::neg_vec(PIrows.vectorize(Cpi, p))};
        sys.groups.push_back({&W, [&, L](int k) {
                                  MultiCollection w = W.unit(pshape, k);
                                  MultiCollection mi = restrict_length(
                                      collection_sub(upper_compose(w, MA, P),
                                                     lower_compose(MH, w, P)),
                                      L);
                                  MultiCollection pi =
                                      restrict_length(compose_pcy_designated(P, I, w), L);
                                  return std::vector<std::vector<Scalar>>{
                                      MIrows.vectorize(mi, p), PIrows.vectorize(pi, p)};
                              }});
        auto sol = sys.solve_canonical();
        if (!sol) throw math_error("projection cannot be normalized against the inclusion");
        W.devectorize((*sol)[0], P);
    }
    P.prune();
    return P;
}

// One transferred structure per quiver with a matched (I, P) pair, P ∘ I the
// strict identity; this makes the quasi-inverse composites below equal the
// identity exactly rather than up to homotopy.
struct PcyCohomologySetup {
    std::shared_ptr<Contraction> con;
    MultiCollection MH;  // structure on con->reduced
    MultiCollection I;   // (H, MH) -> (A, MA)
    MultiCollection P;   // (A, MA) -> (H, MH), P ∘ I = id
};

inline PcyCohomologySetup pcy_cohomology_setup(const DgQuiver& A, const MultiCollection& MA,
                                               int lmax, int nmax) {
    auto con = std::make_shared<Contraction>(cohomology_contraction(A));
    PcyTransferResult t = transfer_pcy_from_target(inclusion_morphism(*con, nmax), MA, lmax,
                                                   nmax, con.get());
    MultiCollection P = extend_pcy_projection(*con, MA, t.structure, t.morphism, lmax, nmax);
    return {std::move(con), std::move(t.structure), std::move(t.morphism), std::move(P)};
}

inline MultiCollection pcy_induced_on_cohomology(const MultiCollection& F,
                                                 const PcyCohomologySetup& SA,
                                                 const PcyCohomologySetup& SB) {
    return compose_pcy(SB.P, compose_pcy(F, SA.I));
}

struct PcyQuasiInverseResult {
    PcyCohomologySetup SA, SB;
    MultiCollection HF;  // induced morphism between the transferred structures
    MultiCollection K;   // its inverse
    MultiCollection G;   // quasi-inverse (B, MB) -> (A, MA)
};

inline PcyQuasiInverseResult pcy_quasi_inverse(const MultiCollection& F, const MultiCollection& MA,
                                               const MultiCollection& MB, int lmax, int nmax) {
    PcyCohomologySetup SA = pcy_cohomology_setup(*F.source(), MA, lmax, nmax);
    PcyCohomologySetup SB = pcy_cohomology_setup(*F.target(), MB, lmax, nmax);
    MultiCollection HF = pcy_induced_on_cohomology(F, SA, SB);
    MultiCollection K = invert_pcy(HF, lmax, nmax);
    MultiCollection G = compose_pcy(SA.I, compose_pcy(K, SB.P));
    return {std::move(SA), std::move(SB), std::move(HF), std::move(K), std::move(G)};
}

}  // namespace quivhom
