#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "quivhom/ainfty.hpp"
#include "quivhom/hom_collection.hpp"

namespace quivhom {

// A connected tree of discs with directed internal edges (producer output →
// consumer input slot).  Discs are listed in application order; every
// producer must precede its consumers.  External inputs are numbered in the
// composite boundary order; out_order lists the composite outputs in boundary
// order as (disc, output index) pairs.
struct Diagram {
    struct Disc {
        const MMap* comp = nullptr;
        int mu = 0;  // Koszul degree of the disc filling
    };
    struct Src {
        int disc = -1;  // -1: external input, idx is its boundary position
        int idx = 0;
        bool operator<(const Src& o) const {
            return disc != o.disc ? disc < o.disc : idx < o.idx;
        }
        bool operator==(const Src& o) const { return disc == o.disc && idx == o.idx; }
    };
    std::vector<Disc> discs;
    std::vector<std::vector<Src>> in_src;  // [disc][input slot]
    std::vector<Src> out_order;
    int n_ext_in = 0;
    int d = 0;
};

namespace detail {

struct DiagramChoice {
    std::vector<std::vector<int>> in, out;  // chosen basis entry per disc
    std::vector<int> ext;                   // external input values
    Scalar coeff;
};

// Sign of evaluating one chosen entry combination by word rewriting: external
// inputs start in boundary order; each disc gathers its inputs contiguously
// at its leftmost input (Koszul), applies in place with the operadic sign
// (−1)^{mu·(degree to the left)}, input-less discs append at the right end
// with the operadic sign over the whole word; a final Koszul reorder brings
// the outputs into boundary order.
inline int diagram_sign(const Diagram& dg, const DiagramChoice& ch) {
    struct Leg {
        Diagram::Src key;
        long deg;
    };
    std::vector<Leg> word;
    // Degree of external input e: shifted degree seen by its consuming slot.
    std::vector<long> ext_deg(static_cast<std::size_t>(dg.n_ext_in), 0);
    for (std::size_t t = 0; t < dg.discs.size(); ++t)
        for (std::size_t s = 0; s < dg.in_src[t].size(); ++s) {
            const auto& src = dg.in_src[t][s];
            if (src.disc == -1)
                ext_deg[static_cast<std::size_t>(src.idx)] =
                    dg.discs[t].comp->ins()[s].sdeg(ch.in[t][s]);
        }
    for (int e = 0; e < dg.n_ext_in; ++e) word.push_back({{-1, e}, ext_deg[static_cast<std::size_t>(e)]});

    long sign = 0;  // exponent mod 2
    for (std::size_t t = 0; t < dg.discs.size(); ++t) {
        const MMap& c = *dg.discs[t].comp;
        const std::size_t nin = c.ins().size();
        std::size_t anchor = word.size();
        if (nin > 0) {
            std::vector<std::size_t> pos(nin);
            for (std::size_t s = 0; s < nin; ++s) {
                auto it = std::find_if(word.begin(), word.end(), [&](const Leg& l) {
                    return l.key == dg.in_src[t][s];
                });
                if (it == word.end()) throw std::invalid_argument("diagram input not available");
                pos[s] = static_cast<std::size_t>(it - word.begin());
            }
            anchor = *std::min_element(pos.begin(), pos.end());
            // Permutation: block members to anchor+slot, others keep order.
            std::vector<int> sigma(word.size());
            std::vector<char> inblock(word.size(), 0);
            for (std::size_t s = 0; s < nin; ++s) inblock[pos[s]] = 1;
            std::vector<std::size_t> slot_of(word.size(), 0);
            for (std::size_t s = 0; s < nin; ++s) slot_of[pos[s]] = s;
            int rank = 0;
            for (std::size_t i = 0; i < word.size(); ++i) {
                if (inblock[i]) {
                    sigma[i] = static_cast<int>(anchor + slot_of[i]);
                } else {
                    sigma[i] = rank < static_cast<int>(anchor) ? rank
                                                               : rank + static_cast<int>(nin);
                    ++rank;
                }
            }
            std::vector<int> degs(word.size());
            for (std::size_t i = 0; i < word.size(); ++i)
                degs[i] = static_cast<int>(word[i].deg % 2 == 0 ? 0 : 1);
            if (koszul_sign(degs, sigma) < 0) sign += 1;
            std::vector<Leg> reordered(word.size());
            for (std::size_t i = 0; i < word.size(); ++i)
                reordered[static_cast<std::size_t>(sigma[i])] = word[i];
            word = std::move(reordered);
        }
        long left = 0;
        for (std::size_t i = 0; i < anchor; ++i) left += word[i].deg;
        sign += static_cast<long>(dg.discs[t].mu) * left;
        // Replace the block (or append) with the outputs.
        std::vector<Leg> outs;
        for (std::size_t o = 0; o < c.outs().size(); ++o)
            outs.push_back({{static_cast<int>(t), static_cast<int>(o)},
                            c.outs()[o].sdeg(ch.out[t][o])});
        word.erase(word.begin() + static_cast<long>(anchor),
                   word.begin() + static_cast<long>(anchor + nin));
        word.insert(word.begin() + static_cast<long>(std::min(anchor, word.size())), outs.begin(),
                    outs.end());
    }
    // Final reorder to the declared boundary order.
    if (word.size() != dg.out_order.size())
        throw std::invalid_argument("diagram outputs do not match boundary");
    std::vector<int> sigma(word.size()), degs(word.size());
    for (std::size_t i = 0; i < word.size(); ++i) {
        auto it = std::find(dg.out_order.begin(), dg.out_order.end(), word[i].key);
        if (it == dg.out_order.end()) throw std::invalid_argument("unconsumed output missing");
        sigma[i] = static_cast<int>(it - dg.out_order.begin());
        degs[i] = static_cast<int>(word[i].deg % 2 == 0 ? 0 : 1);
    }
    if (koszul_sign(degs, sigma) < 0) sign += 1;
    return sign % 2 == 0 ? 1 : -1;
}

}  // namespace detail

// Structural checks: producers precede consumers, every output is consumed
// internally or listed externally exactly once, external inputs are numbered
// 0..n_ext_in−1 without repetition.
inline void validate_diagram(const Diagram& dg) {
    if (dg.in_src.size() != dg.discs.size())
        throw std::invalid_argument("diagram wiring size mismatch");
    std::map<Diagram::Src, int> used;
    std::vector<char> ext(static_cast<std::size_t>(dg.n_ext_in), 0);
    for (std::size_t t = 0; t < dg.discs.size(); ++t) {
        if (dg.in_src[t].size() != dg.discs[t].comp->ins().size())
            throw std::invalid_argument("diagram slot count mismatch");
        for (const auto& s : dg.in_src[t]) {
            if (s.disc == -1) {
                if (s.idx < 0 || s.idx >= dg.n_ext_in || ext[static_cast<std::size_t>(s.idx)])
                    throw std::invalid_argument("bad external input wiring");
                ext[static_cast<std::size_t>(s.idx)] = 1;
            } else {
                if (s.disc < 0 || s.disc >= static_cast<int>(t))
                    throw std::invalid_argument("producer must precede consumer");
                if (s.idx < 0 ||
                    s.idx >= static_cast<int>(dg.discs[static_cast<std::size_t>(s.disc)].comp->outs().size()))
                    throw std::invalid_argument("bad internal wiring");
                if (used[s]++) throw std::invalid_argument("output consumed twice");
            }
        }
    }
    for (char e : ext)
        if (!e) throw std::invalid_argument("unused external input");
    std::map<Diagram::Src, int> listed;
    for (const auto& s : dg.out_order) {
        if (s.disc < 0 || s.disc >= static_cast<int>(dg.discs.size()))
            throw std::invalid_argument("bad output listing");
        if (used.count(s) || listed[s]++) throw std::invalid_argument("output listed twice");
    }
    std::size_t total_out = 0;
    for (const auto& disc : dg.discs) total_out += disc.comp->outs().size();
    if (dg.out_order.size() + used.size() != total_out)
        throw std::invalid_argument("output not consumed or listed");
}

// Number of internal edges.
inline int diagram_internal_edges(const Diagram& dg) {
    int e = 0;
    for (const auto& srcs : dg.in_src)
        for (const auto& s : srcs)
            if (s.disc != -1) ++e;
    return e;
}

// Evaluate the diagram into a fresh multilinear component.  The shape has one
// input factor per external input (the consuming slot's factor), one output
// factor per listed output (the producing slot's factor), and intrinsic
// Σ intrinsic(disc) − (#internal edges)·(d+1).
inline MMap evaluate_diagram(const Diagram& dg) {
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

    detail::DiagramChoice ch;
    ch.in.resize(dg.discs.size());
    ch.out.resize(dg.discs.size());
    ch.ext.assign(static_cast<std::size_t>(dg.n_ext_in), -1);
    ch.coeff = Scalar::one(p);

    // Choose one stored entry per disc, consistent along internal edges.
    auto rec = [&](auto&& self, std::size_t t) -> void {
        if (t == dg.discs.size()) {
            std::vector<int> eout;
            for (const auto& s : dg.out_order)
                eout.push_back(ch.out[static_cast<std::size_t>(s.disc)][static_cast<std::size_t>(s.idx)]);
            int sg = detail::diagram_sign(dg, ch);
            Scalar c = ch.coeff;
            if (sg < 0) c = -c;
            result.add(ch.ext, eout, c);
            return;
        }
        for (const auto& [in, row] : dg.discs[t].comp->entries()) {
            bool ok = true;
            for (std::size_t s = 0; s < in.size() && ok; ++s) {
                const auto& src = dg.in_src[t][s];
                if (src.disc != -1 &&
                    ch.out[static_cast<std::size_t>(src.disc)][static_cast<std::size_t>(src.idx)] != in[s])
                    ok = false;
            }
            if (!ok) continue;
            ch.in[t] = in;
            for (std::size_t s = 0; s < in.size(); ++s)
                if (dg.in_src[t][s].disc == -1)
                    ch.ext[static_cast<std::size_t>(dg.in_src[t][s].idx)] = in[s];
            Scalar saved = ch.coeff;
            for (const auto& [out, v] : row) {
                ch.out[t] = out;
                ch.coeff = saved * v;
                self(self, t + 1);
            }
            ch.coeff = saved;
        }
    };
    rec(rec, 0);
    return result;
}

}  // namespace quivhom
