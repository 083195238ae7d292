#pragma once

#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quivhom/multi_collection.hpp"
#include "quivhom/precy.hpp"

namespace quivhom {

// Error raised by bundle parsing; carries the 1-based line number and the
// field (keyword) at which the first violation was detected.
struct ParseError : std::runtime_error {
    int line;
    std::string field;
    ParseError(int ln, std::string fld, const std::string& msg)
        : std::runtime_error("line " + std::to_string(ln) + ", field '" + fld + "': " + msg),
          line(ln),
          field(std::move(fld)) {}
};

// A self-contained, canonically serializable set of artifacts: a coefficient
// field, named dg quivers, named collections living over those quivers, and
// free-form metadata.  Quivers are heap-owned so that collection internals can
// hold stable pointers into them.
struct Bundle {
    struct Collection {
        std::string kind;  // ainf-structure | ainf-morphism | pcy-structure | pcy-morphism
        std::string source, target;  // quiver names
        HomCollection hom;           // used for ainf-* kinds
        MultiCollection multi;       // used for pcy-* kinds
        bool is_multi() const { return kind.rfind("pcy", 0) == 0; }
    };

    std::uint64_t p = 0;
    std::map<std::string, std::shared_ptr<DgQuiver>> quivers;
    std::map<std::string, Collection> collections;
    std::map<std::string, std::string> meta;

    const DgQuiver* quiver(const std::string& name) const {
        auto it = quivers.find(name);
        if (it == quivers.end()) throw std::invalid_argument("unknown quiver: " + name);
        return it->second.get();
    }
};

namespace detail {

// A serialized token must survive whitespace tokenization and the group
// separators used in component types.
inline void check_token(const std::string& s, const char* what) {
    if (s.empty()) throw std::invalid_argument(std::string(what) + " must be nonempty");
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ';' || c == ',' || c == ':' ||
            c == '=')
            throw std::invalid_argument(std::string(what) + " contains a reserved character: " + s);
}

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

inline std::string field_descriptor(std::uint64_t p) {
    return p == 0 ? "Q" : "Fp:" + std::to_string(p);
}

inline std::uint64_t parse_field_descriptor(const std::string& s, int ln) {
    if (s == "Q") return 0;
    if (s.rfind("Fp:", 0) == 0) {
        try {
            std::uint64_t p = std::stoull(s.substr(3));
            Scalar::check_modulus(p);
            return p;
        } catch (const std::exception& e) {
            throw ParseError(ln, "field", e.what());
        }
    }
    throw ParseError(ln, "field", "expected Q or Fp:<p>, got " + s);
}

inline std::string group_type_str(const DgQuiver& Q, const MultiType& t) {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) s += ";";
        for (std::size_t j = 0; j < t[i].size(); ++j) {
            if (j) s += ",";
            s += Q.object_name(t[i][j]);
        }
    }
    return s;
}

inline MultiType parse_group_type(const DgQuiver& Q, const std::string& s, int ln) {
    MultiType t;
    t.emplace_back();
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) throw ParseError(ln, "comp", "empty object name in type " + s);
        try {
            t.back().push_back(Q.object_index(cur));
        } catch (const std::exception& e) {
            throw ParseError(ln, "comp", e.what());
        }
        cur.clear();
    };
    for (char c : s) {
        if (c == ',') {
            flush();
        } else if (c == ';') {
            flush();
            t.emplace_back();
        } else {
            cur += c;
        }
    }
    flush();
    return t;
}

// Ordering for serialized components: length, then lexicographic content.
template <typename K>
std::vector<K> sorted_keys_by_length(const std::map<K, MMap>& comps) {
    std::vector<K> keys;
    for (const auto& [k, m] : comps)
        if (!m.is_zero()) keys.push_back(k);
    std::stable_sort(keys.begin(), keys.end(), [](const K& a, const K& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return keys;
}

inline void serialize_terms(std::ostream& os, const MMap& m) {
    for (const auto& [in, row] : m.entries())
        for (const auto& [out, v] : row) {
            os << "term";
            for (std::size_t i = 0; i < in.size(); ++i)
                os << " " << m.ins()[i].sp->label(in[i]);
            os << " :";
            for (std::size_t i = 0; i < out.size(); ++i)
                os << " " << m.outs()[i].sp->label(out[i]);
            os << " = " << v.str() << "\n";
        }
}

}  // namespace detail

inline std::string serialize(const Bundle& b) {
    std::ostringstream os;
    os << "quivhom-bundle 1\n";
    os << "field " << detail::field_descriptor(b.p) << "\n";
    for (const auto& [k, v] : b.meta) {
        detail::check_token(k, "meta key");
        detail::check_token(v, "meta value");
        os << "meta " << k << " " << v << "\n";
    }
    for (const auto& [name, qp] : b.quivers) {
        const DgQuiver& Q = *qp;
        detail::check_token(name, "quiver name");
        os << "quiver " << name << "\n";
        for (int i = 0; i < Q.object_count(); ++i) {
            detail::check_token(Q.object_name(i), "object name");
            os << "object " << Q.object_name(i) << "\n";
        }
        for (int x = 0; x < Q.object_count(); ++x)
            for (int y = 0; y < Q.object_count(); ++y) {
                const GradedSpace& V = Q.hom(x, y);
                for (int i = 0; i < V.dim(); ++i) {
                    detail::check_token(V.label(i), "basis label");
                    os << "gen " << Q.object_name(x) << " " << Q.object_name(y) << " "
                       << V.label(i) << " " << V.degree(i) << "\n";
                }
            }
        for (int x = 0; x < Q.object_count(); ++x)
            for (int y = 0; y < Q.object_count(); ++y) {
                const GradedMap& d = Q.differential(x, y);
                const GradedSpace& V = Q.hom(x, y);
                for (const auto& [s, col] : d.entries()) {
                    os << "diff " << Q.object_name(x) << " " << Q.object_name(y) << " "
                       << V.label(s) << " :";
                    for (const auto& [t, c] : col) os << " " << V.label(t) << " " << c.str();
                    os << "\n";
                }
            }
        os << "end\n";
    }
    for (const auto& [name, c] : b.collections) {
        detail::check_token(name, "collection name");
        os << "collection " << name << "\n";
        os << "kind " << c.kind << "\n";
        os << "source " << c.source << "\n";
        os << "target " << c.target << "\n";
        const DgQuiver& S = *b.quiver(c.source);
        const DgQuiver& T = *b.quiver(c.target);
        const std::vector<int>& F0 = c.is_multi() ? c.multi.F0() : c.hom.F0();
        os << "f0";
        for (int x : F0) os << " " << T.object_name(x);
        os << "\n";
        if (c.is_multi()) {
            os << "d " << c.multi.d() << "\n";
            os << "lmax " << c.multi.lmax() << "\n";
            os << "nmax " << c.multi.nmax() << "\n";
            for (const auto& t : detail::sorted_keys_by_length(c.multi.components())) {
                os << "comp " << detail::group_type_str(S, t) << "\n";
                detail::serialize_terms(os, c.multi.at(t));
            }
        } else {
            os << "nmax " << c.hom.nmax() << "\n";
            for (const auto& t : detail::sorted_keys_by_length(c.hom.components())) {
                os << "comp";
                for (int x : t) os << " " << S.object_name(x);
                os << "\n";
                detail::serialize_terms(os, c.hom.at(t));
            }
        }
        os << "end\n";
    }
    return os.str();
}

namespace detail {

// Shared term-parsing for both collection flavors; `anchor` names the keyword
// reported on failure.
inline void parse_term(MMap& m, const std::vector<std::string>& toks, std::uint64_t p, int ln) {
    std::size_t i = 1;
    std::vector<int> in, out;
    try {
        for (std::size_t k = 0; k < m.ins().size(); ++k, ++i) {
            if (i >= toks.size()) throw std::invalid_argument("too few input labels");
            in.push_back(m.ins()[k].sp->index(toks[i]));
        }
        if (i >= toks.size() || toks[i] != ":") throw std::invalid_argument("expected ':'");
        ++i;
        for (std::size_t k = 0; k < m.outs().size(); ++k, ++i) {
            if (i >= toks.size()) throw std::invalid_argument("too few output labels");
            out.push_back(m.outs()[k].sp->index(toks[i]));
        }
        if (i >= toks.size() || toks[i] != "=") throw std::invalid_argument("expected '='");
        ++i;
        if (i + 1 != toks.size()) throw std::invalid_argument("expected a single coefficient");
        m.add(in, out, Scalar::parse(toks[i], p));
    } catch (const std::exception& e) {
        throw ParseError(ln, "term", e.what());
    }
}

}  // namespace detail

inline Bundle parse(const std::string& text) {
    Bundle b;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    bool saw_header = false, saw_field = false;

    DgQuiver* cur_q = nullptr;                  // inside a quiver block
    Bundle::Collection* cur_c = nullptr;        // inside a collection block
    std::string cur_c_name;
    int cur_c_line = 0;
    bool c_finalized = false;                   // collection shape constructed
    MMap* cur_m = nullptr;                      // current component
    MultiType cur_t;
    std::vector<int> cur_tuple;
    // collection fields gathered before finalization
    std::vector<int> f0;
    int cd = 0, clmax = 0, cnmax = 0;
    bool saw_f0 = false, saw_nmax = false, saw_lmax = false, saw_d = false;

    auto need = [&](bool cond, const std::string& fld, const std::string& msg) {
        if (!cond) throw ParseError(ln, fld, msg);
    };
    auto finalize_collection_shape = [&]() {
        if (c_finalized) return;
        need(!cur_c->kind.empty(), "kind", "collection kind missing");
        need(!cur_c->source.empty() && !cur_c->target.empty(), "source", "source/target missing");
        need(saw_f0, "f0", "object map missing");
        need(saw_nmax, "nmax", "size truncation missing");
        const DgQuiver* S = nullptr;
        const DgQuiver* T = nullptr;
        try {
            S = b.quiver(cur_c->source);
            T = b.quiver(cur_c->target);
        } catch (const std::exception& e) {
            throw ParseError(ln, "source", e.what());
        }
        need(static_cast<int>(f0.size()) == S->object_count(), "f0",
             "object map size does not match the source quiver");
        int intr = (cur_c->kind == "ainf-structure" || cur_c->kind == "pcy-structure") ? 1 : 0;
        if (cur_c->is_multi()) {
            need(saw_lmax && saw_d, "lmax", "pre-CY collections need d and lmax");
            cur_c->multi = MultiCollection(S, T, f0, cd, intr, clmax, cnmax);
        } else {
            need(!saw_lmax && !saw_d, "lmax", "lmax/d apply only to pre-CY collections");
            cur_c->hom = HomCollection(S, T, f0, intr, cnmax);
        }
        c_finalized = true;
    };
    auto close_collection = [&]() {
        finalize_collection_shape();
        if (cur_m) {
            if (cur_c->is_multi())
                cur_c->multi.set(cur_t, std::move(*cur_m));
            else
                cur_c->hom.set(cur_tuple, std::move(*cur_m));
        }
        if (cur_c->kind == "pcy-structure" && !is_cyclically_invariant(cur_c->multi))
            throw ParseError(cur_c_line, "collection",
                            "pre-CY structure '" + cur_c_name + "' is not cyclically invariant");
        cur_c->multi.prune();
        cur_c->hom.prune();
        cur_c = nullptr;
        cur_m = nullptr;
    };

    std::vector<std::unique_ptr<MMap>> storage;

    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto toks = detail::tokenize(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        const std::string& kw = toks[0];

        if (!saw_header) {
            need(kw == "quivhom-bundle" && toks.size() == 2 && toks[1] == "1", "quivhom-bundle",
                 "expected header 'quivhom-bundle 1'");
            saw_header = true;
            continue;
        }
        if (kw == "field") {
            need(!saw_field, "field", "duplicate field descriptor");
            need(toks.size() == 2, "field", "expected one descriptor");
            b.p = detail::parse_field_descriptor(toks[1], ln);
            saw_field = true;
            continue;
        }
        need(saw_field, kw, "field descriptor must precede content");
        if (kw == "meta") {
            need(!cur_q && !cur_c, "meta", "meta lines belong at top level");
            need(toks.size() == 3, "meta", "expected key and value");
            need(!b.meta.count(toks[1]), "meta", "duplicate meta key " + toks[1]);
            b.meta[toks[1]] = toks[2];
        } else if (kw == "quiver") {
            need(!cur_q && !cur_c, "quiver", "nested block");
            need(toks.size() == 2, "quiver", "expected a name");
            need(!b.quivers.count(toks[1]), "quiver", "duplicate quiver " + toks[1]);
            auto q = std::make_shared<DgQuiver>(b.p);
            cur_q = q.get();
            b.quivers.emplace(toks[1], std::move(q));
        } else if (kw == "object") {
            need(cur_q != nullptr, "object", "outside a quiver block");
            need(toks.size() == 2, "object", "expected a name");
            try {
                cur_q->add_object(toks[1]);
            } catch (const std::exception& e) {
                throw ParseError(ln, "object", e.what());
            }
        } else if (kw == "gen") {
            need(cur_q != nullptr, "gen", "outside a quiver block");
            need(toks.size() == 5, "gen", "expected: gen <src> <tgt> <label> <degree>");
            try {
                int x = cur_q->object_index(toks[1]), y = cur_q->object_index(toks[2]);
                cur_q->hom(x, y).add(toks[3], std::stoi(toks[4]));
            } catch (const std::exception& e) {
                throw ParseError(ln, "gen", e.what());
            }
        } else if (kw == "diff") {
            need(cur_q != nullptr, "diff", "outside a quiver block");
            need(toks.size() >= 5 && toks[4] == ":" && toks.size() % 2 == 1, "diff",
                 "expected: diff <src> <tgt> <label> : (<label> <coeff>)...");
            try {
                int x = cur_q->object_index(toks[1]), y = cur_q->object_index(toks[2]);
                const GradedSpace& V = cur_q->hom(x, y);
                GradedMap d = cur_q->differential(x, y);
                int s = V.index(toks[3]);
                for (std::size_t i = 5; i + 1 < toks.size(); i += 2)
                    d.add(s, V.index(toks[i]), Scalar::parse(toks[i + 1], b.p));
                cur_q->set_differential(x, y, std::move(d));
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(ln, "diff", e.what());
            }
        } else if (kw == "collection") {
            need(!cur_q && !cur_c, "collection", "nested block");
            need(toks.size() == 2, "collection", "expected a name");
            need(!b.collections.count(toks[1]), "collection", "duplicate collection " + toks[1]);
            cur_c = &b.collections[toks[1]];
            cur_c_name = toks[1];
            cur_c_line = ln;
            c_finalized = false;
            cur_m = nullptr;
            f0.clear();
            saw_f0 = saw_nmax = saw_lmax = saw_d = false;
            cd = clmax = cnmax = 0;
        } else if (kw == "kind") {
            need(cur_c && !c_finalized, "kind", "misplaced");
            need(toks.size() == 2, "kind", "expected one value");
            need(toks[1] == "ainf-structure" || toks[1] == "ainf-morphism" ||
                     toks[1] == "pcy-structure" || toks[1] == "pcy-morphism",
                 "kind", "unknown kind " + toks[1]);
            cur_c->kind = toks[1];
        } else if (kw == "source" || kw == "target") {
            need(cur_c && !c_finalized, kw, "misplaced");
            need(toks.size() == 2, kw, "expected a quiver name");
            (kw == "source" ? cur_c->source : cur_c->target) = toks[1];
        } else if (kw == "f0") {
            need(cur_c && !c_finalized && !cur_c->target.empty(), "f0",
                 "object map must follow source/target");
            try {
                const DgQuiver* T = b.quiver(cur_c->target);
                for (std::size_t i = 1; i < toks.size(); ++i)
                    f0.push_back(T->object_index(toks[i]));
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(ln, "f0", e.what());
            }
            saw_f0 = true;
        } else if (kw == "d" || kw == "lmax" || kw == "nmax") {
            need(cur_c && !c_finalized, kw, "misplaced");
            need(toks.size() == 2, kw, "expected one integer");
            int v = 0;
            try {
                v = std::stoi(toks[1]);
            } catch (const std::exception&) {
                throw ParseError(ln, kw, "bad integer " + toks[1]);
            }
            if (kw == "d") cd = v, saw_d = true;
            if (kw == "lmax") clmax = v, saw_lmax = true;
            if (kw == "nmax") cnmax = v, saw_nmax = true;
        } else if (kw == "comp") {
            need(cur_c != nullptr, "comp", "outside a collection block");
            finalize_collection_shape();
            if (cur_m) {
                if (cur_c->is_multi())
                    cur_c->multi.set(cur_t, std::move(*cur_m));
                else
                    cur_c->hom.set(cur_tuple, std::move(*cur_m));
            }
            try {
                if (cur_c->is_multi()) {
                    need(toks.size() == 2, "comp", "expected one group type");
                    cur_t = detail::parse_group_type(*b.quiver(cur_c->source), toks[1], ln);
                    need(type_length(cur_t) <= cur_c->multi.lmax() &&
                             type_size(cur_t) <= cur_c->multi.nmax(),
                         "comp", "component exceeds the declared truncation");
                    storage.push_back(std::make_unique<MMap>(cur_c->multi.make_component(cur_t)));
                } else {
                    const DgQuiver* S = b.quiver(cur_c->source);
                    cur_tuple.clear();
                    for (std::size_t i = 1; i < toks.size(); ++i)
                        cur_tuple.push_back(S->object_index(toks[i]));
                    need(static_cast<int>(cur_tuple.size()) <= cur_c->hom.nmax(), "comp",
                         "component exceeds the declared truncation");
                    storage.push_back(std::make_unique<MMap>(cur_c->hom.make_component(cur_tuple)));
                }
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(ln, "comp", e.what());
            }
            cur_m = storage.back().get();
        } else if (kw == "term") {
            need(cur_m != nullptr, "term", "term outside a component");
            detail::parse_term(*cur_m, toks, b.p, ln);
        } else if (kw == "end") {
            need(cur_q || cur_c, "end", "no open block");
            if (cur_q) {
                cur_q = nullptr;
            } else {
                close_collection();
            }
        } else {
            throw ParseError(ln, kw, "unknown keyword");
        }
    }
    need(saw_header, "quivhom-bundle", "empty document");
    need(saw_field, "field", "missing field descriptor");
    need(!cur_q && !cur_c, "end", "unterminated block");
    return b;
}

}  // namespace quivhom
