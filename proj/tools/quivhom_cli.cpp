// Command-line surface: verification, composition, inversion, transfer,
// minimal models, quasi-inverses, generators, and identity suites, all over
// the canonical text bundle format.
//
// Exit codes: 0 success, 1 mathematical failure (nonzero defect, unsolvable
// obstruction, non-invertible input), 2 input/usage error.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "quivhom/bundle.hpp"
#include "quivhom/testkit.hpp"

using json = nlohmann::ordered_json;
using namespace quivhom;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_field_flag(const std::string& s) {
    if (s == "Q") return 0;
    if (s.rfind("Fp:", 0) == 0) {
        std::uint64_t p = std::stoull(s.substr(3));
        Scalar::check_modulus(p);
        return p;
    }
    throw UsageError("--field expects Q or Fp:<p>");
}

Bundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void write_bundle(const Bundle& b, const std::string& out) {
    if (out.empty()) return;
    std::ofstream os(out);
    if (!os) throw UsageError("cannot open output file: " + out);
    os << serialize(b);
}

// Resolve a collection by name, or by kind predicate when the name is empty
// (must then be unique among matches).
const Bundle::Collection& resolve(const Bundle& b, const std::string& name,
                                  const std::string& what,
                                  bool (*pred)(const Bundle::Collection&)) {
    if (!name.empty()) {
        auto it = b.collections.find(name);
        if (it == b.collections.end()) throw UsageError("no collection named " + name);
        if (!pred(it->second)) throw UsageError("collection " + name + " is not a " + what);
        return it->second;
    }
    const Bundle::Collection* found = nullptr;
    for (const auto& [n, c] : b.collections)
        if (pred(c)) {
            if (found) throw UsageError("ambiguous " + what + "; pass its name explicitly");
            found = &c;
        }
    if (!found) throw UsageError("bundle contains no " + what);
    return *found;
}

bool is_ainf_structure(const Bundle::Collection& c) { return c.kind == "ainf-structure"; }
bool is_ainf_morphism(const Bundle::Collection& c) { return c.kind == "ainf-morphism"; }
bool is_pcy_structure(const Bundle::Collection& c) { return c.kind == "pcy-structure"; }
bool is_pcy_morphism(const Bundle::Collection& c) { return c.kind == "pcy-morphism"; }

// Structure attached to a given quiver, by name or uniqueness.
const Bundle::Collection& resolve_structure_on(const Bundle& b, const std::string& name,
                                               const std::string& quiver, bool pcy) {
    if (!name.empty()) {
        const auto& c = resolve(b, name, pcy ? "pcy-structure" : "ainf-structure",
                                pcy ? is_pcy_structure : is_ainf_structure);
        if (c.source != quiver)
            throw UsageError("structure " + name + " does not live on quiver " + quiver);
        return c;
    }
    const Bundle::Collection* found = nullptr;
    for (const auto& [n, c] : b.collections) {
        bool kind_ok = pcy ? is_pcy_structure(c) : is_ainf_structure(c);
        if (kind_ok && c.source == quiver) {
            if (found)
                throw UsageError("ambiguous structure on quiver " + quiver +
                                 "; pass its name explicitly");
            found = &c;
        }
    }
    if (!found) throw UsageError("no structure on quiver " + quiver);
    return *found;
}

json report_json(const IdentityReport& rep) {
    json j;
    j["ok"] = rep.ok;
    j["failures"] = rep.failures;
    return j;
}

void add_quiver_copy(Bundle& b, const std::string& name, const DgQuiver& Q) {
    // Rebuild rather than copy so internal pointers are self-contained.
    auto R = std::make_shared<DgQuiver>(Q.field());
    for (int i = 0; i < Q.object_count(); ++i) R->add_object(Q.object_name(i));
    for (int x = 0; x < Q.object_count(); ++x)
        for (int y = 0; y < Q.object_count(); ++y) {
            const GradedSpace& V = Q.hom(x, y);
            GradedSpace& W = R->hom(x, y);
            for (int i = 0; i < V.dim(); ++i) W.add(V.label(i), V.degree(i));
            const GradedMap& d = Q.differential(x, y);
            if (d.is_zero()) continue;
            GradedMap dn(&W, &W, 1, Q.field());
            for (const auto& [s, col] : d.entries())
                for (const auto& [t, c] : col) dn.add(s, t, c);
            R->set_differential(x, y, std::move(dn));
        }
    b.quivers[name] = std::move(R);
}

std::string fresh_quiver_name(const Bundle& b, std::string base) {
    while (b.quivers.count(base)) base += "'";
    return base;
}
std::string fresh_collection_name(const Bundle& b, std::string base) {
    while (b.collections.count(base)) base += "'";
    return base;
}

int run(int argc, char** argv) {
    CLI::App app{"quivhom: exact verification and transfer of homotopy structures on dg quivers"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string field_flag = "Q";
    std::uint64_t seed = 1;
    int max_size = 4, max_length = 3;
    std::string out_path;
    app.add_option("--field", field_flag, "coefficient field, Q or Fp:<p>");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--max-size", max_size, "size truncation (total boundary size)");
    app.add_option("--max-length", max_length, "length truncation (output count)");
    app.add_option("--out", out_path, "write the resulting bundle to this path");

    std::string input, name, ma_name, mb_name, f_name, g_name, quiver_name, direction, kind;
    bool pcy = false;
    int count = 1, d_shift = 1, objects = 2;

    auto* c_ainf = app.add_subcommand("check-ainf", "verify structure identities (single-output)");
    c_ainf->add_option("bundle", input)->required();
    c_ainf->add_option("--name", name, "structure collection to check");

    auto* c_pcy = app.add_subcommand("check-pcy", "verify Maurer-Cartan + cyclic invariance");
    c_pcy->add_option("bundle", input)->required();
    c_pcy->add_option("--name", name, "structure collection to check");

    auto* c_mor = app.add_subcommand("check-morphism", "verify the morphism identity");
    c_mor->add_option("bundle", input)->required();
    c_mor->add_option("--name", name, "morphism collection to check");
    c_mor->add_option("--ma", ma_name, "structure on the morphism source");
    c_mor->add_option("--mb", mb_name, "structure on the morphism target");

    auto* c_cmp = app.add_subcommand("compose", "compose two morphisms (g after f)");
    c_cmp->add_option("bundle", input)->required();
    c_cmp->add_option("--g", g_name)->required();
    c_cmp->add_option("--f", f_name)->required();
    c_cmp->add_option("--name", name, "name of the composite collection");

    auto* c_inv = app.add_subcommand("invert", "invert an isomorphism");
    c_inv->add_option("bundle", input)->required();
    c_inv->add_option("--name", name, "morphism collection to invert");
    c_inv->add_flag("--pcy", pcy, "invert at the multi level");

    auto* c_tr = app.add_subcommand("transfer", "transfer a structure along a chain map");
    c_tr->add_option("bundle", input)->required();
    c_tr->add_option("--direction", direction, "to-source | to-target")->required();
    c_tr->add_option("--f", f_name, "chain map collection (single-output morphism)");
    c_tr->add_option("--structure", name, "structure collection to transfer");
    c_tr->add_flag("--pcy", pcy, "transfer at the multi level");

    auto* c_mm = app.add_subcommand("minimal-model", "minimal model on cohomology");
    c_mm->add_option("bundle", input)->required();
    c_mm->add_option("--name", name, "structure collection");
    c_mm->add_flag("--pcy", pcy, "work at the multi level");

    auto* c_qi = app.add_subcommand("quasi-inverse", "quasi-inverse of a quasi-isomorphism");
    c_qi->add_option("bundle", input)->required();
    c_qi->add_option("--f", f_name, "morphism collection");
    c_qi->add_option("--ma", ma_name, "structure on the source");
    c_qi->add_option("--mb", mb_name, "structure on the target");
    c_qi->add_flag("--pcy", pcy, "work at the multi level");

    auto* c_coh = app.add_subcommand("cohomology", "contraction onto cohomology");
    c_coh->add_option("bundle", input)->required();
    c_coh->add_option("--quiver", quiver_name, "quiver to contract");

    auto* c_gen = app.add_subcommand("gen", "generate random verified artifacts");
    c_gen->add_option("--kind", kind, "quiver | ainf | pcy (default pcy)");
    c_gen->add_option("--objects", objects, "object count");
    c_gen->add_option("--d", d_shift, "duality shift");

    auto* c_suite = app.add_subcommand("suite", "run the randomized identity suites");
    c_suite->add_option("--count", count, "number of seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    json out;
    bool math_ok = true;

    if (c_ainf->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "check-ainf";
        json checks = json::array();
        bool any = false;
        for (const auto& [n, c] : b.collections) {
            if (!is_ainf_structure(c) || (!name.empty() && n != name)) continue;
            any = true;
            IdentityReport rep = is_ainf(c.hom, c.hom.nmax());
            json j = report_json(rep);
            j["name"] = n;
            checks.push_back(j);
            math_ok = math_ok && rep.ok;
        }
        if (!any) {
            if (!name.empty()) throw UsageError("no structure collection named " + name);
            // Differential-only check on every quiver.
            for (const auto& [qn, q] : b.quivers) {
                IdentityReport rep = is_ainf(dg_structure(*q, max_size), max_size);
                json j = report_json(rep);
                j["name"] = "dg:" + qn;
                checks.push_back(j);
                math_ok = math_ok && rep.ok;
            }
        }
        out["checks"] = checks;
    } else if (c_pcy->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "check-pcy";
        json checks = json::array();
        bool any = false;
        for (const auto& [n, c] : b.collections) {
            if (!is_pcy_structure(c) || (!name.empty() && n != name)) continue;
            any = true;
            IdentityReport rep = is_pcy(c.multi);
            json j = report_json(rep);
            j["name"] = n;
            checks.push_back(j);
            math_ok = math_ok && rep.ok;
        }
        if (!any) throw UsageError("bundle contains no pcy-structure collection");
        out["checks"] = checks;
    } else if (c_mor->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "check-morphism";
        const auto& F = resolve(b, name, "morphism", [](const Bundle::Collection& c) {
            return is_ainf_morphism(c) || is_pcy_morphism(c);
        });
        IdentityReport rep;
        if (F.is_multi()) {
            const auto& MA = resolve_structure_on(b, ma_name, F.source, true);
            const auto& MB = resolve_structure_on(b, mb_name, F.target, true);
            rep = is_pcy_morphism(F.multi, MA.multi, MB.multi);
        } else {
            const auto& mA = resolve_structure_on(b, ma_name, F.source, false);
            const auto& mB = resolve_structure_on(b, mb_name, F.target, false);
            rep = report_zero(mi_defect(F.hom, mA.hom, mB.hom, F.hom.nmax()));
        }
        out["check"] = report_json(rep);
        math_ok = rep.ok;
    } else if (c_cmp->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "compose";
        const auto& G = resolve(b, g_name, "morphism", [](const Bundle::Collection& c) {
            return is_ainf_morphism(c) || is_pcy_morphism(c);
        });
        const auto& F = resolve(b, f_name, "morphism", [](const Bundle::Collection& c) {
            return is_ainf_morphism(c) || is_pcy_morphism(c);
        });
        if (G.is_multi() != F.is_multi()) throw UsageError("cannot mix morphism kinds");
        if (F.target != G.source) throw UsageError("composition source/target mismatch");
        Bundle::Collection R;
        R.kind = G.kind;
        R.source = F.source;
        R.target = G.target;
        if (G.is_multi())
            R.multi = compose_pcy(G.multi, F.multi);
        else
            R.hom = compose_morphisms(G.hom, F.hom, std::min(G.hom.nmax(), F.hom.nmax()));
        std::string rn = name.empty() ? fresh_collection_name(b, "composite") : name;
        out["result"] = rn;
        b.collections[rn] = std::move(R);
        write_bundle(b, out_path);
    } else if (c_inv->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "invert";
        const auto& F = resolve(b, name, pcy ? "pcy-morphism" : "ainf-morphism",
                                [](const Bundle::Collection& c) {
                                    return is_ainf_morphism(c) || is_pcy_morphism(c);
                                });
        if (F.is_multi() != pcy) throw UsageError("morphism kind does not match --pcy");
        Bundle::Collection R;
        R.kind = F.kind;
        R.source = F.target;
        R.target = F.source;
        try {
            if (pcy)
                R.multi = invert_pcy(F.multi, F.multi.lmax(), F.multi.nmax());
            else
                R.hom = invert_morphism(F.hom, F.hom.nmax());
        } catch (const std::exception& e) {
            throw MathError(e.what());
        }
        std::string rn = fresh_collection_name(b, "inverse");
        out["result"] = rn;
        b.collections[rn] = std::move(R);
        write_bundle(b, out_path);
    } else if (c_tr->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "transfer";
        if (direction != "to-source" && direction != "to-target")
            throw UsageError("--direction must be to-source or to-target");
        const auto& f = resolve(b, f_name, "ainf-morphism", is_ainf_morphism);
        bool to_target = direction == "to-target";
        // to-target transfers a structure on f's source; to-source one on f's target.
        const std::string& sq = to_target ? f.source : f.target;
        const auto& S = resolve_structure_on(b, name, sq, pcy);
        Bundle::Collection RS, RM;
        RS.kind = pcy ? "pcy-structure" : "ainf-structure";
        RM.kind = pcy ? "pcy-morphism" : "ainf-morphism";
        RS.source = RS.target = to_target ? f.target : f.source;
        RM.source = f.source;
        RM.target = f.target;
        try {
            if (pcy) {
                PcyTransferResult r =
                    to_target
                        ? transfer_pcy_to_target(f.hom, S.multi, S.multi.lmax(), S.multi.nmax())
                        : transfer_pcy_from_target(f.hom, S.multi, S.multi.lmax(), S.multi.nmax());
                RS.multi = std::move(r.structure);
                RM.multi = std::move(r.morphism);
            } else {
                TransferResult r = to_target ? transfer_to_target(f.hom, S.hom, S.hom.nmax())
                                             : transfer_from_target(f.hom, S.hom, S.hom.nmax());
                RS.hom = std::move(r.structure);
                RM.hom = std::move(r.morphism);
            }
        } catch (const std::exception& e) {
            throw MathError(e.what());
        }
        std::string sn = fresh_collection_name(b, "transferred");
        std::string mn = fresh_collection_name(b, "extending");
        out["structure"] = sn;
        out["morphism"] = mn;
        b.collections[sn] = std::move(RS);
        b.collections[mn] = std::move(RM);
        write_bundle(b, out_path);
    } else if (c_mm->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "minimal-model";
        const auto& S = resolve(b, name, pcy ? "pcy-structure" : "ainf-structure",
                                [](const Bundle::Collection& c) {
                                    return is_ainf_structure(c) || is_pcy_structure(c);
                                });
        if (S.is_multi() != pcy) throw UsageError("structure kind does not match --pcy");
        const DgQuiver& A = *b.quiver(S.source);
        std::string hq = fresh_quiver_name(b, "H_" + S.source);
        Bundle::Collection RS, RP;
        RS.kind = S.kind;
        RP.kind = pcy ? "pcy-morphism" : "ainf-morphism";
        RS.source = RS.target = hq;
        RP.source = S.source;
        RP.target = hq;
        // keep the contraction (hence the reduced quiver) alive until serialization
        std::shared_ptr<Contraction> keep;
        try {
            if (pcy) {
                PcyMinimalModel r = pcy_minimal_model(A, S.multi, S.multi.lmax(), S.multi.nmax());
                keep = r.con;
                add_quiver_copy(b, hq, r.con->reduced);
                RS.multi = std::move(r.MH);
                RP.multi = std::move(r.P);
            } else {
                MinimalModel r = minimal_model(A, S.hom, S.hom.nmax());
                keep = r.con;
                add_quiver_copy(b, hq, r.con->reduced);
                RS.hom = std::move(r.mH);
                RP.hom = std::move(r.P);
            }
        } catch (const std::exception& e) {
            throw MathError(e.what());
        }
        std::string sn = fresh_collection_name(b, "minimal");
        std::string pn = fresh_collection_name(b, "projection");
        out["quiver"] = hq;
        out["structure"] = sn;
        out["morphism"] = pn;
        b.collections[sn] = std::move(RS);
        b.collections[pn] = std::move(RP);
        write_bundle(b, out_path);
    } else if (c_qi->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "quasi-inverse";
        const auto& F = resolve(b, f_name, pcy ? "pcy-morphism" : "ainf-morphism",
                                [](const Bundle::Collection& c) {
                                    return is_ainf_morphism(c) || is_pcy_morphism(c);
                                });
        if (F.is_multi() != pcy) throw UsageError("morphism kind does not match --pcy");
        const auto& MA = resolve_structure_on(b, ma_name, F.source, pcy);
        const auto& MB = resolve_structure_on(b, mb_name, F.target, pcy);
        Bundle::Collection R;
        R.kind = F.kind;
        R.source = F.target;
        R.target = F.source;
        std::shared_ptr<Contraction> k1, k2;
        try {
            if (pcy) {
                PcyQuasiInverseResult r =
                    pcy_quasi_inverse(F.multi, MA.multi, MB.multi, F.multi.lmax(), F.multi.nmax());
                k1 = r.SA.con;
                k2 = r.SB.con;
                R.multi = std::move(r.G);
            } else {
                QuasiInverseResult r = quasi_inverse(F.hom, MA.hom, MB.hom, F.hom.nmax());
                k1 = r.SA.con;
                k2 = r.SB.con;
                R.hom = std::move(r.G);
            }
        } catch (const std::exception& e) {
            throw MathError(e.what());
        }
        std::string rn = fresh_collection_name(b, "quasi_inverse");
        out["result"] = rn;
        b.collections[rn] = std::move(R);
        write_bundle(b, out_path);
    } else if (c_coh->parsed()) {
        Bundle b = load_bundle(input);
        out["command"] = "cohomology";
        if (quiver_name.empty()) {
            if (b.quivers.size() != 1) throw UsageError("pass --quiver to select a quiver");
            quiver_name = b.quivers.begin()->first;
        }
        const DgQuiver& A = *b.quiver(quiver_name);
        Contraction con = cohomology_contraction(A);
        if (!con.verify()) throw MathError("contraction identities failed");
        std::string hq = fresh_quiver_name(b, "H_" + quiver_name);
        add_quiver_copy(b, hq, con.reduced);
        Bundle::Collection I, P;
        I.kind = P.kind = "ainf-morphism";
        I.source = hq;
        I.target = quiver_name;
        P.source = quiver_name;
        P.target = hq;
        I.hom = inclusion_morphism(con, max_size);
        P.hom = projection_morphism(con, max_size);
        std::string in_name = fresh_collection_name(b, "inclusion");
        std::string pn = fresh_collection_name(b, "projection");
        out["quiver"] = hq;
        out["inclusion"] = in_name;
        out["projection"] = pn;
        b.collections[in_name] = std::move(I);
        b.collections[pn] = std::move(P);
        write_bundle(b, out_path);
    } else if (c_gen->parsed()) {
        out["command"] = "gen";
        if (kind.empty()) kind = "pcy";
        if (kind != "quiver" && kind != "ainf" && kind != "pcy")
            throw UsageError("--kind must be quiver, ainf, or pcy");
        testkit::SplitMix64 rng(seed);
        testkit::GenParams gp;
        gp.p = parse_field_flag(field_flag);
        gp.object_count = objects;
        Bundle b;
        b.p = gp.p;
        b.meta["seed"] = std::to_string(seed);
        auto A = std::make_shared<DgQuiver>(testkit::random_dg_quiver(rng, gp));
        b.quivers["A"] = A;
        if (kind != "quiver") {
            Bundle::Collection m;
            m.kind = "ainf-structure";
            m.source = m.target = "A";
            m.hom = dg_structure(*A, max_size);
            b.collections["mA"] = std::move(m);
        }
        std::shared_ptr<DgQuiver> Bq;  // keep the twisted quiver alive
        if (kind == "pcy") {
            Bundle::Collection MA;
            MA.kind = "pcy-structure";
            MA.source = MA.target = "A";
            MA.multi = testkit::random_pcy_structure(*A, d_shift, max_length, max_size, rng);
            testkit::TwistedQuiver tw = testkit::random_twisted_quiver(*A, max_size, rng);
            Bq = tw.B;
            b.quivers["B"] = Bq;
            PcyTransferResult tr =
                transfer_pcy_to_target(tw.f, MA.multi, max_length, max_size);
            Bundle::Collection MB, F, f;
            MB.kind = "pcy-structure";
            MB.source = MB.target = "B";
            MB.multi = std::move(tr.structure);
            F.kind = "pcy-morphism";
            F.source = "A";
            F.target = "B";
            F.multi = std::move(tr.morphism);
            f.kind = "ainf-morphism";
            f.source = "A";
            f.target = "B";
            f.hom = std::move(tw.f);
            b.collections["MA"] = std::move(MA);
            b.collections["MB"] = std::move(MB);
            b.collections["F"] = std::move(F);
            b.collections["f"] = std::move(f);
        } else if (kind == "ainf") {
            testkit::TwistedQuiver tw = testkit::random_twisted_quiver(*A, max_size, rng);
            Bq = tw.B;
            b.quivers["B"] = Bq;
            Bundle::Collection mB, f;
            mB.kind = "ainf-structure";
            mB.source = mB.target = "B";
            mB.hom = dg_structure(*Bq, max_size);
            f.kind = "ainf-morphism";
            f.source = "A";
            f.target = "B";
            f.hom = std::move(tw.f);
            b.collections["mB"] = std::move(mB);
            b.collections["f"] = std::move(f);
        }
        out["quivers"] = json::array();
        for (const auto& [n, q] : b.quivers) out["quivers"].push_back(n);
        out["collections"] = json::array();
        for (const auto& [n, c] : b.collections) out["collections"].push_back(n);
        write_bundle(b, out_path);
    } else if (c_suite->parsed()) {
        out["command"] = "suite";
        std::uint64_t p = parse_field_flag(field_flag);
        testkit::SuiteReport rep =
            testkit::run_identity_suite(count, max_size + 1, 1, max_length, max_size, p);
        out["seeds"] = count;
        out["ok"] = rep.ok;
        out["failures"] = rep.failures;
        math_ok = rep.ok;
    }

    out["ok"] = math_ok;
    std::cout << out.dump(2) << std::endl;
    return math_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const MathError& e) {
        json j;
        j["ok"] = false;
        j["error"] = e.what();
        std::cout << j.dump(2) << std::endl;
        return 1;
    } catch (const ParseError& e) {
        json j;
        j["ok"] = false;
        j["error"] = e.what();
        j["line"] = e.line;
        j["field"] = e.field;
        std::cout << j.dump(2) << std::endl;
        return 2;
    } catch (const std::exception& e) {
        json j;
        j["ok"] = false;
        j["error"] = e.what();
        std::cout << j.dump(2) << std::endl;
        return 2;
    }
}
