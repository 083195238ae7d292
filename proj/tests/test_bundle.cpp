#include <catch2/catch_amalgamated.hpp>

#include "quivhom/bundle.hpp"
#include "quivhom/testkit.hpp"

using namespace quivhom;
using testkit::GenParams;
using testkit::SplitMix64;

namespace {

Bundle random_bundle(std::uint64_t seed, std::uint64_t p) {
    SplitMix64 rng(seed);
    GenParams gp;
    gp.p = p;
    Bundle b;
    b.p = p;
    b.meta["seed"] = std::to_string(seed);
    auto A = std::make_shared<DgQuiver>(testkit::random_dg_quiver(rng, gp));
    b.quivers["A"] = A;
    Bundle::Collection m;
    m.kind = "ainf-structure";
    m.source = m.target = "A";
    m.hom = testkit::random_ainf_shaped(*A, 1, 4, rng, gp);
    b.collections["m"] = std::move(m);
    Bundle::Collection M;
    M.kind = "pcy-structure";
    M.source = M.target = "A";
    M.multi = testkit::random_pcy_structure(*A, 1, 3, 4, rng);
    b.collections["M"] = std::move(M);
    Bundle::Collection F;
    F.kind = "pcy-morphism";
    F.source = F.target = "A";
    std::vector<int> id(static_cast<std::size_t>(A->object_count()));
    for (int i = 0; i < A->object_count(); ++i) id[static_cast<std::size_t>(i)] = i;
    F.multi = testkit::random_multi_collection(A.get(), A.get(), id, 1, 0, 3, 4, rng, gp, true);
    b.collections["F"] = std::move(F);
    return b;
}

}  // namespace

TEST_CASE("empty bundle round trip") {
    Bundle b;
    std::string t = serialize(b);
    CHECK(serialize(parse(t)) == t);
}

TEST_CASE("quiver-only bundle round trip") {
    SplitMix64 rng(2);
    GenParams gp;
    Bundle b;
    b.quivers["Q"] = std::make_shared<DgQuiver>(testkit::random_dg_quiver(rng, gp));
    std::string t = serialize(b);
    Bundle b2 = parse(t);
    CHECK(serialize(b2) == t);
    CHECK(b2.quivers.at("Q")->object_count() == gp.object_count);
}

TEST_CASE("full bundle double round trip is byte-identical") {
    for (std::uint64_t seed : {std::uint64_t(28), std::uint64_t(5), std::uint64_t(6)}) {
        Bundle b = random_bundle(seed, seed % 2 ? 0 : 5);
        std::string t1 = serialize(b);
        std::string t2 = serialize(parse(t1));
        std::string t3 = serialize(parse(t2));
        CHECK(t1 == t2);
        CHECK(t2 == t3);
    }
}

TEST_CASE("parsed collections preserve content") {
    Bundle b = random_bundle(28, 0);
    Bundle b2 = parse(serialize(b));
    const auto& M = b2.collections.at("M");
    CHECK(M.kind == "pcy-structure");
    CHECK(is_pcy(M.multi).ok);
    CHECK(M.multi.lmax() == 3);
    CHECK(M.multi.nmax() == 4);
    const auto& m = b2.collections.at("m");
    CHECK(m.hom.nmax() == 4);
    // component data survives: same number of nonzero components
    auto count = [](const auto& comps) {
        int n = 0;
        for (const auto& [k, c] : comps)
            if (!c.is_zero()) ++n;
        return n;
    };
    CHECK(count(m.hom.components()) == count(b.collections.at("m").hom.components()));
    CHECK(count(M.multi.components()) == count(b.collections.at("M").multi.components()));
}

TEST_CASE("parse reports the line and field of the first violation") {
    std::string good =
        "quivhom-bundle 1\nfield Q\nquiver A\nobject x\ngen x x a 0\ngen x x b 1\nend\n";
    // unknown keyword
    try {
        parse(good + "what\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 8);
        CHECK(e.field == "what");
    }
    // bad header
    try {
        parse("quivhom-bundle 2\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
    }
    // duplicate basis label
    try {
        parse("quivhom-bundle 1\nfield Q\nquiver A\nobject x\ngen x x a 0\ngen x x a 1\nend\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 6);
        CHECK(e.field == "gen");
    }
    // degree-inhomogeneous term
    try {
        parse(good +
              "collection m\nkind ainf-structure\nsource A\ntarget A\nf0 x\nnmax 3\n"
              "comp x x\nterm b : b = 1\nend\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 15);
        CHECK(e.field == "term");
    }
    // bad coefficient literal
    try {
        parse(good +
              "collection m\nkind ainf-structure\nsource A\ntarget A\nf0 x\nnmax 3\n"
              "comp x x\nterm a : b = 1.5\nend\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 15);
        CHECK(e.field == "term");
    }
    // unknown field descriptor
    CHECK_THROWS_AS(parse("quivhom-bundle 1\nfield R\n"), ParseError);
    // modulus 3 rejected
    CHECK_THROWS_AS(parse("quivhom-bundle 1\nfield Fp:3\n"), ParseError);
}

TEST_CASE("parse rejects non-invariant multi structures") {
    std::string doc =
        "quivhom-bundle 1\nfield Q\nquiver A\nobject x\n"
        "gen x x a -1\ngen x x b 0\ngen x x c -1\nend\n"
        "collection M\nkind pcy-structure\nsource A\ntarget A\nf0 x\nd 1\nlmax 2\nnmax 3\n"
        "comp x,x;x\nterm a : b c = 1\nend\n";
    try {
        parse(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.field == "collection");
    }
    // the same data as a morphism parses (no invariance requirement), though
    // here the degrees only fit the structure shape, so use the checker path
    Bundle b;
    SUCCEED();
}

TEST_CASE("canonical serialization: serialize-parse-serialize is stable") {
    Bundle b = random_bundle(31, 0);
    std::string t = serialize(b);
    CHECK(serialize(parse(serialize(parse(t)))) == t);
}
